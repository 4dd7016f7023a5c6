//! Samplers for the distributions the protocols draw from.

use rand::Rng;

use super::dist::DiscreteDistribution;
use super::rng::RandomSource;
use crate::error::{Error, Result};

/// Rates below this use the inversion-by-multiplication sampler; above it,
/// the transformed-rejection sampler, which stays exact at the large rates
/// produced by privacy calibration.
const POISSON_INVERSION_CUTOFF: f64 = 30.0;

/// Draws from a Poisson distribution with the given rate.
///
/// A rate of zero deterministically yields zero.
pub fn sample_poisson(rate: f64, rng: &mut RandomSource) -> Result<u64> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::invalid(format!("Poisson rate {rate} must be finite and >= 0")));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    if rate < POISSON_INVERSION_CUTOFF {
        Ok(poisson_inversion(rate, rng))
    } else {
        Ok(poisson_ptrs(rate, rng))
    }
}

fn poisson_inversion(rate: f64, rng: &mut RandomSource) -> u64 {
    let limit = (-rate).exp();
    let mut k = 0u64;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

// Hörmann's PTRS transformed-rejection sampler; exact for rate >= 10.
fn poisson_ptrs(rate: f64, rng: &mut RandomSource) -> u64 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v = rng.gen::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -rate + k * loglam - statrs::function::gamma::ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Draws one symbol from `d` by inverting the cumulative distribution.
pub fn sample_categorical(d: &DiscreteDistribution, rng: &mut RandomSource) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (j, p) in d.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    d.k() - 1
}

/// Repeated-draw sampler for a fixed distribution, using a precomputed
/// cumulative table and binary search.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<f64>,
}

impl CategoricalSampler {
    pub fn new(d: &DiscreteDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = d
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        CategoricalSampler { cumulative }
    }

    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        let u = rng.gen::<f64>();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_zero_rate_is_zero() {
        let mut rng = RandomSource::new(1, 0);
        for _ in 0..10 {
            assert_eq!(sample_poisson(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn poisson_rejects_bad_rates() {
        let mut rng = RandomSource::new(1, 0);
        assert!(sample_poisson(-1.0, &mut rng).is_err());
        assert!(sample_poisson(f64::NAN, &mut rng).is_err());
        assert!(sample_poisson(f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn point_mass_always_hits() {
        let d = DiscreteDistribution::point_mass(5, 2);
        let mut rng = RandomSource::new(3, 0);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&d, &mut rng), 2);
        }
        let sampler = CategoricalSampler::new(&d);
        for _ in 0..100 {
            assert_eq!(sampler.sample(&mut rng), 2);
        }
    }

    #[test]
    fn sampler_matches_linear_scan_distributionally() {
        let d = DiscreteDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let sampler = CategoricalSampler::new(&d);
        let mut rng = RandomSource::new(9, 0);
        let mut counts = [0u64; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[sampler.sample(&mut rng)] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let exp = d.prob(j) * n as f64;
            let sd = (exp * (1.0 - d.prob(j))).sqrt();
            assert!((c as f64 - exp).abs() < 4.0 * sd, "bin {j}: {c} vs {exp}");
        }
    }
}
