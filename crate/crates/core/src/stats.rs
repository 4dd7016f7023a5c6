//! Statistical helpers: sample moments, chi-square goodness of fit, and
//! truncated Poisson pmfs with certified tail bounds.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_and_variance(xs);
    (var / xs.len() as f64).sqrt()
}

/// Standard error of the unbiased sample variance, estimated from the sample
/// via the central fourth moment.
pub fn variance_standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mean, var) = mean_and_variance(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var_of_var = (m4 - var * var * (n - 3.0) / (n - 1.0)) / n;
    var_of_var.max(0.0).sqrt()
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy)]
pub struct GofOutcome {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl GofOutcome {
    /// True when the null hypothesis is not rejected at `significance`.
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Pearson chi-square test of observed counts against expected bin
/// probabilities. Bin vectors must align; probabilities should sum to one.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<GofOutcome> {
    if observed.len() != expected_probs.len() {
        return Err(Error::invalid("observed and expected bin counts differ"));
    }
    if observed.len() < 2 {
        return Err(Error::invalid("chi-square needs at least two bins"));
    }
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let exp = p * total as f64;
        if exp <= 0.0 {
            return Err(Error::invalid("expected bin probability must be positive"));
        }
        let d = obs as f64 - exp;
        statistic += d * d / exp;
    }
    let df = observed.len() - 1;
    let chi = ChiSquared::new(df as f64).expect("positive df");
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(GofOutcome {
        statistic,
        df,
        p_value,
    })
}

/// Merges adjacent bins until every merged bin has expected probability mass
/// of at least `min_expected` counts (given `total` draws). Returns aligned
/// (observed, expected) vectors ready for [`chi_square_gof`].
pub fn merge_sparse_bins(
    observed: &[u64],
    expected_probs: &[f64],
    total: u64,
    min_expected: f64,
) -> (Vec<u64>, Vec<f64>) {
    let mut obs_out = Vec::new();
    let mut exp_out = Vec::new();
    let mut acc_obs = 0u64;
    let mut acc_exp = 0.0f64;
    for (&o, &e) in observed.iter().zip(expected_probs) {
        acc_obs += o;
        acc_exp += e;
        if acc_exp * total as f64 >= min_expected {
            obs_out.push(acc_obs);
            exp_out.push(acc_exp);
            acc_obs = 0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0 {
        // Fold the remainder into the last emitted bin.
        if let (Some(o), Some(e)) = (obs_out.last_mut(), exp_out.last_mut()) {
            *o += acc_obs;
            *e += acc_exp;
        } else {
            obs_out.push(acc_obs);
            exp_out.push(acc_exp);
        }
    }
    (obs_out, exp_out)
}

/// Poisson pmf evaluated in log space, stable for large rates.
pub fn poisson_pmf(rate: f64, value: u64) -> f64 {
    assert!(rate >= 0.0 && rate.is_finite(), "rate must be finite and >= 0");
    if rate == 0.0 {
        return if value == 0 { 1.0 } else { 0.0 };
    }
    let k = value as f64;
    (-rate + k * rate.ln() - ln_gamma(k + 1.0)).exp()
}

/// Upper bound on the truncation point `rate + 20 sqrt(rate) + 50`, beyond
/// which the Poisson tail is certified below `budget` by a Chernoff bound.
pub fn poisson_support_cutoff(rate: f64) -> u64 {
    (rate + 20.0 * rate.sqrt() + 50.0).ceil() as u64
}

/// The pmf of `Poi(rate)` on `0..=cutoff`, with the omitted tail certified
/// below `budget` via the Chernoff bound `P(X >= x) <= e^{-rate} (e rate / x)^x`.
pub fn poisson_pmf_truncated(rate: f64, budget: f64) -> Result<Vec<f64>> {
    let cutoff = poisson_support_cutoff(rate);
    let x = (cutoff + 1) as f64;
    let log_tail = if rate == 0.0 {
        f64::NEG_INFINITY
    } else {
        -rate + x + x * (rate / x).ln()
    };
    if log_tail > budget.ln() {
        return Err(Error::Truncation {
            tail_mass: log_tail.exp(),
            budget,
        });
    }
    Ok((0..=cutoff).map(|v| poisson_pmf(rate, v)).collect())
}
