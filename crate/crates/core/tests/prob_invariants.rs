//! Distributional invariants of the probability primitives, checked against
//! independent oracles (statrs pmfs, hand arithmetic) at fixed seeds.

use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{Discrete, Poisson};

use shuffletest::prob::{
    l2_distance_sq, make_far_distribution, sample_categorical, sample_poisson, tv_distance,
    DiscreteDistribution, RandomSource,
};
use shuffletest::stats::{chi_square_gof, mean_and_variance, merge_sparse_bins, standard_error};

const GOF_SIGNIFICANCE: f64 = 1e-3;

/// Chi-square GOF of integer draws against an oracle Poisson pmf, with
/// sparse bins merged to expected count >= 5.
fn poisson_gof(samples: &[u64], rate: f64) -> shuffletest::stats::GofOutcome {
    let oracle = Poisson::new(rate).unwrap();
    let max = *samples.iter().max().unwrap() as usize;
    let mut observed = vec![0u64; max + 2];
    for &s in samples {
        observed[s as usize] += 1;
    }
    // Oracle pmf over 0..=max, remainder folded into the final bin.
    let mut expected: Vec<f64> = (0..=max as u64).map(|v| oracle.pmf(v)).collect();
    let tail = 1.0 - expected.iter().sum::<f64>();
    expected.push(tail.max(f64::MIN_POSITIVE));
    let (obs, exp) = merge_sparse_bins(&observed, &expected, samples.len() as u64, 5.0);
    chi_square_gof(&obs, &exp).unwrap()
}

#[test]
fn poisson_sampler_mean_at_rate_20() {
    let mut rng = RandomSource::new(101, 0);
    let draws = 100_000;
    let mean: f64 = (0..draws)
        .map(|_| sample_poisson(20.0, &mut rng).unwrap() as f64)
        .sum::<f64>()
        / draws as f64;
    // 3 sigma band: sigma = sqrt(20 / 1e5).
    assert!((mean - 20.0).abs() < 0.15, "mean {mean}");
}

#[test]
fn poisson_sampler_gof_inversion_path() {
    let mut rng = RandomSource::new(102, 0);
    let samples: Vec<u64> = (0..100_000)
        .map(|_| sample_poisson(10.0, &mut rng).unwrap())
        .collect();
    let out = poisson_gof(&samples, 10.0);
    assert!(out.passes(GOF_SIGNIFICANCE), "p = {}", out.p_value);
}

#[test]
fn poisson_sampler_gof_rejection_path() {
    // Rates above the inversion cutoff exercise the transformed-rejection
    // sampler, the one used for Poissonisation draws at calibrated sizes.
    for (seed, rate) in [(103u64, 100.0), (104, 424.3)] {
        let mut rng = RandomSource::new(seed, 0);
        let samples: Vec<u64> = (0..100_000)
            .map(|_| sample_poisson(rate, &mut rng).unwrap())
            .collect();
        let out = poisson_gof(&samples, rate);
        assert!(out.passes(GOF_SIGNIFICANCE), "rate {rate}: p = {}", out.p_value);
    }
}

#[test]
fn categorical_sampler_bands() {
    let mut rng = RandomSource::new(105, 0);
    let draws = 100_000;

    let u4 = DiscreteDistribution::uniform(4);
    let mut counts = [0u64; 4];
    for _ in 0..draws {
        counts[sample_categorical(&u4, &mut rng)] += 1;
    }
    for (j, &c) in counts.iter().enumerate() {
        // 3 sigma binomial band around 25000.
        assert!((c as f64 - 25_000.0).abs() < 412.0, "bin {j}: {c}");
    }

    let biased = DiscreteDistribution::new(vec![0.75, 0.25]).unwrap();
    let mut first = 0u64;
    for _ in 0..draws {
        if sample_categorical(&biased, &mut rng) == 0 {
            first += 1;
        }
    }
    assert!((first as f64 - 75_000.0).abs() < 411.0, "count {first}");
}

#[test]
fn binomial_of_poisson_is_poisson() {
    // The compound draw sum_{i<=N} X_i with N ~ Poi(lambda), X_i ~ Ber(p)
    // matches Poi(lambda p) in distribution.
    let mut seed = 200u64;
    for lambda in [2.0, 10.0, 20.0] {
        for p in [0.25, 0.5, 0.9] {
            seed += 1;
            let mut rng = RandomSource::new(seed, 0);
            let samples: Vec<u64> = (0..100_000)
                .map(|_| {
                    let n = sample_poisson(lambda, &mut rng).unwrap();
                    (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64
                })
                .collect();
            let out = poisson_gof(&samples, lambda * p);
            assert!(
                out.passes(GOF_SIGNIFICANCE),
                "lambda={lambda}, p={p}: p-value {}",
                out.p_value
            );
        }
    }
}

#[test]
fn poisson_moment_identities() {
    // E[(M - mu)^2 - M] = (a - mu)^2 for M ~ Poi(a), and
    // E[((M - mu)^2 - M)^2] = 2 mu^2 for M ~ Poi(mu).
    let draws = 200_000;
    let mut seed = 300u64;
    for mu in [1.0, 5.0, 25.0] {
        for a in [mu, mu + 3.0] {
            seed += 1;
            let mut rng = RandomSource::new(seed, 0);
            let vals: Vec<f64> = (0..draws)
                .map(|_| {
                    let m = sample_poisson(a, &mut rng).unwrap() as f64;
                    (m - mu) * (m - mu) - m
                })
                .collect();
            let (mean, _) = mean_and_variance(&vals);
            let se = standard_error(&vals);
            let expect = (a - mu) * (a - mu);
            assert!(
                (mean - expect).abs() <= 3.0 * se,
                "mu={mu}, a={a}: mean {mean} vs {expect} (se {se})"
            );
        }

        seed += 1;
        let mut rng = RandomSource::new(seed, 0);
        let vals: Vec<f64> = (0..draws)
            .map(|_| {
                let m = sample_poisson(mu, &mut rng).unwrap() as f64;
                let t = (m - mu) * (m - mu) - m;
                t * t
            })
            .collect();
        let (mean, _) = mean_and_variance(&vals);
        let se = standard_error(&vals);
        let expect = 2.0 * mu * mu;
        assert!(
            (mean - expect).abs() <= 3.0 * se,
            "mu={mu}: second moment {mean} vs {expect} (se {se})"
        );
    }
}

fn arb_distribution(k: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(1e-4..1.0f64, k)
        .prop_map(|w| DiscreteDistribution::renormalised(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_is_a_metric(
        p in arb_distribution(8),
        q in arb_distribution(8),
        r in arb_distribution(8),
    ) {
        let pq = tv_distance(&p, &q).unwrap();
        let qp = tv_distance(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
        prop_assert!((0.0..=1.0).contains(&pq));

        let pr = tv_distance(&p, &r).unwrap();
        let rq = tv_distance(&r, &q).unwrap();
        prop_assert!(pq <= pr + rq + 1e-12);
    }

    #[test]
    fn cauchy_schwarz_between_distances(p in arb_distribution(16)) {
        // k * ||p - U||_2^2 >= (2 tv(p, U))^2.
        let u = DiscreteDistribution::uniform(16);
        let l2 = l2_distance_sq(&p, &u).unwrap();
        let tv = tv_distance(&p, &u).unwrap();
        prop_assert!(16.0 * l2 >= (2.0 * tv) * (2.0 * tv) - 1e-12);
    }

    #[test]
    fn far_distribution_distance_is_exact(
        k in (1usize..32).prop_map(|h| 2 * h),
        ap in 0.01f64..0.5,
    ) {
        let p = make_far_distribution(k, ap).unwrap();
        let u = DiscreteDistribution::uniform(k);
        prop_assert!((tv_distance(&p, &u).unwrap() - ap).abs() < 1e-12);
    }
}
