//! The Poisson-noise shuffle protocol for uniformity testing.
//!
//! Each user sends, for every symbol `j`, one informative bit recording
//! whether their sample equals `j`, plus a Poisson number of uniformly random
//! noise bits for `j`. After shuffling, the analyser sees per-symbol counts
//! that are exactly Poisson distributed, and thresholds a bias-corrected
//! chi-square style statistic against `tau = 2 n alpha^2`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::prob::{
    l2_distance_sq, sample_poisson, CategoricalSampler, DiscreteDistribution, Histogram,
    RandomSource,
};
use crate::Verdict;

/// Protocol parameters: domain size, Poissonisation rate, distance and
/// privacy targets, and the calibrated noise rate.
///
/// The noisy reference `mu = n/k + lambda/2` and the rejection threshold
/// `tau = 2 n alpha^2` are derived, never stored, so they cannot drift.
#[derive(Debug, Clone)]
pub struct UtParams {
    pub k: usize,
    pub n: f64,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
}

impl UtParams {
    pub fn new(k: usize, n: f64, alpha: f64, eps: f64, delta: f64, lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("domain size k must be positive"));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(format!("sample rate n={n} must be positive")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha={alpha} must lie in (0, 1]")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps={eps} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta={delta} must lie in (0, 1)")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda={lambda} must be >= 0")));
        }
        Ok(UtParams {
            k,
            n,
            alpha,
            eps,
            delta,
            lambda,
        })
    }

    /// Calibrates the noise rate from `(eps, delta)` and the sample size from
    /// the planner bound.
    pub fn calibrated(k: usize, alpha: f64, eps: f64, delta: f64) -> Result<Self> {
        let lambda = calibrate_lambda(eps, delta)?;
        let n = required_n_for_lambda(k, alpha, lambda)?;
        UtParams::new(k, n as f64, alpha, eps, delta, lambda)
    }

    /// Noisy reference `mu = n/k + lambda/2`.
    pub fn mu(&self) -> f64 {
        self.n / self.k as f64 + self.lambda / 2.0
    }

    /// Rejection threshold `tau = 2 n alpha^2`.
    pub fn tau(&self) -> f64 {
        2.0 * self.n * self.alpha * self.alpha
    }
}

/// One shuffled message: a symbol index paired with a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessagePair {
    pub index: usize,
    pub bit: bool,
}

/// The shuffler's output: an order-randomised flat multiset of message pairs
/// together with the realised number of users. No per-user attribution
/// survives shuffling.
#[derive(Debug, Clone)]
pub struct UtTranscript {
    pub messages: Vec<MessagePair>,
    pub n_users: u64,
}

/// Noise rate `lambda = 64 ln(2/delta) / (1 - e^{-eps})^2`.
pub fn calibrate_lambda(eps: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps={eps} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta={delta} must lie in (0, 1)")));
    }
    let denom = 1.0 - (-eps).exp();
    Ok(64.0 * (2.0 / delta).ln() / (denom * denom))
}

/// Runs the randomiser for one user holding sample `x`: one informative pair
/// per symbol plus `Poi(lambda / n_users)` noise pairs per symbol, each noise
/// bit fair.
pub fn randomise_ut(
    x: usize,
    params: &UtParams,
    n_users: u64,
    rng: &mut RandomSource,
) -> Result<Vec<MessagePair>> {
    let mut out = Vec::with_capacity(params.k + params.lambda as usize / n_users.max(1) as usize);
    randomise_ut_into(x, params, n_users, rng, &mut out)?;
    Ok(out)
}

fn randomise_ut_into(
    x: usize,
    params: &UtParams,
    n_users: u64,
    rng: &mut RandomSource,
    out: &mut Vec<MessagePair>,
) -> Result<()> {
    if n_users == 0 {
        return Err(Error::invalid(
            "randomiser needs n_users >= 1; the degenerate Poissonisation draw is the caller's to handle",
        ));
    }
    if x >= params.k {
        return Err(Error::invalid(format!("sample {x} outside domain of size {}", params.k)));
    }
    let noise_rate = params.lambda / n_users as f64;
    for j in 0..params.k {
        out.push(MessagePair {
            index: j,
            bit: x == j,
        });
        let s_j = sample_poisson(noise_rate, rng)?;
        for _ in 0..s_j {
            out.push(MessagePair {
                index: j,
                bit: rng.gen::<bool>(),
            });
        }
    }
    Ok(())
}

/// Concatenates the users' message tuples and applies a uniformly random
/// permutation.
pub fn shuffle(tuples: Vec<Vec<MessagePair>>, rng: &mut RandomSource) -> UtTranscript {
    let n_users = tuples.len() as u64;
    let mut messages: Vec<MessagePair> = tuples.into_iter().flatten().collect();
    messages.shuffle(rng);
    UtTranscript { messages, n_users }
}

/// The test statistic `Z = (k/n) * sum_j ((N_j - mu)^2 - N_j)` over the
/// per-symbol counts of `(j, 1)` messages, with `mu = n/k + lambda/2`.
pub fn statistic_z(counts_n1: &Histogram, params: &UtParams) -> f64 {
    statistic_z_with_reference(counts_n1, params.k, params.n, params.mu())
}

/// The statistic with the noisy reference supplied explicitly.
pub fn statistic_z_with_reference(counts_n1: &Histogram, k: usize, n: f64, mu: f64) -> f64 {
    let sum: f64 = counts_n1
        .counts()
        .iter()
        .map(|&c| {
            let c = c as f64;
            (c - mu) * (c - mu) - c
        })
        .sum();
    k as f64 / n * sum
}

/// The analyser's verdict plus diagnostics.
#[derive(Debug, Clone)]
pub struct UtAnalysis {
    pub verdict: Verdict,
    /// Value of the statistic `Z`.
    pub z: f64,
    /// Per-symbol noise scales `l_j = (#messages with index j) - n_users`.
    /// Diagnostics only; in an honest execution each is a `Poi(lambda)` draw.
    pub noise_scales: Vec<i64>,
}

/// Counts the transcript and thresholds the statistic: "not uniform" exactly
/// when `Z > tau` (strict).
///
/// A transcript with `n_users = 0` (the degenerate Poissonisation draw) is
/// analysed with all-zero counts rather than rejected.
pub fn analyse_ut(transcript: &UtTranscript, params: &UtParams) -> Result<UtAnalysis> {
    let mut all = vec![0u64; params.k];
    let mut ones = Histogram::new(params.k);
    for m in &transcript.messages {
        if m.index >= params.k {
            return Err(Error::MalformedTranscript(format!(
                "message index {} outside domain of size {}",
                m.index, params.k
            )));
        }
        all[m.index] += 1;
        if m.bit {
            ones.increment(m.index);
        }
    }
    let z = statistic_z(&ones, params);
    let noise_scales = all
        .iter()
        .map(|&c| c as i64 - transcript.n_users as i64)
        .collect();
    let verdict = if z > params.tau() {
        Verdict::NotUniform
    } else {
        Verdict::Uniform
    };
    Ok(UtAnalysis {
        verdict,
        z,
        noise_scales,
    })
}

/// Analytic mean of the statistic: `E[Z] = n k ||p - U||_2^2`.
pub fn expected_z(p: &DiscreteDistribution, n: f64) -> f64 {
    let uniform = DiscreteDistribution::uniform(p.k());
    n * p.k() as f64 * l2_distance_sq(p, &uniform).expect("same domain")
}

/// Exact variance of the statistic under `p`:
/// `k^2 * sum_j [2 (p_j + lambda/2n)^2 + 4 n (p_j + lambda/2n) (p_j - 1/k)^2]`.
pub fn var_z_exact(p: &DiscreteDistribution, params: &UtParams) -> f64 {
    let k = params.k as f64;
    let n = params.n;
    let shift = params.lambda / (2.0 * n);
    let sum: f64 = p
        .probs()
        .iter()
        .map(|&pj| {
            let centred = pj - 1.0 / k;
            let base = pj + shift;
            2.0 * base * base + 4.0 * n * base * centred * centred
        })
        .sum();
    k * k * sum
}

/// Smallest integer `n` with `n >= 40 k^{3/4} sqrt(n/k + lambda/2) / alpha`,
/// where `lambda` is calibrated from `(eps, delta)`.
pub fn required_n_protocol1(k: usize, alpha: f64, eps: f64, delta: f64) -> Result<u64> {
    let lambda = calibrate_lambda(eps, delta)?;
    required_n_for_lambda(k, alpha, lambda)
}

/// Planner with the noise rate supplied directly.
///
/// The defining inequality is quadratic in `n`; the closed-form positive root
/// is rounded up, then nudged so that `n` satisfies the inequality and `n - 1`
/// does not.
pub fn required_n_for_lambda(k: usize, alpha: f64, lambda: f64) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("domain size k must be positive"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha={alpha} must lie in (0, 1]")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda={lambda} must be >= 0")));
    }
    let kf = k as f64;
    let b = 40.0 * kf.powf(0.75) / alpha;
    let b2 = b * b;
    // Positive root of n^2 - (b^2/k) n - b^2 lambda/2 = 0.
    let half_trace = b2 / kf;
    let root = 0.5 * (half_trace + (half_trace * half_trace + 2.0 * b2 * lambda).sqrt());
    if !root.is_finite() {
        return Err(Error::Calibration(format!(
            "planner root not finite for k={k}, alpha={alpha}, lambda={lambda}"
        )));
    }
    let satisfies = |n: u64| {
        let nf = n as f64;
        nf >= b * (nf / kf + lambda / 2.0).sqrt()
    };
    let mut n = root.ceil().max(1.0) as u64;
    while n > 1 && satisfies(n - 1) {
        n -= 1;
    }
    while !satisfies(n) {
        n += 1;
    }
    Ok(n)
}

/// Robust shuffle-privacy curve of the protocol: an honest fraction `gamma`
/// of users retains `(2 eps, 4 delta^gamma)`-DP.
pub fn robust_profile_p1(eps: f64, delta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma={gamma} must lie in (0, 1]")));
    }
    Ok((2.0 * eps, 4.0 * delta.powf(gamma)))
}

/// Outcome of one full protocol execution.
#[derive(Debug, Clone)]
pub struct UtTrialOutcome {
    pub n_users: u64,
    pub analysis: UtAnalysis,
}

/// Runs one end-to-end execution: draw `N ~ Poi(n)`, broadcast it to the
/// randomisers, shuffle every message, analyse.
pub fn run_trial(
    p: &DiscreteDistribution,
    params: &UtParams,
    rng: &mut RandomSource,
) -> Result<UtTrialOutcome> {
    if p.k() != params.k {
        return Err(Error::invalid(format!(
            "distribution domain {} does not match protocol domain {}",
            p.k(),
            params.k
        )));
    }
    let n_users = sample_poisson(params.n, rng)?;
    let mut messages = Vec::new();
    if n_users > 0 {
        let sampler = CategoricalSampler::new(p);
        let expected_len = n_users as usize * params.k + params.lambda as usize * params.k;
        messages.reserve(expected_len);
        for _ in 0..n_users {
            let x = sampler.sample(rng);
            randomise_ut_into(x, params, n_users, rng, &mut messages)?;
        }
        messages.shuffle(rng);
    }
    let transcript = UtTranscript { messages, n_users };
    let analysis = analyse_ut(&transcript, params)?;
    Ok(UtTrialOutcome { n_users, analysis })
}
