//! Generalised Hadamard Response: a locally private channel from `[k]` to a
//! slightly larger alphabet `[K]`, plus the Poissonised l2 identity tester
//! that turns it into a uniformity tester.
//!
//! The channel boosts the probability of a "signal set" `C_x`, the positive
//! entries of a constant-weight row of the block matrix built from `a` copies
//! of the Sylvester Hadamard matrix `H_b` (all entries outside the diagonal
//! blocks are -1). Membership is evaluated by bit parity, so no matrix is
//! ever materialised on the sampling path.

use rand::Rng;

use crate::error::{Error, Result};
use crate::prob::{sample_poisson, DiscreteDistribution, Histogram, RandomSource};
use crate::Verdict;

/// Default calibration constant for [`required_n_ldp`]; tuned empirically so
/// that end-to-end accept/reject rates clear 2/3 at moderate domain sizes.
pub const DEFAULT_SAFETY_CONST: f64 = 8.0;

/// The channel parameterisation derived from `(k, eps_l)`.
///
/// `a` copies of the `b x b` Sylvester block give output size `out = a * b`
/// and row weight `s = b / 2`. Input `x` maps to row `1 + x mod (b-1)` of
/// copy `x / (b-1)`, skipping each copy's all-ones row; the mapping fills
/// copies sequentially, which fixes a canonical, reproducible injection.
#[derive(Debug, Clone)]
pub struct GhrScheme {
    k: usize,
    exp_eps: f64,
    a: usize,
    b: usize,
    out: usize,
    s: usize,
}

impl GhrScheme {
    pub fn new(k: usize, eps_l: f64) -> Result<Self> {
        if !(eps_l > 0.0 && eps_l.is_finite()) {
            return Err(Error::invalid(format!("eps_l={eps_l} must be positive")));
        }
        Self::from_exp_eps(k, eps_l.exp())
    }

    /// Builds the scheme from `e^{eps_l}` directly. Accepts `exp_eps = 1`
    /// (the zero-privacy-signal limit), which `new` rejects.
    pub fn from_exp_eps(k: usize, exp_eps: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("input alphabet k={k} must be >= 2")));
        }
        if !(exp_eps >= 1.0) {
            return Err(Error::invalid(format!("exp(eps_l)={exp_eps} must be >= 1")));
        }
        let capped = exp_eps.min(2.0 * k as f64);
        let a = 1usize << capped.log2().floor() as u32;
        let b_arg = k as f64 / a as f64 + 1.0;
        let b = 1usize << b_arg.log2().ceil() as u32;
        let out = a * b;
        let s = b / 2;
        debug_assert!(s >= 1);
        debug_assert!(out <= 6 * k);
        debug_assert!(out >= k + a);
        debug_assert!(a * (b - 1) >= k);
        Ok(GhrScheme {
            k,
            exp_eps,
            a,
            b,
            out,
            s,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps_l(&self) -> f64 {
        self.exp_eps.ln()
    }

    pub fn exp_eps(&self) -> f64 {
        self.exp_eps
    }

    /// Number of Hadamard copies.
    pub fn a(&self) -> usize {
        self.a
    }

    /// Block size (one Sylvester matrix).
    pub fn b(&self) -> usize {
        self.b
    }

    /// Output alphabet size `K = a * b`.
    pub fn output_size(&self) -> usize {
        self.out
    }

    /// Signal-set size `s = b / 2`.
    pub fn row_weight(&self) -> usize {
        self.s
    }

    /// The `(copy, row)` pair input `x` maps to.
    pub fn row_of(&self, x: usize) -> (usize, usize) {
        (x / (self.b - 1), 1 + x % (self.b - 1))
    }

    /// Inputs mapped to rows of copy `i` (the set written `T_i`).
    pub fn copy_members(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i * (self.b - 1);
        let hi = ((i + 1) * (self.b - 1)).min(self.k);
        lo.min(self.k)..hi
    }

    /// Whether output `y` lies in the signal set `C_x`: same copy block, and
    /// the Sylvester entry `(-1)^{popcount(row AND column)}` equals +1.
    pub fn contains(&self, x: usize, y: usize) -> Result<bool> {
        if x >= self.k {
            return Err(Error::invalid(format!("input {x} outside domain {}", self.k)));
        }
        if y >= self.out {
            return Err(Error::invalid(format!("output {y} outside range {}", self.out)));
        }
        let (copy, row) = self.row_of(x);
        if y / self.b != copy {
            return Ok(false);
        }
        let col = y % self.b;
        Ok((row & col).count_ones() % 2 == 0)
    }

    /// Exact transition probability
    /// `P(R(x) = y) = ((e^eps - 1) 1{y in C_x} + 1) / (s e^eps + K - s)`.
    pub fn transition_prob(&self, x: usize, y: usize) -> Result<f64> {
        let denom = self.s as f64 * self.exp_eps + (self.out - self.s) as f64;
        let numer = if self.contains(x, y)? {
            self.exp_eps
        } else {
            1.0
        };
        Ok(numer / denom)
    }

    /// Samples one privatised message. Two-stage draw: pick the signal set
    /// with probability `s e^eps / (s e^eps + K - s)`, then uniformly inside
    /// or outside it by rejection; the resulting pmf is exactly
    /// [`GhrScheme::transition_prob`].
    pub fn randomise(&self, x: usize, rng: &mut RandomSource) -> Result<usize> {
        if x >= self.k {
            return Err(Error::invalid(format!("input {x} outside domain {}", self.k)));
        }
        let (copy, row) = self.row_of(x);
        let s = self.s as f64;
        let p_signal = s * self.exp_eps / (s * self.exp_eps + (self.out - self.s) as f64);
        if rng.gen_bool(p_signal) {
            // Uniform over C_x: rejection within x's block, expected 2 draws.
            loop {
                let col = rng.gen_range(0..self.b);
                if (row & col).count_ones() % 2 == 0 {
                    return Ok(copy * self.b + col);
                }
            }
        } else {
            // Uniform over the complement of C_x.
            loop {
                let y = rng.gen_range(0..self.out);
                if y / self.b != copy || (row & (y % self.b)).count_ones() % 2 != 0 {
                    return Ok(y);
                }
            }
        }
    }

    /// The message distribution over `[K]` induced by drawing `x ~ p` and
    /// then applying the channel: the exact row mixture of the transition
    /// probabilities.
    pub fn induced_distribution(&self, p: &DiscreteDistribution) -> Result<DiscreteDistribution> {
        if p.k() != self.k {
            return Err(Error::invalid(format!(
                "distribution domain {} does not match scheme domain {}",
                p.k(),
                self.k
            )));
        }
        let mut signal_mass = vec![0.0f64; self.out];
        for x in 0..self.k {
            let (copy, row) = self.row_of(x);
            let base = copy * self.b;
            for col in 0..self.b {
                if (row & col).count_ones() % 2 == 0 {
                    signal_mass[base + col] += p.prob(x);
                }
            }
        }
        let weights: Vec<f64> = signal_mass
            .iter()
            .map(|w| (self.exp_eps - 1.0) * w + 1.0)
            .collect();
        DiscreteDistribution::renormalised(weights)
    }

    /// The full `k x K` transition matrix. Intended for audits and exhaustive
    /// checks at small `k`; the sampling path never materialises it.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.k)
            .map(|x| {
                (0..self.out)
                    .map(|y| self.transition_prob(x, y).expect("in range"))
                    .collect()
            })
            .collect()
    }
}

/// Verdict of the l2 identity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Verdict {
    Match,
    Far,
}

impl std::fmt::Display for L2Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            L2Verdict::Match => write!(f, "match"),
            L2Verdict::Far => write!(f, "far"),
        }
    }
}

/// Statistic, threshold, and verdict of one l2 identity test.
#[derive(Debug, Clone, Copy)]
pub struct L2Outcome {
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: L2Verdict,
}

/// Poissonised l2 identity test: computes
/// `T = sum_y ((M_y - n q*_y)^2 - M_y)` and reports "far" when
/// `T > n^2 gamma^2 / 2`.
///
/// Under counts `M_y ~ Poi(n q_y)`, `E[T] = n^2 ||q - q*||_2^2`, so the
/// threshold sits at half the smallest far-case mean.
pub fn l2_identity_test(
    counts: &Histogram,
    n: f64,
    q_star: &DiscreteDistribution,
    gamma_l2_sq: f64,
) -> Result<L2Outcome> {
    if counts.bins() != q_star.k() {
        return Err(Error::invalid(format!(
            "histogram bins {} do not match reference domain {}",
            counts.bins(),
            q_star.k()
        )));
    }
    if !(gamma_l2_sq > 0.0) {
        return Err(Error::invalid(format!("gamma_l2_sq={gamma_l2_sq} must be positive")));
    }
    let statistic: f64 = counts
        .counts()
        .iter()
        .zip(q_star.probs())
        .map(|(&m, &q)| {
            let m = m as f64;
            let centred = m - n * q;
            centred * centred - m
        })
        .sum();
    let threshold = n * n * gamma_l2_sq / 2.0;
    let verdict = if statistic > threshold {
        L2Verdict::Far
    } else {
        L2Verdict::Match
    };
    Ok(L2Outcome {
        statistic,
        threshold,
        verdict,
    })
}

/// Analyser-side parameters: the scheme, the l2 rejection radius, and the
/// reference distribution `q* = Phi(U_k)`.
#[derive(Debug, Clone)]
pub struct GhrAnalyserParams {
    pub scheme: GhrScheme,
    pub alpha: f64,
    pub gamma_l2_sq: f64,
    pub q_star: DiscreteDistribution,
}

impl GhrAnalyserParams {
    pub fn new(scheme: GhrScheme, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha={alpha} must lie in (0, 1]")));
        }
        let uniform = DiscreteDistribution::uniform(scheme.k());
        let q_star = scheme.induced_distribution(&uniform)?;
        let gamma_l2_sq = gamma_l2_sq(&scheme, alpha);
        Ok(GhrAnalyserParams {
            scheme,
            alpha,
            gamma_l2_sq,
            q_star,
        })
    }
}

/// The l2 rejection radius
/// `gamma^2 = (2 alpha^2 / (s k)) * ((e^eps - 1) / (e^eps + K/s - 1))^2`.
pub fn gamma_l2_sq(scheme: &GhrScheme, alpha: f64) -> f64 {
    let e = scheme.exp_eps();
    let s = scheme.row_weight() as f64;
    let k = scheme.k() as f64;
    let ratio = (e - 1.0) / (e + scheme.output_size() as f64 / s - 1.0);
    2.0 * alpha * alpha / (s * k) * ratio * ratio
}

/// Analysis of one batch of privatised messages.
#[derive(Debug, Clone)]
pub struct GhrAnalysis {
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: f64,
}

/// Histograms the messages over `[K]` and runs the l2 identity test against
/// `q*`; "not uniform" exactly when the test reports "far".
pub fn analyse_ghr(messages: &[usize], params: &GhrAnalyserParams, n: f64) -> Result<GhrAnalysis> {
    let out = params.scheme.output_size();
    let mut counts = Histogram::new(out);
    for &y in messages {
        if y >= out {
            return Err(Error::MalformedTranscript(format!(
                "message {y} outside output range {out}"
            )));
        }
        counts.increment(y);
    }
    let outcome = l2_identity_test(&counts, n, &params.q_star, params.gamma_l2_sq)?;
    let verdict = match outcome.verdict {
        L2Verdict::Far => Verdict::NotUniform,
        L2Verdict::Match => Verdict::Uniform,
    };
    Ok(GhrAnalysis {
        verdict,
        statistic: outcome.statistic,
        threshold: outcome.threshold,
    })
}

/// Sample-size planner for the locally private tester:
/// `ceil(C * (k^{3/2}/(alpha^2 (e^eps - 1)^2) + k^{3/2}/(alpha^2 e^eps) + k^{1/2}/alpha^2))`.
pub fn required_n_ldp(k: usize, alpha: f64, eps_l: f64, safety_const: f64) -> Result<u64> {
    if k < 2 {
        return Err(Error::invalid(format!("input alphabet k={k} must be >= 2")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha={alpha} must lie in (0, 1]")));
    }
    if !(eps_l > 0.0 && eps_l.is_finite()) {
        return Err(Error::invalid(format!("eps_l={eps_l} must be positive")));
    }
    if !(safety_const > 0.0 && safety_const.is_finite()) {
        return Err(Error::invalid(format!(
            "safety_const={safety_const} must be positive"
        )));
    }
    let kf = k as f64;
    let a2 = alpha * alpha;
    let e = eps_l.exp();
    let raw = kf.powf(1.5) / (a2 * (e - 1.0) * (e - 1.0))
        + kf.powf(1.5) / (a2 * e)
        + kf.sqrt() / a2;
    let n = (safety_const * raw).ceil();
    if !n.is_finite() {
        return Err(Error::Calibration(format!(
            "LDP planner diverges for k={k}, alpha={alpha}, eps_l={eps_l}"
        )));
    }
    Ok(n as u64)
}

/// Outcome of one locally private test execution.
#[derive(Debug, Clone)]
pub struct LdpTrialOutcome {
    pub n_users: u64,
    pub analysis: GhrAnalysis,
}

/// Runs one Poissonised execution of the plain LDP protocol: draw
/// `N ~ Poi(n)` users, each privatising one sample from `p`; analyse the
/// resulting messages against `q* = Phi(U_k)`.
pub fn run_ldp_trial(
    p: &DiscreteDistribution,
    params: &GhrAnalyserParams,
    n: f64,
    rng: &mut RandomSource,
) -> Result<LdpTrialOutcome> {
    let messages = draw_messages(p, &params.scheme, n, rng)?;
    let analysis = analyse_ghr(&messages, params, n)?;
    Ok(LdpTrialOutcome {
        n_users: messages.len() as u64,
        analysis,
    })
}

/// Draws `N ~ Poi(n)` users and their privatised messages.
pub(crate) fn draw_messages(
    p: &DiscreteDistribution,
    scheme: &GhrScheme,
    n: f64,
    rng: &mut RandomSource,
) -> Result<Vec<usize>> {
    if p.k() != scheme.k() {
        return Err(Error::invalid(format!(
            "distribution domain {} does not match scheme domain {}",
            p.k(),
            scheme.k()
        )));
    }
    let n_users = sample_poisson(n, rng)?;
    let sampler = crate::prob::CategoricalSampler::new(p);
    let mut messages = Vec::with_capacity(n_users as usize);
    for _ in 0..n_users {
        let x = sampler.sample(rng);
        messages.push(scheme.randomise(x, rng)?);
    }
    Ok(messages)
}
