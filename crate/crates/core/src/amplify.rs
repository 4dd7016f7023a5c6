//! Privacy amplification by shuffling, and the shuffle protocol assembled
//! from locally private randomisers.
//!
//! Shuffling `n` messages from an `eps_l`-LDP randomiser yields a centrally
//! `(eps, delta)`-DP output with `eps` roughly `sqrt(e^{eps_l} log(1/delta) / n)`.
//! This module evaluates the exact bound, inverts it to pick the largest
//! usable local parameter, and assembles the resulting uniformity tester.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::ghr::{analyse_ghr, draw_messages, required_n_ldp, GhrAnalyserParams, GhrScheme};
use crate::prob::{DiscreteDistribution, RandomSource};
use crate::Verdict;

/// The validity gate of the amplification bound:
/// `eps_l <= ln(n / (16 ln(2/delta)))`.
pub fn amplification_gate(n: u64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta={delta} must lie in (0, 1)")));
    }
    Ok((n as f64 / (16.0 * (2.0 / delta).ln())).ln())
}

/// The central privacy parameter obtained by shuffling `n` reports from an
/// `eps_l`-LDP randomiser:
/// `ln(1 + 8 (e^el - 1)/(e^el + 1) (sqrt(e^el ln(4/delta) / n) + e^el / n))`.
///
/// Errors when the validity gate is violated; the returned error carries the
/// gate bound.
pub fn amplified_epsilon(eps_l: f64, n: u64, delta: f64) -> Result<f64> {
    if !(eps_l >= 0.0 && eps_l.is_finite()) {
        return Err(Error::invalid(format!("eps_l={eps_l} must be >= 0")));
    }
    let gate = amplification_gate(n, delta)?;
    if eps_l > gate {
        return Err(Error::AmplificationInvalid {
            gate,
            reason: format!("eps_l={eps_l} exceeds the gate for n={n}, delta={delta}"),
        });
    }
    let e = eps_l.exp();
    let nf = n as f64;
    let bound = 8.0 * (e - 1.0) / (e + 1.0) * ((e * (4.0 / delta).ln() / nf).sqrt() + e / nf);
    Ok(bound.ln_1p())
}

/// Right-hand side of the inversion equation:
/// `ln(1 + 16 e^{el/2} (e^el - 1)/(e^el + 1) sqrt(ln(4/delta) / n))`.
fn inversion_rhs(eps_l: f64, n: u64, delta: f64) -> f64 {
    let e = eps_l.exp();
    let term = 16.0 * (eps_l / 2.0).exp() * (e - 1.0) / (e + 1.0)
        * ((4.0 / delta).ln() / n as f64).sqrt();
    term.ln_1p()
}

/// Solves the inversion equation for the unique positive `eps_l` achieving a
/// target shuffled `eps`, by bisection over `[1e-12, ln n]` to absolute
/// tolerance 1e-10.
///
/// The inversion expression upper-bounds the amplification bound in the
/// valid regime, so on success the returned `eps_l` is post-verified to pass
/// the validity gate and to satisfy `amplified_epsilon(eps_l) <= eps_target`.
pub fn invert_amplification(eps_target: f64, n: u64, delta: f64) -> Result<f64> {
    if !(eps_target > 0.0 && eps_target.is_finite()) {
        return Err(Error::invalid(format!("eps_target={eps_target} must be positive")));
    }
    let gate = amplification_gate(n, delta)?;
    let mut lo = 1e-12_f64;
    let mut hi = (n as f64).ln();
    if hi <= lo || inversion_rhs(hi, n, delta) < eps_target {
        return Err(Error::AmplificationInvalid {
            gate,
            reason: format!("no local parameter reaches eps={eps_target} with n={n} users"),
        });
    }
    if inversion_rhs(lo, n, delta) > eps_target {
        return Err(Error::AmplificationInvalid {
            gate,
            reason: format!("eps={eps_target} is below the inversion range at n={n}"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inversion_rhs(mid, n, delta) < eps_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let eps_l = 0.5 * (lo + hi);

    if eps_l > gate {
        return Err(Error::AmplificationInvalid {
            gate,
            reason: format!(
                "inverted eps_l={eps_l} violates the gate: n={n} is too small for eps={eps_target}"
            ),
        });
    }
    let residual = (inversion_rhs(eps_l, n, delta) - eps_target).abs();
    if residual > 1e-9 {
        return Err(Error::Calibration(format!(
            "inversion residual {residual:e} exceeds tolerance"
        )));
    }
    let realized = amplified_epsilon(eps_l, n, delta)?;
    if realized > eps_target {
        return Err(Error::AmplificationInvalid {
            gate,
            reason: format!(
                "post-verification failed: amplified eps {realized} exceeds target {eps_target}"
            ),
        });
    }
    Ok(eps_l)
}

/// Everything needed to execute the amplified protocol at a fixed sample
/// size: local parameter, analyser state, and the realised privacy bound.
#[derive(Debug, Clone)]
pub struct Protocol2Plan {
    pub eps_l: f64,
    /// `amplified_epsilon(eps_l, n, delta)`, guaranteed `<= eps_target`.
    pub realized_eps_bound: f64,
    pub n: u64,
    pub delta: f64,
    pub analyser: GhrAnalyserParams,
}

/// Calibrates the amplified protocol: inverts the amplification bound at
/// `(eps, n, delta)` and builds the channel and analyser for that `eps_l`.
pub fn plan_protocol2(k: usize, alpha: f64, eps: f64, delta: f64, n: u64) -> Result<Protocol2Plan> {
    let eps_l = invert_amplification(eps, n, delta)?;
    let realized = amplified_epsilon(eps_l, n, delta)?;
    let scheme = GhrScheme::new(k, eps_l)?;
    let analyser = GhrAnalyserParams::new(scheme, alpha)?;
    Ok(Protocol2Plan {
        eps_l,
        realized_eps_bound: realized,
        n,
        delta,
        analyser,
    })
}

/// Outcome of one amplified-protocol execution.
#[derive(Debug, Clone)]
pub struct P2TrialOutcome {
    pub n_users: u64,
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: f64,
}

/// Runs one end-to-end execution of the amplified protocol: `Poi(n)` users
/// each privatise one sample through the channel, the shuffler permutes the
/// messages, and the l2 analyser tests against `Phi(U_k)`.
pub fn run_protocol2_trial(
    p: &DiscreteDistribution,
    plan: &Protocol2Plan,
    rng: &mut RandomSource,
) -> Result<P2TrialOutcome> {
    let mut messages = draw_messages(p, &plan.analyser.scheme, plan.n as f64, rng)?;
    messages.shuffle(rng);
    let analysis = analyse_ghr(&messages, &plan.analyser, plan.n as f64)?;
    Ok(P2TrialOutcome {
        n_users: messages.len() as u64,
        verdict: analysis.verdict,
        statistic: analysis.statistic,
        threshold: analysis.threshold,
    })
}

/// One-shot form of the amplified protocol.
pub fn run_protocol2(
    p: &DiscreteDistribution,
    k: usize,
    alpha: f64,
    eps: f64,
    delta: f64,
    n: u64,
    rng: &mut RandomSource,
) -> Result<(P2TrialOutcome, Protocol2Plan)> {
    let plan = plan_protocol2(k, alpha, eps, delta, n)?;
    let outcome = run_protocol2_trial(p, &plan, rng)?;
    Ok((outcome, plan))
}

/// Smallest `n` at which the inversion succeeds and `n` covers the LDP
/// planner at the resulting `eps_l(n)`. The circular dependency between `n`
/// and `eps_l` is resolved by an outer doubling-then-bisection search.
pub fn required_n_protocol2(
    k: usize,
    alpha: f64,
    eps: f64,
    delta: f64,
    safety_const: f64,
) -> Result<u64> {
    const CAP: u64 = 1 << 50;
    let feasible = |n: u64| -> bool {
        match invert_amplification(eps, n, delta) {
            Ok(eps_l) => match required_n_ldp(k, alpha, eps_l, safety_const) {
                Ok(needed) => n >= needed,
                Err(_) => false,
            },
            Err(_) => false,
        }
    };
    let mut hi = 16u64;
    while !feasible(hi) {
        hi = hi.saturating_mul(2);
        if hi > CAP {
            return Err(Error::Calibration(format!(
                "no feasible n below {CAP} for k={k}, alpha={alpha}, eps={eps}, delta={delta}"
            )));
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Robust shuffle-privacy curve of the amplified protocol: an honest
/// fraction `gamma` retains `(eps, 4 delta^gamma)`-DP.
pub fn robust_profile_p2(eps: f64, delta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma={gamma} must lie in (0, 1]")));
    }
    Ok((eps, 4.0 * delta.powf(gamma)))
}

/// Diagnostic: the amplification bound recomputed at `gamma * n` honest users
/// with `delta(gamma) = 4^{1-gamma} delta^gamma`. Finite exactly when the
/// gamma-scaled validity gate holds.
pub fn robust_diagnostic_p2(eps_l: f64, n: u64, delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma={gamma} must lie in (0, 1]")));
    }
    let honest = (gamma * n as f64).floor() as u64;
    let delta_gamma = 4.0f64.powf(1.0 - gamma) * delta.powf(gamma);
    amplified_epsilon(eps_l, honest, delta_gamma)
}
