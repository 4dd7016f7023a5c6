//! Distributions over finite domains and the distances between them.

use crate::error::{Error, Result};

/// Absolute tolerance for probability normalisation checks.
pub const NORMALISATION_TOL: f64 = 1e-12;

/// A probability distribution over the domain `{0, 1, ..., k-1}`.
///
/// Entries are validated on construction: all non-negative, summing to one
/// within [`NORMALISATION_TOL`]. Inputs are never silently renormalised; use
/// [`DiscreteDistribution::renormalised`] when that is intended.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one symbol"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(format!("probability entry {p} is invalid")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, expected 1 within {NORMALISATION_TOL:e}"
            )));
        }
        Ok(DiscreteDistribution { probs })
    }

    /// Builds a distribution from non-negative weights, dividing by their sum.
    pub fn renormalised(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution needs at least one symbol"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("weight entry {w} is invalid")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        DiscreteDistribution::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// The uniform distribution over `k` symbols.
    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "domain size must be positive");
        DiscreteDistribution {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// The distribution putting all mass on `x`.
    pub fn point_mass(k: usize, x: usize) -> Self {
        assert!(x < k, "symbol out of range");
        let mut probs = vec![0.0; k];
        probs[x] = 1.0;
        DiscreteDistribution { probs }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }
}

/// Total variation distance `(1/2) * sum_j |p_j - q_j|`.
pub fn tv_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_same_domain(p, q)?;
    let sum: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(0.5 * sum)
}

/// Squared Euclidean distance `sum_j (p_j - q_j)^2`.
pub fn l2_distance_sq(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_same_domain(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

fn check_same_domain(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::invalid(format!(
            "domain sizes differ: {} vs {}",
            p.k(),
            q.k()
        )));
    }
    Ok(())
}

/// The alternating far alternative: `(1 + 2a')/k` on even symbols and
/// `(1 - 2a')/k` on odd ones, which sits at total variation distance exactly
/// `a'` from uniform.
pub fn make_far_distribution(k: usize, alpha_prime: f64) -> Result<DiscreteDistribution> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::invalid(format!("domain size {k} must be even")));
    }
    if !(alpha_prime > 0.0 && alpha_prime <= 0.5) {
        return Err(Error::invalid(format!(
            "distance parameter {alpha_prime} must lie in (0, 1/2]"
        )));
    }
    let hi = (1.0 + 2.0 * alpha_prime) / k as f64;
    let lo = (1.0 - 2.0 * alpha_prime) / k as f64;
    let probs = (0..k).map(|j| if j % 2 == 0 { hi } else { lo }).collect();
    DiscreteDistribution::new(probs)
}

/// Integer counts over a finite set of bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        Histogram {
            counts: vec![0; bins],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Histogram { counts }
    }

    pub fn increment(&mut self, bin: usize) {
        self.counts[bin] += 1;
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, bin: usize) -> u64 {
        self.counts[bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
