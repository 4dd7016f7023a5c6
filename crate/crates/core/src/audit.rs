//! Privacy diagnostics: the Poisson-mechanism sufficiency check, exact
//! hockey-stick divergences for discrete mechanisms, and the channel trace
//! quantity with its privacy-implied upper bounds.

use crate::error::{Error, Result};

/// Budget on the pmf tail mass a truncated support may omit.
pub const TAIL_MASS_BUDGET: f64 = 1e-12;

/// A randomiser over finite alphabets given by its full transition matrix:
/// one row per input, each row a probability vector over the outputs.
#[derive(Debug, Clone)]
pub struct FiniteRandomiser {
    rows: Vec<Vec<f64>>,
}

impl FiniteRandomiser {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("randomiser needs at least one input row"));
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(Error::invalid("randomiser needs at least one output"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::invalid(format!("row {i} has ragged width")));
            }
            if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::invalid(format!("row {i} has invalid entry {p}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("row {i} sums to {total}, expected 1")));
            }
        }
        Ok(FiniteRandomiser { rows })
    }

    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The exact pure-LDP parameter: `max_{y,x,x'} P(x -> y) / P(x' -> y)`,
    /// skipping outputs where both probabilities vanish. Returns infinity
    /// when some output separates two inputs absolutely.
    pub fn max_ldp_ratio(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for y in 0..self.num_outputs() {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for row in &self.rows {
                lo = lo.min(row[y]);
                hi = hi.max(row[y]);
            }
            if hi == 0.0 {
                continue;
            }
            worst = worst.max(hi / lo);
        }
        worst
    }
}

/// Sufficiency check for the Poisson noise mechanism on a
/// `sensitivity`-sensitive integer function: true exactly when
/// `lambda >= 16 ln(2/delta) / (1 - e^{-eps/s})^2 + 2 s / (1 - e^{-eps/s})`.
pub fn poisson_mechanism_check(lambda: f64, eps: f64, delta: f64, sensitivity: u32) -> bool {
    debug_assert!(eps > 0.0 && delta > 0.0 && delta <= 1.0 && sensitivity >= 1);
    let s = sensitivity as f64;
    let denom = 1.0 - (-eps / s).exp();
    let threshold = 16.0 * (2.0 / delta).ln() / (denom * denom) + 2.0 * s / denom;
    lambda >= threshold
}

/// The hockey-stick divergence `sum_z max(a(z) - e^eps b(z), 0)` between two
/// pmfs on a shared truncated support. The pair satisfies the one-sided
/// `(eps, delta)`-DP inequality exactly when the result is `<= delta`.
///
/// Both inputs must leave less than [`TAIL_MASS_BUDGET`] outside the
/// truncation; otherwise the certificate would be meaningless and a
/// truncation error is returned.
pub fn hockey_stick_delta(pmf_a: &[f64], pmf_b: &[f64], eps: f64) -> Result<f64> {
    if pmf_a.len() != pmf_b.len() {
        return Err(Error::invalid("pmfs must share a common truncated support"));
    }
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("eps={eps} must be >= 0")));
    }
    for pmf in [pmf_a, pmf_b] {
        let mass: f64 = pmf.iter().sum();
        let tail = 1.0 - mass;
        if tail > TAIL_MASS_BUDGET {
            return Err(Error::Truncation {
                tail_mass: tail,
                budget: TAIL_MASS_BUDGET,
            });
        }
    }
    let scale = eps.exp();
    Ok(pmf_a
        .iter()
        .zip(pmf_b)
        .map(|(&a, &b)| (a - scale * b).max(0.0))
        .sum())
}

/// The channel trace
/// `Tr[H(R)] = sum_y [sum_i (P(R(x_{2i+1})=y) - P(R(x_{2i})=y))^2] / [sum_x P(R(x)=y)]`
/// over consecutive input pairs, skipping zero-mass outputs. Requires an even
/// number of inputs; callers wanting a different pairing permute rows first.
pub fn trace_h(r: &FiniteRandomiser) -> Result<f64> {
    let k = r.num_inputs();
    if k % 2 != 0 {
        return Err(Error::invalid(format!("trace needs an even input count, got {k}")));
    }
    let mut total = 0.0;
    for y in 0..r.num_outputs() {
        let mass: f64 = r.rows().iter().map(|row| row[y]).sum();
        if mass <= 0.0 {
            continue;
        }
        let mut num = 0.0;
        for pair in 0..k / 2 {
            let d = r.rows()[2 * pair + 1][y] - r.rows()[2 * pair][y];
            num += d * d;
        }
        total += num / mass;
    }
    Ok(total)
}

/// Checks the trace against the privacy-implied bound
/// `2 (e^eps + delta 2^ell)`; at `delta = 0` this is the pure bound `2 e^eps`.
pub fn trace_bound_check(r: &FiniteRandomiser, eps: f64, delta: f64, ell_bits: u32) -> Result<bool> {
    if r.num_outputs() as u128 > 1u128 << ell_bits.min(127) {
        return Err(Error::invalid(format!(
            "randomiser has {} outputs, more than 2^{ell_bits}",
            r.num_outputs()
        )));
    }
    let bound = 2.0 * (eps.exp() + delta * 2.0f64.powi(ell_bits as i32));
    Ok(trace_h(r)? <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_rr(p: f64) -> FiniteRandomiser {
        FiniteRandomiser::new(vec![vec![p, 1.0 - p], vec![1.0 - p, p]]).unwrap()
    }

    #[test]
    fn randomiser_validation() {
        assert!(FiniteRandomiser::new(vec![]).is_err());
        assert!(FiniteRandomiser::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(FiniteRandomiser::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(FiniteRandomiser::new(vec![vec![-0.1, 1.1]]).is_err());
    }

    #[test]
    fn poisson_mechanism_threshold_value() {
        // eps=1, delta=0.01, sensitivity 1: threshold ~= 215.32.
        assert!(!poisson_mechanism_check(215.0, 1.0, 0.01, 1));
        assert!(poisson_mechanism_check(215.4, 1.0, 0.01, 1));
        assert!(!poisson_mechanism_check(0.0, 1.0, 0.5, 1));
    }

    #[test]
    fn hockey_stick_basics() {
        let p = [0.5, 0.25, 0.25];
        assert_eq!(hockey_stick_delta(&p, &p, 0.0).unwrap(), 0.0);
        assert_eq!(hockey_stick_delta(&p, &p, 3.0).unwrap(), 0.0);

        // Overflow-guarded large eps: e^eps saturates, every term clamps to 0.
        let q = [0.9, 0.05, 0.05];
        assert_eq!(hockey_stick_delta(&p, &q, 800.0).unwrap(), 0.0);

        // At eps = 0 this is the one-sided total variation.
        let d = hockey_stick_delta(&p, &q, 0.0).unwrap();
        assert!((d - 0.4).abs() < 1e-15);

        // Truncation budget enforcement.
        let truncated = [0.5, 0.25];
        let other = [0.5, 0.5];
        assert!(matches!(
            hockey_stick_delta(&truncated, &other, 1.0),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn hockey_stick_non_increasing_in_eps() {
        let a = [0.4, 0.3, 0.2, 0.1];
        let b = [0.1, 0.2, 0.3, 0.4];
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let d = hockey_stick_delta(&a, &b, eps).unwrap();
            assert!(d <= last);
            last = d;
        }
    }

    #[test]
    fn trace_of_randomized_response() {
        // e^eps = 3 => p = 0.75 and the trace is 2((e-1)/(e+1))^2 = 0.5.
        let r = binary_rr(0.75);
        let t = trace_h(&r).unwrap();
        assert!((t - 0.5).abs() < 1e-12, "{t}");
    }

    #[test]
    fn trace_degenerate_rows() {
        // Identical rows: all pairwise differences vanish.
        let r = FiniteRandomiser::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(trace_h(&r).unwrap(), 0.0);

        // Identity randomiser on k=2: unit differences, trace exactly 2.
        let id = FiniteRandomiser::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(trace_h(&id).unwrap(), 2.0);

        // Odd input count is rejected.
        let odd = FiniteRandomiser::new(vec![vec![0.5, 0.5]]).unwrap();
        assert!(trace_h(&odd).is_err());
    }

    #[test]
    fn trace_bound_check_forms() {
        let r = binary_rr(0.75);
        // Pure bound at delta = 0: 0.5 <= 2 e^eps for eps = ln 3.
        assert!(trace_bound_check(&r, 3.0f64.ln(), 0.0, 1).unwrap());
        // The identity channel has trace 2; the bound 2 e^eps only has slack
        // as eps -> 0, where the inequality becomes tight.
        let id = FiniteRandomiser::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(trace_bound_check(&id, 1e-9, 0.0, 1).unwrap());
        assert!((trace_h(&id).unwrap() - 2.0).abs() < 1e-15);
        // Output-count precondition.
        let wide = FiniteRandomiser::new(vec![vec![0.25; 4], vec![0.25; 4]]).unwrap();
        assert!(trace_bound_check(&wide, 1.0, 0.0, 1).is_err());
        assert!(trace_bound_check(&wide, 1.0, 0.0, 2).is_ok());
    }
}
