//! Differentially private uniformity testing in the shuffle model:
//! simulation, calibration, and verification at desk scale.
//!
//! Two testers are provided. The first has every user scatter Poisson noise
//! bits alongside one informative bit per symbol; after shuffling, the
//! per-symbol counts are exactly Poisson and a bias-corrected chi-square
//! style statistic separates uniform from far ([`protocol1`]). The second
//! runs a low-privacy Generalised Hadamard Response randomiser at every user
//! and relies on privacy amplification by shuffling for the central
//! guarantee ([`ghr`], [`amplify`]). Exact moment oracles and privacy
//! auditors ([`audit`]) make every calibrated claim checkable numerically.
//!
//! ```
//! use shuffletest::prob::{DiscreteDistribution, RandomSource};
//! use shuffletest::protocol1::{run_trial, UtParams};
//!
//! // Calibrate for k = 8 at distance 0.5 under (1, 0.05)-privacy, then run
//! // one end-to-end execution on truly uniform data.
//! let params = UtParams::calibrated(8, 0.5, 1.0, 0.05).unwrap();
//! let uniform = DiscreteDistribution::uniform(8);
//! let mut rng = RandomSource::new(7, 0);
//! let outcome = run_trial(&uniform, &params, &mut rng).unwrap();
//! println!("Z = {}, verdict: {}", outcome.analysis.z, outcome.analysis.verdict);
//! ```

pub mod amplify;
pub mod audit;
pub mod error;
pub mod ghr;
pub mod prob;
pub mod protocol1;
pub mod stats;

pub use error::{Error, Result};

/// Outcome of a uniformity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Uniform,
    NotUniform,
}

impl Verdict {
    pub fn accepts(&self) -> bool {
        matches!(self, Verdict::Uniform)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Uniform => write!(f, "uniform"),
            Verdict::NotUniform => write!(f, "not uniform"),
        }
    }
}
