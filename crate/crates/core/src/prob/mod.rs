//! Probability primitives: finite distributions, seeded samplers, distances,
//! and the alternating far alternative used throughout the experiments.

mod dist;
mod rng;
mod sample;

pub use dist::{
    l2_distance_sq, make_far_distribution, tv_distance, DiscreteDistribution, Histogram,
    NORMALISATION_TOL,
};
pub use rng::RandomSource;
pub use sample::{sample_categorical, sample_poisson, CategoricalSampler};
