//! Target encoding of protected categorical attributes, and the tools to
//! measure what it does to fairness.
//!
//! The crate covers the whole loop: load or synthesize a categorical dataset
//! ([`data`], [`synth`]), encode the protected attribute with one-hot or
//! regularized target encoding ([`encoders`]), train a classifier
//! ([`models`]), and score the result with AUC and group-fairness metrics
//! ([`metrics`]). [`theory`] holds closed-form results for the Bayes-optimal
//! and target-encoded classifiers, and [`sweep`] runs regularization grids
//! end to end.
//!
//! ```
//! use catfair::encoders::fit_target_encoder;
//! use catfair::synth::gen_irreducible;
//!
//! let data = gen_irreducible(0);
//! let enc = fit_target_encoder(&data, "ethnic", 0.0, 0.0, 0).unwrap();
//! let aa = enc.value("African-American").unwrap();
//! assert!((aa - 0.43).abs() < 0.02);
//! ```

pub mod data;
pub mod encoders;
pub mod error;
pub mod metrics;
pub mod models;
pub mod sweep;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent RNG stream for a (seed, purpose) pair.
pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/target-encoding.md")]
    pub mod target_encoding {}
    #[doc = include_str!("../../../book/src/fairness-metrics.md")]
    pub mod fairness_metrics {}
    #[doc = include_str!("../../../book/src/bias-theory.md")]
    pub mod bias_theory {}
    #[doc = include_str!("../../../book/src/models.md")]
    pub mod models {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}
