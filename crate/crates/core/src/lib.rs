//! Arousal-aware flight planning around people.
//!
//! The crate has two halves. [`estimation`] fits a regression model of a
//! person's physiological arousal from robot position and velocity, with a
//! hidden attention state deciding whether a sample is explained by the
//! robot at all. [`planner`] then uses the fitted predictor as a penalty in a
//! minimum-time trajectory optimization over Bernstein polynomial paths
//! ([`geometry`]), whose control-point hulls certify obstacle clearance.
//!
//! [`synth`] generates fly-by data from the generative model and [`io`]
//! reads and writes the CSV/JSON file formats.

pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
mod linalg;
pub mod model;
pub mod planner;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    basis_eval, predict_arousal, validate_params, AttentionState, Dataset, FeatureVector,
    MixtureComponent, ModelParams, ObservationSequence, Standardization, BASIS_DIM, FEATURE_DIM,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
