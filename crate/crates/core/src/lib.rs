//! Causal logit stick-breaking mixtures.
//!
//! The outcome is modelled as a covariate-dependent mixture of normal linear
//! regressions whose weights follow a logistic stick-breaking process. A
//! Gibbs sampler with Pólya-Gamma augmentation yields posterior draws from
//! which conditional, average and quantile treatment effects are computed.

pub mod cli;
pub mod config;
pub mod data;
pub mod distributions;
pub mod error;
pub mod estimands;
pub mod features;
pub mod linalg;
pub mod lsbp;
pub mod pipeline;
pub mod propensity;
pub mod simharness;
pub mod store;

pub use config::SamplerConfig;
pub use data::ObservationSet;
pub use error::{Error, ErrorClass, Result};
pub use estimands::EffectSummary;
pub use lsbp::{run_gibbs, ChainState, ModelData, PosteriorDraws};
pub use pipeline::{fit_model, Fit};
