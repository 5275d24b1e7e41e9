//! M-estimation for distributional regression with non-random covariates.
//!
//! The crate fits parametric distributional regression models by maximizing
//! sample-average criteria built from strictly proper scoring rules, with
//! first-class support for families whose support depends on the parameter
//! (GEV, generalized Pareto, Fréchet), so criterion values of `-inf` are
//! ordinary and never coerced into finite surrogates.
//!
//! Modules:
//! - [`distributions`]: parametric families with exact `-inf` log-densities.
//! - [`designs`]: fixed covariate designs, link functions, triangular-array
//!   data generation.
//! - [`scoring`]: logarithmic and energy scores, propriety diagnostics.
//! - [`estimator`]: the criterion maximizer over compact boxes.
//! - [`blockmax`]: heavy-tailed block-maxima generation and the Fréchet
//!   regression fitter.
//! - [`harness`]: reproducible Monte Carlo consistency experiments.

pub mod blockmax;
pub mod designs;
pub mod distributions;
pub mod estimator;
pub mod harness;
pub mod numerics;
pub mod rng;
pub mod scoring;
