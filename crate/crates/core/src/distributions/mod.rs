//! Parametric families with exact handling of parameter-dependent supports.
//!
//! Log-densities take values in `[-inf, inf)`: the IEEE negative infinity
//! stands for "outside the support" so that criterion sums propagate it
//! without sentinel types, and `+inf` is never produced. A NaN response
//! propagates to a NaN log-density (never silently mapped to `-inf`); the
//! estimator treats NaN as a bug and raises a hard error.
//!
//! All samplers are inverse-CDF transforms of a uniform draw from the open
//! unit interval, so every family shares one deterministic stream contract
//! and samples cannot land outside the support.

mod frechet;
mod gev;
mod gpd;
mod normal;

pub use frechet::FrechetParams;
pub use gev::GevParams;
pub use gpd::GpParams;
pub use normal::NormalParams;

use rand::Rng;
use thiserror::Error;

use crate::rng::open_unit;

/// Extended-real log-density value in `[-inf, inf)`.
pub type LogDensity = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid parameter for {family}: {message}")]
    InvalidParameter {
        family: &'static str,
        message: String,
    },
    #[error("probability {p} outside the open interval (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
    #[error("{family} expects {expected} parameters, got {got}")]
    ParamDim {
        family: &'static str,
        expected: usize,
        got: usize,
    },
}

/// A member of a parametric family: validated parameters plus log-density,
/// CDF, quantile, support indicator and inverse-CDF sampler.
pub trait Family: Clone + Send + Sync + std::fmt::Debug + 'static {
    const NAME: &'static str;
    const PARAM_DIM: usize;

    /// Build from a flat parameter slice, validating the invariants.
    fn from_slice(raw: &[f64]) -> Result<Self, DistError>;

    /// Flat parameter vector, inverse of [`Family::from_slice`].
    fn to_vec(&self) -> Vec<f64>;

    /// Log-density at `y`; `-inf` exactly off the support.
    fn log_pdf(&self, y: f64) -> LogDensity;

    /// Gradient of the log-density with respect to the parameters, valid
    /// strictly inside the support.
    fn log_pdf_grad(&self, y: f64) -> Vec<f64>;

    /// Distribution function; 0 below the support, 1 above it.
    fn cdf(&self, y: f64) -> f64;

    /// Quantile at `p` in the open interval `(0, 1)`.
    fn quantile(&self, p: f64) -> Result<f64, DistError>;

    /// Whether `y` lies strictly inside the support.
    fn in_support(&self, y: f64) -> bool;

    /// Support interval `(lo, hi)` as extended reals; the support is the open
    /// interval between them.
    fn support(&self) -> (f64, f64);

    /// Inverse-CDF draw from an explicit stream.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        self.quantile(u)
            .expect("open-unit draw is a valid probability")
    }

    /// `count` inverse-CDF draws from an explicit stream.
    fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }
}

pub(crate) fn require<T>(
    family: &'static str,
    ok: bool,
    message: impl FnOnce() -> String,
    value: T,
) -> Result<T, DistError> {
    if ok {
        Ok(value)
    } else {
        Err(DistError::InvalidParameter {
            family,
            message: message(),
        })
    }
}

pub(crate) fn check_prob(p: f64) -> Result<(), DistError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(DistError::ProbabilityOutOfRange { p })
    }
}

pub(crate) fn check_dim(
    family: &'static str,
    expected: usize,
    raw: &[f64],
) -> Result<(), DistError> {
    if raw.len() == expected {
        Ok(())
    } else {
        Err(DistError::ParamDim {
            family,
            expected,
            got: raw.len(),
        })
    }
}
