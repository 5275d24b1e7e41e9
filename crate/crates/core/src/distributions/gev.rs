//! Generalized extreme value distribution.
//!
//! Writing `z = (y - mu) / sigma` and `w = log(1 + xi z) / xi` (with the
//! continuous extension `w = z` at `xi = 0`), the log-density on the support
//! `{y : sigma + xi (y - mu) > 0}` is
//!
//! ```text
//! log p(y) = -log sigma - (1 + xi) w - exp(-w)
//! ```
//!
//! and the distribution function is `exp(-exp(-w))`.

use super::{check_dim, check_prob, require, DistError, Family, LogDensity};
use crate::numerics::{shape_expm1, shape_log1p, XI_ZERO_TOL};

/// Location-scale-shape parameters `(mu, sigma, xi)` with `sigma > 0`.
///
/// The raw family allows any finite shape; estimation contexts restrict
/// themselves to `xi > -1` through their search boxes and links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self, DistError> {
        require(
            "gev",
            mu.is_finite() && sigma.is_finite() && xi.is_finite() && sigma > 0.0,
            || format!("need finite (mu, sigma, xi) with sigma > 0, got ({mu}, {sigma}, {xi})"),
            Self { mu, sigma, xi },
        )
    }

    #[inline]
    fn standardize(&self, y: f64) -> f64 {
        (y - self.mu) / self.sigma
    }

    /// Strict support test. The computed endpoint `mu - sigma / xi` and both
    /// algebraic forms of the boundary product are checked together, so the
    /// density, cdf, support indicator and reported endpoint cannot disagree
    /// by a rounding ulp.
    #[inline]
    fn strictly_inside(&self, y: f64) -> bool {
        if !y.is_finite() {
            return false;
        }
        if self.xi.abs() <= XI_ZERO_TOL {
            return true;
        }
        let endpoint = self.mu - self.sigma / self.xi;
        let beyond = if self.xi > 0.0 {
            y > endpoint
        } else {
            y < endpoint
        };
        beyond
            && self.sigma + self.xi * (y - self.mu) > 0.0
            && 1.0 + self.xi * self.standardize(y) > 0.0
    }
}

impl Family for GevParams {
    const NAME: &'static str = "gev";
    const PARAM_DIM: usize = 3;

    fn from_slice(raw: &[f64]) -> Result<Self, DistError> {
        check_dim(Self::NAME, Self::PARAM_DIM, raw)?;
        Self::new(raw[0], raw[1], raw[2])
    }

    fn to_vec(&self) -> Vec<f64> {
        vec![self.mu, self.sigma, self.xi]
    }

    fn log_pdf(&self, y: f64) -> LogDensity {
        if !y.is_finite() {
            return f64::NAN;
        }
        if !self.strictly_inside(y) {
            return f64::NEG_INFINITY;
        }
        let w = shape_log1p(self.xi, self.standardize(y));
        -self.sigma.ln() - (1.0 + self.xi) * w - (-w).exp()
    }

    fn log_pdf_grad(&self, y: f64) -> Vec<f64> {
        let (sigma, xi) = (self.sigma, self.xi);
        let z = self.standardize(y);
        let h = 1.0 + xi * z;
        let w = shape_log1p(xi, z);
        let t = (-w).exp();
        // d/dz log p = (t - (1 + xi)) / h
        let dz = (t - (1.0 + xi)) / h;
        let d_mu = -dz / sigma;
        let d_sigma = -(1.0 + z * dz) / sigma;
        let dw_dxi = if xi.abs() <= 1e-6 {
            // series: w = z - xi z^2/2 + xi^2 z^3/3 - ...
            -z * z / 2.0 + 2.0 * xi * z * z * z / 3.0
        } else {
            (z / h - w) / xi
        };
        let d_xi = -w + (t - (1.0 + xi)) * dw_dxi;
        vec![d_mu, d_sigma, d_xi]
    }

    fn cdf(&self, y: f64) -> f64 {
        if !y.is_finite() {
            return if y == f64::INFINITY {
                1.0
            } else if y == f64::NEG_INFINITY {
                0.0
            } else {
                f64::NAN
            };
        }
        if self.xi.abs() > XI_ZERO_TOL && !self.strictly_inside(y) {
            return if self.xi > 0.0 { 0.0 } else { 1.0 };
        }
        let w = shape_log1p(self.xi, self.standardize(y));
        (-(-w).exp()).exp()
    }

    fn quantile(&self, p: f64) -> Result<f64, DistError> {
        check_prob(p)?;
        let w = -(-p.ln()).ln();
        Ok(self.mu + self.sigma * shape_expm1(self.xi, w))
    }

    fn in_support(&self, y: f64) -> bool {
        self.strictly_inside(y)
    }

    fn support(&self) -> (f64, f64) {
        let endpoint = self.mu - self.sigma / self.xi;
        if self.xi.abs() <= XI_ZERO_TOL {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.xi > 0.0 {
            (endpoint, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, endpoint)
        }
    }
}
