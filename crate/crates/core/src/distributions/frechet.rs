//! Fréchet distribution on `(0, inf)`.
//!
//! With `u = y / tau`, the log-density is
//! `log alpha - log tau - (alpha + 1) log u - u^{-alpha}` for `y > 0`,
//! the distribution function is `exp(-u^{-alpha})`, and the quantile is
//! `tau (-log p)^{-1/alpha}`.

use super::{check_dim, check_prob, require, DistError, Family, LogDensity};

/// Scale-shape parameters `(tau, alpha)`, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetParams {
    pub tau: f64,
    pub alpha: f64,
}

impl FrechetParams {
    pub fn new(tau: f64, alpha: f64) -> Result<Self, DistError> {
        require(
            "frechet",
            tau.is_finite() && alpha.is_finite() && tau > 0.0 && alpha > 0.0,
            || format!("need finite (tau, alpha) > 0, got ({tau}, {alpha})"),
            Self { tau, alpha },
        )
    }
}

impl Family for FrechetParams {
    const NAME: &'static str = "frechet";
    const PARAM_DIM: usize = 2;

    fn from_slice(raw: &[f64]) -> Result<Self, DistError> {
        check_dim(Self::NAME, Self::PARAM_DIM, raw)?;
        Self::new(raw[0], raw[1])
    }

    fn to_vec(&self) -> Vec<f64> {
        vec![self.tau, self.alpha]
    }

    fn log_pdf(&self, y: f64) -> LogDensity {
        if !y.is_finite() {
            return f64::NAN;
        }
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let log_u = y.ln() - self.tau.ln();
        self.alpha.ln() - self.tau.ln() - (self.alpha + 1.0) * log_u - (-self.alpha * log_u).exp()
    }

    fn log_pdf_grad(&self, y: f64) -> Vec<f64> {
        let (tau, alpha) = (self.tau, self.alpha);
        let log_u = y.ln() - tau.ln();
        let pow = (-alpha * log_u).exp(); // u^{-alpha}
        let d_tau = alpha * (1.0 - pow) / tau;
        let d_alpha = 1.0 / alpha - log_u * (1.0 - pow);
        vec![d_tau, d_alpha]
    }

    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let log_u = y.ln() - self.tau.ln();
        (-(-self.alpha * log_u).exp()).exp()
    }

    fn quantile(&self, p: f64) -> Result<f64, DistError> {
        check_prob(p)?;
        Ok(self.tau * (-(-p.ln()).ln() / self.alpha).exp())
    }

    fn in_support(&self, y: f64) -> bool {
        y.is_finite() && y > 0.0
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}
