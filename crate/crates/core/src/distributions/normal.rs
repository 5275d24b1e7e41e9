//! Normal distribution, the light-tailed baseline family.
//!
//! The log-density is evaluated directly; CDF and quantile delegate to
//! statrs' erf-based implementations.

use statrs::distribution::ContinuousCDF;

use super::{check_dim, check_prob, require, DistError, Family, LogDensity};

const LN_2PI: f64 = 1.8378770664093453;

/// Mean and standard deviation, `sd > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub sd: f64,
}

impl NormalParams {
    pub fn new(mean: f64, sd: f64) -> Result<Self, DistError> {
        require(
            "normal",
            mean.is_finite() && sd.is_finite() && sd > 0.0,
            || format!("need finite (mean, sd) with sd > 0, got ({mean}, {sd})"),
            Self { mean, sd },
        )
    }

    fn inner(&self) -> statrs::distribution::Normal {
        statrs::distribution::Normal::new(self.mean, self.sd)
            .expect("parameters validated at construction")
    }
}

impl Family for NormalParams {
    const NAME: &'static str = "normal";
    const PARAM_DIM: usize = 2;

    fn from_slice(raw: &[f64]) -> Result<Self, DistError> {
        check_dim(Self::NAME, Self::PARAM_DIM, raw)?;
        Self::new(raw[0], raw[1])
    }

    fn to_vec(&self) -> Vec<f64> {
        vec![self.mean, self.sd]
    }

    fn log_pdf(&self, y: f64) -> LogDensity {
        if !y.is_finite() {
            return f64::NAN;
        }
        let z = (y - self.mean) / self.sd;
        -self.sd.ln() - 0.5 * LN_2PI - 0.5 * z * z
    }

    fn log_pdf_grad(&self, y: f64) -> Vec<f64> {
        let z = (y - self.mean) / self.sd;
        vec![z / self.sd, (z * z - 1.0) / self.sd]
    }

    fn cdf(&self, y: f64) -> f64 {
        self.inner().cdf(y)
    }

    fn quantile(&self, p: f64) -> Result<f64, DistError> {
        check_prob(p)?;
        Ok(self.inner().inverse_cdf(p))
    }

    fn in_support(&self, y: f64) -> bool {
        y.is_finite()
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}
