//! Non-random covariate designs, link functions, and triangular-array data
//! generation.
//!
//! A design produces a deterministic covariate sequence for every row length
//! `n`, with an empirical measure converging to a documented limit `P_X`:
//! the uniform grid on `(0, 1]` converges to Uniform(0, 1], the
//! low-discrepancy box fill to the uniform distribution on its box, and a
//! fixed covariate file to its own empirical distribution.
//!
//! Responses within a row are independent across positions; position `i`
//! draws from the stream `(seed, RESPONSE, i)`, so generation is both
//! deterministic and order-independent.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DistError, Family};
use crate::rng::{self, open_unit, tags};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("design row length must be at least 1")]
    EmptyRow,
    #[error("dimension mismatch: beta has {beta} entries, covariate has {x}")]
    DimMismatch { beta: usize, x: usize },
    #[error("link produced invalid parameters at row index {index}: {source}")]
    LinkFailure { index: usize, source: DistError },
    #[error("covariate file: {0}")]
    CovariateFile(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    dim: usize,
    data: Vec<f64>,
}

impl Covariates {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0, "covariate dimension must be positive");
        assert_eq!(data.len() % dim, 0, "data length must be a multiple of dim");
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "ragged covariate rows");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// The uniform design `x_i = i / n` on `(0, 1]`.
pub fn uniform_design(n: usize) -> Result<Vec<f64>, DesignError> {
    if n == 0 {
        return Err(DesignError::EmptyRow);
    }
    Ok((1..=n).map(|i| i as f64 / n as f64).collect())
}

/// Loglinear scale `exp(beta . x)`, strictly positive and continuous.
pub fn loglinear_scale(beta: &[f64], x: &[f64]) -> Result<f64, DesignError> {
    if beta.len() != x.len() {
        return Err(DesignError::DimMismatch {
            beta: beta.len(),
            x: x.len(),
        });
    }
    let dot: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
    Ok(dot.exp())
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// A deterministic covariate-generating rule.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovariateDesign {
    /// `x_i = i / n` on `(0, 1]`; limit `P_X` = Uniform(0, 1].
    UniformGrid,
    /// Halton fill of a box; limit `P_X` = uniform on the box.
    LowDiscrepancy { lower: Vec<f64>, upper: Vec<f64> },
    /// User-supplied covariates, recycled as the first `n` rows; limit
    /// `P_X` = empirical distribution of the file.
    Fixed { rows: Vec<Vec<f64>> },
}

impl CovariateDesign {
    pub fn dim(&self) -> usize {
        match self {
            Self::UniformGrid => 1,
            Self::LowDiscrepancy { lower, .. } => lower.len(),
            Self::Fixed { rows } => rows.first().map_or(1, Vec::len),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::UniformGrid => "uniform-grid".into(),
            Self::LowDiscrepancy { lower, upper } => {
                format!("low-discrepancy{lower:?}-{upper:?}")
            }
            Self::Fixed { rows } => format!("fixed({} rows)", rows.len()),
        }
    }

    /// Covariates for a row of length `n`.
    pub fn generate(&self, n: usize) -> Result<Covariates, DesignError> {
        if n == 0 {
            return Err(DesignError::EmptyRow);
        }
        match self {
            Self::UniformGrid => Ok(Covariates::new(1, uniform_design(n)?)),
            Self::LowDiscrepancy { lower, upper } => {
                let d = lower.len();
                if d == 0 || d > HALTON_BASES.len() || upper.len() != d {
                    return Err(DesignError::CovariateFile(format!(
                        "low-discrepancy box must have 1..={} matching bounds",
                        HALTON_BASES.len()
                    )));
                }
                let mut data = Vec::with_capacity(n * d);
                for i in 1..=n {
                    for j in 0..d {
                        let u = halton(i, HALTON_BASES[j]);
                        data.push(lower[j] + (upper[j] - lower[j]) * u);
                    }
                }
                Ok(Covariates::new(d, data))
            }
            Self::Fixed { rows } => {
                if rows.is_empty() {
                    return Err(DesignError::CovariateFile("no covariate rows".into()));
                }
                let picked: Vec<Vec<f64>> =
                    (0..n).map(|i| rows[i % rows.len()].clone()).collect();
                Ok(Covariates::from_rows(&picked))
            }
        }
    }

    /// One draw from the limiting design distribution `P_X`.
    pub fn sample_limit<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Self::UniformGrid => vec![open_unit(rng)],
            Self::LowDiscrepancy { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * open_unit(rng))
                .collect(),
            Self::Fixed { rows } => rows[rng.random_range(0..rows.len())].clone(),
        }
    }
}

/// Covariate file ingestion: one whitespace- or comma-delimited vector per
/// line, optional non-numeric header, NaN/Inf rejected.
pub fn read_covariate_rows(text: &str) -> Result<Vec<Vec<f64>>, DesignError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace() || c == ';')
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Err(_) if lineno == 0 && rows.is_empty() => continue, // header
            Err(e) => {
                return Err(DesignError::CovariateFile(format!(
                    "line {}: {e}",
                    lineno + 1
                )))
            }
            Ok(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(DesignError::CovariateFile(format!(
                        "line {}: non-finite covariate",
                        lineno + 1
                    )));
                }
                if let Some(first) = rows.first() {
                    if values.len() != first.len() {
                        return Err(DesignError::CovariateFile(format!(
                            "line {}: expected {} fields, got {}",
                            lineno + 1,
                            first.len(),
                            values.len()
                        )));
                    }
                }
                rows.push(values);
            }
        }
    }
    if rows.is_empty() {
        return Err(DesignError::CovariateFile("no covariate rows".into()));
    }
    Ok(rows)
}

/// A continuous link `(x, eta) -> theta` into a family's parameter space.
pub trait Link<P: Family>: Send + Sync {
    /// Dimension of the regression parameter `eta`.
    fn eta_dim(&self) -> usize;
    /// Map a covariate and a regression parameter to family parameters.
    fn map(&self, x: &[f64], eta: &[f64]) -> Result<P, DistError>;
    fn describe(&self) -> String;
}

use crate::distributions::{GevParams, NormalParams};

/// Normal with mean `eta . x` and fixed standard deviation.
#[derive(Debug, Clone)]
pub struct NormalMeanLink {
    pub sd: f64,
    pub cov_dim: usize,
}

impl Link<NormalParams> for NormalMeanLink {
    fn eta_dim(&self) -> usize {
        self.cov_dim
    }

    fn map(&self, x: &[f64], eta: &[f64]) -> Result<NormalParams, DistError> {
        let mean: f64 = eta.iter().zip(x).map(|(e, v)| e * v).sum();
        NormalParams::new(mean, self.sd)
    }

    fn describe(&self) -> String {
        format!("normal(mean = eta.x, sd = {})", self.sd)
    }
}

/// Normal location-scale regression: mean `eta[..d] . x`, standard deviation
/// `exp(eta[d..] . x)`.
#[derive(Debug, Clone)]
pub struct NormalLocationScaleLink {
    pub cov_dim: usize,
}

impl Link<NormalParams> for NormalLocationScaleLink {
    fn eta_dim(&self) -> usize {
        2 * self.cov_dim
    }

    fn map(&self, x: &[f64], eta: &[f64]) -> Result<NormalParams, DistError> {
        let d = self.cov_dim;
        let mean: f64 = eta[..d].iter().zip(x).map(|(e, v)| e * v).sum();
        let sd = loglinear_scale(&eta[d..], x).map_err(|_| DistError::ParamDim {
            family: "normal",
            expected: 2 * d,
            got: eta.len(),
        })?;
        NormalParams::new(mean, sd)
    }

    fn describe(&self) -> String {
        "normal(mean = eta[..d].x, sd = exp(eta[d..].x))".into()
    }
}

/// GEV regression with affine location, loglinear scale, constant shape:
/// `mu = eta[0] + eta[1..=d] . x`, `sigma = exp(eta[d+1] + eta[d+2..] . x)`,
/// `xi = eta[2d+2]`, restricted to `xi > -1`.
#[derive(Debug, Clone)]
pub struct GevRegressionLink {
    pub cov_dim: usize,
}

impl Link<GevParams> for GevRegressionLink {
    fn eta_dim(&self) -> usize {
        2 * (self.cov_dim + 1) + 1
    }

    fn map(&self, x: &[f64], eta: &[f64]) -> Result<GevParams, DistError> {
        let d = self.cov_dim;
        let mu = eta[0] + eta[1..=d].iter().zip(x).map(|(e, v)| e * v).sum::<f64>();
        let log_sigma =
            eta[d + 1] + eta[d + 2..2 * d + 2].iter().zip(x).map(|(e, v)| e * v).sum::<f64>();
        let xi = eta[2 * d + 2];
        if xi <= -1.0 {
            return Err(DistError::InvalidParameter {
                family: "gev",
                message: format!("estimation requires xi > -1, got {xi}"),
            });
        }
        GevParams::new(mu, log_sigma.exp(), xi)
    }

    fn describe(&self) -> String {
        "gev(mu affine in x, sigma loglinear in x, xi constant > -1)".into()
    }
}

/// Degenerate link for negative controls: mean `eta[0] + eta[1]` ignores the
/// covariate, so only the sum of the parameters is identified.
#[derive(Debug, Clone)]
pub struct RedundantMeanLink {
    pub sd: f64,
}

impl Link<NormalParams> for RedundantMeanLink {
    fn eta_dim(&self) -> usize {
        2
    }

    fn map(&self, _x: &[f64], eta: &[f64]) -> Result<NormalParams, DistError> {
        NormalParams::new(eta[0] + eta[1], self.sd)
    }

    fn describe(&self) -> String {
        format!("normal(mean = eta0 + eta1, sd = {}); not identified", self.sd)
    }
}

/// The regression parameter is the family parameter vector itself.
#[derive(Debug, Clone)]
pub struct ConstLink<P: Family> {
    marker: std::marker::PhantomData<P>,
}

impl<P: Family> Default for ConstLink<P> {
    fn default() -> Self {
        Self {
            marker: std::marker::PhantomData,
        }
    }
}

impl<P: Family> Link<P> for ConstLink<P> {
    fn eta_dim(&self) -> usize {
        P::PARAM_DIM
    }

    fn map(&self, _x: &[f64], eta: &[f64]) -> Result<P, DistError> {
        P::from_slice(eta)
    }

    fn describe(&self) -> String {
        format!("{}(eta), constant in x", P::NAME)
    }
}

/// One triangular-array row: covariates, responses, and generation metadata.
#[derive(Debug, Clone)]
pub struct DesignRow {
    pub n: usize,
    pub covariates: Covariates,
    pub responses: Vec<f64>,
    pub seed: u64,
    pub kernel: String,
}

/// Generate a row of length `n`: response `i` is an inverse-CDF draw from the
/// family at `link(x_i, eta0)` on the stream `(seed, RESPONSE, i)`.
pub fn generate_row<P: Family>(
    design: &CovariateDesign,
    link: &dyn Link<P>,
    eta0: &[f64],
    n: usize,
    seed: u64,
) -> Result<DesignRow, DesignError> {
    let covariates = design.generate(n)?;
    let mut responses = Vec::with_capacity(n);
    for i in 0..n {
        let member = link
            .map(covariates.row(i), eta0)
            .map_err(|source| DesignError::LinkFailure { index: i, source })?;
        let mut rng = rng::stream(seed, &[tags::RESPONSE, i as u64]);
        responses.push(member.draw(&mut rng));
    }
    Ok(DesignRow {
        n,
        covariates,
        responses,
        seed,
        kernel: format!("{} @ eta0={eta0:?}, design={}", link.describe(), design.id()),
    })
}

/// One grid entry of an identifiability scan.
#[derive(Debug, Clone, Serialize)]
pub struct IdentEntry {
    pub eta: Vec<f64>,
    /// Monte Carlo estimate of `P_X(theta(x, eta) != theta(x, eta0))`.
    pub mass: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentifiabilityReport {
    pub entries: Vec<IdentEntry>,
    pub any_violation: bool,
}

/// Estimate, for each grid point `eta != eta0`, the `P_X`-mass where the link
/// separates `eta` from `eta0`. Zero estimated mass is reported as an
/// identifiability violation. Parameter vectors are compared with an absolute
/// tolerance of 1e-12 per coordinate.
pub fn check_identifiability<P: Family>(
    link: &dyn Link<P>,
    design: &CovariateDesign,
    eta0: &[f64],
    grid: &[Vec<f64>],
    mc_size: usize,
    seed: u64,
) -> Result<IdentifiabilityReport, DesignError> {
    const TIE_TOL: f64 = 1e-12;
    let mut entries = Vec::with_capacity(grid.len());
    for (k, eta) in grid.iter().enumerate() {
        let at_truth = eta
            .iter()
            .zip(eta0)
            .all(|(a, b)| (a - b).abs() <= TIE_TOL);
        if at_truth {
            continue;
        }
        let mut rng = rng::stream(seed, &[tags::CHECK, k as u64]);
        let mut hits = 0usize;
        for i in 0..mc_size {
            let x = design.sample_limit(&mut rng);
            let t0 = link
                .map(&x, eta0)
                .map_err(|source| DesignError::LinkFailure { index: i, source })?
                .to_vec();
            let t = link
                .map(&x, eta)
                .map_err(|source| DesignError::LinkFailure { index: i, source })?
                .to_vec();
            if t.iter().zip(&t0).any(|(a, b)| (a - b).abs() > TIE_TOL) {
                hits += 1;
            }
        }
        let mass = hits as f64 / mc_size as f64;
        entries.push(IdentEntry {
            eta: eta.clone(),
            mass,
            violation: mass == 0.0,
        });
    }
    let any_violation = entries.iter().any(|e| e.violation);
    Ok(IdentifiabilityReport {
        entries,
        any_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GevParams;
    use crate::numerics::ks_distance;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_design_values() {
        assert_eq!(uniform_design(4).unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(uniform_design(1).unwrap(), vec![1.0]);
        assert!(uniform_design(0).is_err());
    }

    #[test]
    fn uniform_design_empirical_cdf_close_to_uniform() {
        let xs = uniform_design(1000).unwrap();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 1.0 / 1000.0 + 1e-12);
    }

    #[test]
    fn loglinear_scale_values() {
        assert_relative_eq!(loglinear_scale(&[0.0], &[3.0]).unwrap(), 1.0);
        assert_relative_eq!(
            loglinear_scale(&[1.0], &[0.5]).unwrap(),
            0.5_f64.exp(),
            epsilon = 1e-12
        );
        assert!(loglinear_scale(&[1.0, 2.0], &[0.5]).is_err());
    }

    #[test]
    fn loglinear_scale_monotone_in_beta_for_positive_x() {
        let x = [0.3, 0.9];
        let mut last = 0.0;
        for k in 0..10 {
            let b = -1.0 + k as f64 * 0.3;
            let v = loglinear_scale(&[b, b], &x).unwrap();
            assert!(v > 0.0);
            if k > 0 {
                assert!(v > last);
            }
            last = v;
        }
    }

    #[test]
    fn loglinear_scale_is_continuous_along_segments() {
        let mut rng = crate::rng::stream(2, &[]);
        for _ in 0..50 {
            let b: Vec<f64> = (0..3).map(|_| open_unit(&mut rng) * 4.0 - 2.0).collect();
            let x: Vec<f64> = (0..3).map(|_| open_unit(&mut rng) * 2.0 - 1.0).collect();
            let base = loglinear_scale(&b, &x).unwrap();
            let mut b2 = b.clone();
            b2[1] += 1e-6;
            let bumped = loglinear_scale(&b2, &x).unwrap();
            assert!((bumped - base).abs() < 1e-4 * base.max(1.0));
        }
    }

    #[test]
    fn generate_row_is_deterministic_and_mean_correct() {
        let design = CovariateDesign::UniformGrid;
        let link = NormalMeanLink { sd: 1.0, cov_dim: 1 };
        let row = generate_row(&design, &link, &[2.0], 4, 99).unwrap();
        let row2 = generate_row(&design, &link, &[2.0], 4, 99).unwrap();
        assert_eq!(row.responses, row2.responses);
        assert_eq!(row.covariates.row(2), &[0.75]);

        // Mean of responses at n = 1e5 matches the integral of the mean link
        // over P_X = U(0,1]: 2 * 1/2 = 1, within three standard errors.
        let big = generate_row(&design, &link, &[2.0], 100_000, 5).unwrap();
        let mean = big.responses.iter().sum::<f64>() / big.n as f64;
        // Var(Y) = Var(2X) + 1 = 4/12 + 1; se = sqrt(4/3 / 1e5).
        let se = (4.0 / 3.0 / 1e5_f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean={mean}");
    }

    #[test]
    fn distinct_seeds_are_uncorrelated() {
        let design = CovariateDesign::UniformGrid;
        let link = NormalMeanLink { sd: 1.0, cov_dim: 1 };
        let a = generate_row(&design, &link, &[0.0], 10_000, 1).unwrap();
        let b = generate_row(&design, &link, &[0.0], 10_000, 2).unwrap();
        let n = a.n as f64;
        let (ma, mb) = (
            a.responses.iter().sum::<f64>() / n,
            b.responses.iter().sum::<f64>() / n,
        );
        let cov: f64 = a
            .responses
            .iter()
            .zip(&b.responses)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / n;
        let va: f64 = a.responses.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / n;
        let vb: f64 = b.responses.iter().map(|y| (y - mb) * (y - mb)).sum::<f64>() / n;
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.02, "corr={corr}");
    }

    #[test]
    fn gev_row_respects_support_endpoint() {
        let design = CovariateDesign::UniformGrid;
        let link = ConstLink::<GevParams>::default();
        // xi = -0.5: all responses below mu + 2 sigma = 2.
        let row = generate_row(&design, &link, &[0.0, 1.0, -0.5], 500, 3).unwrap();
        assert!(row.responses.iter().all(|&y| y < 2.0));
    }

    #[test]
    fn link_failure_names_the_offending_index() {
        let design = CovariateDesign::UniformGrid;
        let link = ConstLink::<GevParams>::default();
        let err = generate_row(&design, &link, &[0.0, -1.0, 0.0], 3, 1).unwrap_err();
        match err {
            DesignError::LinkFailure { index, .. } => assert_eq!(index, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn covariate_file_parsing() {
        let rows = read_covariate_rows("x1,x2\n1.0,2.0\n3.0,4.0\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(read_covariate_rows("1.0,NaN\n").is_err());
        assert!(read_covariate_rows("1.0\n2.0,3.0\n").is_err());
        assert!(read_covariate_rows("").is_err());
    }

    #[test]
    fn identifiability_positive_for_separating_link() {
        // Scale link exp(beta x) with P_X = U(0,1]: exp(bx) = exp(b0 x) only
        // at x = 0, which has mass zero, so every grid point has positive mass.
        #[derive(Debug)]
        struct ScaleOnly;
        impl Link<NormalParams> for ScaleOnly {
            fn eta_dim(&self) -> usize {
                1
            }
            fn map(&self, x: &[f64], eta: &[f64]) -> Result<NormalParams, DistError> {
                NormalParams::new(0.0, loglinear_scale(eta, x).unwrap())
            }
            fn describe(&self) -> String {
                "normal(0, exp(beta x))".into()
            }
        }
        let grid: Vec<Vec<f64>> = (0..9).map(|k| vec![-2.0 + k as f64 * 0.5]).collect();
        let report = check_identifiability(
            &ScaleOnly,
            &CovariateDesign::UniformGrid,
            &[0.25],
            &grid,
            400,
            7,
        )
        .unwrap();
        assert!(!report.any_violation);
        assert!(report.entries.iter().all(|e| e.mass == 1.0));
    }

    #[test]
    fn identifiability_flags_constant_link() {
        // Link ignoring eta entirely: violation everywhere.
        #[derive(Debug)]
        struct IgnoreEta;
        impl Link<NormalParams> for IgnoreEta {
            fn eta_dim(&self) -> usize {
                1
            }
            fn map(&self, _x: &[f64], _eta: &[f64]) -> Result<NormalParams, DistError> {
                NormalParams::new(0.0, 1.0)
            }
            fn describe(&self) -> String {
                "normal(0, 1) ignoring eta".into()
            }
        }
        let grid = vec![vec![-1.0], vec![0.5], vec![2.0]];
        let report = check_identifiability(
            &IgnoreEta,
            &CovariateDesign::UniformGrid,
            &[0.0],
            &grid,
            200,
            7,
        )
        .unwrap();
        assert!(report.any_violation);
        assert_eq!(report.entries.len(), 3);
        assert!(report.entries.iter().all(|e| e.violation));
    }

    #[test]
    fn injective_constant_link_is_identified() {
        let link = ConstLink::<NormalParams>::default();
        let grid = vec![vec![0.5, 1.0], vec![0.0, 2.0]];
        let report = check_identifiability(
            &link,
            &CovariateDesign::UniformGrid,
            &[0.0, 1.0],
            &grid,
            100,
            7,
        )
        .unwrap();
        assert!(!report.any_violation);
    }

    #[test]
    fn halton_fill_stays_in_box() {
        let design = CovariateDesign::LowDiscrepancy {
            lower: vec![-1.0, 0.0],
            upper: vec![1.0, 2.0],
        };
        let cov = design.generate(257).unwrap();
        for i in 0..cov.len() {
            let r = cov.row(i);
            assert!(r[0] >= -1.0 && r[0] <= 1.0);
            assert!(r[1] >= 0.0 && r[1] <= 2.0);
        }
    }
}
