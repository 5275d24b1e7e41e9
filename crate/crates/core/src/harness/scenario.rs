//! Data-generating scenarios: a model family with its link, a covariate
//! design, the true parameter, and the search box, bundled so experiments,
//! diagnostics and the CLI all drive the same object.

use serde::{Deserialize, Serialize};

use crate::blockmax::{
    fit_frechet, median_scaling, sample_block_maxima, Baseline, BlockMaxRow, LoglinearScale,
    ScaleLink, TailModel,
};
use crate::designs::{
    generate_row, CovariateDesign, Covariates, DesignRow, GevRegressionLink, Link,
    NormalLocationScaleLink, NormalMeanLink, RedundantMeanLink,
};
use crate::distributions::{Family, FrechetParams, NormalParams};
use crate::estimator::{fit_score, BoxDomain, FitResult, FitStatus};
use crate::harness::{FitSettings, HarnessError};
use crate::rng::Stream;
use crate::scoring::{draw_uniform_pairs, energy_score_from_packet, ScoreRule};

/// Block size as a function of the number of maxima.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BlockSizeRule {
    /// `r_n = ceil((log n)^2)`: grows faster than logarithmically.
    LogSquared,
    Fixed { r: usize },
}

impl BlockSizeRule {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            Self::LogSquared => {
                let l = (n as f64).ln();
                (l * l).ceil().max(1.0) as usize
            }
            Self::Fixed { r } => r.max(1),
        }
    }
}

/// How the overall Fréchet scale search interval is anchored.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalingRule {
    /// The baseline's norming constant `a_r` (known in simulations).
    Theoretical,
    /// Sample median of the observed maxima.
    MaximaMedian,
}

/// The model part of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Normal with mean `eta . x` and fixed `sd`.
    NormalLocation { sd: f64 },
    /// Normal with mean `eta[..d] . x` and sd `exp(eta[d..] . x)`.
    NormalLocationScale,
    /// GEV with affine location, loglinear scale, constant shape.
    GevRegression,
    /// Identifiability negative control: mean `eta[0] + eta[1]` ignores `x`.
    NormalRedundantMean { sd: f64 },
    /// Heavy-tailed block maxima with loglinear limit scale;
    /// `eta = (alpha, beta.., gamma)` with true `gamma = 1`.
    FrechetBlockMaxima {
        baseline: Baseline,
        block_size: BlockSizeRule,
        scaling: ScalingRule,
    },
}

/// One simulated data row.
#[derive(Debug, Clone)]
pub enum SimulatedRow {
    Design(DesignRow),
    BlockMax { row: BlockMaxRow, a_r: f64 },
}

impl SimulatedRow {
    pub fn n(&self) -> usize {
        match self {
            Self::Design(r) => r.n,
            Self::BlockMax { row, .. } => row.n,
        }
    }

    pub fn covariates(&self) -> &Covariates {
        match self {
            Self::Design(r) => &r.covariates,
            Self::BlockMax { row, .. } => &row.covariates,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Self::Design(r) => &r.responses,
            Self::BlockMax { row, .. } => &row.maxima,
        }
    }
}

/// Condensed identifiability scan result.
#[derive(Debug, Clone, Serialize)]
pub struct IdentSummary {
    pub checked: usize,
    pub violations: usize,
    pub any_violation: bool,
}

/// Outcome of fitting a scenario to one row.
#[derive(Debug, Clone)]
pub struct ScenarioFit {
    pub eta_hat: Vec<f64>,
    /// `d_H(eta_hat, eta0)`; block-maxima fits measure the scale coordinate
    /// as `log(tau_hat / a_r)`.
    pub error: f64,
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub tau_hat: Option<f64>,
    pub result: FitResult,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    #[serde(default = "default_design")]
    pub design: CovariateDesign,
    pub eta0: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn default_design() -> CovariateDesign {
    CovariateDesign::UniformGrid
}

impl Scenario {
    pub fn eta_dim(&self) -> usize {
        let d = self.design.dim();
        match &self.model {
            ModelSpec::NormalLocation { .. } => d,
            ModelSpec::NormalLocationScale => 2 * d,
            ModelSpec::GevRegression => 2 * (d + 1) + 1,
            ModelSpec::NormalRedundantMean { .. } => 2,
            ModelSpec::FrechetBlockMaxima { .. } => 2 + d,
        }
    }

    pub fn domain(&self) -> Result<BoxDomain, HarnessError> {
        Ok(BoxDomain::new(self.lower.clone(), self.upper.clone())?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let dim = self.eta_dim();
        if self.eta0.len() != dim {
            return Err(HarnessError::InvalidConfig(format!(
                "eta0 has {} entries, model expects {dim}",
                self.eta0.len()
            )));
        }
        let domain = self.domain()?;
        if domain.dim() != dim {
            return Err(HarnessError::InvalidConfig(format!(
                "search box has {} dimensions, model expects {dim}",
                domain.dim()
            )));
        }
        match &self.model {
            ModelSpec::FrechetBlockMaxima { baseline, .. } => {
                baseline.validate()?;
                let gamma0 = *self.eta0.last().expect("dim >= 2");
                if (gamma0 - 1.0).abs() > 1e-12 {
                    return Err(HarnessError::InvalidConfig(format!(
                        "block-maxima scenarios fix the true gamma coordinate at 1, got {gamma0}"
                    )));
                }
                if self.eta0[0] <= 0.0 {
                    return Err(HarnessError::InvalidConfig(
                        "block-maxima shape alpha0 must be positive".into(),
                    ));
                }
                if self.lower[dim - 1] <= 0.0 {
                    return Err(HarnessError::InvalidConfig(
                        "gamma search interval must be positive".into(),
                    ));
                }
            }
            ModelSpec::NormalLocation { sd } | ModelSpec::NormalRedundantMean { sd } => {
                if !(sd.is_finite() && *sd > 0.0) {
                    return Err(HarnessError::InvalidConfig(format!(
                        "sd must be positive, got {sd}"
                    )));
                }
            }
            ModelSpec::GevRegression => {
                if self.lower[dim - 1] <= -1.0 {
                    return Err(HarnessError::InvalidConfig(
                        "GEV shape search interval must stay above -1".into(),
                    ));
                }
            }
            ModelSpec::NormalLocationScale => {}
        }
        Ok(())
    }

    /// Rules the scenario can be fitted with.
    pub fn check_rule(&self, rule: &ScoreRule) -> Result<(), HarnessError> {
        if matches!(self.model, ModelSpec::FrechetBlockMaxima { .. })
            && matches!(rule, ScoreRule::Energy(_))
        {
            return Err(HarnessError::Unsupported(
                "block-maxima scenarios fit by likelihood only".into(),
            ));
        }
        Ok(())
    }

    fn tail_model(&self) -> Result<(TailModel, &BlockSizeRule, &ScalingRule), HarnessError> {
        match &self.model {
            ModelSpec::FrechetBlockMaxima {
                baseline,
                block_size,
                scaling,
            } => {
                let d = self.design.dim();
                let alpha0 = self.eta0[0];
                let beta0 = self.eta0[1..1 + d].to_vec();
                let model = TailModel::from_scale_link(
                    *baseline,
                    alpha0,
                    LoglinearScale { cov_dim: d },
                    beta0,
                )?;
                Ok((model, block_size, scaling))
            }
            _ => Err(HarnessError::Unsupported(
                "not a block-maxima scenario".into(),
            )),
        }
    }

    /// Simulate one data row of length `n` from the scenario truth.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<SimulatedRow, HarnessError> {
        match &self.model {
            ModelSpec::NormalLocation { sd } => {
                let link = NormalMeanLink {
                    sd: *sd,
                    cov_dim: self.design.dim(),
                };
                Ok(SimulatedRow::Design(generate_row(
                    &self.design,
                    &link,
                    &self.eta0,
                    n,
                    seed,
                )?))
            }
            ModelSpec::NormalLocationScale => {
                let link = NormalLocationScaleLink {
                    cov_dim: self.design.dim(),
                };
                Ok(SimulatedRow::Design(generate_row(
                    &self.design,
                    &link,
                    &self.eta0,
                    n,
                    seed,
                )?))
            }
            ModelSpec::GevRegression => {
                let link = GevRegressionLink {
                    cov_dim: self.design.dim(),
                };
                Ok(SimulatedRow::Design(generate_row(
                    &self.design,
                    &link,
                    &self.eta0,
                    n,
                    seed,
                )?))
            }
            ModelSpec::NormalRedundantMean { sd } => {
                let link = RedundantMeanLink { sd: *sd };
                Ok(SimulatedRow::Design(generate_row(
                    &self.design,
                    &link,
                    &self.eta0,
                    n,
                    seed,
                )?))
            }
            ModelSpec::FrechetBlockMaxima { .. } => {
                let (model, block_size, _) = self.tail_model()?;
                let r = block_size.resolve(n);
                let row = sample_block_maxima(&model, &self.design, n, r, seed, false)?;
                let a_r = model.baseline.scaling(r);
                Ok(SimulatedRow::BlockMax { row, a_r })
            }
        }
    }

    /// Rebuild a row from externally supplied data (file ingestion).
    pub fn row_from_data(
        &self,
        covariates: Covariates,
        values: Vec<f64>,
        seed: u64,
    ) -> Result<SimulatedRow, HarnessError> {
        let n = values.len();
        if covariates.len() != n || n == 0 {
            return Err(HarnessError::InvalidConfig(format!(
                "{} covariate rows against {n} responses",
                covariates.len()
            )));
        }
        match &self.model {
            ModelSpec::FrechetBlockMaxima {
                baseline,
                block_size,
                ..
            } => {
                let r = block_size.resolve(n);
                Ok(SimulatedRow::BlockMax {
                    row: BlockMaxRow {
                        n,
                        block_size: r,
                        covariates,
                        maxima: values,
                        seed,
                    },
                    a_r: baseline.scaling(r),
                })
            }
            _ => Ok(SimulatedRow::Design(DesignRow {
                n,
                covariates,
                responses: values,
                seed,
                kernel: "external data".into(),
            })),
        }
    }

    /// Fit the scenario to a row; `with_reference` supplies the truth as the
    /// optimizer's reference point so the criterion gap is reportable.
    pub fn fit(
        &self,
        row: &SimulatedRow,
        rule: &ScoreRule,
        settings: &FitSettings,
        score_seed: u64,
        with_reference: bool,
    ) -> Result<ScenarioFit, HarnessError> {
        self.check_rule(rule)?;
        let domain = self.domain()?;
        match (&self.model, row) {
            (ModelSpec::FrechetBlockMaxima { .. }, SimulatedRow::BlockMax { row, a_r }) => {
                let (_, _, scaling_rule) = self.tail_model()?;
                let d = self.design.dim();
                let scaling = match scaling_rule {
                    ScalingRule::Theoretical => *a_r,
                    ScalingRule::MaximaMedian => median_scaling(row),
                };
                let link = LoglinearScale { cov_dim: d };
                let dim = self.eta_dim();
                let gamma_bounds = (domain.lower(dim - 1), domain.upper(dim - 1));
                let reference = with_reference.then(|| {
                    let mut r = self.eta0.clone();
                    r[dim - 1] = (a_r / scaling).clamp(gamma_bounds.0, gamma_bounds.1);
                    r
                });
                let beta_bounds: Vec<(f64, f64)> = (1..1 + d)
                    .map(|j| (domain.lower(j), domain.upper(j)))
                    .collect();
                let cfg = settings.to_fit_config(reference, score_seed);
                let fit = fit_frechet(
                    row,
                    &link,
                    (domain.lower(0), domain.upper(0)),
                    &beta_bounds,
                    gamma_bounds,
                    scaling,
                    &cfg,
                )?;
                let gamma_vs_ar = fit.tau_hat / a_r;
                let mut err2 = (fit.alpha_hat - self.eta0[0]).powi(2);
                for (b, b0) in fit.beta_hat.iter().zip(&self.eta0[1..1 + d]) {
                    err2 += (b - b0) * (b - b0);
                }
                err2 += gamma_vs_ar.ln().powi(2);
                let result = fit.result.clone();
                Ok(ScenarioFit {
                    eta_hat: result.eta_hat.clone(),
                    error: err2.sqrt(),
                    gap: result.gap(),
                    degenerate: result.status == FitStatus::Degenerate,
                    tau_hat: Some(fit.tau_hat),
                    result,
                })
            }
            (ModelSpec::FrechetBlockMaxima { .. }, SimulatedRow::Design(_)) => Err(
                HarnessError::Unsupported("block-maxima scenario given a design row".into()),
            ),
            (_, SimulatedRow::BlockMax { .. }) => Err(HarnessError::Unsupported(
                "design scenario given a block-maxima row".into(),
            )),
            (ModelSpec::NormalLocation { sd }, SimulatedRow::Design(row)) => {
                let link = NormalMeanLink {
                    sd: *sd,
                    cov_dim: self.design.dim(),
                };
                self.fit_design(&link, row, rule, settings, score_seed, with_reference, &domain)
            }
            (ModelSpec::NormalLocationScale, SimulatedRow::Design(row)) => {
                let link = NormalLocationScaleLink {
                    cov_dim: self.design.dim(),
                };
                self.fit_design(&link, row, rule, settings, score_seed, with_reference, &domain)
            }
            (ModelSpec::GevRegression, SimulatedRow::Design(row)) => {
                let link = GevRegressionLink {
                    cov_dim: self.design.dim(),
                };
                self.fit_design(&link, row, rule, settings, score_seed, with_reference, &domain)
            }
            (ModelSpec::NormalRedundantMean { sd }, SimulatedRow::Design(row)) => {
                let link = RedundantMeanLink { sd: *sd };
                self.fit_design(&link, row, rule, settings, score_seed, with_reference, &domain)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn fit_design<P: Family>(
        &self,
        link: &dyn Link<P>,
        row: &DesignRow,
        rule: &ScoreRule,
        settings: &FitSettings,
        score_seed: u64,
        with_reference: bool,
        domain: &BoxDomain,
    ) -> Result<ScenarioFit, HarnessError> {
        let reference = with_reference.then(|| self.eta0.clone());
        let cfg = settings.to_fit_config(reference, score_seed);
        let result = fit_score(rule, link, row, domain, &cfg)?;
        Ok(ScenarioFit {
            eta_hat: result.eta_hat.clone(),
            error: BoxDomain::distance(&result.eta_hat, &self.eta0),
            gap: result.gap(),
            degenerate: result.status == FitStatus::Degenerate,
            tau_hat: None,
            result,
        })
    }

    /// One draw `(x, y)` from the scenario's limit law: `x` from the design
    /// limit, `y` from the limiting kernel at the truth.
    pub fn limit_draw(&self, rng: &mut Stream) -> (Vec<f64>, f64) {
        let x = self.design.sample_limit(rng);
        let y = self.draw_response_at_truth(&x, rng);
        (x, y)
    }

    fn draw_response_at_truth(&self, x: &[f64], rng: &mut Stream) -> f64 {
        match &self.model {
            ModelSpec::NormalLocation { sd } => NormalMeanLink {
                sd: *sd,
                cov_dim: self.design.dim(),
            }
            .map(x, &self.eta0)
            .expect("truth maps into the family")
            .draw(rng),
            ModelSpec::NormalLocationScale => NormalLocationScaleLink {
                cov_dim: self.design.dim(),
            }
            .map(x, &self.eta0)
            .expect("truth maps into the family")
            .draw(rng),
            ModelSpec::GevRegression => GevRegressionLink {
                cov_dim: self.design.dim(),
            }
            .map(x, &self.eta0)
            .expect("truth maps into the family")
            .draw(rng),
            ModelSpec::NormalRedundantMean { sd } => {
                NormalParams::new(self.eta0[0] + self.eta0[1], *sd)
                    .expect("truth maps into the family")
                    .draw(rng)
            }
            ModelSpec::FrechetBlockMaxima { .. } => {
                let (model, _, _) = self.tail_model().expect("block-maxima scenario");
                FrechetParams::new(model.sigma(x), model.alpha0)
                    .expect("positive limit scale")
                    .draw(rng)
            }
        }
    }

    /// The criterion summand `m_eta(x, y)` under `rule`. Energy rules draw a
    /// fresh uniform packet from `rng` per call.
    pub fn summand(
        &self,
        rule: &ScoreRule,
        eta: &[f64],
        x: &[f64],
        y: f64,
        rng: &mut Stream,
    ) -> Result<f64, HarnessError> {
        match &self.model {
            ModelSpec::NormalLocation { sd } => self.score_member(
                rule,
                NormalMeanLink {
                    sd: *sd,
                    cov_dim: self.design.dim(),
                }
                .map(x, eta),
                y,
                rng,
            ),
            ModelSpec::NormalLocationScale => self.score_member(
                rule,
                NormalLocationScaleLink {
                    cov_dim: self.design.dim(),
                }
                .map(x, eta),
                y,
                rng,
            ),
            ModelSpec::GevRegression => self.score_member(
                rule,
                GevRegressionLink {
                    cov_dim: self.design.dim(),
                }
                .map(x, eta),
                y,
                rng,
            ),
            ModelSpec::NormalRedundantMean { sd } => {
                self.score_member(rule, NormalParams::new(eta[0] + eta[1], *sd), y, rng)
            }
            ModelSpec::FrechetBlockMaxima { .. } => {
                let d = self.design.dim();
                let link = LoglinearScale { cov_dim: d };
                let sigma = link.scale(x, &eta[1..1 + d]);
                let gamma = eta[1 + d];
                self.score_member(rule, FrechetParams::new(gamma * sigma, eta[0]), y, rng)
            }
        }
    }

    fn score_member<P: Family>(
        &self,
        rule: &ScoreRule,
        member: Result<P, crate::distributions::DistError>,
        y: f64,
        rng: &mut Stream,
    ) -> Result<f64, HarnessError> {
        let member = member
            .map_err(|e| HarnessError::InvalidConfig(format!("link left the family: {e}")))?;
        match rule {
            ScoreRule::Log => Ok(member.log_pdf(y)),
            ScoreRule::Energy(cfg) => {
                cfg.validate()?;
                let packet = draw_uniform_pairs(cfg, rng);
                Ok(energy_score_from_packet(
                    |p| member.quantile(p).expect("open-unit probability"),
                    y,
                    cfg.beta,
                    &packet,
                    cfg.antithetic,
                ))
            }
        }
    }

    /// Scan a parameter lattice for identifiability violations: grid points
    /// distinct from the truth that the link cannot separate from it on a
    /// positive-mass set of covariates. Block-maxima scenarios scan the
    /// scale pairs `(beta, gamma)` instead.
    pub fn identifiability_report(
        &self,
        points_per_dim: usize,
        mc_size: usize,
        seed: u64,
    ) -> Result<IdentSummary, HarnessError> {
        self.validate()?;
        let domain = self.domain()?;
        match &self.model {
            ModelSpec::FrechetBlockMaxima { .. } => {
                let d = self.design.dim();
                let link = LoglinearScale { cov_dim: d };
                // Lattice over (beta, gamma), the coordinates entering the
                // scale identifiability condition.
                let sub = BoxDomain::new(
                    self.lower[1..].to_vec(),
                    self.upper[1..].to_vec(),
                )?;
                let grid: Vec<(Vec<f64>, f64)> = sub
                    .lattice(points_per_dim)
                    .into_iter()
                    .map(|pt| (pt[..d].to_vec(), pt[d]))
                    .collect();
                let beta0 = self.eta0[1..1 + d].to_vec();
                let report = crate::blockmax::check_scale_identifiability(
                    &link, &self.design, &beta0, &grid, mc_size, seed,
                );
                Ok(IdentSummary {
                    checked: report.entries.len(),
                    violations: report.entries.iter().filter(|e| e.violation).count(),
                    any_violation: report.any_violation,
                })
            }
            _ => {
                let grid = domain.lattice(points_per_dim);
                let report = match &self.model {
                    ModelSpec::NormalLocation { sd } => crate::designs::check_identifiability(
                        &NormalMeanLink {
                            sd: *sd,
                            cov_dim: self.design.dim(),
                        },
                        &self.design,
                        &self.eta0,
                        &grid,
                        mc_size,
                        seed,
                    )?,
                    ModelSpec::NormalLocationScale => crate::designs::check_identifiability(
                        &NormalLocationScaleLink {
                            cov_dim: self.design.dim(),
                        },
                        &self.design,
                        &self.eta0,
                        &grid,
                        mc_size,
                        seed,
                    )?,
                    ModelSpec::GevRegression => crate::designs::check_identifiability(
                        &GevRegressionLink {
                            cov_dim: self.design.dim(),
                        },
                        &self.design,
                        &self.eta0,
                        &grid,
                        mc_size,
                        seed,
                    )?,
                    ModelSpec::NormalRedundantMean { sd } => {
                        crate::designs::check_identifiability(
                            &RedundantMeanLink { sd: *sd },
                            &self.design,
                            &self.eta0,
                            &grid,
                            mc_size,
                            seed,
                        )?
                    }
                    ModelSpec::FrechetBlockMaxima { .. } => unreachable!(),
                };
                Ok(IdentSummary {
                    checked: report.entries.len(),
                    violations: report.entries.iter().filter(|e| e.violation).count(),
                    any_violation: report.any_violation,
                })
            }
        }
    }

    /// Sample `m_eta0(Z_{n,i})` for the tail-envelope diagnostic: the
    /// covariate is the design's `x_{n,i}`, the response comes from the
    /// row-`n` kernel (block size resolved at `n` for block maxima).
    pub fn summand_at_truth(
        &self,
        rule: &ScoreRule,
        n: usize,
        i: usize,
        rng: &mut Stream,
    ) -> Result<f64, HarnessError> {
        let covariates = self.design.generate(n)?;
        let x = covariates.row(i.min(n - 1)).to_vec();
        match &self.model {
            ModelSpec::FrechetBlockMaxima { .. } => {
                let (model, block_size, _) = self.tail_model()?;
                let r = block_size.resolve(n);
                let a_r = model.baseline.scaling(r);
                let u = crate::harness::draw_open(rng);
                let p = (u.ln() / (r as f64 * model.c(&x))).exp();
                let y = model.baseline.quantile(p) / a_r;
                let mut eta0 = self.eta0.clone();
                let dim = eta0.len();
                eta0[dim - 1] = 1.0;
                self.summand(rule, &eta0, &x, y, rng)
            }
            _ => {
                let y = self.draw_response_at_truth(&x, rng);
                self.summand(rule, &self.eta0, &x, y, rng)
            }
        }
    }
}
