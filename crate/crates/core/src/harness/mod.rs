//! Reproducible Monte Carlo consistency experiments.
//!
//! An experiment pins a data-generating scenario, a scoring rule, a schedule
//! of row lengths and a replication count to one master seed. Cell `(n, rep)`
//! draws its data from the stream `(master, EXPERIMENT, n, rep)`, fits with
//! the true parameter supplied as the reference point, and records the
//! parameter error and the criterion gap `M_n(eta_hat) - M_n(eta_0)`, which
//! the optimizer guarantees to be nonnegative whenever the reference is
//! feasible. Identical configurations therefore reproduce byte-identical
//! outputs, independent of execution order.

pub mod report;

mod scenario;

pub use scenario::{
    BlockSizeRule, IdentSummary, ModelSpec, ScalingRule, Scenario, ScenarioFit, SimulatedRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blockmax::BlockmaxError;
use crate::designs::DesignError;
use crate::estimator::{BoxDomain, EstimError, FitConfig};
use crate::numerics::{lower_median, mean_and_se, quantile_nearest_rank, KahanSum};
use crate::rng::{self, open_unit, tags};
use crate::scoring::{ScoreRule, ScoringError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("scenario does not support this operation: {0}")]
    Unsupported(String),
    #[error("more than half of the replications at n = {n} were degenerate ({degenerate}/{total})")]
    TooManyDegenerate {
        n: usize,
        degenerate: usize,
        total: usize,
    },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Estim(#[from] EstimError),
    #[error(transparent)]
    Blockmax(#[from] BlockmaxError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Optimizer settings as they appear in config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub grid_points_per_dim: usize,
    pub local_starts: usize,
    pub max_iters: usize,
    pub simplex_tol: f64,
    pub simplex_scale: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        let d = FitConfig::default();
        Self {
            grid_points_per_dim: d.grid_points_per_dim,
            local_starts: d.local_starts,
            max_iters: d.max_iters,
            simplex_tol: d.simplex_tol,
            simplex_scale: d.simplex_scale,
        }
    }
}

impl FitSettings {
    pub fn to_fit_config(&self, reference: Option<Vec<f64>>, score_seed: u64) -> FitConfig {
        FitConfig {
            grid_points_per_dim: self.grid_points_per_dim,
            local_starts: self.local_starts,
            max_iters: self.max_iters,
            simplex_tol: self.simplex_tol,
            simplex_scale: self.simplex_scale,
            reference,
            score_seed,
        }
    }
}

/// Pass/fail thresholds a config may attach to an experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Median error at the largest row length must stay below this.
    pub final_median_error: f64,
    /// Require the median error sequence to be nonincreasing (one inversion
    /// within noise allowed).
    #[serde(default)]
    pub require_monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub scenario: Scenario,
    pub rule: ScoreRule,
    pub n_schedule: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_schedule.is_empty() || self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::InvalidConfig(
                "n_schedule must be strictly increasing and nonempty".into(),
            ));
        }
        if self.replications == 0 {
            return Err(HarnessError::InvalidConfig(
                "replications must be >= 1".into(),
            ));
        }
        self.scenario.validate()?;
        self.scenario.check_rule(&self.rule)?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialization of the config.
    pub fn config_hash(&self) -> String {
        report::sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// One `(n, replication)` experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RepRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// Parameter error `d_H(eta_hat, eta_0)` (log-scale gamma coordinate for
    /// block-maxima fits).
    pub error: f64,
    /// Criterion gap `M_n(eta_hat) - M_n(reference)`; `None` when the
    /// reference was infeasible.
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub eta_hat: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NSummary {
    pub n: usize,
    pub median_error: f64,
    pub p90_error: f64,
    pub bootstrap_se_median: f64,
    pub degenerate: usize,
    pub gap_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneVerdict {
    Monotone,
    /// Nonincreasing except for one inversion within 1.5 bootstrap standard
    /// errors of the median.
    MonotoneWithinNoise,
    NonMonotone,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub schema_version: u32,
    pub id: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub rule: String,
    pub n_schedule: Vec<usize>,
    pub replications: usize,
    pub records: Vec<RepRecord>,
    pub summaries: Vec<NSummary>,
    pub verdict: MonotoneVerdict,
}

/// Run a single experiment cell. Exposed so callers can resume interrupted
/// experiments cell by cell.
pub fn run_cell(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<RepRecord, HarnessError> {
    let seed = rng::derive_seed(cfg.master_seed, &[tags::EXPERIMENT, n as u64, rep as u64]);
    let row = cfg.scenario.simulate(n, seed)?;
    let score_seed = rng::derive_seed(seed, &[tags::SCORE]);
    let fitted = cfg
        .scenario
        .fit(&row, &cfg.rule, &cfg.fit, score_seed, true)?;
    Ok(RepRecord {
        n,
        rep,
        seed,
        error: fitted.error,
        gap: fitted.gap,
        degenerate: fitted.degenerate,
        eta_hat: fitted.eta_hat,
    })
}

fn bootstrap_se_median(errors: &[f64], seed: u64) -> f64 {
    if errors.len() < 2 {
        return f64::INFINITY;
    }
    let mut rng = rng::stream(seed, &[0xb007]);
    let b = 200;
    let mut medians = Vec::with_capacity(b);
    for _ in 0..b {
        let resample: Vec<f64> = (0..errors.len())
            .map(|_| errors[rng.random_range(0..errors.len())])
            .collect();
        medians.push(lower_median(&resample));
    }
    let mean = medians.iter().sum::<f64>() / b as f64;
    (medians.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b - 1) as f64).sqrt()
}

use rand::Rng;

fn summarize(cfg: &ExperimentConfig, records: &[RepRecord]) -> (Vec<NSummary>, MonotoneVerdict) {
    let mut summaries = Vec::new();
    for &n in &cfg.n_schedule {
        let cell: Vec<&RepRecord> = records.iter().filter(|r| r.n == n).collect();
        let errors: Vec<f64> = cell
            .iter()
            .filter(|r| !r.degenerate)
            .map(|r| r.error)
            .collect();
        let degenerate = cell.iter().filter(|r| r.degenerate).count();
        let gaps: Vec<f64> = cell.iter().filter_map(|r| r.gap).collect();
        let (median_error, p90_error, se) = if errors.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                lower_median(&errors),
                quantile_nearest_rank(&errors, 0.9),
                bootstrap_se_median(&errors, rng::derive_seed(cfg.master_seed, &[n as u64])),
            )
        };
        summaries.push(NSummary {
            n,
            median_error,
            p90_error,
            bootstrap_se_median: se,
            degenerate,
            gap_min: gaps.iter().cloned().reduce(f64::min),
        });
    }

    let mut excused = 0usize;
    let mut hard_violation = false;
    for w in summaries.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        if next.median_error <= prev.median_error {
            continue;
        }
        if next.median_error <= prev.median_error + 1.5 * next.bootstrap_se_median {
            excused += 1;
        } else {
            hard_violation = true;
        }
    }
    let verdict = if hard_violation || excused > 1 {
        MonotoneVerdict::NonMonotone
    } else if excused == 1 {
        MonotoneVerdict::MonotoneWithinNoise
    } else {
        MonotoneVerdict::Monotone
    };
    (summaries, verdict)
}

/// Assemble a report from precomputed records (used by resumable runs).
pub fn assemble_report(
    cfg: &ExperimentConfig,
    mut records: Vec<RepRecord>,
) -> Result<ConsistencyReport, HarnessError> {
    records.sort_by_key(|r| (r.n, r.rep));
    for &n in &cfg.n_schedule {
        let cell: Vec<&RepRecord> = records.iter().filter(|r| r.n == n).collect();
        let degenerate = cell.iter().filter(|r| r.degenerate).count();
        if 2 * degenerate > cell.len() {
            return Err(HarnessError::TooManyDegenerate {
                n,
                degenerate,
                total: cell.len(),
            });
        }
    }
    let (summaries, verdict) = summarize(cfg, &records);
    Ok(ConsistencyReport {
        schema_version: report::SCHEMA_VERSION,
        id: cfg.id.clone(),
        master_seed: cfg.master_seed,
        config_hash: cfg.config_hash(),
        rule: cfg.rule.id(),
        n_schedule: cfg.n_schedule.clone(),
        replications: cfg.replications,
        records,
        summaries,
        verdict,
    })
}

/// Run the full experiment: every `(n, rep)` cell, then summaries.
///
/// Cells are independent and seeded by `(master, n, rep)`, so the parallel
/// execution order cannot change any output.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ConsistencyReport, HarnessError> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .n_schedule
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |rep| (n, rep)))
        .collect();
    let records: Vec<RepRecord> = cells
        .par_iter()
        .map(|&(n, rep)| run_cell(cfg, n, rep))
        .collect::<Result<_, _>>()?;
    assemble_report(cfg, records)
}

/// Monte Carlo estimate with standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PopEstimate {
    pub value: f64,
    pub se: f64,
    pub mc_size: usize,
}

/// Monte Carlo estimate of the population criterion `M(eta)` under the
/// scenario's limit law: covariates from the design limit `P_X`, responses
/// from the limiting kernel at the true parameter.
///
/// For energy rules, pass a rule with a modest `mc_pairs`; the cost is
/// `mc_size * mc_pairs`.
pub fn population_criterion(
    scenario: &Scenario,
    rule: &ScoreRule,
    eta: &[f64],
    mc_size: usize,
    seed: u64,
) -> Result<PopEstimate, HarnessError> {
    scenario.validate()?;
    scenario.check_rule(rule)?;
    if mc_size == 0 {
        return Err(HarnessError::InvalidConfig("mc_size must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, &[tags::CHECK, 0x90b]);
    let mut values = Vec::with_capacity(mc_size);
    for _ in 0..mc_size {
        let (x, y) = scenario.limit_draw(&mut rng);
        let v = scenario.summand(rule, eta, &x, y, &mut rng)?;
        if v == f64::NEG_INFINITY {
            return Ok(PopEstimate {
                value: f64::NEG_INFINITY,
                se: f64::INFINITY,
                mc_size,
            });
        }
        values.push(v);
    }
    let (value, se) = mean_and_se(&values);
    Ok(PopEstimate {
        value,
        se,
        mc_size,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEnvelopeReport {
    pub t_grid: Vec<f64>,
    /// Pointwise supremum over the sampled `(n, i)` cells of the estimated
    /// survival function of `|m_eta0(Z_{n,i})|`.
    pub envelope: Vec<f64>,
    /// `2 int t S(t) dt` over the observed range (trapezoid rule): the
    /// second-moment proxy of the envelope.
    pub second_moment: f64,
    /// Least-squares slope of `log S` against `log t` over the upper half of
    /// the grid, when enough positive survival values exist.
    pub tail_slope: Option<f64>,
    /// Raised when the tail looks heavier than square-integrable
    /// (slope shallower than -2).
    pub flagged: bool,
    pub cells: usize,
}

/// One diagnostic cell's sampler of the criterion summand.
pub type CellSampler = Box<dyn Fn(&mut rng::Stream) -> f64 + Sync>;

/// Envelope diagnostic over explicit per-cell samplers of `|m|`.
pub fn tail_envelope_from_cells(
    samplers: &[CellSampler],
    t_grid: &[f64],
    mc_size: usize,
    seed: u64,
) -> TailEnvelopeReport {
    assert!(!samplers.is_empty() && !t_grid.is_empty() && mc_size > 0);
    let mut envelope = vec![0.0_f64; t_grid.len()];
    for (c, sampler) in samplers.iter().enumerate() {
        let mut rng = rng::stream(seed, &[tags::CHECK, 0x7a11, c as u64]);
        let mut draws: Vec<f64> = (0..mc_size).map(|_| sampler(&mut rng).abs()).collect();
        draws.sort_by(f64::total_cmp);
        for (k, &t) in t_grid.iter().enumerate() {
            let above = draws.len() - draws.partition_point(|&v| v <= t);
            envelope[k] = envelope[k].max(above as f64 / mc_size as f64);
        }
    }
    let mut second_moment = KahanSum::new();
    for w in 0..t_grid.len() - 1 {
        let (t0, t1) = (t_grid[w], t_grid[w + 1]);
        second_moment.add((t1 - t0) * (t0 * envelope[w] + t1 * envelope[w + 1]));
    }
    let second_moment = second_moment.value(); // 2 * int t S dt, trapezoid

    // Slope of log-survival against log t over the upper half of the grid.
    let upper: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&envelope)
        .skip(t_grid.len() / 2)
        .filter(|&(&t, &s)| t > 0.0 && s > 0.0)
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .collect();
    let tail_slope = if upper.len() >= 3 {
        let n = upper.len() as f64;
        let mx = upper.iter().map(|p| p.0).sum::<f64>() / n;
        let my = upper.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = upper.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = upper.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    let flagged = tail_slope.is_some_and(|s| s > -2.0);
    TailEnvelopeReport {
        t_grid: t_grid.to_vec(),
        envelope,
        second_moment,
        tail_slope,
        flagged,
        cells: samplers.len(),
    }
}

/// Advisory diagnostic for the square-integrable-envelope hypothesis on the
/// criterion at the true parameter: samples `m_eta0(Z_{n,i})` over a grid of
/// `(n, i)` cells and inspects the pooled survival envelope.
pub fn tail_envelope_diagnostic(
    scenario: &Scenario,
    rule: &ScoreRule,
    n_list: &[usize],
    cells_per_n: usize,
    t_grid: &[f64],
    mc_size: usize,
    seed: u64,
) -> Result<TailEnvelopeReport, HarnessError> {
    scenario.validate()?;
    scenario.check_rule(rule)?;
    let mut samplers: Vec<CellSampler> = Vec::new();
    for &n in n_list {
        for j in 0..cells_per_n.min(n) {
            let i = j * n / cells_per_n.min(n);
            let scenario = scenario.clone();
            let rule = *rule;
            samplers.push(Box::new(move |rng: &mut rng::Stream| {
                scenario
                    .summand_at_truth(&rule, n, i, rng)
                    .expect("diagnostic summand")
            }));
        }
    }
    Ok(tail_envelope_from_cells(&samplers, t_grid, mc_size, seed))
}

/// Euclidean distance helper re-exported for error metrics.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    BoxDomain::distance(a, b)
}

/// Uniform draw helper shared with scenario code.
pub(crate) fn draw_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    open_unit(rng)
}
