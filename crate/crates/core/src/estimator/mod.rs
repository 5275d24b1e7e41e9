//! The M-estimation engine: sample-average criteria over compact boxes,
//! maximized by a coarse lattice scan plus clipped simplex refinement.
//!
//! Criterion values live in `[-inf, inf)`. A `-inf` value marks an
//! infeasible parameter (some observation outside the induced support) and is
//! filtered, never replaced by a finite surrogate. NaN is different: it
//! signals a bug in the criterion or a link escaping the family's parameter
//! space, and evaluation stops with a hard error naming the parameter.

mod simplex;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::designs::{DesignRow, Link};
use crate::distributions::Family;
use crate::numerics::KahanSum;
use crate::rng::{self, tags};
use crate::scoring::{draw_uniform_pairs, energy_score_from_packet, ScoreRule, UniformPairs};

/// Values within this tolerance tie; ties resolve to the lexicographically
/// smallest parameter so runs are deterministic.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EstimError {
    #[error("box domain invalid: {0}")]
    BadBox(String),
    #[error("parameter {eta:?} outside the search box")]
    OutsideDomain { eta: Vec<f64> },
    #[error(
        "criterion produced NaN at observation {index} for eta = {eta:?} \
         (NaN is a bug or a link outside the family parameter space, not -inf)"
    )]
    InvalidSummand { eta: Vec<f64>, index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid fit configuration: {0}")]
    BadConfig(String),
}

/// Compact product of closed intervals with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, EstimError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(EstimError::BadBox(format!(
                "need matching nonempty bounds, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(EstimError::BadBox(format!(
                    "coordinate {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.lower[j]
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.upper[j]
    }

    pub fn span(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, eta: &[f64]) -> bool {
        eta.len() == self.dim()
            && eta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn clip(&self, eta: &mut [f64]) {
        for (x, (lo, hi)) in eta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Euclidean distance between two parameters.
    pub fn distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Whether `eta` touches the box boundary within `tol` of a span.
    pub fn on_boundary(&self, eta: &[f64], tol: f64) -> bool {
        eta.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(x, (lo, hi))| {
                let slack = tol * (hi - lo);
                (x - lo).abs() <= slack || (hi - x).abs() <= slack
            })
    }

    /// Number of points in the evaluation lattice with `k` points per
    /// dimension.
    pub fn lattice_len(&self, k: usize) -> usize {
        (k.max(1) as u64).pow(self.dim() as u32) as usize
    }

    /// Decode lattice point `index` (mixed-radix, first coordinate fastest).
    pub fn lattice_point(&self, k: usize, index: usize) -> Vec<f64> {
        let k = k.max(1);
        let mut rem = index;
        (0..self.dim())
            .map(|j| {
                let pos = rem % k;
                rem /= k;
                if k == 1 {
                    0.5 * (self.lower[j] + self.upper[j])
                } else if pos == k - 1 {
                    self.upper[j]
                } else {
                    self.lower[j] + self.span(j) * pos as f64 / (k - 1) as f64
                }
            })
            .collect()
    }

    /// Materialized lattice, for small grids.
    pub fn lattice(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.lattice_len(k))
            .map(|i| self.lattice_point(k, i))
            .collect()
    }
}

/// Lexicographic order on parameter vectors (used only for tie-breaking).
fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// `true` when `(value, eta)` beats the incumbent under the tie rule.
fn improves(value: f64, eta: &[f64], best_value: f64, best_eta: &[f64]) -> bool {
    if value > best_value + TIE_TOL {
        return true;
    }
    let tied = (value - best_value).abs() <= TIE_TOL
        || (value == f64::NEG_INFINITY && best_value == f64::NEG_INFINITY);
    tied && value >= best_value - TIE_TOL && lex_less(eta, best_eta)
}

/// Per-observation criterion summand `m_eta(z_i)`, indexed by `(eta, i)`.
pub type Summand<'a> = Box<dyn Fn(&[f64], usize) -> f64 + Send + Sync + 'a>;

/// A sample-average criterion `M_n(eta) = n^{-1} sum_i m_eta(z_i)`.
///
/// The summand may return `-inf` (observation outside the induced support);
/// the sum then short-circuits to `-inf`. Summation is Kahan-compensated, so
/// the value is invariant to observation order at the 1e-12 relative level.
pub struct Criterion<'a> {
    n: usize,
    summand: Summand<'a>,
}

impl<'a> Criterion<'a> {
    pub fn new(
        n: usize,
        summand: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'a,
    ) -> Self {
        assert!(n > 0, "criterion needs at least one observation");
        Self {
            n,
            summand: Box::new(summand),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact average of the summands at `eta`.
    pub fn value(&self, eta: &[f64]) -> Result<f64, EstimError> {
        let mut acc = KahanSum::new();
        for i in 0..self.n {
            let v = (self.summand)(eta, i);
            if v.is_nan() {
                return Err(EstimError::InvalidSummand {
                    eta: eta.to_vec(),
                    index: i,
                });
            }
            if v == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            acc.add(v);
        }
        Ok(acc.value() / self.n as f64)
    }
}

/// [`Criterion::value`] with an explicit domain check.
pub fn criterion_value(
    crit: &Criterion,
    domain: &BoxDomain,
    eta: &[f64],
) -> Result<f64, EstimError> {
    if !domain.contains(eta) {
        return Err(EstimError::OutsideDomain { eta: eta.to_vec() });
    }
    crit.value(eta)
}

/// Optimizer settings. Defaults: 9-point lattice per dimension, 3 local
/// starts, 200 simplex iterations, diameter tolerance 1e-6.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub grid_points_per_dim: usize,
    pub local_starts: usize,
    pub max_iters: usize,
    pub simplex_tol: f64,
    /// Initial simplex step as a fraction of each box span.
    pub simplex_scale: f64,
    /// Reference parameter; the returned maximizer is guaranteed to achieve
    /// at least its criterion value.
    pub reference: Option<Vec<f64>>,
    /// Seed for per-observation Monte Carlo packets (energy criteria).
    pub score_seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            grid_points_per_dim: 9,
            local_starts: 3,
            max_iters: 200,
            simplex_tol: 1e-6,
            simplex_scale: 0.05,
            reference: None,
            score_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Success,
    /// Every evaluated start (lattice and reference) was `-inf`; no finite
    /// criterion value exists to report.
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub eta: Vec<f64>,
    pub value: f64,
}

/// Outcome of a criterion maximization.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub eta_hat: Vec<f64>,
    pub criterion_value: f64,
    pub evaluations: usize,
    /// Best-so-far improvements in evaluation order; values are
    /// nondecreasing.
    pub trace: Vec<TracePoint>,
    pub feasible_start_found: bool,
    pub on_boundary: bool,
    pub status: FitStatus,
    /// Criterion value at the supplied reference parameter.
    pub reference_value: Option<f64>,
}

impl FitResult {
    /// `M_n(eta_hat) - M_n(reference)`, when a finite reference was supplied.
    pub fn gap(&self) -> Option<f64> {
        match self.reference_value {
            Some(r) if r > f64::NEG_INFINITY => Some(self.criterion_value - r),
            _ => None,
        }
    }
}

/// Maximize `crit` over `domain`: evaluate the coarse lattice, refine from
/// the best feasible starts with clipped Nelder-Mead, and return the best
/// point seen, never below the lattice maximum or the reference value.
pub fn maximize(
    crit: &Criterion,
    domain: &BoxDomain,
    cfg: &FitConfig,
) -> Result<FitResult, EstimError> {
    if cfg.grid_points_per_dim == 0 {
        return Err(EstimError::BadConfig("grid_points_per_dim must be >= 1".into()));
    }
    let reference = match &cfg.reference {
        Some(r) => {
            if !domain.contains(r) {
                return Err(EstimError::OutsideDomain { eta: r.clone() });
            }
            Some((r.clone(), crit.value(r)?))
        }
        None => None,
    };

    let k = cfg.grid_points_per_dim;
    let total = domain.lattice_len(k);
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| crit.value(&domain.lattice_point(k, i)))
        .collect::<Result<_, _>>()?;
    let mut evaluations = total + usize::from(reference.is_some());

    // Lattice scan: global incumbent plus the start list for refinement.
    let mut best_eta: Vec<f64> = domain.lattice_point(k, 0);
    let mut best_value = values[0];
    let mut trace: Vec<TracePoint> = vec![TracePoint {
        eta: best_eta.clone(),
        value: best_value,
    }];
    let mut feasible = false;
    let mut finite_idx: Vec<usize> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v > f64::NEG_INFINITY {
            feasible = true;
            finite_idx.push(i);
        }
        if i == 0 {
            continue;
        }
        let eta = domain.lattice_point(k, i);
        if improves(v, &eta, best_value, &best_eta) {
            if v > best_value {
                trace.push(TracePoint {
                    eta: eta.clone(),
                    value: v,
                });
            }
            best_eta = eta;
            best_value = v;
        }
    }

    finite_idx.sort_by(|&a, &b| {
        values[b].total_cmp(&values[a]).then_with(|| {
            let ea = domain.lattice_point(k, a);
            let eb = domain.lattice_point(k, b);
            if lex_less(&ea, &eb) {
                std::cmp::Ordering::Less
            } else if ea == eb {
                std::cmp::Ordering::Equal
            } else {
                std::cmp::Ordering::Greater
            }
        })
    });
    let mut starts: Vec<(Vec<f64>, f64)> = finite_idx
        .iter()
        .take(cfg.local_starts.max(1))
        .map(|&i| (domain.lattice_point(k, i), values[i]))
        .collect();
    if starts.is_empty() {
        if let Some((r, rv)) = &reference {
            if *rv > f64::NEG_INFINITY {
                starts.push((r.clone(), *rv));
                feasible = true;
            }
        }
    }

    let refined: Vec<simplex::LocalResult> = starts
        .par_iter()
        .map(|(eta, value)| simplex::refine(crit, domain, eta, *value, cfg))
        .collect::<Result<_, _>>()?;
    for local in &refined {
        evaluations += local.evals;
        for (eta, value) in &local.improvements {
            if improves(*value, eta, best_value, &best_eta) {
                if *value > best_value {
                    trace.push(TracePoint {
                        eta: eta.clone(),
                        value: *value,
                    });
                }
                best_eta = eta.clone();
                best_value = *value;
            }
        }
    }

    let mut reference_value = None;
    if let Some((r, rv)) = &reference {
        reference_value = Some(*rv);
        if improves(*rv, r, best_value, &best_eta) {
            if *rv > best_value {
                trace.push(TracePoint {
                    eta: r.clone(),
                    value: *rv,
                });
            }
            best_eta = r.clone();
            best_value = *rv;
            feasible = feasible || *rv > f64::NEG_INFINITY;
        }
    }

    let status = if best_value > f64::NEG_INFINITY {
        FitStatus::Success
    } else {
        FitStatus::Degenerate
    };
    Ok(FitResult {
        on_boundary: domain.on_boundary(&best_eta, 1e-9),
        eta_hat: best_eta,
        criterion_value: best_value,
        evaluations,
        trace,
        feasible_start_found: feasible,
        status,
        reference_value,
    })
}

fn check_link_dims<P: Family>(
    link: &dyn Link<P>,
    row: &DesignRow,
    domain: &BoxDomain,
) -> Result<(), EstimError> {
    if domain.dim() != link.eta_dim() {
        return Err(EstimError::DimMismatch {
            expected: link.eta_dim(),
            got: domain.dim(),
        });
    }
    if row.responses.len() != row.n || row.covariates.len() != row.n {
        return Err(EstimError::DimMismatch {
            expected: row.n,
            got: row.responses.len(),
        });
    }
    Ok(())
}

/// Maximize the optimum-score criterion
/// `M_n(eta) = n^{-1} sum_i S(P_{link(x_i, eta)}, y_i)`.
///
/// Energy criteria draw one uniform packet per observation from
/// `(score_seed, SCORE, i)` and reuse it for every `eta` (common random
/// numbers), which keeps the Monte Carlo surface smooth in `eta`.
pub fn fit_score<P: Family>(
    rule: &ScoreRule,
    link: &dyn Link<P>,
    row: &DesignRow,
    domain: &BoxDomain,
    cfg: &FitConfig,
) -> Result<FitResult, EstimError> {
    check_link_dims(link, row, domain)?;
    match rule {
        ScoreRule::Log => {
            let crit = Criterion::new(row.n, |eta: &[f64], i: usize| {
                match link.map(row.covariates.row(i), eta) {
                    Ok(member) => member.log_pdf(row.responses[i]),
                    Err(_) => f64::NAN,
                }
            });
            maximize(&crit, domain, cfg)
        }
        ScoreRule::Energy(energy) => {
            energy
                .validate()
                .map_err(|e| EstimError::BadConfig(e.to_string()))?;
            let packets: Vec<UniformPairs> = (0..row.n)
                .map(|i| {
                    let mut s = rng::stream(cfg.score_seed, &[tags::SCORE, i as u64]);
                    draw_uniform_pairs(energy, &mut s)
                })
                .collect();
            let beta = energy.beta;
            let antithetic = energy.antithetic;
            let crit = Criterion::new(row.n, move |eta: &[f64], i: usize| {
                match link.map(row.covariates.row(i), eta) {
                    Ok(member) => energy_score_from_packet(
                        |p| member.quantile(p).expect("open-unit probability"),
                        row.responses[i],
                        beta,
                        &packets[i],
                        antithetic,
                    ),
                    Err(_) => f64::NAN,
                }
            });
            maximize(&crit, domain, cfg)
        }
    }
}

/// Conditional maximum likelihood: [`fit_score`] with the logarithmic score.
pub fn fit_mle<P: Family>(
    link: &dyn Link<P>,
    row: &DesignRow,
    domain: &BoxDomain,
    cfg: &FitConfig,
) -> Result<FitResult, EstimError> {
    fit_score(&ScoreRule::Log, link, row, domain, cfg)
}
