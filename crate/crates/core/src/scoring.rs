//! Strictly proper scoring rules, reported with the higher-is-better
//! orientation.
//!
//! The logarithmic score of a family member at `y` is its log-density, so it
//! inherits the `-inf` convention off the support. The energy score
//! `ES_beta(P, y) = 0.5 E|Y - Y'|^beta - E|Y - y|^beta` (CRPS at `beta = 1`
//! in one dimension) is estimated by Monte Carlo from explicit uniform
//! packets pushed through the inverse CDF. Reusing one packet across
//! parameter values gives common random numbers: criterion surfaces become
//! smooth in the parameter and score differences of identical members vanish
//! exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Family;
use crate::numerics::mean_and_se;
use crate::rng::{open_unit, Stream};

/// Extended-real score value in `[-inf, inf)`.
pub type ScoreValue = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("energy score needs at least one Monte Carlo pair")]
    NoPairs,
    #[error("empirical energy score needs a nonempty sample")]
    EmptySample,
    #[error("energy exponent beta must lie in (0, 2), got {0}")]
    BadBeta(f64),
    #[error("dimension mismatch between samples and outcome")]
    DimMismatch,
}

/// Monte Carlo settings for energy-score evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Exponent in `(0, 2)`.
    pub beta: f64,
    /// Number of independent `(Y, Y')` pairs per evaluation.
    pub mc_pairs: usize,
    /// Mirror each uniform pair through `u -> 1 - u`.
    pub antithetic: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mc_pairs: 100_000,
            antithetic: true,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(ScoringError::BadBeta(self.beta));
        }
        if self.mc_pairs == 0 {
            return Err(ScoringError::NoPairs);
        }
        Ok(())
    }
}

/// The scoring rule driving an optimum-score fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScoreRule {
    /// Logarithmic score; maximizing it is conditional maximum likelihood.
    #[serde(alias = "mle")]
    Log,
    /// Energy score with Monte Carlo evaluation.
    Energy(EnergyConfig),
}

impl ScoreRule {
    pub fn id(&self) -> String {
        match self {
            Self::Log => "log".into(),
            Self::Energy(cfg) => format!("energy(beta={})", cfg.beta),
        }
    }
}

/// Logarithmic score: the family member's log-density at `y`.
pub fn log_score<P: Family>(member: &P, y: f64) -> ScoreValue {
    member.log_pdf(y)
}

/// One observation's pre-drawn uniform packet for energy evaluation.
pub type UniformPairs = Vec<(f64, f64)>;

/// Draw a packet of `mc_pairs` independent uniform pairs from `stream`.
pub fn draw_uniform_pairs(cfg: &EnergyConfig, stream: &mut Stream) -> UniformPairs {
    (0..cfg.mc_pairs)
        .map(|_| (open_unit(stream), open_unit(stream)))
        .collect()
}

/// Energy score of a univariate distribution given by its quantile function,
/// evaluated on an explicit uniform packet.
///
/// Each pair contributes one independent `(Y, Y')` draw to the spread term
/// and two draws to the outcome term; the antithetic mirror doubles both at
/// no extra uniform cost. The estimate is exact for point masses.
pub fn energy_score_from_packet(
    quantile: impl Fn(f64) -> f64,
    y: f64,
    beta: f64,
    packet: &UniformPairs,
    antithetic: bool,
) -> ScoreValue {
    debug_assert!(!packet.is_empty());
    let mut spread = 0.0;
    let mut outcome = 0.0;
    for &(u, v) in packet {
        let a = quantile(u);
        let b = quantile(v);
        spread += (a - b).abs().powf(beta);
        outcome += (a - y).abs().powf(beta) + (b - y).abs().powf(beta);
        if antithetic {
            let a2 = quantile(1.0 - u);
            let b2 = quantile(1.0 - v);
            spread += (a2 - b2).abs().powf(beta);
            outcome += (a2 - y).abs().powf(beta) + (b2 - y).abs().powf(beta);
        }
    }
    let pairs = (packet.len() * if antithetic { 2 } else { 1 }) as f64;
    0.5 * spread / pairs - 0.5 * outcome / pairs
}

/// Monte Carlo energy score of a family member from an explicit stream.
pub fn energy_score<P: Family>(
    member: &P,
    y: f64,
    cfg: &EnergyConfig,
    stream: &mut Stream,
) -> Result<ScoreValue, ScoringError> {
    cfg.validate()?;
    let packet = draw_uniform_pairs(cfg, stream);
    Ok(energy_score_from_packet(
        |p| member.quantile(p).expect("open-unit probability"),
        y,
        cfg.beta,
        &packet,
        cfg.antithetic,
    ))
}

/// Exact plug-in energy score of an empirical distribution (vectors allowed):
/// `1/(2 m^2) sum_{j,k} |s_j - s_k|^beta - 1/m sum_j |s_j - y|^beta`.
pub fn energy_score_empirical(
    samples: &[Vec<f64>],
    y: &[f64],
    beta: f64,
) -> Result<ScoreValue, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::EmptySample);
    }
    if !(beta > 0.0 && beta < 2.0) {
        return Err(ScoringError::BadBeta(beta));
    }
    if samples.iter().any(|s| s.len() != y.len()) {
        return Err(ScoringError::DimMismatch);
    }
    let m = samples.len();
    let norm = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, z)| (x - z) * (x - z))
            .sum::<f64>()
            .sqrt()
    };
    let mut spread = 0.0;
    for j in 0..m {
        for k in 0..m {
            spread += norm(&samples[j], &samples[k]).powf(beta);
        }
    }
    let outcome: f64 = samples.iter().map(|s| norm(s, y).powf(beta)).sum();
    Ok(0.5 * spread / (m * m) as f64 - outcome / m as f64)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub se: f64,
    pub mc_size: usize,
}

impl GapEstimate {
    /// Gap consistent with propriety: not significantly negative.
    pub fn nonnegative_at(&self, z: f64) -> bool {
        self.gap.is_infinite() && self.gap > 0.0 || self.gap >= -z * self.se
    }

    /// Gap significantly positive at `z` standard errors.
    pub fn positive_at(&self, z: f64) -> bool {
        self.gap.is_infinite() && self.gap > 0.0 || self.gap > z * self.se
    }
}

/// Monte Carlo estimate of the propriety gap
/// `S(P, P) - S(P', P) = int [S(P, y) - S(P', y)] P(dy)`.
///
/// Both scores are evaluated with common random numbers, so the gap is
/// exactly zero when the two members coincide. For the log score the
/// per-draw difference is the log-likelihood ratio (the gap estimates the
/// Kullback-Leibler divergence); for the energy score the pair construction
/// reduces the gap to the energy distance between `P` and `P'`.
pub fn propriety_gap<P: Family>(
    rule: &ScoreRule,
    p: &P,
    p_prime: &P,
    mc_size: usize,
    stream: &mut Stream,
) -> Result<GapEstimate, ScoringError> {
    if mc_size == 0 {
        return Err(ScoringError::NoPairs);
    }
    let mut diffs = Vec::with_capacity(mc_size);
    match rule {
        ScoreRule::Log => {
            for _ in 0..mc_size {
                let u = open_unit(stream);
                let y = p.quantile(u).expect("open-unit probability");
                let d = log_score(p, y) - log_score(p_prime, y);
                if d == f64::INFINITY {
                    // y outside the support of p': S(P', P) = -inf, gap = +inf.
                    return Ok(GapEstimate {
                        gap: f64::INFINITY,
                        se: 0.0,
                        mc_size,
                    });
                }
                diffs.push(d);
            }
        }
        ScoreRule::Energy(cfg) => {
            cfg.validate()?;
            let beta = cfg.beta;
            for _ in 0..mc_size {
                let (u1, u2) = (open_unit(stream), open_unit(stream));
                let y1 = p.quantile(u1).expect("open-unit probability");
                let y2 = p.quantile(u2).expect("open-unit probability");
                let z1 = p_prime.quantile(u1).expect("open-unit probability");
                let z2 = p_prime.quantile(u2).expect("open-unit probability");
                // E|Y' - Y|^b - 0.5 E|Y - Y*|^b - 0.5 E|Y' - Y'*|^b, coupled.
                let d = (z1 - y2).abs().powf(beta)
                    - 0.5 * (y1 - y2).abs().powf(beta)
                    - 0.5 * (z1 - z2).abs().powf(beta);
                diffs.push(d);
            }
        }
    }
    let (gap, se) = mean_and_se(&diffs);
    Ok(GapEstimate { gap, se, mc_size })
}

/// Outcome of a randomized propriety sweep over a family's parameter box.
#[derive(Debug, Clone, Serialize)]
pub struct ProprietySweep {
    pub rule: String,
    pub pairs: usize,
    pub mc_size: usize,
    /// Smallest `gap / se` seen (infinite gaps count as large positive).
    pub worst_z: f64,
    /// Pairs with `gap < -3 se`.
    pub negative_failures: usize,
    /// Separated pairs (parameter distance above the threshold) whose gap was
    /// not significantly positive at three standard errors.
    pub separation_failures: usize,
    pub passed: bool,
}

/// Draw `pairs` random parameter pairs uniformly from the box and test the
/// propriety contract: the gap is never significantly negative, and is
/// significantly positive whenever the parameters are separated by more than
/// `distance_threshold`.
pub fn propriety_sweep<P: Family>(
    rule: &ScoreRule,
    lower: &[f64],
    upper: &[f64],
    pairs: usize,
    distance_threshold: f64,
    mc_size: usize,
    seed: u64,
) -> Result<ProprietySweep, ScoringError> {
    assert_eq!(lower.len(), P::PARAM_DIM);
    assert_eq!(upper.len(), P::PARAM_DIM);
    let mut negative_failures = 0;
    let mut separation_failures = 0;
    let mut worst_z = f64::INFINITY;
    for k in 0..pairs {
        let mut stream = crate::rng::stream(seed, &[0x9409, k as u64]);
        let draw = |s: &mut Stream| -> Vec<f64> {
            lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * open_unit(s))
                .collect()
        };
        let a = draw(&mut stream);
        let b = draw(&mut stream);
        let p = P::from_slice(&a).expect("box parameters are valid");
        let q = P::from_slice(&b).expect("box parameters are valid");
        let est = propriety_gap(rule, &p, &q, mc_size, &mut stream)?;
        let z = if est.gap.is_infinite() {
            f64::INFINITY
        } else if est.se == 0.0 {
            if est.gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            est.gap / est.se
        };
        worst_z = worst_z.min(z);
        if !est.nonnegative_at(3.0) {
            negative_failures += 1;
        }
        let distance: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        if distance > distance_threshold && !est.positive_at(3.0) {
            separation_failures += 1;
        }
    }
    Ok(ProprietySweep {
        rule: rule.id(),
        pairs,
        mc_size,
        worst_z,
        negative_failures,
        separation_failures,
        passed: negative_failures == 0 && separation_failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{FrechetParams, GevParams, NormalParams};
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn log_score_delegates_to_log_density() {
        assert_relative_eq!(
            log_score(&FrechetParams::new(1.0, 1.0).unwrap(), 1.0),
            -1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            log_score(&GevParams::new(0.0, 1.0, 0.5).unwrap(), -3.0),
            f64::NEG_INFINITY
        );
        assert_relative_eq!(
            log_score(&NormalParams::new(0.0, 1.0).unwrap(), 0.0),
            -0.9189385332046727,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_score_point_mass_is_exact() {
        // Point mass at 0 scored at y = 2 with beta = 1: exactly -2.
        let packet = vec![(0.3, 0.8), (0.1, 0.6)];
        let s = energy_score_from_packet(|_| 0.0, 2.0, 1.0, &packet, true);
        assert_relative_eq!(s, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn energy_score_two_point_closed_form() {
        // P = 0.5 delta_0 + 0.5 delta_2, y = 1, beta = 1:
        // 0.5 E|Y-Y'| = 0.5, E|Y-1| = 1, score = -0.5.
        let s = energy_score_empirical(&[vec![0.0], vec![2.0]], &[1.0], 1.0).unwrap();
        assert_relative_eq!(s, -0.5, epsilon = 1e-14);
        let single = energy_score_empirical(&[vec![3.0]], &[1.0], 1.5).unwrap();
        assert_relative_eq!(single, -(2.0_f64.powf(1.5)), epsilon = 1e-12);
        assert!(energy_score_empirical(&[], &[1.0], 1.0).is_err());
    }

    #[test]
    fn energy_score_normal_against_half_normal_moments() {
        // N(0,1) at y = 0, beta = 1: 1/sqrt(pi) - sqrt(2/pi) = -0.2336949...
        let member = NormalParams::new(0.0, 1.0).unwrap();
        let cfg = EnergyConfig {
            beta: 1.0,
            mc_pairs: 200_000,
            antithetic: true,
        };
        let mut rng = stream(17, &[]);
        let s = energy_score(&member, 0.0, &cfg, &mut rng).unwrap();
        let oracle = 1.0 / std::f64::consts::PI.sqrt()
            - (2.0 / std::f64::consts::PI).sqrt();
        assert!((s - oracle).abs() < 4e-3, "s={s} oracle={oracle}");
    }

    #[test]
    fn energy_score_mc_matches_empirical_plugin() {
        let member = NormalParams::new(0.3, 1.2).unwrap();
        let mut rng = stream(23, &[]);
        let draws: Vec<Vec<f64>> = member.draw_n(&mut rng, 4000).iter().map(|&v| vec![v]).collect();
        let emp = energy_score_empirical(&draws, &[0.5], 1.0).unwrap();
        let cfg = EnergyConfig {
            beta: 1.0,
            mc_pairs: 200_000,
            antithetic: true,
        };
        let mut rng2 = stream(24, &[]);
        let mc = energy_score(&member, 0.5, &cfg, &mut rng2).unwrap();
        assert!((emp - mc).abs() < 0.01, "emp={emp} mc={mc}");
    }

    #[test]
    fn energy_score_translation_invariance_with_shared_streams() {
        let base = NormalParams::new(0.0, 1.0).unwrap();
        let shifted = NormalParams::new(1.7, 1.0).unwrap();
        let cfg = EnergyConfig {
            beta: 1.3,
            mc_pairs: 500,
            antithetic: true,
        };
        let packet = draw_uniform_pairs(&cfg, &mut stream(31, &[]));
        let q0 = |p: f64| base.quantile(p).unwrap();
        let q1 = |p: f64| shifted.quantile(p).unwrap();
        let s0 = energy_score_from_packet(q0, 0.4, cfg.beta, &packet, true);
        let s1 = energy_score_from_packet(q1, 0.4 + 1.7, cfg.beta, &packet, true);
        assert_relative_eq!(s0, s1, epsilon = 1e-10);
    }

    #[test]
    fn crps_specialization_on_uniform() {
        // ES_1 on U(0,1) equals minus the CRPS; quadrature oracle for the
        // CRPS integral of (F(t) - 1{t >= y})^2 gives y^3/3 + (1-y)^3/3.
        let quad_crps = |y: f64| {
            let f = |t: f64| t.clamp(0.0, 1.0);
            let n = 20_000;
            let (lo, hi) = (-0.5, 1.5);
            let h = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let t = lo + (k as f64 + 0.5) * h;
                let ind = if t >= y { 1.0 } else { 0.0 };
                acc += (f(t) - ind) * (f(t) - ind) * h;
            }
            acc
        };
        let cfg = EnergyConfig {
            beta: 1.0,
            mc_pairs: 200_000,
            antithetic: true,
        };
        for &y in &[0.0f64, 0.5, 1.0] {
            let packet = draw_uniform_pairs(&cfg, &mut stream(37, &[y.to_bits()]));
            let es = energy_score_from_packet(|p| p, y, 1.0, &packet, true);
            let crps = quad_crps(y);
            assert!((es + crps).abs() < 3e-3, "y={y} es={es} crps={crps}");
            assert!((crps - (y.powi(3) + (1.0 - y).powi(3)) / 3.0).abs() < 1e-4);
        }
    }

    #[test]
    fn propriety_gap_zero_for_identical_members() {
        let p = NormalParams::new(0.3, 1.1).unwrap();
        for rule in [
            ScoreRule::Log,
            ScoreRule::Energy(EnergyConfig {
                beta: 1.0,
                mc_pairs: 10,
                antithetic: false,
            }),
        ] {
            let est = propriety_gap(&rule, &p, &p.clone(), 500, &mut stream(5, &[])).unwrap();
            assert_eq!(est.gap, 0.0);
            assert_eq!(est.se, 0.0);
        }
    }

    #[test]
    fn propriety_gap_log_score_is_gaussian_kl() {
        // KL(N(0,1) || N(1,1)) = 0.5.
        let p = NormalParams::new(0.0, 1.0).unwrap();
        let q = NormalParams::new(1.0, 1.0).unwrap();
        let est = propriety_gap(&ScoreRule::Log, &p, &q, 200_000, &mut stream(6, &[])).unwrap();
        assert!((est.gap - 0.5).abs() < 4.0 * est.se, "gap={}", est.gap);
        assert!((est.gap - 0.5).abs() < 0.02);
    }

    #[test]
    fn propriety_gap_energy_point_masses() {
        // delta_0 vs delta_1 at beta = 1: gap = 0 - (-1) = 1. Approximate the
        // point masses by vanishing-scale normals.
        let p = NormalParams::new(0.0, 1e-9).unwrap();
        let q = NormalParams::new(1.0, 1e-9).unwrap();
        let rule = ScoreRule::Energy(EnergyConfig {
            beta: 1.0,
            mc_pairs: 10,
            antithetic: false,
        });
        let est = propriety_gap(&rule, &p, &q, 200, &mut stream(8, &[])).unwrap();
        assert!((est.gap - 1.0).abs() < 1e-6, "gap={}", est.gap);
    }

    #[test]
    fn energy_score_upper_bound_from_moment() {
        // ES_beta(P_theta, y) <= 2^{beta-1} * sup_theta E|Y|^beta.
        let beta = 1.5;
        let thetas: Vec<NormalParams> = (0..5)
            .map(|k| NormalParams::new(-1.0 + k as f64 * 0.5, 0.5 + 0.3 * k as f64).unwrap())
            .collect();
        let mut m = 0.0_f64;
        for th in &thetas {
            let mut rng = stream(40, &[th.mean.to_bits()]);
            let mean_abs: f64 = th
                .draw_n(&mut rng, 20_000)
                .iter()
                .map(|y| y.abs().powf(beta))
                .sum::<f64>()
                / 20_000.0;
            m = m.max(mean_abs);
        }
        let bound = 2.0_f64.powf(beta - 1.0) * m;
        let cfg = EnergyConfig {
            beta,
            mc_pairs: 20_000,
            antithetic: true,
        };
        for th in &thetas {
            for &y in &[-2.0f64, 0.0, 1.0, 3.0] {
                let mut rng = stream(41, &[y.to_bits()]);
                let s = energy_score(th, y, &cfg, &mut rng).unwrap();
                assert!(s <= bound + 0.02, "s={s} bound={bound}");
            }
        }
    }

    #[test]
    fn propriety_sweep_passes_on_normal_box() {
        let sweep = propriety_sweep::<NormalParams>(
            &ScoreRule::Log,
            &[-2.0, 0.5],
            &[2.0, 3.0],
            10,
            0.1,
            20_000,
            9,
        )
        .unwrap();
        assert!(sweep.passed, "{sweep:?}");
        let energy = propriety_sweep::<NormalParams>(
            &ScoreRule::Energy(EnergyConfig {
                beta: 1.0,
                mc_pairs: 16,
                antithetic: false,
            }),
            &[-2.0, 0.5],
            &[2.0, 3.0],
            10,
            0.1,
            20_000,
            9,
        )
        .unwrap();
        assert!(energy.passed, "{energy:?}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let p = NormalParams::new(0.0, 1.0).unwrap();
        let bad = EnergyConfig {
            beta: 1.0,
            mc_pairs: 0,
            antithetic: false,
        };
        assert!(matches!(
            energy_score(&p, 0.0, &bad, &mut stream(1, &[])),
            Err(ScoringError::NoPairs)
        ));
        let bad_beta = EnergyConfig {
            beta: 2.0,
            mc_pairs: 10,
            antithetic: false,
        };
        assert!(matches!(
            energy_score(&p, 0.0, &bad_beta, &mut stream(1, &[])),
            Err(ScoringError::BadBeta(_))
        ));
    }
}
