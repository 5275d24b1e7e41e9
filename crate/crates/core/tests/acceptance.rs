//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line and enforcing its runtime budget. Expected values come
//! from independent oracles (quadrature, dense grids, closed forms), never
//! from the code paths under test.

mod common;

use std::time::Instant;

use mest::blockmax::{check_doa_uniform, check_min_maxima_divergence, TailModel};
use mest::designs::{generate_row, CovariateDesign, NormalLocationScaleLink};
use mest::distributions::{Family, FrechetParams, GevParams, GpParams, NormalParams};
use mest::estimator::{fit_mle, fit_score, maximize, BoxDomain, Criterion, FitConfig};
use mest::harness::{
    report, run_consistency, BlockSizeRule, ExperimentConfig, FitSettings, ModelSpec,
    RepRecord, ScalingRule, Scenario, Thresholds,
};
use mest::numerics::lower_median;
use mest::rng::{open_unit, stream};
use mest::scoring::{propriety_sweep, EnergyConfig, ScoreRule};

fn budget(name: &str, started: Instant, limit_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("ACCEPTANCE {name}: PASS ({elapsed:.1}s, budget {limit_secs}s)");
    assert!(
        elapsed < limit_secs,
        "{name} exceeded its runtime budget: {elapsed:.1}s >= {limit_secs}s"
    );
}

const QUANTILE_PANELS: [f64; 13] = [
    1e-9, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.0 - 1e-9,
];

fn density_mass<F: Family>(member: &F) -> f64 {
    let breaks: Vec<f64> = QUANTILE_PANELS
        .iter()
        .map(|&p| member.quantile(p).expect("panel probability"))
        .collect();
    common::integrate_panels(&|y| member.log_pdf(y).exp(), &breaks, 1e-9)
}

fn check_family_mass<F: Family>(member: &F) {
    let mass = density_mass(member);
    assert!(
        (mass - 1.0).abs() < 1e-6,
        "{} {:?}: density mass {mass}",
        F::NAME,
        member.to_vec()
    );
    // -inf exactly off the support, cdf clamped to 0/1 there.
    let (lo, hi) = member.support();
    if lo.is_finite() {
        for y in [lo, lo - 0.1 * (1.0 + lo.abs())] {
            assert_eq!(member.log_pdf(y), f64::NEG_INFINITY);
            assert_eq!(member.cdf(y), 0.0);
        }
    }
    if hi.is_finite() {
        for y in [hi, hi + 0.1 * (1.0 + hi.abs())] {
            assert_eq!(member.log_pdf(y), f64::NEG_INFINITY);
            assert_eq!(member.cdf(y), 1.0);
        }
    }
}

/// 1. Densities integrate to one over their supports; log-densities are
///    -inf exactly off-support.
#[test]
fn acceptance_01_density_validity() {
    let started = Instant::now();
    let mut rng = stream(0xacc, &[1]);
    for _ in 0..25 {
        let mu = -2.0 + 4.0 * open_unit(&mut rng);
        let sigma = 0.5 + 2.5 * open_unit(&mut rng);
        let xi = -0.9 + 2.9 * open_unit(&mut rng);
        check_family_mass(&GevParams::new(mu, sigma, xi).unwrap());

        let a = 0.5 + 2.5 * open_unit(&mut rng);
        let xi = -0.9 + 2.9 * open_unit(&mut rng);
        check_family_mass(&GpParams::new(a, xi).unwrap());

        let tau = 0.5 + 2.5 * open_unit(&mut rng);
        let alpha = 0.5 + 3.5 * open_unit(&mut rng);
        check_family_mass(&FrechetParams::new(tau, alpha).unwrap());

        let mean = -3.0 + 6.0 * open_unit(&mut rng);
        let sd = 0.5 + 2.5 * open_unit(&mut rng);
        check_family_mass(&NormalParams::new(mean, sd).unwrap());
    }

    // CDF agrees with the integrated density: GEV(0, 1, 0.3) at y = 1.7.
    let member = GevParams::new(0.0, 1.0, 0.3).unwrap();
    let target = 1.7;
    let breaks: Vec<f64> = QUANTILE_PANELS
        .iter()
        .map(|&p| member.quantile(p).unwrap())
        .filter(|&q| q < target)
        .chain(std::iter::once(target))
        .collect();
    let integral = common::integrate_panels(&|y| member.log_pdf(y).exp(), &breaks, 1e-10);
    assert!(
        (integral - member.cdf(target)).abs() < 1e-8,
        "cdf {} vs integral {integral}",
        member.cdf(target)
    );
    budget("01 density validity", started, 30.0);
}

/// 2. Log and energy scores pass the randomized propriety sweep.
#[test]
fn acceptance_02_propriety() {
    let started = Instant::now();
    let lower = [-2.0, 0.5];
    let upper = [2.0, 3.0];
    let rules = [
        ScoreRule::Log,
        ScoreRule::Energy(EnergyConfig {
            beta: 0.5,
            mc_pairs: 16,
            antithetic: false,
        }),
        ScoreRule::Energy(EnergyConfig {
            beta: 1.0,
            mc_pairs: 16,
            antithetic: false,
        }),
        ScoreRule::Energy(EnergyConfig {
            beta: 1.5,
            mc_pairs: 16,
            antithetic: false,
        }),
    ];
    for rule in rules {
        let sweep = propriety_sweep::<NormalParams>(
            &rule, &lower, &upper, 50, 0.1, 100_000, 0xacc2,
        )
        .unwrap();
        assert!(
            sweep.passed,
            "propriety sweep failed for {}: {sweep:?}",
            rule.id()
        );
    }
    budget("02 propriety", started, 120.0);
}

/// 3. The maximizer agrees with a 10^6-point dense-grid brute force on
///    randomized two-dimensional surfaces with -inf regions.
#[test]
fn acceptance_03_optimizer_oracle_equivalence() {
    let started = Instant::now();
    let lower = [0.0, -1.0];
    let upper = [1.0, 2.0];
    let domain = BoxDomain::new(lower.to_vec(), upper.to_vec()).unwrap();
    let span = [upper[0] - lower[0], upper[1] - lower[1]];

    for surface_idx in 0..10u64 {
        let mut rng = stream(0xacc3, &[surface_idx]);
        // Two Gaussian bumps in normalized coordinates; the primary is
        // strictly higher and wide enough for the coarse lattice to see it.
        let c1 = [
            0.2 + 0.6 * open_unit(&mut rng),
            0.2 + 0.6 * open_unit(&mut rng),
        ];
        let c2 = [
            0.1 + 0.8 * open_unit(&mut rng),
            0.1 + 0.8 * open_unit(&mut rng),
        ];
        let w1 = 0.12 + 0.1 * open_unit(&mut rng);
        let w2 = 0.08 + 0.1 * open_unit(&mut rng);
        let h2 = 0.4 + 0.35 * open_unit(&mut rng);
        // -inf half-plane kept a margin away from the primary bump's peak.
        let theta = 2.0 * std::f64::consts::PI * open_unit(&mut rng);
        let normal = [theta.cos(), theta.sin()];
        let offset = normal[0] * c1[0] + normal[1] * c1[1] - 0.22;
        let masked = surface_idx % 3 != 2;

        let f = move |eta: &[f64]| -> f64 {
            let z = [
                (eta[0] - lower[0]) / span[0],
                (eta[1] - lower[1]) / span[1],
            ];
            if masked && normal[0] * z[0] + normal[1] * z[1] < offset {
                return f64::NEG_INFINITY;
            }
            let bump = |c: &[f64; 2], w: f64, h: f64| {
                let d2 = (z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2);
                h * (-d2 / (2.0 * w * w)).exp()
            };
            bump(&c1, w1, 1.0).max(bump(&c2, w2, h2))
        };

        let oracle = common::dense_grid_argmax(&f, &lower, &upper, 1000)
            .expect("some feasible cell exists");
        let crit = Criterion::new(1, move |eta: &[f64], _| f(eta));
        let fit = maximize(&crit, &domain, &FitConfig::default()).unwrap();
        assert!(fit.criterion_value >= oracle.1 - 1e-9);
        for (d, &s) in span.iter().enumerate() {
            let spacing = s / 999.0;
            assert!(
                (fit.eta_hat[d] - oracle.0[d]).abs() <= spacing + 1e-12,
                "surface {surface_idx}, dim {d}: fit {} vs oracle {} (spacing {spacing})",
                fit.eta_hat[d],
                oracle.0[d]
            );
        }
    }
    budget("03 optimizer oracle equivalence", started, 60.0);
}

fn gev_experiment() -> ExperimentConfig {
    ExperimentConfig {
        id: "gev-consistency".into(),
        scenario: Scenario {
            model: ModelSpec::GevRegression,
            design: CovariateDesign::UniformGrid,
            eta0: vec![1.0, 0.5, 0.2, 0.3, 0.1],
            lower: vec![-1.0, -2.0, -1.0, -2.0, -0.4],
            upper: vec![3.0, 2.0, 1.0, 2.0, 0.6],
        },
        rule: ScoreRule::Log,
        n_schedule: vec![200, 800, 3200],
        replications: 20,
        master_seed: 20240817,
        fit: FitSettings {
            grid_points_per_dim: 5,
            local_starts: 4,
            ..FitSettings::default()
        },
        thresholds: Some(Thresholds {
            final_median_error: 0.2,
            require_monotone: true,
        }),
    }
}

/// 4. Conditional maximum likelihood for the GEV regression model is
///    consistent at desk scale, with nonnegative criterion gaps throughout.
#[test]
fn acceptance_04_gev_cmle_consistency() {
    let started = Instant::now();
    let report = run_consistency(&gev_experiment()).unwrap();
    let medians: Vec<f64> = report.summaries.iter().map(|s| s.median_error).collect();
    assert!(
        medians.windows(2).all(|w| w[1] <= w[0]),
        "medians not nonincreasing: {medians:?}"
    );
    assert!(
        *medians.last().unwrap() < 0.2,
        "final median {medians:?}"
    );
    let with_reference = report.records.iter().filter(|r| r.gap.is_some()).count();
    assert_eq!(with_reference, report.records.len(), "all references finite");
    assert!(
        report.records.iter().all(|r| r.gap.unwrap() >= 0.0),
        "criterion gap must be nonnegative in every replication"
    );
    budget("04 gev cmle consistency", started, 600.0);
}

fn energy_experiment() -> ExperimentConfig {
    ExperimentConfig {
        id: "normal-energy".into(),
        scenario: Scenario {
            model: ModelSpec::NormalLocationScale,
            design: CovariateDesign::UniformGrid,
            eta0: vec![0.4, 0.3],
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
        },
        rule: ScoreRule::Energy(EnergyConfig {
            beta: 1.0,
            mc_pairs: 64,
            antithetic: true,
        }),
        n_schedule: vec![100, 400, 1600],
        replications: 20,
        master_seed: 31337,
        fit: FitSettings::default(),
        thresholds: Some(Thresholds {
            final_median_error: 0.1,
            require_monotone: true,
        }),
    }
}

/// 5. Optimum energy score estimation is consistent, and the log-score rule
///    reproduces the likelihood fit exactly on identical seeds.
#[test]
fn acceptance_05_energy_score_consistency() {
    let started = Instant::now();
    let report = run_consistency(&energy_experiment()).unwrap();
    let medians: Vec<f64> = report.summaries.iter().map(|s| s.median_error).collect();
    assert!(
        medians.windows(2).all(|w| w[1] <= w[0]),
        "medians not nonincreasing: {medians:?}"
    );
    assert!(*medians.last().unwrap() < 0.1, "final median {medians:?}");

    // Log-score optimum-score fit is bit-identical to the MLE path.
    let link = NormalLocationScaleLink { cov_dim: 1 };
    let row = generate_row(
        &CovariateDesign::UniformGrid,
        &link,
        &[0.4, 0.3],
        400,
        777,
    )
    .unwrap();
    let domain = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let cfg = FitConfig::default();
    let a = fit_mle(&link, &row, &domain, &cfg).unwrap();
    let b = fit_score(&ScoreRule::Log, &link, &row, &domain, &cfg).unwrap();
    assert_eq!(a.eta_hat, b.eta_hat);
    assert_eq!(a.criterion_value, b.criterion_value);
    assert_eq!(a.evaluations, b.evaluations);
    budget("05 energy score consistency", started, 600.0);
}

fn blockmax_experiment(scaling: ScalingRule) -> ExperimentConfig {
    ExperimentConfig {
        id: "frechet-blockmax".into(),
        scenario: Scenario {
            model: ModelSpec::FrechetBlockMaxima {
                baseline: mest::blockmax::Baseline::Pareto { alpha: 1.0 },
                block_size: BlockSizeRule::LogSquared,
                scaling,
            },
            design: CovariateDesign::UniformGrid,
            eta0: vec![1.0, 0.5, 1.0],
            lower: vec![0.3, -3.0, 0.2],
            upper: vec![5.0, 3.0, 5.0],
        },
        rule: ScoreRule::Log,
        n_schedule: vec![250, 1000, 4000],
        replications: 20,
        master_seed: 271828,
        fit: FitSettings::default(),
        thresholds: None,
    }
}

fn component_medians(records: &[RepRecord], n: usize) -> (f64, f64) {
    let alpha: Vec<f64> = records
        .iter()
        .filter(|r| r.n == n)
        .map(|r| (r.eta_hat[0] - 1.0).abs())
        .collect();
    let beta: Vec<f64> = records
        .iter()
        .filter(|r| r.n == n)
        .map(|r| (r.eta_hat[1] - 0.5).abs())
        .collect();
    (lower_median(&alpha), lower_median(&beta))
}

/// 6. The Fréchet block-maxima fit recovers `(alpha0, beta0, 1)`:
///    componentwise median errors shrink along the schedule, and swapping
///    the theoretical norming constant for the maxima median moves the
///    alpha/beta error medians by less than 0.05.
#[test]
fn acceptance_06_frechet_blockmax_theorem() {
    let started = Instant::now();
    let theo = run_consistency(&blockmax_experiment(ScalingRule::Theoretical)).unwrap();

    // Componentwise medians: with theoretical scaling, gamma_hat is exactly
    // tau_hat / a_r.
    let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for &n in &[250usize, 1000, 4000] {
        let (med_alpha, med_beta) = component_medians(&theo.records, n);
        let gamma: Vec<f64> = theo
            .records
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.eta_hat[2].ln().abs())
            .collect();
        let med_gamma = lower_median(&gamma);
        assert!(
            med_alpha <= prev.0 && med_beta <= prev.1 && med_gamma <= prev.2,
            "component medians not nonincreasing at n={n}: \
             ({med_alpha}, {med_beta}, {med_gamma}) after {prev:?}"
        );
        prev = (med_alpha, med_beta, med_gamma);
        if n == 4000 {
            assert!(med_alpha < 0.15, "alpha median {med_alpha}");
            assert!(med_beta < 0.15, "beta median {med_beta}");
            assert!(med_gamma < 0.15, "log gamma median {med_gamma}");
        }
    }

    // Median scaling: same master seed, so the data are identical; only the
    // search interval anchor changes.
    let med = run_consistency(&blockmax_experiment(ScalingRule::MaximaMedian)).unwrap();
    for &n in &[250usize, 1000, 4000] {
        let (a_theo, b_theo) = component_medians(&theo.records, n);
        let (a_med, b_med) = component_medians(&med.records, n);
        assert!(
            (a_theo - a_med).abs() < 0.05,
            "alpha medians differ at n={n}: {a_theo} vs {a_med}"
        );
        assert!(
            (b_theo - b_med).abs() < 0.05,
            "beta medians differ at n={n}: {b_theo} vs {b_med}"
        );
    }
    budget("06 frechet blockmax theorem", started, 900.0);
}

/// 7. Domain-of-attraction uniformity: the exact cdf error shrinks along the
///    block-size schedule, matching the closed-form reference cell.
#[test]
fn acceptance_07_doa_uniformity() {
    let started = Instant::now();
    let model = TailModel::new(
        mest::blockmax::Baseline::Pareto { alpha: 1.0 },
        1.0,
        |_| 1.0,
        "c = 1",
    )
    .unwrap();
    let x_grid = CovariateDesign::UniformGrid.generate(21).unwrap();
    let y_grid = [0.5, 1.0, 2.0, 4.0];
    let report = check_doa_uniform(&model, &x_grid, &y_grid, &[100, 1000, 10_000]);
    assert!(
        report.strictly_decreasing,
        "sup errors not strictly decreasing: {:?}",
        report.sup_per_r
    );
    let final_sup = report.sup_per_r.last().unwrap().1;
    assert!(final_sup < 2e-4, "sup at r = 10^4 is {final_sup}");
    let cell = report
        .cells
        .iter()
        .find(|c| c.block_size == 100 && c.y == 1.0)
        .unwrap();
    let reference = (0.366032f64 - 0.367879).abs();
    assert!(
        (cell.sup_err - reference).abs() < 1e-6,
        "cell error {} vs reference {reference}",
        cell.sup_err
    );
    budget("07 doa uniformity", started, 10.0);
}

/// 8. The smallest block maximum diverges under the log-squared block-size
///    schedule (frequency below the exact union bound), while the unit block
///    size negative control stays bounded.
#[test]
fn acceptance_08_block_minimum_divergence() {
    let started = Instant::now();
    let model = TailModel::from_scale_link(
        mest::blockmax::Baseline::Pareto { alpha: 1.0 },
        1.0,
        mest::blockmax::LoglinearScale { cov_dim: 1 },
        vec![0.5],
    )
    .unwrap();
    let design = CovariateDesign::UniformGrid;
    let mut schedule = Vec::new();
    for &n in &[250usize, 1000, 4000] {
        schedule.push((n, 1)); // negative control
        schedule.push((n, BlockSizeRule::LogSquared.resolve(n)));
    }
    let report =
        check_min_maxima_divergence(&model, &design, &schedule, 2.0, 200, 0xacc8).unwrap();
    assert!(
        !report.any_flag,
        "observed frequency exceeded the union bound: {:?}",
        report.rows
    );
    assert!(report.coupled_monotone);
    for row in &report.rows {
        if row.block_size == 1 {
            // Negative control: minima hug the support's lower end.
            assert!(
                row.median_min < 2.0,
                "r = 1 at n = {} should not diverge: {}",
                row.n,
                row.median_min
            );
        }
    }
    let big = report
        .rows
        .iter()
        .find(|r| r.n == 4000 && r.block_size > 1)
        .unwrap();
    assert!(
        big.median_min > 2.0,
        "minimum should have diverged past y at n = 4000: {}",
        big.median_min
    );
    budget("08 block minimum divergence", started, 120.0);
}

/// 9. Experiments are deterministic: identical config and seed give
///    byte-identical CSV output.
#[test]
fn acceptance_09_determinism() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        id: "determinism".into(),
        scenario: Scenario {
            model: ModelSpec::NormalLocation { sd: 1.0 },
            design: CovariateDesign::UniformGrid,
            eta0: vec![2.0],
            lower: vec![-5.0],
            upper: vec![5.0],
        },
        rule: ScoreRule::Log,
        n_schedule: vec![50, 100],
        replications: 5,
        master_seed: 909,
        fit: FitSettings::default(),
        thresholds: None,
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let rep = run_consistency(&cfg).unwrap();
        report::write_rollup(dir.path(), &rep).unwrap();
        for record in &rep.records {
            report::write_cell(dir.path(), &cfg.id, record).unwrap();
        }
    }
    for file in ["determinism/raw.csv", "determinism/summary.json", "determinism/50/0.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    budget("09 determinism", started, 60.0);
}
