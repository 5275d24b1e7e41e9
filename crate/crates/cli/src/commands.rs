//! The four subcommands: simulate, fit, experiment, check.

use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use mest::blockmax::{check_doa_uniform, check_min_maxima_divergence};
use mest::designs::Covariates;
use mest::distributions::NormalParams;
use mest::estimator::FitStatus;
use mest::harness::{
    self, report, BlockSizeRule, ExperimentConfig, ModelSpec, MonotoneVerdict, RepRecord,
    Scenario, SimulatedRow,
};
use mest::rng;
use mest::scoring::{propriety_sweep, EnergyConfig, ScoreRule};

use crate::config::RunConfig;
use crate::output::{unix_now, write_atomic, RunManifest};
use crate::CliError;

fn resolved_block_size(scenario: &Scenario, n: usize) -> Option<(usize, f64)> {
    match &scenario.model {
        ModelSpec::FrechetBlockMaxima {
            baseline,
            block_size,
            ..
        } => {
            let r = block_size.resolve(n);
            Some((r, baseline.scaling(r)))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn simulate(
    cfg: &RunConfig,
    snapshot: String,
    config_path: &Path,
    seed: u64,
    out_root: &Path,
) -> Result<(), CliError> {
    let started = unix_now();
    let section = cfg.simulate_section()?;
    let row = cfg
        .scenario
        .simulate(section.n, seed)
        .map_err(|e| CliError::config(format!("simulation failed: {e}")))?;

    let dir = out_root.join(&cfg.id);
    let mut bytes = Vec::new();
    write_data_csv(&mut bytes, &row)?;
    write_atomic(&dir.join("data.csv"), &bytes)?;

    let resolved = match &row {
        SimulatedRow::BlockMax { row, a_r } => json!({
            "n": row.n,
            "kind": "block-maxima",
            "block_size": row.block_size,
            "a_r": a_r,
        }),
        SimulatedRow::Design(row) => json!({
            "n": row.n,
            "kind": "design",
            "kernel": row.kernel,
        }),
    };
    RunManifest::new("simulate", config_path, snapshot, seed, started)
        .finish(resolved)
        .write(&dir)?;
    println!("wrote {}", dir.join("data.csv").display());
    Ok(())
}

fn write_data_csv(writer: &mut Vec<u8>, row: &SimulatedRow) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let d = row.covariates().dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(CliError::data_from)?;
    for i in 0..row.n() {
        let mut record: Vec<String> = row
            .covariates()
            .row(i)
            .iter()
            .map(f64::to_string)
            .collect();
        record.push(row.values()[i].to_string());
        w.write_record(&record).map_err(CliError::data_from)?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FitDocument<'a> {
    schema_version: u32,
    id: &'a str,
    rule: String,
    n: usize,
    eta_hat: &'a [f64],
    criterion_value: f64,
    status: FitStatus,
    on_boundary: bool,
    feasible_start_found: bool,
    evaluations: usize,
    tau_hat: Option<f64>,
    trace: &'a [mest::estimator::TracePoint],
}

pub fn fit(
    cfg: &RunConfig,
    snapshot: String,
    config_path: &Path,
    data_path: &Path,
    seed: u64,
    out_root: &Path,
) -> Result<(), CliError> {
    let started = unix_now();
    let (covariates, values) = read_data_csv(data_path, cfg.scenario.design.dim())?;
    let row = cfg
        .scenario
        .row_from_data(covariates, values, seed)
        .map_err(|e| CliError::data(format!("{}: {e}", data_path.display())))?;
    let score_seed = rng::derive_seed(seed, &[rng::tags::SCORE]);
    let fitted = cfg
        .scenario
        .fit(&row, &cfg.rule, &cfg.fit, score_seed, false)
        .map_err(|e| CliError::config(format!("fit failed: {e}")))?;

    let dir = out_root.join(&cfg.id);
    let doc = FitDocument {
        schema_version: 1,
        id: &cfg.id,
        rule: cfg.rule.id(),
        n: row.n(),
        eta_hat: &fitted.result.eta_hat,
        criterion_value: fitted.result.criterion_value,
        status: fitted.result.status,
        on_boundary: fitted.result.on_boundary,
        feasible_start_found: fitted.result.feasible_start_found,
        evaluations: fitted.result.evaluations,
        tau_hat: fitted.tau_hat,
        trace: &fitted.result.trace,
    };
    let bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::io(e.to_string()))?;
    write_atomic(&dir.join("fit.json"), &bytes)?;
    RunManifest::new("fit", config_path, snapshot, seed, started)
        .finish(json!({
            "data_path": data_path.display().to_string(),
            "n": row.n(),
        }))
        .write(&dir)?;
    println!("wrote {}", dir.join("fit.json").display());
    if fitted.degenerate {
        return Err(CliError::degenerate(
            "every evaluated parameter was infeasible (criterion -inf)".into(),
        ));
    }
    Ok(())
}

fn read_data_csv(path: &Path, cov_dim: usize) -> Result<(Covariates, Vec<f64>), CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2; // header is line 1
        let record = record.map_err(|e| CliError::data(format!("row {lineno}: {e}")))?;
        if record.len() != cov_dim + 1 {
            return Err(CliError::data(format!(
                "row {lineno}: expected {} fields, got {}",
                cov_dim + 1,
                record.len()
            )));
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let mut fields =
            parsed.map_err(|e| CliError::data(format!("row {lineno}: {e}")))?;
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(CliError::data(format!("row {lineno}: non-finite value")));
        }
        let y = fields.pop().expect("width checked");
        rows.push(fields);
        values.push(y);
    }
    if values.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok((Covariates::from_rows(&rows), values))
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

pub fn experiment(
    cfg: &RunConfig,
    snapshot: String,
    config_path: &Path,
    seed: u64,
    out_root: &Path,
    dry_run: bool,
) -> Result<(), CliError> {
    let started = unix_now();
    let section = cfg.experiment_section()?;
    let exp = ExperimentConfig {
        id: cfg.id.clone(),
        scenario: cfg.scenario.clone(),
        rule: cfg.rule,
        n_schedule: section.n_schedule.clone(),
        replications: section.replications,
        master_seed: seed,
        fit: cfg.fit.clone(),
        thresholds: section.thresholds.clone(),
    };
    exp.validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    let dir = out_root.join(&exp.id);

    if dry_run {
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "experiment {} (dry run)", exp.id).ok();
        writeln!(stdout, "  config hash: {}", exp.config_hash()).ok();
        writeln!(stdout, "  rule: {}", exp.rule.id()).ok();
        writeln!(stdout, "  out: {}", dir.display()).ok();
        for &n in &exp.n_schedule {
            let block = resolved_block_size(&exp.scenario, n)
                .map(|(r, a_r)| format!(" block_size={r} a_r={a_r:.4}"))
                .unwrap_or_default();
            for rep in 0..exp.replications {
                let cell_seed =
                    rng::derive_seed(seed, &[rng::tags::EXPERIMENT, n as u64, rep as u64]);
                let path = report::cell_path(out_root, &exp.id, n, rep);
                let state = if path.exists() { "done" } else { "pending" };
                writeln!(
                    stdout,
                    "  cell n={n} rep={rep} seed={cell_seed}{block} [{state}]"
                )
                .ok();
            }
        }
        return Ok(());
    }

    // Resumable cell loop: completed cells are read back, the rest computed.
    use rayon::prelude::*;
    let cells: Vec<(usize, usize)> = exp
        .n_schedule
        .iter()
        .flat_map(|&n| (0..exp.replications).map(move |rep| (n, rep)))
        .collect();
    let records: Vec<RepRecord> = cells
        .par_iter()
        .map(|&(n, rep)| -> Result<RepRecord, CliError> {
            let path = report::cell_path(out_root, &exp.id, n, rep);
            if path.exists() {
                return report::read_cell(&path).map_err(|e| CliError::data(e.to_string()));
            }
            let record = harness::run_cell(&exp, n, rep)
                .map_err(|e| CliError::config(format!("cell ({n}, {rep}): {e}")))?;
            report::write_cell(out_root, &exp.id, &record)
                .map_err(|e| CliError::io(e.to_string()))?;
            Ok(record)
        })
        .collect::<Result<_, _>>()?;

    let consistency = harness::assemble_report(&exp, records)
        .map_err(|e| CliError::config(e.to_string()))?;
    report::write_rollup(out_root, &consistency).map_err(|e| CliError::io(e.to_string()))?;
    RunManifest::new("experiment", config_path, snapshot, seed, started)
        .finish(json!({
            "config_hash": consistency.config_hash,
            "cells": consistency.records.len(),
            "verdict": match consistency.verdict {
                MonotoneVerdict::Monotone => "monotone",
                MonotoneVerdict::MonotoneWithinNoise => "monotone-within-noise",
                MonotoneVerdict::NonMonotone => "non-monotone",
            },
        }))
        .write(&dir)?;

    for s in &consistency.summaries {
        println!(
            "n={:<6} median_error={:.5} p90={:.5} degenerate={}",
            s.n, s.median_error, s.p90_error, s.degenerate
        );
    }
    println!("verdict: {:?}", consistency.verdict);
    println!("wrote {}", dir.join("summary.json").display());

    if let Some(thresholds) = &exp.thresholds {
        let last = consistency
            .summaries
            .last()
            .expect("validated schedule is nonempty");
        if last.median_error.is_nan() || last.median_error >= thresholds.final_median_error {
            return Err(CliError::threshold(format!(
                "final median error {} is not below the configured {}",
                last.median_error, thresholds.final_median_error
            )));
        }
        if thresholds.require_monotone
            && consistency.verdict == MonotoneVerdict::NonMonotone
        {
            return Err(CliError::threshold(
                "median error sequence is not monotone".into(),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckOutcome {
    name: String,
    status: &'static str, // "pass" | "advisory" | "fail"
    details: serde_json::Value,
}

pub fn check(
    cfg: &RunConfig,
    snapshot: String,
    config_path: &Path,
    seed: u64,
    out_root: &Path,
) -> Result<(), CliError> {
    let started = unix_now();
    let section = cfg.check_section();
    let mut outcomes = Vec::new();
    for suite in &section.suites {
        let outcome = match suite.as_str() {
            "doa-uniform" => doa_uniform_suite(cfg, &section)?,
            "min-divergence" => min_divergence_suite(cfg, &section, seed)?,
            "identifiability" => identifiability_suite(cfg, &section, seed)?,
            "propriety" => propriety_suite(&section, seed)?,
            "tail-envelope" => tail_envelope_suite(cfg, &section, seed)?,
            other => {
                return Err(CliError::config(format!(
                    "unknown check suite `{other}` (expected doa-uniform, min-divergence, \
                     identifiability, propriety, tail-envelope)"
                )))
            }
        };
        outcomes.push(outcome);
    }

    let dir = out_root.join(&cfg.id);
    let bytes =
        serde_json::to_vec_pretty(&outcomes).map_err(|e| CliError::io(e.to_string()))?;
    write_atomic(&dir.join("checks.json"), &bytes)?;
    RunManifest::new("check", config_path, snapshot, seed, started)
        .finish(json!({ "suites": section.suites }))
        .write(&dir)?;

    let mut failed = Vec::new();
    for o in &outcomes {
        println!("{:<16} {}", o.name, o.status);
        if o.status == "fail" {
            failed.push(o.name.clone());
        }
    }
    println!("wrote {}", dir.join("checks.json").display());
    if !failed.is_empty() {
        return Err(CliError::check_failed(format!(
            "failing checks: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

fn require_tail_model(cfg: &RunConfig) -> Result<mest::blockmax::TailModel, CliError> {
    match &cfg.scenario.model {
        ModelSpec::FrechetBlockMaxima { baseline, .. } => {
            let d = cfg.scenario.design.dim();
            mest::blockmax::TailModel::from_scale_link(
                *baseline,
                cfg.scenario.eta0[0],
                mest::blockmax::LoglinearScale { cov_dim: d },
                cfg.scenario.eta0[1..1 + d].to_vec(),
            )
            .map_err(|e| CliError::config(e.to_string()))
        }
        _ => Err(CliError::config(
            "this suite needs a frechet-block-maxima scenario".into(),
        )),
    }
}

fn doa_uniform_suite(
    cfg: &RunConfig,
    section: &crate::config::CheckSection,
) -> Result<CheckOutcome, CliError> {
    let model = require_tail_model(cfg)?;
    let x_grid = cfg
        .scenario
        .design
        .generate(21)
        .map_err(|e| CliError::config(e.to_string()))?;
    let y_grid = [0.5, 1.0, 2.0, 4.0];
    let report = check_doa_uniform(&model, &x_grid, &y_grid, &section.r_schedule);
    let pass = report.strictly_decreasing;
    Ok(CheckOutcome {
        name: "doa-uniform".into(),
        status: if pass { "pass" } else { "fail" },
        details: serde_json::to_value(&report).unwrap_or_default(),
    })
}

fn min_divergence_suite(
    cfg: &RunConfig,
    section: &crate::config::CheckSection,
    seed: u64,
) -> Result<CheckOutcome, CliError> {
    let model = require_tail_model(cfg)?;
    let rule = match &cfg.scenario.model {
        ModelSpec::FrechetBlockMaxima { block_size, .. } => *block_size,
        _ => BlockSizeRule::LogSquared,
    };
    let mut schedule: Vec<(usize, usize)> = Vec::new();
    for &n in &section.n_schedule {
        schedule.push((n, 1)); // negative control: bounded minima
        schedule.push((n, rule.resolve(n)));
    }
    let report = check_min_maxima_divergence(
        &model,
        &cfg.scenario.design,
        &schedule,
        section.y_threshold,
        section.replications,
        seed,
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    let pass = !report.any_flag && report.coupled_monotone;
    Ok(CheckOutcome {
        name: "min-divergence".into(),
        status: if pass { "pass" } else { "fail" },
        details: serde_json::to_value(&report).unwrap_or_default(),
    })
}

fn identifiability_suite(
    cfg: &RunConfig,
    section: &crate::config::CheckSection,
    seed: u64,
) -> Result<CheckOutcome, CliError> {
    let summary = cfg
        .scenario
        .identifiability_report(section.grid_points_per_dim, section.mc_size, seed)
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(CheckOutcome {
        name: "identifiability".into(),
        status: if summary.any_violation { "fail" } else { "pass" },
        details: serde_json::to_value(&summary).unwrap_or_default(),
    })
}

fn propriety_suite(
    section: &crate::config::CheckSection,
    seed: u64,
) -> Result<CheckOutcome, CliError> {
    // The sweep runs on a fixed Normal box: propriety is a property of the
    // rules, not of the scenario under test.
    let lower = [-2.0, 0.5];
    let upper = [2.0, 3.0];
    let mut sweeps = Vec::new();
    let mut pass = true;
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
            &rule,
            &lower,
            &upper,
            section.propriety_pairs,
            0.1,
            section.mc_size,
            seed,
        )
        .map_err(|e| CliError::config(e.to_string()))?;
        pass &= sweep.passed;
        sweeps.push(sweep);
    }
    Ok(CheckOutcome {
        name: "propriety".into(),
        status: if pass { "pass" } else { "fail" },
        details: serde_json::to_value(&sweeps).unwrap_or_default(),
    })
}

fn tail_envelope_suite(
    cfg: &RunConfig,
    section: &crate::config::CheckSection,
    seed: u64,
) -> Result<CheckOutcome, CliError> {
    let t_grid: Vec<f64> = (1..=30).map(|k| k as f64 * 0.5).collect();
    let report = harness::tail_envelope_diagnostic(
        &cfg.scenario,
        &cfg.rule,
        &section.n_schedule,
        4,
        &t_grid,
        section.mc_size,
        seed,
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    Ok(CheckOutcome {
        name: "tail-envelope".into(),
        // Advisory only: the envelope hypothesis is analytic, a finite sample
        // can hint at a violation but cannot certify one.
        status: if report.flagged { "advisory" } else { "pass" },
        details: serde_json::to_value(&report).unwrap_or_default(),
    })
}
