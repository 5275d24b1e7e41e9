//! Report emission: raw long-format CSV, per-cell CSV files for resumable
//! runs, and a JSON summary carrying the config hash and master seed.
//!
//! All numeric formatting goes through Rust's shortest-round-trip `Display`,
//! so identical runs emit byte-identical files and parsed values round-trip
//! exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{ConsistencyReport, HarnessError, RepRecord};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema the summary document conforms to.
pub const SUMMARY_SCHEMA: &str = include_str!("../../schemas/consistency_summary.schema.json");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|g| g.to_string()).unwrap_or_default()
}

/// Raw long-format table: one line per `(n, rep)` cell.
pub fn write_raw_csv<W: Write>(report: &ConsistencyReport, writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "rep", "error", "gap"])?;
    for r in &report.records {
        w.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            r.error.to_string(),
            fmt_opt(r.gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub n: usize,
    pub rep: usize,
    pub error: f64,
    pub gap: Option<f64>,
}

pub fn read_raw_csv<R: Read>(reader: R) -> Result<Vec<RawRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let gap = record.get(3).unwrap_or("");
        rows.push(RawRow {
            n: record[0].parse().map_err(bad_field)?,
            rep: record[1].parse().map_err(bad_field)?,
            error: record[2].parse().map_err(bad_field)?,
            gap: if gap.is_empty() {
                None
            } else {
                Some(gap.parse().map_err(bad_field)?)
            },
        });
    }
    Ok(rows)
}

fn bad_field<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::InvalidConfig(format!("malformed raw csv field: {e}"))
}

/// `{root}/{id}/{n}/{rep}.csv`.
pub fn cell_path(root: &Path, id: &str, n: usize, rep: usize) -> PathBuf {
    root.join(id).join(n.to_string()).join(format!("{rep}.csv"))
}

const CELL_HEADER: [&str; 8] = [
    "n",
    "rep",
    "seed",
    "error",
    "gap",
    "degenerate",
    "eta_hat",
    "schema_version",
];

/// Persist one cell record atomically (write to a temp file, then rename).
pub fn write_cell(root: &Path, id: &str, record: &RepRecord) -> Result<PathBuf, HarnessError> {
    let path = cell_path(root, id, record.n, record.rep);
    fs::create_dir_all(path.parent().expect("cell path has a parent"))?;
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_writer(fs::File::create(&tmp)?);
        w.write_record(CELL_HEADER)?;
        let eta = record
            .eta_hat
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            record.n.to_string(),
            record.rep.to_string(),
            record.seed.to_string(),
            record.error.to_string(),
            fmt_opt(record.gap),
            record.degenerate.to_string(),
            eta,
            SCHEMA_VERSION.to_string(),
        ])?;
        w.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn read_cell(path: &Path) -> Result<RepRecord, HarnessError> {
    let mut r = csv::Reader::from_reader(fs::File::open(path)?);
    let record = r
        .records()
        .next()
        .ok_or_else(|| HarnessError::InvalidConfig(format!("empty cell file {path:?}")))??;
    let gap = record.get(4).unwrap_or("");
    let eta = record.get(6).unwrap_or("");
    Ok(RepRecord {
        n: record[0].parse().map_err(bad_field)?,
        rep: record[1].parse().map_err(bad_field)?,
        seed: record[2].parse().map_err(bad_field)?,
        error: record[3].parse().map_err(bad_field)?,
        gap: if gap.is_empty() {
            None
        } else {
            Some(gap.parse().map_err(bad_field)?)
        },
        degenerate: record[5].parse().map_err(bad_field)?,
        eta_hat: if eta.is_empty() {
            Vec::new()
        } else {
            eta.split(';')
                .map(|f| f.parse().map_err(bad_field))
                .collect::<Result<_, _>>()?
        },
    })
}

/// JSON summary with config hash, seed, per-n summaries and verdict.
pub fn write_summary_json<W: Write>(
    report: &ConsistencyReport,
    writer: W,
) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(writer, report)?;
    Ok(())
}

/// Write `raw.csv` and `summary.json` under `{root}/{id}/`.
pub fn write_rollup(root: &Path, report: &ConsistencyReport) -> Result<PathBuf, HarnessError> {
    let dir = root.join(&report.id);
    fs::create_dir_all(&dir)?;
    let raw_tmp = dir.join("raw.csv.tmp");
    write_raw_csv(report, fs::File::create(&raw_tmp)?)?;
    fs::rename(&raw_tmp, dir.join("raw.csv"))?;
    let sum_tmp = dir.join("summary.json.tmp");
    write_summary_json(report, fs::File::create(&sum_tmp)?)?;
    fs::rename(&sum_tmp, dir.join("summary.json"))?;
    Ok(dir)
}
