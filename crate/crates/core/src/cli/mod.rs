//! Command-line orchestration: config loading, sweeps, CSV reports,
//! snapshots and per-policy plot series.

pub mod config;
pub mod snapshot;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::evaluation::{cell_seed, sweep, MetricsRow};
use crate::scheduling::Policy;
use crate::{Error, Result};

pub use config::{load_config, parse_pa_grid, parse_policies, ConfigError, ExperimentConfig};
pub use snapshot::SnapshotDump;

pub const REPORT_HEADER: [&str; 8] = [
    "policy",
    "p_A",
    "mean_rate",
    "stderr",
    "served_fraction",
    "mean_load",
    "retained_fraction",
    "n_realizations",
];

pub const SERIES_HEADER: [&str; 3] = ["p_A", "mean_rate", "stderr"];

/// Writes report rows as CSV. Floats use Rust's shortest round-trip form,
/// which never depends on the locale.
pub fn write_report<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.policy.as_str().to_string(),
            r.p_a.to_string(),
            r.mean_rate.to_string(),
            r.stderr.to_string(),
            r.served_fraction.to_string(),
            r.mean_load.to_string(),
            r.retained_fraction.to_string(),
            r.n_realizations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub policy: Policy,
    pub p_a: f64,
    pub mean_rate: f64,
    pub stderr: f64,
    pub served_fraction: f64,
    pub mean_load: f64,
    pub retained_fraction: f64,
    pub n_realizations: usize,
}

pub fn read_report<R: Read>(input: R) -> Result<Vec<ReportRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(h) => h?,
    };
    if header.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(Error::Format {
            what: "report",
            line: 1,
            reason: format!("expected header `{}`", REPORT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in records.enumerate() {
        let line = k + 2;
        let rec = rec?;
        let fail = |reason: String| Error::Format {
            what: "report",
            line,
            reason,
        };
        if rec.len() != REPORT_HEADER.len() {
            return Err(fail(format!(
                "expected {} columns, found {}",
                REPORT_HEADER.len(),
                rec.len()
            )));
        }
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| fail(format!("column `{}` is not a number: `{}`", REPORT_HEADER[i], &rec[i])))
        };
        out.push(ReportRecord {
            policy: rec[0].parse::<Policy>().map_err(|e| fail(e.to_string()))?,
            p_a: num(1)?,
            mean_rate: num(2)?,
            stderr: num(3)?,
            served_fraction: num(4)?,
            mean_load: num(5)?,
            retained_fraction: num(6)?,
            n_realizations: rec[7]
                .parse::<usize>()
                .map_err(|_| fail(format!("n_realizations is not an integer: `{}`", &rec[7])))?,
        });
    }
    Ok(out)
}

/// Splits a report into one `(p_A, mean_rate, stderr)` series per policy and
/// writes each to `<out_dir>/<policy>.csv`. Returns the files written, which
/// is empty for an empty report.
pub fn emit_plotdata(report_csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let records = read_report(std::fs::File::open(report_csv)?)?;
    let mut series: BTreeMap<Policy, Vec<&ReportRecord>> = BTreeMap::new();
    for r in &records {
        series.entry(r.policy).or_default().push(r);
    }
    if series.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (policy, points) in series {
        let path = out_dir.join(format!("{policy}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(SERIES_HEADER)?;
        for p in points {
            w.write_record([p.p_a.to_string(), p.mean_rate.to_string(), p.stderr.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Path of the snapshot for `policy` next to the report at `out`.
pub fn snapshot_path(out: &Path, policy: Policy) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.snapshot.{policy}.txt"))
}

/// Runs the configured sweep and writes the CSV report to `out`.
///
/// With `snapshot`, also dumps realization 0 of the first grid cell of every
/// policy next to the report.
pub fn run(config: &ExperimentConfig, out: &Path, snapshot: bool) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let scenario = config.scenario()?;
    let rows = sweep(
        &scenario,
        &config.policies,
        &config.pa_grid,
        config.n_realizations,
        config.seed,
    )?;
    let file = std::fs::File::create(out)?;
    write_report(&rows, std::io::BufWriter::new(file))?;
    if snapshot {
        let p_a = config.pa_grid[0];
        for &policy in &config.policies {
            let dump = SnapshotDump::capture(&scenario, policy, p_a, cell_seed(config.seed, policy, 0), 0)?;
            std::fs::write(snapshot_path(out, policy), dump.to_text())?;
        }
    }
    Ok(rows)
}
