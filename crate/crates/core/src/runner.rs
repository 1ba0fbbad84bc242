//! Single runs and parameter sweeps with file output.
//!
//! Output layout and exit codes are described in `docs/cli.md`.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::SimConfig;
use crate::engine::{run, FrameLogRow, RunOutput};
use crate::error::{ConfigError, SimError};
use crate::metrics::SimReport;

/// Exit status of a successful command.
pub const EXIT_OK: i32 = 0;
/// Bad configuration or unreadable/unwritable files.
pub const EXIT_CONFIG: i32 = 1;
/// A run aborted on an internal consistency check.
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Sim(SimError),

    #[error("bad sweep: {0}")]
    Sweep(String),

    #[error("{failed} of {total} sweep points failed")]
    PartialSweep { failed: usize, total: usize, assertion: bool },
}

impl From<SimError> for RunnerError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => RunnerError::Config(c),
            other => RunnerError::Sim(other),
        }
    }
}

impl RunnerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Sim(_) => EXIT_ASSERTION,
            RunnerError::PartialSweep { assertion: true, .. } => EXIT_ASSERTION,
            _ => EXIT_CONFIG,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunnerError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), RunnerError> {
    let csv_err = |source| RunnerError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_report(dir: &Path, report: &SimReport) -> Result<(), RunnerError> {
    let path = dir.join("report.json");
    let mut f = create(&path)?;
    serde_json::to_writer_pretty(&mut f, &report.to_json()).map_err(|e| io_err(&path)(e.into()))?;
    writeln!(f).and_then(|_| f.flush()).map_err(io_err(&path))?;

    let path = dir.join("latency.csv");
    report.write_latency_csv(create(&path)?).map_err(|source| RunnerError::Csv { path, source })
}

/// Writes `report.json`, `latency.csv`, `frames.csv` and, when enabled in the
/// config, `sched.csv` and `trace.csv`.
pub fn write_run_outputs(dir: &Path, out: &RunOutput) -> Result<(), RunnerError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_report(dir, &out.report)?;
    write_csv(&dir.join("frames.csv"), &out.frames)?;
    let opts = &out.report.config.sim;
    if opts.log_sched {
        write_csv(&dir.join("sched.csv"), &out.sched_log)?;
    }
    if opts.trace_packets {
        write_csv(&dir.join("trace.csv"), &out.trace)?;
    }
    Ok(())
}

/// `run`: one seed, results into `out_dir`. Returns the one-line summary.
pub fn cmd_run(config: &Path, seed: u64, out_dir: &Path, overrides: &[String]) -> Result<String, RunnerError> {
    let cfg = crate::config::load_config_with_overrides(config, overrides)?;
    let out = run(&cfg, seed)?;
    write_run_outputs(out_dir, &out)?;
    Ok(out.report.summary_line())
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    P0Dbm,
    /// Total URLLC load per cell in Mbps, set by scaling both arrival rates.
    OfferedLoad,
    Scheduler,
    SelectionMode,
    /// Number of seeds per point (seeds `1..=value`).
    Seeds,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::P0Dbm => "p0_dbm",
            SweepAxis::OfferedLoad => "offered_load",
            SweepAxis::Scheduler => "scheduler",
            SweepAxis::SelectionMode => "selection_mode",
            SweepAxis::Seeds => "seeds",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = RunnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "p0_dbm" => SweepAxis::P0Dbm,
            "offered_load" => SweepAxis::OfferedLoad,
            "scheduler" => SweepAxis::Scheduler,
            "selection_mode" => SweepAxis::SelectionMode,
            "seeds" => SweepAxis::Seeds,
            other => {
                return Err(RunnerError::Sweep(format!(
                    "unknown axis `{other}` (expected p0_dbm, offered_load, scheduler, selection_mode or seeds)"
                )))
            }
        })
    }
}

/// One sweep: an axis, its values, and overrides applied at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub overrides: Vec<String>,
    /// Seeds `1..=seeds` per point (ignored on the `seeds` axis).
    pub seeds: u64,
}

/// A resolved sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: String,
    pub config: SimConfig,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<String>, seeds: u64) -> Result<Self, RunnerError> {
        if values.is_empty() {
            return Err(RunnerError::Sweep("no sweep values".into()));
        }
        if seeds == 0 && axis != SweepAxis::Seeds {
            return Err(RunnerError::Sweep("at least one seed per point is needed".into()));
        }
        Ok(SweepSpec {
            axis,
            values,
            overrides: Vec::new(),
            seeds,
        })
    }

    /// Builds every point's configuration up front so bad values fail early.
    pub fn points(&self, base: &SimConfig) -> Result<Vec<SweepPoint>, RunnerError> {
        let base = base.with_overrides(&self.overrides)?;
        self.values
            .iter()
            .map(|v| {
                let v = v.trim().to_string();
                let mut seeds: Vec<u64> = (1..=self.seeds).collect();
                let config = match self.axis {
                    SweepAxis::P0Dbm => base.with_overrides(&[format!("mac.p0_dbm={v}")])?,
                    SweepAxis::Scheduler => base.with_overrides(&[format!("mac.scheduler={v}")])?,
                    SweepAxis::SelectionMode => base.with_overrides(&[format!("tdd.mode={v}")])?,
                    SweepAxis::OfferedLoad => {
                        let mbps: f64 = v
                            .parse()
                            .ok()
                            .filter(|x: &f64| x.is_finite() && *x >= 0.0)
                            .ok_or_else(|| RunnerError::Sweep(format!("offered load `{v}` is not a rate in Mbps")))?;
                        let mut c = base.clone();
                        c.traffic.scale_to_offered_load(mbps * 1e6);
                        c.validate()?;
                        c
                    }
                    SweepAxis::Seeds => {
                        let n: u64 = v
                            .parse()
                            .ok()
                            .filter(|&n| n > 0)
                            .ok_or_else(|| RunnerError::Sweep(format!("seed count `{v}` is not a positive integer")))?;
                        seeds = (1..=n).collect();
                        base.clone()
                    }
                };
                Ok(SweepPoint { value: v, config, seeds })
            })
            .collect()
    }

    fn header(&self) -> String {
        let note = match self.axis {
            SweepAxis::OfferedLoad => " (Mbps per cell; lambda_dl and lambda_ul scaled jointly with UE counts fixed)",
            SweepAxis::Seeds => " (seeds 1..=value per point)",
            _ => "",
        };
        format!("# axis={}{note}; seeds per point={}", self.axis, self.seeds)
    }
}

/// Runs the seeds of one configuration in parallel and merges the reports
/// in seed order.
pub fn run_seeds(cfg: &SimConfig, seeds: &[u64]) -> Result<(SimReport, Vec<(u64, Vec<FrameLogRow>)>), SimError> {
    let outs: Vec<Result<RunOutput, SimError>> = seeds.par_iter().map(|&s| run(cfg, s)).collect();
    let mut reports = Vec::with_capacity(outs.len());
    let mut frames = Vec::with_capacity(outs.len());
    for (seed, o) in seeds.iter().zip(outs) {
        let o = o?;
        reports.push(o.report);
        frames.push((*seed, o.frames));
    }
    Ok((SimReport::merged(&reports).expect("at least one seed"), frames))
}

#[derive(serde::Serialize)]
struct SeededFrameRow<'a> {
    seed: u64,
    frame_idx: u64,
    bs: usize,
    mu_bar: f64,
    dl_fraction: f64,
    pattern: &'a str,
}

/// Outcome of one sweep point.
#[derive(Debug)]
pub struct PointResult {
    pub value: String,
    pub report: Result<SimReport, SimError>,
}

/// `sweep`: every (point, seed) pair runs on a pool of `workers` threads;
/// points are merged and written in value order.
pub fn cmd_sweep(
    config: &Path,
    spec: &SweepSpec,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<Vec<PointResult>, RunnerError> {
    let base = crate::config::load_config(config)?;
    let points = spec.points(&base)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| RunnerError::Sweep(e.to_string()))?;

    let jobs: Vec<(usize, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let outs: Vec<Result<RunOutput, SimError>> =
        pool.install(|| jobs.par_iter().map(|&(i, s)| run(&points[i].config, s)).collect());

    let mut per_point: Vec<Vec<RunOutput>> = points.iter().map(|_| Vec::new()).collect();
    let mut errors: Vec<Option<SimError>> = points.iter().map(|_| None).collect();
    for (&(i, _), o) in jobs.iter().zip(outs) {
        match o {
            Ok(o) => per_point[i].push(o),
            Err(e) => {
                if errors[i].is_none() {
                    errors[i] = Some(e);
                }
            }
        }
    }

    let summary_path = out_dir.join("summary.csv");
    let mut summary = create(&summary_path)?;
    writeln!(summary, "{}", spec.header()).map_err(io_err(&summary_path))?;
    writeln!(summary, "axis_value,p50_ms,p99_ms,p999_ms,embb_median_mbps,drop_rate").map_err(io_err(&summary_path))?;

    let mut results = Vec::with_capacity(points.len());
    for (i, ((point, outs), err)) in points.iter().zip(per_point).zip(errors).enumerate() {
        let dir = out_dir.join(format!("{i:03}_{}_{}", spec.axis, sanitize(&point.value)));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let report = match err {
            Some(e) => {
                let path = dir.join("error.txt");
                fs::write(&path, format!("{e}\n")).map_err(io_err(&path))?;
                writeln!(summary, "{},,,,,", point.value).map_err(io_err(&summary_path))?;
                Err(e)
            }
            None => {
                let reports: Vec<SimReport> = outs.iter().map(|o| o.report.clone()).collect();
                let merged = SimReport::merged(&reports).expect("at least one seed");
                write_report(&dir, &merged)?;
                let frames: Vec<SeededFrameRow> = outs
                    .iter()
                    .zip(&point.seeds)
                    .flat_map(|(o, &seed)| {
                        o.frames.iter().map(move |r| SeededFrameRow {
                            seed,
                            frame_idx: r.frame_idx,
                            bs: r.bs,
                            mu_bar: r.mu_bar,
                            dl_fraction: r.dl_fraction,
                            pattern: &r.pattern,
                        })
                    })
                    .collect();
                write_csv(&dir.join("frames.csv"), &frames)?;
                let s = merged.summary();
                writeln!(
                    summary,
                    "{},{},{},{},{},{}",
                    point.value,
                    s.p50.display_ms(),
                    s.p99.display_ms(),
                    s.p999.display_ms(),
                    s.embb_median_mbps.map_or("nodata".to_string(), |m| format!("{m:.6}")),
                    s.drop_rate,
                )
                .map_err(io_err(&summary_path))?;
                Ok(merged)
            }
        };
        results.push(PointResult {
            value: point.value.clone(),
            report,
        });
    }
    summary.flush().map_err(io_err(&summary_path))?;

    let failed: Vec<&PointResult> = results.iter().filter(|r| r.report.is_err()).collect();
    if !failed.is_empty() {
        let assertion = failed.iter().any(|r| !matches!(r.report, Err(SimError::Config(_))));
        return Err(RunnerError::PartialSweep {
            failed: failed.len(),
            total: results.len(),
            assertion,
        });
    }
    Ok(results)
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names_round_trip() {
        for a in [
            SweepAxis::P0Dbm,
            SweepAxis::OfferedLoad,
            SweepAxis::Scheduler,
            SweepAxis::SelectionMode,
            SweepAxis::Seeds,
        ] {
            assert_eq!(a.as_str().parse::<SweepAxis>().unwrap(), a);
        }
        assert!("lambda".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn points_apply_axis_values() {
        let base = SimConfig::default();
        let spec = SweepSpec::new(SweepAxis::P0Dbm, vec!["-90".into(), "-30".into()], 2).unwrap();
        let pts = spec.points(&base).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].config.mac.p0_dbm, -30.0);
        assert_eq!(pts[0].seeds, vec![1, 2]);

        let spec = SweepSpec::new(SweepAxis::OfferedLoad, vec!["0.5".into(), "3".into()], 1).unwrap();
        let pts = spec.points(&base).unwrap();
        let (_, _, total) = pts[1].config.traffic.urllc_offered_load();
        assert!((total - 3e6).abs() < 1e-3);
        assert_eq!(pts[1].config.traffic.lambda_dl, pts[1].config.traffic.lambda_ul);

        let spec = SweepSpec::new(SweepAxis::Scheduler, vec!["nonsense".into()], 1).unwrap();
        assert!(spec.points(&base).is_err());
    }

    #[test]
    fn empty_values_rejected() {
        assert!(SweepSpec::new(SweepAxis::Seeds, vec![], 1).is_err());
    }

    #[test]
    fn exit_codes() {
        let e: RunnerError = SimError::Assertion {
            symbol: 3,
            message: "x".into(),
        }
        .into();
        assert_eq!(e.exit_code(), EXIT_ASSERTION);
        let e: RunnerError = ConfigError::Parse("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }
}
