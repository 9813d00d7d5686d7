//! Single runs and parameter sweeps, plus the Markovian-oracle comparison.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use sqbath::{evolve, evolve_lindblad, max_fidelity, TrajectoryRecord};

use crate::config::{RunConfig, SweepParam, SweepValue};
use crate::error::{CliError, Result};
use crate::output::{sidecar, write_sweep_csv, write_trajectory_csv};

/// Integrates one configuration (its sweep axis, if any, is ignored).
pub fn simulate(cfg: &RunConfig) -> Result<TrajectoryRecord> {
    let model = cfg.build_model()?;
    let mut record = evolve(&model, &cfg.integrator()?)?;
    record.metadata.extend(run_metadata(cfg));
    Ok(record)
}

fn run_metadata(cfg: &RunConfig) -> Vec<(String, String)> {
    vec![
        ("model".into(), cfg.model.name().into()),
        ("lindblad_kind".into(), cfg.lindblad_kind.to_string()),
        ("critical_r".into(), {
            let c = sqbath::critical_r(cfg.theta);
            if c.has_peak { c.value.to_string() } else { "none".into() }
        }),
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

#[derive(Debug)]
pub struct RunOutput {
    pub record: TrajectoryRecord,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// Runs one trajectory and writes `<stem>.csv` plus the `<stem>.meta` sidecar.
pub fn run_single(cfg: &RunConfig, out_dir: &Path, stem: &str) -> Result<RunOutput> {
    if cfg.sweep.is_some() {
        return Err(CliError::UnexpectedSweep);
    }
    let record = simulate(cfg)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let meta_path = out_dir.join(format!("{stem}.meta"));
    write_file(&csv_path, |w| write_trajectory_csv(w, &record))?;
    let meta = sidecar(&cfg.to_document(), &record.metadata);
    write_file(&meta_path, |w| w.write_all(meta.as_bytes()))?;
    info!("wrote {}", csv_path.display());
    Ok(RunOutput { record, csv_path, meta_path })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub t_star: f64,
    pub f_max: f64,
    /// Sampled fidelity nearest the observation time.
    pub f_at_t: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: SweepValue,
    /// `Err` holds the abort diagnostic of a flagged point.
    pub outcome: std::result::Result<SweepPoint, String>,
    pub record: Option<TrajectoryRecord>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Swept value with the largest `F_max` (earliest on ties).
    pub fn argmax(&self) -> Option<(SweepValue, f64)> {
        let mut best: Option<(SweepValue, f64)> = None;
        for row in &self.rows {
            if let Ok(p) = &row.outcome {
                if best.is_none_or(|(_, f)| p.f_max > f) {
                    best = Some((row.value, p.f_max));
                }
            }
        }
        best
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn sweep_point(base: &RunConfig, param: SweepParam, value: SweepValue) -> SweepRow {
    let outcome = base.point(param, value).and_then(|cfg| {
        let record = simulate(&cfg)?;
        let (t_star, f_max) = max_fidelity(&record)?;
        let f_at_t = record.fidelity_near(cfg.observation_time()).unwrap_or(f64::NAN);
        Ok((SweepPoint { t_star, f_max, f_at_t }, record))
    });
    match outcome {
        Ok((point, record)) => SweepRow { value, outcome: Ok(point), record: Some(record) },
        Err(e) => {
            warn!("{}={value}: {e}", param.key());
            SweepRow { value, outcome: Err(e.to_string()), record: None }
        }
    }
}

/// Evaluates every sweep value, in parallel when `threads != Some(1)`.
/// Row order always follows the input order.
pub fn sweep(cfg: &RunConfig, threads: Option<usize>) -> Result<SweepResult> {
    let axis = cfg.sweep.as_ref().ok_or(CliError::NoSweep)?;
    let param = axis.param;
    let work = || -> Vec<SweepRow> {
        axis.values.par_iter().map(|&v| sweep_point(cfg, param, v)).collect()
    };
    let rows = match threads {
        Some(1) => axis.values.iter().map(|&v| sweep_point(cfg, param, v)).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::InvalidValue { key: "threads".into(), message: e.to_string() })?
            .install(work),
        None => work(),
    };
    Ok(SweepResult { param, rows })
}

#[derive(Debug)]
pub struct SweepOutput {
    pub result: SweepResult,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub point_paths: Vec<Option<PathBuf>>,
}

/// Runs a sweep and writes `<stem>.sweep.csv`, its sidecar and one
/// `<stem>.pointNN.csv` trajectory per successful point.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path, stem: &str, threads: Option<usize>) -> Result<SweepOutput> {
    let result = sweep(cfg, threads)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(format!("{stem}.sweep.csv"));
    let meta_path = out_dir.join(format!("{stem}.sweep.meta"));
    write_file(&csv_path, |w| write_sweep_csv(w, &result))?;

    let mut point_paths = Vec::with_capacity(result.rows.len());
    let mut notes: Vec<(String, String)> = Vec::new();
    for (i, row) in result.rows.iter().enumerate() {
        match (&row.record, &row.outcome) {
            (Some(record), _) => {
                let path = out_dir.join(format!("{stem}.point{i:02}.csv"));
                write_file(&path, |w| write_trajectory_csv(w, record))?;
                notes.push((format!("point{i:02}"), format!("{}={} -> {}", result.param.key(), row.value, path.display())));
                point_paths.push(Some(path));
            }
            (None, Err(e)) => {
                notes.push((format!("point{i:02}"), format!("{}={} aborted: {e}", result.param.key(), row.value)));
                point_paths.push(None);
            }
            (None, Ok(_)) => unreachable!("successful rows carry a record"),
        }
    }
    let meta = sidecar(&cfg.to_document(), &notes);
    write_file(&meta_path, |w| w.write_all(meta.as_bytes()))?;
    Ok(SweepOutput { result, csv_path, meta_path, point_paths })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    /// `max_t |F_evolve(t) − F_lindblad(t)|` over the shared samples.
    pub max_abs_diff: f64,
    pub at_time: f64,
    pub samples: usize,
    pub final_evolve: f64,
    pub final_lindblad: f64,
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "samples          {}", self.samples)?;
        writeln!(f, "max |dF|         {:.6e} at t = {}", self.max_abs_diff, self.at_time)?;
        writeln!(f, "F(T) evolve      {:.9}", self.final_evolve)?;
        write!(f, "F(T) lindblad    {:.9}", self.final_lindblad)
    }
}

/// Runs the non-Markovian and Markovian-limit equations on the same model.
pub fn compare_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let model = cfg.build_model()?;
    let integ = cfg.integrator()?;
    let a = evolve(&model, &integ)?;
    let b = evolve_lindblad(&model, &integ)?;
    let (mut worst, mut at) = (0.0f64, 0.0);
    for ((t, fa), fb) in a.times.iter().zip(&a.fidelity).zip(&b.fidelity) {
        let d = (fa - fb).abs();
        if d > worst {
            worst = d;
            at = *t;
        }
    }
    Ok(OracleReport {
        max_abs_diff: worst,
        at_time: at,
        samples: a.len(),
        final_evolve: a.final_fidelity().unwrap_or(f64::NAN),
        final_lindblad: b.final_fidelity().unwrap_or(f64::NAN),
    })
}
