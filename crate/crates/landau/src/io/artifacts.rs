//! Run-directory artifacts: diagnostics.csv, summary.json, manifest.json and
//! state checkpoints, plus restart and recompute-and-verify (diagnose).
//!
//! Everything except manifest.json (which records wall-clock time) is
//! deterministic: identical specs produce byte-identical files.

use crate::diagnostics::{record_state, DiagnosticsRecord, ProductionGrid};
use crate::dynamics::{run_from, BlowupReport, Domain, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{mass, CartesianGrid3, Field, RadialGrid};
use crate::io::checkpoint::Checkpoint;
use crate::io::config::{GridSpec, RunSpec};
use crate::io::csv::{csv_row, HEADER};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CSV_NAME: &str = "diagnostics.csv";
pub const SUMMARY_NAME: &str = "summary.json";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginSummary {
    pub a_lb_min: f64,
    pub est_a1_min: f64,
    pub h_lb_min: f64,
    pub e_ub_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunSpec,
    pub grid_description: String,
    pub rows: usize,
    pub final_t: f64,
    pub final_mass: f64,
    pub final_e: f64,
    pub final_h: f64,
    pub margins: MarginSummary,
    pub entropy_nonincreasing: bool,
    pub second_moment_increasing: bool,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupReport>,
}

/// Written separately because wall-clock time cannot be deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub grid_description: String,
    pub outputs: Vec<ManifestEntry>,
    pub wall_clock_seconds: f64,
    /// Placeholder: runs are deterministic, no randomness is consumed.
    pub determinism_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub rows: usize,
}

/// Execute the configured run and write every artifact into `dir`.
pub fn run_to_dir(spec: &RunSpec, dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    match spec.grid {
        GridSpec::Radial { r_max, n } => {
            let grid = RadialGrid::new(r_max, n)?;
            let u0 = spec.profile()?.sample_radial(&grid)?;
            execute(grid, u0, spec, dir)
        }
        GridSpec::Box3 { half_width, n } => {
            let grid = CartesianGrid3::new(half_width, n)?;
            let u0 = spec.profile()?.sample_box(&grid)?;
            execute(grid, u0, spec, dir)
        }
    }
}

/// Resume from a checkpoint and write the continuation artifacts into `dir`.
/// The emitted slices reproduce the uninterrupted run byte-for-byte from the
/// checkpointed step onward.
pub fn resume_to_dir(spec: &RunSpec, checkpoint: &Path, dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    let ck = Checkpoint::read(checkpoint)?;
    if ck.grid != spec.grid {
        return Err(Error::Checkpoint(format!(
            "checkpoint grid {:?} does not match the config grid {:?}",
            ck.grid, spec.grid
        )));
    }
    match ck.grid {
        GridSpec::Radial { .. } => {
            let u = ck.radial_field()?;
            let grid = u.grid().clone();
            let solver = grid.make_solver()?;
            let state = SimState::restored(ck.t, ck.step, u, ck.clipped_mass, &solver)?;
            continue_run(grid, state, ck.mass0, spec, dir)
        }
        GridSpec::Box3 { .. } => {
            let u = ck.box_field()?;
            let grid = u.grid().clone();
            let solver = grid.make_solver()?;
            let state = SimState::restored(ck.t, ck.step, u, ck.clipped_mass, &solver)?;
            continue_run(grid, state, ck.mass0, spec, dir)
        }
    }
}

fn execute<G: Domain + ProductionGrid>(
    grid: G,
    u0: Field<G>,
    spec: &RunSpec,
    dir: &Path,
) -> Result<RunSummary> {
    let config = spec.sim_config();
    let solver = grid.make_solver()?;
    let state = SimState::initial(u0, &solver)?;
    let mass0 = mass(&state.u)?;
    let mut traj = Trajectory {
        config: config.clone(),
        slices: Vec::new(),
        blowup: None,
        warnings: config.warnings(),
    };
    let start = Instant::now();
    run_from(state, &solver, &config, &mut traj)?;
    write_artifacts(&traj, mass0, spec, dir, start)
}

fn continue_run<G: Domain + ProductionGrid>(
    grid: G,
    state: SimState<G>,
    mass0: f64,
    spec: &RunSpec,
    dir: &Path,
) -> Result<RunSummary> {
    let config = spec.sim_config();
    let solver = grid.make_solver()?;
    let mut traj = Trajectory {
        config: config.clone(),
        slices: Vec::new(),
        blowup: None,
        warnings: config.warnings(),
    };
    let start = Instant::now();
    run_from(state, &solver, &config, &mut traj)?;
    write_artifacts(&traj, mass0, spec, dir, start)
}

fn write_artifacts<G: Domain + ProductionGrid>(
    traj: &Trajectory<G>,
    mass0: f64,
    spec: &RunSpec,
    dir: &Path,
    start: Instant,
) -> Result<RunSummary> {
    let calib = spec.calibration();
    let records: Vec<DiagnosticsRecord> = traj
        .slices
        .iter()
        .map(|s| record_state(s, mass0, &calib))
        .collect::<Result<_>>()?;

    let mut csv = String::with_capacity(records.len() * 256);
    csv.push_str(HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&csv_row(r));
        csv.push('\n');
    }
    std::fs::write(dir.join(CSV_NAME), csv.as_bytes())?;

    let mut checkpoints = 0usize;
    if spec.output.checkpoint_stride > 0 {
        for (i, slice) in traj.slices.iter().enumerate() {
            if i % spec.output.checkpoint_stride != 0 && i + 1 != traj.slices.len() {
                continue;
            }
            let ck = Checkpoint {
                grid: spec.grid.clone(),
                t: slice.t,
                step: slice.step,
                mass0,
                clipped_mass: slice.clipped_mass,
                values: slice.u.values().to_vec(),
            };
            ck.write(&dir.join(format!("state_{:08}.ck", slice.step)))?;
            checkpoints += 1;
        }
    }

    let grid_description = traj.slices[0].u.grid().describe();
    let margins = MarginSummary {
        a_lb_min: records.iter().map(|r| r.a_min_margin).fold(f64::INFINITY, f64::min),
        est_a1_min: records.iter().map(|r| r.a_ub_margin).fold(f64::INFINITY, f64::min),
        h_lb_min: records.iter().map(|r| r.h_lb_margin).fold(f64::INFINITY, f64::min),
        e_ub_min: records.iter().map(|r| r.e_ub_margin).fold(f64::INFINITY, f64::min),
    };
    let entropy_nonincreasing = records.windows(2).all(|w| w[1].h <= w[0].h + 1e-9 * w[0].h.abs());
    let second_moment_increasing = records.windows(2).all(|w| w[1].e > w[0].e);
    let last = records.last().expect("at least one slice");
    let summary = RunSummary {
        config: spec.clone(),
        grid_description: grid_description.clone(),
        rows: records.len(),
        final_t: last.t,
        final_mass: last.mass,
        final_e: last.e,
        final_h: last.h,
        margins,
        entropy_nonincreasing,
        second_moment_increasing,
        warnings: traj.warnings.clone(),
        blowup: traj.blowup.clone(),
    };
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    std::fs::write(dir.join(SUMMARY_NAME), summary_json.as_bytes())?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        grid_description,
        outputs: vec![
            ManifestEntry { name: CSV_NAME.into(), rows: records.len() },
            ManifestEntry { name: SUMMARY_NAME.into(), rows: 1 },
            ManifestEntry { name: "state_*.ck".into(), rows: checkpoints },
        ],
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        determinism_seed: 0,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    std::fs::write(dir.join(MANIFEST_NAME), manifest_json.as_bytes())?;

    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_NAME))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad summary.json: {e}")))
}

fn checkpoint_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("state_") && n.ends_with(".ck"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// A trajectory reconstructed from a run directory's checkpoints.
pub enum LoadedTrajectory {
    Radial(Trajectory<RadialGrid>, f64),
    Box3(Trajectory<CartesianGrid3>, f64),
}

/// Rebuild the emitted trajectory from the stored states (requires the run
/// to have been configured with `output.checkpoint_stride = 1`).
pub fn load_trajectory(dir: &Path) -> Result<LoadedTrajectory> {
    let summary = read_summary(dir)?;
    let spec = &summary.config;
    let paths = checkpoint_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::Checkpoint(format!(
            "no checkpoints in {}; rerun with output.checkpoint_stride = 1",
            dir.display()
        )));
    }
    let config = spec.sim_config();
    match spec.grid {
        GridSpec::Radial { .. } => {
            let mut slices = Vec::new();
            let mut mass0 = 0.0;
            let solver = ();
            for p in &paths {
                let ck = Checkpoint::read(p)?;
                mass0 = ck.mass0;
                let u = ck.radial_field()?;
                slices.push(SimState::restored(ck.t, ck.step, u, ck.clipped_mass, &solver)?);
            }
            Ok(LoadedTrajectory::Radial(
                Trajectory { config, slices, blowup: summary.blowup.clone(), warnings: vec![] },
                mass0,
            ))
        }
        GridSpec::Box3 { half_width, n } => {
            let grid = CartesianGrid3::new(half_width, n)?;
            let solver = grid.make_solver()?;
            let mut slices = Vec::new();
            let mut mass0 = 0.0;
            for p in &paths {
                let ck = Checkpoint::read(p)?;
                mass0 = ck.mass0;
                let u = ck.box_field()?;
                slices.push(SimState::restored(ck.t, ck.step, u, ck.clipped_mass, &solver)?);
            }
            Ok(LoadedTrajectory::Box3(
                Trajectory { config, slices, blowup: summary.blowup.clone(), warnings: vec![] },
                mass0,
            ))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub states_checked: usize,
    pub value_mismatches: usize,
    pub byte_mismatches: usize,
}

/// Recompute every stored state's diagnostics and cross-check them against
/// the stored CSV, numerically (1e-12 relative) and byte-for-byte.
pub fn diagnose(dir: &Path) -> Result<DiagnoseReport> {
    let summary = read_summary(dir)?;
    let spec = &summary.config;
    let calib = spec.calibration();
    let csv_text = std::fs::read_to_string(dir.join(CSV_NAME))?;
    let mut lines = csv_text.lines();
    let header = lines.next().unwrap_or("");
    if header != HEADER {
        return Err(Error::Config(format!("unexpected CSV header `{header}`")));
    }
    let rows: Vec<&str> = lines.collect();
    let paths = checkpoint_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::Checkpoint("run directory holds no checkpoints".into()));
    }

    let mut checked = 0usize;
    let mut value_mismatches = 0usize;
    let mut byte_mismatches = 0usize;
    let mut check_row = |row_new: String, record_t: f64| {
        // Match the stored row by its time field.
        let found = rows.iter().find(|line| {
            line.split(',')
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .map(|t| t.to_bits() == record_t.to_bits())
                .unwrap_or(false)
        });
        match found {
            Some(line) => {
                if *line != row_new {
                    byte_mismatches += 1;
                    let stored: Vec<f64> =
                        line.split(',').filter_map(|s| s.parse().ok()).collect();
                    let fresh: Vec<f64> =
                        row_new.split(',').filter_map(|s| s.parse().ok()).collect();
                    let bad = stored.len() != fresh.len()
                        || stored.iter().zip(&fresh).any(|(a, b)| {
                            (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300)
                        });
                    if bad {
                        value_mismatches += 1;
                    }
                }
            }
            None => {
                value_mismatches += 1;
                byte_mismatches += 1;
            }
        }
        checked += 1;
    };

    match load_trajectory(dir)? {
        LoadedTrajectory::Radial(traj, mass0) => {
            for s in &traj.slices {
                let rec = record_state(s, mass0, &calib)?;
                check_row(csv_row(&rec), rec.t);
            }
        }
        LoadedTrajectory::Box3(traj, mass0) => {
            for s in &traj.slices {
                let rec = record_state(s, mass0, &calib)?;
                check_row(csv_row(&rec), rec.t);
            }
        }
    }
    Ok(DiagnoseReport { states_checked: checked, value_mismatches, byte_mismatches })
}
