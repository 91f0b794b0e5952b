use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ExperimentKind, PerturbationShape};
use crate::diagnostics::{
    amplitude_window, check_decay_bound, fit_growth, integrated_identity, DecayReport,
    DiagnosticsError, GrowthFit, IdentityCheck, Recorder,
};
use crate::integrator::{plane_wave, random_solenoidal, RunSummary, Solver, SolverError};
use crate::linear::{
    band_lattice_count, classify_disordered, classify_ordered, growth_mode, growth_rate,
    lattice_max_growth, phase_diagram, unstable_band, write_phase_csv, LinearError,
    StabilityReport,
};
use crate::model::{ModelError, StateKind, TransformedSystem};
use crate::spectral::{SpectralError, SpectralField, SpectralGrid};

/// Relative growth-rate errors are measured against `max(|predicted|, RATE_FLOOR)`.
pub const RATE_FLOOR: f64 = 1e-6;
/// Divergence and Hermitian-symmetry residual allowed after any step.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;
/// Relative increase of `‖v‖²` between samples tolerated as round-off.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

pub const DISPERSION_CSV_HEADER: &str =
    "gamma0,alpha,gamma2,beta,mode,k_sq,predicted_rate,measured_rate,r_squared,rel_error,pass";
pub const GROWTH_CSV_HEADER: &str =
    "mode,k_sq,predicted_rate,measured_rate,r_squared,window_start,window_end,samples,rel_error";
pub const CHECKS_CSV_HEADER: &str = "name,value,threshold,passed,asserted";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit code: 3 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 3,
            _ => 2,
        }
    }
}

/// One numeric check. Only `asserted` checks decide the exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub asserted: bool,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            asserted: true,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            asserted: true,
        }
    }

    fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: f64::NAN,
            passed: true,
            asserted: false,
        }
    }
}

/// Measured against predicted growth of one wavevector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub mode: Vec<i64>,
    pub k_sq: f64,
    pub predicted: f64,
    pub fit: Option<GrowthFit>,
    pub rel_error: f64,
    pub passed: bool,
}

impl RateRow {
    pub fn measured(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.rate)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
    pub rates: Vec<RateRow>,
    pub stability: Option<StabilityReport>,
    pub decay: Option<DecayReport>,
    pub identity: Option<IdentityCheck>,
    pub outputs: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            checks: Vec::new(),
            warnings: Vec::new(),
            rates: Vec::new(),
            stability: None,
            decay: None,
            identity: None,
            outputs: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.asserted)
    }

    /// 0 when every asserted check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn mode_label(m: &[i64]) -> String {
    m.iter().map(i64::to_string).collect::<Vec<_>>().join("_")
}

struct Sink<'a> {
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn write(
        &self,
        report: &mut ExperimentReport,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), ExperimentError> {
        let Some(dir) = self.dir else { return Ok(()) };
        let path = dir.join(name);
        let io = |source| ExperimentError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
        report.outputs.push(path);
        Ok(())
    }
}

/// Run the experiment described by `config`. Output files go to `out`
/// (created if needed); with `None` nothing is written.
pub fn run_experiment(
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let sink = Sink { dir: out };
    let mut report = ExperimentReport::new(config.experiment);
    match config.experiment {
        ExperimentKind::PhaseDiagram => phase(config, &sink, &mut report)?,
        ExperimentKind::Dispersion => dispersion(config, &sink, &mut report)?,
        _ => time_stepping(config, &sink, &mut report)?,
    }
    let checks = report.checks.clone();
    sink.write(&mut report, "checks.csv", |w| {
        writeln!(w, "{CHECKS_CSV_HEADER}")?;
        for c in &checks {
            writeln!(
                w,
                "{},{:e},{:e},{},{}",
                c.name, c.value, c.threshold, c.passed, c.asserted
            )?;
        }
        Ok(())
    })?;
    let json = serde_json::to_string_pretty(&report).expect("report is serializable");
    sink.write(&mut report, "report.json", |w| writeln!(w, "{json}"))?;
    Ok(report)
}

fn stability(config: &ExperimentConfig) -> Result<StabilityReport, LinearError> {
    match config.state {
        StateKind::Disordered => classify_disordered(&config.params),
        StateKind::Ordered => classify_ordered(&config.params),
    }
}

fn phase(
    config: &ExperimentConfig,
    sink: &Sink,
    report: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    let r = &config.phase;
    let cells = phase_diagram(&config.params, r.gamma0, r.alpha, r.resolution)?;
    // The lattice-free classification must agree with the sign of its own
    // growth rate in every cell.
    let disagreements = cells
        .iter()
        .filter(|c| {
            let unstable = c.disordered.classification == crate::linear::Classification::ExponentiallyUnstable;
            unstable != (c.disordered.max_growth_rate > 0.0)
        })
        .count();
    report.checks.push(CheckResult::at_most(
        "classification_sign_mismatches",
        disagreements as f64,
        0.0,
    ));
    report.checks.push(CheckResult::info("cells", cells.len() as f64));
    sink.write(report, "phase.csv", |w| write_phase_csv(w, &cells))
}

fn grid_and_system(
    config: &ExperimentConfig,
) -> Result<(Arc<SpectralGrid>, TransformedSystem), ExperimentError> {
    let grid = SpectralGrid::new(config.params.dim, config.n, config.length)?;
    Ok((grid, config.system()?))
}

fn design_warnings(
    config: &ExperimentConfig,
    grid: &SpectralGrid,
    system: &TransformedSystem,
    report: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    if config.state == StateKind::Disordered {
        let band = unstable_band(&config.params);
        let count = band_lattice_count(&band, grid);
        if band.has_band && count < 3 {
            report.warnings.push(format!(
                "only {count} lattice wavenumber(s) lie inside the unstable band ({:.4}, {:.4}); enlarge the box",
                band.s_minus_sq, band.s_plus_sq
            ));
        }
    }
    let (rate, _) = lattice_max_growth(system, grid)?;
    if rate > 0.0 && config.solver.dt * rate > 0.1 {
        report.warnings.push(format!(
            "dt * max_growth_rate = {:.3} exceeds 0.1; reduce dt",
            config.solver.dt * rate
        ));
    }
    Ok(())
}

fn wavevector(grid: &SpectralGrid, m: &[i64]) -> Vec<f64> {
    m.iter().map(|&c| c as f64 * grid.dk()).collect()
}

fn initial_field(
    config: &ExperimentConfig,
    grid: &Arc<SpectralGrid>,
    system: &TransformedSystem,
    modes: &[Vec<i64>],
) -> Result<SpectralField, ExperimentError> {
    let p = &config.perturbation;
    match p.shape {
        PerturbationShape::Random => Ok(random_solenoidal(grid, p.amplitude, p.k0, config.solver.seed)?),
        PerturbationShape::Eigenmode => {
            let mut u = SpectralField::zeros(grid);
            for m in modes {
                let mode = growth_mode(system, &wavevector(grid, m))?;
                u.add_scaled(1.0, &plane_wave(grid, m, &mode.direction, p.amplitude)?);
            }
            Ok(u)
        }
    }
}

fn rel_error(measured: f64, predicted: f64) -> f64 {
    (measured - predicted).abs() / predicted.abs().max(RATE_FLOOR)
}

fn structure_checks(summary: &RunSummary, report: &mut ExperimentReport) {
    report.checks.push(CheckResult::at_most(
        "max_divergence_residual",
        summary.max_divergence_residual,
        STRUCTURE_TOLERANCE,
    ));
    report.checks.push(CheckResult::at_most(
        "max_reality_defect",
        summary.max_reality_defect,
        STRUCTURE_TOLERANCE,
    ));
}

fn dispersion(
    config: &ExperimentConfig,
    sink: &Sink,
    report: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    let (grid, system) = grid_and_system(config)?;
    design_warnings(config, &grid, &system, report)?;
    report.stability = Some(stability(config)?);
    let tol = config.checks.rate_tolerance;
    // one independent run per tracked wavevector
    let rows: Vec<Result<(RateRow, RunSummary), ExperimentError>> = config
        .perturbation
        .tracked
        .par_iter()
        .map(|m| {
            let k = wavevector(&grid, m);
            let predicted = growth_rate(&system, &k)?;
            let solver = Solver::new(Arc::clone(&grid), system.clone(), config.solver)?;
            let u0 = initial_field(config, &grid, &system, std::slice::from_ref(m))?;
            let mut rec = Recorder::new(vec![m.clone()]);
            let summary = solver.run(u0, &mut rec)?;
            let series = rec.mode_series(&grid, 0);
            // drop trailing samples that underflowed to zero
            let fit = amplitude_window(&series, f64::MIN_POSITIVE, f64::INFINITY, &[], 0.0)
                .map(|w| fit_growth(&series, w))
                .transpose()
                .ok()
                .flatten();
            let err = fit.as_ref().map_or(f64::INFINITY, |f| rel_error(f.rate, predicted));
            Ok((
                RateRow {
                    mode: m.clone(),
                    k_sq: k.iter().map(|x| x * x).sum(),
                    predicted,
                    fit,
                    rel_error: err,
                    passed: err <= tol,
                },
                summary,
            ))
        })
        .collect();
    for row in rows {
        let (row, summary) = row?;
        report.checks.push(CheckResult::at_most(
            format!("rate_rel_error_{}", mode_label(&row.mode)),
            row.rel_error,
            tol,
        ));
        let mut structural = ExperimentReport::new(config.experiment);
        structure_checks(&summary, &mut structural);
        for mut c in structural.checks {
            c.name = format!("{}_{}", c.name, mode_label(&row.mode));
            report.checks.push(c);
        }
        report.rates.push(row);
    }
    let p = config.params;
    let rates = report.rates.clone();
    sink.write(report, "dispersion.csv", |w| {
        writeln!(w, "{DISPERSION_CSV_HEADER}")?;
        for r in &rates {
            writeln!(
                w,
                "{},{},{},{},{},{},{:e},{:e},{},{:e},{}",
                p.gamma0,
                p.alpha,
                p.gamma2,
                p.beta,
                mode_label(&r.mode),
                r.k_sq,
                r.predicted,
                r.measured(),
                r.fit.as_ref().map_or(f64::NAN, |f| f.r_squared),
                r.rel_error,
                r.passed
            )?;
        }
        Ok(())
    })
}

fn time_stepping(
    config: &ExperimentConfig,
    sink: &Sink,
    report: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    let (grid, system) = grid_and_system(config)?;
    design_warnings(config, &grid, &system, report)?;
    report.stability = Some(stability(config)?);
    let kind = config.experiment;
    let instability = matches!(
        kind,
        ExperimentKind::DisorderedInstability | ExperimentKind::OrderedInstability
    );
    let mut tracked = config.perturbation.tracked.clone();
    if tracked.is_empty() && instability {
        let (_, m) = lattice_max_growth(&system, &grid)?;
        tracked.push(m[..grid.dim()].to_vec());
    }
    let solver = Solver::new(Arc::clone(&grid), system.clone(), config.solver)?;
    let u0 = initial_field(config, &grid, &system, &tracked)?;
    let mut rec = Recorder::new(tracked.clone());
    if config.solver.snapshot_interval.is_some() {
        if let Some(dir) = sink.dir {
            let snaps = dir.join("snapshots");
            fs::create_dir_all(&snaps).map_err(|source| ExperimentError::Io {
                path: snaps.clone(),
                source,
            })?;
            rec = rec.with_snapshots(snaps);
        }
    }
    let summary = solver.run(u0, &mut rec)?;
    rec.finish();
    report.outputs.extend(rec.snapshots.iter().map(|(_, p)| p.clone()));
    structure_checks(&summary, report);

    let budgets = rec.budgets();
    let rate_scale = budgets
        .iter()
        .map(|b| b.predicted_rate.abs())
        .fold(0.0, f64::max);
    let max_residual = budgets.iter().map(|b| b.residual).fold(0.0, f64::max);
    if rate_scale > 0.0 {
        report
            .checks
            .push(CheckResult::info("max_energy_residual_rel", max_residual / rate_scale));
    }
    let norms: Vec<f64> = rec.rows.iter().map(|r| r.l2_norm_sq).collect();
    let times = rec.times();
    let rms: Vec<f64> = rec.rows.iter().map(|r| r.rms).collect();

    match kind {
        ExperimentKind::NonlinearDecay => {
            let decay = check_decay_bound(&times, &norms, &config.params, config.state)?;
            report
                .checks
                .push(CheckResult::at_least("decay_envelope_margin", decay.margin, 0.0));
            report.checks.push(CheckResult::info("decay_envelope_rate", decay.rate));
            report.decay = Some(decay);
        }
        ExperimentKind::OrderedContractivity => {
            let worst_increase = norms
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE))
                .fold(f64::NEG_INFINITY, f64::max);
            report.checks.push(CheckResult::at_most(
                "max_relative_norm_increase",
                worst_increase,
                MONOTONE_TOLERANCE,
            ));
            if let Some(id) = integrated_identity(&budgets) {
                report.checks.push(CheckResult::at_most(
                    "energy_identity_rel_error",
                    id.relative_error,
                    config.checks.energy_tolerance,
                ));
                report.identity = Some(id);
            }
        }
        _ if instability => {
            let (wl, wh) = config.checks.window;
            let rms_cap = wh * rms.first().copied().unwrap_or(0.0);
            for (idx, m) in tracked.iter().enumerate() {
                let series = rec.mode_series(&grid, idx);
                let k = wavevector(&grid, m);
                let predicted = growth_rate(&system, &k)?;
                let a0 = series.amplitudes.first().copied().unwrap_or(0.0);
                let fit = amplitude_window(&series, wl * a0, wh * a0, &rms, rms_cap)
                    .and_then(|w| fit_growth(&series, w).ok());
                let err = fit.as_ref().map_or(f64::INFINITY, |f| rel_error(f.rate, predicted));
                report.rates.push(RateRow {
                    mode: m.clone(),
                    k_sq: k.iter().map(|x| x * x).sum(),
                    predicted,
                    fit,
                    rel_error: err,
                    passed: err <= config.checks.rate_tolerance,
                });
            }
            let leader = report
                .rates
                .iter()
                .filter(|r| r.predicted > 0.0)
                .max_by(|a, b| a.predicted.total_cmp(&b.predicted));
            let (name, err) = match leader {
                Some(r) => (format!("leading_rate_rel_error_{}", mode_label(&r.mode)), r.rel_error),
                None => ("leading_rate_rel_error_none_unstable".to_string(), f64::INFINITY),
            };
            report
                .checks
                .push(CheckResult::at_most(name, err, config.checks.rate_tolerance));
            // saturation record
            let last = rec.rows.last().expect("run records its final state");
            report.checks.push(CheckResult::info("final_rms", last.rms));
            report
                .checks
                .push(CheckResult::info("max_rms", rms.iter().copied().fold(0.0, f64::max)));
            report.checks.push(CheckResult::info("final_l2_norm_sq", last.l2_norm_sq));
            let rates = report.rates.clone();
            sink.write(report, "growth.csv", |w| {
                writeln!(w, "{GROWTH_CSV_HEADER}")?;
                for r in &rates {
                    let (ws, we, n, r2) = r.fit.as_ref().map_or((f64::NAN, f64::NAN, 0, f64::NAN), |f| {
                        (f.window.0, f.window.1, f.samples, f.r_squared)
                    });
                    writeln!(
                        w,
                        "{},{},{:e},{:e},{},{},{},{},{:e}",
                        mode_label(&r.mode),
                        r.k_sq,
                        r.predicted,
                        r.measured(),
                        r2,
                        ws,
                        we,
                        n,
                        r.rel_error
                    )?;
                }
                Ok(())
            })?;
        }
        _ => {}
    }
    sink.write(report, "diagnostics.csv", |w| rec.write_csv(w))
}
