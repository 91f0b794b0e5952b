//! Energy budgets, modal growth fits and decay certificates.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{padded_components, padded_real, Observer, Solver, SolverError, SolverState};
use crate::model::{ModelParams, StateKind};
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::{SpectralField, SpectralGrid};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("amplitude {value} at t = {t} is not positive; its logarithm is undefined")]
    NonPositiveAmplitude { t: f64, value: f64 },
    #[error("growth fit needs at least {needed} samples in the window, found {found}")]
    WindowTooShort { needed: usize, found: usize },
    #[error("the decay bound applies to the disordered state only")]
    WrongSystem,
    #[error("series lengths differ ({0} times, {1} values)")]
    LengthMismatch(usize, usize),
}

/// Terms of `d/dt ½‖u‖² = −Γ₂‖Δu‖² − Γ₀‖∇u‖² − ∫u·Mu − β‖u‖₄⁴ + ∫u·N(u) + ∫f·u`.
///
/// Advection and pressure do not appear: both are orthogonal to `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBudget {
    pub t: f64,
    /// `½‖u‖₂²`.
    pub kinetic: f64,
    /// `Γ₂‖Δu‖₂²`.
    pub dissipation_bilap: f64,
    /// `Γ₀‖∇u‖₂²` (negative when Γ₀ < 0).
    pub dissipation_lap: f64,
    /// `∫u·Mu` (`α‖u‖²` at rest).
    pub landau_linear: f64,
    /// `β‖u‖₄⁴`.
    pub landau_quartic: f64,
    /// `2β‖V·u‖₂²`, the ordered-state value of `∫u·Mu`.
    pub ordered_projection: f64,
    /// `∫u·N(u)`.
    pub nonlinear_work: f64,
    /// `∫f·u`.
    pub forcing_work: f64,
    /// Right-hand side of the identity for the dynamics actually solved.
    pub predicted_rate: f64,
    /// `|d/dt kinetic − predicted_rate|`, filled by [`fill_residuals`].
    pub residual: f64,
}

/// Evaluate every budget term at one state.
pub fn energy_budget(solver: &Solver, state: &SolverState) -> EnergyBudget {
    let grid = solver.grid();
    let system = solver.system();
    let p = system.params();
    let u = &state.u;
    let d = grid.dim();
    let volume = grid.volume();

    let mut landau_linear = 0.0;
    let mut ordered_projection = 0.0;
    let v = system.drift();
    for i in 0..grid.n_modes() {
        let mut mu = 0.0;
        for a in 0..d {
            for b in 0..d {
                mu += system.linear(a, b) * (u.coeffs[a][i].conj() * u.coeffs[b][i]).re;
            }
        }
        landau_linear += mu;
        let vu: Complex64 = (0..d).map(|a| u.coeffs[a][i] * v[a]).sum();
        ordered_projection += vu.norm_sqr();
    }
    landau_linear *= volume;
    ordered_projection *= 2.0 * p.beta * volume;

    let phys = padded_components(grid, &u.coeffs);
    let m = phys[0].len() as f64;
    let mut quartic = 0.0;
    let mut nwork = 0.0;
    let quad = system.has_quadratic();
    let mut uu = [0.0; 3];
    let mut nq = [0.0; 3];
    for pt in 0..phys[0].len() {
        let mut sq = 0.0;
        for a in 0..d {
            uu[a] = phys[a][pt];
            sq += uu[a] * uu[a];
        }
        quartic += sq * sq;
        if quad {
            system.apply_quadratic(&uu[..d], &mut nq[..d]);
            nwork += (0..d).map(|a| uu[a] * nq[a]).sum::<f64>();
        }
    }
    let landau_quartic = p.beta * quartic / m * volume;
    let nonlinear_work = nwork / m * volume;
    let forcing_work = solver.forcing_at(state.t).map_or(0.0, |f| f.inner(u));

    let dissipation_bilap = p.gamma2 * u.sobolev_seminorm_sq(2);
    let dissipation_lap = p.gamma0 * u.sobolev_seminorm_sq(1);
    let mut predicted_rate = -(dissipation_bilap + dissipation_lap + landau_linear) + forcing_work;
    if !solver.config().linearized {
        predicted_rate += -landau_quartic + nonlinear_work;
    }
    EnergyBudget {
        t: state.t,
        kinetic: 0.5 * u.norm_sq(),
        dissipation_bilap,
        dissipation_lap,
        landau_linear,
        landau_quartic,
        ordered_projection,
        nonlinear_work: if solver.config().linearized { 0.0 } else { nonlinear_work },
        forcing_work,
        predicted_rate,
        residual: f64::NAN,
    }
}

/// Fourth-order finite-difference derivative of a uniformly sampled series
/// (five-point one-sided stencils at the ends). `None` for fewer than five
/// samples.
pub fn derivative_4th_order(values: &[f64], h: f64) -> Option<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return None;
    }
    let f = values;
    let mut out = vec![0.0; n];
    let s = 12.0 * h;
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / s;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / s;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / s;
    }
    out[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / s;
    out[n - 1] =
        (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / s;
    Some(out)
}

/// Fill `residual` on every budget from the finite-difference derivative of
/// the kinetic series. Samples must be uniformly spaced; otherwise (or with
/// fewer than five samples) residuals stay NaN and `false` is returned.
pub fn fill_residuals(budgets: &mut [EnergyBudget]) -> bool {
    if budgets.len() < 5 {
        return false;
    }
    let h = budgets[1].t - budgets[0].t;
    let uniform = budgets
        .windows(2)
        .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-9 * h.abs().max(1e-300));
    if !uniform || h <= 0.0 {
        return false;
    }
    let k: Vec<f64> = budgets.iter().map(|b| b.kinetic).collect();
    let dk = derivative_4th_order(&k, h).expect("length checked");
    for (b, d) in budgets.iter_mut().zip(dk) {
        b.residual = (d - b.predicted_rate).abs();
    }
    true
}

/// Integrated form of the budget:
/// `‖u(T)‖² − 2∫₀ᵀ predicted_rate dt = ‖u₀‖²`, integral by the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub initial_norm_sq: f64,
    pub final_plus_dissipated: f64,
    pub relative_error: f64,
}

pub fn integrated_identity(budgets: &[EnergyBudget]) -> Option<IdentityCheck> {
    let (first, last) = (budgets.first()?, budgets.last()?);
    let mut integral = 0.0;
    for w in budgets.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].predicted_rate + w[1].predicted_rate);
    }
    let initial = 2.0 * first.kinetic;
    let lhs = 2.0 * last.kinetic - 2.0 * integral;
    let relative_error = if initial > 0.0 {
        (lhs - initial).abs() / initial
    } else {
        (lhs - initial).abs()
    };
    Some(IdentityCheck {
        initial_norm_sq: initial,
        final_plus_dissipated: lhs,
        relative_error,
    })
}

/// `∫((u+V)·∇)u·u` over the box, evaluated exactly on the padded grid.
pub fn advection_work(grid: &SpectralGrid, u: &SpectralField, drift: &[f64]) -> f64 {
    let d = grid.dim();
    let phys = padded_components(grid, &u.coeffs);
    let kd = grid.deriv_wavevectors();
    let mut acc = vec![0.0; phys[0].len()];
    for j in 0..d {
        for a in 0..d {
            let hat: Vec<Complex64> = u.coeffs[a]
                .iter()
                .zip(kd)
                .map(|(c, k)| c * Complex64::new(0.0, k[j]))
                .collect();
            let g = padded_real(&grid.pad_cubic, &hat);
            for (pt, x) in acc.iter_mut().enumerate() {
                *x += (phys[j][pt] + drift[j]) * g[pt] * phys[a][pt];
            }
        }
    }
    acc.iter().sum::<f64>() / acc.len() as f64 * grid.volume()
}

/// `∫∇(|u|²u):∇u = ⟨|u|²u, −Δu⟩`, non-negative for every field.
pub fn cubic_gradient_work(grid: &SpectralGrid, u: &SpectralField) -> f64 {
    let d = grid.dim();
    let phys = padded_components(grid, &u.coeffs);
    let n = phys[0].len();
    let mut total = 0.0;
    for a in 0..d {
        let buf: Vec<Complex64> = (0..n)
            .map(|pt| {
                let sq: f64 = (0..d).map(|b| phys[b][pt] * phys[b][pt]).sum();
                Complex64::new(sq * phys[a][pt], 0.0)
            })
            .collect();
        let cubic = grid.pad_cubic.truncate(buf);
        for (i, c) in cubic.iter().enumerate() {
            total += grid.k2()[i] * (c.conj() * u.coeffs[a][i]).re;
        }
    }
    total * grid.volume()
}

/// Time series of one tracked mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSeries {
    pub lattice: Vec<i64>,
    pub wavevector: Vec<f64>,
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub wavevector: Vec<f64>,
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares slope of `ln a(t)` over the samples with `t` in `window`
/// (inclusive).
pub fn fit_growth(series: &ModeSeries, window: (f64, f64)) -> Result<GrowthFit, DiagnosticsError> {
    if series.times.len() != series.amplitudes.len() {
        return Err(DiagnosticsError::LengthMismatch(series.times.len(), series.amplitudes.len()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &a) in series.times.iter().zip(&series.amplitudes) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(a > 0.0) {
            return Err(DiagnosticsError::NonPositiveAmplitude { t, value: a });
        }
        xs.push(t);
        ys.push(a.ln());
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::WindowTooShort {
            needed: MIN_FIT_SAMPLES,
            found: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let constant = ys.iter().all(|&y| y == ys[0]);
    let rate = if sxx > 0.0 && !constant { sxy / sxx } else { 0.0 };
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - rate * (x - mx)).powi(2))
        .sum();
    // a constant series is fitted perfectly by a zero slope
    let r_squared = if constant || syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(GrowthFit {
        wavevector: series.wavevector.clone(),
        rate: if rate == 0.0 { 0.0 } else { rate },
        r_squared,
        window: (xs[0], xs[xs.len() - 1]),
        samples: xs.len(),
    })
}

/// First contiguous stretch of samples with `lo ≤ a ≤ hi` and
/// `guard[i] ≤ guard_cap`, as a time window.
pub fn amplitude_window(
    series: &ModeSeries,
    lo: f64,
    hi: f64,
    guard: &[f64],
    guard_cap: f64,
) -> Option<(f64, f64)> {
    let mut start = None;
    let mut end = None;
    for (i, (&t, &a)) in series.times.iter().zip(&series.amplitudes).enumerate() {
        let inside = a >= lo && a <= hi && guard.get(i).is_none_or(|&g| g <= guard_cap);
        match (inside, start) {
            (true, None) => {
                start = Some(t);
                end = Some(t);
            }
            (true, Some(_)) => end = Some(t),
            (false, Some(_)) => break,
            (false, None) => {}
        }
    }
    Some((start?, end?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub holds: bool,
    /// Minimum over samples of `ln((1+tol)·e^{−rate·t}‖u₀‖²) − ln‖u(t)‖²`.
    pub margin: f64,
    /// Envelope exponent for `‖u‖²`.
    pub rate: f64,
}

pub const DECAY_TOLERANCE: f64 = 1e-6;

/// Envelope exponent `2α` (Γ₀ ≥ 0) or `2(α − Γ₀²/4Γ₂)` (Γ₀ < 0).
pub fn decay_envelope_rate(params: &ModelParams) -> f64 {
    if params.gamma0 >= 0.0 {
        2.0 * params.alpha
    } else {
        2.0 * (params.alpha - params.gamma0 * params.gamma0 / (4.0 * params.gamma2))
    }
}

/// Check `‖u(t)‖² ≤ e^{−rate·t}‖u₀‖²(1 + 1e−6)` at every sample of a
/// disordered-state run.
pub fn check_decay_bound(
    times: &[f64],
    norm_sq: &[f64],
    params: &ModelParams,
    kind: StateKind,
) -> Result<DecayReport, DiagnosticsError> {
    if kind != StateKind::Disordered {
        return Err(DiagnosticsError::WrongSystem);
    }
    if times.len() != norm_sq.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), norm_sq.len()));
    }
    let rate = decay_envelope_rate(params);
    let mut margin = f64::INFINITY;
    if let (Some(&t0), Some(&e0)) = (times.first(), norm_sq.first()) {
        for (&t, &e) in times.iter().zip(norm_sq) {
            let gap = if e == 0.0 {
                f64::INFINITY
            } else if e0 == 0.0 {
                f64::NEG_INFINITY
            } else {
                (1.0 + DECAY_TOLERANCE).ln() - rate * (t - t0) + e0.ln() - e.ln()
            };
            margin = margin.min(gap);
        }
    }
    Ok(DecayReport {
        holds: margin >= 0.0,
        margin,
        rate,
    })
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub budget: EnergyBudget,
    pub l2_norm_sq: f64,
    pub l4_norm_4: f64,
    pub grad_norm_sq: f64,
    pub lap_norm_sq: f64,
    pub div_residual: f64,
    /// Root-mean-square of `|u|` over the box.
    pub rms: f64,
    pub amplitudes: Vec<f64>,
}

/// Evaluate a diagnostics row for `state`.
pub fn sample(solver: &Solver, state: &SolverState, tracked: &[Vec<i64>]) -> DiagnosticRow {
    let u = &state.u;
    let p = solver.system().params();
    let budget = energy_budget(solver, state);
    let l2 = u.norm_sq();
    DiagnosticRow {
        budget,
        l2_norm_sq: l2,
        l4_norm_4: budget.landau_quartic / p.beta,
        grad_norm_sq: u.sobolev_seminorm_sq(1),
        lap_norm_sq: u.sobolev_seminorm_sq(2),
        div_residual: u.divergence_residual(),
        rms: (l2 / solver.grid().volume()).sqrt(),
        amplitudes: tracked
            .iter()
            .map(|m| u.mode_amplitude(m).unwrap_or(f64::NAN))
            .collect(),
    }
}

pub fn amplitude_column(m: &[i64]) -> String {
    let parts: Vec<String> = m.iter().map(i64::to_string).collect();
    format!("amp_{}", parts.join("_"))
}

pub fn diagnostics_header(tracked: &[Vec<i64>]) -> String {
    let mut h = String::from("t,l2_norm_sq,l4_norm_4,grad_norm_sq,lap_norm_sq,energy_residual,div_residual");
    for m in tracked {
        h.push(',');
        h.push_str(&amplitude_column(m));
    }
    h
}

pub fn write_diagnostics_csv<W: Write>(
    mut w: W,
    tracked: &[Vec<i64>],
    rows: &[DiagnosticRow],
) -> std::io::Result<()> {
    writeln!(w, "{}", diagnostics_header(tracked))?;
    for r in rows {
        write!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.budget.t,
            r.l2_norm_sq,
            r.l4_norm_4,
            r.grad_norm_sq,
            r.lap_norm_sq,
            r.budget.residual,
            r.div_residual
        )?;
        for a in &r.amplitudes {
            write!(w, ",{a:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Observer that records diagnostics rows and optionally writes snapshots
/// (`snap_00000.lfsnap`, …) into a directory.
#[derive(Debug, Default)]
pub struct Recorder {
    pub tracked: Vec<Vec<i64>>,
    pub rows: Vec<DiagnosticRow>,
    pub snapshot_dir: Option<PathBuf>,
    pub snapshots: Vec<(f64, PathBuf)>,
}

impl Recorder {
    pub fn new(tracked: Vec<Vec<i64>>) -> Self {
        Self {
            tracked,
            ..Self::default()
        }
    }

    pub fn with_snapshots(mut self, dir: PathBuf) -> Self {
        self.snapshot_dir = Some(dir);
        self
    }

    /// Fill energy residuals once the run is complete.
    pub fn finish(&mut self) -> bool {
        let mut budgets: Vec<EnergyBudget> = self.rows.iter().map(|r| r.budget).collect();
        let ok = fill_residuals(&mut budgets);
        for (r, b) in self.rows.iter_mut().zip(budgets) {
            r.budget.residual = b.residual;
        }
        ok
    }

    pub fn budgets(&self) -> Vec<EnergyBudget> {
        self.rows.iter().map(|r| r.budget).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.budget.t).collect()
    }

    pub fn mode_series(&self, grid: &SpectralGrid, which: usize) -> ModeSeries {
        let m = &self.tracked[which];
        let dk = grid.dk();
        ModeSeries {
            lattice: m.clone(),
            wavevector: m.iter().map(|&c| c as f64 * dk).collect(),
            times: self.times(),
            amplitudes: self.rows.iter().map(|r| r.amplitudes[which]).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_diagnostics_csv(w, &self.tracked, &self.rows)
    }
}

impl Observer for Recorder {
    fn on_sample(&mut self, solver: &Solver, state: &SolverState) -> Result<(), SolverError> {
        self.rows.push(sample(solver, state, &self.tracked));
        Ok(())
    }

    fn on_snapshot(&mut self, solver: &Solver, state: &SolverState) -> Result<(), SolverError> {
        let Some(dir) = &self.snapshot_dir else {
            return Ok(());
        };
        let path = dir.join(format!("snap_{:05}.lfsnap", self.snapshots.len()));
        let file = File::create(&path)
            .map_err(|e| SolverError::Output(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_snapshot(&mut w, solver.grid(), state.t, &state.u.to_physical())
            .map_err(|e| SolverError::Output(format!("{}: {e}", path.display())))?;
        w.flush()
            .map_err(|e| SolverError::Output(format!("{}: {e}", path.display())))?;
        self.snapshots.push((state.t, path));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{plane_wave, random_solenoidal, SolverConfig};
    use crate::model::TransformedSystem;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn params(gamma0: f64, alpha: f64) -> ModelParams {
        ModelParams {
            gamma0,
            alpha,
            ..ModelParams::default()
        }
    }

    fn make(g: &Arc<SpectralGrid>, system: TransformedSystem, config: SolverConfig) -> Solver {
        Solver::new(Arc::clone(g), system, config).unwrap()
    }

    #[test]
    fn zero_field_budget_vanishes() {
        let g = SpectralGrid::new(2, 16, 20.0 * PI).unwrap();
        let s = make(&g, TransformedSystem::disordered(&params(1.0, 1.0)).unwrap(), SolverConfig::default());
        let b = energy_budget(&s, &SolverState { t: 0.0, u: SpectralField::zeros(&g) });
        for x in [
            b.kinetic,
            b.dissipation_bilap,
            b.dissipation_lap,
            b.landau_linear,
            b.landau_quartic,
            b.ordered_projection,
            b.nonlinear_work,
            b.predicted_rate,
        ] {
            assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn single_mode_parseval_oracle() {
        let l = 20.0 * PI;
        let g = SpectralGrid::new(2, 16, l).unwrap();
        let s = make(&g, TransformedSystem::disordered(&params(0.5, 0.2)).unwrap(), SolverConfig::default());
        let a = 0.3;
        let dir = [Complex64::default(), Complex64::new(1.0, 0.0)];
        let u = plane_wave(&g, &[2, 0], &dir, a).unwrap();
        let b = energy_budget(&s, &SolverState { t: 0.0, u: u.clone() });
        let kinetic = a * a * l * l / 4.0;
        assert!((b.kinetic - kinetic).abs() < 1e-13 * kinetic);
        let kk = (2.0 * 2.0 * PI / l).powi(2);
        assert!((b.dissipation_bilap - kk * kk * 2.0 * kinetic).abs() < 1e-13 * kinetic);
        assert!((b.dissipation_lap - 0.5 * kk * 2.0 * kinetic).abs() < 1e-13 * kinetic);
        assert!((b.landau_linear - 0.2 * 2.0 * kinetic).abs() < 1e-13 * kinetic);
        // ∫cos⁴ = 3/8 of the box
        let quartic = a.powi(4) * 3.0 / 8.0 * l * l;
        assert!((b.landau_quartic - quartic).abs() < 1e-13 * quartic);

        // physical-space quadrature of ½|u|²
        let phys = u.to_physical();
        let quad: f64 = phys.components.iter().flatten().map(|x| x * x).sum::<f64>() * g.cell_volume() * 0.5;
        assert!((quad - b.kinetic).abs() < 1e-12 * quad);
    }

    #[test]
    fn finite_difference_stencils_are_fourth_order() {
        let exact = |t: f64| (1.3 * t).sin() + t.powi(4);
        let deriv = |t: f64| 1.3 * (1.3 * t).cos() + 4.0 * t.powi(3);
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let f: Vec<f64> = (0..40).map(|i| exact(i as f64 * h)).collect();
            let d = derivative_4th_order(&f, h).unwrap();
            let e = d
                .iter()
                .enumerate()
                .map(|(i, x)| (x - deriv(i as f64 * h)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 14.0, "{errs:?}");
        // quartic polynomials are differentiated exactly
        let f: Vec<f64> = (0..8).map(|i| (i as f64 * 0.1).powi(4) - 2.0 * i as f64).collect();
        let d = derivative_4th_order(&f, 0.1).unwrap();
        for (i, x) in d.iter().enumerate() {
            assert!((x - (4.0 * (i as f64 * 0.1).powi(3) - 20.0)).abs() < 1e-10);
        }
        assert!(derivative_4th_order(&f[..4], 0.1).is_none());
    }

    #[test]
    fn growth_fit_examples() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let series = ModeSeries {
            lattice: vec![1, 0],
            wavevector: vec![0.1, 0.0],
            amplitudes: times.iter().map(|t| 2e-5 * (0.15 * t).exp()).collect(),
            times: times.clone(),
        };
        let fit = fit_growth(&series, (0.0, 100.0)).unwrap();
        assert!((fit.rate - 0.15).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.samples, 50);

        let flat = ModeSeries {
            amplitudes: vec![3.0; 50],
            ..series.clone()
        };
        let fit = fit_growth(&flat, (0.0, 100.0)).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r_squared, 1.0);

        assert!(matches!(
            fit_growth(&series, (0.0, 1.0)),
            Err(DiagnosticsError::WindowTooShort { found: 6, .. })
        ));
        let mut bad = series.clone();
        bad.amplitudes[3] = 0.0;
        assert!(matches!(
            fit_growth(&bad, (0.0, 100.0)),
            Err(DiagnosticsError::NonPositiveAmplitude { .. })
        ));
    }

    #[test]
    fn window_selection() {
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        let s = ModeSeries {
            lattice: vec![1, 0],
            wavevector: vec![0.1, 0.0],
            amplitudes: vec![1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 11.0, 4.0, 3.0, 2.5],
            times,
        };
        assert_eq!(amplitude_window(&s, 2.0, 10.0, &[], 0.0), Some((2.0, 5.0)));
        let guard = [0.0, 0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(amplitude_window(&s, 2.0, 10.0, &guard, 1.0), Some((2.0, 3.0)));
        assert_eq!(amplitude_window(&s, 20.0, 30.0, &[], 0.0), None);
    }

    #[test]
    fn decay_bound_logic() {
        let p = params(1.0, 1.0);
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let e: Vec<f64> = times.iter().map(|t| (-2.5 * t).exp()).collect();
        let r = check_decay_bound(&times, &e, &p, StateKind::Disordered).unwrap();
        assert!(r.holds && r.margin > 0.0);
        assert_eq!(r.rate, 2.0);
        let slow: Vec<f64> = times.iter().map(|t| (-1.5 * t).exp()).collect();
        assert!(!check_decay_bound(&times, &slow, &p, StateKind::Disordered).unwrap().holds);
        assert!(matches!(
            check_decay_bound(&times, &e, &p, StateKind::Ordered),
            Err(DiagnosticsError::WrongSystem)
        ));
        // α = Γ₀ = 0: non-increasing norm suffices
        let flat = vec![1.0; 20];
        let r = check_decay_bound(&times, &flat, &params(0.0, 0.0), StateKind::Disordered).unwrap();
        assert!(r.holds);
        assert!((decay_envelope_rate(&ModelParams { gamma2: 1.0, ..params(-1.0, 0.3) }) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let g = SpectralGrid::new(2, 16, 20.0 * PI).unwrap();
        let s = make(&g, TransformedSystem::disordered(&params(1.0, 1.0)).unwrap(), SolverConfig::default());
        let tracked = vec![vec![1, 0], vec![-2, 3]];
        let state = SolverState { t: 0.5, u: random_solenoidal(&g, 0.1, 1.0, 0).unwrap() };
        let row = sample(&s, &state, &tracked);
        let mut buf = Vec::new();
        write_diagnostics_csv(&mut buf, &tracked, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,l2_norm_sq,l4_norm_4,grad_norm_sq,lap_norm_sq,energy_residual,div_residual,amp_1_0,amp_-2_3"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn advection_is_skew(seed in 0u64..1000, amp in 0.01f64..3.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
            let g = SpectralGrid::new(2, 16, 20.0 * PI).unwrap();
            let u = random_solenoidal(&g, amp, 1.5, seed).unwrap();
            let w = advection_work(&g, &u, &[vx, vy]);
            let unorm = u.norm_sq().sqrt();
            let gnorm = u.sobolev_seminorm_sq(1).sqrt();
            let sup = u.to_physical().max_abs();
            prop_assert!(w.abs() <= 1e-10 * unorm * gnorm * sup, "{w}");
        }

        #[test]
        fn cubic_gradient_term_is_nonnegative(seed in 0u64..1000, amp in 0.01f64..3.0) {
            let g = SpectralGrid::new(2, 16, 20.0 * PI).unwrap();
            let u = random_solenoidal(&g, amp, 1.5, seed).unwrap();
            prop_assert!(cubic_gradient_work(&g, &u) >= -1e-10);
        }
    }
}
