//! Fourier-space time stepping of the perturbation equations.
//!
//! The stiff scalar part `−(Γ₂|k|⁴ + Γ₀|k|²)` of every mode is integrated
//! exactly through exponential factors. Everything else (the `M` and drift
//! terms, advection, the cubic Landau term and `N(u)`) is explicit, Leray
//! projected and dealiased.

mod etd;
mod initial;
mod rhs;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::TransformedSystem;
use crate::spectral::{
    inverse_scalar, leray_project, leray_project_in_place, SpectralField, SpectralGrid,
};

pub use initial::{plane_wave, random_solenoidal};

use etd::EtdCoefficients;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "solution lost finiteness at t = {t}; the model has global solutions, so this \
         signals a numerical-resolution failure (reduce dt or refine the grid), not a \
         failure of the model"
    )]
    BlowUp {
        t: f64,
        last_finite: Box<SolverState>,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("field does not belong to the solver's grid: {0}")]
    GridMismatch(String),
    #[error("initial data is not solenoidal (relative divergence {0:e})")]
    NotSolenoidal(f64),
    #[error("output failed: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Etdrk4,
    ImexEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// `None` disables snapshots.
    pub snapshot_interval: Option<f64>,
    pub diagnostics_interval: f64,
    pub seed: u64,
    /// Drop advection, the cubic Landau term and `N(u)`.
    pub linearized: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Etdrk4,
            snapshot_interval: None,
            diagnostics_interval: 1e-2,
            seed: 0,
            linearized: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be > 0 (got {})", self.t_end));
        }
        let slack = 1.0 + 1e-9;
        if self.dt > self.t_end * slack {
            return bad("dt must be <= t_end".into());
        }
        if !(self.diagnostics_interval.is_finite() && self.diagnostics_interval * slack >= self.dt) {
            return bad("diagnostics interval must be >= dt".into());
        }
        if let Some(s) = self.snapshot_interval {
            if !(s.is_finite() && s * slack >= self.dt) {
                return bad("snapshot interval must be >= dt".into());
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    fn stride(&self, interval: f64) -> usize {
        ((interval / self.dt).round() as usize).max(1)
    }
}

/// Time and perturbation coefficients.
#[derive(Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: SpectralField,
}

impl fmt::Debug for SolverState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverState")
            .field("t", &self.t)
            .field("modes", &self.u.grid().n_modes())
            .finish_non_exhaustive()
    }
}

/// Time-dependent body force; projected before use.
pub type Forcing = Box<dyn Fn(f64) -> SpectralField + Send + Sync>;

/// Receives states at the diagnostic and snapshot cadences of [`Solver::run`].
pub trait Observer {
    fn on_sample(&mut self, solver: &Solver, state: &SolverState) -> Result<(), SolverError>;

    fn on_snapshot(&mut self, _solver: &Solver, _state: &SolverState) -> Result<(), SolverError> {
        Ok(())
    }
}

/// Observer that discards everything.
pub struct NullObserver;

impl Observer for NullObserver {
    fn on_sample(&mut self, _: &Solver, _: &SolverState) -> Result<(), SolverError> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SolverState,
    pub steps: usize,
    /// Largest relative divergence residual after any step.
    pub max_divergence_residual: f64,
    /// Largest relative Hermitian-symmetry defect after any step.
    pub max_reality_defect: f64,
}

/// Pressure recovered from a state.
#[derive(Debug, Clone)]
pub struct Pressure {
    /// `∇q = −(I − P)[λ₀((u+V)·∇)u + (M + β|u|²)u − N(u)]`.
    pub grad_q: SpectralField,
    /// Coefficients of `q`, mean zero.
    pub q: Vec<Complex64>,
    /// Physical pressure `p = q + λ₁|v|²` on the grid points.
    pub p: Vec<f64>,
}

enum Stepper {
    Etdrk4(EtdCoefficients),
    ImexEuler { denom: Vec<f64> },
}

pub struct Solver {
    grid: Arc<SpectralGrid>,
    system: TransformedSystem,
    config: SolverConfig,
    stepper: Stepper,
    forcing: Option<Forcing>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("system", &self.system)
            .field("config", &self.config)
            .field("forced", &self.forcing.is_some())
            .finish_non_exhaustive()
    }
}

impl Solver {
    pub fn new(
        grid: Arc<SpectralGrid>,
        system: TransformedSystem,
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if grid.dim() != system.dim() {
            return Err(SolverError::GridMismatch(format!(
                "grid dimension {} but system dimension {}",
                grid.dim(),
                system.dim()
            )));
        }
        let p = system.params();
        let stiff: Vec<f64> = grid
            .k2()
            .iter()
            .map(|&kk| p.gamma2 * kk * kk + p.gamma0 * kk)
            .collect();
        let stepper = match config.scheme {
            Scheme::Etdrk4 => {
                let rates: Vec<f64> = stiff.iter().map(|s| -s).collect();
                Stepper::Etdrk4(EtdCoefficients::new(&rates, config.dt))
            }
            Scheme::ImexEuler => {
                let denom: Vec<f64> = stiff.iter().map(|s| 1.0 + config.dt * s).collect();
                if denom.iter().any(|&x| x <= 0.0) {
                    return Err(SolverError::InvalidConfig(
                        "implicit Euler denominator 1 + dt(Γ₂|k|⁴ + Γ₀|k|²) is not positive; reduce dt"
                            .into(),
                    ));
                }
                Stepper::ImexEuler { denom }
            }
        };
        Ok(Self {
            grid,
            system,
            config,
            stepper,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn system(&self) -> &TransformedSystem {
        &self.system
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn is_forced(&self) -> bool {
        self.forcing.is_some()
    }

    /// Projected forcing at time `t`, if any.
    pub fn forcing_at(&self, t: f64) -> Option<SpectralField> {
        self.forcing.as_ref().map(|f| {
            let mut g = f(t);
            leray_project_in_place(&self.grid, &mut g.coeffs);
            g.clear_nyquist();
            g
        })
    }

    fn check_grid(&self, f: &SpectralField) -> Result<(), SolverError> {
        let g = f.grid();
        if Arc::ptr_eq(g, &self.grid)
            || (g.dim() == self.grid.dim() && g.n() == self.grid.n() && g.length() == self.grid.length())
        {
            Ok(())
        } else {
            Err(SolverError::GridMismatch(format!(
                "field grid (dim {}, n {}, L {}) differs from solver grid (dim {}, n {}, L {})",
                g.dim(),
                g.n(),
                g.length(),
                self.grid.dim(),
                self.grid.n(),
                self.grid.length()
            )))
        }
    }

    fn tendency(&self, u: &[Vec<Complex64>], t: f64) -> Vec<Vec<Complex64>> {
        let r = rhs::bracket(&self.grid, &self.system, u, self.config.linearized);
        let f = self.forcing_at(t);
        rhs::project_tendency(&self.grid, r, f.as_ref())
    }

    /// Explicit, projected tendency
    /// `−P[λ₀((u+V)·∇)u + Mu + β|u|²u − N(u)] + P f` (stiff part excluded).
    pub fn nonlinear_rhs(&self, state: &SolverState) -> Result<SpectralField, SolverError> {
        self.check_grid(&state.u)?;
        let out = SpectralField::from_coeffs(&self.grid, self.tendency(&state.u.coeffs, state.t))
            .map_err(|e| SolverError::GridMismatch(e.to_string()))?;
        if !out.is_finite() {
            return Err(SolverError::BlowUp {
                t: state.t,
                last_finite: Box::new(state.clone()),
            });
        }
        Ok(out)
    }

    /// Advance one step of size `dt`.
    pub fn step(&self, state: &SolverState) -> Result<SolverState, SolverError> {
        self.check_grid(&state.u)?;
        let h = self.config.dt;
        let t = state.t;
        let u = &state.u.coeffs;
        let mut next = match &self.stepper {
            Stepper::Etdrk4(k) => {
                let nu = self.tendency(u, t);
                let a = combine(u, &k.e2, &[(&nu, &k.q, 1.0)]);
                let na = self.tendency(&a, t + 0.5 * h);
                let b = combine(u, &k.e2, &[(&na, &k.q, 1.0)]);
                let nb = self.tendency(&b, t + 0.5 * h);
                let c = combine(&a, &k.e2, &[(&nb, &k.q, 2.0), (&nu, &k.q, -1.0)]);
                let nc = self.tendency(&c, t + h);
                combine(
                    u,
                    &k.e,
                    &[
                        (&nu, &k.f1, 1.0),
                        (&na, &k.f2, 2.0),
                        (&nb, &k.f2, 2.0),
                        (&nc, &k.f3, 1.0),
                    ],
                )
            }
            Stepper::ImexEuler { denom } => {
                let nu = self.tendency(u, t);
                u.iter()
                    .zip(&nu)
                    .map(|(ua, na)| {
                        ua.iter()
                            .zip(na)
                            .zip(denom)
                            .map(|((x, y), d)| (x + y * h) / d)
                            .collect()
                    })
                    .collect()
            }
        };
        leray_project_in_place(&self.grid, &mut next);
        let mut field = SpectralField::from_coeffs(&self.grid, next)
            .map_err(|e| SolverError::GridMismatch(e.to_string()))?;
        field.clear_nyquist();
        // the imaginary physical part never feeds the nonlinearity, so
        // inside an unstable band it would grow unchecked
        field.enforce_hermitian();
        if !field.is_finite() {
            return Err(SolverError::BlowUp {
                t: t + h,
                last_finite: Box::new(state.clone()),
            });
        }
        Ok(SolverState { t: t + h, u: field })
    }

    /// Integrate from `t = 0` to `t_end`, reporting to `observer` at the
    /// configured cadences (including the initial and final states).
    pub fn run(
        &self,
        initial: SpectralField,
        observer: &mut dyn Observer,
    ) -> Result<RunSummary, SolverError> {
        self.check_grid(&initial)?;
        let div = initial.divergence_residual();
        if div > 1e-10 {
            return Err(SolverError::NotSolenoidal(div));
        }
        let mut u = leray_project(&initial);
        u.clear_nyquist();
        u.enforce_hermitian();
        let mut state = SolverState { t: 0.0, u };
        let n = self.config.n_steps();
        let diag = self.config.stride(self.config.diagnostics_interval);
        let snap = self.config.snapshot_interval.map(|s| self.config.stride(s));
        observer.on_sample(self, &state)?;
        if snap.is_some() {
            observer.on_snapshot(self, &state)?;
        }
        let mut max_div: f64 = 0.0;
        let mut max_real: f64 = 0.0;
        for s in 1..=n {
            let mut next = self.step(&state)?;
            next.t = s as f64 * self.config.dt;
            state = next;
            max_div = max_div.max(state.u.divergence_residual());
            max_real = max_real.max(state.u.hermitian_defect());
            if s % diag == 0 || s == n {
                observer.on_sample(self, &state)?;
            }
            if let Some(k) = snap {
                if s % k == 0 || s == n {
                    observer.on_snapshot(self, &state)?;
                }
            }
        }
        Ok(RunSummary {
            final_state: state,
            steps: n,
            max_divergence_residual: max_div,
            max_reality_defect: max_real,
        })
    }

    /// Gradient of the reduced pressure and the pressure itself.
    pub fn recover_pressure(&self, state: &SolverState) -> Result<Pressure, SolverError> {
        self.check_grid(&state.u)?;
        let g = &self.grid;
        let d = g.dim();
        let r = rhs::bracket(g, &self.system, &state.u.coeffs, self.config.linearized);
        let rf = SpectralField::from_coeffs(g, r)
            .map_err(|e| SolverError::GridMismatch(e.to_string()))?;
        let mut grad_q = leray_project(&rf);
        grad_q.add_scaled(-1.0, &rf);
        let kd = g.deriv_wavevectors();
        // ∇q = i k q̂  ⇒  q̂ = −i (k·∇q̂)/|k|²
        let q: Vec<Complex64> = (0..g.n_modes())
            .map(|i| {
                let k = kd[i];
                let kk: f64 = k[..d].iter().map(|x| x * x).sum();
                if kk == 0.0 {
                    return Complex64::default();
                }
                let kg: Complex64 = (0..d).map(|c| grad_q.coeffs[c][i] * k[c]).sum();
                Complex64::new(0.0, -1.0) * kg / kk
            })
            .collect();
        let mut p = inverse_scalar(g, &q);
        let lambda1 = self.system.params().lambda1;
        if lambda1 != 0.0 {
            let u = state.u.to_physical();
            let v = self.system.drift();
            for (pt, pv) in p.iter_mut().enumerate() {
                let s: f64 = (0..d).map(|c| (u.components[c][pt] + v[c]).powi(2)).sum();
                *pv += lambda1 * s;
            }
        }
        Ok(Pressure { grad_q, q, p })
    }
}

// base ⊙ scale + Σ weight · coeff ⊙ term, modewise.
fn combine(
    base: &[Vec<Complex64>],
    scale: &[f64],
    terms: &[(&Vec<Vec<Complex64>>, &Vec<f64>, f64)],
) -> Vec<Vec<Complex64>> {
    base.iter()
        .enumerate()
        .map(|(a, comp)| {
            comp.iter()
                .enumerate()
                .map(|(i, x)| {
                    let mut v = x * scale[i];
                    for (term, coeff, w) in terms {
                        v += term[a][i] * (coeff[i] * w);
                    }
                    v
                })
                .collect()
        })
        .collect()
}

pub(crate) use rhs::{padded_components, padded_real};
