//! Model parameters, steady states, and the perturbation system written
//! around a chosen steady state.
//!
//! The full model evolves a solenoidal velocity `v` under
//!
//! ```text
//! v_t + λ₀ (v·∇)v = f − ∇p + λ₁ ∇|v|² − (α + β|v|²) v + Γ₀ Δv − Γ₂ Δ²v,   div v = 0.
//! ```
//!
//! Writing `u = v − V` around a constant steady velocity `V` gives
//!
//! ```text
//! u_t + λ₀ [(u + V)·∇]u + (M + β|u|²) u − Γ₀ Δu + Γ₂ Δ²u + ∇q = f + N(u)
//! ```
//!
//! with `q = p − λ₁|v|²`. [`TransformedSystem`] holds `(V, M, N)` for the
//! disordered rest state and for the ordered polar states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::VectorField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{0}")]
    InvalidParams(String),
    #[error("ordered steady states exist only for alpha < 0 (alpha = {0})")]
    NoOrderedState(f64),
    #[error("direction must be a unit vector with {dim} components (got |d| = {norm})")]
    BadDirection { dim: usize, norm: f64 },
    #[error("steady-state velocity violates |V| = sqrt(-alpha/beta): {0}")]
    BadSteadyState(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

const UNIT_TOL: f64 = 1e-12;

/// Physical coefficients of the model plus the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Advection strength.
    pub lambda0: f64,
    /// Active-pressure prefactor.
    pub lambda1: f64,
    /// Linear Landau coefficient.
    pub alpha: f64,
    /// Cubic Landau coefficient, positive.
    pub beta: f64,
    /// Second-order gradient coefficient, either sign.
    pub gamma0: f64,
    /// Fourth-order (Swift-Hohenberg) coefficient, positive.
    pub gamma2: f64,
    pub dim: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda1: 0.0,
            alpha: 0.0,
            beta: 1.0,
            gamma0: 0.0,
            gamma2: 1.0,
            dim: 2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let named = [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma0", self.gamma0),
            ("gamma2", self.gamma2),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} must be finite")));
            }
        }
        if self.beta <= 0.0 {
            return Err(ModelError::InvalidParams("beta must be > 0".into()));
        }
        if self.gamma2 <= 0.0 {
            return Err(ModelError::InvalidParams("gamma2 must be > 0".into()));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(ModelError::InvalidParams("dim must be 2 or 3".into()));
        }
        Ok(())
    }

    /// `sqrt(-alpha/beta)`, the speed of every ordered polar state, when one exists.
    pub fn swimming_speed(&self) -> Option<f64> {
        (self.alpha < 0.0).then(|| (-self.alpha / self.beta).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateKind {
    Disordered,
    Ordered,
}

/// A constant steady velocity: zero for the disordered state, a point of the
/// sphere `|V| = sqrt(-alpha/beta)` for the ordered polar states.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub kind: StateKind,
    pub velocity: Vec<f64>,
}

impl SteadyState {
    pub fn disordered(params: &ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            kind: StateKind::Disordered,
            velocity: vec![0.0; params.dim],
        })
    }

    /// The ordered state moving along the unit vector `direction`.
    pub fn ordered(params: &ModelParams, direction: &[f64]) -> Result<Self, ModelError> {
        params.validate()?;
        let speed = params
            .swimming_speed()
            .ok_or(ModelError::NoOrderedState(params.alpha))?;
        check_unit(direction, params.dim)?;
        Ok(Self {
            kind: StateKind::Ordered,
            velocity: direction.iter().map(|d| speed * d).collect(),
        })
    }

    pub fn validate(&self, params: &ModelParams) -> Result<(), ModelError> {
        if self.velocity.len() != params.dim {
            return Err(ModelError::DimensionMismatch {
                expected: params.dim,
                got: self.velocity.len(),
            });
        }
        match self.kind {
            StateKind::Disordered => {
                if self.velocity.iter().any(|&x| x != 0.0) {
                    return Err(ModelError::BadSteadyState(
                        "disordered state must have V = 0".into(),
                    ));
                }
            }
            StateKind::Ordered => {
                let speed = params
                    .swimming_speed()
                    .ok_or(ModelError::NoOrderedState(params.alpha))?;
                let norm = norm(&self.velocity);
                if (norm - speed).abs() > UNIT_TOL * speed {
                    return Err(ModelError::BadSteadyState(format!(
                        "|V| = {norm}, expected {speed}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_unit(direction: &[f64], dim: usize) -> Result<(), ModelError> {
    let n = norm(direction);
    if direction.len() != dim || (n - 1.0).abs() > UNIT_TOL {
        return Err(ModelError::BadDirection { dim, norm: n });
    }
    Ok(())
}

/// Coefficients `(V, M, N)` of the perturbation system around a steady state.
///
/// `N(u) = Σ_{j,k} a_{jk} u^j u^k` is stored through symmetrized vector
/// coefficients `a_{jk} = a_{kj}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSystem {
    params: ModelParams,
    kind: StateKind,
    drift: Vec<f64>,
    // row-major dim x dim
    linear: Vec<f64>,
    // a_{jk}^i at ((j * dim) + k) * dim + i
    quad: Vec<f64>,
}

impl TransformedSystem {
    /// Rest state: `V = 0`, `M = alpha I`, `N = 0`.
    pub fn disordered(params: &ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        let d = params.dim;
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            linear[i * d + i] = params.alpha;
        }
        Ok(Self {
            params: *params,
            kind: StateKind::Disordered,
            drift: vec![0.0; d],
            linear,
            quad: vec![0.0; d * d * d],
        })
    }

    /// Ordered polar state along `direction`: `V = sqrt(-alpha/beta) d`,
    /// `M = 2β V Vᵀ`, `N(u) = −β|u|²V − 2β(u·V)u`.
    pub fn ordered(params: &ModelParams, direction: &[f64]) -> Result<Self, ModelError> {
        let state = SteadyState::ordered(params, direction)?;
        let d = params.dim;
        let beta = params.beta;
        let v = state.velocity;
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                linear[i * d + j] = 2.0 * beta * (v[i] * v[j]);
            }
        }
        let mut quad = vec![0.0; d * d * d];
        for j in 0..d {
            for k in 0..d {
                let a = &mut quad[(j * d + k) * d..(j * d + k + 1) * d];
                for (i, ai) in a.iter_mut().enumerate() {
                    let delta_jk = if j == k { 1.0 } else { 0.0 };
                    let e_k = if i == k { 1.0 } else { 0.0 };
                    let e_j = if i == j { 1.0 } else { 0.0 };
                    *ai = -beta * delta_jk * v[i] - beta * (v[j] * e_k + v[k] * e_j);
                }
            }
        }
        Ok(Self {
            params: *params,
            kind: StateKind::Ordered,
            drift: v,
            linear,
            quad,
        })
    }

    pub fn for_state(params: &ModelParams, state: &SteadyState) -> Result<Self, ModelError> {
        state.validate(params)?;
        match state.kind {
            StateKind::Disordered => Self::disordered(params),
            StateKind::Ordered => {
                let speed = norm(&state.velocity);
                let dir: Vec<f64> = state.velocity.iter().map(|x| x / speed).collect();
                Self::ordered(params, &dir)
            }
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// The steady velocity `V`.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn linear(&self, i: usize, j: usize) -> f64 {
        self.linear[i * self.dim() + j]
    }

    /// `M` in row-major order.
    pub fn linear_matrix(&self) -> &[f64] {
        &self.linear
    }

    /// Vector coefficient `a_{jk}`.
    pub fn quad_coeff(&self, j: usize, k: usize) -> &[f64] {
        let d = self.dim();
        &self.quad[(j * d + k) * d..(j * d + k + 1) * d]
    }

    pub fn has_quadratic(&self) -> bool {
        self.quad.iter().any(|&a| a != 0.0)
    }

    /// `out = M u`.
    pub fn apply_linear(&self, u: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            out[i] = (0..d).map(|j| self.linear[i * d + j] * u[j]).sum();
        }
    }

    /// `out = N(u)` through the stored coefficients.
    pub fn apply_quadratic(&self, u: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d].fill(0.0);
        for j in 0..d {
            for k in 0..d {
                let w = u[j] * u[k];
                if w == 0.0 {
                    continue;
                }
                for (o, a) in out.iter_mut().zip(self.quad_coeff(j, k)) {
                    *o += a * w;
                }
            }
        }
    }

    pub fn quadratic(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_quadratic(u, &mut out);
        out
    }
}

/// Recover the physical velocity `v = u + V` from a perturbation field.
pub fn untransform(u: &VectorField, system: &TransformedSystem) -> Result<VectorField, ModelError> {
    if u.dim() != system.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: system.dim(),
            got: u.dim(),
        });
    }
    let mut v = u.clone();
    for (comp, &vi) in v.components.iter_mut().zip(system.drift()) {
        comp.iter_mut().for_each(|x| *x += vi);
    }
    Ok(v)
}
