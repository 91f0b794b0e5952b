//! Fourier symbol of the linearized operator, the unstable band of the rest
//! state, and the linear stability classification of both steady states.
//!
//! The linearized operator `A = Γ₂Δ² − Γ₀Δ + λ₀(V·∇) + PM` acts on
//! solenoidal fields and has the symbol
//!
//! ```text
//! σ(k) = Γ₂|k|⁴ + Γ₀|k|² + σ_P(k) M + iλ₀ V·k,   σ_P(k) = I − k kᵀ/|k|².
//! ```
//!
//! restricted to solenoidal vectors (see [`symbol_at`] for the full matrix).
//! Perturbations evolve by `exp(−tA)`, so a mode grows when its symbol
//! eigenvalue has negative real part.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eig::SmallMatrix;
use crate::model::{ModelError, ModelParams, StateKind, TransformedSystem};
use crate::spectral::SpectralGrid;

#[derive(Debug, Error)]
pub enum LinearError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("wavevector has {got} components, system dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigenvalue computation produced non-finite values at k = {0:?}")]
    EigenFailure(Vec<f64>),
    #[error("phase diagram needs finite ranges and resolution >= 2 per axis")]
    BadPhaseGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Value of the symbol at one wavevector.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub k: Vec<f64>,
    pub matrix: SmallMatrix,
}

impl SymbolMatrix {
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Orthonormal basis of the solenoidal subspace `{x : k·x = 0}` (all of
    /// ℝ^dim at `k = 0`).
    pub fn solenoidal_basis(&self) -> Vec<[f64; 3]> {
        solenoidal_basis(&self.k)
    }

    /// `Bᵀ σ(k) B` for the solenoidal basis `B`.
    pub fn compressed(&self) -> (SmallMatrix, Vec<[f64; 3]>) {
        let basis = self.solenoidal_basis();
        let d = self.dim();
        let mut out = SmallMatrix::zeros(basis.len());
        for (r, br) in basis.iter().enumerate() {
            for (c, bc) in basis.iter().enumerate() {
                let mut s = Complex64::default();
                for i in 0..d {
                    for j in 0..d {
                        s += self.matrix.get(i, j) * (br[i] * bc[j]);
                    }
                }
                out.set(r, c, s);
            }
        }
        (out, basis)
    }

    /// Eigenvalues of the symbol restricted to solenoidal vectors, the
    /// subspace the dynamics lives on.
    pub fn solenoidal_eigenvalues(&self) -> Vec<Complex64> {
        self.compressed().0.eigenvalues()
    }
}

pub fn solenoidal_basis(k: &[f64]) -> Vec<[f64; 3]> {
    let d = k.len();
    let kk: f64 = k.iter().map(|x| x * x).sum();
    let mut e = |i: usize| {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        v
    };
    if kk == 0.0 {
        return (0..d).map(&mut e).collect();
    }
    let norm = kk.sqrt();
    let kh: Vec<f64> = k.iter().map(|x| x / norm).collect();
    if d == 2 {
        return vec![[-kh[1], kh[0], 0.0]];
    }
    // 3D: Gram-Schmidt from the axis least aligned with k, then a cross product.
    let axis = (0..3)
        .min_by(|&a, &b| kh[a].abs().partial_cmp(&kh[b].abs()).unwrap())
        .unwrap();
    let mut b1 = e(axis);
    let proj = kh[axis];
    for i in 0..3 {
        b1[i] -= proj * kh[i];
    }
    let n1 = (b1[0] * b1[0] + b1[1] * b1[1] + b1[2] * b1[2]).sqrt();
    b1.iter_mut().for_each(|x| *x /= n1);
    let b2 = [
        kh[1] * b1[2] - kh[2] * b1[1],
        kh[2] * b1[0] - kh[0] * b1[2],
        kh[0] * b1[1] - kh[1] * b1[0],
    ];
    vec![b1, b2]
}

/// `σ(k) = (Γ₂|k|⁴ + Γ₀|k|² + iλ₀ V·k) I + σ_P M σ_P + (I − σ_P) M (I − σ_P)`,
/// with `σ_P(0) = I`.
///
/// On solenoidal vectors this agrees with `σ_P(k) M`. The gradient block is
/// filled with `M` itself so that a scalar `M = αI` gives exactly
/// `(Γ₂|k|⁴ + Γ₀|k|² + α) I` and the real part is symmetric.
pub fn symbol_at(system: &TransformedSystem, k: &[f64]) -> Result<SymbolMatrix, LinearError> {
    let d = system.dim();
    if k.len() != d {
        return Err(LinearError::DimensionMismatch {
            expected: d,
            got: k.len(),
        });
    }
    let p = system.params();
    let kk: f64 = k.iter().map(|x| x * x).sum();
    let scalar = p.gamma2 * kk * kk + p.gamma0 * kk;
    let drift: f64 = system.drift().iter().zip(k).map(|(v, k)| v * k).sum();
    let lin = system.linear_matrix();
    let mut block = [[0.0f64; 3]; 3];
    let scalar_m = (0..d).all(|i| (0..d).all(|j| lin[i * d + j] == if i == j { lin[0] } else { 0.0 }));
    if scalar_m || kk == 0.0 {
        for i in 0..d {
            for j in 0..d {
                block[i][j] = lin[i * d + j];
            }
        }
    } else {
        let proj = |i: usize, j: usize| f64::from(u8::from(i == j)) - k[i] * k[j] / kk;
        let perp = |i: usize, j: usize| k[i] * k[j] / kk;
        for i in 0..d {
            for j in i..d {
                let mut v = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        let mab = lin[a * d + b];
                        v += (proj(i, a) * proj(b, j) + perp(i, a) * perp(b, j)) * mab;
                    }
                }
                block[i][j] = v;
                block[j][i] = v;
            }
        }
    }
    let mut m = SmallMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut v = Complex64::new(block[i][j], 0.0);
            if i == j {
                v += Complex64::new(scalar, p.lambda0 * drift);
            }
            m.set(i, j, v);
        }
    }
    Ok(SymbolMatrix {
        k: k.to_vec(),
        matrix: m,
    })
}

/// `−min Re λ` over the solenoidal eigenvalues of the symbol; positive means
/// the mode grows.
pub fn growth_rate(system: &TransformedSystem, k: &[f64]) -> Result<f64, LinearError> {
    Ok(growth_mode(system, k)?.rate)
}

/// Fastest-growing solenoidal eigenmode at one wavevector.
#[derive(Debug, Clone)]
pub struct GrowthMode {
    pub rate: f64,
    pub eigenvalue: Complex64,
    /// Unit complex vector in physical components.
    pub direction: Vec<Complex64>,
}

pub fn growth_mode(system: &TransformedSystem, k: &[f64]) -> Result<GrowthMode, LinearError> {
    let symbol = symbol_at(system, k)?;
    let (c, basis) = symbol.compressed();
    let eig = c.eigenvalues();
    let lambda = eig
        .iter()
        .copied()
        .min_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal))
        .filter(|l| l.re.is_finite() && l.im.is_finite())
        .ok_or_else(|| LinearError::EigenFailure(k.to_vec()))?;
    let coords = null_vector(&c, lambda);
    let d = system.dim();
    let mut direction = vec![Complex64::default(); d];
    for (b, w) in basis.iter().zip(&coords) {
        for i in 0..d {
            direction[i] += w * b[i];
        }
    }
    let norm = direction.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|z| *z /= norm);
    let rate = -lambda.re;
    Ok(GrowthMode {
        rate: if rate == 0.0 { 0.0 } else { rate },
        eigenvalue: lambda,
        direction,
    })
}

// Eigenvector of `c` for `lambda`, picking the best-conditioned row of
// `c − λI`.
fn null_vector(c: &SmallMatrix, lambda: Complex64) -> Vec<Complex64> {
    let n = c.order();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let mut a = *c;
    for i in 0..n {
        a.set(i, i, c.get(i, i) - lambda);
    }
    match n {
        1 => vec![one],
        2 => {
            let r0 = [a.get(0, 0), a.get(0, 1)];
            let r1 = [a.get(1, 0), a.get(1, 1)];
            let n0 = r0[0].norm() + r0[1].norm();
            let n1 = r1[0].norm() + r1[1].norm();
            let r = if n0 >= n1 { r0 } else { r1 };
            if r[0].norm() + r[1].norm() == 0.0 {
                vec![one, zero]
            } else {
                vec![r[1], -r[0]]
            }
        }
        _ => {
            // cross product of the two largest rows (conjugated) spans the kernel
            let rows: Vec<[Complex64; 3]> = (0..3)
                .map(|i| [a.get(i, 0), a.get(i, 1), a.get(i, 2)])
                .collect();
            let mut best = vec![one, zero, zero];
            let mut best_norm = 0.0;
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let (x, y) = (rows[i], rows[j]);
                let v = vec![
                    x[1] * y[2] - x[2] * y[1],
                    x[2] * y[0] - x[0] * y[2],
                    x[0] * y[1] - x[1] * y[0],
                ];
                let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                if nv > best_norm {
                    best_norm = nv;
                    best = v;
                }
            }
            best
        }
    }
}

/// Interval of `|k|²` on which the rest-state symbol is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandResult {
    pub has_band: bool,
    pub s_minus_sq: f64,
    pub s_plus_sq: f64,
}

/// Roots of `Γ₂ x² + Γ₀ x + α` in `x = |k|²`, clipped to `x ≥ 0`.
pub fn unstable_band(params: &ModelParams) -> BandResult {
    let (g0, g2, alpha) = (params.gamma0, params.gamma2, params.alpha);
    let none = BandResult {
        has_band: false,
        s_minus_sq: 0.0,
        s_plus_sq: 0.0,
    };
    // Sign of the discriminant decided with the same comparison as the
    // classification, so the touching case 4α = Γ₀²/Γ₂ is exact.
    let gap = g0 * g0 / g2 - 4.0 * alpha;
    if gap <= 0.0 {
        return none;
    }
    let root_disc = (g2 * gap).sqrt();
    // stable quadratic formula
    let q = -0.5 * (g0 + if g0 >= 0.0 { root_disc } else { -root_disc });
    let (mut lo, mut hi) = (q / g2, if q != 0.0 { alpha / q } else { 0.0 });
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    if hi <= 0.0 {
        return none;
    }
    BandResult {
        has_band: true,
        s_minus_sq: lo.max(0.0),
        s_plus_sq: hi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    ExponentiallyStable,
    AsymptoticallyStable,
    ExponentiallyUnstable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExponentiallyStable => "ExponentiallyStable",
            Self::AsymptoticallyStable => "AsymptoticallyStable",
            Self::ExponentiallyUnstable => "ExponentiallyUnstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub state_kind: StateKind,
    pub classification: Classification,
    /// Supremum over all wavevectors of the growth rate.
    pub max_growth_rate: f64,
    pub argmax_wavevector: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<BandResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn along_first_axis(dim: usize, norm: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = norm;
    v
}

/// Rest-state classification in closed form (continuum of wavevectors).
pub fn classify_disordered(params: &ModelParams) -> Result<StabilityReport, LinearError> {
    params.validate()?;
    let (g0, g2, alpha) = (params.gamma0, params.gamma2, params.alpha);
    let (classification, rate, s2) = if g0 < 0.0 {
        let lhs = 4.0 * alpha;
        let rhs = g0 * g0 / g2;
        let class = if lhs > rhs {
            Classification::ExponentiallyStable
        } else if lhs == rhs {
            Classification::AsymptoticallyStable
        } else {
            Classification::ExponentiallyUnstable
        };
        // −min_s (Γ₂s⁴ + Γ₀s² + α) = Γ₀²/(4Γ₂) − α at s² = −Γ₀/(2Γ₂)
        (class, (rhs - lhs) / 4.0, -g0 / (2.0 * g2))
    } else {
        let class = if alpha > 0.0 {
            Classification::ExponentiallyStable
        } else if alpha == 0.0 {
            Classification::AsymptoticallyStable
        } else {
            Classification::ExponentiallyUnstable
        };
        (class, -alpha, 0.0)
    };
    let band = unstable_band(params);
    Ok(StabilityReport {
        state_kind: StateKind::Disordered,
        classification,
        max_growth_rate: if rate == 0.0 { 0.0 } else { rate },
        argmax_wavevector: along_first_axis(params.dim, s2.sqrt()),
        band: Some(band),
        note: None,
    })
}

/// Ordered-state classification. The witness for instability is a
/// wavevector parallel to `V` (taken along the first axis) carrying a
/// velocity perpendicular to `V`.
pub fn classify_ordered(params: &ModelParams) -> Result<StabilityReport, LinearError> {
    params.validate()?;
    if params.alpha >= 0.0 {
        return Err(ModelError::NoOrderedState(params.alpha).into());
    }
    let (g0, g2) = (params.gamma0, params.gamma2);
    let report = if g0 < 0.0 {
        StabilityReport {
            state_kind: StateKind::Ordered,
            classification: Classification::ExponentiallyUnstable,
            max_growth_rate: g0 * g0 / (4.0 * g2),
            argmax_wavevector: along_first_axis(params.dim, (-g0 / (2.0 * g2)).sqrt()),
            band: Some(BandResult {
                has_band: true,
                s_minus_sq: 0.0,
                s_plus_sq: -g0 / g2,
            }),
            note: None,
        }
    } else {
        StabilityReport {
            state_kind: StateKind::Ordered,
            classification: Classification::AsymptoticallyStable,
            max_growth_rate: 0.0,
            argmax_wavevector: vec![0.0; params.dim],
            band: None,
            note: Some("asymptotic stability is an L2 statement".into()),
        }
    };
    Ok(report)
}

/// Largest growth rate over the non-Nyquist lattice modes of `grid`.
pub fn lattice_max_growth(
    system: &TransformedSystem,
    grid: &SpectralGrid,
) -> Result<(f64, [i64; 3]), LinearError> {
    let d = grid.dim();
    (0..grid.n_modes())
        .into_par_iter()
        .filter(|&i| !grid.is_nyquist(i))
        .map(|i| {
            let k = grid.wavevector(i);
            growth_rate(system, &k[..d]).map(|r| (r, grid.lattice_index(i)))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, [0; 3]),
            |a, b| Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )
}

/// Number of lattice wavenumbers `m·2π/L` (m = 1, 2, …) whose square lies
/// strictly inside `band`.
pub fn band_lattice_count(band: &BandResult, grid: &SpectralGrid) -> usize {
    if !band.has_band {
        return 0;
    }
    (1..=grid.n() as i64 / 2)
        .map(|m| (m as f64 * grid.dk()).powi(2))
        .filter(|&s2| s2 > band.s_minus_sq && s2 < band.s_plus_sq)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub gamma0: f64,
    pub alpha: f64,
    pub disordered: StabilityReport,
    pub ordered: Option<StabilityReport>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Tabulate both classifications over a `(Γ₀, α)` grid, row-major in α.
pub fn phase_diagram(
    base: &ModelParams,
    gamma0_range: (f64, f64),
    alpha_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<Vec<PhaseCell>, LinearError> {
    let finite = [gamma0_range.0, gamma0_range.1, alpha_range.0, alpha_range.1]
        .iter()
        .all(|x| x.is_finite());
    if !finite || resolution.0 < 2 || resolution.1 < 2 {
        return Err(LinearError::BadPhaseGrid);
    }
    let cells: Vec<(f64, f64)> = linspace(alpha_range.0, alpha_range.1, resolution.1)
        .flat_map(|a| linspace(gamma0_range.0, gamma0_range.1, resolution.0).map(move |g| (g, a)))
        .collect();
    cells
        .into_par_iter()
        .map(|(gamma0, alpha)| {
            let p = ModelParams {
                gamma0,
                alpha,
                ..*base
            };
            let disordered = classify_disordered(&p)?;
            let ordered = if alpha < 0.0 {
                Some(classify_ordered(&p)?)
            } else {
                None
            };
            Ok(PhaseCell {
                gamma0,
                alpha,
                disordered,
                ordered,
            })
        })
        .collect()
}

pub const PHASE_CSV_HEADER: &str = "gamma0,alpha,class,max_growth_rate,argmax_k,ordered_class";

pub fn write_phase_csv<W: Write>(mut w: W, cells: &[PhaseCell]) -> std::io::Result<()> {
    writeln!(w, "{PHASE_CSV_HEADER}")?;
    for c in cells {
        let kmag = c
            .disordered
            .argmax_wavevector
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.gamma0,
            c.alpha,
            c.disordered.classification.as_str(),
            c.disordered.max_growth_rate,
            kmag,
            c.ordered
                .as_ref()
                .map_or("", |o| o.classification.as_str())
        )?;
    }
    Ok(())
}
