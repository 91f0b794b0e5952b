use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::TransformedSystem;
use crate::spectral::{Padding, SpectralField, SpectralGrid};

/// Unprojected bracket
/// `R(u) = λ₀((u+V)·∇)u + Mu + β|u|²u − N(u)`.
///
/// With `linearized` set only `λ₀(V·∇)u + Mu` is kept. The polynomial
/// terms are evaluated on the factor-2 padded grid, on which every product
/// of up to three band-limited factors is exact.
pub(crate) fn bracket(
    grid: &SpectralGrid,
    system: &TransformedSystem,
    u: &[Vec<Complex64>],
    linearized: bool,
) -> Vec<Vec<Complex64>> {
    let d = grid.dim();
    let p = system.params();
    let kd = grid.deriv_wavevectors();
    let drift = system.drift();
    let mut r: Vec<Vec<Complex64>> = (0..d)
        .map(|a| {
            (0..grid.n_modes())
                .map(|i| {
                    let vk: f64 = (0..d).map(|c| drift[c] * kd[i][c]).sum();
                    let mut v = u[a][i] * Complex64::new(0.0, p.lambda0 * vk);
                    for b in 0..d {
                        v += u[b][i] * system.linear(a, b);
                    }
                    v
                })
                .collect()
        })
        .collect();
    if linearized {
        return r;
    }
    let nonlinear = pointwise_terms(grid, system, u);
    for (ra, na) in r.iter_mut().zip(nonlinear) {
        for (x, y) in ra.iter_mut().zip(na) {
            *x += y;
        }
    }
    r
}

/// Padded-grid physical samples of a coarse spectrum (real part).
pub(crate) fn padded_real(pad: &Padding, coeffs: &[Complex64]) -> Vec<f64> {
    pad.to_physical(coeffs).into_iter().map(|c| c.re).collect()
}

/// Physical samples of every component of `u` on the factor-2 padded grid.
pub(crate) fn padded_components(grid: &SpectralGrid, u: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    u.par_iter()
        .map(|c| padded_real(&grid.pad_cubic, c))
        .collect()
}

// λ₀(u·∇)u + β|u|²u − N(u), dealiased.
fn pointwise_terms(
    grid: &SpectralGrid,
    system: &TransformedSystem,
    u: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let d = grid.dim();
    let p = system.params();
    let pad = &grid.pad_cubic;
    let kd = grid.deriv_wavevectors();
    let phys = padded_components(grid, u);
    // grads[j * d + a] = ∂_j u_a
    let grads: Vec<Vec<f64>> = (0..d * d)
        .into_par_iter()
        .map(|idx| {
            let (j, a) = (idx / d, idx % d);
            let hat: Vec<Complex64> = u[a]
                .iter()
                .zip(kd)
                .map(|(c, k)| c * Complex64::new(0.0, k[j]))
                .collect();
            padded_real(pad, &hat)
        })
        .collect();
    let quad = system.has_quadratic();
    (0..d)
        .into_par_iter()
        .map(|a| {
            let m = pad.len();
            let mut buf = vec![Complex64::default(); m];
            let mut uu = [0.0; 3];
            let mut nq = [0.0; 3];
            for (pt, out) in buf.iter_mut().enumerate() {
                let mut adv = 0.0;
                let mut sq = 0.0;
                for j in 0..d {
                    uu[j] = phys[j][pt];
                    adv += uu[j] * grads[j * d + a][pt];
                    sq += uu[j] * uu[j];
                }
                let mut v = p.lambda0 * adv + p.beta * sq * uu[a];
                if quad {
                    system.apply_quadratic(&uu[..d], &mut nq[..d]);
                    v -= nq[a];
                }
                *out = Complex64::new(v, 0.0);
            }
            pad.truncate(buf)
        })
        .collect()
}

/// `coeffs ← −P coeffs (+ P f)`.
pub(crate) fn project_tendency(
    grid: &SpectralGrid,
    mut r: Vec<Vec<Complex64>>,
    forcing: Option<&SpectralField>,
) -> Vec<Vec<Complex64>> {
    for c in r.iter_mut().flatten() {
        *c = -*c;
    }
    if let Some(f) = forcing {
        for (ra, fa) in r.iter_mut().zip(&f.coeffs) {
            for (x, y) in ra.iter_mut().zip(fa) {
                *x += y;
            }
        }
    }
    crate::spectral::leray_project_in_place(grid, &mut r);
    r
}
