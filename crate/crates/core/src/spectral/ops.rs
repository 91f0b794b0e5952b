use num_complex::Complex64;

use super::field::forward_scalar;
use super::{SpectralError, SpectralField, SpectralGrid};

/// Helmholtz (Leray) projection `û(k) ↦ (I − k kᵀ/|k|²) û(k)`; the identity
/// at `k = 0`.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_project_in_place(f.grid(), &mut out.coeffs);
    out
}

pub(crate) fn leray_project_in_place(grid: &SpectralGrid, coeffs: &mut [Vec<Complex64>]) {
    let dim = grid.dim();
    for (i, k) in grid.deriv_wavevectors().iter().enumerate() {
        let kk: f64 = k[..dim].iter().map(|x| x * x).sum();
        if kk == 0.0 {
            continue;
        }
        let kdotu: Complex64 = (0..dim).map(|c| coeffs[c][i] * k[c]).sum();
        let s = kdotu / kk;
        for c in 0..dim {
            coeffs[c][i] -= s * k[c];
        }
    }
}

/// Complementary projection `I − P` onto gradients.
pub fn gradient_part(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    let p = leray_project(f);
    out.add_scaled(-1.0, &p);
    out
}

/// Spectral divergence `i k·û`.
pub fn divergence(f: &SpectralField) -> Vec<Complex64> {
    let g = f.grid();
    g.deriv_wavevectors()
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let s: Complex64 = (0..g.dim()).map(|c| f.coeffs[c][i] * k[c]).sum();
            s * Complex64::i()
        })
        .collect()
}

/// `∂_j f` for every direction `j`: entry `j` holds the field `∂_j f`.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    let g = f.grid();
    (0..g.dim())
        .map(|j| {
            let mut out = f.clone();
            for comp in &mut out.coeffs {
                for (c, k) in comp.iter_mut().zip(g.deriv_wavevectors()) {
                    *c *= Complex64::new(0.0, k[j]);
                }
            }
            out
        })
        .collect()
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    multiply_by(f, |kk| -kk)
}

pub fn bilaplacian(f: &SpectralField) -> SpectralField {
    multiply_by(f, |kk| kk * kk)
}

fn multiply_by(f: &SpectralField, symbol: impl Fn(f64) -> f64) -> SpectralField {
    let mut out = f.clone();
    let k2 = f.grid().k2();
    for comp in &mut out.coeffs {
        for (c, &kk) in comp.iter_mut().zip(k2) {
            *c *= symbol(kk);
        }
    }
    out
}

/// The three derivative operators of the model applied to one field.
#[derive(Debug, Clone)]
pub struct GradientOps {
    pub gradient: Vec<SpectralField>,
    pub laplacian: SpectralField,
    pub bilaplacian: SpectralField,
}

pub fn gradient_ops(f: &SpectralField) -> GradientOps {
    GradientOps {
        gradient: gradient(f),
        laplacian: laplacian(f),
        bilaplacian: bilaplacian(f),
    }
}

/// Alias-free pointwise product of two or three real scalar fields given as
/// physical samples. Returns the Fourier coefficients of the product on the
/// grid's modes.
///
/// Each factor is band-limited to the non-Nyquist modes, evaluated on a grid
/// padded by 3/2 (two factors) or 2 (three factors), multiplied, and
/// transformed back. The result equals the exact product's coefficients for
/// every non-Nyquist mode; Nyquist modes are returned as zero.
pub fn dealiased_product(
    grid: &SpectralGrid,
    factors: &[&[f64]],
) -> Result<Vec<Complex64>, SpectralError> {
    for f in factors {
        if f.len() != grid.n_points() {
            return Err(SpectralError::ShapeMismatch {
                expected: (1, grid.n_points()),
                got: (1, f.len()),
            });
        }
    }
    let spectra: Vec<Vec<Complex64>> = factors.iter().map(|f| forward_scalar(grid, f)).collect();
    let refs: Vec<&[Complex64]> = spectra.iter().map(Vec::as_slice).collect();
    dealiased_product_spectral(grid, &refs)
}

/// As [`dealiased_product`], with factors given by their coefficients.
pub fn dealiased_product_spectral(
    grid: &SpectralGrid,
    factors: &[&[Complex64]],
) -> Result<Vec<Complex64>, SpectralError> {
    let pad = match factors.len() {
        2 => &grid.pad_quadratic,
        3 => &grid.pad_cubic,
        n => return Err(SpectralError::FactorCount(n)),
    };
    for f in factors {
        if f.len() != grid.n_modes() {
            return Err(SpectralError::ShapeMismatch {
                expected: (1, grid.n_modes()),
                got: (1, f.len()),
            });
        }
    }
    let mut acc = pad.to_physical(factors[0]);
    acc.iter_mut().for_each(|c| *c = Complex64::new(c.re, 0.0));
    for f in &factors[1..] {
        let phys = pad.to_physical(f);
        for (a, b) in acc.iter_mut().zip(&phys) {
            a.re *= b.re;
        }
    }
    Ok(pad.truncate(acc))
}
