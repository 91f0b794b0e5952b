use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SolverError;
use crate::spectral::{leray_project_in_place, SpectralField, SpectralGrid};

/// Seeded solenoidal Gaussian random field.
///
/// Each mode inside the quadratic dealiasing mask (excluding the mean and
/// Nyquist modes) gets independent complex normal components scaled by
/// `exp(−|k|²/k₀²)`. The field is made Hermitian, projected, and rescaled so
/// that the root-mean-square of `|u|` equals `amplitude`.
pub fn random_solenoidal(
    grid: &Arc<SpectralGrid>,
    amplitude: f64,
    k0: f64,
    seed: u64,
) -> Result<SpectralField, SolverError> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "perturbation amplitude must be finite and >= 0 (got {amplitude})"
        )));
    }
    if !(k0.is_finite() && k0 > 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "spectrum scale k0 must be > 0 (got {k0})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    let d = grid.dim();
    for i in 1..grid.n_modes() {
        let j = grid.conjugate_index(i);
        if j < i || grid.is_nyquist(i) || !grid.mask_quadratic()[i] {
            continue;
        }
        let w = (-grid.k2()[i] / (k0 * k0)).exp();
        for c in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * w;
            f.coeffs[c][i] = z;
            f.coeffs[c][j] = z.conj();
        }
    }
    leray_project_in_place(grid, &mut f.coeffs);
    let rms = f.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if rms > 0.0 {
        f.scale(amplitude / rms);
    }
    Ok(f)
}

/// Real plane wave `u(x) = amplitude · Re(direction e^{i k·x})` at lattice
/// index `m`, so that its mode amplitude is `amplitude`. The direction is
/// projected onto `k^⊥` and normalized.
pub fn plane_wave(
    grid: &Arc<SpectralGrid>,
    m: &[i64],
    direction: &[Complex64],
    amplitude: f64,
) -> Result<SpectralField, SolverError> {
    let i = grid
        .index_of(m)
        .filter(|&i| i != 0 && !grid.is_nyquist(i))
        .ok_or_else(|| {
            SolverError::InvalidConfig(format!(
                "wavevector {m:?} is not a non-zero, non-Nyquist lattice mode"
            ))
        })?;
    if direction.len() != grid.dim() {
        return Err(SolverError::InvalidConfig(format!(
            "direction has {} components, grid dimension is {}",
            direction.len(),
            grid.dim()
        )));
    }
    let j = grid.conjugate_index(i);
    let mut f = SpectralField::zeros(grid);
    for (c, z) in direction.iter().enumerate() {
        f.coeffs[c][i] = *z;
        f.coeffs[c][j] = z.conj();
    }
    leray_project_in_place(grid, &mut f.coeffs);
    let norm = (0..grid.dim())
        .map(|c| f.coeffs[c][i].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(SolverError::InvalidConfig(
            "direction is parallel to the wavevector (not solenoidal)".into(),
        ));
    }
    f.scale(0.5 * amplitude / norm);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn random_field_properties() {
        let g = SpectralGrid::new(2, 32, 20.0 * PI).unwrap();
        let a = random_solenoidal(&g, 1e-3, 1.0, 7).unwrap();
        let b = random_solenoidal(&g, 1e-3, 1.0, 7).unwrap();
        let c = random_solenoidal(&g, 1e-3, 1.0, 8).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
        assert_ne!(a.coeffs, c.coeffs);
        assert!(a.divergence_residual() < 1e-14);
        assert!(a.hermitian_defect() < 1e-15);
        assert!(a.coeffs.iter().all(|c| c[0].norm() == 0.0));
        let rms = a.to_physical().rms();
        assert!((rms - 1e-3).abs() < 1e-15);
        for i in 0..g.n_modes() {
            if !g.mask_quadratic()[i] || g.is_nyquist(i) {
                assert!(a.coeffs.iter().all(|c| c[i].norm() == 0.0));
            }
        }
        assert!(random_solenoidal(&g, -1.0, 1.0, 0).is_err());
        assert!(random_solenoidal(&g, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn plane_wave_amplitude() {
        let g = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let f = plane_wave(&g, &[3, 0], &[zero, one], 0.2).unwrap();
        assert!((f.mode_amplitude(&[3, 0]).unwrap() - 0.2).abs() < 1e-16);
        let u = f.to_physical();
        for p in 0..g.n_points() {
            let x = g.point(p)[0];
            assert!((u.components[1][p] - 0.2 * (3.0 * x).cos()).abs() < 1e-15);
        }
        assert!(plane_wave(&g, &[3, 0], &[one, zero], 0.2).is_err());
        assert!(plane_wave(&g, &[8, 0], &[zero, one], 0.2).is_err());
        assert!(plane_wave(&g, &[0, 0], &[zero, one], 0.2).is_err());
    }
}
