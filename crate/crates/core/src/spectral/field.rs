use std::sync::Arc;

use num_complex::Complex64;

use super::{SpectralError, SpectralGrid};

/// Real vector field sampled on a grid, component-major with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(dim: usize, n_points: usize) -> Self {
        Self {
            components: vec![vec![0.0; n_points]; dim],
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(grid.dim(), grid.n_points());
        for p in 0..grid.n_points() {
            let v = f(grid.point(p));
            for (c, comp) in out.components.iter_mut().enumerate() {
                comp[p] = v[c];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn n_points(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Root-mean-square of `|u|` over the samples.
    pub fn rms(&self) -> f64 {
        let n = self.n_points().max(1) as f64;
        let s: f64 = self.components.iter().flatten().map(|x| x * x).sum();
        (s / n).sqrt()
    }
}

/// Fourier coefficients of a real vector field (amplitude convention:
/// the mode-0 coefficient is the spatial mean).
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<SpectralGrid>,
    pub coeffs: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![vec![Complex64::default(); grid.n_modes()]; grid.dim()],
        }
    }

    pub fn from_coeffs(
        grid: &Arc<SpectralGrid>,
        coeffs: Vec<Vec<Complex64>>,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.dim() || coeffs.iter().any(|c| c.len() != grid.n_modes()) {
            return Err(SpectralError::ShapeMismatch {
                expected: (grid.dim(), grid.n_modes()),
                got: (coeffs.len(), coeffs.first().map_or(0, Vec::len)),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Forward transform of physical samples.
    pub fn forward(grid: &Arc<SpectralGrid>, physical: &VectorField) -> Result<Self, SpectralError> {
        if physical.dim() != grid.dim()
            || physical.components.iter().any(|c| c.len() != grid.n_points())
        {
            return Err(SpectralError::ShapeMismatch {
                expected: (grid.dim(), grid.n_points()),
                got: (physical.dim(), physical.n_points()),
            });
        }
        let coeffs = physical
            .components
            .iter()
            .map(|comp| forward_scalar(grid, comp))
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Inverse transform; the imaginary parts (zero for Hermitian spectra)
    /// are discarded.
    pub fn to_physical(&self) -> VectorField {
        VectorField {
            components: self
                .coeffs
                .iter()
                .map(|c| inverse_scalar(&self.grid, c))
                .collect(),
        }
    }

    /// Inverse transform keeping the complex values.
    pub fn to_physical_complex(&self) -> Vec<Vec<Complex64>> {
        self.coeffs
            .iter()
            .map(|c| {
                let mut buf = c.clone();
                self.grid.fft.inverse(&mut buf);
                buf
            })
            .collect()
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .fold(0.0, |m: f64, c| m.max(c.norm()))
    }

    /// `‖u‖₂²` over the periodic box (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.grid.volume() * self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Real L² inner product over the box.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        self.grid.volume() * s
    }

    /// `Σ_k |k|^{2p} |û(k)|²` times the box volume, i.e. `‖(−Δ)^{p/2} u‖₂²`.
    pub fn sobolev_seminorm_sq(&self, power: i32) -> f64 {
        let k2 = self.grid.k2();
        let s: f64 = self
            .coeffs
            .iter()
            .map(|c| {
                c.iter()
                    .zip(k2)
                    .map(|(c, &kk)| kk.powi(power) * c.norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        self.grid.volume() * s
    }

    /// `max_k |k·û(k)| / max_k |û(k)|`, zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let kd = self.grid.deriv_wavevectors();
        let mut worst: f64 = 0.0;
        for (i, k) in kd.iter().enumerate() {
            let div: Complex64 = (0..self.dim()).map(|c| self.coeffs[c][i] * k[c]).sum();
            worst = worst.max(div.norm());
        }
        worst / scale
    }

    /// Largest `|û(−k) − conj(û(k))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for comp in &self.coeffs {
            for (i, c) in comp.iter().enumerate() {
                let j = self.grid.conjugate_index(i);
                worst = worst.max((comp[j] - c.conj()).norm());
            }
        }
        worst / scale
    }

    /// Amplitude of the real Fourier component at lattice index `m`:
    /// `2|û(k)|` for `k ≠ 0`, `|û(0)|` for the mean.
    pub fn mode_amplitude(&self, m: &[i64]) -> Option<f64> {
        let i = self.grid.index_of(m)?;
        let a = self
            .coeffs
            .iter()
            .map(|c| c[i].norm_sqr())
            .sum::<f64>()
            .sqrt();
        Some(if m.iter().all(|&c| c == 0) { a } else { 2.0 * a })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().flatten().for_each(|c| *c *= a);
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in x.iter_mut().zip(y) {
                *x += y * a;
            }
        }
    }

    /// Zero every mode carrying a Nyquist component.
    pub fn clear_nyquist(&mut self) {
        for i in 0..self.grid.n_modes() {
            if self.grid.is_nyquist(i) {
                for c in &mut self.coeffs {
                    c[i] = Complex64::default();
                }
            }
        }
    }

    /// Replace `û(k)` by `(û(k) + conj û(−k))/2`, removing the imaginary
    /// physical part that round-off leaves behind.
    pub fn enforce_hermitian(&mut self) {
        for comp in &mut self.coeffs {
            for i in 0..self.grid.n_modes() {
                let j = self.grid.conjugate_index(i);
                if j < i {
                    continue;
                }
                let avg = 0.5 * (comp[i] + comp[j].conj());
                comp[i] = avg;
                comp[j] = avg.conj();
            }
        }
    }

    /// Translate by whole grid cells: `u(x) -> u(x - shift·h)`.
    pub fn shift_by_cells(&self, shift: &[i64]) -> SpectralField {
        let g = &self.grid;
        let mut out = self.clone();
        for i in 0..g.n_modes() {
            let m = g.lattice_index(i);
            let phase: f64 = (0..g.dim())
                .map(|a| -2.0 * std::f64::consts::PI * (m[a] * shift[a]) as f64 / g.n() as f64)
                .sum();
            let rot = Complex64::from_polar(1.0, phase);
            for c in &mut out.coeffs {
                c[i] *= rot;
            }
        }
        out
    }
}

pub(crate) fn forward_scalar(grid: &SpectralGrid, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.fft.forward(&mut buf);
    buf
}

pub(crate) fn inverse_scalar(grid: &SpectralGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    grid.fft.inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
