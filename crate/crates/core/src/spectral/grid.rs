use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::fft::FftNd;
use super::SpectralError;

/// Periodic box `[0, L)^dim` sampled with `n` points per axis.
///
/// Mode `i` has lattice index `m ∈ {−n/2+1, …, n/2}^dim` (axis 0 fastest)
/// and wavevector `k = (2π/L) m`. The Nyquist component `m_a = n/2` has no
/// conjugate partner of its own, so first-order operators (gradient,
/// divergence, projection) use a wavevector with those components set to
/// zero; even operators use the full `|k|²`.
#[derive(Debug)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    length: f64,
    n_modes: usize,
    lattice: Vec<[i64; 3]>,
    deriv_k: Vec<[f64; 3]>,
    k2: Vec<f64>,
    mask_quadratic: Vec<bool>,
    mask_cubic: Vec<bool>,
    pub(crate) fft: FftNd,
    pub(crate) pad_quadratic: Padding,
    pub(crate) pad_cubic: Padding,
}

/// Zero-padded companion grid used to evaluate products without aliasing.
#[derive(Debug)]
pub(crate) struct Padding {
    pub(crate) fft: FftNd,
    // coarse mode -> fine index, usize::MAX for dropped (Nyquist) modes
    map: Vec<usize>,
}

impl Padding {
    fn new(m: usize, dim: usize, lattice: &[[i64; 3]], n: usize) -> Self {
        let half = (n / 2) as i64;
        let map = lattice
            .iter()
            .map(|idx| {
                if idx[..dim].contains(&half) {
                    return usize::MAX;
                }
                let mut fine = 0usize;
                let mut stride = 1usize;
                for &c in &idx[..dim] {
                    fine += c.rem_euclid(m as i64) as usize * stride;
                    stride *= m;
                }
                fine
            })
            .collect();
        Self {
            fft: FftNd::new(m, dim),
            map,
        }
    }

    /// Evaluate a coarse spectrum on the fine physical grid.
    pub(crate) fn to_physical(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.fft.len()];
        for (c, &j) in coeffs.iter().zip(&self.map) {
            if j != usize::MAX {
                buf[j] = *c;
            }
        }
        self.fft.inverse(&mut buf);
        buf
    }

    /// Transform fine physical samples and keep only the coarse modes.
    pub(crate) fn truncate(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.forward(&mut buf);
        self.map
            .iter()
            .map(|&j| {
                if j == usize::MAX {
                    Complex64::default()
                } else {
                    buf[j]
                }
            })
            .collect()
    }

    pub(crate) fn len(&self) -> usize {
        self.fft.len()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Arc<Self>, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::BadDimension(dim));
        }
        if !n.is_multiple_of(2) {
            return Err(SpectralError::OddGrid(n));
        }
        if n < 8 {
            return Err(SpectralError::GridTooSmall(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::BadLength(length));
        }
        let n_modes = n.pow(dim as u32);
        let half = (n / 2) as i64;
        let dk = 2.0 * PI / length;
        let signed = |i: usize| -> i64 {
            let i = i as i64;
            if i <= half {
                i
            } else {
                i - n as i64
            }
        };
        let mut lattice = Vec::with_capacity(n_modes);
        let mut deriv_k = Vec::with_capacity(n_modes);
        let mut k2 = Vec::with_capacity(n_modes);
        let mut mask_quadratic = Vec::with_capacity(n_modes);
        let mut mask_cubic = Vec::with_capacity(n_modes);
        for idx in 0..n_modes {
            let mut m = [0i64; 3];
            let mut rest = idx;
            for slot in m.iter_mut().take(dim) {
                *slot = signed(rest % n);
                rest /= n;
            }
            let mut kd = [0.0; 3];
            let mut kk = 0.0;
            for a in 0..dim {
                let k = dk * m[a] as f64;
                kk += k * k;
                if m[a] != half {
                    kd[a] = k;
                }
            }
            // |m| <= n/3 and |m| <= n/4 in exact integer arithmetic
            mask_quadratic.push(m[..dim].iter().all(|&c| 3 * c.abs() <= n as i64));
            mask_cubic.push(m[..dim].iter().all(|&c| 4 * c.abs() <= n as i64));
            lattice.push(m);
            deriv_k.push(kd);
            k2.push(kk);
        }
        let pad_quadratic = Padding::new(3 * n / 2, dim, &lattice, n);
        let pad_cubic = Padding::new(2 * n, dim, &lattice, n);
        Ok(Arc::new(Self {
            dim,
            n,
            length,
            n_modes,
            lattice,
            deriv_k,
            k2,
            mask_quadratic,
            mask_cubic,
            fft: FftNd::new(n, dim),
            pad_quadratic,
            pad_cubic,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of physical samples (equal to the number of modes).
    pub fn n_points(&self) -> usize {
        self.n_modes
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.n_points() as f64
    }

    /// Lattice spacing `2π/L` in wavenumber space.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Integer lattice index of mode `i` (unused trailing slots are zero).
    pub fn lattice_index(&self, i: usize) -> [i64; 3] {
        self.lattice[i]
    }

    pub fn lattice(&self) -> &[[i64; 3]] {
        &self.lattice
    }

    pub fn wavevector(&self, i: usize) -> [f64; 3] {
        let dk = self.dk();
        let m = self.lattice[i];
        [dk * m[0] as f64, dk * m[1] as f64, dk * m[2] as f64]
    }

    /// Wavevector used by first-order operators (Nyquist components zeroed).
    pub fn deriv_wavevector(&self, i: usize) -> [f64; 3] {
        self.deriv_k[i]
    }

    pub(crate) fn deriv_wavevectors(&self) -> &[[f64; 3]] {
        &self.deriv_k
    }

    /// `|k|²` of every mode.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn mask_quadratic(&self) -> &[bool] {
        &self.mask_quadratic
    }

    pub fn mask_cubic(&self) -> &[bool] {
        &self.mask_cubic
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        let half = (self.n / 2) as i64;
        self.lattice[i][..self.dim].contains(&half)
    }

    /// Mode index of a lattice vector, if it lies in `{−n/2+1, …, n/2}^dim`.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        if m.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in m {
            if c <= -half || c > half {
                return None;
            }
            idx += c.rem_euclid(self.n as i64) as usize * stride;
            stride *= self.n;
        }
        Some(idx)
    }

    /// Index of the mode at `−m` (modulo the grid).
    pub fn conjugate_index(&self, i: usize) -> usize {
        let m = self.lattice[i];
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in &m[..self.dim] {
            idx += (-c).rem_euclid(self.n as i64) as usize * stride;
            stride *= self.n;
        }
        idx
    }

    /// Physical coordinates of sample `p`.
    pub fn point(&self, p: usize) -> [f64; 3] {
        let h = self.length / self.n as f64;
        let mut x = [0.0; 3];
        let mut rest = p;
        for slot in x.iter_mut().take(self.dim) {
            *slot = h * (rest % self.n) as f64;
            rest /= self.n;
        }
        x
    }
}
