use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Separable complex FFT on an `n^dim` array stored with axis 0 fastest.
#[derive(Clone)]
pub(crate) struct FftNd {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FftNd {
    pub(crate) fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            dim,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// `c_m = N^{-dim} Σ_j x_j e^{-i 2π m·j / N}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.process(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    /// `x_j = Σ_m c_m e^{i 2π m·j / N}` (no normalization).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, &self.inverse);
    }

    fn process(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // axis 0 lines are contiguous
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut lines = vec![Complex64::default(); data.len()];
        for axis in 1..self.dim {
            let stride = n.pow(axis as u32);
            let block = stride * n;
            let mut l = 0;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let line = &mut lines[l * n..(l + 1) * n];
                    for (j, x) in line.iter_mut().enumerate() {
                        *x = data[base + j * stride];
                    }
                    l += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut l = 0;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let line = &lines[l * n..(l + 1) * n];
                    for (j, x) in line.iter().enumerate() {
                        data[base + j * stride] = *x;
                    }
                    l += 1;
                }
            }
        }
    }
}
