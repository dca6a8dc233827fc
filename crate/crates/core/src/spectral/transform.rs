//! Three-dimensional complex FFT on a flat row-major `n³` buffer, built
//! from one-dimensional `rustfft` plans applied axis by axis.
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn points(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, `Σ_x f(x) e^{-ik·x}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.apply(&*self.forward, data);
    }

    /// Unnormalized inverse transform, `Σ_k f̂_k e^{ik·x}`.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.apply(&*self.inverse, data);
    }

    fn apply(&self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut lines = vec![Complex64::default(); n * n * n];
        // middle axis
        for i0 in 0..n {
            for i2 in 0..n {
                let line = (i0 * n + i2) * n;
                for i1 in 0..n {
                    lines[line + i1] = data[(i0 * n + i1) * n + i2];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for i0 in 0..n {
            for i2 in 0..n {
                let line = (i0 * n + i2) * n;
                for i1 in 0..n {
                    data[(i0 * n + i1) * n + i2] = lines[line + i1];
                }
            }
        }
        // first axis
        for i1 in 0..n {
            for i2 in 0..n {
                let line = (i1 * n + i2) * n;
                for i0 in 0..n {
                    lines[line + i0] = data[(i0 * n + i1) * n + i2];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for i1 in 0..n {
            for i2 in 0..n {
                let line = (i1 * n + i2) * n;
                for i0 in 0..n {
                    data[(i0 * n + i1) * n + i2] = lines[line + i0];
                }
            }
        }
    }
}
