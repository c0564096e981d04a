use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

/// Complex FFT over a cubic `n^dim` lattice stored row-major (last axis fastest).
pub(crate) struct FftNd<T: Scalar> {
    dim: usize,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> FftNd<T> {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Unnormalized forward transform, `sum_j f_j e^{-i xi . y_j}`.
    pub(crate) fn forward(&self, data: &mut [Complex<T>]) {
        self.process(data, &self.fwd);
    }

    /// Inverse transform including the `1/len` normalization.
    pub(crate) fn inverse(&self, data: &mut [Complex<T>]) {
        self.process(data, &self.inv);
        let scale = T::one() / T::usz(self.len());
        for c in data.iter_mut() {
            *c = *c * scale;
        }
    }

    fn process(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        // contiguous last axis
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len()];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            // gather each [n][stride] block into [stride][n] lines
            for (b, chunk) in data.chunks_exact(block).enumerate() {
                let out = &mut buf[b * block..(b + 1) * block];
                for j in 0..n {
                    for s in 0..stride {
                        out[s * n + j] = chunk[j * stride + s];
                    }
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (b, chunk) in data.chunks_exact_mut(block).enumerate() {
                let src = &buf[b * block..(b + 1) * block];
                for j in 0..n {
                    for s in 0..stride {
                        chunk[j * stride + s] = src[s * n + j];
                    }
                }
            }
        }
    }
}

/// One-dimensional transforms along the slow axis of a `[m][len]` array, used
/// for the time direction of space-time histories.
pub(crate) struct StridedFft<T: Scalar> {
    m: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> StridedFft<T> {
    pub(crate) fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    /// Forward transform of every column of a row-major `[m][width]` array.
    pub(crate) fn forward(&self, data: &mut [Complex<T>], width: usize) {
        self.columns(data, width, &self.fwd, T::one());
    }

    pub(crate) fn inverse(&self, data: &mut [Complex<T>], width: usize) {
        let scale = T::one() / T::usz(self.m);
        self.columns(data, width, &self.inv, scale);
    }

    fn columns(&self, data: &mut [Complex<T>], width: usize, plan: &Arc<dyn Fft<T>>, scale: T) {
        let m = self.m;
        debug_assert_eq!(data.len(), m * width);
        // batches of columns keep the gather cache friendly
        let batch = 64.min(width.max(1));
        let mut buf = vec![Complex::new(T::zero(), T::zero()); batch * m];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        let mut c0 = 0;
        while c0 < width {
            let nb = batch.min(width - c0);
            for k in 0..m {
                let row = &data[k * width + c0..k * width + c0 + nb];
                for (b, v) in row.iter().enumerate() {
                    buf[b * m + k] = *v;
                }
            }
            plan.process_with_scratch(&mut buf[..nb * m], &mut scratch);
            for k in 0..m {
                let row = &mut data[k * width + c0..k * width + c0 + nb];
                for (b, v) in row.iter_mut().enumerate() {
                    *v = buf[b * m + k] * scale;
                }
            }
            c0 += nb;
        }
    }
}
