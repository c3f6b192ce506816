//! Multi-dimensional complex FFTs over square/cubic row-major grids.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::Dim;

pub(crate) struct GridFft {
    side: usize,
    dim: Dim,
    forward: std::sync::Arc<dyn Fft<f64>>,
    inverse: std::sync::Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub fn new(side: usize, dim: Dim) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            dim,
            forward: planner.plan_fft(side, FftDirection::Forward),
            inverse: planner.plan_fft(side, FftDirection::Inverse),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalised inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &std::sync::Arc<dyn Fft<f64>>) {
        let n = self.side;
        debug_assert_eq!(data.len(), n.pow(self.dim.as_usize() as u32));
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // Contiguous last axis: rustfft handles consecutive chunks.
        fft.process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::default(); n];
        let strides: &[usize] = match self.dim {
            Dim::Two => &[n],
            Dim::Three => &[n, n * n],
        };
        for &stride in strides {
            // Lines along an axis of the given stride: base offsets are all
            // indices whose coordinate along that axis is zero.
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[base + t * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Signed integer frequency of DFT index `i` on a grid of `side` points.
pub(crate) fn freq_index(i: usize, side: usize) -> i64 {
    if i <= side / 2 {
        i as i64
    } else {
        i as i64 - side as i64
    }
}

/// Per-axis angular wavenumbers `2 pi m / L` for every DFT index.
pub(crate) fn wavenumbers(side: usize, box_size: f64) -> Vec<f64> {
    let dk = 2.0 * PI / box_size;
    (0..side).map(|i| dk * freq_index(i, side) as f64).collect()
}

/// Calls `f(flat_index, [kx, ky, kz])` for every mode of the grid; unused
/// trailing components are zero. The last array axis is `kx`.
pub(crate) fn for_each_mode(side: usize, dim: Dim, ks: &[f64], mut f: impl FnMut(usize, [f64; 3])) {
    match dim {
        Dim::Two => {
            for y in 0..side {
                for x in 0..side {
                    f(y * side + x, [ks[x], ks[y], 0.0]);
                }
            }
        }
        Dim::Three => {
            for z in 0..side {
                for y in 0..side {
                    for x in 0..side {
                        f((z * side + y) * side + x, [ks[x], ks[y], ks[z]]);
                    }
                }
            }
        }
    }
}
