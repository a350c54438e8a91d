//! Multi-axis FFTs over row-major 4D buffers.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

/// Unnormalized in-place DFT along one axis of a row-major array of `shape`.
/// `Forward` uses the kernel e^{-2 pi i jk/n}.
pub fn fft_axis(data: &mut [Complex64], shape: &[usize; 4], axis: usize, dir: FftDirection) {
    let n = shape[axis];
    if n < 2 {
        return;
    }
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = FftPlanner::new().plan_fft(n, dir);
    if inner == 1 {
        // 64 contiguous transforms per task
        data.par_chunks_mut(n * 64).for_each(|c| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(c, &mut scratch);
        });
        return;
    }
    let block = n * inner;
    data.par_chunks_mut(block).for_each(|b| {
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for j in 0..inner {
            for k in 0..n {
                line[k] = b[k * inner + j];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for k in 0..n {
                b[k * inner + j] = line[k];
            }
        }
    });
    debug_assert_eq!(outer * block, data.len());
}

/// Unitary spatial transform of one slice of `grid`:
/// `f(x) = (2pi)^{-d/2} sum_p e^{i p.x} f(p) prod dp`.
pub fn spatial_to_position(grid: &crate::grid::Grid4, f: &[Complex64]) -> Vec<Complex64> {
    let shape = [1, grid.n[1], grid.n[2], grid.n[3]];
    let mut data = f.to_vec();
    for a in 1..4 {
        fft_axis(&mut data, &shape, a, FftDirection::Inverse);
    }
    let d = grid.spatial_dim() as f64;
    let s = (2.0 * std::f64::consts::PI).powf(-0.5 * d) * grid.spatial_p_measure();
    data.iter_mut().for_each(|v| *v *= s);
    data
}

/// Inverse of [`spatial_to_position`].
pub fn spatial_to_momentum(grid: &crate::grid::Grid4, f: &[Complex64]) -> Vec<Complex64> {
    let shape = [1, grid.n[1], grid.n[2], grid.n[3]];
    let mut data = f.to_vec();
    for a in 1..4 {
        fft_axis(&mut data, &shape, a, FftDirection::Forward);
    }
    let d = grid.spatial_dim() as f64;
    let s = (2.0 * std::f64::consts::PI).powf(-0.5 * d) * grid.spatial_x_measure();
    data.iter_mut().for_each(|v| *v *= s);
    data
}
