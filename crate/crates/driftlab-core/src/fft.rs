//! Multidimensional complex transforms built on one-dimensional FFTs.
//!
//! Spectral coefficients are normalized so the zero mode equals the field
//! mean: forward divides by the point count, inverse is the plain sum.

use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlanCache {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans() -> &'static Mutex<PlanCache> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            forward: HashMap::new(),
            inverse: HashMap::new(),
        })
    })
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = plans().lock().expect("fft plan cache poisoned");
    let map = if inverse { &mut cache.inverse } else { &mut cache.forward };
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place transform along every axis of the row-major hypercube.
fn transform_axes(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let total = grid.point_count();
    debug_assert_eq!(data.len(), total);
    let fft = plan(n, inverse);
    let mut line = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let strides = grid.strides();

    for axis in 0..dim {
        let stride = strides[axis];
        let block = n * stride;
        let blocks = total / block;
        for b in 0..blocks {
            for offset in 0..stride {
                let base = b * block + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Forward transform of real samples; coefficients carry 1/N^dim.
pub fn forward(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(grid, &mut data, false);
    let scale = 1.0 / grid.point_count() as f64;
    for c in &mut data {
        *c *= scale;
    }
    data
}

/// Unnormalized forward transform (used for convolution multipliers).
pub fn forward_unnormalized(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(grid, &mut data, false);
    data
}

/// Inverse transform; returns the real part of the reconstruction.
pub fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<f64> {
    let mut data = spectrum.to_vec();
    transform_axes(grid, &mut data, true);
    data.iter().map(|c| c.re).collect()
}

/// Inverse transform keeping the complex output.
pub fn inverse_complex(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut data = spectrum.to_vec();
    transform_axes(grid, &mut data, true);
    data
}
