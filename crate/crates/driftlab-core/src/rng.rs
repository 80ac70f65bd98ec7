//! Seeded random field generation. Everything stochastic in the crate flows
//! through an explicit seed, so runs are reproducible bit for bit.

use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops;
use crate::error::Result;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in [-1, 1).
pub fn uniform_symmetric(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Band-limited random scalar field: white noise low-passed to integer
/// modes of magnitude at most `max_mode` per axis, zero mean, then scaled
/// so the max modulus equals `amplitude`.
pub fn random_band_limited(
    grid: &Grid,
    max_mode: i64,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ScalarField> {
    let noise: Vec<f64> = (0..grid.point_count())
        .map(|_| uniform_symmetric(rng))
        .collect();
    let noise_field = ScalarField::from_samples(grid.clone(), noise)?;
    let mut spec = noise_field.spectrum().to_vec();
    for (idx, v) in spec.iter_mut().enumerate() {
        let m = grid.modes_of(idx);
        let keep = (0..grid.dim()).all(|a| m[a].abs() <= max_mode)
            && m[..grid.dim()].iter().any(|&x| x != 0);
        if !keep {
            *v = Complex64::default();
        }
    }
    let rough = ScalarField::from_spectrum(grid, spec);
    let peak = rough.max_abs();
    if peak == 0.0 {
        return Ok(rough);
    }
    Ok(rough.scale(amplitude / peak))
}

/// Divergence-free band-limited random vector field with unit-order
/// amplitude: component noise projected onto the divergence-free range.
pub fn random_divergence_free(
    grid: &Grid,
    max_mode: i64,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Result<VectorField> {
    let comps: Result<Vec<ScalarField>> = (0..grid.dim())
        .map(|_| random_band_limited(grid, max_mode, 1.0, rng))
        .collect();
    let raw = VectorField::new(comps?)?;
    let projected = ops::leray_project(&raw)?;
    let peak = projected.max_abs();
    if peak == 0.0 {
        return Ok(projected);
    }
    Ok(projected.scale(amplitude / peak).with_divergence_flag(true))
}
