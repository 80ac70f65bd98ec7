//! Spectral differential operators on periodic fields.
//!
//! Conventions: the derivative multiplier is i*k with the Nyquist mode
//! zeroed; the double Riesz transform R_i R_j has multiplier
//! -k_i k_j / |k|^2 with the mean mode mapped to zero, so the composed
//! pressure operator grad (-lap)^{-1} div agrees with R_i R_j applied to
//! the advection product. Physical-space products are dealiased by the
//! 2/3-rule truncation.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};
use num_complex::Complex64;

/// Tolerance used when an operator requires a zero-mean input.
const MEAN_TOL: f64 = 1e-10;

#[inline]
fn wavenumbers_at(grid: &Grid, idx: usize) -> ([f64; MAX_DIM], f64) {
    let c = grid.coords_of(idx);
    let mut k = [0.0; MAX_DIM];
    let mut k2 = 0.0;
    for a in 0..grid.dim() {
        k[a] = grid.wavenumber(c[a]);
        k2 += k[a] * k[a];
    }
    (k, k2)
}

#[inline]
fn is_nyquist(grid: &Grid, idx: usize) -> bool {
    let c = grid.coords_of(idx);
    let ny = grid.points_per_axis() / 2;
    (0..grid.dim()).any(|a| c[a] == ny)
}

/// Zero every mode with |m| above the 2/3-rule cutoff on any axis.
pub fn dealias_spectrum(grid: &Grid, spectrum: &mut [Complex64]) {
    let cutoff = grid.dealias_cutoff();
    for (idx, v) in spectrum.iter_mut().enumerate() {
        let m = grid.modes_of(idx);
        if (0..grid.dim()).any(|a| m[a].abs() > cutoff) {
            *v = Complex64::default();
        }
    }
}

/// Band-limit a field to the dealiased range.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut spec = f.spectrum().to_vec();
    dealias_spectrum(f.grid(), &mut spec);
    ScalarField::from_spectrum(f.grid(), spec)
}

/// Spectral partial derivative along one axis.
pub fn partial(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    f.ensure_finite("partial derivative input")?;
    let grid = f.grid();
    let ny = grid.points_per_axis() / 2;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); spec.len()];
    for (idx, v) in spec.iter().enumerate() {
        let c = grid.coords_of(idx);
        if c[axis] == ny {
            continue; // odd derivative of the unresolved Nyquist mode
        }
        let k = grid.wavenumber(c[axis]);
        out[idx] = Complex64::new(0.0, k) * v;
    }
    Ok(ScalarField::from_spectrum(grid, out))
}

/// Spectral gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    f.ensure_finite("gradient input")?;
    let parts: Result<Vec<_>> = (0..f.grid().dim()).map(|a| partial(f, a)).collect();
    VectorField::new(parts?)
}

/// Spectral Laplacian.
pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    f.ensure_finite("laplacian input")?;
    let grid = f.grid();
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); spec.len()];
    for (idx, v) in spec.iter().enumerate() {
        let (_, k2) = wavenumbers_at(grid, idx);
        out[idx] = -k2 * v;
    }
    Ok(ScalarField::from_spectrum(grid, out))
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    v.ensure_finite("divergence input")?;
    let grid = v.grid();
    let ny = grid.points_per_axis() / 2;
    let mut out = vec![Complex64::default(); grid.point_count()];
    for (a, comp) in v.components().iter().enumerate() {
        let spec = comp.spectrum();
        for (idx, s) in spec.iter().enumerate() {
            let c = grid.coords_of(idx);
            if c[a] == ny {
                continue;
            }
            let k = grid.wavenumber(c[a]);
            out[idx] += Complex64::new(0.0, k) * s;
        }
    }
    Ok(ScalarField::from_spectrum(grid, out))
}

/// Max modulus of the spectral divergence over the max field modulus.
pub fn divergence_residual(v: &VectorField) -> f64 {
    let grid = v.grid();
    let mut max_div: f64 = 0.0;
    let mut max_field: f64 = 0.0;
    let specs: Vec<&[Complex64]> = v.components().iter().map(|c| c.spectrum()).collect();
    for idx in 0..grid.point_count() {
        let (k, _) = wavenumbers_at(grid, idx);
        let mut d = Complex64::default();
        for a in 0..grid.dim() {
            d += Complex64::new(0.0, k[a]) * specs[a][idx];
            max_field = max_field.max(specs[a][idx].norm());
        }
        max_div = max_div.max(d.norm());
    }
    if max_field == 0.0 {
        0.0
    } else {
        max_div / max_field
    }
}

/// Leray projection onto divergence-free fields:
/// mode-wise v̂ -> v̂ - k (k · v̂) / |k|^2, mean mode passed through.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    v.ensure_finite("projection input")?;
    let grid = v.grid();
    let dim = grid.dim();
    let specs: Vec<Vec<Complex64>> = v.components().iter().map(|c| c.spectrum().to_vec()).collect();
    let mut out = vec![vec![Complex64::default(); grid.point_count()]; dim];
    for idx in 0..grid.point_count() {
        let (k, k2) = wavenumbers_at(grid, idx);
        if k2 == 0.0 {
            for a in 0..dim {
                out[a][idx] = specs[a][idx];
            }
            continue;
        }
        let mut k_dot = Complex64::default();
        for a in 0..dim {
            k_dot += k[a] * specs[a][idx];
        }
        let scale = k_dot / k2;
        for a in 0..dim {
            out[a][idx] = specs[a][idx] - k[a] * scale;
        }
    }
    let comps: Vec<ScalarField> = out
        .into_iter()
        .map(|spec| ScalarField::from_spectrum(grid, spec))
        .collect();
    Ok(VectorField::new(comps)?.with_divergence_flag(true))
}

/// Dealiased advection product (b · grad) u.
///
/// Both factors are band-limited before the physical-space multiply and the
/// result is truncated again, so the cubic pairing <b·grad u, u> stays
/// quadrature-exact on the lattice.
pub fn advect(b: &VectorField, u: &VectorField) -> Result<VectorField> {
    b.grid().same_as(u.grid())?;
    b.ensure_finite("drift field")?;
    u.ensure_finite("advected field")?;
    let grid = u.grid();
    let dim = grid.dim();
    let n = grid.point_count();

    let b_phys: Vec<ScalarField> = b.components().iter().map(dealias).collect();
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let u_i = dealias(u.component(i));
        let mut acc = vec![0.0; n];
        for (j, b_j) in b_phys.iter().enumerate() {
            let du = partial(&u_i, j)?;
            let du_s = du.samples();
            let b_s = b_j.samples();
            for (a, (x, y)) in acc.iter_mut().zip(b_s.iter().zip(du_s.iter())) {
                *a += x * y;
            }
        }
        let raw = ScalarField::from_samples(grid.clone(), acc)?;
        let mut spec = raw.spectrum().to_vec();
        dealias_spectrum(grid, &mut spec);
        out.push(ScalarField::from_spectrum(grid, spec));
    }
    VectorField::new(out)
}

/// Nonlocal pressure gradient of the advection product:
/// componentwise R_i R_j applied to (b · grad u)_j, i.e. the Fourier
/// symbol -k (k · ŵ)/|k|^2 acting on w = b · grad u, zero mean mode.
pub fn pressure_gradient(b: &VectorField, u: &VectorField) -> Result<VectorField> {
    let w = advect(b, u)?;
    pressure_gradient_of(&w)
}

/// Pressure gradient from an already-formed advection product.
pub fn pressure_gradient_of(w: &VectorField) -> Result<VectorField> {
    let grid = w.grid();
    let dim = grid.dim();
    let specs: Vec<&[Complex64]> = w.components().iter().map(|c| c.spectrum()).collect();
    let mut out = vec![vec![Complex64::default(); grid.point_count()]; dim];
    for idx in 0..grid.point_count() {
        let (k, k2) = wavenumbers_at(grid, idx);
        if k2 == 0.0 {
            continue;
        }
        let mut k_dot = Complex64::default();
        for a in 0..dim {
            k_dot += k[a] * specs[a][idx];
        }
        let scale = k_dot / k2;
        for a in 0..dim {
            out[a][idx] = -k[a] * scale;
        }
    }
    let comps: Vec<ScalarField> = out
        .into_iter()
        .map(|spec| ScalarField::from_spectrum(grid, spec))
        .collect();
    VectorField::new(comps)
}

fn ensure_zero_mean(f: &ScalarField, what: &'static str) -> Result<()> {
    let mean = f.mean();
    let scale = f.max_abs().max(1.0);
    if mean.abs() > MEAN_TOL * scale {
        return Err(Error::NonzeroMean { what, mean });
    }
    Ok(())
}

/// Double Riesz transform R_i R_j with multiplier -k_i k_j / |k|^2.
pub fn riesz_double(i: usize, j: usize, f: &ScalarField) -> Result<ScalarField> {
    f.ensure_finite("riesz input")?;
    let grid = f.grid();
    if i >= grid.dim() || j >= grid.dim() {
        return Err(Error::InvalidParam {
            name: "axis",
            why: format!("axes ({i}, {j}) out of range for dim {}", grid.dim()),
        });
    }
    ensure_zero_mean(f, "riesz input")?;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); spec.len()];
    for (idx, v) in spec.iter().enumerate() {
        let (k, k2) = wavenumbers_at(grid, idx);
        if k2 == 0.0 {
            continue;
        }
        out[idx] = -(k[i] * k[j] / k2) * v;
    }
    Ok(ScalarField::from_spectrum(grid, out))
}

/// Fractional Laplacian (-lap)^s with multiplier |k|^{2s}.
/// Negative powers require a zero-mean input; their mean mode maps to zero.
pub fn fractional_laplacian(f: &ScalarField, s: f64) -> Result<ScalarField> {
    f.ensure_finite("fractional laplacian input")?;
    if !s.is_finite() {
        return Err(Error::InvalidParam { name: "s", why: "must be finite".into() });
    }
    if s < 0.0 {
        ensure_zero_mean(f, "fractional laplacian input")?;
    }
    let grid = f.grid();
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); spec.len()];
    for (idx, v) in spec.iter().enumerate() {
        let (_, k2) = wavenumbers_at(grid, idx);
        if k2 == 0.0 {
            out[idx] = if s < 0.0 { Complex64::default() } else if s == 0.0 { *v } else { Complex64::default() };
            continue;
        }
        out[idx] = k2.powf(s) * v;
    }
    Ok(ScalarField::from_spectrum(grid, out))
}

/// Jacobian of a vector field: dim^2 spectral partial derivatives,
/// entry (i, a) = d u_i / d x_a stored at i * dim + a.
#[derive(Clone)]
pub struct Jacobian {
    grid: Grid,
    parts: Vec<ScalarField>,
}

impl Jacobian {
    pub fn of(u: &VectorField) -> Result<Self> {
        let grid = u.grid().clone();
        let dim = grid.dim();
        let mut parts = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for a in 0..dim {
                parts.push(partial(u.component(i), a)?);
            }
        }
        Ok(Self { grid, parts })
    }

    /// Constant Jacobian, for fields that are affine inside the region of
    /// interest (their periodized samples are not spectrally smooth).
    pub fn constant(grid: &Grid, matrix: &[[f64; MAX_DIM]; MAX_DIM]) -> Self {
        let dim = grid.dim();
        let mut parts = Vec::with_capacity(dim * dim);
        for row in matrix.iter().take(dim) {
            for entry in row.iter().take(dim) {
                parts.push(ScalarField::constant(grid, *entry));
            }
        }
        Self { grid: grid.clone(), parts }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Entry d u_i / d x_a at a lattice index.
    #[inline]
    pub fn entry(&self, i: usize, a: usize, idx: usize) -> f64 {
        self.parts[i * self.grid.dim() + a].value(idx)
    }
}

#[inline]
pub fn nyquist_guard(grid: &Grid, idx: usize) -> bool {
    is_nyquist(grid, idx)
}
