//! Radial weight profile on the unit ball, the dyadic scale ladder, and the
//! per-scale quadrature stencils used by the multiscale analyzer.

use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_DIM};
use serde::{Deserialize, Serialize};

/// Kinds of averaging weight. Only the standard bump is implemented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    StandardBump,
}

/// The standard bump c * exp(-1/(1 - |y|^2)) on |y| < 1, normalized to unit
/// mass in the grid dimension. Smooth, radial, nonnegative, supported in the
/// closed unit ball, with every derivative vanishing at the boundary.
#[derive(Clone, Debug)]
pub struct WeightProfile {
    pub kind: WeightKind,
    dim: usize,
    normalization: f64,
}

impl WeightProfile {
    pub fn standard_bump(dim: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParam { name: "dim", why: format!("got {dim}") });
        }
        // Unit mass: c * |S^{n-1}| * int_0^1 exp(-1/(1-r^2)) r^{n-1} dr = 1.
        let sphere_area = match dim {
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        };
        let radial = simpson(1 << 20, |r| {
            let s = 1.0 - r * r;
            if s <= 0.0 {
                0.0
            } else {
                (-1.0 / s).exp() * r.powi(dim as i32 - 1)
            }
        });
        Ok(Self {
            kind: WeightKind::StandardBump,
            dim,
            normalization: 1.0 / (sphere_area * radial),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// phi evaluated from the squared radius.
    #[inline]
    pub fn phi_r2(&self, r2: f64) -> f64 {
        if r2 >= 1.0 {
            0.0
        } else {
            self.normalization * (-1.0 / (1.0 - r2)).exp()
        }
    }

    #[inline]
    pub fn phi(&self, y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        self.phi_r2(r2)
    }

    /// grad phi(y) = phi(y) * (-2 y / (1 - |y|^2)^2).
    #[inline]
    pub fn grad_phi(&self, y: &[f64]) -> [f64; MAX_DIM] {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let mut g = [0.0; MAX_DIM];
        if r2 >= 1.0 {
            return g;
        }
        let s = 1.0 - r2;
        let factor = self.phi_r2(r2) * (-2.0 / (s * s));
        for (a, v) in y.iter().enumerate() {
            g[a] = factor * v;
        }
        g
    }
}

fn simpson(panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = panels;
    let h = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        let x = i as f64 * h;
        acc += if i % 2 == 0 { 2.0 * f(x) } else { 4.0 * f(x) };
    }
    acc * h / 3.0
}

/// Decreasing dyadic radii r_k = L/4 * 2^{-k}, all at least `min_cells`
/// lattice spacings so the ball quadrature stays trustworthy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleLadder {
    radii: Vec<f64>,
}

pub const LADDER_MIN_CELLS: f64 = 4.0;

impl ScaleLadder {
    pub fn new(grid: &Grid) -> Result<Self> {
        Self::with_min_cells(grid, LADDER_MIN_CELLS)
    }

    pub fn with_min_cells(grid: &Grid, min_cells: f64) -> Result<Self> {
        let h = grid.spacing();
        let top = grid.length() / 4.0;
        let mut radii = Vec::new();
        let mut r = top;
        while r >= min_cells * h - 1e-12 * h {
            radii.push(r);
            r *= 0.5;
        }
        if radii.is_empty() {
            return Err(Error::EmptyLadder);
        }
        Ok(Self { radii })
    }

    #[inline]
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    #[inline]
    pub fn radius(&self, level: usize) -> f64 {
        self.radii[level]
    }

    pub fn min_radius(&self) -> f64 {
        *self.radii.last().expect("ladder is never empty")
    }

    /// Ladder level whose radius matches `r` (relative tolerance 1e-9).
    pub fn level_of(&self, r: f64) -> Result<usize> {
        for (k, &rk) in self.radii.iter().enumerate() {
            if (rk - r).abs() <= 1e-9 * rk {
                return Ok(k);
            }
        }
        Err(Error::RadiusNotInLadder { r, min: self.min_radius() })
    }
}

/// Quadrature stencil at one scale: lattice offsets inside the ball of
/// radius r, bump weights renormalized to unit sum, matching grad-phi
/// weights, and the unweighted ball measure used by the Morrey functionals.
///
/// The lattice is translation invariant, so one offset table serves every
/// center point; periodic wrap happens in the sampling loops.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub radius: f64,
    dim: usize,
    /// Packed per-axis offsets, length dim * point_count, lexicographic order.
    offsets: Vec<i32>,
    /// Renormalized bump weights; sums to exactly 1.0 after construction.
    weights: Vec<f64>,
    /// Renormalized grad-phi weights (same normalization factor), packed by axis.
    grad_weights: Vec<f64>,
    /// h^dim / r^dim: the measure weight of one cell in ball units.
    pub cell_weight: f64,
    point_count: usize,
}

impl Stencil {
    pub fn build(grid: &Grid, profile: &WeightProfile, radius: f64) -> Result<Self> {
        let dim = grid.dim();
        let h = grid.spacing();
        if radius > grid.length() / 2.0 {
            return Err(Error::InvalidParam {
                name: "radius",
                why: format!("{radius} exceeds half the period"),
            });
        }
        let reach = (radius / h).floor() as i32;
        let mut offsets = Vec::new();
        let mut raw_weights = Vec::new();
        let mut raw_grads = Vec::new();
        let r2_lattice = (radius / h) * (radius / h) * (1.0 + 1e-12);

        let mut o = [0i32; MAX_DIM];
        let visit = |o: &[i32; MAX_DIM],
                         offsets: &mut Vec<i32>,
                         raw_weights: &mut Vec<f64>,
                         raw_grads: &mut Vec<f64>| {
            let mut d2 = 0f64;
            for v in o.iter().take(dim) {
                d2 += (*v as f64) * (*v as f64);
            }
            if d2 > r2_lattice {
                return;
            }
            let mut y = [0.0; MAX_DIM];
            for a in 0..dim {
                y[a] = o[a] as f64 * h / radius;
            }
            let w = profile.phi(&y[..dim]);
            let g = profile.grad_phi(&y[..dim]);
            offsets.extend_from_slice(&o[..dim]);
            raw_weights.push(w);
            raw_grads.extend_from_slice(&g[..dim]);
        };

        // lexicographic sweep keeps summation order deterministic
        if dim == 2 {
            for i0 in -reach..=reach {
                for i1 in -reach..=reach {
                    o[0] = i0;
                    o[1] = i1;
                    visit(&o, &mut offsets, &mut raw_weights, &mut raw_grads);
                }
            }
        } else {
            for i0 in -reach..=reach {
                for i1 in -reach..=reach {
                    for i2 in -reach..=reach {
                        o[0] = i0;
                        o[1] = i1;
                        o[2] = i2;
                        visit(&o, &mut offsets, &mut raw_weights, &mut raw_grads);
                    }
                }
            }
        }

        let point_count = raw_weights.len();
        let cell = (h / radius).powi(dim as i32);
        let raw_sum: f64 = raw_weights.iter().map(|w| w * cell).sum();
        if raw_sum <= 0.0 {
            return Err(Error::InvalidParam {
                name: "radius",
                why: format!("stencil at r = {radius} carries no weight"),
            });
        }
        // Renormalize so discrete weights sum to exactly one; grad weights
        // carry the same factor so both quadratures stay consistent.
        let norm = 1.0 / raw_sum;
        let weights: Vec<f64> = raw_weights.iter().map(|w| w * cell * norm).collect();
        let grad_weights: Vec<f64> = raw_grads.iter().map(|g| g * cell * norm).collect();

        Ok(Self {
            radius,
            dim,
            offsets,
            weights,
            grad_weights,
            cell_weight: cell,
            point_count,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.point_count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.point_count == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn offset(&self, p: usize) -> &[i32] {
        &self.offsets[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, p: usize) -> f64 {
        self.weights[p]
    }

    #[inline]
    pub fn grad_weight(&self, p: usize) -> &[f64] {
        &self.grad_weights[p * self.dim..(p + 1) * self.dim]
    }

    pub fn weights_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Flat sample index of center + offset with periodic wrap.
    #[inline]
    pub fn sample_index(&self, grid: &Grid, center: &[usize; MAX_DIM], p: usize) -> usize {
        let mask = grid.mask();
        let n = grid.points_per_axis() as i32;
        let strides = grid.strides();
        let off = self.offset(p);
        let mut idx = 0usize;
        for a in 0..self.dim {
            let c = (center[a] as i32 + off[a] + n) as usize & mask;
            idx += c * strides[a];
        }
        idx
    }

    /// Normalized offset y = z / r of a stencil point.
    #[inline]
    pub fn unit_offset(&self, grid: &Grid, p: usize) -> [f64; MAX_DIM] {
        let h = grid.spacing();
        let off = self.offset(p);
        let mut y = [0.0; MAX_DIM];
        for a in 0..self.dim {
            y[a] = off[a] as f64 * h / self.radius;
        }
        y
    }

    /// Paint the weights onto a full grid, offset pattern centered at 0.
    pub fn weight_field(&self, grid: &Grid) -> Vec<f64> {
        let mut w = vec![0.0; grid.point_count()];
        let center = [0usize; MAX_DIM];
        for p in 0..self.point_count {
            w[self.sample_index(grid, &center, p)] += self.weight(p);
        }
        w
    }

    /// Paint the uniform ball-average weights (1/count each) onto a grid.
    pub fn ball_average_field(&self, grid: &Grid) -> Vec<f64> {
        let mut w = vec![0.0; grid.point_count()];
        let center = [0usize; MAX_DIM];
        let inv = 1.0 / self.point_count as f64;
        for p in 0..self.point_count {
            w[self.sample_index(grid, &center, p)] += inv;
        }
        w
    }

    /// Persist the painted weight pattern in the binary field dump format;
    /// the radius travels in the sidecar time slot.
    pub fn write_cache(&self, grid: &Grid, path: &std::path::Path) -> Result<()> {
        let field = crate::field::ScalarField::from_samples(grid.clone(), self.weight_field(grid))?;
        crate::field::write_scalar(path, &field, self.radius)
    }

    /// Load a persisted weight pattern; returns (weights, radius).
    pub fn read_cache(path: &std::path::Path) -> Result<(crate::field::ScalarField, f64)> {
        let dump = crate::field::read_field(path)?;
        let mut comps = dump.components;
        let field = comps.swap_remove(0);
        Ok((field, dump.time))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass_2d() {
        let profile = WeightProfile::standard_bump(2).unwrap();
        // midpoint product quadrature over the square [-1,1]^2
        let m = 2000usize;
        let h = 2.0 / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let y = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
                acc += profile.phi(&y) * h * h;
            }
        }
        assert!((acc - 1.0).abs() < 1e-6, "mass = {acc}");
    }

    #[test]
    fn ladder_respects_min_radius() {
        let g = Grid::new(2, 128, 2.0 * std::f64::consts::PI).unwrap();
        let ladder = ScaleLadder::new(&g).unwrap();
        let h = g.spacing();
        assert_eq!(ladder.len(), 4); // 32h, 16h, 8h, 4h
        for w in ladder.radii().windows(2) {
            assert!(w[0] > w[1]);
        }
        assert!(ladder.min_radius() >= 4.0 * h - 1e-12);
    }

    #[test]
    fn stencil_weights_sum_to_one_and_cover_49_points() {
        let g = Grid::new(2, 128, 2.0 * std::f64::consts::PI).unwrap();
        let profile = WeightProfile::standard_bump(2).unwrap();
        let ladder = ScaleLadder::new(&g).unwrap();
        for &r in ladder.radii() {
            let st = Stencil::build(&g, &profile, r).unwrap();
            assert!((st.weights_sum() - 1.0).abs() < 1e-12);
            if (r / g.spacing() - 4.0).abs() < 1e-9 {
                assert!(st.len() >= 49, "smallest stencil holds {} points", st.len());
            }
        }
    }

    #[test]
    fn stencil_cache_round_trips() {
        let g = Grid::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let profile = WeightProfile::standard_bump(2).unwrap();
        let st = Stencil::build(&g, &profile, g.length() / 4.0).unwrap();
        let dir = std::env::temp_dir().join(format!("driftlab-stencil-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("stencil.bin");
        st.write_cache(&g, &path).unwrap();
        let (field, radius) = Stencil::read_cache(&path).unwrap();
        assert_eq!(radius, g.length() / 4.0);
        for (a, b) in field.samples().iter().zip(st.weight_field(&g)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn grad_phi_matches_finite_difference() {
        let profile = WeightProfile::standard_bump(2).unwrap();
        let y = [0.3, -0.45];
        let g = profile.grad_phi(&y);
        let eps = 1e-6;
        for a in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[a] += eps;
            ym[a] -= eps;
            let fd = (profile.phi(&yp) - profile.phi(&ym)) / (2.0 * eps);
            assert!((g[a] - fd).abs() < 1e-6, "axis {a}: {} vs {}", g[a], fd);
        }
    }
}
