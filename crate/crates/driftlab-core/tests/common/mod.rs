//! Shared independent oracles for the integration suites. Everything here
//! avoids the library's quadrature and transform paths: plain loops,
//! midpoint rules, finite differences.

#![allow(dead_code)]

use driftlab_core::grid::MAX_DIM;
use driftlab_core::weight::WeightProfile;
use driftlab_core::{Grid, VectorField};

/// Polar midpoint quadrature of `f` over the unit ball, 10^6 nodes in 2D.
pub fn ball_quadrature_2d(f: impl Fn(f64, f64) -> f64) -> f64 {
    ball_quadrature_2d_n(1000, f)
}

/// Polar midpoint quadrature with m^2 nodes.
pub fn ball_quadrature_2d_n(m: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let dr = 1.0 / m as f64;
    let dth = 2.0 * std::f64::consts::PI / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..m {
            let th = (j as f64 + 0.5) * dth;
            acc += f(r * th.cos(), r * th.sin()) * r;
        }
    }
    acc * dr * dth
}

/// Second moment of the bump: int y_1^2 phi(y) dy over the unit ball.
pub fn bump_second_moment_2d() -> f64 {
    let profile = WeightProfile::standard_bump(2).unwrap();
    ball_quadrature_2d(|y0, y1| y0 * y0 * profile.phi(&[y0, y1]))
}

/// Unweighted first absolute moment: int |y_1| dy over the unit ball.
pub fn ball_abs_moment_2d() -> f64 {
    ball_quadrature_2d(|y0, _| y0.abs())
}

/// Brute-force Holder quotient sup |u(x) - u(y)| / |x - y|^alpha over a
/// subsampled lattice, restricted to torus separations up to L/4.
pub fn holder_quotient(u: &VectorField, alpha: f64, subsample: usize) -> f64 {
    let grid = u.grid();
    let n = grid.points_per_axis();
    let stride = (n / subsample).max(1);
    let max_sep = grid.length() / 4.0;
    let mut points = Vec::new();
    let dim = grid.dim();
    assert_eq!(dim, 2, "quotient oracle is two-dimensional");
    for i in (0..n).step_by(stride) {
        for j in (0..n).step_by(stride) {
            points.push([i, j]);
        }
    }
    let mut sup: f64 = 0.0;
    for (a, pa) in points.iter().enumerate() {
        let ia = grid.flat_index(pa);
        let va = u.value(ia);
        for pb in points.iter().skip(a + 1) {
            let d = grid.torus_distance(pa, pb);
            if d == 0.0 || d > max_sep {
                continue;
            }
            let ib = grid.flat_index(pb);
            let vb = u.value(ib);
            let mut diff2 = 0.0;
            for c in 0..dim {
                let dv = va[c] - vb[c];
                diff2 += dv * dv;
            }
            sup = sup.max(diff2.sqrt() / d.powf(alpha));
        }
    }
    sup
}

/// Fourth-order centered finite difference of one component along one axis.
pub fn fd4_partial(grid: &Grid, samples: &[f64], axis: usize, idx: usize) -> f64 {
    let h = grid.spacing();
    let c = grid.coords_of(idx);
    let n = grid.points_per_axis();
    let at = |shift: i64| -> f64 {
        let mut cc = c;
        cc[axis] = ((c[axis] as i64 + shift).rem_euclid(n as i64)) as usize;
        samples[grid.flat_index(&cc[..grid.dim()])]
    };
    (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
}

/// Max-abs difference between two fields' components.
pub fn max_component_diff(a: &VectorField, b: &VectorField) -> f64 {
    let mut m: f64 = 0.0;
    for c in 0..a.dim() {
        for (x, y) in a.component(c).samples().iter().zip(b.component(c).samples()) {
            m = m.max((x - y).abs());
        }
    }
    m
}

pub fn coords_from(idx: usize, grid: &Grid) -> [usize; MAX_DIM] {
    grid.coords_of(idx)
}

/// Relative difference with a floor for near-zero references.
pub fn rel_diff(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1e-300)
}
