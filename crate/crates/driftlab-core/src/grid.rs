//! Periodic sample lattice for the n-torus, n in {2, 3}.
//!
//! All axes share the same point count `n` (a power of two, at least 16)
//! and period `length`. Row-major storage, axis 0 slowest. Integer Fourier
//! modes follow the usual FFT layout 0, 1, ..., n/2, -n/2+1, ..., -1.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("side length must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Lattice spacing h = L / N.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn point_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Cell volume h^dim.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Index mask for periodic wrap; valid because n is a power of two.
    #[inline]
    pub fn mask(&self) -> usize {
        self.n - 1
    }

    /// Strides for row-major storage (axis 0 slowest).
    #[inline]
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        let mut acc = 1usize;
        for a in (0..self.dim).rev() {
            s[a] = acc;
            acc *= self.n;
        }
        s
    }

    #[inline]
    pub fn flat_index(&self, coords: &[usize]) -> usize {
        let s = self.strides();
        let mut idx = 0;
        for a in 0..self.dim {
            idx += coords[a] * s[a];
        }
        idx
    }

    #[inline]
    pub fn coords_of(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        for a in (0..self.dim).rev() {
            c[a] = idx & self.mask();
            idx >>= self.n.trailing_zeros();
        }
        c
    }

    /// Physical position of a lattice point.
    #[inline]
    pub fn position(&self, coords: &[usize]) -> [f64; MAX_DIM] {
        let h = self.spacing();
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = coords[a] as f64 * h;
        }
        p
    }

    /// Signed integer mode for a storage index along one axis.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber 2*pi*mode/L for a storage index along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(i) as f64 / self.length
    }

    /// Integer modes of a flat spectral index, one per axis.
    #[inline]
    pub fn modes_of(&self, idx: usize) -> [i64; MAX_DIM] {
        let c = self.coords_of(idx);
        let mut m = [0i64; MAX_DIM];
        for a in 0..self.dim {
            m[a] = self.mode(c[a]);
        }
        m
    }

    /// Dealiasing cutoff for quadratic products: modes with |m| above this
    /// are discarded, so triple products are quadrature-exact on the lattice.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    /// Torus distance between two lattice points.
    pub fn torus_distance(&self, a: &[usize], b: &[usize]) -> f64 {
        let h = self.spacing();
        let n = self.n as isize;
        let mut d2 = 0.0;
        for ax in 0..self.dim {
            let mut d = a[ax] as isize - b[ax] as isize;
            if d > n / 2 {
                d -= n;
            }
            if d < -n / 2 {
                d += n;
            }
            let dr = d as f64 * h;
            d2 += dr * dr;
        }
        d2.sqrt()
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(1, 32, 1.0).is_err());
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(2, 33, 1.0).is_err());
        assert!(Grid::new(2, 32, 0.0).is_err());
        assert!(Grid::new(2, 32, 1.0).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(3, 16, 2.0).unwrap();
        for idx in [0usize, 1, 17, 4095, 16 * 16 * 16 - 1] {
            let c = g.coords_of(idx);
            assert_eq!(g.flat_index(&c[..3]), idx);
        }
    }

    #[test]
    fn mode_layout() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        assert_eq!(g.mode(0), 0);
        assert_eq!(g.mode(1), 1);
        assert_eq!(g.mode(8), 8);
        assert_eq!(g.mode(9), -7);
        assert_eq!(g.mode(15), -1);
    }

    #[test]
    fn torus_distance_wraps() {
        let g = Grid::new(2, 16, 16.0).unwrap();
        let d = g.torus_distance(&[0, 1], &[0, 15]);
        assert!((d - 2.0).abs() < 1e-12);
    }
}
