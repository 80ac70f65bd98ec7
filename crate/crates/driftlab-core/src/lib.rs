//! Pseudo-spectral laboratory for divergence-free drift-diffusion with
//! nonlocal pressure: periodic spectral fields, a multiscale oscillation
//! analyzer, drift generators, a time integrator, and a certificate engine
//! that tracks a time-dependent amplitude envelope scale by scale.

pub mod campanato;
pub mod certificate;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod ops;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod weight;

pub use campanato::{Analyzer, Scan, ScanMode, SeminormCase, SeminormSpec};
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::Grid;
pub use weight::{ScaleLadder, Stencil, WeightProfile};
