//! Multiscale analyzer: weighted local means, the local oscillation
//! functional, ball-mean deviation functionals for the drift, multiscale
//! sup scans, the dissipation functional, the scale derivative of the
//! oscillation, and the functional-inequality gap.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::VectorField;
use crate::grid::{Grid, MAX_DIM};
use crate::ops::Jacobian;
use crate::weight::{ScaleLadder, Stencil, WeightProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Drift regularity class, selected by the sign of beta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeminormCase {
    /// beta in [-1, 0): deviation from zero.
    Morrey,
    /// beta = 0: deviation from the plain ball average.
    Bmo,
    /// beta in (0, 1]: deviation from the center value.
    Holder,
}

/// Scaling exponent, case and time-integrability index p = 2/(1+beta).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SeminormSpec {
    pub beta: f64,
    pub case: SeminormCase,
    pub p: f64,
}

impl SeminormSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParam {
                name: "beta",
                why: format!("must lie in [-1, 1], got {beta}"),
            });
        }
        let case = if beta < 0.0 {
            SeminormCase::Morrey
        } else if beta == 0.0 {
            SeminormCase::Bmo
        } else {
            SeminormCase::Holder
        };
        let p = if beta == -1.0 { f64::INFINITY } else { 2.0 / (1.0 + beta) };
        Ok(Self { beta, case, p })
    }
}

/// What a multiscale scan measures per point and scale.
#[derive(Clone, Copy, Debug)]
pub enum ScanMode {
    /// sqrt of the weighted mean-square oscillation of the field.
    CampanatoSqrt,
    /// Mean absolute deviation over the ball, re-centered per the case.
    MorreyCase(SeminormSpec),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RungScan {
    pub level: usize,
    pub radius: f64,
    /// sup over lattice points of r^{-exponent} * functional.
    pub value: f64,
    pub argmax: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scan {
    pub value: f64,
    pub argmax: usize,
    pub level: usize,
    pub radius: f64,
    pub rungs: Vec<RungScan>,
    /// Morrey-case scans also report the sup restricted to radii below one.
    pub sup_small_scales: Option<f64>,
}

/// Output of the functional-inequality probe at one point and scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GapTerms {
    /// 2 I - r dI/dr, the combination controlled by the inequality.
    pub lhs: f64,
    /// Variant with coefficient two on the coupling term.
    pub lhs_double_coupling: f64,
    pub rhs_factor_i: f64,
    pub rhs_factor_e: f64,
    pub i_value: f64,
    pub di_dr: f64,
    pub dissipation: f64,
}

/// Analyzer bound to one grid, weight profile and scale ladder.
///
/// Per-rung spectral multipliers of the discrete weight pattern are kept so
/// whole-lattice scans run as convolutions instead of stencil sweeps.
pub struct Analyzer {
    grid: Grid,
    profile: WeightProfile,
    ladder: ScaleLadder,
    stencils: Vec<Stencil>,
    bump_hat: Vec<Vec<Complex64>>,
    ball_hat: Vec<Vec<Complex64>>,
}

impl Analyzer {
    pub fn new(grid: &Grid) -> Result<Self> {
        let ladder = ScaleLadder::new(grid)?;
        Self::with_ladder(grid, ladder)
    }

    pub fn with_ladder(grid: &Grid, ladder: ScaleLadder) -> Result<Self> {
        if ladder.is_empty() {
            return Err(Error::EmptyLadder);
        }
        let profile = WeightProfile::standard_bump(grid.dim())?;
        let mut stencils = Vec::with_capacity(ladder.len());
        let mut bump_hat = Vec::with_capacity(ladder.len());
        let mut ball_hat = Vec::with_capacity(ladder.len());
        for &r in ladder.radii() {
            let st = Stencil::build(grid, &profile, r)?;
            bump_hat.push(fft::forward_unnormalized(grid, &st.weight_field(grid)));
            ball_hat.push(fft::forward_unnormalized(grid, &st.ball_average_field(grid)));
            stencils.push(st);
        }
        Ok(Self { grid: grid.clone(), profile, ladder, stencils, bump_hat, ball_hat })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ladder(&self) -> &ScaleLadder {
        &self.ladder
    }

    pub fn profile(&self) -> &WeightProfile {
        &self.profile
    }

    pub fn stencil(&self, level: usize) -> &Stencil {
        &self.stencils[level]
    }

    fn check_field(&self, f: &VectorField) -> Result<()> {
        f.grid().same_as(&self.grid)?;
        f.ensure_finite("analyzer input")
    }

    // -- pointwise functionals ------------------------------------------------

    /// Weighted local mean of `u` over the ball of radius `r` at `x`.
    pub fn local_mean(&self, u: &VectorField, x: usize, r: f64) -> Result<[f64; MAX_DIM]> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        Ok(self.local_mean_level(u, x, level))
    }

    pub fn local_mean_level(&self, u: &VectorField, x: usize, level: usize) -> [f64; MAX_DIM] {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let mut mean = [0.0; MAX_DIM];
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            for a in 0..dim {
                mean[a] += w * comps[a][idx];
            }
        }
        mean
    }

    /// Weighted mean-square oscillation of `u` around its local mean.
    pub fn campanato_i(&self, u: &VectorField, x: usize, r: f64) -> Result<f64> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        Ok(self.campanato_i_level(u, x, level))
    }

    pub fn campanato_i_level(&self, u: &VectorField, x: usize, level: usize) -> f64 {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let mean = self.local_mean_level(u, x, level);
        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            let mut d2 = 0.0;
            for a in 0..dim {
                let d = comps[a][idx] - mean[a];
                d2 += d * d;
            }
            acc += w * d2;
        }
        acc
    }

    /// Double-difference form of the oscillation, evaluated through the
    /// one-pass expansion 2 (Sum w |u|^2 - |Sum w u|^2). Algebraically this
    /// equals exactly twice `campanato_i`.
    pub fn double_diff_form(&self, u: &VectorField, x: usize, r: f64) -> Result<f64> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let mut mean = [0.0; MAX_DIM];
        let mut sq = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            let mut norm2 = 0.0;
            for a in 0..dim {
                let v = comps[a][idx];
                mean[a] += w * v;
                norm2 += v * v;
            }
            sq += w * norm2;
        }
        let mean2: f64 = mean[..dim].iter().map(|m| m * m).sum();
        Ok(2.0 * (sq - mean2))
    }

    /// Mean absolute deviation functional of the drift over the ball,
    /// normalized by r^dim. The re-centering constant follows the case:
    /// zero, the plain ball average, or the center value.
    pub fn morrey_m(&self, b: &VectorField, x: usize, r: f64, spec: &SeminormSpec) -> Result<f64> {
        self.check_field(b)?;
        let level = self.ladder.level_of(r)?;
        Ok(self.morrey_m_level(b, x, level, spec))
    }

    pub fn morrey_m_level(
        &self,
        b: &VectorField,
        x: usize,
        level: usize,
        spec: &SeminormSpec,
    ) -> f64 {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = b.components().iter().map(|c| c.samples()).collect();
        let mut anchor = [0.0; MAX_DIM];
        match spec.case {
            SeminormCase::Morrey => {}
            SeminormCase::Holder => {
                for a in 0..dim {
                    anchor[a] = comps[a][x];
                }
            }
            SeminormCase::Bmo => {
                let inv = 1.0 / st.len() as f64;
                for p in 0..st.len() {
                    let idx = st.sample_index(&self.grid, &center, p);
                    for a in 0..dim {
                        anchor[a] += comps[a][idx];
                    }
                }
                for a in 0..dim {
                    anchor[a] *= inv;
                }
            }
        }
        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let mut d2 = 0.0;
            for a in 0..dim {
                let d = comps[a][idx] - anchor[a];
                d2 += d * d;
            }
            acc += d2.sqrt();
        }
        acc * st.cell_weight
    }

    // -- whole-lattice scans ---------------------------------------------------

    /// Per-rung sup of r^{-exponent} * functional with its argmax.
    pub fn scan_profile(
        &self,
        f: &VectorField,
        exponent: f64,
        mode: ScanMode,
    ) -> Result<Vec<RungScan>> {
        self.check_field(f)?;
        match mode {
            ScanMode::CampanatoSqrt => Ok(self.scan_campanato(f, exponent)),
            ScanMode::MorreyCase(spec) => Ok(self.scan_morrey(f, exponent, &spec)),
        }
    }

    /// Global sup over lattice points and ladder scales, with deterministic
    /// tie-breaking: larger value, then smaller lattice index, then larger
    /// radius. Parallel and serial scans agree bitwise.
    pub fn seminorm_scan(&self, f: &VectorField, exponent: f64, mode: ScanMode) -> Result<Scan> {
        let rungs = self.scan_profile(f, exponent, mode)?;
        let mut best = &rungs[0];
        for rung in &rungs[1..] {
            if rung.value > best.value
                || (rung.value == best.value && rung.argmax < best.argmax)
            {
                best = rung;
            }
        }
        let sup_small = match mode {
            ScanMode::MorreyCase(spec) if spec.case == SeminormCase::Morrey => {
                let v = rungs
                    .iter()
                    .filter(|r| r.radius < 1.0)
                    .map(|r| r.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                if v.is_finite() {
                    Some(v)
                } else {
                    None
                }
            }
            _ => None,
        };
        Ok(Scan {
            value: best.value,
            argmax: best.argmax,
            level: best.level,
            radius: best.radius,
            rungs,
            sup_small_scales: sup_small,
        })
    }

    /// Multiscale amplitude A = sup over x and ladder r of r^{-alpha} sqrt(I).
    /// A calibrated factor relates A to the pointwise Holder quotient.
    pub fn holder_amplitude(&self, u: &VectorField, alpha: f64) -> Result<Scan> {
        if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
            return Err(Error::InvalidParam {
                name: "alpha",
                why: format!("must lie in (0, 1), got {alpha}"),
            });
        }
        self.seminorm_scan(u, alpha, ScanMode::CampanatoSqrt)
    }

    /// The oscillation functional at every lattice point for one rung,
    /// computed by convolving with the discrete weight pattern:
    /// I = conv(w, |u|^2) - |conv(w, u)|^2, clamped at zero. The inputs are
    /// spectra of the globally centered components and of their squared
    /// magnitude; the functional is invariant under constant shifts and the
    /// centered form cancels better.
    fn oscillation_field(
        &self,
        comp_hats: &[Vec<Complex64>],
        sq_hat: &[Complex64],
        level: usize,
    ) -> Vec<f64> {
        let grid = &self.grid;
        let total = grid.point_count();
        let w_hat = &self.bump_hat[level];

        let conv_sq = apply_multiplier(grid, sq_hat, w_hat);
        let means: Vec<Vec<f64>> = comp_hats
            .iter()
            .map(|hat| apply_multiplier(grid, hat, w_hat))
            .collect();

        let mut out = vec![0.0; total];
        for idx in 0..total {
            let mut m2 = 0.0;
            for mean in &means {
                let m = mean[idx];
                m2 += m * m;
            }
            out[idx] = (conv_sq[idx] - m2).max(0.0);
        }
        out
    }

    fn scan_campanato(&self, u: &VectorField, exponent: f64) -> Vec<RungScan> {
        let grid = &self.grid;
        let total = grid.point_count();
        let centered: Vec<Vec<f64>> = u
            .components()
            .iter()
            .map(|c| {
                let m = c.mean();
                c.samples().iter().map(|v| v - m).collect()
            })
            .collect();
        let mut sq = vec![0.0; total];
        for comp in &centered {
            for (acc, v) in sq.iter_mut().zip(comp.iter()) {
                *acc += v * v;
            }
        }
        let sq_hat = fft::forward(grid, &sq);
        let comp_hats: Vec<Vec<Complex64>> =
            centered.iter().map(|c| fft::forward(grid, c)).collect();

        let mut rungs = Vec::with_capacity(self.ladder.len());
        for level in 0..self.ladder.len() {
            let r = self.ladder.radius(level);
            let osc = self.oscillation_field(&comp_hats, &sq_hat, level);
            let scale = r.powf(-exponent);
            let (argmax, value) = argmax_scaled(&osc, |v| v.sqrt() * scale);
            rungs.push(RungScan { level, radius: r, value, argmax });
        }
        rungs
    }

    fn scan_morrey(&self, b: &VectorField, exponent: f64, spec: &SeminormSpec) -> Vec<RungScan> {
        let grid = &self.grid;
        let dim = grid.dim();
        let total = grid.point_count();
        let comps: Vec<&[f64]> = b.components().iter().map(|c| c.samples()).collect();
        let mut rungs = Vec::with_capacity(self.ladder.len());

        // Morrey case re-centers at zero, so the functional itself is a
        // convolution of the pointwise magnitude with the ball indicator.
        let mag_hat = match spec.case {
            SeminormCase::Morrey => Some(fft::forward(grid, &b.magnitude().samples().to_vec())),
            _ => None,
        };

        for level in 0..self.ladder.len() {
            let st = &self.stencils[level];
            let r = self.ladder.radius(level);
            let scale = r.powf(-exponent);

            let values: Vec<f64> = match spec.case {
                SeminormCase::Morrey => {
                    let conv = apply_multiplier(grid, mag_hat.as_ref().unwrap(), &self.ball_hat[level]);
                    let measure = st.len() as f64 * st.cell_weight;
                    conv.iter().map(|v| v * measure).collect()
                }
                SeminormCase::Bmo => {
                    let mut ball_means = Vec::with_capacity(dim);
                    for c in b.components() {
                        ball_means.push(apply_multiplier(grid, c.spectrum(), &self.ball_hat[level]));
                    }
                    let sweep = |x: usize| -> f64 {
                        let center = grid.coords_of(x);
                        let mut anchor = [0.0; MAX_DIM];
                        for a in 0..dim {
                            anchor[a] = ball_means[a][x];
                        }
                        deviation_sum(st, grid, &center, &comps, &anchor, dim) * st.cell_weight
                    };
                    collect_values(total, sweep)
                }
                SeminormCase::Holder => {
                    let sweep = |x: usize| -> f64 {
                        let center = grid.coords_of(x);
                        let mut anchor = [0.0; MAX_DIM];
                        for a in 0..dim {
                            anchor[a] = comps[a][x];
                        }
                        deviation_sum(st, grid, &center, &comps, &anchor, dim) * st.cell_weight
                    };
                    collect_values(total, sweep)
                }
            };

            let (argmax, value) = argmax_scaled(&values, |v| v * scale);
            rungs.push(RungScan { level, radius: r, value, argmax });
        }
        rungs
    }

    // -- gradient functionals --------------------------------------------------

    /// Weighted variance of the Jacobian over the ball, negated:
    /// -2 Sum w |J - J_mean|^2. Always nonpositive; zero only when the
    /// sampled gradient is constant on the stencil.
    pub fn dissipation(&self, u: &VectorField, x: usize, r: f64) -> Result<f64> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        let jac = Jacobian::of(u)?;
        Ok(self.dissipation_with(&jac, x, level))
    }

    pub fn dissipation_with(&self, jac: &Jacobian, x: usize, level: usize) -> f64 {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let mut mean = [[0.0; MAX_DIM]; MAX_DIM];
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            for i in 0..dim {
                for a in 0..dim {
                    mean[i][a] += w * jac.entry(i, a, idx);
                }
            }
        }
        let mut var = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            for i in 0..dim {
                for a in 0..dim {
                    let d = jac.entry(i, a, idx) - mean[i][a];
                    var += w * d * d;
                }
            }
        }
        -2.0 * var
    }

    /// Scale derivative of the oscillation functional:
    /// dI/dr = 2 Sum w (u - mean) . (y . grad u) with y = offset / r.
    pub fn di_dr(&self, u: &VectorField, x: usize, r: f64) -> Result<f64> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        let jac = Jacobian::of(u)?;
        Ok(self.di_dr_with(u, &jac, x, level))
    }

    pub fn di_dr_with(&self, u: &VectorField, jac: &Jacobian, x: usize, level: usize) -> f64 {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let mean = self.local_mean_level(u, x, level);
        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            let y = st.unit_offset(&self.grid, p);
            for i in 0..dim {
                let du = comps[i][idx] - mean[i];
                let mut stretch = 0.0;
                for a in 0..dim {
                    stretch += y[a] * jac.entry(i, a, idx);
                }
                acc += w * du * stretch;
            }
        }
        2.0 * acc
    }

    /// Functional-inequality probe: lhs = 2 I - r dI/dr against the product
    /// sqrt(I) * sqrt(-r^2 D). Both coupling-coefficient variants of the lhs
    /// are reported.
    pub fn functional_gap(&self, u: &VectorField, x: usize, r: f64) -> Result<GapTerms> {
        self.check_field(u)?;
        let level = self.ladder.level_of(r)?;
        let jac = Jacobian::of(u)?;
        Ok(self.functional_gap_with(u, &jac, x, level))
    }

    pub fn functional_gap_with(
        &self,
        u: &VectorField,
        jac: &Jacobian,
        x: usize,
        level: usize,
    ) -> GapTerms {
        let r = self.ladder.radius(level);
        let i_value = self.campanato_i_level(u, x, level);
        let di_dr = self.di_dr_with(u, jac, x, level);
        let d = self.dissipation_with(jac, x, level);
        GapTerms {
            lhs: 2.0 * i_value - r * di_dr,
            lhs_double_coupling: 2.0 * i_value - 2.0 * r * di_dr,
            rhs_factor_i: i_value.sqrt(),
            rhs_factor_e: (-(r * r) * d).max(0.0).sqrt(),
            i_value,
            di_dr,
            dissipation: d,
        }
    }

    /// Advection probe in weight-gradient form:
    /// (1/r) Sum w_grad . (b - anchor) |u - mean|^2, anchor per the case.
    /// At spatial critical points of I this equals the direct advection
    /// contribution to dI/dt.
    pub fn advection_stencil_form(
        &self,
        u: &VectorField,
        b: &VectorField,
        x: usize,
        level: usize,
        spec: &SeminormSpec,
    ) -> f64 {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let u_comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let b_comps: Vec<&[f64]> = b.components().iter().map(|c| c.samples()).collect();
        let mean = self.local_mean_level(u, x, level);

        let mut anchor = [0.0; MAX_DIM];
        match spec.case {
            SeminormCase::Morrey => {}
            SeminormCase::Holder => {
                for a in 0..dim {
                    anchor[a] = b_comps[a][x];
                }
            }
            SeminormCase::Bmo => {
                let inv = 1.0 / st.len() as f64;
                for p in 0..st.len() {
                    let idx = st.sample_index(&self.grid, &center, p);
                    for a in 0..dim {
                        anchor[a] += b_comps[a][idx];
                    }
                }
                for a in 0..dim {
                    anchor[a] *= inv;
                }
            }
        }

        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let gw = st.grad_weight(p);
            let mut osc2 = 0.0;
            for i in 0..dim {
                let d = u_comps[i][idx] - mean[i];
                osc2 += d * d;
            }
            let mut flux = 0.0;
            for a in 0..dim {
                flux += (b_comps[a][idx] - anchor[a]) * gw[a];
            }
            acc += osc2 * flux;
        }
        acc / st.radius
    }

    /// Diagnostic spatial gradient of I at (x, r):
    /// grad_x I = 2 Sum w J^T (u - mean).
    pub fn oscillation_gradient(
        &self,
        u: &VectorField,
        jac: &Jacobian,
        x: usize,
        level: usize,
    ) -> [f64; MAX_DIM] {
        let st = &self.stencils[level];
        let center = self.grid.coords_of(x);
        let dim = self.grid.dim();
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
        let mean = self.local_mean_level(u, x, level);
        let mut g = [0.0; MAX_DIM];
        for p in 0..st.len() {
            let idx = st.sample_index(&self.grid, &center, p);
            let w = st.weight(p);
            for a in 0..dim {
                let mut acc = 0.0;
                for i in 0..dim {
                    acc += (comps[i][idx] - mean[i]) * jac.entry(i, a, idx);
                }
                g[a] += 2.0 * w * acc;
            }
        }
        g
    }
}

fn apply_multiplier(grid: &Grid, spectrum: &[Complex64], multiplier: &[Complex64]) -> Vec<f64> {
    let combined: Vec<Complex64> = spectrum
        .iter()
        .zip(multiplier.iter())
        .map(|(s, m)| s * m)
        .collect();
    fft::inverse(grid, &combined)
}

#[inline]
fn deviation_sum(
    st: &Stencil,
    grid: &Grid,
    center: &[usize; MAX_DIM],
    comps: &[&[f64]],
    anchor: &[f64; MAX_DIM],
    dim: usize,
) -> f64 {
    let mut acc = 0.0;
    for p in 0..st.len() {
        let idx = st.sample_index(grid, center, p);
        let mut d2 = 0.0;
        for a in 0..dim {
            let d = comps[a][idx] - anchor[a];
            d2 += d * d;
        }
        acc += d2.sqrt();
    }
    acc
}

#[cfg(feature = "parallel")]
fn collect_values(total: usize, sweep: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    (0..total).into_par_iter().map(sweep).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_values(total: usize, sweep: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..total).map(sweep).collect()
}

/// Argmax of a mapped value with the deterministic tie rule "first index
/// wins", which matches "smallest lattice index" under ascending iteration.
fn argmax_scaled(values: &[f64], map: impl Fn(f64) -> f64) -> (usize, f64) {
    let mut best_idx = 0usize;
    let mut best = map(values[0]);
    for (idx, &v) in values.iter().enumerate().skip(1) {
        let m = map(v);
        if m > best {
            best = m;
            best_idx = idx;
        }
    }
    (best_idx, best)
}
