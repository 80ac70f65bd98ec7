//! Time integration of u_t + b . grad u - lap u = grad p with div u = 0,
//! drift-field generation, mollification, and critical rescaling.
//!
//! The stepper is an integrating-factor midpoint scheme: every Fourier mode
//! carries the exact heat factor exp(-|k|^2 dt), while the projected
//! advection term is advanced explicitly at second order. This mirrors the
//! split used by the analyzer: dissipation exact, drift a perturbation.

use crate::campanato::{Analyzer, ScanMode, SeminormSpec};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};
use crate::ops;
use num_complex::Complex64;

/// Solver state: time, the divergence-free field, and step bookkeeping.
#[derive(Clone, Debug)]
pub struct SimState {
    pub time: f64,
    pub u: VectorField,
    pub step_index: usize,
    pub dt_history: Vec<f64>,
}

impl SimState {
    /// Wrap an initial field, projecting it onto the divergence-free range.
    pub fn new(u0: VectorField) -> Result<Self> {
        u0.ensure_finite("initial data")?;
        let u = if u0.divergence_free() && ops::divergence_residual(&u0) < 1e-10 {
            u0
        } else {
            ops::leray_project(&u0)?
        };
        Ok(Self { time: 0.0, u, step_index: 0, dt_history: Vec::new() })
    }
}

const CFL_FACTOR: f64 = 0.5;
pub const DT_CAP: f64 = 0.1;

/// Largest admissible step for a given drift field.
pub fn admissible_dt(grid: &Grid, b: &VectorField) -> f64 {
    let speed = b.max_abs();
    if speed == 0.0 {
        DT_CAP
    } else {
        (CFL_FACTOR * grid.spacing() / speed).min(DT_CAP)
    }
}

/// Projected drift term N(u) = P(-(b . grad) u) in spectral form,
/// with the mean mode pinned to zero.
fn nonlinear_spectra(b: &VectorField, u: &VectorField) -> Result<Vec<Vec<Complex64>>> {
    let grid = u.grid();
    let dim = grid.dim();
    let w = ops::advect(b, u)?;
    let specs: Vec<&[Complex64]> = w.components().iter().map(|c| c.spectrum()).collect();
    let mut out = vec![vec![Complex64::default(); grid.point_count()]; dim];
    for idx in 0..grid.point_count() {
        let c = grid.coords_of(idx);
        let mut k = [0.0; MAX_DIM];
        let mut k2 = 0.0;
        for a in 0..dim {
            k[a] = grid.wavenumber(c[a]);
            k2 += k[a] * k[a];
        }
        if k2 == 0.0 {
            continue; // advection of a divergence-free drift carries no mean
        }
        let mut k_dot = Complex64::default();
        for a in 0..dim {
            k_dot += k[a] * specs[a][idx];
        }
        let scale = k_dot / k2;
        for a in 0..dim {
            out[a][idx] = -(specs[a][idx] - k[a] * scale);
        }
    }
    Ok(out)
}

/// One integrating-factor midpoint step with the drift frozen over the step.
/// Negative dt is accepted for the tiny backward probes used by audits.
pub(crate) fn rk2_step_fields(u: &VectorField, b: &VectorField, dt: f64) -> Result<VectorField> {
    let grid = u.grid().clone();
    let dim = grid.dim();
    let total = grid.point_count();

    let heat_half: Vec<f64> = (0..total)
        .map(|idx| {
            let c = grid.coords_of(idx);
            let mut k2 = 0.0;
            for a in 0..dim {
                let k = grid.wavenumber(c[a]);
                k2 += k * k;
            }
            (-k2 * dt * 0.5).exp()
        })
        .collect();

    let stage1 = nonlinear_spectra(b, u)?;
    let mut half_spectra = Vec::with_capacity(dim);
    for a in 0..dim {
        let spec = u.component(a).spectrum();
        let half: Vec<Complex64> = (0..total)
            .map(|idx| (spec[idx] + 0.5 * dt * stage1[a][idx]) * heat_half[idx])
            .collect();
        half_spectra.push(half);
    }
    let half_fields: Vec<ScalarField> = half_spectra
        .into_iter()
        .map(|s| ScalarField::from_spectrum(&grid, s))
        .collect();
    let u_half = VectorField::new(half_fields)?.with_divergence_flag(true);

    let stage2 = nonlinear_spectra(b, &u_half)?;
    let mut out = Vec::with_capacity(dim);
    for a in 0..dim {
        let spec = u.component(a).spectrum();
        let new: Vec<Complex64> = (0..total)
            .map(|idx| {
                let e_half = heat_half[idx];
                spec[idx] * (e_half * e_half) + dt * e_half * stage2[a][idx]
            })
            .collect();
        out.push(ScalarField::from_spectrum(&grid, new));
    }
    Ok(VectorField::new(out)?.with_divergence_flag(true))
}

/// Advance one step. The drift must be divergence-free and dt must satisfy
/// the advection bound dt <= 0.5 h / max|b|.
pub fn step(state: &SimState, b: &VectorField, dt: f64) -> Result<SimState> {
    state.u.grid().same_as(b.grid())?;
    b.ensure_finite("drift field")?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParam { name: "dt", why: format!("must be positive, got {dt}") });
    }
    let admissible = admissible_dt(state.u.grid(), b);
    if dt > admissible * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt, admissible });
    }
    let u_new = rk2_step_fields(&state.u, b, dt)?;
    u_new.ensure_finite("advanced field")?;
    let mut dt_history = state.dt_history.clone();
    dt_history.push(dt);
    Ok(SimState {
        time: state.time + dt,
        u: u_new,
        step_index: state.step_index + 1,
        dt_history,
    })
}

// ---------------------------------------------------------------------------
// Drift construction
// ---------------------------------------------------------------------------

/// One trigonometric mode of a stream function or vector potential.
#[derive(Clone, Debug)]
pub struct TemplateMode {
    pub mode: [i64; MAX_DIM],
    pub amplitude: f64,
    pub phase: f64,
}

/// Mode list defining the scalar stream function (2D) or the vector
/// potential (3D, with per-component phase shifts).
#[derive(Clone, Debug, Default)]
pub struct StreamTemplate {
    pub modes: Vec<TemplateMode>,
}

impl StreamTemplate {
    pub fn single(mode: [i64; MAX_DIM]) -> Self {
        Self { modes: vec![TemplateMode { mode, amplitude: 1.0, phase: 0.0 }] }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty() || self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    fn scalar_field(&self, grid: &Grid, extra_phase: f64) -> ScalarField {
        let two_pi = 2.0 * std::f64::consts::PI;
        let length = grid.length();
        let dim = grid.dim();
        let modes = self.modes.clone();
        ScalarField::from_fn(grid, move |p| {
            let mut acc = 0.0;
            for m in &modes {
                let mut phase = m.phase + extra_phase;
                for a in 0..dim {
                    phase += two_pi * m.mode[a] as f64 * p[a] / length;
                }
                acc += m.amplitude * phase.cos();
            }
            acc
        })
    }
}

/// Divergence-free field from a stream function (2D: b = perp grad psi)
/// or a vector potential (3D: b = curl A).
pub fn stream_drift(grid: &Grid, template: &StreamTemplate) -> Result<VectorField> {
    match grid.dim() {
        2 => {
            let psi = template.scalar_field(grid, 0.0);
            let d0 = ops::partial(&psi, 0)?;
            let d1 = ops::partial(&psi, 1)?;
            let b = VectorField::new(vec![d1, d0.scale(-1.0)])?;
            Ok(b.with_divergence_flag(true))
        }
        3 => {
            let third = 2.0 * std::f64::consts::PI / 3.0;
            let a0 = template.scalar_field(grid, 0.0);
            let a1 = template.scalar_field(grid, third);
            let a2 = template.scalar_field(grid, 2.0 * third);
            let curl0 = sub(&ops::partial(&a2, 1)?, &ops::partial(&a1, 2)?)?;
            let curl1 = sub(&ops::partial(&a0, 2)?, &ops::partial(&a2, 0)?)?;
            let curl2 = sub(&ops::partial(&a1, 0)?, &ops::partial(&a0, 1)?)?;
            let b = VectorField::new(vec![curl0, curl1, curl2])?;
            Ok(b.with_divergence_flag(true))
        }
        d => Err(Error::InvalidGrid(format!("unsupported dimension {d}"))),
    }
}

fn sub(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    let samples = a
        .samples()
        .iter()
        .zip(b.samples().iter())
        .map(|(x, y)| x - y)
        .collect();
    ScalarField::from_samples(a.grid().clone(), samples)
}

/// Time envelope for the drift amplitude target g(t).
#[derive(Clone, Debug)]
pub enum Envelope {
    Constant(f64),
    /// Alternates `high` for the first half of each period, `low` after.
    SquareWave { low: f64, high: f64, period: f64 },
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(g) => *g,
            Envelope::SquareWave { low, high, period } => {
                let phase = (t / period).rem_euclid(1.0);
                if phase < 0.5 {
                    *high
                } else {
                    *low
                }
            }
        }
    }
}

/// Drift scenario kinds.
#[derive(Clone, Debug)]
pub enum DriftSpec {
    /// Stationary stream-function field, optionally calibrated so its
    /// multiscale seminorm matches a target value.
    StaticStream { template: StreamTemplate, target: Option<(SeminormSpec, f64)> },
    /// Calibrated field whose seminorm tracks the envelope over time.
    TimeModulated { template: StreamTemplate, spec: SeminormSpec, envelope: Envelope },
    /// Static calibrated field smoothed by a mass-one kernel of radius eps.
    Mollified { template: StreamTemplate, target: Option<(SeminormSpec, f64)>, eps: f64 },
    /// b = (-lap)^{-1/4} u, recomputed from the current solution.
    SelfCoupled,
}

/// Caches the template field and its seminorm so repeated drift evaluations
/// cost one scale and, for the self-coupled kind, one multiplier pass.
pub struct DriftGenerator {
    spec: DriftSpec,
    base: Option<VectorField>,
    base_scan: f64,
}

pub const SELF_COUPLING_ORDER: f64 = -0.25;

impl DriftGenerator {
    pub fn new(spec: DriftSpec, analyzer: &Analyzer) -> Result<Self> {
        let grid = analyzer.grid();
        let (base, base_scan) = match &spec {
            DriftSpec::StaticStream { template, target } => {
                if template.is_empty() {
                    ensure_zero_target(target.as_ref())?;
                    (Some(VectorField::zeros(grid)), 0.0)
                } else {
                    let raw = stream_drift(grid, template)?;
                    calibrated(analyzer, raw, target.as_ref())?
                }
            }
            DriftSpec::TimeModulated { template, spec: sspec, envelope: _ } => {
                if template.is_empty() {
                    return Err(Error::InvalidParam {
                        name: "drift.modes",
                        why: "time-modulated drift needs a nonzero template".into(),
                    });
                }
                let raw = stream_drift(grid, template)?;
                let scan = analyzer
                    .seminorm_scan(&raw, sspec.beta, ScanMode::MorreyCase(*sspec))?
                    .value;
                if scan <= 0.0 {
                    return Err(Error::InvalidParam {
                        name: "drift.g_target",
                        why: "template has zero seminorm; target unreachable".into(),
                    });
                }
                (Some(raw), scan)
            }
            DriftSpec::Mollified { template, target, eps } => {
                if template.is_empty() {
                    ensure_zero_target(target.as_ref())?;
                    (Some(VectorField::zeros(grid)), 0.0)
                } else {
                    let raw = stream_drift(grid, template)?;
                    let smooth = mollify_drift(&raw, *eps)?;
                    calibrated(analyzer, smooth, target.as_ref())?
                }
            }
            DriftSpec::SelfCoupled => (None, 0.0),
        };
        Ok(Self { spec, base, base_scan })
    }

    pub fn is_self_coupled(&self) -> bool {
        matches!(self.spec, DriftSpec::SelfCoupled)
    }

    /// Drift field at time t. Self-coupled drift needs the current solution.
    pub fn at(&self, t: f64, u: Option<&VectorField>) -> Result<VectorField> {
        match &self.spec {
            DriftSpec::StaticStream { .. } | DriftSpec::Mollified { .. } => {
                Ok(self.base.as_ref().expect("static drift has a base field").clone())
            }
            DriftSpec::TimeModulated { envelope, .. } => {
                let g = envelope.eval(t);
                if g < 0.0 {
                    return Err(Error::InvalidParam {
                        name: "drift.envelope",
                        why: format!("target seminorm must be nonnegative, got {g} at t = {t}"),
                    });
                }
                let base = self.base.as_ref().expect("modulated drift has a base field");
                // the seminorm is positively homogeneous, so one scale hits
                // the target exactly
                Ok(base.scale(g / self.base_scan))
            }
            DriftSpec::SelfCoupled => {
                let u = u.ok_or(Error::InvalidParam {
                    name: "u",
                    why: "self-coupled drift needs the current solution".into(),
                })?;
                self_coupled_drift(u)
            }
        }
    }
}

fn ensure_zero_target(target: Option<&(SeminormSpec, f64)>) -> Result<()> {
    if let Some((_, g)) = target {
        if *g > 0.0 {
            return Err(Error::InvalidParam {
                name: "drift.g_target",
                why: "zero template cannot reach a positive seminorm target".into(),
            });
        }
    }
    Ok(())
}

fn calibrated(
    analyzer: &Analyzer,
    raw: VectorField,
    target: Option<&(SeminormSpec, f64)>,
) -> Result<(Option<VectorField>, f64)> {
    match target {
        None => Ok((Some(raw), 0.0)),
        Some((spec, g)) => {
            let scan = analyzer.seminorm_scan(&raw, spec.beta, ScanMode::MorreyCase(*spec))?.value;
            if scan <= 0.0 {
                if *g > 0.0 {
                    return Err(Error::InvalidParam {
                        name: "drift.g_target",
                        why: "template has zero seminorm; target unreachable".into(),
                    });
                }
                return Ok((Some(raw), 0.0));
            }
            let scaled = raw.scale(g / scan);
            Ok((Some(scaled), *g))
        }
    }
}

/// Convenience one-shot drift construction.
pub fn make_drift(
    spec: &DriftSpec,
    analyzer: &Analyzer,
    t: f64,
    u: Option<&VectorField>,
) -> Result<VectorField> {
    DriftGenerator::new(spec.clone(), analyzer)?.at(t, u)
}

/// Smooth the drift with a mass-one radial kernel of radius eps
/// (spectral multiplication; the multiplier is one at the mean mode, so
/// constants and the divergence-free property are preserved).
pub fn mollify_drift(b: &VectorField, eps: f64) -> Result<VectorField> {
    b.ensure_finite("mollifier input")?;
    let grid = b.grid().clone();
    let h = grid.spacing();
    if eps < h {
        return Err(Error::InvalidParam {
            name: "eps",
            why: format!("mollification radius {eps} is below the lattice spacing {h}"),
        });
    }
    if eps > grid.length() / 2.0 {
        return Err(Error::InvalidParam {
            name: "eps",
            why: format!("mollification radius {eps} exceeds half the period"),
        });
    }
    let profile = crate::weight::WeightProfile::standard_bump(grid.dim())?;
    let kernel = ScalarField::from_fn(&grid, |p| {
        let mut y = [0.0; MAX_DIM];
        for (a, v) in p.iter().enumerate() {
            // distance to the origin on the torus
            let mut d = *v;
            if d > grid.length() / 2.0 {
                d -= grid.length();
            }
            y[a] = d / eps;
        }
        profile.phi(&y[..grid.dim()])
    });
    let k_hat = kernel.spectrum();
    let dc = k_hat[0].re;
    if dc <= 0.0 {
        return Err(Error::InvalidParam { name: "eps", why: "kernel mass vanished".into() });
    }
    let was_divfree = b.divergence_free();
    let mut out = Vec::with_capacity(grid.dim());
    for c in b.components() {
        let spec: Vec<Complex64> = c
            .spectrum()
            .iter()
            .zip(k_hat.iter())
            .map(|(s, k)| s * (k / dc))
            .collect();
        out.push(ScalarField::from_spectrum(&grid, spec));
    }
    Ok(VectorField::new(out)?.with_divergence_flag(was_divfree))
}

/// b = (-lap)^{-1/4} u componentwise. The multiplier is scalar, so the
/// divergence-free property carries over mode by mode.
pub fn self_coupled_drift(u: &VectorField) -> Result<VectorField> {
    u.ensure_finite("self-coupled drift input")?;
    let mut out = Vec::with_capacity(u.dim());
    for c in u.components() {
        out.push(ops::fractional_laplacian(c, SELF_COUPLING_ORDER)?);
    }
    Ok(VectorField::new(out)?.with_divergence_flag(u.divergence_free()))
}

/// Critical zoom u_r(x) = r u(r x) by spectral remapping: mode m moves to
/// r m with amplitude factor r. Every active mode must land on the integer
/// lattice inside the resolved band.
pub fn rescale(u: &VectorField, factor: f64) -> Result<VectorField> {
    u.ensure_finite("rescale input")?;
    let grid = u.grid().clone();
    let n = grid.points_per_axis();
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::InvalidParam {
            name: "factor",
            why: format!("must be positive, got {factor}"),
        });
    }
    let scaled_n = factor * n as f64;
    if (scaled_n - scaled_n.round()).abs() > 1e-9 {
        return Err(Error::InvalidParam {
            name: "factor",
            why: format!("{factor} is not dyadic for n = {n}"),
        });
    }
    let dim = grid.dim();
    let mut out = Vec::with_capacity(dim);
    for c in u.components() {
        let spec = c.spectrum();
        let peak = spec.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let tol = 1e-13 * peak.max(1e-300);
        let mut new_spec = vec![Complex64::default(); grid.point_count()];
        for (idx, z) in spec.iter().enumerate() {
            if z.norm() <= tol {
                continue;
            }
            let m = grid.modes_of(idx);
            let mut target = [0i64; MAX_DIM];
            for a in 0..dim {
                let t = factor * m[a] as f64;
                if (t - t.round()).abs() > 1e-9 {
                    return Err(Error::RescaleNonInteger { factor, mode: m });
                }
                target[a] = t.round() as i64;
                if target[a].abs() > n as i64 / 2 - 1 {
                    return Err(Error::RescaleBand { factor, mode: m });
                }
            }
            let mut coords = [0usize; MAX_DIM];
            for a in 0..dim {
                coords[a] = if target[a] >= 0 {
                    target[a] as usize
                } else {
                    (target[a] + n as i64) as usize
                };
            }
            new_spec[grid.flat_index(&coords[..dim])] += factor * z;
        }
        out.push(ScalarField::from_spectrum(&grid, new_spec));
    }
    Ok(VectorField::new(out)?.with_divergence_flag(u.divergence_free()))
}
