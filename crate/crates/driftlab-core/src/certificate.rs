//! Certificate engine: the drift seminorm history g(t), the amplitude
//! envelope f(t), breakdown scans of the oscillation against f(t)^2 r^{2a},
//! the advection/dissipation/pressure decomposition at extremal points, the
//! empirical calibration of the inequality constants, and the endpoint
//! (beta = -1) small-scale criterion.

use crate::campanato::{Analyzer, GapTerms, Scan, ScanMode, SeminormSpec};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::MAX_DIM;
use crate::ops::{self, Jacobian};
use serde::{Deserialize, Serialize};

/// Slack absorbing quadrature noise when declaring a breach.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CertStatus {
    Holding,
    Breached { time: f64, x: usize, r: f64 },
}

/// The verification object for one run: envelope parameters, trajectories,
/// and the breach status.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: f64,
    pub spec: SeminormSpec,
    pub c_bar: f64,
    pub f0: f64,
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub s: Vec<f64>,
    pub argmax_r: Vec<f64>,
    pub status: CertStatus,
}

impl Certificate {
    pub fn new(alpha: f64, spec: SeminormSpec, c_bar: f64, f0: f64) -> Self {
        Self {
            alpha,
            spec,
            c_bar,
            f0,
            times: Vec::new(),
            g: Vec::new(),
            f: Vec::new(),
            s: Vec::new(),
            argmax_r: Vec::new(),
            status: CertStatus::Holding,
        }
    }

    /// Append one observation; keeps the first breach.
    pub fn push(&mut self, t: f64, g: f64, f: f64, s: f64, argmax_x: usize, argmax_r: f64) {
        self.times.push(t);
        self.g.push(g);
        self.f.push(f);
        self.s.push(s);
        self.argmax_r.push(argmax_r);
        if s > 1.0 + BREAKDOWN_TOLERANCE && self.status == CertStatus::Holding {
            self.status = CertStatus::Breached { time: t, x: argmax_x, r: argmax_r };
        }
    }

    /// First stored index whose ratio exceeds the threshold, bracketing the
    /// breach between consecutive snapshots.
    pub fn first_breach_bracket(&self) -> Option<(usize, usize)> {
        let hit = self.s.iter().position(|&s| s > 1.0 + BREAKDOWN_TOLERANCE)?;
        Some((hit.saturating_sub(1), hit))
    }

    pub fn holding(&self) -> bool {
        self.status == CertStatus::Holding
    }
}

/// Drift seminorm at one output time.
pub fn g_of_t(analyzer: &Analyzer, b: &VectorField, spec: &SeminormSpec) -> Result<f64> {
    Ok(analyzer
        .seminorm_scan(b, spec.beta, ScanMode::MorreyCase(*spec))?
        .value)
}

/// Amplitude envelope f(t) = f0 exp(2 c_bar int_0^t g^{2/(1+beta)} ds) on
/// the sample grid, by cumulative trapezoid. Exact for piecewise-constant g
/// sampled on its own breakpoints.
pub fn f_trajectory(
    times: &[f64],
    g: &[f64],
    spec: &SeminormSpec,
    c_bar: f64,
    f0: f64,
) -> Result<Vec<f64>> {
    if spec.beta <= -1.0 {
        return Err(Error::InvalidParam {
            name: "beta",
            why: "the endpoint beta = -1 uses the small-scale certificate".into(),
        });
    }
    if times.len() != g.len() {
        return Err(Error::InvalidParam {
            name: "g",
            why: format!("{} samples for {} times", g.len(), times.len()),
        });
    }
    let exponent = 2.0 / (1.0 + spec.beta);
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            let dt = times[i] - times[i - 1];
            if dt < 0.0 {
                return Err(Error::InvalidParam {
                    name: "times",
                    why: "must be nondecreasing".into(),
                });
            }
            integral += 0.5 * dt * (g[i].powf(exponent) + g[i - 1].powf(exponent));
        }
        out.push(f0 * (2.0 * c_bar * integral).exp());
    }
    Ok(out)
}

/// Sup ratio S = sup_{x, r} sqrt(I(x, r)) / (f_t r^alpha) with its argmax.
pub fn breakdown_scan(
    analyzer: &Analyzer,
    u: &VectorField,
    f_t: f64,
    alpha: f64,
) -> Result<(f64, Scan)> {
    if !(f_t > 0.0) {
        return Err(Error::InvalidParam {
            name: "f_t",
            why: format!("envelope must be positive, got {f_t}"),
        });
    }
    let scan = analyzer.holder_amplitude(u, alpha)?;
    Ok((scan.value / f_t, scan))
}

// ---------------------------------------------------------------------------
// Decomposition audits
// ---------------------------------------------------------------------------

/// Per-point decomposition of dI/dt into advection, dissipation and
/// pressure contributions, with the matching inequality cores.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditRecord {
    pub t: f64,
    pub x: usize,
    pub coords: [usize; MAX_DIM],
    pub r: f64,
    pub level: usize,
    /// Direct advection contribution 2 Sum w (u - mean) . (-(b . grad) u).
    pub a_term: f64,
    /// Weight-gradient form with the case anchor; equals `a_term` up to
    /// anchor . grad_x I, which vanishes at spatial critical points.
    pub a_stencil: f64,
    /// Dissipation contribution 2 Sum w (u - mean) . lap u.
    pub d_term: f64,
    /// Pressure contribution -2 Sum w (u - mean) . grad p.
    pub p_term: f64,
    /// Centered finite difference of I under two solver microsteps.
    pub di_dt_fd: f64,
    /// |a + d + p - fd| relative to the largest participating magnitude.
    pub sum_residual: f64,
    /// Diagnostic |grad_x I|; small at genuine scan argmax points.
    pub grad_i_norm: f64,
    pub i_value: f64,
    /// Case functional of the drift at (x, r).
    pub m_local: f64,
    /// Global drift seminorm at this time.
    pub g_global: f64,
    /// Inequality cores: the bounds are C * core with calibrated constants.
    pub adv_bound_core: f64,
    pub diss_bound_core: f64,
    pub press_bound_core: f64,
    pub gap: GapTerms,
}

/// Shared per-snapshot context for many audit points: the Jacobian, the
/// spectral Laplacian, the dealiased advection product, and the pressure
/// gradient are computed once.
pub struct Auditor<'a> {
    analyzer: &'a Analyzer,
    u: &'a VectorField,
    b: &'a VectorField,
    spec: SeminormSpec,
    t: f64,
    g_global: f64,
    jac: Jacobian,
    lap: VectorField,
    adv: VectorField,
    pressure: VectorField,
    fd_dt: f64,
    u_plus: VectorField,
    u_minus: VectorField,
}

impl<'a> Auditor<'a> {
    pub fn new(
        analyzer: &'a Analyzer,
        u: &'a VectorField,
        b: &'a VectorField,
        spec: SeminormSpec,
        t: f64,
        g_global: f64,
    ) -> Result<Self> {
        u.grid().same_as(analyzer.grid())?;
        b.grid().same_as(analyzer.grid())?;
        let jac = Jacobian::of(u)?;
        let lap_parts: Result<Vec<_>> = u.components().iter().map(ops::laplacian).collect();
        let lap = VectorField::new(lap_parts?)?;
        let adv = ops::advect(b, u)?;
        let pressure = ops::pressure_gradient_of(&adv)?;
        let h = analyzer.grid().spacing();
        let fd_dt = 1e-4 * h * h;
        let u_plus = dynamics::rk2_step_fields(u, b, fd_dt)?;
        let u_minus = dynamics::rk2_step_fields(u, b, -fd_dt)?;
        Ok(Self {
            analyzer,
            u,
            b,
            spec,
            t,
            g_global,
            jac,
            lap,
            adv,
            pressure,
            fd_dt,
            u_plus,
            u_minus,
        })
    }

    /// Audit one (x, level) point.
    pub fn record(&self, x: usize, level: usize) -> AuditRecord {
        let analyzer = self.analyzer;
        let grid = analyzer.grid();
        let dim = grid.dim();
        let st = analyzer.stencil(level);
        let r = st.radius;
        let center = grid.coords_of(x);

        let u_comps: Vec<&[f64]> = self.u.components().iter().map(|c| c.samples()).collect();
        let adv_comps: Vec<&[f64]> = self.adv.components().iter().map(|c| c.samples()).collect();
        let lap_comps: Vec<&[f64]> = self.lap.components().iter().map(|c| c.samples()).collect();
        let prs_comps: Vec<&[f64]> =
            self.pressure.components().iter().map(|c| c.samples()).collect();
        let mean = analyzer.local_mean_level(self.u, x, level);

        let mut a_term = 0.0;
        let mut d_term = 0.0;
        let mut p_term = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(grid, &center, p);
            let w = st.weight(p);
            for i in 0..dim {
                let osc = u_comps[i][idx] - mean[i];
                a_term += w * osc * (-adv_comps[i][idx]);
                d_term += w * osc * lap_comps[i][idx];
                p_term += w * osc * (-prs_comps[i][idx]);
            }
        }
        a_term *= 2.0;
        d_term *= 2.0;
        p_term *= 2.0;

        let a_stencil = analyzer.advection_stencil_form(self.u, self.b, x, level, &self.spec);

        let i_plus = analyzer.campanato_i_level(&self.u_plus, x, level);
        let i_minus = analyzer.campanato_i_level(&self.u_minus, x, level);
        let di_dt_fd = (i_plus - i_minus) / (2.0 * self.fd_dt);

        let sum = a_term + d_term + p_term;
        let scale = a_term
            .abs()
            .max(d_term.abs())
            .max(p_term.abs())
            .max(di_dt_fd.abs())
            .max(1e-300);
        let sum_residual = (sum - di_dt_fd).abs() / scale;

        let grad_i = analyzer.oscillation_gradient(self.u, &self.jac, x, level);
        let grad_i_norm = grad_i[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();

        let i_value = analyzer.campanato_i_level(self.u, x, level);
        let m_local = analyzer.morrey_m_level(self.b, x, level, &self.spec);
        let gap = analyzer.functional_gap_with(self.u, &self.jac, x, level);

        AuditRecord {
            t: self.t,
            x,
            coords: center,
            r,
            level,
            a_term,
            a_stencil,
            d_term,
            p_term,
            di_dt_fd,
            sum_residual,
            grad_i_norm,
            i_value,
            m_local,
            g_global: self.g_global,
            adv_bound_core: i_value * m_local / r,
            diss_bound_core: i_value / (r * r),
            press_bound_core: i_value * self.g_global * r.powf(self.spec.beta - 1.0),
            gap,
        }
    }
}

/// One-shot decomposition at a point and ladder radius.
#[allow(clippy::too_many_arguments)]
pub fn adp_decompose(
    analyzer: &Analyzer,
    u: &VectorField,
    b: &VectorField,
    x: usize,
    r: f64,
    spec: &SeminormSpec,
    t: f64,
    g_global: f64,
) -> Result<AuditRecord> {
    let level = analyzer.ladder().level_of(r)?;
    let auditor = Auditor::new(analyzer, u, b, *spec, t, g_global)?;
    Ok(auditor.record(x, level))
}

// ---------------------------------------------------------------------------
// Constant calibration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConstantFit {
    pub value: f64,
    /// Index of the extremal record in the corpus.
    pub witness: usize,
    pub samples: usize,
}

/// Calibrated inequality constants. `None` marks a constant the corpus
/// cannot identify (for example the advection constant when b = 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub beta: f64,
    pub c_a: Option<ConstantFit>,
    pub c_d: Option<ConstantFit>,
    pub c_p: Option<ConstantFit>,
    pub c_bar: Option<f64>,
}

const CORE_FLOOR: f64 = 1e-13;

/// Smallest constants making the three per-point inequalities hold on the
/// corpus, plus the envelope rate obtained by maximizing the combined bound
/// over the scale.
pub fn calibrate_constants(records: &[AuditRecord], beta: f64) -> Result<Calibration> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut c_a: Option<ConstantFit> = None;
    let mut c_d: Option<ConstantFit> = None;
    let mut c_p: Option<ConstantFit> = None;

    for (i, rec) in records.iter().enumerate() {
        if rec.adv_bound_core > CORE_FLOOR {
            let ratio = rec.a_stencil.abs() / rec.adv_bound_core;
            if c_a.map_or(true, |f| ratio > f.value) {
                c_a = Some(ConstantFit { value: ratio, witness: i, samples: 0 });
            }
        }
        if rec.diss_bound_core > CORE_FLOOR {
            let ratio = -rec.d_term / rec.diss_bound_core;
            if c_d.map_or(true, |f| ratio < f.value) {
                c_d = Some(ConstantFit { value: ratio, witness: i, samples: 0 });
            }
        }
        if rec.press_bound_core > CORE_FLOOR {
            let ratio = rec.p_term.abs() / rec.press_bound_core;
            if c_p.map_or(true, |f| ratio > f.value) {
                c_p = Some(ConstantFit { value: ratio, witness: i, samples: 0 });
            }
        }
    }
    let count_a = records.iter().filter(|r| r.adv_bound_core > CORE_FLOOR).count();
    let count_d = records.iter().filter(|r| r.diss_bound_core > CORE_FLOOR).count();
    let count_p = records.iter().filter(|r| r.press_bound_core > CORE_FLOOR).count();
    if let Some(f) = c_a.as_mut() {
        f.samples = count_a;
    }
    if let Some(f) = c_d.as_mut() {
        f.samples = count_d;
    }
    if let Some(f) = c_p.as_mut() {
        f.samples = count_p;
    }
    // a nonpositive dissipation ratio means the corpus cannot certify a
    // lower bound; report it as unidentified
    if c_d.is_some_and(|f| f.value <= 0.0) {
        c_d = None;
    }

    let c_bar = match (c_a, c_d, c_p) {
        (Some(a), Some(d), Some(p)) => Some(envelope_rate(a.value + p.value, d.value, beta)?),
        _ => None,
    };

    Ok(Calibration { beta, c_a, c_d, c_p, c_bar })
}

/// Envelope rate from the scale maximization of
/// h(r) = C* g r^{beta-1} - c* r^{-2}: the maximum equals
/// kappa(beta) c*^{(beta-1)/(1+beta)} C*^{2/(1+beta)} g^{2/(1+beta)}.
/// The certificate rate uses half that coefficient so the chosen envelope
/// grows at twice the required rate.
pub fn envelope_rate(c_star: f64, c_small: f64, beta: f64) -> Result<f64> {
    if !(c_star > 0.0) || !(c_small > 0.0) {
        return Err(Error::InvalidParam {
            name: "constants",
            why: format!("need positive constants, got C* = {c_star}, c* = {c_small}"),
        });
    }
    if beta <= -1.0 || beta > 1.0 {
        return Err(Error::InvalidParam { name: "beta", why: format!("got {beta}") });
    }
    if beta == 1.0 {
        // h is increasing in r with supremum C* g
        return Ok(c_star / 2.0);
    }
    let q = 2.0 / (1.0 + beta);
    let kappa = (1.0 + beta) / (1.0 - beta) * ((1.0 - beta) / 2.0).powf(q);
    Ok(kappa * c_small.powf((beta - 1.0) / (1.0 + beta)) * c_star.powf(q) / 2.0)
}

// ---------------------------------------------------------------------------
// Endpoint criterion (beta = -1)
// ---------------------------------------------------------------------------

pub struct EndpointInput<'a> {
    /// Drift snapshots (time, field); may be empty when `b_norm` is given.
    pub snapshots: &'a [(f64, VectorField)],
    pub alpha: f64,
    pub eps: f64,
    /// Small-scale horizon r*(t); must be positive on [0, T).
    pub r_star: &'a dyn Fn(f64) -> f64,
    /// Measured sup_t sup_r r M; measured from snapshots when absent.
    pub b_norm: Option<f64>,
    pub horizon: f64,
    /// Combined advection + pressure constant from calibration.
    pub c_star: f64,
    /// Dissipation constant from calibration.
    pub c_small: f64,
    pub f0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndpointReport {
    pub b_norm: f64,
    pub small_scale_sup: f64,
    pub condition_small_scales: bool,
    /// Trapezoid value of int 1/r*(t)^2 dt when it converges under
    /// refinement; `None` marks a divergent integral.
    pub integral_value: Option<f64>,
    pub condition_integral: bool,
    pub delta: f64,
    pub k_coeff: f64,
    /// Envelope value at the horizon when both conditions hold.
    pub f_end: Option<f64>,
    pub epsilon_recommended: f64,
    pub passed: bool,
}

/// Check the two endpoint conditions and assemble the borderline envelope.
pub fn endpoint_check(analyzer: &Analyzer, input: &EndpointInput<'_>) -> Result<EndpointReport> {
    if !(input.alpha > 0.0 && input.alpha < 1.0) {
        return Err(Error::InvalidParam {
            name: "alpha",
            why: format!("must lie in (0, 1), got {}", input.alpha),
        });
    }
    if !(input.eps > 0.0) {
        return Err(Error::InvalidParam { name: "eps", why: "must be positive".into() });
    }
    if !(input.horizon > 0.0) {
        return Err(Error::InvalidParam { name: "horizon", why: "must be positive".into() });
    }
    let spec = SeminormSpec::new(-1.0)?;

    // measured critical norm B = sup_t sup_r r * M
    let mut measured_b: f64 = 0.0;
    let mut small_scale_sup: f64 = 0.0;
    for (t, b_field) in input.snapshots {
        let r_star = (input.r_star)(*t);
        if !(r_star > 0.0) {
            return Err(Error::InvalidParam {
                name: "r_star",
                why: format!("must be positive, got {r_star} at t = {t}"),
            });
        }
        let rungs = analyzer.scan_profile(b_field, spec.beta, ScanMode::MorreyCase(spec))?;
        for rung in &rungs {
            measured_b = measured_b.max(rung.value);
            if rung.radius < r_star {
                small_scale_sup = small_scale_sup.max(rung.value);
            }
        }
    }
    let b_norm = input.b_norm.unwrap_or(measured_b).max(measured_b);
    let condition_small_scales = small_scale_sup <= input.eps * (1.0 + 1e-12);

    // refinement trapezoid (midpoint nodes, never touching the horizon)
    let (integral_value, condition_integral) = refine_integral(input.r_star, input.horizon)?;

    let delta = (input.eps / b_norm).powf(1.0 / (3.0 - input.alpha)).min(0.5);
    let c_alpha = (2.0f64).powf(input.alpha - 3.0) / (3.0 - input.alpha);
    let k_coeff = input.c_star * b_norm * (3.0 + c_alpha) / (delta * delta);
    let f_end = integral_value.map(|i| input.f0 * (k_coeff * i).exp());
    let epsilon_recommended = input.c_small / (input.c_star * (3.0 + 2.0 * c_alpha));

    Ok(EndpointReport {
        b_norm,
        small_scale_sup,
        condition_small_scales,
        integral_value,
        condition_integral,
        delta,
        k_coeff,
        f_end: if condition_small_scales && condition_integral { f_end } else { None },
        epsilon_recommended,
        passed: condition_small_scales && condition_integral,
    })
}

/// Midpoint-rule value of int_0^T 1/r*(t)^2 dt under grid doubling.
/// Divergent integrands keep drifting between refinements and are reported
/// as non-convergent.
fn refine_integral(r_star: &dyn Fn(f64) -> f64, horizon: f64) -> Result<(Option<f64>, bool)> {
    let mut previous: Option<f64> = None;
    let mut cells = 64usize;
    for _ in 0..12 {
        let dt = horizon / cells as f64;
        let mut acc = 0.0;
        for i in 0..cells {
            let t = (i as f64 + 0.5) * dt;
            let r = r_star(t);
            if !(r > 0.0) {
                return Err(Error::InvalidParam {
                    name: "r_star",
                    why: format!("must be positive, got {r} at t = {t}"),
                });
            }
            acc += dt / (r * r);
            if !acc.is_finite() {
                return Ok((None, false));
            }
        }
        if let Some(prev) = previous {
            if (acc - prev).abs() <= 1e-3 * acc.abs().max(1.0) {
                return Ok((Some(acc), true));
            }
        }
        previous = Some(acc);
        cells *= 2;
    }
    Ok((None, false))
}
