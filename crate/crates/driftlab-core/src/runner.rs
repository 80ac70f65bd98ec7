//! Run orchestration: simulate, analyze, certify, and emit reports.
//!
//! A run directory holds the config echo, binary field snapshots with text
//! sidecars, per-rung seminorm CSV rows, the certificate time-series CSV,
//! and a JSON certificate report.

use crate::campanato::{Analyzer, ScanMode, SeminormSpec};
use crate::certificate::{self, AuditRecord, Auditor, Calibration, Certificate};
use crate::dynamics::{self, DriftGenerator, SimState};
use crate::error::{Error, Result};
use crate::field::{self, ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops;
use crate::rng;
use crate::scenario::{InitSpec, RStarSpec, Scenario};
use crate::weight::ScaleLadder;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Outcome of one run; `aborted` keeps the failure note when the field blew
/// up mid-run (the last good snapshot stays in the directory).
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub certificate: Certificate,
    pub aborted: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.aborted.is_some() {
            4
        } else if self.certificate.holding() {
            0
        } else {
            2
        }
    }
}

pub fn build_analyzer(scenario: &Scenario) -> Result<Analyzer> {
    let ladder = ScaleLadder::with_min_cells(&scenario.grid, scenario.ladder_min_cells)?;
    Analyzer::with_ladder(&scenario.grid, ladder)
}

/// Build the initial field: divergence-free projection of the named data.
pub fn initial_field(scenario: &Scenario) -> Result<VectorField> {
    let grid = &scenario.grid;
    let u0 = match &scenario.init {
        InitSpec::Zero => VectorField::zeros(grid),
        InitSpec::TaylorGreen { amplitude } => {
            let template = crate::dynamics::StreamTemplate {
                modes: vec![
                    crate::dynamics::TemplateMode { mode: [1, 1, 0], amplitude: 0.5, phase: 0.0 },
                    crate::dynamics::TemplateMode {
                        mode: [1, -1, 0],
                        amplitude: 0.5,
                        phase: 0.0,
                    },
                ],
            };
            dynamics::stream_drift(grid, &template)?.scale(*amplitude)
        }
        InitSpec::SingleMode { mode, amplitude } => {
            let template = crate::dynamics::StreamTemplate::single(*mode);
            dynamics::stream_drift(grid, &template)?.scale(*amplitude)
        }
        InitSpec::RandomBand { max_mode, amplitude } => {
            let mut rng = rng::rng_from_seed(scenario.seed);
            rng::random_divergence_free(grid, *max_mode, *amplitude, &mut rng)?
        }
        InitSpec::Dump { path } => {
            let (v, _) = field::read_vector(path)?;
            v.grid().same_as(grid).map_err(|_| Error::Config {
                key: "init.path".into(),
                why: format!("dump grid does not match the scenario grid ({path:?})"),
            })?;
            v.ensure_finite("initial dump")?;
            // dumps written by a run already carry the invariants; loading
            // them verbatim keeps restart fields bitwise identical
            return if ops::divergence_residual(&v) < 1e-10 {
                Ok(v.with_divergence_flag(true))
            } else {
                ops::leray_project(&v)
            };
        }
    };
    // zero-mean, divergence-free working copy; the self-coupled drift
    // requires the mean to vanish and the solver preserves it
    let mean = u0.mean();
    let comps: Result<Vec<ScalarField>> = u0
        .components()
        .iter()
        .zip(mean.iter())
        .map(|(c, m)| {
            ScalarField::from_samples(grid.clone(), c.samples().iter().map(|v| v - m).collect())
        })
        .collect();
    let centered = VectorField::new(comps?)?;
    ops::leray_project(&centered)
}

/// Calibration corpus: seeded random field pairs audited at their
/// oscillation argmax points, one record per ladder rung and pair.
pub fn calibration_corpus(
    grid: &Grid,
    analyzer: &Analyzer,
    spec: &SeminormSpec,
    alpha: f64,
    records_wanted: usize,
    seed: u64,
) -> Result<Vec<AuditRecord>> {
    let mut rng = rng::rng_from_seed(seed ^ 0xca11_b8a7e);
    let rungs = analyzer.ladder().len();
    let per_pair = rungs.max(1);
    let pairs = records_wanted.div_ceil(per_pair);
    let mut records = Vec::with_capacity(records_wanted);
    let max_mode = (grid.points_per_axis() as i64 / 8).clamp(2, 8);
    for _ in 0..pairs {
        let u = rng::random_divergence_free(grid, max_mode, 1.0, &mut rng)?;
        let b = rng::random_divergence_free(grid, max_mode, 1.0, &mut rng)?;
        let g = certificate::g_of_t(analyzer, &b, spec)?;
        let auditor = Auditor::new(analyzer, &u, &b, *spec, 0.0, g)?;
        let profile = analyzer.scan_profile(&u, alpha, ScanMode::CampanatoSqrt)?;
        for rung in &profile {
            if records.len() >= records_wanted {
                break;
            }
            records.push(auditor.record(rung.argmax, rung.level));
        }
    }
    Ok(records)
}

fn f64_cell(v: f64) -> String {
    format!("{v:.17e}")
}

/// Execute one scenario into `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.echo.cfg"), &scenario.source)?;

    let analyzer = build_analyzer(scenario)?;
    let grid = &scenario.grid;
    let u0 = initial_field(scenario)?;
    let generator = DriftGenerator::new(scenario.drift.clone(), &analyzer)?;

    // envelope rate: explicit override, calibrated pre-pass, or unit default
    let (c_bar, calibration) = match scenario.c_bar_override {
        Some(c) => (c, None),
        None if scenario.calibrate_first => {
            let corpus = calibration_corpus(
                grid,
                &analyzer,
                &scenario.seminorm,
                scenario.alpha,
                scenario.calibration_samples,
                scenario.seed,
            )?;
            let cal = certificate::calibrate_constants(&corpus, scenario.seminorm.beta)?;
            let c = cal.c_bar.ok_or_else(|| Error::Numerical {
                when: "calibration corpus did not identify the envelope rate".into(),
            })?;
            (c, Some(cal))
        }
        None => (1.0, None),
    };

    let a0 = analyzer.holder_amplitude(&u0, scenario.alpha)?.value;
    let f0 = if a0 > 0.0 { a0 } else { 1.0 } * scenario.f0_scale;
    let mut cert = Certificate::new(scenario.alpha, scenario.seminorm, c_bar, f0);

    // at the endpoint exponent the envelope follows the borderline
    // construction f0 exp(K int 1/r*^2) with K from the running critical
    // norm; away from it the closed-form trapezoid of g^{2/(1+beta)} applies
    let endpoint_env = scenario.endpoint.as_ref().map(|spec| {
        let horizon = scenario.total_time;
        let r_star: Box<dyn Fn(f64) -> f64> = match spec.r_star {
            RStarSpec::Constant(r) => Box::new(move |_| r),
            RStarSpec::SqrtToHorizon => Box::new(move |t: f64| (horizon - t).max(0.0).sqrt()),
        };
        let (c_star, c_small) = match &calibration {
            Some(cal) => (
                cal.c_a.map(|a| a.value).unwrap_or(1.0) + cal.c_p.map(|p| p.value).unwrap_or(0.0),
                cal.c_d.map(|d| d.value).unwrap_or(1.0),
            ),
            None => (1.0, 1.0),
        };
        EndpointEnvelope { eps: spec.eps, alpha: scenario.alpha, c_star, c_small, r_star }
    });

    let mut state = SimState::new(u0)?;
    let mut g_times: Vec<f64> = Vec::new();
    let mut g_values: Vec<f64> = Vec::new();
    let mut seminorm_rows = String::from("t,quantity,exponent,r,value,ax0,ax1,ax2\n");
    let mut snapshot_index = 0usize;
    let mut aborted = None;

    let observe = |state: &SimState,
                   b: &VectorField,
                   g_now: f64,
                   g_times: &[f64],
                   g_values: &[f64],
                   cert: &mut Certificate,
                   seminorm_rows: &mut String,
                   snapshot_index: &mut usize|
     -> Result<()> {
        let f_now = match &endpoint_env {
            Some(env) => env.value(cert.f0, g_times, g_values),
            None => *certificate::f_trajectory(
                g_times,
                g_values,
                &scenario.seminorm,
                cert.c_bar,
                cert.f0,
            )?
            .last()
            .expect("trajectory is nonempty"),
        };
        let (s_now, scan) = certificate::breakdown_scan(&analyzer, &state.u, f_now, scenario.alpha)?;
        cert.push(state.time, g_now, f_now, s_now, scan.argmax, scan.radius);

        for rung in &scan.rungs {
            let c = grid.coords_of(rung.argmax);
            let _ = writeln!(
                seminorm_rows,
                "{},campanato_sqrt,{},{},{},{},{},{}",
                f64_cell(state.time),
                f64_cell(scenario.alpha),
                f64_cell(rung.radius),
                f64_cell(rung.value),
                c[0],
                c[1],
                c[2]
            );
        }
        let b_scan =
            analyzer.seminorm_scan(b, scenario.seminorm.beta, ScanMode::MorreyCase(scenario.seminorm))?;
        for rung in &b_scan.rungs {
            let c = grid.coords_of(rung.argmax);
            let _ = writeln!(
                seminorm_rows,
                "{},morrey_case,{},{},{},{},{},{}",
                f64_cell(state.time),
                f64_cell(scenario.seminorm.beta),
                f64_cell(rung.radius),
                f64_cell(rung.value),
                c[0],
                c[1],
                c[2]
            );
        }
        // sub-unit-scale sup, reported separately for the Morrey case where
        // the classical definition restricts to r < 1
        if let Some(small) = b_scan.sup_small_scales {
            let _ = writeln!(
                seminorm_rows,
                "{},morrey_case_sub_unit,{},,{},,,",
                f64_cell(state.time),
                f64_cell(scenario.seminorm.beta),
                f64_cell(small),
            );
        }

        field::write_vector(
            &out_dir.join(format!("u_{snapshot_index:06}.bin")),
            &state.u,
            state.time,
        )?;
        field::write_vector(
            &out_dir.join(format!("b_{snapshot_index:06}.bin")),
            b,
            state.time,
        )?;
        *snapshot_index += 1;
        Ok(())
    };

    // initial observation
    let b = generator.at(state.time, Some(&state.u))?;
    let g_now = certificate::g_of_t(&analyzer, &b, &scenario.seminorm)?;
    g_times.push(state.time);
    g_values.push(g_now);
    observe(
        &state,
        &b,
        g_now,
        &g_times,
        &g_values,
        &mut cert,
        &mut seminorm_rows,
        &mut snapshot_index,
    )?;

    let mut steps_since_output = 0usize;
    while state.time < scenario.total_time - 1e-12 {
        let b = generator.at(state.time, Some(&state.u))?;
        let dt_cfl = dynamics::admissible_dt(grid, &b);
        let remaining = scenario.total_time - state.time;
        let dt = dt_cfl.min(scenario.max_dt).min(remaining);
        match dynamics::step(&state, &b, dt) {
            Ok(next) => state = next,
            Err(e @ Error::NonFinite { .. }) => {
                aborted = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
        if !state.u.is_finite() {
            aborted = Some("field became non-finite".into());
            break;
        }
        let b_now = generator.at(state.time, Some(&state.u))?;
        let g_now = certificate::g_of_t(&analyzer, &b_now, &scenario.seminorm)?;
        g_times.push(state.time);
        g_values.push(g_now);
        steps_since_output += 1;
        let final_step = state.time >= scenario.total_time - 1e-12;
        if steps_since_output >= scenario.output_stride || final_step {
            observe(
                &state,
                &b_now,
                g_now,
                &g_times,
                &g_values,
                &mut cert,
                &mut seminorm_rows,
                &mut snapshot_index,
            )?;
            steps_since_output = 0;
        }
    }

    // series CSV
    let mut series = String::from("t,g,f,S,argmax_r\n");
    for i in 0..cert.times.len() {
        let _ = writeln!(
            series,
            "{},{},{},{},{}",
            f64_cell(cert.times[i]),
            f64_cell(cert.g[i]),
            f64_cell(cert.f[i]),
            f64_cell(cert.s[i]),
            f64_cell(cert.argmax_r[i]),
        );
    }
    std::fs::write(out_dir.join("series.csv"), series)?;
    std::fs::write(out_dir.join("seminorms.csv"), seminorm_rows)?;

    // endpoint criterion, when configured
    let endpoint_report = match (&endpoint_env, aborted.is_none()) {
        (Some(env), true) => {
            let mut snapshots = Vec::new();
            for i in 0..snapshot_index {
                let (b_field, t) = field::read_vector(&out_dir.join(format!("b_{i:06}.bin")))?;
                snapshots.push((t, b_field));
            }
            let report = certificate::endpoint_check(
                &analyzer,
                &certificate::EndpointInput {
                    snapshots: &snapshots,
                    alpha: scenario.alpha,
                    eps: env.eps,
                    r_star: &env.r_star,
                    b_norm: None,
                    horizon: scenario.total_time,
                    c_star: env.c_star,
                    c_small: env.c_small,
                    f0: cert.f0,
                },
            )?;
            Some(report)
        }
        _ => None,
    };

    let report = RunReport {
        certificate: cert.clone(),
        calibration,
        endpoint: endpoint_report,
        aborted: aborted.clone(),
        snapshots: snapshot_index,
    };
    std::fs::write(
        out_dir.join("certificate.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    Ok(RunOutcome { dir: out_dir.to_path_buf(), certificate: cert, aborted })
}

#[derive(Serialize, Deserialize)]
pub struct RunReport {
    pub certificate: Certificate,
    pub calibration: Option<Calibration>,
    pub endpoint: Option<certificate::EndpointReport>,
    pub aborted: Option<String>,
    pub snapshots: usize,
}

/// Live borderline envelope for endpoint runs: f0 exp(K(t) int 1/r*^2),
/// with K built from the running critical norm and the smallness budget.
struct EndpointEnvelope {
    eps: f64,
    alpha: f64,
    c_star: f64,
    c_small: f64,
    r_star: Box<dyn Fn(f64) -> f64>,
}

impl EndpointEnvelope {
    fn value(&self, f0: f64, times: &[f64], g: &[f64]) -> f64 {
        let b_norm = g.iter().cloned().fold(0.0f64, f64::max);
        if b_norm == 0.0 {
            return f0;
        }
        let delta = (self.eps / b_norm).powf(1.0 / (3.0 - self.alpha)).min(0.5);
        let c_alpha = 2.0f64.powf(self.alpha - 3.0) / (3.0 - self.alpha);
        let k = self.c_star * b_norm * (3.0 + c_alpha) / (delta * delta);
        let mut integral = 0.0;
        for i in 1..times.len() {
            let dt = times[i] - times[i - 1];
            let r0 = (self.r_star)(times[i - 1]).max(1e-12);
            let r1 = (self.r_star)(times[i]).max(1e-12);
            integral += 0.5 * dt * (1.0 / (r0 * r0) + 1.0 / (r1 * r1));
        }
        f0 * (k * integral).exp()
    }
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct AuditReport {
    pub records: Vec<AuditRecord>,
    pub calibration: Option<Calibration>,
}

/// Decompose dI/dt at the `count` most extremal stored points of a run.
pub fn audit(run_dir: &Path, count: usize) -> Result<AuditReport> {
    let scenario = Scenario::parse_file(&run_dir.join("config.echo.cfg")).map_err(|_| {
        Error::Config { key: "run".into(), why: format!("{run_dir:?} is not a completed run") }
    })?;
    let report_text = std::fs::read_to_string(run_dir.join("certificate.json")).map_err(|_| {
        Error::Config { key: "run".into(), why: "missing certificate.json".into() }
    })?;
    let report: RunReport = serde_json::from_str(&report_text)?;
    if report.snapshots == 0 {
        return Err(Error::Config { key: "run".into(), why: "run holds no snapshots".into() });
    }
    let analyzer = build_analyzer(&scenario)?;

    if count == 0 {
        return Ok(AuditReport { records: Vec::new(), calibration: None });
    }

    // collect per-snapshot per-rung candidates ranked by the breach ratio
    struct Candidate {
        snapshot: usize,
        level: usize,
        x: usize,
        ratio: f64,
    }
    let mut candidates = Vec::new();
    for s in 0..report.snapshots {
        let path = run_dir.join(format!("u_{s:06}.bin"));
        if !path.exists() {
            return Err(Error::Config {
                key: "run".into(),
                why: format!("missing snapshot {path:?}"),
            });
        }
        let (u, _t) = field::read_vector(&path)?;
        let f_t = report.certificate.f.get(s).copied().unwrap_or(1.0);
        let rungs = analyzer.scan_profile(&u, scenario.alpha, ScanMode::CampanatoSqrt)?;
        for rung in rungs {
            candidates.push(Candidate {
                snapshot: s,
                level: rung.level,
                x: rung.argmax,
                ratio: rung.value / f_t,
            });
        }
    }
    candidates.sort_by(|a, b| {
        b.ratio
            .partial_cmp(&a.ratio)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.snapshot.cmp(&b.snapshot))
            .then(a.x.cmp(&b.x))
    });
    candidates.truncate(count);

    let mut records = Vec::with_capacity(candidates.len());
    let mut by_snapshot: std::collections::BTreeMap<usize, Vec<&Candidate>> = Default::default();
    for c in &candidates {
        by_snapshot.entry(c.snapshot).or_default().push(c);
    }
    for (s, points) in by_snapshot {
        let (u, t) = field::read_vector(&run_dir.join(format!("u_{s:06}.bin")))?;
        let (b, _) = field::read_vector(&run_dir.join(format!("b_{s:06}.bin")))?;
        let g = report.certificate.g.get(s).copied().unwrap_or(0.0);
        let auditor = Auditor::new(&analyzer, &u, &b, scenario.seminorm, t, g)?;
        for c in points {
            records.push(auditor.record(c.x, c.level));
        }
    }

    let calibration = certificate::calibrate_constants(&records, scenario.seminorm.beta).ok();
    Ok(AuditReport { records, calibration })
}

pub fn write_audit_report(report: &AuditReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("audit.json"), serde_json::to_string_pretty(report)?)?;
    let mut csv = String::from(
        "t,r,x,a_term,a_stencil,d_term,p_term,di_dt_fd,sum_residual,grad_i_norm,i_value,m_local,g_global\n",
    );
    for r in &report.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f64_cell(r.t),
            f64_cell(r.r),
            r.x,
            f64_cell(r.a_term),
            f64_cell(r.a_stencil),
            f64_cell(r.d_term),
            f64_cell(r.p_term),
            f64_cell(r.di_dt_fd),
            f64_cell(r.sum_residual),
            f64_cell(r.grad_i_norm),
            f64_cell(r.i_value),
            f64_cell(r.m_local),
            f64_cell(r.g_global),
        );
    }
    std::fs::write(out.join("audit.csv"), csv)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// Cross-product sweep over `sweep.<key> = v1,v2,...` entries in the config.
/// Every cell writes its own run directory; failures are recorded and the
/// sweep continues. Returns the summary CSV path.
pub fn sweep(config_text: &str, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let keys = crate::scenario::parse_keys(config_text)?;
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    let mut base_lines: Vec<String> = Vec::new();
    for (k, v) in &keys {
        if let Some(param) = k.strip_prefix("sweep.") {
            let values: Vec<String> =
                v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if !values.is_empty() {
                axes.push((param.to_string(), values));
            }
        } else {
            base_lines.push(format!("{k} = {v}"));
        }
    }

    let mut csv = String::from("cell,params,status,f_end,s_max,f_closed_form,error\n");
    let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (param, values) in &axes {
        let mut next = Vec::new();
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                c.push((param.clone(), v.clone()));
                next.push(c);
            }
        }
        cells = next;
    }
    if axes.is_empty() {
        cells.clear(); // empty grid: header-only summary
    }

    for (i, cell) in cells.iter().enumerate() {
        let mut text = base_lines.join("\n");
        text.push('\n');
        for (k, v) in cell {
            let _ = writeln!(text, "{k} = {v}");
        }
        let params: String =
            cell.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        let cell_dir = out_dir.join(format!("cell_{i:03}"));
        let row = match Scenario::parse(&text).and_then(|s| run(&s, &cell_dir)) {
            Ok(outcome) => {
                let cert = &outcome.certificate;
                let f_end = cert.f.last().copied().unwrap_or(f64::NAN);
                let s_max = cert.s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                // closed form for a constant seminorm target
                let f_closed = match (cert.g.first(), cert.times.last()) {
                    (Some(&g0), Some(&t_end))
                        if cert.g.iter().all(|&g| (g - g0).abs() <= 1e-8 * g0.max(1e-30)) =>
                    {
                        let q = 2.0 / (1.0 + cert.spec.beta);
                        format!("{:.17e}", cert.f0 * (2.0 * cert.c_bar * g0.powf(q) * t_end).exp())
                    }
                    _ => String::new(),
                };
                let status = match (&outcome.aborted, cert.holding()) {
                    (Some(_), _) => "aborted",
                    (None, true) => "holding",
                    (None, false) => "breached",
                };
                format!(
                    "{i},{params},{status},{},{},{},\n",
                    f64_cell(f_end),
                    f64_cell(s_max),
                    f_closed
                )
            }
            Err(e) => format!("{i},{params},failed,,,,{}\n", e.to_string().replace(',', ";")),
        };
        csv.push_str(&row);
    }

    let path = out_dir.join("summary.csv");
    std::fs::write(&path, csv)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Calibrate subcommand backing
// ---------------------------------------------------------------------------

pub fn calibrate(scenario: &Scenario, out_dir: &Path) -> Result<Calibration> {
    std::fs::create_dir_all(out_dir)?;
    let analyzer = build_analyzer(scenario)?;
    let corpus = calibration_corpus(
        &scenario.grid,
        &analyzer,
        &scenario.seminorm,
        scenario.alpha,
        scenario.calibration_samples,
        scenario.seed,
    )?;
    let calibration = certificate::calibrate_constants(&corpus, scenario.seminorm.beta)?;
    let report = AuditReport { records: corpus, calibration: Some(calibration.clone()) };
    write_audit_report(&report, out_dir)?;
    std::fs::write(
        out_dir.join("constants.json"),
        serde_json::to_string_pretty(&calibration)?,
    )?;
    Ok(calibration)
}
