//! Browser demo: drive the drift-diffusion solver interactively, watch the
//! field, the multiscale scan profile, and the certificate trajectories.

use driftlab_core::campanato::{Analyzer, ScanMode};
use driftlab_core::certificate::{self, Certificate};
use driftlab_core::dynamics::{self, DriftGenerator, DriftSpec, SimState, StreamTemplate, TemplateMode};
use driftlab_core::error::Error;
use driftlab_core::rng;
use driftlab_core::{ops, Grid, SeminormSpec, VectorField};
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Interactive lab session: one grid, one drift scenario, one certificate.
#[wasm_bindgen]
pub struct DemoLab {
    grid: Grid,
    analyzer: Analyzer,
    generator: DriftGenerator,
    state: SimState,
    drift: VectorField,
    cert: Certificate,
    spec: SeminormSpec,
    alpha: f64,
    g_times: Vec<f64>,
    g_values: Vec<f64>,
}

#[wasm_bindgen]
impl DemoLab {
    /// `scenario` is one of "heat", "bmo", "self_coupled".
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: u32,
        scenario: &str,
        alpha: f64,
        g_target: f64,
        c_bar: f64,
        seed: u32,
    ) -> Result<DemoLab, JsValue> {
        let grid = Grid::new(2, n as usize, 2.0 * std::f64::consts::PI).map_err(js_err)?;
        let analyzer = Analyzer::new(&grid).map_err(js_err)?;
        let spec = SeminormSpec::new(0.0).map_err(js_err)?;

        let mut rng = rng::rng_from_seed(seed as u64);
        let u0 = rng::random_divergence_free(&grid, (n as i64 / 8).clamp(2, 6), 1.0, &mut rng)
            .map_err(js_err)?;

        let drift_spec = match scenario {
            "heat" => DriftSpec::StaticStream { template: StreamTemplate::default(), target: None },
            "bmo" => DriftSpec::StaticStream {
                template: StreamTemplate {
                    modes: vec![
                        TemplateMode { mode: [1, 2, 0], amplitude: 1.0, phase: 0.3 },
                        TemplateMode { mode: [3, -1, 0], amplitude: 0.6, phase: 1.1 },
                        TemplateMode { mode: [-2, 2, 0], amplitude: 0.4, phase: 2.0 },
                    ],
                },
                target: Some((spec, g_target)),
            },
            "self_coupled" => DriftSpec::SelfCoupled,
            other => return Err(JsValue::from_str(&format!("unknown scenario `{other}`"))),
        };
        let generator = DriftGenerator::new(drift_spec, &analyzer).map_err(js_err)?;

        let a0 = analyzer.holder_amplitude(&u0, alpha).map_err(js_err)?.value;
        let f0 = if a0 > 0.0 { a0 } else { 1.0 };
        let mut cert = Certificate::new(alpha, spec, c_bar, f0);

        let state = SimState::new(u0).map_err(js_err)?;
        let drift = generator.at(0.0, Some(&state.u)).map_err(js_err)?;
        let g0 = certificate::g_of_t(&analyzer, &drift, &spec).map_err(js_err)?;
        let (s0, scan) = certificate::breakdown_scan(&analyzer, &state.u, f0, alpha).map_err(js_err)?;
        cert.push(0.0, g0, f0, s0, scan.argmax, scan.radius);

        Ok(DemoLab {
            grid,
            analyzer,
            generator,
            state,
            drift,
            cert,
            spec,
            alpha,
            g_times: vec![0.0],
            g_values: vec![g0],
        })
    }

    /// Advance `steps` solver steps and record the certificate trajectory.
    pub fn advance(&mut self, steps: u32) -> Result<(), JsValue> {
        for _ in 0..steps {
            let b = self.generator.at(self.state.time, Some(&self.state.u)).map_err(js_err)?;
            let dt = dynamics::admissible_dt(&self.grid, &b).min(0.02);
            self.state = dynamics::step(&self.state, &b, dt).map_err(js_err)?;
            self.drift = self.generator.at(self.state.time, Some(&self.state.u)).map_err(js_err)?;
            let g = certificate::g_of_t(&self.analyzer, &self.drift, &self.spec).map_err(js_err)?;
            self.g_times.push(self.state.time);
            self.g_values.push(g);
            let f = *certificate::f_trajectory(
                &self.g_times,
                &self.g_values,
                &self.spec,
                self.cert.c_bar,
                self.cert.f0,
            )
            .map_err(js_err)?
            .last()
            .unwrap();
            let (s, scan) =
                certificate::breakdown_scan(&self.analyzer, &self.state.u, f, self.alpha)
                    .map_err(js_err)?;
            self.cert.push(self.state.time, g, f, s, scan.argmax, scan.radius);
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn grid_n(&self) -> u32 {
        self.grid.points_per_axis() as u32
    }

    pub fn status(&self) -> String {
        if self.cert.holding() {
            "holding".into()
        } else {
            "breached".into()
        }
    }

    /// RGBA image of a field quantity: 0/1 = velocity components,
    /// 2 = speed, 3 = vorticity, 4 = drift speed.
    pub fn field_rgba(&self, what: u32) -> Result<Vec<u8>, JsValue> {
        let n = self.grid.points_per_axis();
        let values: Vec<f64> = match what {
            0 => self.state.u.component(0).samples().to_vec(),
            1 => self.state.u.component(1).samples().to_vec(),
            2 => self.state.u.magnitude().samples().to_vec(),
            3 => {
                let d1 = ops::partial(self.state.u.component(1), 0).map_err(js_err)?;
                let d0 = ops::partial(self.state.u.component(0), 1).map_err(js_err)?;
                d1.samples().iter().zip(d0.samples()).map(|(a, b)| a - b).collect()
            }
            4 => self.drift.magnitude().samples().to_vec(),
            other => return Err(JsValue::from_str(&format!("unknown field code {other}"))),
        };
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let mut rgba = Vec::with_capacity(n * n * 4);
        for v in &values {
            let t = (v / peak).clamp(-1.0, 1.0);
            // signed two-tone map: blue for negative, red for positive
            let (r, g, b) = if t >= 0.0 {
                (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
            } else {
                (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
            };
            rgba.push(r as u8);
            rgba.push(g as u8);
            rgba.push(b as u8);
            rgba.push(255);
        }
        Ok(rgba)
    }

    /// Multiscale amplitude profile of the current field:
    /// flattened (radius, r^{-alpha} sqrt(I) sup) pairs, largest radius first.
    pub fn scan_profile(&self) -> Result<Vec<f64>, JsValue> {
        let rungs = self
            .analyzer
            .scan_profile(&self.state.u, self.alpha, ScanMode::CampanatoSqrt)
            .map_err(js_err)?;
        let mut out = Vec::with_capacity(rungs.len() * 2);
        for r in rungs {
            out.push(r.radius);
            out.push(r.value);
        }
        Ok(out)
    }

    /// Drift seminorm profile: flattened (radius, r^{-beta} M sup) pairs.
    pub fn drift_profile(&self) -> Result<Vec<f64>, JsValue> {
        let rungs = self
            .analyzer
            .scan_profile(&self.drift, self.spec.beta, ScanMode::MorreyCase(self.spec))
            .map_err(js_err)?;
        let mut out = Vec::with_capacity(rungs.len() * 2);
        for r in rungs {
            out.push(r.radius);
            out.push(r.value);
        }
        Ok(out)
    }

    /// Certificate series: flattened rows (t, g, f, S).
    pub fn series(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cert.times.len() * 4);
        for i in 0..self.cert.times.len() {
            out.push(self.cert.times[i]);
            out.push(self.cert.g[i]);
            out.push(self.cert.f[i]);
            out.push(self.cert.s[i]);
        }
        out
    }
}
