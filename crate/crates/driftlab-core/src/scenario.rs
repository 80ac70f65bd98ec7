//! Scenario ingestion: a flat `key = value` configuration with dotted
//! sections, documented in docs/config.md. Validation errors name the
//! offending key.

use crate::campanato::SeminormSpec;
use crate::dynamics::{DriftSpec, Envelope, StreamTemplate, TemplateMode};
use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_DIM};
use crate::rng;
use crate::weight::LADDER_MIN_CELLS;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug)]
pub enum InitSpec {
    Zero,
    /// Divergence-free single mode from a stream function cos(k . x).
    SingleMode { mode: [i64; MAX_DIM], amplitude: f64 },
    /// Classic cellular stream function cos(x_0) cos(x_1).
    TaylorGreen { amplitude: f64 },
    /// Seeded band-limited divergence-free noise.
    RandomBand { max_mode: i64, amplitude: f64 },
    /// Binary dump produced by an earlier run.
    Dump { path: PathBuf },
}

#[derive(Clone, Debug)]
pub enum RStarSpec {
    Constant(f64),
    /// r*(t) = sqrt(T - t); diverging small scales towards the horizon.
    SqrtToHorizon,
}

#[derive(Clone, Debug)]
pub struct EndpointSpec {
    pub eps: f64,
    pub r_star: RStarSpec,
}

/// Everything one run needs. Built by `Scenario::parse` + `validate`.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: Grid,
    pub init: InitSpec,
    pub drift: DriftSpec,
    pub seminorm: SeminormSpec,
    pub alpha: f64,
    pub ladder_min_cells: f64,
    pub total_time: f64,
    pub output_stride: usize,
    pub max_dt: f64,
    pub c_bar_override: Option<f64>,
    pub calibrate_first: bool,
    pub calibration_samples: usize,
    /// Headroom factor on the initial envelope; values below one start the
    /// run inside breach territory on purpose.
    pub f0_scale: f64,
    pub endpoint: Option<EndpointSpec>,
    pub seed: u64,
    /// Raw text the scenario was parsed from, echoed into the run directory.
    pub source: String,
}

fn bad(key: &str, why: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), why: why.into() }
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad(key, format!("cannot parse `{v}` as a number"))),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| bad(key, format!("cannot parse `{v}` as an integer"))),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| bad(key, format!("cannot parse `{v}` as an integer"))),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true") | Some("1") => Ok(Some(true)),
            Some("false") | Some("0") => Ok(Some(false)),
            Some(v) => Err(bad(key, format!("cannot parse `{v}` as a boolean"))),
        }
    }
}

/// Split `key = value` lines; `#` starts a comment.
pub fn parse_keys(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                key: format!("line {}", lineno + 1),
                why: format!("expected `key = value`, got `{line}`"),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_mode_list(key: &str, text: &str) -> Result<Vec<TemplateMode>> {
    let mut out = Vec::new();
    for entry in text.split(';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let parts: Vec<&str> = entry.split(':').collect();
        let mode_part = parts[0];
        let mut mode = [0i64; MAX_DIM];
        for (a, c) in mode_part.split(',').enumerate() {
            if a >= MAX_DIM {
                return Err(bad(key, format!("mode `{mode_part}` has too many axes")));
            }
            mode[a] = c
                .trim()
                .parse::<i64>()
                .map_err(|_| bad(key, format!("cannot parse mode component `{c}`")))?;
        }
        let amplitude = match parts.get(1) {
            None => 1.0,
            Some(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(key, format!("cannot parse amplitude `{v}`")))?,
        };
        let phase = match parts.get(2) {
            None => 0.0,
            Some(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(key, format!("cannot parse phase `{v}`")))?,
        };
        out.push(TemplateMode { mode, amplitude, phase });
    }
    Ok(out)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let keys = Keys { map: parse_keys(text)? };

        let dim = keys.usize("grid.dim")?.unwrap_or(2);
        let n = keys.usize("grid.n")?.unwrap_or(128);
        let length = keys.f64("grid.length")?.unwrap_or(2.0 * std::f64::consts::PI);
        let grid = Grid::new(dim, n, length)
            .map_err(|e| bad("grid", e.to_string()))?;

        let alpha = keys
            .f64("alpha")?
            .ok_or_else(|| bad("alpha", "missing (required, in (0, 1))"))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(bad("alpha", format!("must lie in (0, 1), got {alpha}")));
        }

        let beta = keys.f64("seminorm.beta")?.unwrap_or(0.0);
        let seminorm = SeminormSpec::new(beta)
            .map_err(|e| bad("seminorm.beta", e.to_string()))?;

        let seed = keys.u64("seed")?.unwrap_or(0);

        let init = {
            let amplitude = keys.f64("init.amplitude")?.unwrap_or(1.0);
            match keys.get("init.kind").unwrap_or("taylor_green") {
                "zero" => InitSpec::Zero,
                "taylor_green" => InitSpec::TaylorGreen { amplitude },
                "single_mode" => {
                    let modes = parse_mode_list(
                        "init.mode",
                        keys.get("init.mode").unwrap_or("1,0"),
                    )?;
                    let mode = modes
                        .first()
                        .ok_or_else(|| bad("init.mode", "expected one mode"))?
                        .mode;
                    InitSpec::SingleMode { mode, amplitude }
                }
                "random_band" => {
                    let max_mode = keys.usize("init.max_mode")?.unwrap_or(6) as i64;
                    InitSpec::RandomBand { max_mode, amplitude }
                }
                "dump" => {
                    let path = keys
                        .get("init.path")
                        .ok_or_else(|| bad("init.path", "missing for init.kind = dump"))?;
                    InitSpec::Dump { path: PathBuf::from(path) }
                }
                other => return Err(bad("init.kind", format!("unknown kind `{other}`"))),
            }
        };

        let drift = {
            let template = match keys.get("drift.modes") {
                Some(text) => StreamTemplate { modes: parse_mode_list("drift.modes", text)? },
                None => {
                    let count = keys.usize("drift.random_modes")?.unwrap_or(0);
                    if count > 0 {
                        let max_mode = keys.usize("drift.max_mode")?.unwrap_or(4) as i64;
                        build_random_template(count, max_mode, seed)
                    } else {
                        StreamTemplate::default()
                    }
                }
            };
            let g_target = keys.f64("drift.g_target")?;
            match keys.get("drift.kind").unwrap_or("none") {
                "none" => DriftSpec::StaticStream { template: StreamTemplate::default(), target: None },
                "static_stream" => DriftSpec::StaticStream {
                    template,
                    target: g_target.map(|g| (seminorm, g)),
                },
                "time_modulated" => {
                    let envelope = match keys.get("drift.envelope").unwrap_or("constant") {
                        "constant" => Envelope::Constant(
                            g_target.ok_or_else(|| bad("drift.g_target", "missing"))?,
                        ),
                        "square" => Envelope::SquareWave {
                            low: keys
                                .f64("drift.envelope_low")?
                                .ok_or_else(|| bad("drift.envelope_low", "missing"))?,
                            high: keys
                                .f64("drift.envelope_high")?
                                .ok_or_else(|| bad("drift.envelope_high", "missing"))?,
                            period: keys
                                .f64("drift.envelope_period")?
                                .ok_or_else(|| bad("drift.envelope_period", "missing"))?,
                        },
                        other => {
                            return Err(bad("drift.envelope", format!("unknown envelope `{other}`")))
                        }
                    };
                    DriftSpec::TimeModulated { template, spec: seminorm, envelope }
                }
                "mollified" => {
                    let eps = keys
                        .f64("drift.eps")?
                        .ok_or_else(|| bad("drift.eps", "missing for drift.kind = mollified"))?;
                    DriftSpec::Mollified { template, target: g_target.map(|g| (seminorm, g)), eps }
                }
                "self_coupled" => DriftSpec::SelfCoupled,
                other => return Err(bad("drift.kind", format!("unknown kind `{other}`"))),
            }
        };

        let total_time = keys.f64("time.total")?.unwrap_or(0.25);
        if !(total_time > 0.0) {
            return Err(bad("time.total", format!("must be positive, got {total_time}")));
        }
        let output_stride = keys.usize("time.stride")?.unwrap_or(1).max(1);
        let max_dt = keys.f64("time.max_dt")?.unwrap_or(crate::dynamics::DT_CAP);
        if !(max_dt > 0.0) {
            return Err(bad("time.max_dt", format!("must be positive, got {max_dt}")));
        }

        let endpoint = match (keys.f64("endpoint.eps")?, keys.get("endpoint.rstar")) {
            (None, None) => None,
            (eps, rstar) => {
                let eps = eps.ok_or_else(|| bad("endpoint.eps", "missing"))?;
                let r_star = match rstar.unwrap_or("sqrt_horizon") {
                    "sqrt_horizon" => RStarSpec::SqrtToHorizon,
                    other => match other.strip_prefix("const:") {
                        Some(v) => RStarSpec::Constant(v.parse::<f64>().map_err(|_| {
                            bad("endpoint.rstar", format!("cannot parse `{v}` as a number"))
                        })?),
                        None => {
                            return Err(bad(
                                "endpoint.rstar",
                                format!("expected `const:<r>` or `sqrt_horizon`, got `{other}`"),
                            ))
                        }
                    },
                };
                Some(EndpointSpec { eps, r_star })
            }
        };
        if endpoint.is_some() && beta != -1.0 {
            return Err(bad("endpoint.eps", "endpoint parameters require seminorm.beta = -1"));
        }

        Ok(Scenario {
            grid,
            init,
            drift,
            seminorm,
            alpha,
            ladder_min_cells: keys.f64("ladder.min_cells")?.unwrap_or(LADDER_MIN_CELLS),
            total_time,
            output_stride,
            max_dt,
            c_bar_override: keys.f64("certificate.c_bar")?,
            calibrate_first: keys.bool("certificate.calibrate_first")?.unwrap_or(false),
            calibration_samples: keys.usize("certificate.calibration_samples")?.unwrap_or(24),
            f0_scale: {
                let s = keys.f64("certificate.f0_scale")?.unwrap_or(1.0);
                if !(s > 0.0) {
                    return Err(bad("certificate.f0_scale", format!("must be positive, got {s}")));
                }
                s
            },
            endpoint,
            seed,
            source: text.to_string(),
        })
    }

    pub fn parse_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

/// Seeded random stream template with `count` modes below `max_mode`.
pub fn build_random_template(count: usize, max_mode: i64, seed: u64) -> StreamTemplate {
    let mut rng = rng::rng_from_seed(seed ^ 0x5eed_d21f);
    let mut modes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut mode = [0i64; MAX_DIM];
        loop {
            for m in mode.iter_mut() {
                *m = (rng::uniform_symmetric(&mut rng) * max_mode as f64).round() as i64;
            }
            if mode.iter().any(|&m| m != 0) {
                break;
            }
        }
        let amplitude = 0.5 + 0.5 * rng::uniform_symmetric(&mut rng).abs();
        let phase = std::f64::consts::PI * rng::uniform_symmetric(&mut rng);
        modes.push(TemplateMode { mode, amplitude, phase });
    }
    StreamTemplate { modes }
}
