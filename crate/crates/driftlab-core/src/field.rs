//! Scalar and vector sample fields with a lazily populated spectral view.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Grid, MAX_DIM};
use num_complex::Complex64;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

/// Real-valued samples on the lattice. The spectral cache is filled at most
/// once (single writer) and is always the exact transform of the samples.
#[derive(Debug)]
pub struct ScalarField {
    grid: Grid,
    samples: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        let copy = ScalarField {
            grid: self.grid.clone(),
            samples: self.samples.clone(),
            spectrum: OnceLock::new(),
        };
        if let Some(s) = self.spectrum.get() {
            let _ = copy.spectrum.set(s.clone());
        }
        copy
    }
}

impl ScalarField {
    pub fn from_samples(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.point_count() {
            return Err(Error::InvalidGrid(format!(
                "sample count {} does not match grid ({} points)",
                samples.len(),
                grid.point_count()
            )));
        }
        Ok(Self { grid, samples, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            samples: vec![0.0; grid.point_count()],
            spectrum: OnceLock::new(),
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            samples: vec![value; grid.point_count()],
            spectrum: OnceLock::new(),
        }
    }

    /// Evaluate `f` at every lattice position.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let samples = (0..grid.point_count())
            .map(|idx| {
                let c = grid.coords_of(idx);
                let p = grid.position(&c[..grid.dim()]);
                f(&p[..grid.dim()])
            })
            .collect();
        Self { grid: grid.clone(), samples, spectrum: OnceLock::new() }
    }

    /// Build from spectral coefficients (real part of the reconstruction).
    /// The cache is left empty so it always mirrors the stored real samples,
    /// even when `spectrum` carried a small imaginary residue.
    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Self {
        let samples = fft::inverse(grid, &spectrum);
        Self { grid: grid.clone(), samples, spectrum: OnceLock::new() }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.samples[idx]
    }

    /// Spectral coefficients, computed on first use.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| Arc::new(fft::forward(&self.grid, &self.samples)))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// L2 norm with the cell-volume measure.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what })
        }
    }

    pub fn scale(&self, factor: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v * factor).collect(),
            spectrum: OnceLock::new(),
        }
    }
}

/// Vector field with one scalar component per grid axis.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
    divergence_free: bool,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidGrid("vector field needs at least one component".into()));
        }
        let grid = components[0].grid().clone();
        if components.len() != grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            c.grid().same_as(&grid)?;
        }
        Ok(Self { components, divergence_free: false })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let components = (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect();
        Self { components, divergence_free: true }
    }

    pub fn from_fns(grid: &Grid, f: impl Fn(usize, &[f64]) -> f64) -> Self {
        let components = (0..grid.dim())
            .map(|i| ScalarField::from_fn(grid, |p| f(i, p)))
            .collect();
        Self { components, divergence_free: false }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    #[inline]
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    #[inline]
    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn with_divergence_flag(mut self, flag: bool) -> Self {
        self.divergence_free = flag;
        self
    }

    /// Vector value at a lattice index.
    #[inline]
    pub fn value(&self, idx: usize) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c.value(idx);
        }
        v
    }

    pub fn max_abs(&self) -> f64 {
        // max over lattice of the Euclidean norm
        let n = self.grid().point_count();
        let mut m: f64 = 0.0;
        for idx in 0..n {
            let mut s = 0.0;
            for c in &self.components {
                let v = c.value(idx);
                s += v * v;
            }
            m = m.max(s);
        }
        m.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let x = c.l2_norm();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn mean(&self) -> [f64; MAX_DIM] {
        let mut m = [0.0; MAX_DIM];
        for (a, c) in self.components.iter().enumerate() {
            m[a] = c.mean();
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what })
        }
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| c.scale(factor)).collect(),
            divergence_free: self.divergence_free,
        }
    }

    /// Pointwise Euclidean norm as a scalar field.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid().clone();
        let n = grid.point_count();
        let mut out = vec![0.0; n];
        for (o, idx) in out.iter_mut().zip(0..n) {
            let mut s = 0.0;
            for c in &self.components {
                let v = c.value(idx);
                s += v * v;
            }
            *o = s.sqrt();
        }
        ScalarField { grid, samples: out, spectrum: OnceLock::new() }
    }
}

// ---------------------------------------------------------------------------
// Binary dump format: flat little-endian f64 payload in lattice row-major
// order (components concatenated), plus a text sidecar `<path>.meta`
// holding key = value lines: dim, n, length, components, time.
// ---------------------------------------------------------------------------

pub fn write_field(path: &Path, components: &[&ScalarField], time: f64) -> Result<()> {
    let grid = components
        .first()
        .ok_or_else(|| Error::InvalidGrid("dump needs at least one component".into()))?
        .grid();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for c in components {
        c.grid().same_as(grid)?;
        for v in c.samples() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let meta = format!(
        "dim = {}\nn = {}\nlength = {:.17e}\ncomponents = {}\ntime = {:.17e}\n",
        grid.dim(),
        grid.points_per_axis(),
        grid.length(),
        components.len(),
        time
    );
    std::fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn write_scalar(path: &Path, f: &ScalarField, time: f64) -> Result<()> {
    write_field(path, &[f], time)
}

pub fn write_vector(path: &Path, v: &VectorField, time: f64) -> Result<()> {
    let refs: Vec<&ScalarField> = v.components().iter().collect();
    write_field(path, &refs, time)
}

pub struct FieldDump {
    pub grid: Grid,
    pub components: Vec<ScalarField>,
    pub time: f64,
}

pub fn read_field(path: &Path) -> Result<FieldDump> {
    let meta_path = sidecar_path(path);
    let meta = BufReader::new(std::fs::File::open(&meta_path)?);
    let mut dim = None;
    let mut n = None;
    let mut length = None;
    let mut components = None;
    let mut time = 0.0f64;
    for line in meta.lines() {
        let line = line?;
        let Some((key, value)) = line.split_once('=') else { continue };
        let key = key.trim();
        let value = value.trim();
        match key {
            "dim" => dim = Some(parse_meta(key, value)? as usize),
            "n" => n = Some(parse_meta(key, value)? as usize),
            "length" => length = Some(parse_meta(key, value)?),
            "components" => components = Some(parse_meta(key, value)? as usize),
            "time" => time = parse_meta(key, value)?,
            _ => {}
        }
    }
    let missing = |key: &str| Error::Config { key: key.into(), why: "missing from sidecar".into() };
    let grid = Grid::new(
        dim.ok_or_else(|| missing("dim"))?,
        n.ok_or_else(|| missing("n"))?,
        length.ok_or_else(|| missing("length"))?,
    )?;
    let comp_count = components.ok_or_else(|| missing("components"))?;

    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let expected = comp_count * grid.point_count() * 8;
    if raw.len() != expected {
        return Err(Error::Config {
            key: "components".into(),
            why: format!("payload is {} bytes, sidecar implies {}", raw.len(), expected),
        });
    }
    let mut fields = Vec::with_capacity(comp_count);
    for c in 0..comp_count {
        let start = c * grid.point_count() * 8;
        let samples: Vec<f64> = raw[start..start + grid.point_count() * 8]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        fields.push(ScalarField::from_samples(grid.clone(), samples)?);
    }
    Ok(FieldDump { grid, components: fields, time })
}

pub fn read_vector(path: &Path) -> Result<(VectorField, f64)> {
    let dump = read_field(path)?;
    if dump.components.len() != dump.grid.dim() {
        return Err(Error::Config {
            key: "components".into(),
            why: format!(
                "expected {} components for a vector field, found {}",
                dump.grid.dim(),
                dump.components.len()
            ),
        });
    }
    let time = dump.time;
    Ok((VectorField::new(dump.components)?, time))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    std::path::PathBuf::from(os)
}

fn parse_meta(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::Config {
        key: key.into(),
        why: format!("cannot parse `{value}` as a number"),
    })
}
