//! Field samples on grids: exact and spectral samplers, the Ornstein-Uhlenbeck
//! partner, and the binary field file format.

use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::kernel::StationaryKernel;
use crate::rng::rng_from_seed;

/// Largest grid the dense exact sampler accepts.
pub const EXACT_MAX_POINTS: usize = 4096;
/// Diagonal jitter added before the Cholesky factorization.
pub const COVARIANCE_JITTER: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Spectral,
    Exact,
    /// Built from other samples (e.g. an OU partner).
    Derived,
    /// Values supplied directly by the caller.
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub kernel: Option<StationaryKernel>,
    pub seed: u64,
    pub sampler: SamplerKind,
}

impl FieldSample {
    /// Wraps caller-supplied values (row-major).
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Self { grid, values, kernel: None, seed: 0, sampler: SamplerKind::Explicit })
    }

    /// Evaluates `func(x, y)` at every grid point, `(x, y)` in field units.
    pub fn from_fn(grid: GridSpec, func: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| {
            let (x, y) = grid.position(i);
            func(x, y)
        });
        Self::from_values(grid, values.collect())
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[self.grid.index(col, row)]
    }

    /// Same sample with `func` applied pointwise.
    pub fn map(&self, func: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = func(*v));
        out.sampler = SamplerKind::Derived;
        out
    }

    /// Bilinear interpolation at a point in field units; `None` outside the grid hull.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let u = (x - g.origin.0) / g.spacing;
        let v = (y - g.origin.1) / g.spacing;
        if !(u >= 0.0 && v >= 0.0 && u <= (g.nx - 1) as f64 && v <= (g.ny - 1) as f64) {
            return None;
        }
        let c0 = (u.floor() as usize).min(g.nx.saturating_sub(2));
        let r0 = (v.floor() as usize).min(g.ny.saturating_sub(2));
        let c1 = (c0 + 1).min(g.nx - 1);
        let r1 = (r0 + 1).min(g.ny - 1);
        let tu = u - c0 as f64;
        let tv = v - r0 as f64;
        let a = self.value(c0, r0) * (1.0 - tu) + self.value(c1, r0) * tu;
        let b = self.value(c0, r1) * (1.0 - tu) + self.value(c1, r1) * tu;
        Some(a * (1.0 - tv) + b * tv)
    }

    /// Keys cubic-convolution interpolation (a = -1/2) at a point in field
    /// units; `None` unless the full 4x4 stencil lies in the grid.
    pub fn interpolate_cubic(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let u = (x - g.origin.0) / g.spacing;
        let v = (y - g.origin.1) / g.spacing;
        if !(u >= 1.0 && v >= 1.0 && u <= g.nx as f64 - 2.0 && v <= g.ny as f64 - 2.0) {
            return None;
        }
        let c0 = (u.floor() as usize).min(g.nx - 3);
        let r0 = (v.floor() as usize).min(g.ny - 3);
        let wu = keys_weights(u - c0 as f64);
        let wv = keys_weights(v - r0 as f64);
        let mut acc = 0.0;
        for (j, wy) in wv.iter().enumerate() {
            let row: f64 = wu.iter().enumerate().map(|(i, wx)| wx * self.value(c0 + i - 1, r0 + j - 1)).sum();
            acc += wy * row;
        }
        Some(acc)
    }
}

fn keys_weights(t: f64) -> [f64; 4] {
    let w = |d: f64| {
        let d = d.abs();
        if d < 1.0 {
            1.5 * d * d * d - 2.5 * d * d + 1.0
        } else if d < 2.0 {
            -0.5 * d * d * d + 2.5 * d * d - 4.0 * d + 2.0
        } else {
            0.0
        }
    };
    [w(t + 1.0), w(t), w(1.0 - t), w(2.0 - t)]
}

/// Exact sampler: the Cholesky factor of the grid covariance matrix, computed
/// once and reused for every draw.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    kernel: StationaryKernel,
    grid: GridSpec,
    /// Lower-triangular factor, packed row by row.
    factor: Vec<f64>,
}

impl ExactSampler {
    pub fn new(kernel: &StationaryKernel, grid: &GridSpec) -> Result<Self> {
        kernel.validate()?;
        grid.validate()?;
        let n = grid.len();
        if n > EXACT_MAX_POINTS {
            return Err(invalid(format!("exact sampler limited to {EXACT_MAX_POINTS} points, grid has {n}")));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let d = grid.displacement(i, j);
            kernel.radial(d.0.hypot(d.1)) + if i == j { COVARIANCE_JITTER } else { 0.0 }
        });
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Factorization(format!("{kernel} on {}x{} grid", grid.nx, grid.ny)))?;
        let l = chol.l();
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                factor.push(l[(i, j)]);
            }
        }
        Ok(Self { kernel: kernel.clone(), grid: *grid, factor })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kernel(&self) -> &StationaryKernel {
        &self.kernel
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let n = self.grid.len();
        let mut rng = rng_from_seed(seed);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut values = Vec::with_capacity(n);
        let mut offset = 0;
        for i in 0..n {
            let row = &self.factor[offset..offset + i + 1];
            values.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
            offset += i + 1;
        }
        FieldSample { grid: self.grid, values, kernel: Some(self.kernel.clone()), seed, sampler: SamplerKind::Exact }
    }
}

/// Draws one exact sample; factorizes the covariance on every call, so prefer
/// [`ExactSampler`] for repeated draws.
pub fn sample_exact(kernel: &StationaryKernel, grid: &GridSpec, seed: u64) -> Result<FieldSample> {
    Ok(ExactSampler::new(kernel, grid)?.sample(seed))
}

/// Spectral (random-wave) sampler: `sqrt(2/M) sum_k cos(<x, w_k> + phi_k)`
/// with frequencies `w_k` drawn from the kernel's spectral measure.
#[derive(Clone, Debug)]
pub struct SpectralSampler {
    kernel: StationaryKernel,
    grid: GridSpec,
    n_waves: usize,
}

impl SpectralSampler {
    pub fn new(kernel: &StationaryKernel, grid: &GridSpec, n_waves: usize) -> Result<Self> {
        kernel.validate()?;
        grid.validate()?;
        if n_waves == 0 {
            return Err(invalid("n_waves must be at least 1"));
        }
        if matches!(kernel, StationaryKernel::ExplicitMatrixFree { .. }) {
            return Err(Error::UnsupportedKernel { op: "sample_spectral", kernel: kernel.name() });
        }
        Ok(Self { kernel: kernel.clone(), grid: *grid, n_waves })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn frequency<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match &self.kernel {
            StationaryKernel::Rpw => {
                let theta = rng.random::<f64>() * TAU;
                (theta.cos(), theta.sin())
            }
            StationaryKernel::Gaussian { scale } => {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                (a / scale, b / scale)
            }
            StationaryKernel::ExplicitMatrixFree { .. } => unreachable!("rejected in new"),
        }
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let g = &self.grid;
        let mut rng = rng_from_seed(seed);
        let mut values = vec![0.0; g.len()];
        let (mut ca, mut sa) = (vec![0.0; g.nx], vec![0.0; g.nx]);
        let (mut cb, mut sb) = (vec![0.0; g.ny], vec![0.0; g.ny]);
        for _ in 0..self.n_waves {
            let (wx, wy) = self.frequency(&mut rng);
            let phase = rng.random::<f64>() * TAU;
            for c in 0..g.nx {
                let a = wx * (g.origin.0 + g.spacing * c as f64) + phase;
                ca[c] = a.cos();
                sa[c] = a.sin();
            }
            for r in 0..g.ny {
                let b = wy * (g.origin.1 + g.spacing * r as f64);
                cb[r] = b.cos();
                sb[r] = b.sin();
            }
            for r in 0..g.ny {
                let (cbr, sbr) = (cb[r], sb[r]);
                let row = &mut values[r * g.nx..(r + 1) * g.nx];
                for ((v, &x), &y) in row.iter_mut().zip(&ca).zip(&sa) {
                    *v += x * cbr - y * sbr;
                }
            }
        }
        let amp = (2.0 / self.n_waves as f64).sqrt();
        values.iter_mut().for_each(|v| *v *= amp);
        FieldSample { grid: *g, values, kernel: Some(self.kernel.clone()), seed, sampler: SamplerKind::Spectral }
    }
}

pub fn sample_spectral(kernel: &StationaryKernel, grid: &GridSpec, seed: u64, n_waves: usize) -> Result<FieldSample> {
    Ok(SpectralSampler::new(kernel, grid, n_waves)?.sample(seed))
}

/// Either sampler behind one interface.
#[derive(Clone, Debug)]
pub enum Sampler {
    Exact(ExactSampler),
    Spectral(SpectralSampler),
}

impl Sampler {
    pub fn sample(&self, seed: u64) -> FieldSample {
        match self {
            Self::Exact(s) => s.sample(seed),
            Self::Spectral(s) => s.sample(seed),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Self::Exact(s) => s.grid(),
            Self::Spectral(s) => s.grid(),
        }
    }

    pub fn kind(&self) -> SamplerKind {
        match self {
            Self::Exact(_) => SamplerKind::Exact,
            Self::Spectral(_) => SamplerKind::Spectral,
        }
    }
}

/// `s * f + sqrt(1 - s^2) * fresh`, pointwise. With `s = exp(-t)` this is the
/// Ornstein-Uhlenbeck interpolation at time `t`.
pub fn ou_partner(f: &FieldSample, fresh: &FieldSample, s: f64) -> Result<FieldSample> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("OU parameter s={s} outside [0, 1]")));
    }
    if f.grid != fresh.grid {
        return Err(Error::GridMismatch("OU partner grids differ".into()));
    }
    if f.kernel != fresh.kernel {
        return Err(Error::GridMismatch("OU partner kernels differ".into()));
    }
    let values = if s == 1.0 {
        f.values.clone()
    } else if s == 0.0 {
        fresh.values.clone()
    } else {
        let c = (1.0 - s * s).sqrt();
        f.values.iter().zip(&fresh.values).map(|(a, b)| s * a + c * b).collect()
    };
    Ok(FieldSample { grid: f.grid, values, kernel: f.kernel.clone(), seed: f.seed, sampler: SamplerKind::Derived })
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    nx: usize,
    ny: usize,
    spacing: f64,
    kernel: Option<StationaryKernel>,
    seed: u64,
    sampler: SamplerKind,
}

/// Writes the field file: one JSON header line, then `nx * ny` little-endian
/// f64 values, row-major.
pub fn write_field<W: Write>(mut w: W, f: &FieldSample) -> Result<()> {
    let header = FieldHeader {
        nx: f.grid.nx,
        ny: f.grid.ny,
        spacing: f.grid.spacing,
        kernel: f.kernel.clone(),
        seed: f.seed,
        sampler: f.sampler,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<FieldSample> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::FieldFile("header must be newline-terminated".into()));
    }
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    let grid = GridSpec::new(header.nx, header.ny, header.spacing)?;
    let mut buf = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut buf).map_err(|e| Error::FieldFile(format!("truncated payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::FieldFile("trailing bytes after payload".into()));
    }
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FieldSample { grid, values, kernel: header.kernel, seed: header.seed, sampler: header.sampler })
}
