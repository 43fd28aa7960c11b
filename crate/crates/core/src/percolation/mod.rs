//! Discrete excursion sets on the square lattice: binarization, component
//! labelling, the crossing/circuit/X events, and Monte Carlo event
//! probabilities.
//!
//! The excursion set uses 4-connectivity and its complement 8-connectivity,
//! so a rectangle always has exactly one of an active left-right crossing and
//! an inactive top-bottom crossing.

pub mod event;
pub mod geometry;

use std::collections::VecDeque;
use std::time::Instant;

use crate::error::Result;
use crate::field::{FieldSample, Sampler};
use crate::grid::GridSpec;
use crate::montecarlo::run_replicates;
use crate::rng::{derive_seed, tag};
use crate::stats::{proportion, EstimatorReport};

pub use event::{annulus_band, has_event, has_event_unchecked, BandCell, EventSpec};
pub use geometry::{BoundaryArc, Rect, Side, Transform};

/// A binary configuration on a grid: `true` cells belong to the excursion set.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub grid: GridSpec,
    pub active: Vec<bool>,
}

impl Config {
    pub fn new(grid: GridSpec, active: Vec<bool>) -> Self {
        assert_eq!(grid.len(), active.len(), "config size mismatch");
        Self { grid, active }
    }

    pub fn filled(nx: usize, ny: usize, value: bool) -> Self {
        let grid = GridSpec { nx, ny, spacing: 1.0, origin: (0.0, 0.0) };
        Self { grid, active: vec![value; nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(i64, i64) -> bool) -> Self {
        let grid = GridSpec { nx, ny, spacing: 1.0, origin: (0.0, 0.0) };
        let active = (0..nx * ny).map(|i| f((i % nx) as i64, (i / nx) as i64)).collect();
        Self { grid, active }
    }

    pub fn get(&self, c: i64, r: i64) -> bool {
        self.grid.contains(c, r) && self.active[self.grid.index(c as usize, r as usize)]
    }

    pub fn set(&mut self, c: i64, r: i64, v: bool) {
        let i = self.grid.index(c as usize, r as usize);
        self.active[i] = v;
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Cellwise `self <= other`.
    pub fn le(&self, other: &Config) -> bool {
        self.active.iter().zip(&other.active).all(|(a, b)| !*a || *b)
    }

    /// Moves every cell through `t` into an `nx x ny` grid; cells landing
    /// outside are dropped and unreached cells are inactive.
    pub fn transformed(&self, t: &Transform, nx: usize, ny: usize) -> Config {
        let mut out = Config::filled(nx, ny, false);
        out.grid.spacing = self.grid.spacing;
        for i in 0..self.active.len() {
            if self.active[i] {
                let (c, r) = self.grid.coords(i);
                let (x, y) = t.apply_cell((c as i64, r as i64));
                if out.grid.contains(x, y) {
                    out.set(x, y, true);
                }
            }
        }
        out
    }
}

/// `active(v) = f(v) >= -level`.
pub fn binarize(f: &FieldSample, level: f64) -> Config {
    Config { grid: f.grid, active: f.values.iter().map(|&v| v >= -level).collect() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Self::Four => &event::N4,
            Self::Eight => &event::N8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Components {
    /// Component id per cell, `None` for inactive cells.
    pub labels: Vec<Option<u32>>,
    pub sizes: Vec<usize>,
    /// Largest distance between member cell centres, in field units.
    pub diameters: Vec<f64>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Labels the active components in row-major discovery order.
pub fn label_components(c: &Config, connectivity: Connectivity) -> Components {
    let g = c.grid;
    let mut labels = vec![None; g.len()];
    let mut sizes = Vec::new();
    let mut diameters = Vec::new();
    for start in 0..g.len() {
        if !c.active[start] || labels[start].is_some() {
            continue;
        }
        let id = sizes.len() as u32;
        labels[start] = Some(id);
        // Per-row extreme columns are enough for the diameter: the farthest
        // pair of a finite point set lies on its convex hull.
        let mut extremes: Vec<Option<(usize, usize)>> = vec![None; g.ny];
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (col, row) = g.coords(i);
            extremes[row] = Some(match extremes[row] {
                None => (col, col),
                Some((lo, hi)) => (lo.min(col), hi.max(col)),
            });
            for &(dx, dy) in connectivity.offsets() {
                let (nc, nr) = (col as i64 + dx, row as i64 + dy);
                if g.contains(nc, nr) {
                    let j = g.index(nc as usize, nr as usize);
                    if c.active[j] && labels[j].is_none() {
                        labels[j] = Some(id);
                        queue.push_back(j);
                    }
                }
            }
        }
        let pts: Vec<(f64, f64)> = extremes
            .iter()
            .enumerate()
            .filter_map(|(r, e)| e.map(|(lo, hi)| (r, lo, hi)))
            .flat_map(|(r, lo, hi)| [(lo as f64, r as f64), (hi as f64, r as f64)])
            .collect();
        let mut diam2: f64 = 0.0;
        for (k, a) in pts.iter().enumerate() {
            for b in &pts[k + 1..] {
                diam2 = diam2.max((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2));
            }
        }
        sizes.push(size);
        diameters.push(diam2.sqrt() * g.spacing);
    }
    Components { labels, sizes, diameters }
}

/// Fraction of `n` independent fields, each binarized at `level`, on which
/// `e` occurs. Replicate `i` samples with seed `derive_seed(master_seed, i, FIELD)`.
pub fn estimate_event_probability(
    sampler: &Sampler,
    e: &EventSpec,
    level: f64,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<EstimatorReport> {
    let started = Instant::now();
    let g = sampler.grid();
    e.check_within(g.nx, g.ny)?;
    let hits = run_replicates(n.max(1), workers, |i| {
        let f = sampler.sample(derive_seed(master_seed, i, tag::FIELD));
        has_event_unchecked(&binarize(&f, level), e)
    })?;
    let k = hits.iter().filter(|h| **h).count();
    let (p, se) = proportion(k, n.max(1));
    Ok(EstimatorReport::new(p, se, n.max(1), master_seed).with_meta("level", level).timed(started))
}
