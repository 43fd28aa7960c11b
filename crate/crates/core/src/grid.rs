use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A regular grid of `nx * ny` points, stored row-major (`index = row * nx + col`).
///
/// Point `(col, row)` sits at `origin + spacing * (col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    #[serde(default)]
    pub origin: (f64, f64),
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        let g = Self { nx, ny, spacing, origin: (0.0, 0.0) };
        g.validate()?;
        Ok(g)
    }

    pub fn square(n: usize, spacing: f64) -> Result<Self> {
        Self::new(n, n, spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(invalid("grid must have at least one cell"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(invalid("grid spacing must be positive and finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.nx + col
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// Position of a grid point in field units.
    pub fn position(&self, index: usize) -> (f64, f64) {
        let (c, r) = self.coords(index);
        (
            self.origin.0 + self.spacing * c as f64,
            self.origin.1 + self.spacing * r as f64,
        )
    }

    /// Displacement between two grid points in field units.
    pub fn displacement(&self, a: usize, b: usize) -> (f64, f64) {
        let (ca, ra) = self.coords(a);
        let (cb, rb) = self.coords(b);
        (
            self.spacing * (ca as f64 - cb as f64),
            self.spacing * (ra as f64 - rb as f64),
        )
    }

    pub fn contains(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.nx && (row as usize) < self.ny
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(0, 3, 1.0).is_err());
        assert!(GridSpec::new(3, 3, 0.0).is_err());
        assert!(GridSpec::new(3, 3, f64::NAN).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::new(5, 3, 0.5).unwrap();
        for i in 0..g.len() {
            let (c, r) = g.coords(i);
            assert_eq!(g.index(c, r), i);
        }
        assert_eq!(g.position(g.index(2, 1)), (1.0, 0.5));
    }
}
