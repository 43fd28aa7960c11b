//! Cell rectangles, their boundary cycles, arcs on them, and the lattice
//! symmetries (translations, quarter turns, axis reflections).
//!
//! Cell `(c, r)` occupies the unit square `[c, c+1] x [r, r+1]`; rectangle
//! corners are lattice points.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub w: i64,
    pub h: i64,
}

/// The four sides of a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// A closed arc of a rectangle's boundary: the `len` unit segments starting at
/// boundary point `start`, walking counter-clockwise, together with their
/// endpoints. `len == 0` is a single boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub start: i64,
    pub len: i64,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, w: i64, h: i64) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn square(x0: i64, y0: i64, side: i64) -> Self {
        Self::new(x0, y0, side, side)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w < 1 || self.h < 1 {
            return Err(invalid(format!("rectangle {self:?} must have positive size")));
        }
        Ok(())
    }

    /// Number of unit segments (equivalently, lattice points) on the boundary.
    pub fn perimeter(&self) -> i64 {
        2 * (self.w + self.h)
    }

    pub fn contains_cell(&self, c: i64, r: i64) -> bool {
        c >= self.x0 && r >= self.y0 && c < self.x0 + self.w && r < self.y0 + self.h
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.y0..self.y0 + self.h).flat_map(move |r| (self.x0..self.x0 + self.w).map(move |c| (c, r)))
    }

    /// Boundary lattice point `i` (taken modulo the perimeter), counter-clockwise
    /// from the bottom-left corner.
    pub fn point(&self, i: i64) -> (i64, i64) {
        let (w, h) = (self.w, self.h);
        let i = i.rem_euclid(self.perimeter());
        if i <= w {
            (self.x0 + i, self.y0)
        } else if i <= w + h {
            (self.x0 + w, self.y0 + i - w)
        } else if i <= 2 * w + h {
            (self.x0 + w - (i - w - h), self.y0 + h)
        } else {
            (self.x0, self.y0 + h - (i - 2 * w - h))
        }
    }

    /// Index of a boundary lattice point, if it is on the boundary.
    pub fn point_index(&self, p: (i64, i64)) -> Option<i64> {
        let (w, h) = (self.w, self.h);
        let (x, y) = (p.0 - self.x0, p.1 - self.y0);
        if y == 0 && (0..=w).contains(&x) {
            Some(x)
        } else if x == w && (0..=h).contains(&y) {
            Some(w + y)
        } else if y == h && (0..=w).contains(&x) {
            Some(w + h + (w - x))
        } else if x == 0 && (0..=h).contains(&y) {
            Some((2 * w + h + (h - y)) % self.perimeter())
        } else {
            None
        }
    }

    /// The cell inside the rectangle adjacent to boundary segment `i`.
    pub fn segment_cell(&self, i: i64) -> (i64, i64) {
        let (w, h) = (self.w, self.h);
        let i = i.rem_euclid(self.perimeter());
        if i < w {
            (self.x0 + i, self.y0)
        } else if i < w + h {
            (self.x0 + w - 1, self.y0 + i - w)
        } else if i < 2 * w + h {
            (self.x0 + w - 1 - (i - w - h), self.y0 + h - 1)
        } else {
            (self.x0, self.y0 + h - 1 - (i - 2 * w - h))
        }
    }

    /// The closed sub-arc of `side` between coordinates `from <= to` (x for
    /// bottom/top, y for left/right), clamped to the side.
    pub fn side_arc(&self, side: Side, from: i64, to: i64) -> Result<BoundaryArc> {
        let (lo, hi) = match side {
            Side::Bottom | Side::Top => (self.x0, self.x0 + self.w),
            Side::Left | Side::Right => (self.y0, self.y0 + self.h),
        };
        let (from, to) = (from.max(lo), to.min(hi));
        if from > to {
            return Err(invalid(format!("arc [{from}, {to}] misses the {side:?} side")));
        }
        let start = match side {
            Side::Bottom => from - self.x0,
            Side::Right => self.w + (from - self.y0),
            Side::Top => self.w + self.h + (self.x0 + self.w - to),
            Side::Left => 2 * self.w + self.h + (self.y0 + self.h - to),
        };
        Ok(BoundaryArc { start: start.rem_euclid(self.perimeter()), len: to - from })
    }

    pub fn full_side(&self, side: Side) -> BoundaryArc {
        self.side_arc(side, i64::MIN, i64::MAX).expect("full side is non-empty")
    }
}

impl BoundaryArc {
    pub fn validate(&self, rect: &Rect) -> Result<()> {
        let p = rect.perimeter();
        if self.start < 0 || self.start >= p || self.len < 0 || self.len >= p {
            return Err(invalid(format!("arc {self:?} does not fit a boundary of length {p}")));
        }
        Ok(())
    }

    /// Boundary point indices of the closed arc, in order.
    pub fn point_indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.start..=self.start + self.len
    }

    /// Cells of `rect` touching the closed arc: the cells of its segments plus
    /// the cells touching its two endpoints.
    pub fn closure_cells(&self, rect: &Rect) -> Vec<(i64, i64)> {
        let p = rect.perimeter();
        let mut cells: Vec<(i64, i64)> = if self.len + 2 >= p {
            (0..p).map(|i| rect.segment_cell(i)).collect()
        } else {
            (self.start - 1..=self.start + self.len).map(|i| rect.segment_cell(i)).collect()
        };
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// True when the closed arcs share a boundary point.
    pub fn meets(&self, other: &BoundaryArc, rect: &Rect) -> bool {
        let p = rect.perimeter();
        let within = |a: &BoundaryArc, i: i64| (i - a.start).rem_euclid(p) <= a.len;
        within(other, self.start) || within(self, other.start)
    }

    /// The open arc running counter-clockwise from the end of `self` to the
    /// start of `next`, as a closed arc (its closure).
    pub fn gap_to(&self, next: &BoundaryArc, rect: &Rect) -> BoundaryArc {
        let p = rect.perimeter();
        let start = (self.start + self.len).rem_euclid(p);
        BoundaryArc { start, len: (next.start - start).rem_euclid(p) }
    }

    pub fn polyline(&self, rect: &Rect) -> Vec<(f64, f64)> {
        self.point_indices()
            .map(|i| {
                let (x, y) = rect.point(i);
                (x as f64, y as f64)
            })
            .collect()
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn segments(poly: &[(f64, f64)]) -> Vec<((f64, f64), (f64, f64))> {
    if poly.len() == 1 {
        vec![(poly[0], poly[0])]
    } else {
        poly.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Euclidean distance between two polylines that do not cross.
pub fn polyline_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for &(a0, a1) in &segments(a) {
        for &(b0, b1) in &segments(b) {
            best = best
                .min(point_segment_distance(a0, b0, b1))
                .min(point_segment_distance(a1, b0, b1))
                .min(point_segment_distance(b0, a0, a1))
                .min(point_segment_distance(b1, a0, a1));
        }
    }
    best
}

/// A lattice symmetry `p -> shift + rot^quarter_turns (reflect(p))`, where the
/// reflection negates x and/or y first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transform {
    pub shift: (i64, i64),
    pub quarter_turns: u8,
    pub reflect_x: bool,
    pub reflect_y: bool,
}

impl Transform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn translate(dx: i64, dy: i64) -> Self {
        Self { shift: (dx, dy), ..Self::default() }
    }

    pub fn then_translate(mut self, dx: i64, dy: i64) -> Self {
        self.shift = (self.shift.0 + dx, self.shift.1 + dy);
        self
    }

    /// The linear part as an integer matrix `[[a, b], [c, d]]`.
    fn matrix(&self) -> [[i64; 2]; 2] {
        let sx = if self.reflect_x { -1 } else { 1 };
        let sy = if self.reflect_y { -1 } else { 1 };
        let rot = match self.quarter_turns % 4 {
            0 => [[1, 0], [0, 1]],
            1 => [[0, -1], [1, 0]],
            2 => [[-1, 0], [0, -1]],
            _ => [[0, 1], [-1, 0]],
        };
        [[rot[0][0] * sx, rot[0][1] * sy], [rot[1][0] * sx, rot[1][1] * sy]]
    }

    pub fn preserves_orientation(&self) -> bool {
        self.reflect_x == self.reflect_y
    }

    pub fn apply_point(&self, p: (f64, f64)) -> (f64, f64) {
        let m = self.matrix();
        (
            self.shift.0 as f64 + m[0][0] as f64 * p.0 + m[0][1] as f64 * p.1,
            self.shift.1 as f64 + m[1][0] as f64 * p.0 + m[1][1] as f64 * p.1,
        )
    }

    pub fn apply_lattice(&self, p: (i64, i64)) -> (i64, i64) {
        let m = self.matrix();
        (self.shift.0 + m[0][0] * p.0 + m[0][1] * p.1, self.shift.1 + m[1][0] * p.0 + m[1][1] * p.1)
    }

    pub fn apply_cell(&self, c: (i64, i64)) -> (i64, i64) {
        let (x, y) = self.apply_point((c.0 as f64 + 0.5, c.1 as f64 + 0.5));
        ((x - 0.5).round() as i64, (y - 0.5).round() as i64)
    }

    pub fn apply_rect(&self, r: &Rect) -> Rect {
        let a = self.apply_lattice((r.x0, r.y0));
        let b = self.apply_lattice((r.x0 + r.w, r.y0 + r.h));
        Rect::new(a.0.min(b.0), a.1.min(b.1), (a.0 - b.0).abs(), (a.1 - b.1).abs())
    }

    /// Image of an arc of `rect` as an arc of `apply_rect(rect)`.
    pub fn apply_arc(&self, rect: &Rect, arc: &BoundaryArc) -> BoundaryArc {
        let image = self.apply_rect(rect);
        let first = image.point_index(self.apply_lattice(rect.point(arc.start))).expect("boundary maps to boundary");
        let last = image
            .point_index(self.apply_lattice(rect.point(arc.start + arc.len)))
            .expect("boundary maps to boundary");
        let start = if self.preserves_orientation() { first } else { last };
        BoundaryArc { start, len: arc.len }
    }

    pub fn compose(&self, inner: &Transform) -> Transform {
        // Find the symmetry whose matrix is self.m * inner.m by search over the
        // eight elements of the dihedral group.
        let (a, b) = (self.matrix(), inner.matrix());
        let prod = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let shift = self.apply_lattice(inner.shift);
        for q in 0..4u8 {
            for rx in [false, true] {
                let t = Transform { shift, quarter_turns: q, reflect_x: rx, reflect_y: false };
                if t.matrix() == prod {
                    return t;
                }
            }
        }
        unreachable!("dihedral group is closed")
    }

    pub fn inverse(&self) -> Transform {
        let m = self.matrix();
        // Orthogonal: inverse is the transpose.
        let mt = [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
        let shift = (
            -(mt[0][0] * self.shift.0 + mt[0][1] * self.shift.1),
            -(mt[1][0] * self.shift.0 + mt[1][1] * self.shift.1),
        );
        for q in 0..4u8 {
            for rx in [false, true] {
                let t = Transform { shift, quarter_turns: q, reflect_x: rx, reflect_y: false };
                if t.matrix() == mt {
                    return t;
                }
            }
        }
        unreachable!("dihedral group is closed")
    }
}
