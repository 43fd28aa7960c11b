//! The three increasing event families and their evaluation on configurations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::geometry::{polyline_distance, BoundaryArc, Rect, Side, Transform};
use super::Config;
use crate::error::{invalid, Error, Result};

pub(crate) const N4: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
pub(crate) const N8: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventSpec {
    /// An active 4-connected path inside `rect` joining the closed arcs `s0` and `s2`.
    RectCross { rect: Rect, s0: BoundaryArc, s2: BoundaryArc },
    /// An active circuit in the annulus `inner <= |x - center| <= outer`
    /// (cell centres, grid units) separating the hole from the outside.
    AnnulusCircuit { center: (f64, f64), inner: f64, outer: f64 },
    /// One active 4-connected component of `rect` touching all four arcs.
    XEvent { rect: Rect, arcs: [BoundaryArc; 4] },
}

/// Position of a cell relative to an annulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    Hole,
    Band,
    Outside,
}

/// A band cell of an annulus with its terminal flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandCell {
    pub cell: (i64, i64),
    /// 8-adjacent to a hole cell.
    pub inner: bool,
    /// 8-adjacent to an outside cell.
    pub outer: bool,
}

pub fn ring_class(center: (f64, f64), inner: f64, outer: f64, cell: (i64, i64)) -> Ring {
    let d = (cell.0 as f64 + 0.5 - center.0).hypot(cell.1 as f64 + 0.5 - center.1);
    if d < inner {
        Ring::Hole
    } else if d <= outer {
        Ring::Band
    } else {
        Ring::Outside
    }
}

/// Band cells of an annulus in row-major order.
pub fn annulus_band(center: (f64, f64), inner: f64, outer: f64) -> Vec<BandCell> {
    let lo = (center.0 - outer - 2.0).floor() as i64;
    let hi = (center.0 + outer + 2.0).ceil() as i64;
    let vlo = (center.1 - outer - 2.0).floor() as i64;
    let vhi = (center.1 + outer + 2.0).ceil() as i64;
    let mut out = Vec::new();
    for r in vlo..=vhi {
        for c in lo..=hi {
            if ring_class(center, inner, outer, (c, r)) != Ring::Band {
                continue;
            }
            let mut cell = BandCell { cell: (c, r), inner: false, outer: false };
            for (dx, dy) in N8 {
                match ring_class(center, inner, outer, (c + dx, r + dy)) {
                    Ring::Hole => cell.inner = true,
                    Ring::Outside => cell.outer = true,
                    Ring::Band => {}
                }
            }
            out.push(cell);
        }
    }
    out
}

fn hole_touches_outside(center: (f64, f64), inner: f64, outer: f64) -> bool {
    let lo = (center.0 - inner - 1.0).floor() as i64;
    let hi = (center.0 + inner + 1.0).ceil() as i64;
    let vlo = (center.1 - inner - 1.0).floor() as i64;
    let vhi = (center.1 + inner + 1.0).ceil() as i64;
    (vlo..=vhi).any(|r| {
        (lo..=hi).any(|c| {
            ring_class(center, inner, outer, (c, r)) == Ring::Hole
                && N8.iter().any(|(dx, dy)| ring_class(center, inner, outer, (c + dx, r + dy)) == Ring::Outside)
        })
    })
}

impl EventSpec {
    /// Left-right crossing of `rect` (full left side to full right side).
    pub fn left_right(rect: Rect) -> Self {
        Self::RectCross { rect, s0: rect.full_side(Side::Left), s2: rect.full_side(Side::Right) }
    }

    /// Bottom-top crossing of `rect`.
    pub fn bottom_top(rect: Rect) -> Self {
        Self::RectCross { rect, s0: rect.full_side(Side::Bottom), s2: rect.full_side(Side::Top) }
    }

    /// Square `[0, side]^2` crossed from its left side to `{side} x [a, b]`.
    pub fn cross_arc(side: i64, a: i64, b: i64) -> Result<Self> {
        if !(0 <= a && a <= b && b <= side) {
            return Err(invalid(format!("need 0 <= a <= b <= side, got a={a} b={b} side={side}")));
        }
        let rect = Rect::square(0, 0, side);
        Ok(Self::RectCross { rect, s0: rect.full_side(Side::Left), s2: rect.side_arc(Side::Right, a, b)? })
    }

    pub fn annulus(center: (f64, f64), inner: f64, outer: f64) -> Self {
        Self::AnnulusCircuit { center, inner, outer }
    }

    /// Strip `[x0, x0 + width] x [y_lo, y_hi]` with rays `{x0} x [y_lo, y_ref]`,
    /// `{x0} x [y_ref + gap, y_hi]` and the same on the right side.
    pub fn x_strip(x0: i64, width: i64, y_lo: i64, y_hi: i64, y_ref: i64, gap: i64) -> Result<Self> {
        if gap < 0 || y_ref < y_lo || y_ref + gap > y_hi {
            return Err(invalid(format!("X rays out of box: y_ref={y_ref} gap={gap} box=[{y_lo}, {y_hi}]")));
        }
        let rect = Rect::new(x0, y_lo, width, y_hi - y_lo);
        rect.validate()?;
        let arcs = [
            rect.side_arc(Side::Left, y_lo, y_ref)?,
            rect.side_arc(Side::Left, y_ref + gap, y_hi)?,
            rect.side_arc(Side::Right, y_lo, y_ref)?,
            rect.side_arc(Side::Right, y_ref + gap, y_hi)?,
        ];
        Ok(Self::XEvent { rect, arcs })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::RectCross { rect, s0, s2 } => {
                rect.validate()?;
                s0.validate(rect)?;
                s2.validate(rect)?;
                if s0.meets(s2, rect) {
                    return Err(invalid("distinguished arcs must have disjoint closures"));
                }
                Ok(())
            }
            Self::AnnulusCircuit { center, inner, outer } => {
                if !(center.0.is_finite() && center.1.is_finite()) {
                    return Err(Error::NonFinite("annulus center".into()));
                }
                if !(0.0 < *inner && inner < outer && outer.is_finite()) {
                    return Err(invalid(format!("annulus radii must satisfy 0 < a < b, got {inner}, {outer}")));
                }
                let band = annulus_band(*center, *inner, *outer);
                if !band.iter().any(|c| c.inner) || !band.iter().any(|c| c.outer) {
                    return Err(invalid("annulus has no hole cell or no band cell"));
                }
                if hole_touches_outside(*center, *inner, *outer) {
                    return Err(invalid("annulus band too thin: a hole cell is 8-adjacent to an outside cell"));
                }
                Ok(())
            }
            Self::XEvent { rect, arcs } => {
                rect.validate()?;
                arcs.iter().try_for_each(|a| a.validate(rect))
            }
        }
    }

    /// Cells the event depends on.
    pub fn cells(&self) -> Vec<(i64, i64)> {
        match self {
            Self::RectCross { rect, .. } | Self::XEvent { rect, .. } => rect.cells().collect(),
            Self::AnnulusCircuit { center, inner, outer } => {
                annulus_band(*center, *inner, *outer).into_iter().map(|b| b.cell).collect()
            }
        }
    }

    /// Checks that every cell of the event lies in an `nx x ny` grid.
    pub fn check_within(&self, nx: usize, ny: usize) -> Result<()> {
        self.validate()?;
        let inside = |(c, r): (i64, i64)| c >= 0 && r >= 0 && (c as usize) < nx && (r as usize) < ny;
        let ok = match self {
            Self::RectCross { rect, .. } | Self::XEvent { rect, .. } => {
                inside((rect.x0, rect.y0)) && inside((rect.x0 + rect.w - 1, rect.y0 + rect.h - 1))
            }
            Self::AnnulusCircuit { .. } => self.cells().into_iter().all(inside),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfBounds(format!("{self:?} does not fit a {nx}x{ny} grid")))
        }
    }

    /// Whether a cell sits on the domain boundary (rectangle edge, or a
    /// terminal cell of an annulus).
    pub fn is_boundary_cell(&self, cell: (i64, i64)) -> bool {
        match self {
            Self::RectCross { rect, .. } | Self::XEvent { rect, .. } => {
                rect.contains_cell(cell.0, cell.1)
                    && (cell.0 == rect.x0
                        || cell.1 == rect.y0
                        || cell.0 == rect.x0 + rect.w - 1
                        || cell.1 == rect.y0 + rect.h - 1)
            }
            Self::AnnulusCircuit { center, inner, outer } => annulus_band(*center, *inner, *outer)
                .iter()
                .any(|b| b.cell == cell && (b.inner || b.outer)),
        }
    }

    /// The scale `d0`: for rectangles the smaller of `dist(S0, S2)` and
    /// `dist(S1, S3)`, for annuli the inner radius (grid units).
    pub fn d0(&self) -> f64 {
        match self {
            Self::RectCross { rect, s0, s2 } => {
                let s1 = s0.gap_to(s2, rect);
                let s3 = s2.gap_to(s0, rect);
                let d02 = polyline_distance(&s0.polyline(rect), &s2.polyline(rect));
                let d13 = polyline_distance(&s1.polyline(rect), &s3.polyline(rect));
                d02.min(d13)
            }
            Self::AnnulusCircuit { inner, .. } => *inner,
            Self::XEvent { rect, .. } => rect.w.min(rect.h) as f64,
        }
    }

    /// Image of the event under a lattice symmetry.
    pub fn transform(&self, t: &Transform) -> Self {
        match self {
            Self::RectCross { rect, s0, s2 } => {
                Self::RectCross { rect: t.apply_rect(rect), s0: t.apply_arc(rect, s0), s2: t.apply_arc(rect, s2) }
            }
            Self::AnnulusCircuit { center, inner, outer } => {
                Self::AnnulusCircuit { center: t.apply_point(*center), inner: *inner, outer: *outer }
            }
            Self::XEvent { rect, arcs } => Self::XEvent { rect: t.apply_rect(rect), arcs: arcs.map(|a| t.apply_arc(rect, &a)) },
        }
    }

    /// Smallest rectangle containing every cell of the event.
    pub fn bounding_rect(&self) -> Rect {
        match self {
            Self::RectCross { rect, .. } | Self::XEvent { rect, .. } => *rect,
            Self::AnnulusCircuit { .. } => {
                let cells = self.cells();
                let x0 = cells.iter().map(|c| c.0).min().unwrap_or(0);
                let x1 = cells.iter().map(|c| c.0).max().unwrap_or(0);
                let y0 = cells.iter().map(|c| c.1).min().unwrap_or(0);
                let y1 = cells.iter().map(|c| c.1).max().unwrap_or(0);
                Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
            }
        }
    }
}

/// Evaluates the event on a configuration.
pub fn has_event(c: &Config, e: &EventSpec) -> Result<bool> {
    e.check_within(c.grid.nx, c.grid.ny)?;
    Ok(has_event_unchecked(c, e))
}

/// [`has_event`] without geometry validation; the caller guarantees fit.
pub fn has_event_unchecked(c: &Config, e: &EventSpec) -> bool {
    match e {
        EventSpec::RectCross { rect, s0, s2 } => rect_crossing(c, rect, s0, s2),
        EventSpec::XEvent { rect, arcs } => x_event(c, rect, arcs),
        EventSpec::AnnulusCircuit { center, inner, outer } => annulus_circuit(c, *center, *inner, *outer),
    }
}

fn rect_crossing(c: &Config, rect: &Rect, s0: &BoundaryArc, s2: &BoundaryArc) -> bool {
    let nx = c.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let mut target = vec![false; c.grid.len()];
    for cell in s2.closure_cells(rect) {
        target[idx(cell)] = true;
    }
    let mut seen = vec![false; c.grid.len()];
    let mut queue = VecDeque::new();
    for cell in s0.closure_cells(rect) {
        let i = idx(cell);
        if c.active[i] && !seen[i] {
            seen[i] = true;
            queue.push_back(cell);
        }
    }
    while let Some(cell) = queue.pop_front() {
        if target[idx(cell)] {
            return true;
        }
        for (dx, dy) in N4 {
            let n = (cell.0 + dx, cell.1 + dy);
            if rect.contains_cell(n.0, n.1) {
                let i = idx(n);
                if c.active[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

fn x_event(c: &Config, rect: &Rect, arcs: &[BoundaryArc; 4]) -> bool {
    let nx = c.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let mut touch = vec![0u8; c.grid.len()];
    for (k, arc) in arcs.iter().enumerate() {
        for cell in arc.closure_cells(rect) {
            touch[idx(cell)] |= 1 << k;
        }
    }
    let mut seen = vec![false; c.grid.len()];
    for start in arcs[0].closure_cells(rect) {
        let i0 = idx(start);
        if !c.active[i0] || seen[i0] {
            continue;
        }
        seen[i0] = true;
        let mut mask = 0u8;
        let mut queue = VecDeque::from([start]);
        while let Some(cell) = queue.pop_front() {
            mask |= touch[idx(cell)];
            for (dx, dy) in N4 {
                let n = (cell.0 + dx, cell.1 + dy);
                if rect.contains_cell(n.0, n.1) {
                    let i = idx(n);
                    if c.active[i] && !seen[i] {
                        seen[i] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if mask == 0b1111 {
            return true;
        }
    }
    false
}

fn annulus_circuit(c: &Config, center: (f64, f64), inner: f64, outer: f64) -> bool {
    let band = annulus_band(center, inner, outer);
    let nx = c.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let mut in_band = vec![false; c.grid.len()];
    let mut is_outer = vec![false; c.grid.len()];
    for b in &band {
        in_band[idx(b.cell)] = true;
        is_outer[idx(b.cell)] = b.outer;
    }
    let mut seen = vec![false; c.grid.len()];
    let mut queue = VecDeque::new();
    for b in band.iter().filter(|b| b.inner) {
        let i = idx(b.cell);
        if !c.active[i] {
            seen[i] = true;
            queue.push_back(b.cell);
        }
    }
    // A blocking inactive 8-path from hole to outside rules out an active circuit.
    while let Some(cell) = queue.pop_front() {
        if is_outer[idx(cell)] {
            return false;
        }
        for (dx, dy) in N8 {
            let n = (cell.0 + dx, cell.1 + dy);
            if n.0 < 0 || n.1 < 0 || n.0 >= nx || n.1 >= c.grid.ny as i64 {
                continue;
            }
            let i = idx(n);
            if in_band[i] && !c.active[i] && !seen[i] {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    true
}
