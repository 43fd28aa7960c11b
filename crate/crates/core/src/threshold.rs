//! Threshold height and threshold location of increasing events.
//!
//! Cells are activated in decreasing field value (ties by row-major index);
//! the threshold location is the cell whose activation first makes the event
//! occur, and the threshold height is minus its value.

use std::collections::VecDeque;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::FieldSample;
use crate::percolation::event::{annulus_band, has_event_unchecked, N4, N8};
use crate::percolation::{BoundaryArc, Config, EventSpec, Rect};
use crate::union_find::UnionFind;

/// Where the threshold is attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    /// Grid index of a cell.
    Cell(usize),
    /// Index of an edge of an [`EdgeLattice`].
    Edge(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Threshold height.
    pub t: f64,
    /// Threshold location.
    pub s: Site,
    /// Position of `s` in the activation order.
    pub merge_rank: usize,
    /// Field value at `s`; always `-t`.
    pub certificate: f64,
    pub on_boundary: bool,
    pub on_corner: bool,
}

impl ThresholdResult {
    /// Grid index of the threshold cell; panics in edge mode.
    pub fn cell(&self) -> usize {
        match self.s {
            Site::Cell(i) => i,
            Site::Edge(_) => panic!("edge-mode result has no cell"),
        }
    }
}

/// Activation order of `cells`: decreasing value, ties by increasing index.
pub fn activation_order(f: &FieldSample, cells: &[usize]) -> Vec<usize> {
    let mut order = cells.to_vec();
    order.sort_unstable_by(|&a, &b| f.values[b].total_cmp(&f.values[a]).then(a.cmp(&b)));
    order
}

fn grid_cells(f: &FieldSample, e: &EventSpec) -> Vec<usize> {
    let nx = f.grid.nx as i64;
    e.cells().into_iter().map(|(c, r)| (r * nx + c) as usize).collect()
}

fn corner_of(e: &EventSpec, cell: (i64, i64)) -> bool {
    match e {
        EventSpec::RectCross { rect, .. } | EventSpec::XEvent { rect, .. } => {
            (cell.0 == rect.x0 || cell.0 == rect.x0 + rect.w - 1) && (cell.1 == rect.y0 || cell.1 == rect.y0 + rect.h - 1)
        }
        EventSpec::AnnulusCircuit { .. } => false,
    }
}

fn result_for(f: &FieldSample, e: &EventSpec, s: usize, merge_rank: usize) -> ThresholdResult {
    let (c, r) = f.grid.coords(s);
    let cell = (c as i64, r as i64);
    ThresholdResult {
        t: -f.values[s],
        s: Site::Cell(s),
        merge_rank,
        certificate: f.values[s],
        on_boundary: e.is_boundary_cell(cell),
        on_corner: corner_of(e, cell),
    }
}

/// Union-find level sweep.
pub fn threshold_sweep(f: &FieldSample, e: &EventSpec) -> Result<ThresholdResult> {
    e.check_within(f.grid.nx, f.grid.ny)?;
    let order = activation_order(f, &grid_cells(f, e));
    let n = f.grid.len();
    let nx = f.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    match e {
        EventSpec::RectCross { rect, s0, s2 } => sweep_terminals(f, e, rect, &[*s0, *s2], &order),
        EventSpec::XEvent { rect, arcs } => sweep_terminals(f, e, rect, arcs, &order),
        EventSpec::AnnulusCircuit { center, inner, outer } => {
            // Dual sweep: inactive cells appear in reverse activation order and
            // merge with 8-connectivity; the circuit dies when the hole side
            // joins the outside.
            let band = annulus_band(*center, *inner, *outer);
            let mut in_band = vec![false; n];
            let mut term = vec![(false, false); n];
            for b in &band {
                in_band[idx(b.cell)] = true;
                term[idx(b.cell)] = (b.inner, b.outer);
            }
            let (hole, outside) = (n, n + 1);
            let mut uf = UnionFind::new(n + 2);
            let mut inactive = vec![false; n];
            for (k, &v) in order.iter().enumerate().rev() {
                inactive[v] = true;
                let (c, r) = f.grid.coords(v);
                for (dx, dy) in N8 {
                    let (x, y) = (c as i64 + dx, r as i64 + dy);
                    if f.grid.contains(x, y) {
                        let j = idx((x, y));
                        if in_band[j] && inactive[j] {
                            uf.union(v, j);
                        }
                    }
                }
                if term[v].0 {
                    uf.union(v, hole);
                }
                if term[v].1 {
                    uf.union(v, outside);
                }
                if uf.connected(hole, outside) {
                    return Ok(result_for(f, e, v, k));
                }
            }
            Err(Error::EventImpossible)
        }
    }
}

fn sweep_terminals(
    f: &FieldSample,
    e: &EventSpec,
    rect: &Rect,
    arcs: &[BoundaryArc],
    order: &[usize],
) -> Result<ThresholdResult> {
    let n = f.grid.len();
    let nx = f.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let mut touches: Vec<u8> = vec![0; n];
    for (k, arc) in arcs.iter().enumerate() {
        for cell in arc.closure_cells(rect) {
            touches[idx(cell)] |= 1 << k;
        }
    }
    // Arc masks live on component roots; virtual terminal nodes would glue
    // together distinct components touching the same arc.
    let full = (1u8 << arcs.len()) - 1;
    let mut uf = UnionFind::new(n);
    let mut mask = touches.clone();
    let mut active = vec![false; n];
    for (k, &v) in order.iter().enumerate() {
        active[v] = true;
        let (c, r) = f.grid.coords(v);
        for (dx, dy) in N4 {
            let (x, y) = (c as i64 + dx, r as i64 + dy);
            if rect.contains_cell(x, y) {
                let j = idx((x, y));
                if active[j] {
                    let (ra, rb) = (uf.find(v), uf.find(j));
                    if ra != rb {
                        uf.union(ra, rb);
                        let root = uf.find(ra);
                        mask[root] = mask[ra] | mask[rb];
                    }
                }
            }
        }
        let root = uf.find(v);
        if mask[root] == full {
            return Ok(result_for(f, e, v, k));
        }
    }
    Err(Error::EventImpossible)
}

/// Least level at which `{f >= -level}` contains an 8-connected path across
/// the annulus band from the hole side to the outside.
pub fn annulus_crossing_threshold(f: &FieldSample, center: (f64, f64), inner: f64, outer: f64) -> Result<ThresholdResult> {
    let e = EventSpec::annulus(center, inner, outer);
    e.check_within(f.grid.nx, f.grid.ny)?;
    let band = annulus_band(center, inner, outer);
    let n = f.grid.len();
    let nx = f.grid.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let mut in_band = vec![false; n];
    let mut mask = vec![0u8; n];
    for b in &band {
        in_band[idx(b.cell)] = true;
        mask[idx(b.cell)] = b.inner as u8 | (b.outer as u8) << 1;
    }
    let cells: Vec<usize> = band.iter().map(|b| idx(b.cell)).collect();
    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    for (k, &v) in activation_order(f, &cells).iter().enumerate() {
        active[v] = true;
        let (c, r) = f.grid.coords(v);
        for (dx, dy) in N8 {
            let (x, y) = (c as i64 + dx, r as i64 + dy);
            if f.grid.contains(x, y) {
                let j = idx((x, y));
                if in_band[j] && active[j] {
                    let (ra, rb) = (uf.find(v), uf.find(j));
                    if ra != rb {
                        uf.union(ra, rb);
                        let root = uf.find(ra);
                        mask[root] = mask[ra] | mask[rb];
                    }
                }
            }
        }
        if mask[uf.find(v)] == 0b11 {
            return Ok(result_for(f, &e, v, k));
        }
    }
    Err(Error::EventImpossible)
}

/// Independent oracle: binary search over the activation order, evaluating
/// the event from scratch at each probe.
pub fn threshold_bisect_oracle(f: &FieldSample, e: &EventSpec) -> Result<(f64, usize)> {
    e.check_within(f.grid.nx, f.grid.ny)?;
    let order = activation_order(f, &grid_cells(f, e));
    let holds = |k: usize| {
        let mut c = Config::new(f.grid, vec![false; f.grid.len()]);
        for &v in &order[..k] {
            c.active[v] = true;
        }
        has_event_unchecked(&c, e)
    };
    if !holds(order.len()) {
        return Err(Error::EventImpossible);
    }
    // Least k with holds(k).
    let (mut lo, mut hi) = (0, order.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let s = order[lo - 1];
    Ok((-f.values[s], s))
}

/// Two active and two inactive arms from the threshold cell of a rectangle
/// crossing, at the threshold level.
#[derive(Clone, Debug, PartialEq)]
pub struct FourArmCertificate {
    /// Active 4-paths from the closures of `S0` and `S2` to neighbours of `S`.
    /// An arm is just `[S]` when `S` itself touches the arc.
    pub active_arms: [Vec<usize>; 2],
    /// Inactive 8-paths from the closures of `S1` and `S3` to neighbours of `S`.
    pub inactive_arms: [Vec<usize>; 2],
}

/// Extracts the four-arm certificate for a rectangle crossing; `None` when
/// the discrete arms cannot be found (grids only approximate the continuum
/// picture).
pub fn four_arm_certificate(f: &FieldSample, e: &EventSpec, res: &ThresholdResult) -> Option<FourArmCertificate> {
    let EventSpec::RectCross { rect, s0, s2 } = e else { return None };
    let s = res.cell();
    let g = f.grid;
    let nx = g.nx as i64;
    let idx = |(x, y): (i64, i64)| (y * nx + x) as usize;
    let order = activation_order(f, &grid_cells(f, e));
    let mut rank = vec![usize::MAX; g.len()];
    for (k, &v) in order.iter().enumerate() {
        rank[v] = k;
    }
    let active = |i: usize| rank[i] < res.merge_rank;
    let inactive = |i: usize| rank[i] != usize::MAX && rank[i] > res.merge_rank;
    let (sc, sr) = g.coords(s);
    let path_to_s = |from: &BoundaryArc, offsets: &[(i64, i64)], member: &dyn Fn(usize) -> bool| {
        if from.closure_cells(rect).contains(&(sc as i64, sr as i64)) {
            return Some(vec![s]);
        }
        let mut parent = vec![usize::MAX; g.len()];
        let mut queue = VecDeque::new();
        for cell in from.closure_cells(rect) {
            let i = idx(cell);
            if member(i) && parent[i] == usize::MAX {
                parent[i] = i;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (c, r) = g.coords(i);
            if (c as i64 - sc as i64).abs() <= 1
                && (r as i64 - sr as i64).abs() <= 1
                && offsets.contains(&(sc as i64 - c as i64, sr as i64 - r as i64))
            {
                let mut path = vec![i];
                let mut cur = i;
                while parent[cur] != cur {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &(dx, dy) in offsets {
                let (x, y) = (c as i64 + dx, r as i64 + dy);
                if rect.contains_cell(x, y) {
                    let j = idx((x, y));
                    if member(j) && parent[j] == usize::MAX {
                        parent[j] = i;
                        queue.push_back(j);
                    }
                }
            }
        }
        None
    };
    let s1 = s0.gap_to(s2, rect);
    let s3 = s2.gap_to(s0, rect);
    Some(FourArmCertificate {
        active_arms: [path_to_s(s0, &N4, &active)?, path_to_s(s2, &N4, &active)?],
        inactive_arms: [path_to_s(&s1, &N8, &inactive)?, path_to_s(&s3, &N8, &inactive)?],
    })
}

/// Edge-weighted rectangular grid graph with two distinguished vertex sets.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLattice {
    pub width: usize,
    pub height: usize,
    /// Horizontal edges first (row-major, `width - 1` per row), then vertical
    /// edges (row-major, `width` per row).
    pub edge_values: Vec<f64>,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
}

impl EdgeLattice {
    pub fn edge_count(width: usize, height: usize) -> usize {
        (width.saturating_sub(1)) * height + width * height.saturating_sub(1)
    }

    /// Lattice with the left column and right column as distinguished sets.
    pub fn left_right(width: usize, height: usize, edge_values: Vec<f64>) -> Result<Self> {
        let sources = (0..height).map(|y| y * width).collect();
        let targets = (0..height).map(|y| y * width + width - 1).collect();
        let lat = Self { width, height, edge_values, sources, targets };
        lat.validate()?;
        Ok(lat)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("edge lattice must be non-empty"));
        }
        if self.edge_values.len() != Self::edge_count(self.width, self.height) {
            return Err(invalid("edge value count does not match lattice size"));
        }
        if self.edge_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("edge values".into()));
        }
        let nv = self.width * self.height;
        if self.sources.is_empty() || self.targets.is_empty() {
            return Err(invalid("distinguished vertex sets must be non-empty"));
        }
        if self.sources.iter().chain(&self.targets).any(|&v| v >= nv) {
            return Err(invalid("distinguished vertex out of range"));
        }
        if self.sources.iter().any(|v| self.targets.contains(v)) {
            return Err(invalid("distinguished vertex sets must be disjoint"));
        }
        Ok(())
    }

    /// Endpoints of edge `e`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let nh = (self.width - 1) * self.height;
        if e < nh {
            let (y, x) = (e / (self.width - 1), e % (self.width - 1));
            (y * self.width + x, y * self.width + x + 1)
        } else {
            let k = e - nh;
            (k, k + self.width)
        }
    }
}

/// Kruskal sweep over edges in decreasing value (ties by index): the first
/// edge joining the two distinguished sets is the bottleneck.
pub fn threshold_sweep_edges(lat: &EdgeLattice) -> Result<ThresholdResult> {
    lat.validate()?;
    let nv = lat.width * lat.height;
    let mut order: Vec<usize> = (0..lat.edge_values.len()).collect();
    order.sort_unstable_by(|&a, &b| lat.edge_values[b].total_cmp(&lat.edge_values[a]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(nv + 2);
    for &v in &lat.sources {
        uf.union(v, nv);
    }
    for &v in &lat.targets {
        uf.union(v, nv + 1);
    }
    for (k, &e) in order.iter().enumerate() {
        let (a, b) = lat.endpoints(e);
        uf.union(a, b);
        if uf.connected(nv, nv + 1) {
            let x = lat.edge_values[e];
            return Ok(ThresholdResult {
                t: -x,
                s: Site::Edge(e),
                merge_rank: k,
                certificate: x,
                on_boundary: false,
                on_corner: false,
            });
        }
    }
    Err(Error::EventImpossible)
}

/// Left-right lattice of the given size with iid standard normal edge values.
pub fn gaussian_edge_lattice(width: usize, height: usize, seed: u64) -> Result<EdgeLattice> {
    let mut rng = crate::rng::rng_from_seed(seed);
    let values = (0..EdgeLattice::edge_count(width, height)).map(|_| StandardNormal.sample(&mut rng)).collect();
    EdgeLattice::left_right(width, height, values)
}

/// Edge thresholds of `n` independent Gaussian lattices.
pub fn sample_edge_thresholds(
    width: usize,
    height: usize,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ThresholdResult>> {
    crate::montecarlo::try_run_replicates(n, workers, |i| {
        let seed = crate::rng::derive_seed(master_seed, i, crate::rng::tag::EDGES);
        threshold_sweep_edges(&gaussian_edge_lattice(width, height, seed)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExactSampler, SpectralSampler};
    use crate::grid::GridSpec;
    use crate::kernel::StationaryKernel;
    use crate::rng::rng_from_seed;

    fn field(nx: usize, ny: usize, values: Vec<f64>) -> FieldSample {
        FieldSample::from_values(GridSpec::new(nx, ny, 1.0).unwrap(), values).unwrap()
    }

    #[test]
    fn constant_field() {
        let f = field(4, 4, vec![0.7; 16]);
        let e = EventSpec::left_right(Rect::square(0, 0, 4));
        let r = threshold_sweep(&f, &e).unwrap();
        assert_eq!(r.t, -0.7);
        // Row 0 completes first under row-major tie order.
        assert_eq!(r.cell(), 3);
        assert_eq!(threshold_bisect_oracle(&f, &e).unwrap(), (-0.7, 3));
    }

    #[test]
    fn strip_bottleneck_is_the_minimum() {
        let vals = vec![0.4, -1.3, 2.0, 0.1, 0.9];
        let f = field(5, 1, vals);
        let r = threshold_sweep(&f, &EventSpec::left_right(Rect::new(0, 0, 5, 1))).unwrap();
        assert_eq!(r.t, 1.3);
        assert_eq!(r.cell(), 1);
        assert_eq!(r.certificate, -r.t);
    }

    #[test]
    fn monotone_gradient_puts_bottleneck_on_low_column() {
        let n = 6;
        let g = GridSpec::square(n, 0.5).unwrap();
        let e = EventSpec::left_right(Rect::square(0, 0, n as i64));
        let up = FieldSample::from_fn(g, |x, _| x).unwrap();
        let r = threshold_sweep(&up, &e).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(g.coords(r.cell()).0, 0);
        let down = FieldSample::from_fn(g, |x, _| -x).unwrap();
        let r = threshold_sweep(&down, &e).unwrap();
        assert_eq!(r.t, (n as f64 - 1.0) * 0.5);
        assert_eq!(g.coords(r.cell()).0, n - 1);
        assert_eq!(threshold_bisect_oracle(&down, &e).unwrap(), (r.t, r.cell()));
    }

    fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn all_orderings_of_2x2_agree_with_oracle() {
        let perms = permutations(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(perms.len(), 24);
        let events = [EventSpec::left_right(Rect::square(0, 0, 2)), EventSpec::bottom_top(Rect::square(0, 0, 2))];
        for p in perms {
            let f = field(2, 2, p);
            for e in &events {
                let r = threshold_sweep(&f, e).unwrap();
                assert_eq!(threshold_bisect_oracle(&f, e).unwrap(), (r.t, r.cell()));
            }
        }
    }

    #[test]
    fn random_fields_agree_with_oracle() {
        let g = GridSpec::square(8, 1.0).unwrap();
        let s = ExactSampler::new(&StationaryKernel::gaussian(1.0), &g).unwrap();
        let events = [
            EventSpec::left_right(Rect::square(0, 0, 8)),
            EventSpec::cross_arc(8, 3, 5).unwrap(),
            EventSpec::annulus((4.0, 4.0), 1.2, 3.6),
            EventSpec::x_strip(2, 4, 0, 8, 3, 2).unwrap(),
        ];
        for seed in 0..200 {
            let f = s.sample(seed);
            for e in &events {
                let r = threshold_sweep(&f, e).unwrap();
                assert_eq!(threshold_bisect_oracle(&f, e).unwrap(), (r.t, r.cell()), "seed={seed} {e:?}");
            }
        }
    }

    #[test]
    fn threshold_is_sharp_at_the_certificate() {
        let g = GridSpec::square(12, 0.4).unwrap();
        let s = SpectralSampler::new(&StationaryKernel::Rpw, &g, 64).unwrap();
        let e = EventSpec::left_right(Rect::square(0, 0, 12));
        for seed in 0..50 {
            let f = s.sample(seed);
            let r = threshold_sweep(&f, &e).unwrap();
            assert!(crate::percolation::has_event(&crate::percolation::binarize(&f, r.t), &e).unwrap());
            let below = f.values.iter().filter(|v| **v > r.certificate).fold(f64::INFINITY, |m, v| m.min(*v));
            let next_level = if below.is_finite() { -(r.certificate + below) / 2.0 } else { r.t - 1.0 };
            assert!(!crate::percolation::has_event(&crate::percolation::binarize(&f, next_level), &e).unwrap());
        }
    }

    #[test]
    fn four_arm_certificate_on_random_fields() {
        let g = GridSpec::square(16, 0.4).unwrap();
        let s = SpectralSampler::new(&StationaryKernel::Rpw, &g, 64).unwrap();
        let e = EventSpec::left_right(Rect::square(0, 0, 16));
        let mut found = 0;
        for seed in 0..40 {
            let f = s.sample(seed);
            let r = threshold_sweep(&f, &e).unwrap();
            if let Some(cert) = four_arm_certificate(&f, &e, &r) {
                found += 1;
                for arm in cert.active_arms.iter() {
                    assert!(arm.iter().all(|&i| i == r.cell() || f.values[i] > r.certificate));
                }
                for arm in cert.inactive_arms.iter() {
                    assert!(arm.iter().all(|&i| i == r.cell() || f.values[i] < r.certificate));
                }
            }
        }
        assert!(found > 30, "found={found}");
    }

    #[test]
    fn sweep_rejects_out_of_grid_events() {
        let f = field(3, 3, vec![0.0; 9]);
        assert!(threshold_sweep(&f, &EventSpec::left_right(Rect::square(0, 0, 4))).is_err());
    }

    /// Maximin over all simple source-target paths, by exhaustive DFS.
    fn brute_force_maximin(lat: &EdgeLattice) -> f64 {
        let nv = lat.width * lat.height;
        let mut adj = vec![Vec::new(); nv];
        for e in 0..lat.edge_values.len() {
            let (a, b) = lat.endpoints(e);
            adj[a].push((b, lat.edge_values[e]));
            adj[b].push((a, lat.edge_values[e]));
        }
        fn dfs(v: usize, bottleneck: f64, adj: &[Vec<(usize, f64)>], seen: &mut [bool], targets: &[usize], best: &mut f64) {
            if targets.contains(&v) {
                *best = best.max(bottleneck);
                return;
            }
            if bottleneck <= *best {
                return;
            }
            for &(w, x) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    dfs(w, bottleneck.min(x), adj, seen, targets, best);
                    seen[w] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        for &s in &lat.sources {
            let mut seen = vec![false; nv];
            seen[s] = true;
            dfs(s, f64::INFINITY, &adj, &mut seen, &lat.targets, &mut best);
        }
        best
    }

    #[test]
    fn single_edge_lattice() {
        let lat = EdgeLattice::left_right(2, 1, vec![0.37]).unwrap();
        let r = threshold_sweep_edges(&lat).unwrap();
        assert_eq!(r.t, -0.37);
        assert_eq!(r.s, Site::Edge(0));
    }

    #[test]
    fn explicit_2x2_lattice_matches_path_enumeration() {
        // Edges: h(0,0) h(0,1) v(0,0) v(1,0); left {0, 2}, right {1, 3}.
        let lat = EdgeLattice::left_right(2, 2, vec![-0.5, 0.2, 1.0, 0.8]).unwrap();
        let r = threshold_sweep_edges(&lat).unwrap();
        assert_eq!(r.t, -0.2);
        assert_eq!(r.s, Site::Edge(1));
        assert_eq!(brute_force_maximin(&lat), 0.2);
    }

    #[test]
    fn random_4x4_lattices_match_path_enumeration() {
        let mut rng = rng_from_seed(17);
        for _ in 0..300 {
            let vals: Vec<f64> = (0..EdgeLattice::edge_count(4, 4)).map(|_| StandardNormal.sample(&mut rng)).collect();
            let lat = EdgeLattice::left_right(4, 4, vals).unwrap();
            let r = threshold_sweep_edges(&lat).unwrap();
            assert_eq!(-r.t, brute_force_maximin(&lat));
        }
    }

    #[test]
    fn lattice_validation() {
        assert!(EdgeLattice::left_right(2, 2, vec![0.0; 3]).is_err());
        let mut lat = EdgeLattice::left_right(2, 2, vec![0.0; 4]).unwrap();
        lat.targets = lat.sources.clone();
        assert!(lat.validate().is_err());
        lat.targets.clear();
        assert!(threshold_sweep_edges(&lat).is_err());
        // Custom distinguished sets on a path.
        let mut lat = EdgeLattice::left_right(3, 1, vec![0.0, 0.0]).unwrap();
        lat.sources = vec![0];
        lat.targets = vec![2];
        lat.edge_values = vec![1.0, -1.0];
        assert_eq!(threshold_sweep_edges(&lat).unwrap().t, 1.0);
    }
}
