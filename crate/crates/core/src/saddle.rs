//! Discrete saddles, four-arm saddles and critical points of circle
//! restrictions.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{FieldSample, Sampler};
use crate::montecarlo::run_replicates;
use crate::percolation::event::N8;
use crate::rng::{derive_seed, tag};
use crate::stats::{proportion, EstimatorReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscreteSaddle {
    /// Grid index of the vertex.
    pub index: usize,
    pub value: f64,
    /// Sign changes of `f - value` around the 8-neighbourhood cycle,
    /// skipping neighbours with equal value.
    pub alternations: usize,
}

/// Maximal runs of equal sign of `f - f(s)` around the 8-cycle of an
/// interior vertex, as `(positive, neighbour indices)`.
fn sign_runs(f: &FieldSample, s: usize) -> Vec<(bool, Vec<usize>)> {
    let g = f.grid;
    let (c, r) = g.coords(s);
    let v = f.values[s];
    let mut runs: Vec<(bool, Vec<usize>)> = Vec::new();
    for (dx, dy) in N8 {
        let j = g.index((c as i64 + dx) as usize, (r as i64 + dy) as usize);
        let d = f.values[j] - v;
        if d == 0.0 {
            continue;
        }
        match runs.last_mut() {
            Some((sign, cells)) if *sign == (d > 0.0) => cells.push(j),
            _ => runs.push((d > 0.0, vec![j])),
        }
    }
    if runs.len() > 1 && runs[0].0 == runs[runs.len() - 1].0 {
        let (_, tail) = runs.pop().unwrap();
        let mut merged = tail;
        merged.extend(&runs[0].1);
        runs[0].1 = merged;
    }
    runs
}

fn is_interior(f: &FieldSample, i: usize) -> bool {
    let (c, r) = f.grid.coords(i);
    c > 0 && r > 0 && c + 1 < f.grid.nx && r + 1 < f.grid.ny
}

/// Every interior vertex with at least four sign alternations.
pub fn detect_saddles(f: &FieldSample) -> Vec<DiscreteSaddle> {
    (0..f.grid.len())
        .filter(|&i| is_interior(f, i))
        .filter_map(|i| {
            let runs = sign_runs(f, i).len();
            (runs >= 4).then_some(DiscreteSaddle { index: i, value: f.values[i], alternations: runs })
        })
        .collect()
}

/// Unit vertex-capacity flow network for arm search.
struct Flow {
    to: Vec<usize>,
    cap: Vec<u8>,
    adj: Vec<Vec<usize>>,
}

impl Flow {
    fn new(n: usize) -> Self {
        Self { to: vec![], cap: vec![], adj: vec![vec![]; n] }
    }

    fn edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(1);
        self.adj[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0);
    }

    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut via = vec![usize::MAX; self.adj.len()];
        via[s] = usize::MAX - 1;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &e in &self.adj[u] {
                let w = self.to[e];
                if self.cap[e] > 0 && via[w] == usize::MAX {
                    via[w] = e;
                    queue.push_back(w);
                }
            }
        }
        if via[t] == usize::MAX {
            return false;
        }
        let mut w = t;
        while w != s {
            let e = via[w];
            self.cap[e] -= 1;
            self.cap[e ^ 1] += 1;
            w = self.to[e ^ 1];
        }
        true
    }
}

/// Two vertex-disjoint 8-paths in `member`, one starting in `run_a` and one
/// in `run_b`, each ending at the first cell at distance `>= reach` from `s`.
fn two_arms(
    f: &FieldSample,
    s: usize,
    member: &dyn Fn(usize) -> bool,
    run_a: &[usize],
    run_b: &[usize],
    reach: f64,
    k: i64,
) -> Option<[Vec<usize>; 2]> {
    let g = f.grid;
    let (sc, sr) = g.coords(s);
    let mut local = std::collections::HashMap::new();
    let mut cells = Vec::new();
    let mut target = Vec::new();
    for dy in -k..=k {
        for dx in -k..=k {
            let (x, y) = (sc as i64 + dx, sr as i64 + dy);
            let i = g.index(x as usize, y as usize);
            if i != s && member(i) {
                local.insert(i, cells.len());
                cells.push(i);
                let d = g.displacement(i, s);
                target.push(d.0.hypot(d.1) >= reach);
            }
        }
    }
    let m = cells.len();
    let (src, sink, ga, gb) = (2 * m, 2 * m + 1, 2 * m + 2, 2 * m + 3);
    let mut net = Flow::new(2 * m + 4);
    for (id, &i) in cells.iter().enumerate() {
        net.edge(2 * id, 2 * id + 1);
        if target[id] {
            net.edge(2 * id + 1, sink);
            continue;
        }
        let (c, r) = g.coords(i);
        for (dx, dy) in N8 {
            let j = g.index((c as i64 + dx) as usize, (r as i64 + dy) as usize);
            if let Some(&jd) = local.get(&j) {
                net.edge(2 * id + 1, 2 * jd);
            }
        }
    }
    net.edge(src, ga);
    net.edge(src, gb);
    for (group, run) in [(ga, run_a), (gb, run_b)] {
        for i in run {
            net.edge(group, 2 * local[i]);
        }
    }
    if !(net.augment(src, sink) && net.augment(src, sink)) {
        return None;
    }
    let mut arms = [vec![], vec![]];
    for (slot, group) in [ga, gb].into_iter().enumerate() {
        let mut u = group;
        while u != sink {
            let e = *net.adj[u].iter().find(|&&e| e % 2 == 0 && net.cap[e] == 0).expect("flow path");
            u = net.to[e];
            if u < 2 * m && u % 2 == 0 {
                arms[slot].push(cells[u / 2]);
            }
        }
    }
    Some(arms)
}

/// Four alternating arms of a saddle, listed in cyclic order around it:
/// super-level, sub-level, super-level, sub-level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleArms {
    pub arms: [Vec<usize>; 4],
}

/// Searches for two arms in `{f >= value}` and two in `{f <= value}`,
/// pairwise disjoint away from `s` and alternating around it, each reaching
/// distance `reach` (field units) from `s`.
pub fn saddle_arms(f: &FieldSample, s: &DiscreteSaddle, reach: f64) -> Result<Option<SaddleArms>> {
    if !(reach > 0.0) {
        return Err(invalid("arm length must be positive"));
    }
    let g = f.grid;
    let k = (reach / g.spacing).ceil() as i64 + 1;
    let (c, r) = g.coords(s.index);
    if !(g.contains(c as i64 - k, r as i64 - k) && g.contains(c as i64 + k, r as i64 + k)) {
        return Err(Error::OutOfBounds(format!("arms of length {reach} from vertex {} leave the grid", s.index)));
    }
    let runs = sign_runs(f, s.index);
    let v = s.value;
    let up = |i: usize| f.values[i] >= v;
    let down = |i: usize| f.values[i] <= v;
    let n = runs.len();
    for a in 0..n {
        for b in a + 1..n {
            for c2 in b + 1..n {
                for d in c2 + 1..n {
                    let quad = [a, b, c2, d];
                    for shift in 0..2 {
                        // Runs at positions shift, shift+2 are super-level.
                        let (p, q) = (quad[shift], quad[shift + 2]);
                        let (x, y) = (quad[1 - shift], quad[3 - shift]);
                        if !(runs[p].0 && runs[q].0 && !runs[x].0 && !runs[y].0) {
                            continue;
                        }
                        let Some(sup) = two_arms(f, s.index, &up, &runs[p].1, &runs[q].1, reach, k) else { continue };
                        let Some(sub) = two_arms(f, s.index, &down, &runs[x].1, &runs[y].1, reach, k) else { continue };
                        let [s0, s1] = sup;
                        let [d0, d1] = sub;
                        let arms = if shift == 0 { [s0, d0, s1, d1] } else { [d0, s0, d1, s1] };
                        return Ok(Some(SaddleArms { arms }));
                    }
                }
            }
        }
    }
    Ok(None)
}

pub fn saddle_arms_reach(f: &FieldSample, s: &DiscreteSaddle, reach: f64) -> Result<bool> {
    Ok(saddle_arms(f, s, reach)?.is_some())
}

fn grid_centre(f: &FieldSample) -> (f64, f64) {
    let g = f.grid;
    (g.origin.0 + g.spacing * (g.nx - 1) as f64 / 2.0, g.origin.1 + g.spacing * (g.ny - 1) as f64 / 2.0)
}

fn saddles_in_ball(f: &FieldSample, center: (f64, f64), radius: f64) -> Vec<DiscreteSaddle> {
    detect_saddles(f)
        .into_iter()
        .filter(|s| {
            let p = f.grid.position(s.index);
            (p.0 - center.0).hypot(p.1 - center.1) <= radius
        })
        .collect()
}

/// Per arm length, the fraction of fields with a saddle in the unit ball about
/// the grid centre whose arms reach that length. All lengths share the same
/// fields, so the estimates are non-increasing in the length.
pub fn estimate_four_arm(
    sampler: &Sampler,
    reaches: &[f64],
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<EstimatorReport>> {
    if n == 0 {
        return Err(invalid("need at least one sample"));
    }
    let started = std::time::Instant::now();
    let hits = run_replicates(n, workers, |i| -> Result<Vec<bool>> {
        let f = sampler.sample(derive_seed(master_seed, i, tag::FIELD));
        let saddles = saddles_in_ball(&f, grid_centre(&f), 1.0);
        reaches
            .iter()
            .map(|&r| {
                for s in &saddles {
                    if saddle_arms_reach(&f, s, r)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            })
            .collect()
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(reaches
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let (p, se) = proportion(hits.iter().filter(|h| h[k]).count(), n);
            EstimatorReport::new(p, se, n, master_seed).with_meta("R", r).timed(started)
        })
        .collect())
}

/// Default angular resolution for a circle of radius `r`.
pub fn default_n_theta(r: f64, spacing: f64) -> usize {
    ((8.0 * std::f64::consts::PI * r / spacing).ceil() as usize).max(64)
}

/// Angles of the strict local extrema of `theta -> f(center + r e^{i theta})`
/// over `n_theta` equally spaced angles, cyclically. Values come from cubic
/// convolution: bilinear values have derivative kinks on cell edges that add
/// spurious extremum pairs near flat extrema at any resolution.
pub fn circle_critical_angles(f: &FieldSample, center: (f64, f64), r: f64, n_theta: usize) -> Result<Vec<f64>> {
    if n_theta < 16 {
        return Err(invalid("n_theta must be at least 16"));
    }
    if !(r > 0.0) {
        return Err(invalid("circle radius must be positive"));
    }
    let angle = |k: usize| std::f64::consts::TAU * k as f64 / n_theta as f64;
    let vals = (0..n_theta)
        .map(|k| {
            let (s, c) = angle(k).sin_cos();
            f.interpolate_cubic(center.0 + r * c, center.1 + r * s)
                .ok_or_else(|| Error::OutOfBounds(format!("circle of radius {r} leaves the grid")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::new();
    for k in 0..n_theta {
        let (prev, cur, next) = (vals[(k + n_theta - 1) % n_theta], vals[k], vals[(k + 1) % n_theta]);
        if cur == next {
            return Err(Error::Degenerate(format!("plateau on circle at angle {}", angle(k))));
        }
        if (cur > prev && cur > next) || (cur < prev && cur < next) {
            out.push(angle(k));
        }
    }
    Ok(out)
}

pub fn circle_critical_points(f: &FieldSample, center: (f64, f64), r: f64, n_theta: usize) -> Result<usize> {
    Ok(circle_critical_angles(f, center, r, n_theta)?.len())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleBoundCheck {
    /// Discrete saddles in the closed ball of radius R whose arms reach 2R.
    pub n_saddles: usize,
    /// Critical points of the restriction to the circle of radius R.
    pub n_boundary_crit: usize,
    pub holds: bool,
    /// Pairs of saddles whose induced four-partitions of the circle critical
    /// points are incompatible.
    pub incompatible_pairs: usize,
}

/// Groups saddles into clusters of 8-adjacent vertices; one continuum saddle
/// often shows up at two or three neighbouring vertices.
pub fn saddle_clusters(f: &FieldSample, saddles: &[DiscreteSaddle]) -> Vec<Vec<usize>> {
    let mut uf = crate::union_find::UnionFind::new(saddles.len());
    for a in 0..saddles.len() {
        for b in a + 1..saddles.len() {
            let (ca, ra) = f.grid.coords(saddles[a].index);
            let (cb, rb) = f.grid.coords(saddles[b].index);
            if ca.abs_diff(cb) <= 1 && ra.abs_diff(rb) <= 1 {
                uf.union(a, b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for a in 0..saddles.len() {
        groups.entry(uf.find(a)).or_default().push(a);
    }
    groups.into_values().collect()
}

/// `#{2R-saddles in B(center, R)} <= max(0, #{critical points on the circle} - 3)`,
/// counting each cluster of adjacent discrete 2R-saddles once.
pub fn interior_saddle_bound_check(f: &FieldSample, center: (f64, f64), r: f64) -> Result<SaddleBoundCheck> {
    let ys = circle_critical_angles(f, center, r, default_n_theta(r, f.grid.spacing))?;
    let mut found = Vec::new();
    for s in saddles_in_ball(f, center, r) {
        if let Some(arms) = saddle_arms(f, &s, 2.0 * r)? {
            found.push((s, arms));
        }
    }
    let saddles: Vec<DiscreteSaddle> = found.iter().map(|(s, _)| *s).collect();
    let clusters = saddle_clusters(f, &saddles);
    let n_saddles = clusters.len();
    let mut parts: Vec<[Vec<bool>; 4]> = Vec::new();
    for cluster in &clusters {
        let arms = &found[cluster[0]].1;
        let mut exits: Vec<f64> = arms
            .arms
            .iter()
            .filter_map(|arm| {
                arm.iter().map(|&i| f.grid.position(i)).find(|p| (p.0 - center.0).hypot(p.1 - center.1) >= r)
            })
            .map(|p| (p.1 - center.1).atan2(p.0 - center.0).rem_euclid(std::f64::consts::TAU))
            .collect();
        exits.sort_by(f64::total_cmp);
        if exits.len() == 4 {
            let arc_of = |y: f64| exits.iter().filter(|&&e| e <= y).count() % 4;
            let mut p: [Vec<bool>; 4] = Default::default();
            for (k, part) in p.iter_mut().enumerate() {
                *part = ys.iter().map(|&y| arc_of(y) == k).collect();
            }
            parts.push(p);
        }
    }
    let mut incompatible_pairs = 0;
    for a in 0..parts.len() {
        for b in a + 1..parts.len() {
            if !compatible(&parts[a], &parts[b]) {
                incompatible_pairs += 1;
            }
        }
    }
    let bound = ys.len().saturating_sub(3);
    Ok(SaddleBoundCheck { n_saddles, n_boundary_crit: ys.len(), holds: n_saddles <= bound, incompatible_pairs })
}

/// Some part of one partition contains the complement of a part of the other.
fn compatible(p: &[Vec<bool>; 4], q: &[Vec<bool>; 4]) -> bool {
    let covers = |big: &Vec<bool>, small: &Vec<bool>| big.iter().zip(small).all(|(b, s)| *b || *s);
    (0..4).any(|i| (0..4).any(|j| covers(&p[i], &q[j]) || covers(&q[j], &p[i])))
}
