//! Gluing constructions for crossing events, checked cell by cell.
//!
//! A [`ConstructionPlan`] lists transformed copies of crossing events whose
//! intersection is claimed to imply a target event. [`verify_plan`] checks the
//! claim on one configuration and [`fuzz_plan`] on many.

use rand::Rng;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::montecarlo::run_replicates;
use crate::percolation::{has_event_unchecked, BoundaryArc, Config, EventSpec, Rect, Side, Transform};
use crate::rng::replicate_rng;

/// A base event moved by a lattice symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct EventCopy {
    pub base: EventSpec,
    pub transform: Transform,
}

impl EventCopy {
    pub fn new(base: EventSpec, transform: Transform) -> Self {
        Self { base, transform }
    }

    pub fn event(&self) -> EventSpec {
        self.base.transform(&self.transform)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionPlan {
    pub name: String,
    pub copies: Vec<EventCopy>,
    pub target: EventSpec,
    /// Anchored at the origin; configurations must cover it.
    pub bounding_box: Rect,
}

impl ConstructionPlan {
    pub fn validate(&self) -> Result<()> {
        let bb = self.bounding_box;
        if bb.x0 != 0 || bb.y0 != 0 {
            return Err(invalid("bounding box must start at the origin"));
        }
        for e in self.copies.iter().map(EventCopy::event).chain([self.target.clone()]) {
            e.validate()?;
            let r = e.bounding_rect();
            if r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > bb.w || r.y0 + r.h > bb.h {
                return Err(invalid(format!("{} geometry leaves the bounding box", self.name)));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.bounding_box.w as usize
    }

    pub fn height(&self) -> usize {
        self.bounding_box.h as usize
    }
}

/// Symmetry of `[0, w] x [0, h]` followed by a translation by `(dx, dy)`.
///
/// The symmetry part is normalised so that the image of the rectangle has
/// its lower-left corner at the origin before translating.
pub fn placed(w: i64, h: i64, quarter_turns: u8, reflect_x: bool, reflect_y: bool, dx: i64, dy: i64) -> Transform {
    let t = Transform { shift: (0, 0), quarter_turns, reflect_x, reflect_y };
    let img = t.apply_rect(&Rect::new(0, 0, w, h));
    t.then_translate(dx - img.x0, dy - img.y0)
}

fn whole(x: i64, what: &str) -> Result<i64> {
    if x < 0 {
        Err(invalid(format!("{what} must be a non-negative cell count, got {x}")))
    } else {
        Ok(x)
    }
}

/// Two crossings of an `R`-square to the arc `[a, b]` glued through an X
/// event of width `Q` give a crossing of the `(2R - Q) x R` rectangle.
pub fn plan_cross_x_cross(r: i64, q: i64, a: i64, b: i64) -> Result<ConstructionPlan> {
    let (r, q, a, b) = (whole(r, "R")?, whole(q, "Q")?, whole(a, "a")?, whole(b, "b")?);
    if r == 0 || q == 0 || q > r {
        return Err(invalid(format!("need 1 <= Q <= R, got Q={q} R={r}")));
    }
    if a > b || b > r {
        return Err(invalid(format!("need 0 <= a <= b <= R, got a={a} b={b}")));
    }
    let cross = EventSpec::cross_arc(r, a, b)?;
    // The X event only matters inside the overlap of the two squares, so the
    // strip is cut to [R - Q, R] x [0, R] with rays split at a and b.
    let x = EventSpec::x_strip(r - q, q, 0, r, a, b - a)?;
    let copies = vec![
        EventCopy::new(cross.clone(), Transform::identity()),
        EventCopy::new(x, Transform::identity()),
        EventCopy::new(cross, placed(r, r, 0, true, false, r - q, 0)),
    ];
    let target = EventSpec::left_right(Rect::new(0, 0, 2 * r - q, r));
    let plan = ConstructionPlan {
        name: format!("cross-x-cross(R={r},Q={q},a={a},b={b})"),
        copies,
        target,
        bounding_box: Rect::new(0, 0, 2 * r - q, r),
    };
    plan.validate()?;
    Ok(plan)
}

/// Four arc crossings of `R`-squares and one vertical crossing of an
/// `R x (R + d)` rectangle give the X event with gap `c + d`.
///
/// The two squares sit at the bottom and top of the tall rectangle. In the
/// lower square the arc crossings end on the lower `(R - c)/2` of each side,
/// in the upper square on the upper `(R - c)/2`; all four cross the strip
/// inside the tall rectangle and so meet its vertical crossing.
pub fn plan_x_from_crossings(r: i64, c: i64, d: i64) -> Result<ConstructionPlan> {
    let (r, c, d) = (whole(r, "R")?, whole(c, "c")?, whole(d, "d")?);
    if r == 0 || c > r {
        return Err(invalid(format!("need 0 <= c <= R and R >= 1, got c={c} R={r}")));
    }
    if (r + c) % 2 != 0 {
        return Err(invalid(format!("(R + c)/2 must be a whole cell count, got R={r} c={c}")));
    }
    let m = (r + c) / 2;
    let arc = EventSpec::cross_arc(r, m, r)?;
    let top = d;
    let copies = vec![
        // lower left ray: right side to the lower end of the left side
        EventCopy::new(arc.clone(), placed(r, r, 2, false, false, 0, 0)),
        // lower right ray
        EventCopy::new(arc.clone(), placed(r, r, 0, false, true, 0, 0)),
        // upper left ray
        EventCopy::new(arc.clone(), placed(r, r, 0, true, false, 0, top)),
        // upper right ray
        EventCopy::new(arc, Transform::translate(0, top)),
        EventCopy::new(EventSpec::left_right(Rect::new(0, 0, r + d, r)), placed(r + d, r, 1, false, false, 0, 0)),
    ];
    let ray = (r - c) / 2;
    let target = EventSpec::x_strip(0, r, 0, r + d, ray, c + d)?;
    let plan = ConstructionPlan {
        name: format!("x-from-crossings(R={r},c={c},d={d})"),
        copies,
        target,
        bounding_box: Rect::new(0, 0, r, r + d),
    };
    plan.validate()?;
    Ok(plan)
}

/// Ten arc crossings `Cross(R; 5R/8, R)` and five square crossings in the
/// squares at offsets `0`, `R/8` and `R/4` give a crossing of the
/// `5R/4 x R` rectangle.
///
/// The copies form five surround blocks: two arc crossings mirrored about a
/// mid-line of their square plus the square crossing that joins them, so the
/// union surrounds the centred quarter of one side. The blocks surround the
/// right side of the left square, the bottoms of all three squares and the
/// left side of the right square.
///
/// Four of the copies already force the crossing: the horizontal crossings
/// of the outer squares, a path from the top of the left square to the right
/// part `[5R/8, R]` of its bottom and one from the top of the right square to
/// the left part of its bottom. If the two vertical paths swap order they
/// meet; otherwise the left one lies right of the other, hence inside the
/// right square, and meets both horizontal crossings.
pub fn plan_long_rectangle(r: i64) -> Result<ConstructionPlan> {
    let r = whole(r, "R")?;
    if r == 0 || r % 8 != 0 {
        return Err(invalid(format!("R must be a positive multiple of 8, got {r}")));
    }
    let arc = EventSpec::cross_arc(r, 5 * r / 8, r)?;
    let square = EventSpec::left_right(Rect::new(0, 0, r, r));
    let copy = |e: &EventSpec, q: u8, rx: bool, ry: bool, x: i64| EventCopy::new(e.clone(), placed(r, r, q, rx, ry, x, 0));
    let (left, mid, right) = (0, r / 8, r / 4);
    let mut copies = Vec::with_capacity(15);
    // right side of the left square
    copies.extend([copy(&arc, 0, false, false, left), copy(&arc, 0, false, true, left), copy(&square, 1, false, false, left)]);
    // bottoms: top side to the right and left ends of the bottom side
    for x in [left, mid, right] {
        copies.extend([copy(&arc, 3, false, false, x), copy(&arc, 1, true, false, x), copy(&square, 0, false, false, x)]);
    }
    // left side of the right square
    copies.extend([copy(&arc, 0, true, false, right), copy(&arc, 2, false, false, right), copy(&square, 1, false, false, right)]);
    let w = 5 * r / 4;
    let plan = ConstructionPlan {
        name: format!("long-rectangle(R={r})"),
        copies,
        target: EventSpec::left_right(Rect::new(0, 0, w, r)),
        bounding_box: Rect::new(0, 0, w, r),
    };
    plan.validate()?;
    Ok(plan)
}

/// Annulus circuits `Circ(rho, 2 rho)` centred every `8 rho / 5` (rounded
/// down) along a line give a crossing of the rectangle of height `4 rho`
/// whose short sides pass through the first and last of six centres. With
/// `rho = 5R` this is `Circ(5R, 10R)` glued into `Cross(40R, 20R)`.
///
/// A dual path from top to bottom of the rectangle starts outside every
/// annulus and meets the line of centres within `rho` of some centre, inside
/// that annulus's hole, so it would have to cross the circuit. Consecutive
/// centres are at least `rho` apart, so consecutive circuits cannot nest and
/// must intersect.
pub fn plan_circuit_gluing(rho: i64) -> Result<ConstructionPlan> {
    plan_circuit_chain(rho, 6)
}

/// [`plan_circuit_gluing`] with `n` annuli. A single annulus yields the
/// crossing of the `(8 rho / 5) x 4 rho` rectangle centred on it.
pub fn plan_circuit_chain(rho: i64, n: usize) -> Result<ConstructionPlan> {
    let rho = whole(rho, "rho")?;
    if rho < 2 || n == 0 {
        return Err(invalid("need rho >= 2 and at least one annulus"));
    }
    let (outer, step) = (2 * rho, 8 * rho / 5);
    let margin = if n == 1 { 4 * rho / 5 } else { 0 };
    let len = step * (n as i64 - 1);
    // Centres on the lattice line y = 2 rho, the first at x = 2 rho.
    let copies = (0..n as i64)
        .map(|k| {
            let base = EventSpec::annulus((0.0, 0.0), rho as f64, outer as f64);
            EventCopy::new(base, Transform::translate(outer + k * step, outer))
        })
        .collect();
    let target = EventSpec::left_right(Rect::new(outer - margin, 0, len + 2 * margin, 2 * outer));
    let plan = ConstructionPlan {
        name: format!("circuit-gluing(rho={rho},n={n})"),
        copies,
        target,
        bounding_box: Rect::new(0, 0, len + 2 * outer, 2 * outer),
    };
    plan.validate()?;
    Ok(plan)
}

/// The plans exercised by the fuzz suites at a given size.
pub fn builtin_plans(size: i64) -> Result<Vec<ConstructionPlan>> {
    Ok(vec![
        plan_cross_x_cross(size, size / 2, size / 4, 3 * size / 4)?,
        plan_cross_x_cross(size, size, 0, size)?,
        plan_cross_x_cross(size, 3, size / 2, size / 2)?,
        plan_x_from_crossings(size, 0, 0)?,
        plan_x_from_crossings(size, size / 2, 3)?,
        plan_long_rectangle(size)?,
        plan_circuit_gluing(size)?,
    ])
}

/// A configuration on which every copy holds and the target fails.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub plan: String,
    pub config: Config,
    pub target: EventSpec,
}

impl Counterexample {
    /// JSON record with the configuration run-length encoded row by row,
    /// top row first: `a`/`i` for active/inactive, rows split by `/`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "plan": self.plan,
            "width": self.config.grid.nx,
            "height": self.config.grid.ny,
            "config": rle_encode(&self.config),
            "target": self.target,
        })
    }
}

pub fn rle_encode(c: &Config) -> String {
    let (nx, ny) = (c.grid.nx, c.grid.ny);
    let mut rows = Vec::with_capacity(ny);
    for r in (0..ny).rev() {
        let mut s = String::new();
        let mut x = 0;
        while x < nx {
            let v = c.active[r * nx + x];
            let mut run = 1;
            while x + run < nx && c.active[r * nx + x + run] == v {
                run += 1;
            }
            s.push_str(&format!("{run}{}", if v { 'a' } else { 'i' }));
            x += run;
        }
        rows.push(s);
    }
    rows.join("/")
}

pub fn rle_decode(s: &str, nx: usize, ny: usize) -> Result<Config> {
    let rows: Vec<&str> = s.split('/').collect();
    if rows.len() != ny {
        return Err(invalid(format!("expected {ny} rows, got {}", rows.len())));
    }
    let mut c = Config::filled(nx, ny, false);
    for (k, row) in rows.iter().enumerate() {
        let r = ny - 1 - k;
        let (mut x, mut num) = (0usize, 0usize);
        for ch in row.chars() {
            match ch {
                '0'..='9' => num = num * 10 + ch as usize - '0' as usize,
                'a' | 'i' => {
                    if num == 0 || x + num > nx {
                        return Err(invalid(format!("bad run in row {k}")));
                    }
                    for _ in 0..num {
                        c.set(x as i64, r as i64, ch == 'a');
                        x += 1;
                    }
                    num = 0;
                }
                _ => return Err(invalid(format!("unexpected character {ch:?}"))),
            }
        }
        if x != nx || num != 0 {
            return Err(invalid(format!("row {k} has {x} cells, expected {nx}")));
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Ok,
    Counterexample(Box<Counterexample>),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

/// Does every copy hold on `config`?
pub fn hypothesis_holds(plan: &ConstructionPlan, config: &Config) -> bool {
    plan.copies.iter().all(|c| has_event_unchecked(config, &c.event()))
}

pub fn verify_plan(plan: &ConstructionPlan, config: &Config) -> Result<Verdict> {
    if config.grid.nx < plan.width() || config.grid.ny < plan.height() {
        return Err(invalid(format!(
            "config {}x{} does not cover the {}x{} box of {}",
            config.grid.nx,
            config.grid.ny,
            plan.width(),
            plan.height(),
            plan.name
        )));
    }
    if !hypothesis_holds(plan, config) || has_event_unchecked(config, &plan.target) {
        return Ok(Verdict::Ok);
    }
    Ok(Verdict::Counterexample(Box::new(Counterexample {
        plan: plan.name.clone(),
        config: config.clone(),
        target: plan.target.clone(),
    })))
}

pub fn random_config(nx: usize, ny: usize, p: f64, rng: &mut impl Rng) -> Config {
    let grid = crate::GridSpec { nx, ny, spacing: 1.0, origin: (0.0, 0.0) };
    Config::new(grid, (0..nx * ny).map(|_| rng.random_bool(p)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzReport {
    pub plan: String,
    pub n_configs: usize,
    /// Configurations on which every copy held.
    pub n_hypothesis: usize,
    pub n_target: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.counterexamples.is_empty()
    }

    fn merge(&mut self, other: FuzzReport) {
        self.n_configs += other.n_configs;
        self.n_hypothesis += other.n_hypothesis;
        self.n_target += other.n_target;
        self.counterexamples.extend(other.counterexamples);
    }
}

const MAX_KEPT: usize = 8;

/// Checks the plan on `n` uniform configurations per density.
pub fn fuzz_plan(
    plan: &ConstructionPlan,
    n: usize,
    densities: &[f64],
    master_seed: u64,
    workers: Option<usize>,
) -> Result<FuzzReport> {
    plan.validate()?;
    let mut report = FuzzReport { plan: plan.name.clone(), n_configs: 0, n_hypothesis: 0, n_target: 0, counterexamples: vec![] };
    for (k, &p) in densities.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("density {p} outside [0, 1]")));
        }
        let part = fuzz_with(plan, n, master_seed, k as u64, workers, |rng| random_config(plan.width(), plan.height(), p, rng))?;
        report.merge(part);
    }
    Ok(report)
}

/// Checks the plan on `n` configurations drawn by `gen`.
pub fn fuzz_with<G>(
    plan: &ConstructionPlan,
    n: usize,
    master_seed: u64,
    tag: u64,
    workers: Option<usize>,
    gen: G,
) -> Result<FuzzReport>
where
    G: Fn(&mut rand_chacha::ChaCha8Rng) -> Config + Sync,
{
    let outcomes = run_replicates(n, workers, |i| {
        let mut rng = replicate_rng(master_seed, i, 0x5253_5700 + tag);
        let config = gen(&mut rng);
        let hyp = hypothesis_holds(plan, &config);
        let target = has_event_unchecked(&config, &plan.target);
        (hyp, target, if hyp && !target { Some(config) } else { None })
    })?;
    let mut report = FuzzReport { plan: plan.name.clone(), n_configs: n, n_hypothesis: 0, n_target: 0, counterexamples: vec![] };
    for (hyp, target, bad) in outcomes {
        report.n_hypothesis += hyp as usize;
        report.n_target += target as usize;
        if let Some(config) = bad {
            if report.counterexamples.len() < MAX_KEPT {
                report.counterexamples.push(Counterexample { plan: plan.name.clone(), config, target: plan.target.clone() });
            }
        }
    }
    Ok(report)
}

/// Activates a random 4-path from `from` to `to` inside `rect`, drifting
/// toward `to` with probability `bias`.
pub fn carve_path(config: &mut Config, rect: &Rect, from: (i64, i64), to: (i64, i64), bias: f64, rng: &mut impl Rng) {
    let (mut x, mut y) = from;
    config.set(x, y, true);
    let clamp = |v: i64, lo: i64, len: i64| v.clamp(lo, lo + len - 1);
    while (x, y) != to {
        let (dx, dy) = (to.0 - x, to.1 - y);
        let step = if rng.random_bool(bias) {
            if dy == 0 || (dx != 0 && rng.random_bool(dx.abs() as f64 / (dx.abs() + dy.abs()) as f64)) {
                (dx.signum(), 0)
            } else {
                (0, dy.signum())
            }
        } else {
            [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)]
        };
        x = clamp(x + step.0, rect.x0, rect.w);
        y = clamp(y + step.1, rect.y0, rect.h);
        config.set(x, y, true);
    }
}

/// A uniformly chosen cell of the closure of `arc`.
pub fn arc_cell(rect: &Rect, arc: &BoundaryArc, rng: &mut impl Rng) -> (i64, i64) {
    let cells = arc.closure_cells(rect);
    cells[rng.random_range(0..cells.len())]
}

/// Boundary pieces of the overlap box `[R - Q, R] x [0, R]` that the X
/// component of the three-copy construction may join.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    LeftLow,
    LeftHigh,
    RightLow,
    RightHigh,
    Top,
    Bottom,
}

/// The sixteen connection patterns `(g, h, i, j)`: a path from `g` to `h`
/// and one from `i` to `j`, with `g` in {left-high, top}, `h` in {bottom,
/// right-low}, `i` in {left-low, bottom}, `j` in {right-high, top}.
pub fn connection_patterns() -> Vec<[Piece; 4]> {
    let mut out = Vec::with_capacity(16);
    for g in [Piece::LeftHigh, Piece::Top] {
        for h in [Piece::Bottom, Piece::RightLow] {
            for i in [Piece::LeftLow, Piece::Bottom] {
                for j in [Piece::RightHigh, Piece::Top] {
                    out.push([g, h, i, j]);
                }
            }
        }
    }
    out
}

fn piece_arc(rect: &Rect, a: i64, b: i64, p: Piece) -> BoundaryArc {
    let arc = match p {
        Piece::LeftLow => rect.side_arc(Side::Left, 0, a),
        Piece::LeftHigh => rect.side_arc(Side::Left, b, rect.h),
        Piece::RightLow => rect.side_arc(Side::Right, 0, a),
        Piece::RightHigh => rect.side_arc(Side::Right, b, rect.h),
        Piece::Top => Ok(rect.full_side(Side::Top)),
        Piece::Bottom => Ok(rect.full_side(Side::Bottom)),
    };
    arc.expect("pieces lie on the box")
}

/// A configuration of the three-copy construction with both crossings and a
/// forced connection pattern carved into a random background.
pub fn forced_pattern_config(r: i64, q: i64, a: i64, b: i64, pattern: [Piece; 4], p: f64, rng: &mut impl Rng) -> Config {
    let w = 2 * r - q;
    let mut c = random_config(w as usize, r as usize, p, rng);
    let left = Rect::new(0, 0, r, r);
    let right = Rect::new(r - q, 0, r, r);
    let mid = Rect::new(r - q, 0, q, r);
    let right_arc = left.side_arc(Side::Right, a, b).expect("valid arc");
    let from = arc_cell(&left, &left.full_side(Side::Left), rng);
    let to = arc_cell(&left, &right_arc, rng);
    carve_path(&mut c, &left, from, to, 0.7, rng);
    let left_arc = right.side_arc(Side::Left, a, b).expect("valid arc");
    let from = arc_cell(&right, &right.full_side(Side::Right), rng);
    let to = arc_cell(&right, &left_arc, rng);
    carve_path(&mut c, &right, from, to, 0.7, rng);
    for (s, t) in [(pattern[0], pattern[1]), (pattern[2], pattern[3])] {
        let from = arc_cell(&mid, &piece_arc(&mid, a, b, s), rng);
        let to = arc_cell(&mid, &piece_arc(&mid, a, b, t), rng);
        carve_path(&mut c, &mid, from, to, 0.7, rng);
    }
    c
}

/// Searches for a counterexample by annealing: starting from random
/// configurations on which the target fails, cells are flipped to make more
/// copies hold while the target keeps failing. Uniform sampling rarely
/// reaches the winding dual paths that defeat a wrong plan; this does.
pub fn adversarial_search(
    plan: &ConstructionPlan,
    restarts: usize,
    steps: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<FuzzReport> {
    plan.validate()?;
    let events: Vec<EventSpec> = plan.copies.iter().map(EventCopy::event).collect();
    let (w, h) = (plan.width() as i64, plan.height() as i64);
    let score = |c: &Config| events.iter().filter(|e| has_event_unchecked(c, e)).count();
    let outcomes = run_replicates(restarts, workers, |i| {
        let mut rng = replicate_rng(master_seed, i, 0x414e_4e45);
        let p = rng.random_range(0.3..0.9);
        let mut c = random_config(w as usize, h as usize, p, &mut rng);
        while has_event_unchecked(&c, &plan.target) {
            c.set(rng.random_range(0..w), rng.random_range(0..h), false);
        }
        let mut s = score(&c);
        for it in 0..steps {
            if s == events.len() {
                break;
            }
            let temp = 1.5 * (1.0 - it as f64 / steps as f64) + 0.05;
            let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
            let old = c.get(x, y);
            c.set(x, y, !old);
            if !old && has_event_unchecked(&c, &plan.target) {
                c.set(x, y, old);
                continue;
            }
            let s2 = score(&c);
            if s2 >= s || rng.random_bool(((s2 as f64 - s as f64) / temp).exp()) {
                s = s2;
            } else {
                c.set(x, y, old);
            }
        }
        (s == events.len(), c)
    })?;
    let mut report = FuzzReport { plan: plan.name.clone(), n_configs: restarts, n_hypothesis: 0, n_target: 0, counterexamples: vec![] };
    for (hyp, config) in outcomes {
        if hyp {
            report.n_hypothesis += 1;
            if report.counterexamples.len() < MAX_KEPT {
                report.counterexamples.push(Counterexample { plan: plan.name.clone(), config, target: plan.target.clone() });
            }
        }
    }
    Ok(report)
}

/// Result of the arc-width search for one scale.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub r: i64,
    /// Least admissible width whose estimated probability reaches 1/4;
    /// `None` when even the full side falls short.
    pub alpha: Option<i64>,
    /// Widths at which the upper and lower 95% limits of the estimated
    /// probability first reach 1/4.
    pub band: (Option<i64>, Option<i64>),
    pub probability: f64,
    /// Estimated probability of a crossing to `{R} x [R/2, (R + alpha)/2]`.
    pub half_arc_probability: f64,
    pub half_arc_stderr: f64,
    pub n: usize,
}

impl AlphaEstimate {
    /// `P[half arc] >= 1/8 - 3 se`; vacuous when alpha is undefined.
    pub fn half_arc_holds(&self) -> bool {
        self.alpha.is_none() || self.half_arc_probability >= 0.125 - 3.0 * self.half_arc_stderr
    }

    pub fn report(&self, seed: u64) -> crate::EstimatorReport {
        let z = crate::stats::Z95;
        let est = self.alpha.map_or(f64::NAN, |a| a as f64);
        let se = match self.band {
            (Some(lo), Some(hi)) => (hi - lo) as f64 / (2.0 * z),
            _ => f64::NAN,
        };
        let show = |a: Option<i64>| a.map_or("undefined".to_string(), |a| a.to_string());
        crate::EstimatorReport::new(est, se, self.n, seed)
            .with_meta("R", self.r)
            .with_meta("status", if self.alpha.is_some() { "ok" } else { "undefined" })
            .with_meta("band_lo", show(self.band.0))
            .with_meta("band_hi", show(self.band.1))
            .with_meta("p_at_alpha", crate::stats::fmt_sig(self.probability))
            .with_meta("half_arc_p", crate::stats::fmt_sig(self.half_arc_probability))
            .with_meta("half_arc_se", crate::stats::fmt_sig(self.half_arc_stderr))
            .with_meta("half_arc_holds", self.half_arc_holds())
    }
}

/// Centred arc `{R} x [(R - alpha)/2, (R + alpha)/2]` of the square at `origin`.
fn centred_cross(r: i64, alpha: i64, origin: (i64, i64)) -> EventSpec {
    let lo = (r - alpha) / 2;
    EventSpec::cross_arc(r, lo, lo + alpha).expect("admissible width").transform(&Transform::translate(origin.0, origin.1))
}

/// Estimates `alpha_R` from configurations drawn by `gen`.
///
/// Crossing to a centred arc is increasing in the width, so each sample has a
/// least width at which it crosses; the estimated probability at width `a`
/// is the fraction of samples whose least width is at most `a`, and the
/// search over widths uses the same samples throughout.
pub fn estimate_alpha_with<G>(
    r: i64,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
    origin: (i64, i64),
    gen: G,
) -> Result<AlphaEstimate>
where
    G: Fn(u64) -> Config + Sync,
{
    if r < 2 || r % 2 != 0 {
        return Err(invalid(format!("R must be a positive even cell count, got {r}")));
    }
    if n < 100 {
        return Err(invalid(format!("need at least 100 samples, got {n}")));
    }
    let widths: Vec<i64> = (0..=r).step_by(2).collect();
    let least = run_replicates(n, workers, |i| {
        let c = gen(crate::rng::derive_seed(master_seed, i, crate::rng::tag::FIELD));
        let holds = |k: usize| has_event_unchecked(&c, &centred_cross(r, widths[k], origin));
        if !holds(widths.len() - 1) {
            return (None, c);
        }
        let (mut lo, mut hi) = (0usize, widths.len() - 1);
        if holds(0) {
            return (Some(0usize), c);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (Some(hi), c)
    })?;
    let mut counts = vec![0usize; widths.len()];
    for (k, _) in &least {
        if let Some(k) = k {
            counts[*k] += 1;
        }
    }
    let z = crate::stats::Z95;
    let (mut alpha, mut band_lo, mut band_hi, mut p_alpha) = (None, None, None, 0.0);
    let mut cum = 0;
    for (k, &w) in widths.iter().enumerate() {
        cum += counts[k];
        let (p, se) = crate::stats::proportion(cum, n);
        if band_lo.is_none() && p + z * se >= 0.25 {
            band_lo = Some(w);
        }
        if alpha.is_none() && p >= 0.25 {
            alpha = Some(w);
            p_alpha = p;
        }
        if band_hi.is_none() && p - z * se >= 0.25 {
            band_hi = Some(w);
        }
    }
    let (half_p, half_se) = match alpha {
        Some(a) => {
            let e = EventSpec::cross_arc(r, r / 2, (r + a) / 2)?.transform(&Transform::translate(origin.0, origin.1));
            let k = least.iter().filter(|(_, c)| has_event_unchecked(c, &e)).count();
            crate::stats::proportion(k, n)
        }
        None => (0.0, 0.0),
    };
    Ok(AlphaEstimate {
        r,
        alpha,
        band: (band_lo, band_hi),
        probability: p_alpha,
        half_arc_probability: half_p,
        half_arc_stderr: half_se,
        n,
    })
}

/// [`estimate_alpha_with`] for the excursion set `{f >= 0}` of sampled
/// fields, with the square centred in the sampler's grid.
pub fn estimate_alpha(
    sampler: &crate::Sampler,
    r: i64,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<AlphaEstimate> {
    let g = *sampler.grid();
    if r > g.nx as i64 || r > g.ny as i64 {
        return Err(crate::Error::OutOfBounds(format!("square of side {r} does not fit the {}x{} grid", g.nx, g.ny)));
    }
    let origin = ((g.nx as i64 - r) / 2, (g.ny as i64 - r) / 2);
    estimate_alpha_with(r, n, master_seed, workers, origin, |seed| crate::percolation::binarize(&sampler.sample(seed), 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogStar {
    Finite(u32),
    Divergent,
}

const LOG_STAR_CAP: u32 = 10_000;

/// Base-`b` iterated logarithm: the number of applications of `log_b`
/// needed to bring `x` to at most 1.
///
/// Since `log_b` is increasing, once an iterate does not decrease the
/// sequence never decreases again and the answer is `Divergent`; a
/// decreasing sequence that stalls above 1 has found a fixed point.
pub fn log_star(b: f64, x: f64) -> Result<LogStar> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(invalid(format!("base must exceed 1, got {b}")));
    }
    if !x.is_finite() {
        return Err(crate::Error::NonFinite(format!("x = {x}")));
    }
    let lb = b.ln();
    let mut x = x;
    for k in 0..LOG_STAR_CAP {
        // a few ulps of slack so that exact powers such as log2(16) land on 1
        if x <= 1.0 + 1e-12 {
            return Ok(LogStar::Finite(k));
        }
        let next = x.ln() / lb;
        if next >= x || (x - next) <= 1e-12 * x {
            return Ok(LogStar::Divergent);
        }
        x = next;
    }
    Ok(LogStar::Divergent)
}

/// Tabulated scales `x` in `[x0, x_max]` that are good: some tabulated `y`
/// in `[x/4, x]` has `alpha(y) >= y/4`, or some tabulated `y` in
/// `[x/4, x/2]` has `alpha(y + alpha(x)) <= 2 alpha(y)`.
pub fn good_scale_search(xs: &[f64], alpha: impl Fn(f64) -> f64, x0: f64, x_max: f64) -> Result<Vec<f64>> {
    let checked = |x: f64| -> Result<f64> {
        let a = alpha(x);
        if !(1.0..=x).contains(&a) {
            return Err(invalid(format!("alpha({x}) = {a} outside [1, {x}]")));
        }
        Ok(a)
    };
    let mut good = Vec::new();
    for &x in xs.iter().filter(|&&x| x >= x0 && x <= x_max) {
        let ax = checked(x)?;
        let mut member = false;
        for &y in xs.iter().filter(|&&y| y >= x / 4.0 && y <= x) {
            let ay = checked(y)?;
            if ay >= y / 4.0 || (y <= x / 2.0 && checked(y + ax)? <= 2.0 * ay) {
                member = true;
                break;
            }
        }
        if member {
            good.push(x);
        }
    }
    Ok(good)
}
