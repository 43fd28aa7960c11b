//! Config-driven experiment runner with byte-stable CSV output.
//!
//! Every experiment writes `<kind>.csv` and `manifest.json` into the output
//! directory. Randomness for scale `k` comes from
//! `derive_seed(master_seed, k, CONFIG)`, and all reductions happen in
//! replicate order, so outputs do not depend on the worker count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{write_field, ExactSampler, FieldSample, Sampler, SpectralSampler};
use crate::grid::GridSpec;
use crate::kernel::StationaryKernel;
use crate::montecarlo::try_run_replicates;
use crate::ou_variance::{bound_report, deloc_profile, tail_profile, variance_formula_rhs};
use crate::percolation::{EventSpec, Rect};
use crate::rng::{derive_seed, tag};
use crate::rsw::{builtin_plans, fuzz_plan};
use crate::saddle::{circle_critical_points, default_n_theta, estimate_four_arm, interior_saddle_bound_check};
use crate::stats::{fmt_sig, mean_se, proportion, variance_jackknife};
use crate::threshold::{sample_edge_thresholds, threshold_sweep, ThresholdResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const COLUMNS: [&str; 9] = ["kind", "kernel", "R", "level", "param", "n", "estimate", "stderr", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CrossingCurve,
    ThresholdStats,
    VarianceFormula,
    Deloc,
    RswFuzz,
    SaddleStats,
    Alpha,
    Bernoulli,
    FieldDump,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::CrossingCurve,
        Self::ThresholdStats,
        Self::VarianceFormula,
        Self::Deloc,
        Self::RswFuzz,
        Self::SaddleStats,
        Self::Alpha,
        Self::Bernoulli,
        Self::FieldDump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CrossingCurve => "crossing-curve",
            Self::ThresholdStats => "threshold-stats",
            Self::VarianceFormula => "variance-formula",
            Self::Deloc => "deloc",
            Self::RswFuzz => "rsw-fuzz",
            Self::SaddleStats => "saddle-stats",
            Self::Alpha => "alpha",
            Self::Bernoulli => "bernoulli",
            Self::FieldDump => "field-dump",
        }
    }

    /// Columns appended after `seed`, with their meaning.
    pub fn extra_columns(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::ThresholdStats | Self::Deloc | Self::SaddleStats => {
                &[("x", "tail threshold, ball radius or saddle radius, depending on param")]
            }
            Self::VarianceFormula => &[("verdict", "pass if |rhs - empirical| <= 3 combined SE (difference row only)")],
            Self::RswFuzz => &[
                ("n_hypothesis", "configs satisfying every copy"),
                ("n_target", "configs satisfying the target"),
            ],
            Self::Alpha => &[
                ("status", "ok or undefined"),
                ("half_arc_p", "probability of the half-arc crossing"),
                ("half_arc_se", "its standard error"),
            ],
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerSpec {
    Exact,
    Spectral {
        #[serde(default = "default_waves")]
        n_waves: usize,
    },
}

fn default_waves() -> usize {
    256
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self::Spectral { n_waves: default_waves() }
    }
}

/// Grid resolution; `nx`/`ny` are only needed when no scales are given or
/// for kinds that work on one fixed grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub spacing: f64,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedEvent {
    /// Left-right crossing of the whole `R x R` grid.
    Square,
    /// Circuit in the annulus `R/6 <= |x - c| <= R/2 - 1/2` about the grid centre.
    Annulus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventChoice {
    Named(NamedEvent),
    Explicit(EventSpec),
}

impl Default for EventChoice {
    fn default() -> Self {
        Self::Named(NamedEvent::Square)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub n: Option<usize>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
}

/// Kind-specific knobs; unset fields take defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// variance-formula: Gauss-Legendre nodes (default 16).
    pub quad_nodes: Option<usize>,
    /// variance-formula: pairs per node (default mc.n).
    pub n_pairs: Option<usize>,
    /// threshold-stats, deloc: ball radii in field units.
    pub radii: Option<Vec<f64>>,
    /// rsw-fuzz: Bernoulli densities (default 0.3, 0.5, 0.7).
    pub densities: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub kernel: Option<StationaryKernel>,
    #[serde(default)]
    pub sampler: SamplerSpec,
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub event: EventChoice,
    /// Scales R: square side in cells, except saddle-stats (radius in field units).
    #[serde(default)]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub params: Params,
    pub output: PathBuf,
}

/// Parses a config, reporting JSON errors as diagnostics.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    serde_json::from_str(text).map_err(|e| vec![format!("config: {e}")])
}

fn needs_kernel(kind: ExperimentKind) -> bool {
    !matches!(kind, ExperimentKind::RswFuzz | ExperimentKind::Bernoulli)
}

fn integral_scales(c: &ExperimentConfig) -> bool {
    !matches!(c.kind, ExperimentKind::SaddleStats)
}

/// Schema and cross-field checks; an empty list means the config is runnable.
pub fn validate(c: &ExperimentConfig) -> Vec<String> {
    use ExperimentKind as K;
    let mut d = Vec::new();
    if c.mc.master_seed.is_none() {
        d.push("mc.master_seed required".to_string());
    }
    match c.mc.n {
        None => d.push("mc.n required".into()),
        Some(0) => d.push("mc.n must be at least 1".into()),
        Some(_) => {}
    }
    if c.mc.workers == Some(0) {
        d.push("mc.workers must be at least 1".into());
    }
    if c.output.as_os_str().is_empty() {
        d.push("output must be a non-empty path".into());
    }
    if needs_kernel(c.kind) {
        match &c.kernel {
            None => d.push("kernel required".into()),
            Some(k) => {
                if let Err(e) = k.validate() {
                    d.push(format!("kernel: {e}"));
                }
            }
        }
        match &c.grid {
            None => d.push("grid required".into()),
            Some(g) if !(g.spacing > 0.0 && g.spacing.is_finite()) => d.push("grid.spacing must be positive".into()),
            Some(_) => {}
        }
    }
    if let SamplerSpec::Spectral { n_waves: 0 } = c.sampler {
        d.push("sampler.n_waves must be at least 1".into());
    }
    if c.kind == K::VarianceFormula && c.sampler != SamplerSpec::Exact {
        d.push("sampler: exact sampler required for variance-formula".into());
    }
    if matches!(c.kernel, Some(StationaryKernel::ExplicitMatrixFree { .. })) && c.sampler != SamplerSpec::Exact {
        d.push("sampler: explicit kernels need the exact sampler".into());
    }
    let fixed_grid = matches!(c.kind, K::SaddleStats | K::FieldDump) || matches!(c.event, EventChoice::Explicit(_));
    let dims = c.grid.as_ref().and_then(|g| g.nx.zip(g.ny));
    if fixed_grid && needs_kernel(c.kind) && dims.is_none() {
        d.push("grid.nx and grid.ny required for this kind or event".into());
    }
    if !fixed_grid && !matches!(c.kind, K::FieldDump) && c.scales.is_empty() {
        d.push("scales must be non-empty".into());
    }
    for (i, r) in c.scales.iter().enumerate() {
        if !(*r > 0.0 && r.is_finite()) {
            d.push(format!("scales[{i}] must be positive"));
        } else if integral_scales(c) && (r.fract() != 0.0 || *r < 2.0) {
            d.push(format!("scales[{i}] must be an integer >= 2"));
        } else if c.kind == K::Alpha && r.rem_euclid(2.0) != 0.0 {
            d.push(format!("scales[{i}] must be even for alpha"));
        }
    }
    if c.levels.iter().any(|l| !l.is_finite()) {
        d.push("levels must be finite".into());
    }
    if c.kind == K::CrossingCurve && c.levels.is_empty() {
        d.push("levels must be non-empty for crossing-curve".into());
    }
    let n = c.mc.n.unwrap_or(0);
    match c.kind {
        K::ThresholdStats | K::Deloc if n < 100 => d.push("mc.n must be at least 100 for this kind".into()),
        K::ThresholdStats if !c.levels.is_empty() && n < 1000 => {
            d.push("mc.n must be at least 1000 for tail levels".into())
        }
        K::VarianceFormula | K::Bernoulli if n < 2 => d.push("mc.n must be at least 2 for this kind".into()),
        K::Alpha if n < 100 => d.push("mc.n must be at least 100 for alpha".into()),
        _ => {}
    }
    if let Some(radii) = &c.params.radii {
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
            d.push("params.radii must be positive and strictly ascending".into());
        }
    }
    if let Some(ds) = &c.params.densities {
        if ds.is_empty() || ds.iter().any(|p| !(0.0..=1.0).contains(p)) {
            d.push("params.densities must lie in [0, 1]".into());
        }
    }
    if c.params.quad_nodes == Some(0) {
        d.push("params.quad_nodes must be at least 1".into());
    }
    if matches!(c.params.n_pairs, Some(0 | 1)) {
        d.push("params.n_pairs must be at least 2".into());
    }
    d
}

/// Parses and validates in one step.
pub fn validate_text(text: &str) -> Vec<String> {
    match parse_config(text) {
        Ok(c) => validate(&c),
        Err(d) => d,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub config_hash: String,
    pub tool_version: String,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub columns: Vec<String>,
    pub extra_columns: Vec<(String, String)>,
    pub counterexamples: usize,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// Counterexamples found by rsw-fuzz; always 0 for other kinds.
    pub counterexamples: usize,
}

/// Hash of the config without the worker count and output path, neither of
/// which affects the outputs.
pub fn config_hash(c: &ExperimentConfig) -> String {
    let mut c = c.clone();
    c.mc.workers = None;
    c.output = PathBuf::new();
    hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serialises")))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

struct Row {
    r: String,
    level: String,
    param: String,
    n: usize,
    estimate: f64,
    stderr: f64,
    seed: u64,
    extra: Vec<String>,
}

impl Row {
    fn new(r: impl ToString, param: &str, n: usize, estimate: f64, stderr: f64, seed: u64) -> Self {
        Self { r: r.to_string(), level: String::new(), param: param.into(), n, estimate, stderr, seed, extra: vec![] }
    }

    fn level(mut self, l: f64) -> Self {
        self.level = fmt_sig(l);
        self
    }

    fn extra(mut self, xs: &[String]) -> Self {
        self.extra = xs.to_vec();
        self
    }
}

/// Files produced by a run, before they touch the disk.
struct Produced {
    rows: Vec<Row>,
    blobs: Vec<(String, Vec<u8>)>,
    counterexamples: usize,
}

fn fmt_r(r: f64) -> String {
    fmt_sig(r)
}

struct Ctx<'a> {
    c: &'a ExperimentConfig,
    seed: u64,
    workers: Option<usize>,
    n: usize,
}

impl Ctx<'_> {
    fn kernel(&self) -> &StationaryKernel {
        self.c.kernel.as_ref().expect("validated")
    }

    fn spacing(&self) -> f64 {
        self.c.grid.as_ref().map_or(1.0, |g| g.spacing)
    }

    fn block_seed(&self, k: usize) -> u64 {
        derive_seed(self.seed, k as u64, tag::CONFIG)
    }

    fn sampler(&self, grid: &GridSpec) -> Result<Sampler> {
        Ok(match self.c.sampler {
            SamplerSpec::Exact => Sampler::Exact(ExactSampler::new(self.kernel(), grid)?),
            SamplerSpec::Spectral { n_waves } => Sampler::Spectral(SpectralSampler::new(self.kernel(), grid, n_waves)?),
        })
    }

    fn fixed_grid(&self) -> Result<GridSpec> {
        let g = self.c.grid.as_ref().expect("validated");
        GridSpec::new(g.nx.unwrap_or(1), g.ny.unwrap_or(1), g.spacing)
    }

    /// `(R label, grid, event)` per scale, or the single explicit instance.
    fn instances(&self) -> Result<Vec<(String, GridSpec, EventSpec)>> {
        match &self.c.event {
            EventChoice::Explicit(e) => {
                let g = self.fixed_grid()?;
                e.check_within(g.nx, g.ny)?;
                Ok(vec![(g.nx.to_string(), g, e.clone())])
            }
            EventChoice::Named(shape) => self
                .c
                .scales
                .iter()
                .map(|&r| {
                    let side = r as usize;
                    let g = GridSpec::square(side, self.spacing())?;
                    let e = match shape {
                        NamedEvent::Square => EventSpec::left_right(Rect::square(0, 0, side as i64)),
                        NamedEvent::Annulus => EventSpec::annulus((r / 2.0, r / 2.0), r / 6.0, r / 2.0 - 0.5),
                    };
                    e.validate()?;
                    Ok((fmt_r(r), g, e))
                })
                .collect(),
        }
    }

    fn thresholds(&self, sampler: &Sampler, e: &EventSpec, seed: u64) -> Result<Vec<ThresholdResult>> {
        try_run_replicates(self.n, self.workers, |i| threshold_sweep(&sampler.sample(derive_seed(seed, i, tag::FIELD)), e))
    }

    fn radii(&self) -> Vec<f64> {
        let h = self.spacing();
        self.c.params.radii.clone().unwrap_or_else(|| vec![h, 2.0 * h, 4.0 * h])
    }
}

fn crossing_curve(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    for (k, (r, g, e)) in x.instances()?.into_iter().enumerate() {
        let seed = x.block_seed(k);
        let ts = x.thresholds(&x.sampler(&g)?, &e, seed)?;
        for &l in &x.c.levels {
            // The event holds at level l exactly when T <= l.
            let (p, se) = proportion(ts.iter().filter(|t| t.t <= l).count(), x.n);
            rows.push(Row::new(&r, "p_cross", x.n, p, se, seed).level(l));
        }
    }
    Ok(rows)
}

fn threshold_stats(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    for (k, (r, g, e)) in x.instances()?.into_iter().enumerate() {
        let seed = x.block_seed(k);
        let res = x.thresholds(&x.sampler(&g)?, &e, seed)?;
        let ts: Vec<f64> = res.iter().map(|t| t.t).collect();
        let (m, mse) = mean_se(&ts);
        let (v, vse) = variance_jackknife(&ts);
        rows.push(Row::new(&r, "mean_T", x.n, m, mse, seed).extra(&[String::new()]));
        rows.push(Row::new(&r, "var_T", x.n, v, vse, seed).extra(&[String::new()]));
        if !x.c.levels.is_empty() {
            let tp = tail_profile(&ts, &x.c.levels)?;
            for (i, t) in tp.thresholds.iter().enumerate() {
                let (p, se) = proportion(tp.counts[i], x.n);
                rows.push(Row::new(&r, "tail", x.n, p, se, seed).extra(&[fmt_sig(*t)]));
            }
        }
        let locs: Vec<usize> = res.iter().map(|t| t.cell()).collect();
        let prof = deloc_profile(&g, &locs, &x.radii())?;
        for (rad, s) in prof.radii.iter().zip(&prof.sigma) {
            let se = (s * (1.0 - s) / x.n as f64).sqrt();
            rows.push(Row::new(&r, "sigma", x.n, *s, se, seed).extra(&[fmt_sig(*rad)]));
        }
    }
    Ok(rows)
}

fn deloc(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    for (k, (r, g, e)) in x.instances()?.into_iter().enumerate() {
        let seed = x.block_seed(k);
        let res = x.thresholds(&x.sampler(&g)?, &e, seed)?;
        let ts: Vec<f64> = res.iter().map(|t| t.t).collect();
        let (v, vse) = variance_jackknife(&ts);
        let locs: Vec<usize> = res.iter().map(|t| t.cell()).collect();
        let radii = x.radii();
        let prof = deloc_profile(&g, &locs, &radii)?;
        let b = bound_report(x.kernel(), &prof, v, &radii)?;
        rows.push(Row::new(&r, "var_T", x.n, v, vse, seed).extra(&[String::new()]));
        for (i, rad) in radii.iter().enumerate() {
            let s = prof.sigma[i];
            let x_col = [fmt_sig(*rad)];
            rows.push(Row::new(&r, "sigma", x.n, s, (s * (1.0 - s) / x.n as f64).sqrt(), seed).extra(&x_col));
            rows.push(Row::new(&r, "m_bar", x.n, b.m_bar[i], f64::NAN, seed).extra(&x_col));
            rows.push(Row::new(&r, "m_lower", x.n, b.m_lower[i], f64::NAN, seed).extra(&x_col));
        }
        rows.push(Row::new(&r, "var_over_m_bar", x.n, b.ratio, f64::NAN, seed).extra(&[String::new()]));
    }
    Ok(rows)
}

fn variance_formula(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    let nodes = x.c.params.quad_nodes.unwrap_or(16);
    let pairs = x.c.params.n_pairs.unwrap_or(x.n);
    for (k, (r, g, e)) in x.instances()?.into_iter().enumerate() {
        let seed = x.block_seed(k);
        let rhs = variance_formula_rhs(x.kernel(), &g, &e, pairs, nodes, seed, x.workers)?;
        let sampler = x.sampler(&g)?;
        // Fields for the empirical side come from an independent seed.
        let emp_seed = derive_seed(seed, 1, tag::FRESH);
        let ts: Vec<f64> = x.thresholds(&sampler, &e, emp_seed)?.iter().map(|t| t.t).collect();
        let (v, vse) = variance_jackknife(&ts);
        let diff = rhs.estimate - v;
        let combined = (rhs.stderr.powi(2) + vse.powi(2)).sqrt();
        let verdict = if diff.abs() <= 3.0 * combined { "pass" } else { "fail" };
        rows.push(Row::new(&r, "rhs", rhs.n, rhs.estimate, rhs.stderr, seed).extra(&[String::new()]));
        rows.push(Row::new(&r, "empirical", x.n, v, vse, emp_seed).extra(&[String::new()]));
        rows.push(Row::new(&r, "difference", x.n, diff, combined, seed).extra(&[verdict.to_string()]));
    }
    Ok(rows)
}

fn rsw_fuzz(x: &Ctx, blobs: &mut Vec<(String, Vec<u8>)>) -> Result<(Vec<Row>, usize)> {
    let densities = x.c.params.densities.clone().unwrap_or_else(|| vec![0.3, 0.5, 0.7]);
    let mut rows = vec![];
    let mut found = vec![];
    let mut k = 0;
    for &size in &x.c.scales {
        for plan in builtin_plans(size as i64)? {
            let seed = x.block_seed(k);
            k += 1;
            let rep = fuzz_plan(&plan, x.n, &densities, seed, x.workers)?;
            let extra = [rep.n_hypothesis.to_string(), rep.n_target.to_string()];
            rows.push(Row::new(fmt_r(size), &plan.name, rep.n_configs, rep.counterexamples.len() as f64, 0.0, seed).extra(&extra));
            found.extend(rep.counterexamples.iter().map(|c| c.to_json()));
        }
    }
    let count = found.len();
    if count > 0 {
        blobs.push(("counterexamples.json".into(), serde_json::to_vec_pretty(&found)?));
    }
    Ok((rows, count))
}

fn saddle_stats(x: &Ctx) -> Result<Vec<Row>> {
    let g = x.fixed_grid()?;
    let sampler = x.sampler(&g)?;
    let center = (
        g.origin.0 + g.spacing * (g.nx - 1) as f64 / 2.0,
        g.origin.1 + g.spacing * (g.ny - 1) as f64 / 2.0,
    );
    let half = center.0.min(center.1) - g.spacing;
    let mut rows = vec![];
    let reaches: Vec<f64> = x.c.scales.iter().copied().filter(|&r| r <= half).collect();
    let seed = x.block_seed(0);
    for (rep, r) in estimate_four_arm(&sampler, &reaches, x.n, seed, x.workers)?.iter().zip(&reaches) {
        rows.push(Row::new(fmt_r(*r), "four_arm", x.n, rep.estimate, rep.stderr, seed).extra(&[fmt_sig(*r)]));
    }
    for (k, &r) in x.c.scales.iter().enumerate() {
        let seed = x.block_seed(k + 1);
        if r <= half {
            let counts = try_run_replicates(x.n, x.workers, |i| {
                let f = sampler.sample(derive_seed(seed, i, tag::FIELD));
                circle_critical_points(&f, center, r, default_n_theta(r, g.spacing)).map(|c| c as f64 / r)
            })?;
            let (m, se) = mean_se(&counts);
            rows.push(Row::new(fmt_r(r), "circle_crit_per_R", x.n, m, se, seed).extra(&[fmt_sig(r)]));
        }
        if 3.0 * r <= half {
            let holds = try_run_replicates(x.n, x.workers, |i| {
                let f = sampler.sample(derive_seed(seed, i, tag::FRESH));
                interior_saddle_bound_check(&f, center, r).map(|b| b.holds)
            })?;
            let (p, se) = proportion(holds.iter().filter(|h| **h).count(), x.n);
            rows.push(Row::new(fmt_r(r), "interior_bound_rate", x.n, p, se, seed).extra(&[fmt_sig(r)]));
        }
    }
    Ok(rows)
}

fn alpha(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    for (k, &r) in x.c.scales.iter().enumerate() {
        let seed = x.block_seed(k);
        let g = GridSpec::square(r as usize, x.spacing())?;
        let est = crate::rsw::estimate_alpha(&x.sampler(&g)?, r as i64, x.n, seed, x.workers)?;
        let rep = est.report(seed);
        let extra = [
            rep.metadata["status"].clone(),
            fmt_sig(est.half_arc_probability),
            fmt_sig(est.half_arc_stderr),
        ];
        rows.push(Row::new(fmt_r(r), "alpha", x.n, rep.estimate, rep.stderr, seed).extra(&extra));
    }
    Ok(rows)
}

fn bernoulli(x: &Ctx) -> Result<Vec<Row>> {
    let mut rows = vec![];
    for (k, &r) in x.c.scales.iter().enumerate() {
        let seed = x.block_seed(k);
        let side = r as usize;
        let ts: Vec<f64> = sample_edge_thresholds(side + 1, side, x.n, seed, x.workers)?.iter().map(|t| t.t).collect();
        let (p, pse) = proportion(ts.iter().filter(|&&t| t <= 0.0).count(), x.n);
        let (m, mse) = mean_se(&ts);
        let (v, vse) = variance_jackknife(&ts);
        let label = fmt_r(r);
        rows.push(Row::new(&label, "p_T_le_0", x.n, p, pse, seed).level(0.0));
        rows.push(Row::new(&label, "mean_T", x.n, m, mse, seed));
        rows.push(Row::new(&label, "var_T", x.n, v, vse, seed));
    }
    Ok(rows)
}

fn field_dump(x: &Ctx, blobs: &mut Vec<(String, Vec<u8>)>) -> Result<Vec<Row>> {
    let g = x.fixed_grid()?;
    let seed = x.block_seed(0);
    let f: FieldSample = x.sampler(&g)?.sample(seed);
    let mut buf = Vec::new();
    write_field(&mut buf, &f)?;
    blobs.push(("field.bin".into(), buf));
    let (m, se) = mean_se(&f.values);
    Ok(vec![Row::new(g.nx, "field_mean", g.len(), m, se, seed)])
}

fn produce(x: &Ctx) -> Result<Produced> {
    use ExperimentKind as K;
    let mut blobs = vec![];
    let mut counterexamples = 0;
    let rows = match x.c.kind {
        K::CrossingCurve => crossing_curve(x)?,
        K::ThresholdStats => threshold_stats(x)?,
        K::VarianceFormula => variance_formula(x)?,
        K::Deloc => deloc(x)?,
        K::RswFuzz => {
            let (rows, found) = rsw_fuzz(x, &mut blobs)?;
            counterexamples = found;
            rows
        }
        K::SaddleStats => saddle_stats(x)?,
        K::Alpha => alpha(x)?,
        K::Bernoulli => bernoulli(x)?,
        K::FieldDump => field_dump(x, &mut blobs)?,
    };
    Ok(Produced { rows, blobs, counterexamples })
}

fn csv_cell(s: String) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn render_csv(kind: ExperimentKind, kernel: &str, rows: &[Row]) -> String {
    let mut header: Vec<&str> = COLUMNS.to_vec();
    header.extend(kind.extra_columns().iter().map(|(c, _)| *c));
    let width = header.len();
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![
            kind.name().to_string(),
            kernel.to_string(),
            r.r.clone(),
            r.level.clone(),
            r.param.clone(),
            r.n.to_string(),
            fmt_sig(r.estimate),
            fmt_sig(r.stderr),
            r.seed.to_string(),
        ];
        cells.extend(r.extra.iter().cloned());
        cells.resize(width, String::new());
        let cells: Vec<String> = cells.into_iter().map(csv_cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Runs an experiment. Nothing is left in the output directory if the run
/// fails; validation failures come back as [`Error::Validation`].
pub fn run(c: &ExperimentConfig) -> Result<RunOutcome> {
    let diags = validate(c);
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    let started = now_ms();
    let seed = c.mc.master_seed.expect("validated");
    let ctx = Ctx { c, seed, workers: c.mc.workers, n: c.mc.n.expect("validated") };
    let produced = produce(&ctx)?;
    let kernel = match c.kind {
        ExperimentKind::RswFuzz => "none".to_string(),
        ExperimentKind::Bernoulli => "iid-normal-edges".to_string(),
        _ => ctx.kernel().name(),
    };
    let mut files = vec![(format!("{}.csv", c.kind.name()), render_csv(c.kind, &kernel, &produced.rows).into_bytes())];
    files.extend(produced.blobs);

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<RunOutcome> {
        fs::create_dir_all(&c.output)?;
        let mut outputs = Vec::new();
        for (name, bytes) in &files {
            let path = c.output.join(name);
            written.push(path.clone());
            fs::write(&path, bytes)?;
            outputs.push(OutputDigest { path: name.clone(), sha256: sha256_file(&path)? });
        }
        let mut columns: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
        columns.extend(c.kind.extra_columns().iter().map(|(n, _)| n.to_string()));
        let manifest = RunManifest {
            kind: c.kind.name().into(),
            config_hash: config_hash(c),
            tool_version: TOOL_VERSION.into(),
            master_seed: seed,
            workers: c.mc.workers,
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
            columns,
            extra_columns: c.kind.extra_columns().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            counterexamples: produced.counterexamples,
            outputs,
        };
        let manifest_path = c.output.join("manifest.json");
        written.push(manifest_path.clone());
        fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(RunOutcome { manifest, manifest_path, counterexamples: produced.counterexamples })
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

/// Re-hashes every output listed in a manifest; returns the mismatching paths.
pub fn verify_manifest(manifest_path: &Path) -> Result<Vec<String>> {
    let m: RunManifest = serde_json::from_slice(&fs::read(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut bad = vec![];
    for o in &m.outputs {
        if sha256_file(&dir.join(&o.path)).ok().as_deref() != Some(o.sha256.as_str()) {
            bad.push(o.path.clone());
        }
    }
    Ok(bad)
}
