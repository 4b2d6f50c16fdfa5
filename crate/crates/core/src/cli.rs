//! Command-line front end: load measures, run the experiment pipelines and write
//! CSV or JSON reports.
//!
//! Exit status is 0 when every check passes, 1 on an invariant failure or a numerical
//! error, and 2 on configuration or I/O errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{clark_inner, herglotz_residual, phi_coeffs, RationalInner};
use crate::linalg;
use crate::measure::{fixtures, AtomicMeasure, MeasureConfig, MultiMeasureSystem};
use crate::modelspace::{clark_embedding, ClarkFrame};
use crate::operators::{
    build_multi_v, build_v, build_vtilde, calculus_v, calculus_vtilde, cocycle_law_residual,
    cocycle_w, model_space_vectors, semigroup_residual_v, semigroup_residual_vtilde, wold_check,
    DefectProbe, TruncatedOperator,
};
use crate::parfenov::{boundary_moment, embedding_operator, ParfenovWeight};
use crate::schatten::{convergence_scan, sqrt_t_probe, ScanBuilder, ScanThresholds};

#[derive(Debug, Parser)]
#[command(name = "cocyclic", version, about = "Clark model spaces and cocyclic perturbations of the shift semigroup")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clark inner function of each measure: coefficients, θ(0), θ(1), residuals.
    Inner,
    /// Invariant battery with one pass/fail line per check.
    Verify,
    /// Schatten norms of the difference operators over the (builder, t, p, N) grid.
    Scan,
    /// Parfenov sums, boundary moments and the embedding comparison.
    Parfenov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Flags; each one overrides the matching field of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Experiment config JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Measure config path, or `fixture:<id>`; repeatable.
    #[arg(long, global = true)]
    pub measure: Vec<String>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Times, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Schatten exponents, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Truncation degrees, comma separated and ascending.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    /// Parfenov summation window K.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Gauss–Legendre nodes per unit interval.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Tolerance overrides, `key=value,...`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub tol: Vec<String>,
    /// Scan builders, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub builder: Option<Vec<String>>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Write the per-interval Parfenov integrals `(k, integral)` as CSV here.
    #[arg(long, global = true)]
    pub intervals: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for the random spot-check vectors.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

/// Tolerances and their defaults. Keys absent here are rejected.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("backward", 1e-10),
    ("cocycle", 1e-4),
    ("converged", 0.02),
    ("defect", 1e-5),
    ("dilation", 1e-10),
    ("diverging", 0.10),
    ("gram", 1e-8),
    ("identity", 1e-12),
    ("intertwining", 1e-7),
    ("isometry", 1e-7),
    ("multi", 1e-6),
    ("parseval", 1e-6),
    ("semigroup_v", 1e-6),
    ("semigroup_vtilde", 1e-5),
    ("spectrum", 1e-8),
    ("spectrum_gap", 1e-6),
    ("unitary_invariance", 1e-9),
    ("wold_angle", 1e-4),
    ("wold_intertwining", 1e-7),
];

fn default_q() -> f64 {
    4.0
}
fn default_t() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_p() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}
fn default_n() -> Vec<usize> {
    vec![512]
}
fn default_window() -> usize {
    crate::parfenov::DEFAULT_WINDOW
}
fn default_nodes() -> usize {
    crate::parfenov::DEFAULT_NODES
}
fn default_budget() -> f64 {
    10.0
}

/// Everything a command needs; loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub measures: Vec<String>,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Bound on `Σ 𝔐_q^{1/q}` for the multi-measure check.
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_t")]
    pub t_list: Vec<f64>,
    #[serde(default = "default_p")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub builders: Vec<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `--config` if given, then every flag on top.
    pub fn from_options(o: &Options) -> Result<Self> {
        let mut c = match &o.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if !o.measure.is_empty() {
            c.measures = o.measure.clone();
        }
        macro_rules! take {
            ($flag:ident, $field:ident) => {
                if let Some(v) = &o.$flag {
                    c.$field = v.clone();
                }
            };
        }
        take!(q, q);
        take!(t, t_list);
        take!(p, p_list);
        take!(dim, n_list);
        take!(window, window);
        take!(nodes, nodes);
        take!(builder, builders);
        take!(format, format);
        take!(seed, seed);
        if o.output.is_some() {
            c.output = o.output.clone();
        }
        for kv in &o.tol {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("tolerance {kv:?} is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("tolerance {kv:?} has no numeric value")))?;
            c.tolerances.insert(k.trim().to_string(), v);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 3.0) {
            return Err(Error::InvalidExponent { q: self.q, min: 3.0 });
        }
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.measures.is_empty() {
            return bad("no measure given");
        }
        if self.t_list.is_empty() || self.p_list.is_empty() || self.n_list.is_empty() {
            return bad("t, p and N lists must be nonempty");
        }
        if self.t_list.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return bad("times must be finite and nonnegative");
        }
        if self.p_list.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return bad("Schatten exponents must be positive");
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) || self.n_list[0] == 0 {
            return bad("N list must be positive and strictly ascending");
        }
        if self.window < 8 || self.nodes < 4 {
            return bad("window must be at least 8 and nodes at least 4");
        }
        if !(self.budget > 0.0) {
            return bad("budget must be positive");
        }
        for (k, v) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(name, _)| name == k) {
                return Err(Error::Config(format!("unknown tolerance key {k:?}")));
            }
            if !(*v > 0.0) {
                return Err(Error::Config(format!("tolerance {k} must be positive")));
            }
        }
        for b in &self.builders {
            b.parse::<ScanBuilder>()?;
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no default tolerance {key}"))
        })
    }

    pub fn scan_builders(&self) -> Vec<ScanBuilder> {
        if self.builders.is_empty() {
            return ScanBuilder::ALL.to_vec();
        }
        self.builders.iter().filter_map(|b| b.parse().ok()).collect()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// What a `--measure` argument resolves to.
#[derive(Debug, Clone)]
pub enum Source {
    Measure { id: String, mu: AtomicMeasure },
    /// `constant`: the unimodular constant `θ ≡ −1`, accepted by `parfenov` only.
    Constant,
}

impl Source {
    pub fn id(&self) -> &str {
        match self {
            Source::Measure { id, .. } => id,
            Source::Constant => "constant",
        }
    }

    fn theta(&self) -> Result<RationalInner> {
        match self {
            Source::Measure { mu, .. } => clark_inner(mu),
            Source::Constant => RationalInner::constant(c64::new(-1.0, 0.0)),
        }
    }

    fn measure(&self) -> Result<&AtomicMeasure> {
        match self {
            Source::Measure { mu, .. } => Ok(mu),
            Source::Constant => Err(Error::Config(
                "the constant inner function is only accepted by parfenov".into(),
            )),
        }
    }
}

/// `fixture:<id>`, `constant`, or a path to a measure config.
pub fn resolve_measure(spec: &str) -> Result<Source> {
    if spec == "constant" {
        return Ok(Source::Constant);
    }
    if let Some(id) = spec.strip_prefix("fixture:") {
        return fixtures::all()
            .into_iter()
            .find(|(name, _)| *name == id)
            .map(|(name, mu)| Source::Measure {
                id: name.to_string(),
                mu,
            })
            .ok_or_else(|| Error::Config(format!("unknown fixture {id:?}")));
    }
    let path = Path::new(spec);
    let cfg: MeasureConfig = serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    Ok(Source::Measure {
        id,
        mu: cfg.to_measure()?,
    })
}

/// `[re, im]`.
pub type Pair = [f64; 2];

fn pair(z: c64) -> Pair {
    [z.re, z.im]
}

fn pairs(v: &[c64]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

/// Number of Taylor coefficients of `θ` in the `inner` report.
pub const TAYLOR_TERMS: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct InnerReport {
    pub measure: String,
    pub degree: usize,
    pub theta_numer: Vec<Pair>,
    pub theta_denom: Vec<Pair>,
    pub theta_taylor: Vec<Pair>,
    pub theta_at_zero: Pair,
    pub theta_at_one: Pair,
    pub herglotz_residual: f64,
    pub moment_q: f64,
    /// `(t, 1 − Σ_{n ≤ N} |c_n|²)` at the largest `N`.
    pub parseval_deficit: Vec<(f64, f64)>,
}

pub fn cmd_inner(cfg: &ExperimentConfig) -> Result<Vec<InnerReport>> {
    let n = *cfg.n_list.last().expect("validated");
    cfg.measures
        .iter()
        .map(|spec| {
            let src = resolve_measure(spec)?;
            let mu = src.measure()?;
            let theta = clark_inner(mu)?;
            Ok(InnerReport {
                measure: src.id().to_string(),
                degree: theta.degree(),
                theta_numer: pairs(theta.numer()),
                theta_denom: pairs(theta.denom()),
                theta_taylor: pairs(&theta.taylor(TAYLOR_TERMS - 1)),
                theta_at_zero: pair(theta.at_zero()),
                theta_at_one: pair(theta.boundary_value_at_one()?),
                herglotz_residual: herglotz_residual(&theta, mu),
                moment_q: mu.moment(cfg.q),
                parseval_deficit: cfg
                    .t_list
                    .iter()
                    .map(|&t| (t, phi_coeffs(t, n).parseval_deficit()))
                    .collect(),
            })
        })
        .collect()
}

/// Whether a check bounds its residual from above or from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Max,
    Min,
}

/// One line of the invariant battery.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub measure: String,
    pub n: usize,
    pub name: String,
    pub t: Option<f64>,
    pub s: Option<f64>,
    /// `None` when the check could not be computed.
    pub residual: Option<f64>,
    pub bound: Bound,
    pub tol: f64,
    pub pass: bool,
    /// Error text when the quantity could not be computed.
    pub error: Option<String>,
}

struct Battery<'a> {
    measure: &'a str,
    n: usize,
    cfg: &'a ExperimentConfig,
    checks: Vec<Check>,
}

impl<'a> Battery<'a> {
    fn push(&mut self, name: &str, ts: (Option<f64>, Option<f64>), key: &str, bound: Bound, value: Result<f64>) {
        let tol = self.cfg.tol(key);
        let (residual, error) = match value {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pass = residual.is_some_and(|r| match bound {
            Bound::Max => r <= tol,
            Bound::Min => r >= tol,
        });
        self.checks.push(Check {
            measure: self.measure.to_string(),
            n: self.n,
            name: name.to_string(),
            t: ts.0,
            s: ts.1,
            residual,
            bound,
            tol,
            pass,
            error,
        });
    }

    fn max(&mut self, name: &str, key: &str, value: Result<f64>) {
        self.push(name, (None, None), key, Bound::Max, value);
    }
}

/// Largest entry deviation of `Ṽᴴ e_{−m}` from `e_{−m−1}` over the coanalytic basis.
pub fn backward_action_residual(vtilde: &TruncatedOperator) -> f64 {
    let n = vtilde.window().degree() as isize;
    let adj = vtilde.adjoint();
    let mut worst: f64 = 0.0;
    for m in 1..n {
        let target = adj.window().position(-m - 1);
        for (i, x) in adj.column(-m).iter().enumerate() {
            let want = if i == target { 1.0 } else { 0.0 };
            worst = worst.max((x - c64::new(want, 0.0)).norm());
        }
    }
    worst
}

/// `‖Ω·diag(ξ) − V·Ω‖`.
pub fn intertwining_residual(frame: &ClarkFrame, v: &TruncatedOperator) -> Result<f64> {
    let xi = frame.mu().points();
    let omega = frame.omega();
    let lhs = Mat::from_fn(omega.nrows(), xi.len(), |k, j| omega[(k, j)] * xi[j]);
    let rhs = v.matrix() * omega;
    linalg::distance(lhs.as_ref(), rhs.as_ref())
}

fn identity_residual(op: Result<TruncatedOperator>) -> Result<f64> {
    let op = op?;
    let id = linalg::identity(op.window().dim());
    linalg::distance(op.matrix().as_ref(), id.as_ref())
}

/// Number of model-space vectors fed to the defect check.
pub const DEFECT_VECTORS: usize = 5;

fn battery_for(src: &Source, n: usize, cfg: &ExperimentConfig) -> Vec<Check> {
    let mut b = Battery {
        measure: src.id(),
        n,
        cfg,
        checks: Vec::new(),
    };
    let setup = src
        .measure()
        .and_then(|mu| Ok((clark_inner(mu)?, mu)))
        .and_then(|(th, mu)| Ok((clark_embedding(mu, &th, n)?, th)));
    let (frame, theta) = match setup {
        Ok(x) => x,
        Err(e) => {
            b.max("construction", "gram", Err(e));
            return b.checks;
        }
    };
    b.max("gram", "gram", Ok(frame.gram_deviation()));
    b.max("clark_spectrum", "spectrum", Ok(frame.spectrum_deviation()));
    b.push("spectrum_gap", (None, None), "spectrum_gap", Bound::Min, Ok(frame.distance_to_one()));
    let v = build_v(&theta, n);
    let vt = build_vtilde(&theta, n);
    match (&v, &vt) {
        (Ok(v), Ok(vt)) => {
            b.max("intertwining", "intertwining", intertwining_residual(&frame, v));
            b.max("isometry_v", "isometry", v.isometry_residual());
            b.max("isometry_vtilde", "isometry", vt.isometry_residual());
            b.max("coisometry_vtilde", "isometry", vt.coisometry_residual());
            b.max("backward_action", "backward", Ok(backward_action_residual(vt)));
            b.max("dilation", "dilation", vt.analytic_block().interior_distance(v));
            match wold_check(v, &frame) {
                Ok(w) => {
                    let dim = if w.unitary_dim == w.expected_dim {
                        Ok(w.angle)
                    } else {
                        Err(Error::Config(format!(
                            "unitary part has dimension {} instead of {}",
                            w.unitary_dim, w.expected_dim
                        )))
                    };
                    b.max("wold_angle", "wold_angle", dim);
                    b.max("wold_intertwining", "wold_intertwining", Ok(w.intertwining));
                }
                Err(e) => b.max("wold_angle", "wold_angle", Err(e)),
            }
        }
        (Err(e), _) | (_, Err(e)) => b.max("operators", "isometry", Err(e.clone_for_report())),
    }
    b.max("identity_v", "identity", identity_residual(calculus_v(&frame, 0.0)));
    b.max("identity_vtilde", "identity", identity_residual(calculus_vtilde(&frame, 0.0)));
    b.max("identity_w", "identity", identity_residual(cocycle_w(&frame, 0.0)));
    let ts = &cfg.t_list;
    for &t in ts {
        let deficit = phi_coeffs(t, n).parseval_deficit();
        b.push("parseval", (Some(t), None), "parseval", Bound::Max, Ok(deficit));
    }
    for (i, &t) in ts.iter().enumerate() {
        for &s in &ts[i..] {
            let ts2 = (Some(t), Some(s));
            b.push("semigroup_v", ts2, "semigroup_v", Bound::Max, semigroup_residual_v(&frame, t, s));
            b.push(
                "semigroup_vtilde",
                ts2,
                "semigroup_vtilde",
                Bound::Max,
                semigroup_residual_vtilde(&frame, t, s),
            );
            b.push("cocycle", ts2, "cocycle", Bound::Max, cocycle_law_residual(&frame, t, s));
        }
    }
    if let Some(&t) = ts.iter().find(|&&t| t > 0.0) {
        let value = ScanBuilder::VvsS
            .build(&frame, t)
            .and_then(|op| unitary_invariance_gap(op.interior(), cfg.seed));
        b.push("unitary_invariance", (Some(t), None), "unitary_invariance", Bound::Max, value);
    }
    for &t in ts.iter().filter(|&&t| t > 0.0) {
        let worst = DefectProbe::new(&frame, t).and_then(|probe| {
            model_space_vectors(t, n, DEFECT_VECTORS)?
                .iter()
                .map(|v| probe.check(v).map(|r| r.residual))
                .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
        });
        b.push("defect", (Some(t), None), "defect", Bound::Max, worst);
    }
    b.checks
}

/// Haar-like unitary of size `n`: the Q factor of a seeded complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl rand::Rng) -> Mat<c64> {
    use rand_distr::{Distribution, StandardNormal};
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64::new(re, im)
    });
    g.qr().compute_thin_Q()
}

/// `|‖U T U'ᴴ‖_1 − ‖T‖_1| / ‖T‖_1` for seeded random unitaries `U`, `U'`.
pub fn unitary_invariance_gap(t: faer::MatRef<'_, c64>, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary(t.nrows(), &mut rng);
    let w = random_unitary(t.ncols(), &mut rng);
    let rotated = &u * t * w.adjoint();
    let before: f64 = linalg::singular_values(t)?.iter().sum();
    let after: f64 = linalg::singular_values(rotated.as_ref())?.iter().sum();
    Ok((after - before).abs() / before.max(f64::MIN_POSITIVE))
}

impl Error {
    /// Copy carrying the same message, for reporting one error in several places.
    fn clone_for_report(&self) -> Error {
        Error::Decomposition(self.to_string())
    }

    /// 2 for configuration and I/O problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io { .. }
            | Error::InvalidExponent { .. }
            | Error::AtomAtOne { .. }
            | Error::AngleOutOfRange { .. }
            | Error::DuplicateAngle { .. }
            | Error::NonPositiveWeight { .. }
            | Error::EmptyMeasure
            | Error::EmptySystem => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

/// Runs the invariant battery for every measure and `N`; construction errors become
/// failed checks. With two or more measures the multi-measure cogenerator is checked too.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let sources = cfg
        .measures
        .iter()
        .map(|m| resolve_measure(m))
        .collect::<Result<Vec<_>>>()?;
    for s in &sources {
        s.measure()?;
    }
    let cells: Vec<(usize, usize)> = (0..sources.len())
        .flat_map(|i| cfg.n_list.iter().map(move |&n| (i, n)))
        .collect();
    let mut checks: Vec<Check> = cells
        .par_iter()
        .map(|&(i, n)| battery_for(&sources[i], n, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if sources.len() >= 2 {
        for &n in &cfg.n_list {
            checks.extend(multi_checks(&sources, n, cfg));
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, all_pass })
}

fn multi_checks(sources: &[Source], n: usize, cfg: &ExperimentConfig) -> Vec<Check> {
    let mut b = Battery {
        measure: "system",
        n,
        cfg,
        checks: Vec::new(),
    };
    let measures: Vec<AtomicMeasure> = sources
        .iter()
        .filter_map(|s| s.measure().ok().cloned())
        .collect();
    let report = MultiMeasureSystem::new(measures, cfg.q, cfg.budget)
        .and_then(|sys| build_multi_v(&sys, n, crate::inner::DEFAULT_DEGREE_CAP))
        .and_then(|m| m.block_report());
    match report {
        Ok(r) => {
            b.max("multi_isometry", "multi", Ok(r.unitarity));
            b.max("multi_coisometry", "multi", Ok(r.coisometry));
            let worst = r.block_deviation.iter().copied().fold(0.0, f64::max);
            b.max("multi_blocks", "multi", Ok(worst));
            b.max("multi_cross_block", "multi", Ok(r.cross_block));
        }
        Err(e) => b.max("multi_isometry", "multi", Err(e)),
    }
    b.checks
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanCsvRow {
    pub builder: String,
    pub theta_id: String,
    pub t: f64,
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub norm: f64,
    pub flag: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub theta_id: String,
    #[serde(flatten)]
    pub table: crate::schatten::ScanTable,
    pub harmonic_signature: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub tables: Vec<ScanEntry>,
    /// `√t` probes at the largest `N`, one per measure.
    pub sqrt_t: Vec<(String, crate::schatten::SqrtTProbe)>,
}

impl ScanReport {
    pub fn csv_rows(&self) -> Vec<ScanCsvRow> {
        self.tables
            .iter()
            .flat_map(|e| {
                e.table.rows.iter().map(move |r| ScanCsvRow {
                    builder: e.table.builder.to_string(),
                    theta_id: e.theta_id.clone(),
                    t: e.table.t,
                    p: e.table.p,
                    n: r.n,
                    norm: r.norm,
                    flag: e.table.flag.to_string(),
                })
            })
            .collect()
    }
}

/// Grid `(measure, builder, t)` with all `p` from one decomposition per `N`; the
/// output order follows the config lists.
pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let th = ScanThresholds {
        converged: cfg.tol("converged"),
        diverging: cfg.tol("diverging"),
    };
    let sources = cfg
        .measures
        .iter()
        .map(|m| resolve_measure(m))
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::new();
    let mut sqrt_t = Vec::new();
    for src in &sources {
        let mu = src.measure()?;
        for builder in cfg.scan_builders() {
            for &t in &cfg.t_list {
                for table in convergence_scan(builder, mu, t, &cfg.p_list, &cfg.n_list, th)? {
                    tables.push(ScanEntry {
                        theta_id: src.id().to_string(),
                        harmonic_signature: table.harmonic_signature(),
                        table,
                    });
                }
            }
        }
        let positive: Vec<f64> = cfg.t_list.iter().copied().filter(|&t| t > 0.0).collect();
        if !positive.is_empty() {
            let n = *cfg.n_list.last().expect("validated");
            let frame = clark_embedding(mu, &clark_inner(mu)?, n)?;
            sqrt_t.push((src.id().to_string(), sqrt_t_probe(&frame, &positive)?));
        }
    }
    Ok(ScanReport { tables, sqrt_t })
}

#[derive(Debug, Clone, Serialize)]
pub struct ParfenovRow {
    pub measure: String,
    pub p: f64,
    pub partial: f64,
    pub tail: f64,
    pub total: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingRow {
    pub measure: String,
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub basis_dim: usize,
    pub comparisons: Vec<crate::parfenov::EmbeddingComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParfenovReport {
    pub sums: Vec<ParfenovRow>,
    /// `(measure, q, moment)`.
    pub boundary_moments: Vec<(String, f64, f64)>,
    pub embeddings: Vec<EmbeddingRow>,
    /// Per measure, `(k, ∫_k^{k+1} w)` over the summation window.
    #[serde(skip)]
    pub intervals: Vec<(String, Vec<(i64, f64)>)>,
}

pub fn cmd_parfenov(cfg: &ExperimentConfig) -> Result<ParfenovReport> {
    let sources = cfg
        .measures
        .iter()
        .map(|m| resolve_measure(m))
        .collect::<Result<Vec<_>>>()?;
    let n = *cfg.n_list.last().expect("validated");
    let mut report = ParfenovReport {
        sums: vec![],
        boundary_moments: vec![],
        embeddings: vec![],
        intervals: vec![],
    };
    for src in &sources {
        let theta = src.theta()?;
        let id = src.id().to_string();
        let weight = ParfenovWeight::new(&theta, 4 * cfg.window, cfg.nodes)?;
        for &p in &cfg.p_list {
            let s = weight.sum(p, cfg.window);
            report.sums.push(ParfenovRow {
                measure: id.clone(),
                p,
                partial: s.partial,
                tail: s.tail_bound,
                total: s.total(),
                verdict: s.verdict.to_string(),
            });
        }
        let moment = match src {
            Source::Constant => 0.0,
            Source::Measure { .. } => boundary_moment(&theta, cfg.q)?,
        };
        report.boundary_moments.push((id.clone(), cfg.q, moment));
        let embeddings = cfg
            .t_list
            .par_iter()
            .filter(|&&t| t > 0.0)
            .map(|&t| {
                let e = embedding_operator(&theta, t, n)?;
                Ok(EmbeddingRow {
                    measure: id.clone(),
                    t,
                    n,
                    basis_dim: e.basis_dim,
                    comparisons: e.compare(&weight, &cfg.p_list),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        report.embeddings.extend(embeddings);
        let w = cfg.window as i64;
        report.intervals.push((
            id,
            weight.intervals().filter(|(k, _)| k.abs() <= w).collect(),
        ));
    }
    Ok(report)
}

/// Wraps a report with an optional Unix timestamp.
#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    report: &'a T,
}

fn timestamp(suppress: bool) -> Option<u64> {
    if suppress {
        return None;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

fn json<T: Serialize>(command: &str, report: &T, suppress: bool) -> Result<Vec<u8>> {
    let env = Envelope {
        command,
        timestamp: timestamp(suppress),
        report,
    };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| Error::Config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv<T: Serialize>(rows: &[T], suppress: bool) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    if let Some(ts) = timestamp(suppress) {
        writeln!(out, "# timestamp {ts}").expect("write to memory");
    }
    let mut w = csv::Writer::from_writer(&mut out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().expect("write to memory");
    drop(w);
    Ok(out)
}

#[derive(Debug, Serialize)]
struct InnerCsvRow<'a> {
    measure: &'a str,
    quantity: &'a str,
    index: usize,
    re: f64,
    im: f64,
}

fn inner_csv(reports: &[InnerReport], suppress: bool) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for r in reports {
        let mut series = |name: &'static str, v: &[Pair]| {
            for (index, z) in v.iter().enumerate() {
                rows.push(InnerCsvRow {
                    measure: &r.measure,
                    quantity: name,
                    index,
                    re: z[0],
                    im: z[1],
                });
            }
        };
        series("numer", &r.theta_numer);
        series("denom", &r.theta_denom);
        series("taylor", &r.theta_taylor);
        series("at_zero", &[r.theta_at_zero]);
        series("at_one", &[r.theta_at_one]);
        series("herglotz_residual", &[[r.herglotz_residual, 0.0]]);
        series("moment_q", &[[r.moment_q, 0.0]]);
        let deficits: Vec<Pair> = r.parseval_deficit.iter().map(|&(_, d)| [d, 0.0]).collect();
        series("parseval_deficit", &deficits);
    }
    csv(&rows, suppress)
}

/// Bytes to write and the exit status.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub status: i32,
}

/// Runs one command against a validated config.
pub fn execute(command: &Command, cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let quiet = opts.no_timestamp;
    let csv_out = cfg.format == Format::Csv;
    Ok(match command {
        Command::Inner => {
            let r = cmd_inner(cfg)?;
            let bytes = if csv_out { inner_csv(&r, quiet)? } else { json("inner", &r, quiet)? };
            Outcome { bytes, status: 0 }
        }
        Command::Verify => {
            let r = cmd_verify(cfg)?;
            let bytes = if csv_out { csv(&r.checks, quiet)? } else { json("verify", &r, quiet)? };
            Outcome {
                bytes,
                status: if r.all_pass { 0 } else { 1 },
            }
        }
        Command::Scan => {
            let r = cmd_scan(cfg)?;
            let bytes = if csv_out { csv(&r.csv_rows(), quiet)? } else { json("scan", &r, quiet)? };
            Outcome { bytes, status: 0 }
        }
        Command::Parfenov => {
            let r = cmd_parfenov(cfg)?;
            if let Some(path) = &opts.intervals {
                #[derive(Serialize)]
                struct Row<'a> {
                    measure: &'a str,
                    k: i64,
                    integral: f64,
                }
                let rows: Vec<Row> = r
                    .intervals
                    .iter()
                    .flat_map(|(m, v)| v.iter().map(move |&(k, integral)| Row { measure: m, k, integral }))
                    .collect();
                write_file(path, &csv(&rows, quiet)?)?;
            }
            let bytes = if csv_out { csv(&r.sums, quiet)? } else { json("parfenov", &r, quiet)? };
            Outcome { bytes, status: 0 }
        }
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_parsed(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_parsed(cli: &Cli) -> Result<i32> {
    let cfg = ExperimentConfig::from_options(&cli.options)?;
    // Inner faer kernels stay sequential so the bytes do not depend on --jobs.
    faer::set_global_parallelism(faer::Par::Seq);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.options.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| execute(&cli.command, &cfg, &cli.options))?;
    match &cfg.output {
        Some(path) => write_file(path, &outcome.bytes)?,
        None => std::io::stdout()
            .write_all(&outcome.bytes)
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?,
    }
    Ok(outcome.status)
}
