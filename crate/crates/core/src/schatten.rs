//! Singular values and Schatten `p`-norms of interior blocks, convergence scans in the
//! truncation degree, and the `√t` probe for `φ_t(V) − φ_t(S)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner::{clark_inner, phi_coeffs};
use crate::linalg;
use crate::measure::AtomicMeasure;
use crate::modelspace::{clark_embedding, ClarkFrame};
use crate::operators::{
    calculus_v, calculus_vtilde, cocycle_w, mult_by, TruncatedOperator, Window,
};

/// Singular values of the interior block, nonincreasing.
pub fn singular_values(op: &TruncatedOperator) -> Result<Vec<f64>> {
    linalg::singular_values(op.interior())
}

/// `(Σ σ^p)^{1/p}`.
pub fn norm_of_values(values: &[f64], p: f64) -> f64 {
    assert!(p > 0.0, "Schatten exponent must be positive");
    values.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Schatten `p`-norm of the interior block.
///
/// ```
/// use cocyclic::{operators::{TruncatedOperator, Window}, schatten::schatten_norm};
/// use faer::{c64, Mat};
/// let m = Mat::from_fn(3, 3, |i, j| if i == j { c64::new([3.0, 4.0, 0.0][i], 0.0) } else { c64::default() });
/// let op = TruncatedOperator::new(m, Window::Analytic(2)).with_margin(0);
/// assert!((schatten_norm(&op, 1.0).unwrap() - 7.0).abs() < 1e-12);
/// assert!((schatten_norm(&op, 2.0).unwrap() - 5.0).abs() < 1e-12);
/// ```
pub fn schatten_norm(op: &TruncatedOperator, p: f64) -> Result<f64> {
    Ok(norm_of_values(&singular_values(op)?, p))
}

/// Singular values of an operator with their `p`-norm.
#[derive(Debug, Clone, Serialize)]
pub struct SchattenReport {
    pub p: f64,
    pub values: Vec<f64>,
    pub norm_p: f64,
    /// Truncation degree of the operator.
    pub n: usize,
    /// `(k·ε)^{1/p}` for the `k` values below the cutoff `ε = σ_max·dim·2^{−52}`:
    /// the most those values can contribute.
    pub tail_estimate: f64,
}

impl SchattenReport {
    pub fn from_values(values: Vec<f64>, p: f64, n: usize) -> Self {
        let cutoff = values.first().copied().unwrap_or(0.0) * values.len() as f64 * f64::EPSILON;
        let below = values.iter().filter(|&&s| s <= cutoff).count();
        let tail_estimate = (below as f64 * cutoff.powf(p)).powf(1.0 / p);
        Self {
            p,
            norm_p: norm_of_values(&values, p),
            values,
            n,
            tail_estimate,
        }
    }

    /// `|(Σ σ^p)^{1/p} − norm_p|`, which must vanish up to rounding.
    pub fn consistency(&self) -> f64 {
        (norm_of_values(&self.values, self.p) - self.norm_p).abs()
    }
}

pub fn schatten_report(op: &TruncatedOperator, p: f64) -> Result<SchattenReport> {
    Ok(SchattenReport::from_values(
        singular_values(op)?,
        p,
        op.window().degree(),
    ))
}

/// The differences whose Schatten norms are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ScanBuilder {
    /// `φ_t(V) − φ_t(S)`.
    #[serde(rename = "V-vs-S")]
    VvsS,
    /// `φ_t(Ṽ) − φ_t(S̃)`.
    #[serde(rename = "Vtilde-vs-Stilde")]
    VtildeVsStilde,
    /// `W_t − I`.
    #[serde(rename = "W-vs-I")]
    WvsI,
}

impl ScanBuilder {
    pub const ALL: [ScanBuilder; 3] = [Self::VvsS, Self::VtildeVsStilde, Self::WvsI];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::VvsS => "V-vs-S",
            Self::VtildeVsStilde => "Vtilde-vs-Stilde",
            Self::WvsI => "W-vs-I",
        }
    }

    /// The difference operator at time `t` for the frame's truncation degree.
    pub fn build(self, frame: &ClarkFrame, t: f64) -> Result<TruncatedOperator> {
        let n = frame.degree();
        Ok(match self {
            Self::VvsS => {
                calculus_v(frame, t)?.sub(&mult_by(&phi_coeffs(t, n).coeffs, Window::Analytic(n)))
            }
            Self::VtildeVsStilde => calculus_vtilde(frame, t)?
                .sub(&mult_by(&phi_coeffs(t, 2 * n).coeffs, Window::Bilateral(n))),
            Self::WvsI => cocycle_w(frame, t)?.sub(&TruncatedOperator::identity(Window::Bilateral(n))),
        })
    }
}

impl fmt::Display for ScanBuilder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanBuilder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown builder {s:?}")))
    }
}

/// Relative step sizes separating settled from growing scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanThresholds {
    /// Last two norms closer than this (relative) count as converged.
    pub converged: f64,
    /// Each of the last two steps growing by more than this counts as diverging.
    pub diverging: f64,
}

impl Default for ScanThresholds {
    fn default() -> Self {
        Self {
            converged: 0.02,
            diverging: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScanFlag {
    Converged,
    Diverging,
    Undecided,
}

impl fmt::Display for ScanFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "CONVERGED",
            Self::Diverging => "DIVERGING",
            Self::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub builder: ScanBuilder,
    pub t: f64,
    pub p: f64,
    pub rows: Vec<ScanRow>,
    pub flag: ScanFlag,
    /// Ratio of the last two increments; close to 1 for logarithmic growth over
    /// doubling `N`, close to 0 for convergence.
    pub increment_ratio: Option<f64>,
}

impl ScanTable {
    pub fn new(builder: ScanBuilder, t: f64, p: f64, rows: Vec<ScanRow>, th: ScanThresholds) -> Self {
        let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
        let flag = classify(&norms, th);
        let increment_ratio = (norms.len() >= 3).then(|| {
            let k = norms.len();
            (norms[k - 1] - norms[k - 2]) / (norms[k - 2] - norms[k - 3])
        });
        Self {
            builder,
            t,
            p,
            rows,
            flag,
            increment_ratio,
        }
    }

    /// Diverging with increments that stay comparable over doublings of `N`.
    pub fn harmonic_signature(&self) -> bool {
        self.flag == ScanFlag::Diverging
            && self.increment_ratio.is_some_and(|r| (0.5..=2.0).contains(&r))
    }
}

fn classify(norms: &[f64], th: ScanThresholds) -> ScanFlag {
    let k = norms.len();
    if norms.iter().all(|&x| x <= 1e-12) {
        return ScanFlag::Converged;
    }
    if k >= 3 && (k - 3..k - 1).all(|i| norms[i + 1] > norms[i] * (1.0 + th.diverging)) {
        return ScanFlag::Diverging;
    }
    if k >= 2 && (norms[k - 1] - norms[k - 2]).abs() < th.converged * norms[k - 1].abs() {
        return ScanFlag::Converged;
    }
    ScanFlag::Undecided
}

/// Norms of `builder` for every `N` in `ns` and every `p` in `ps`; one singular value
/// decomposition per `N`. The `N` loop runs in parallel; results are ordered by `p`
/// then `N` regardless of scheduling.
pub fn convergence_scan(
    builder: ScanBuilder,
    mu: &AtomicMeasure,
    t: f64,
    ps: &[f64],
    ns: &[usize],
    th: ScanThresholds,
) -> Result<Vec<ScanTable>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan degrees must be nonempty and ascending".into()));
    }
    let theta = clark_inner(mu)?;
    let values: Vec<Vec<f64>> = ns
        .par_iter()
        .map(|&n| {
            let frame = clark_embedding(mu, &theta, n)?;
            singular_values(&builder.build(&frame, t)?)
        })
        .collect::<Result<_>>()?;
    Ok(ps
        .iter()
        .map(|&p| {
            let rows = ns
                .iter()
                .zip(&values)
                .map(|(&n, v)| ScanRow {
                    n,
                    norm: norm_of_values(v, p),
                })
                .collect();
            ScanTable::new(builder, t, p, rows, th)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqrtTRow {
    pub t: f64,
    pub norm_1: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SqrtTProbe {
    pub rows: Vec<SqrtTRow>,
    /// `max/min` of the ratio column.
    pub spread: f64,
    pub pass: bool,
}

/// Largest ratio spread accepted by [`sqrt_t_probe`].
pub const SQRT_T_SPREAD: f64 = 4.0;

/// `‖φ_t(V) − φ_t(S)‖_{𝔖_1}/√t` over `ts`.
pub fn sqrt_t_probe(frame: &ClarkFrame, ts: &[f64]) -> Result<SqrtTProbe> {
    if ts.is_empty() || ts.iter().any(|&t| t <= 0.0) {
        return Err(Error::Config("probe times must be positive".into()));
    }
    let rows = ts
        .par_iter()
        .map(|&t| {
            let norm_1 = schatten_norm(&ScanBuilder::VvsS.build(frame, t)?, 1.0)?;
            Ok(SqrtTRow {
                t,
                norm_1,
                ratio: norm_1 / t.sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let hi = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    let spread = hi / lo;
    Ok(SqrtTProbe {
        rows,
        spread,
        pass: spread <= SQRT_T_SPREAD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::fixtures;
    use faer::{c64, Mat};

    fn diag(values: &[f64]) -> TruncatedOperator {
        let n = values.len();
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(values[i], 0.0)
            } else {
                c64::default()
            }
        });
        TruncatedOperator::new(m, Window::Analytic(n - 1)).with_margin(0)
    }

    #[test]
    fn diagonal_examples() {
        let op = diag(&[3.0, 4.0]);
        assert_eq!(singular_values(&op).unwrap().len(), 2);
        let sv = singular_values(&op).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
        let r = schatten_report(&op, 2.0).unwrap();
        assert!(r.consistency() < 1e-12);
        assert!((r.norm_p - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one() {
        let u = [0.6, 0.8];
        let v = [0.0, 1.0];
        let m = Mat::from_fn(2, 2, |i, j| c64::new(5.0 * u[i] * v[j], 0.0));
        let op = TruncatedOperator::new(m, Window::Analytic(1)).with_margin(0);
        let sv = singular_values(&op).unwrap();
        assert!((sv[0] - 5.0).abs() < 1e-12 && sv[1].abs() < 1e-12);
    }

    #[test]
    fn flags() {
        let th = ScanThresholds::default();
        assert_eq!(classify(&[1.0, 1.5, 1.51], th), ScanFlag::Converged);
        assert_eq!(classify(&[1.0, 1.2, 1.4], th), ScanFlag::Diverging);
        assert_eq!(classify(&[1.0, 1.02, 1.04, 1.1], th), ScanFlag::Undecided);
        assert_eq!(classify(&[0.0, 0.0], th), ScanFlag::Converged);
        let t = ScanTable::new(
            ScanBuilder::WvsI,
            1.0,
            1.0,
            [1.0, 1.2, 1.4].iter().enumerate().map(|(n, &norm)| ScanRow { n, norm }).collect(),
            th,
        );
        assert!(t.harmonic_signature());
    }

    #[test]
    fn builders_vanish_at_time_zero() {
        let mu = fixtures::three_atom();
        for b in ScanBuilder::ALL {
            let tables = convergence_scan(b, &mu, 0.0, &[1.0], &[64, 128], ScanThresholds::default()).unwrap();
            assert!(tables[0].rows.iter().all(|r| r.norm < 1e-10), "{b}");
            assert_eq!(tables[0].flag, ScanFlag::Converged);
        }
    }

    #[test]
    fn builder_names_round_trip() {
        for b in ScanBuilder::ALL {
            assert_eq!(b.as_str().parse::<ScanBuilder>().unwrap(), b);
        }
        assert!("nope".parse::<ScanBuilder>().is_err());
    }

    #[test]
    fn sqrt_t_probe_small() {
        let mu = fixtures::delta_minus_one();
        let frame = clark_embedding(&mu, &clark_inner(&mu).unwrap(), 128).unwrap();
        let probe = sqrt_t_probe(&frame, &[0.25, 0.5, 1.0, 2.0]).unwrap();
        assert!(probe.pass, "{probe:?}");
        let small = sqrt_t_probe(&frame, &[1e-4]).unwrap();
        assert!(small.rows[0].norm_1 < probe.rows[0].norm_1);
    }
}
