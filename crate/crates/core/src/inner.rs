//! Rational inner functions (finite Blaschke products), the Clark inner function of an
//! atomic measure, and the singular inner family `φ_t(z) = exp(t(z+1)/(z−1))`.

use std::f64::consts::TAU;

use faer::c64;

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::poly;

/// Tolerance for `||θ(ξ)| − 1|` on the circle.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Tolerance for the Herglotz identity at interior points.
pub const HERGLOTZ_TOL: f64 = 1e-9;
/// Tolerance for `θ(ξ_j) = 1` at the atoms.
pub const ATOM_TOL: f64 = 1e-8;
/// Default cap on the degree of products.
pub const DEFAULT_DEGREE_CAP: usize = 64;

const SAMPLES: usize = 256;

/// `θ = numer/denom` with `denom(0) = 1` and all roots of `denom` outside the closed disc.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalInner {
    numer: Vec<c64>,
    denom: Vec<c64>,
    degree: usize,
}

impl RationalInner {
    /// Normalizes so that `denom(0) = 1`, trims negligible leading terms, and checks
    /// unimodularity on the circle and boundedness on the circle of radius 0.99.
    pub fn from_parts(numer: Vec<c64>, denom: Vec<c64>) -> Result<Self> {
        let d0 = denom.first().copied().unwrap_or_default();
        if d0.norm() == 0.0 {
            return Err(Error::InvalidInner {
                reason: "denominator vanishes at 0".into(),
            });
        }
        let numer = poly::trim(poly::scale(&numer, d0.inv()), 1e-14);
        let denom = poly::trim(poly::scale(&denom, d0.inv()), 1e-14);
        let degree = numer.len().max(denom.len()) - 1;
        let theta = Self {
            numer,
            denom,
            degree,
        };
        theta.check_invariants(BOUNDARY_TOL)?;
        Ok(theta)
    }

    /// The unimodular constant `c`.
    pub fn constant(c: c64) -> Result<Self> {
        Self::from_parts(vec![c], vec![poly::one()])
    }

    pub fn numer(&self) -> &[c64] {
        &self.numer
    }

    pub fn denom(&self) -> &[c64] {
        &self.denom
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Largest `||θ(ξ)| − 1|` over equispaced boundary samples, and the largest excess
    /// of `|θ|` over 1 on the circle of radius 0.99.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let mut boundary: f64 = 0.0;
        let mut interior: f64 = 0.0;
        for k in 0..SAMPLES {
            let xi = c64::cis(TAU * (k as f64 + 0.5) / SAMPLES as f64);
            boundary = boundary.max((self.eval_unchecked(xi).norm() - 1.0).abs());
            interior = interior.max(self.eval_unchecked(xi * 0.99).norm() - 1.0);
        }
        (boundary, interior)
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let (boundary, interior) = self.invariant_residuals();
        if !(boundary <= tol) {
            return Err(Error::InvalidInner {
                reason: format!("boundary modulus deviates from 1 by {boundary:e}"),
            });
        }
        if !(interior <= tol) {
            return Err(Error::InvalidInner {
                reason: format!("modulus exceeds 1 by {interior:e} inside the disc"),
            });
        }
        Ok(())
    }

    /// `θ(z)` for `|z| ≤ 1 + 1e−12`.
    ///
    /// ```
    /// use cocyclic::{inner::clark_inner, measure::fixtures};
    /// use faer::c64;
    /// let theta = clark_inner(&fixtures::plus_minus_i()).unwrap();
    /// let v = theta.eval(c64::new(0.0, 1.0)).unwrap();
    /// assert!((v - c64::new(1.0, 0.0)).norm() < 1e-12);
    /// ```
    pub fn eval(&self, z: c64) -> Result<c64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain { z: format!("{z}") });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: c64) -> c64 {
        poly::eval(&self.numer, z) / poly::eval(&self.denom, z)
    }

    pub fn at_zero(&self) -> c64 {
        self.numer[0]
    }

    /// `θ(1)`, unimodular for a valid inner function.
    pub fn boundary_value_at_one(&self) -> Result<c64> {
        let one = poly::one();
        let d = poly::eval(&self.denom, one);
        if d.norm() < 1e-12 {
            return Err(Error::DegenerateAtOne { modulus: d.norm() });
        }
        Ok(poly::eval(&self.numer, one) / d)
    }

    /// The Maclaurin coefficients `θ_0, …, θ_n`.
    pub fn taylor(&self, n: usize) -> Vec<c64> {
        poly::series_div(&self.numer, &self.denom, n + 1)
    }

    /// `θ'(z)`.
    pub fn derivative(&self, z: c64) -> c64 {
        let (n, d) = (
            poly::eval(&self.numer, z),
            poly::eval(&self.denom, z),
        );
        let (dn, dd) = (
            poly::eval(&poly::derivative(&self.numer), z),
            poly::eval(&poly::derivative(&self.denom), z),
        );
        (dn * d - n * dd) / (d * d)
    }

    /// `θ_1 θ_2`, re-verified.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::from_parts(
            poly::mul(&self.numer, &other.numer),
            poly::mul(&self.denom, &other.denom),
        )
    }
}

/// The polynomials `D(z) = Π(ξ_j − z)` and `N(z) = Σ_j μ_j(ξ_j + z)Π_{l≠j}(ξ_l − z)`.
pub fn clark_polynomials(mu: &AtomicMeasure) -> (Vec<c64>, Vec<c64>) {
    let xi = mu.points();
    let d = poly::from_reversed_roots(&xi);
    let mut n = vec![poly::zero(); xi.len() + 1];
    for (j, atom) in mu.atoms().iter().enumerate() {
        let others: Vec<c64> = xi
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != j)
            .map(|(_, &x)| x)
            .collect();
        let term = poly::mul(&[xi[j], poly::one()], &poly::from_reversed_roots(&others));
        n = poly::add(&n, &poly::scale(&term, c64::new(atom.weight, 0.0)));
    }
    (n, d)
}

/// Herglotz integral `Σ_j μ_j (ξ_j + z)/(ξ_j − z)`.
pub fn herglotz(mu: &AtomicMeasure, z: c64) -> c64 {
    mu.atoms()
        .iter()
        .map(|a| {
            let xi = a.point();
            (xi + z) / (xi - z) * a.weight
        })
        .sum()
}

/// Largest `|(1+θ)/(1−θ) − Σ μ_j(ξ_j+z)/(ξ_j−z)|` over 64 points inside the disc.
pub fn herglotz_residual(theta: &RationalInner, mu: &AtomicMeasure) -> f64 {
    let mut worst: f64 = 0.0;
    for r in [0.2, 0.5, 0.8, 0.95] {
        for k in 0..16 {
            let z = c64::cis(TAU * (k as f64 + 0.37) / 16.0) * r;
            let th = theta.eval_unchecked(z);
            let lhs = (poly::one() + th) / (poly::one() - th);
            worst = worst.max((lhs - herglotz(mu, z)).norm());
        }
    }
    worst
}

/// The inner function whose Clark measure is `μ`: `θ = (N − D)/(N + D)`.
///
/// ```
/// use cocyclic::{inner::clark_inner, measure::fixtures};
/// let theta = clark_inner(&fixtures::delta_minus_one()).unwrap();
/// let coeffs = theta.taylor(3);
/// assert!((coeffs[1].re + 1.0).abs() < 1e-12 && coeffs[0].norm() < 1e-12);
/// ```
pub fn clark_inner(mu: &AtomicMeasure) -> Result<RationalInner> {
    let (n, d) = clark_polynomials(mu);
    let ill = |reason: String| Error::IllConditionedClark { reason };
    let theta = RationalInner::from_parts(poly::sub(&n, &d), poly::add(&n, &d))
        .map_err(|e| ill(e.to_string()))?;
    for xi in mu.points() {
        let dev = (theta.eval_unchecked(xi) - poly::one()).norm();
        if !(dev <= ATOM_TOL) {
            return Err(ill(format!("θ(ξ) deviates from 1 by {dev:e} at atom {xi}")));
        }
    }
    let res = herglotz_residual(&theta, mu);
    if !(res <= HERGLOTZ_TOL) {
        return Err(ill(format!("Herglotz residual {res:e}")));
    }
    Ok(theta)
}

/// A finite product `θ = Π_k θ_k` with its partial products `θ̂_n = Π_{k<n} θ_k`.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    pub product: RationalInner,
    /// `partials[n] = Π_{k<n} θ_k`; `partials[0] = 1`.
    pub partials: Vec<RationalInner>,
}

/// Multiplies the factors, refusing total degree above `cap`.
pub fn product_inner(thetas: &[RationalInner], cap: usize) -> Result<InnerProduct> {
    if thetas.is_empty() {
        return Err(Error::InvalidInner {
            reason: "empty product".into(),
        });
    }
    let degree: usize = thetas.iter().map(RationalInner::degree).sum();
    if degree > cap {
        return Err(Error::DegreeCapExceeded { degree, cap });
    }
    let mut partials = vec![RationalInner::constant(poly::one())?];
    for theta in thetas {
        let next = partials.last().unwrap().mul(theta)?;
        partials.push(next);
    }
    let product = partials.pop().unwrap();
    Ok(InnerProduct { product, partials })
}

/// `φ_t(z) = exp(t(z+1)/(z−1))`, taking the value 0 at `z = 1` for `t > 0`.
pub fn phi(t: f64, z: c64) -> c64 {
    if t == 0.0 {
        return poly::one();
    }
    let w = z - poly::one();
    if w.norm() == 0.0 {
        return poly::zero();
    }
    ((z + poly::one()) / w * t).exp()
}

/// Taylor coefficients `c_0, …, c_N` of `φ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularInnerFlow {
    pub t: f64,
    pub coeffs: Vec<c64>,
}

impl SingularInnerFlow {
    /// `1 − Σ_n |c_n|²`.
    pub fn parseval_deficit(&self) -> f64 {
        1.0 - self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .scan(0.0, |s, c| {
                *s += c.re;
                Some(*s)
            })
            .collect()
    }
}

/// Coefficients of `φ_t` from `c_n = e^{−t}(L_n(2t) − L_{n−1}(2t))`, with the Laguerre
/// polynomials generated by their three-term recurrence.
///
/// ```
/// use cocyclic::inner::phi_coeffs;
/// let f = phi_coeffs(1.0, 4);
/// assert!((f.coeffs[0].re - (-1.0f64).exp()).abs() < 1e-15);
/// assert!((f.coeffs[1].re + 2.0 * (-1.0f64).exp()).abs() < 1e-15);
/// ```
pub fn phi_coeffs(t: f64, n: usize) -> SingularInnerFlow {
    assert!(t >= 0.0, "φ_t needs t ≥ 0");
    let x = 2.0 * t;
    let e = (-t).exp();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(c64::new(e, 0.0));
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    for k in 1..=n {
        coeffs.push(c64::new(e * (cur - prev), 0.0));
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    SingularInnerFlow { t, coeffs }
}
