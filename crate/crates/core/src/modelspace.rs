//! The model space `K_θ = H² ⊖ θH²` in truncated Taylor coordinates: the Clark
//! embedding `Ω: L²(μ) → K_θ`, the vector `g`, the Clark unitary, and projections.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::inner::{clark_polynomials, herglotz_residual, RationalInner, HERGLOTZ_TOL};
use crate::linalg;
use crate::measure::AtomicMeasure;
use crate::poly;

/// Gram deviation expected of a frame at the default truncation.
pub const GRAM_TOL: f64 = 1e-8;

/// Taylor coefficients of `g = (θ − θ(0))/(z(1 − θ(0)))` up to degree `n`.
///
/// ```
/// use cocyclic::{inner::clark_inner, measure::fixtures, modelspace::reproducing_g};
/// let theta = clark_inner(&fixtures::plus_minus_i()).unwrap();
/// let g = reproducing_g(&theta, 3).unwrap();
/// assert!((g[1].re + 1.0).abs() < 1e-12 && g[0].norm() < 1e-12);
/// ```
pub fn reproducing_g(theta: &RationalInner, n: usize) -> Result<Vec<c64>> {
    let one_minus = poly::one() - theta.at_zero();
    if one_minus.norm() < 1e-12 {
        return Err(Error::ThetaZeroIsOne);
    }
    let coeffs = theta.taylor(n + 1);
    Ok(coeffs[1..].iter().map(|&c| c / one_minus).collect())
}

/// The Clark data of an atomic measure, truncated to degree `N`.
#[derive(Debug, Clone)]
pub struct ClarkFrame {
    mu: AtomicMeasure,
    theta: RationalInner,
    g: Vec<c64>,
    omega: Mat<c64>,
    clark_unitary: Mat<c64>,
    eigenvalues: Vec<c64>,
    n: usize,
    gram_deviation: f64,
}

/// Builds `Ω` column by column from `2ξ_j√μ_j Π_{l≠j}(ξ_l − z)/(N(z) + D(z))`, which
/// equals `√μ_j (1 − θ(z))/(1 − ξ̄_j z)` with the boundary cancellation done exactly.
///
/// ```
/// use cocyclic::{inner::clark_inner, measure::fixtures, modelspace::clark_embedding};
/// let mu = fixtures::delta_minus_one();
/// let frame = clark_embedding(&mu, &clark_inner(&mu).unwrap(), 8).unwrap();
/// assert!((frame.omega()[(0, 0)].re - 1.0).abs() < 1e-14);
/// assert!((frame.clark_unitary()[(0, 0)].re + 1.0).abs() < 1e-14);
/// ```
pub fn clark_embedding(mu: &AtomicMeasure, theta: &RationalInner, n: usize) -> Result<ClarkFrame> {
    let res = herglotz_residual(theta, mu);
    if !(res <= HERGLOTZ_TOL) {
        return Err(Error::IllConditionedClark {
            reason: format!("θ is not the Clark function of μ (Herglotz residual {res:e})"),
        });
    }
    let (np, dp) = clark_polynomials(mu);
    let sum = poly::add(&np, &dp);
    let xi = mu.points();
    let columns: Vec<Vec<c64>> = mu
        .atoms()
        .iter()
        .enumerate()
        .map(|(j, atom)| {
            let others: Vec<c64> = xi
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != j)
                .map(|(_, &x)| x)
                .collect();
            let numer = poly::scale(
                &poly::from_reversed_roots(&others),
                xi[j] * (2.0 * atom.weight.sqrt()),
            );
            poly::series_div(&numer, &sum, n + 1)
        })
        .collect();
    let omega = Mat::from_fn(n + 1, xi.len(), |k, j| columns[j][k]);
    let g = reproducing_g(theta, n)?;
    let gram_deviation = linalg::isometry_defect(omega.as_ref())?;
    if !(gram_deviation <= 100.0 * GRAM_TOL) {
        return Err(Error::IllConditionedClark {
            reason: format!("Gram deviation {gram_deviation:e} at N = {n}"),
        });
    }
    let clark_unitary = compress_model_operator(&omega, theta, &g, n);
    let eigenvalues = clark_unitary
        .eigenvalues()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(ClarkFrame {
        mu: mu.clone(),
        theta: theta.clone(),
        g,
        omega,
        clark_unitary,
        eigenvalues,
        n,
        gram_deviation,
    })
}

/// `Ωᴴ (SΩ + (1−θ)·(Ω, g))`: the operator `f ↦ zf + (f, g)(1 − θ)` read in atom coordinates.
fn compress_model_operator(omega: &Mat<c64>, theta: &RationalInner, g: &[c64], n: usize) -> Mat<c64> {
    let one_minus_theta = one_minus(&theta.taylor(n));
    let m = omega.ncols();
    let pairing: Vec<c64> = (0..m)
        .map(|j| (0..=n).map(|k| omega[(k, j)] * g[k].conj()).sum())
        .collect();
    let image = Mat::from_fn(n + 1, m, |k, j| {
        let shifted = if k == 0 { c64::default() } else { omega[(k - 1, j)] };
        shifted + one_minus_theta[k] * pairing[j]
    });
    omega.adjoint() * &image
}

/// Coefficients of `1 − f` for the series `f`.
pub(crate) fn one_minus(f: &[c64]) -> Vec<c64> {
    let mut out: Vec<c64> = f.iter().map(|&c| -c).collect();
    out[0] += poly::one();
    out
}

/// Recomputes the Clark unitary of a frame from its `Ω`, `θ` and `g`.
pub fn clark_unitary_direct(frame: &ClarkFrame) -> Mat<c64> {
    compress_model_operator(&frame.omega, &frame.theta, &frame.g, frame.n)
}

impl ClarkFrame {
    pub fn mu(&self) -> &AtomicMeasure {
        &self.mu
    }

    pub fn theta(&self) -> &RationalInner {
        &self.theta
    }

    pub fn g(&self) -> &[c64] {
        &self.g
    }

    pub fn omega(&self) -> &Mat<c64> {
        &self.omega
    }

    pub fn clark_unitary(&self) -> &Mat<c64> {
        &self.clark_unitary
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// Truncation degree `N`; vectors have `N + 1` coordinates.
    pub fn degree(&self) -> usize {
        self.n
    }

    /// `‖ΩᴴΩ − I‖₂`.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// Largest distance from an eigenvalue of the Clark unitary to the nearest atom,
    /// or from an atom to the nearest eigenvalue.
    pub fn spectrum_deviation(&self) -> f64 {
        let xi = self.mu.points();
        let nearest = |z: c64, set: &[c64]| set.iter().map(|&w| (z - w).norm()).fold(f64::INFINITY, f64::min);
        let a = self.eigenvalues.iter().map(|&l| nearest(l, &xi)).fold(0.0, f64::max);
        let b = xi.iter().map(|&x| nearest(x, &self.eigenvalues)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Distance from the spectrum of the Clark unitary to the point 1.
    pub fn distance_to_one(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&l| (l - poly::one()).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `‖ŨᴴŨ − I‖₂`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        linalg::isometry_defect(self.clark_unitary.as_ref())
    }
}

/// A Laurent polynomial with coefficients on the window `[−N, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentVec {
    n: usize,
    coeffs: Vec<c64>,
}

impl LaurentVec {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![c64::default(); 2 * n + 1],
        }
    }

    /// Coefficients listed from index `−N` to `N`.
    pub fn from_coeffs(n: usize, coeffs: Vec<c64>) -> Self {
        assert_eq!(coeffs.len(), 2 * n + 1, "window length mismatch");
        Self { n, coeffs }
    }

    /// Embeds an analytic vector of length `≤ N + 1`.
    pub fn from_analytic(n: usize, f: &[c64]) -> Self {
        let mut v = Self::zeros(n);
        for (k, &c) in f.iter().enumerate().take(n + 1) {
            v.coeffs[n + k] = c;
        }
        v
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: isize) -> c64 {
        self.index(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn set(&mut self, k: isize, value: c64) {
        let i = self.index(k).expect("index outside window");
        self.coeffs[i] = value;
    }

    fn index(&self, k: isize) -> Option<usize> {
        let i = k + self.n as isize;
        (0..self.coeffs.len() as isize).contains(&i).then_some(i as usize)
    }

    pub fn coeffs(&self) -> &[c64] {
        &self.coeffs
    }

    /// Coefficients of index `≥ 0`.
    pub fn analytic(&self) -> &[c64] {
        &self.coeffs[self.n..]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `P_+ f`: keeps indices `≥ 0`.
pub fn project_plus(f: &LaurentVec) -> LaurentVec {
    let mut out = f.clone();
    out.coeffs[..f.n].iter_mut().for_each(|c| *c = c64::default());
    out
}

/// `P_− f`: keeps indices `< 0`.
pub fn project_minus(f: &LaurentVec) -> LaurentVec {
    let mut out = f.clone();
    out.coeffs[f.n..].iter_mut().for_each(|c| *c = c64::default());
    out
}

/// `P_{K_u} f = f − u·P_+(ū f)` for an inner `u` given by Taylor coefficients
/// (at least as many as `f`). Products are truncated to the length of `f`.
///
/// ```
/// use cocyclic::modelspace::project_model;
/// use faer::c64;
/// let u = [c64::new(0.0, 0.0), c64::new(-1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)];
/// let z3 = [c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(1.0, 0.0)];
/// assert!(project_model(&u, &z3).iter().all(|c| c.norm() < 1e-15));
/// ```
pub fn project_model(u: &[c64], f: &[c64]) -> Vec<c64> {
    let n = f.len();
    assert!(u.len() >= n, "inner function needs at least {n} coefficients");
    let coanalytic: Vec<c64> = (0..n)
        .map(|k| (0..n - k).map(|j| u[j].conj() * f[k + j]).sum())
        .collect();
    let back = poly::mul_truncated(u, &coanalytic, n);
    f.iter().zip(&back).map(|(a, b)| a - b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::{clark_inner, phi_coeffs};
    use crate::measure::fixtures;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn frame(mu: &AtomicMeasure, n: usize) -> ClarkFrame {
        clark_embedding(mu, &clark_inner(mu).unwrap(), n).unwrap()
    }

    #[test]
    fn g_closed_forms() {
        let t1 = clark_inner(&fixtures::delta_minus_one()).unwrap();
        let g = reproducing_g(&t1, 3).unwrap();
        assert!((g[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(g[1..].iter().all(|x| x.norm() < 1e-12));
        let theta = clark_inner(&fixtures::three_atom()).unwrap();
        assert!(theta.at_zero().norm() < 1e-12);
        let g = reproducing_g(&theta, 10).unwrap();
        let tay = theta.taylor(11);
        for k in 0..=10 {
            assert!((g[k] - tay[k + 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn g_lies_in_model_space() {
        for (_, mu) in fixtures::all() {
            let theta = clark_inner(&mu).unwrap();
            let n = 512;
            let g = reproducing_g(&theta, n).unwrap();
            let p = project_model(&theta.taylor(n), &g);
            let dev: f64 = p.iter().zip(&g).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(dev <= 1e-8, "{dev}");
        }
    }

    #[test]
    fn theta_zero_is_one_rejected() {
        let theta = RationalInner::constant(poly::one()).unwrap();
        assert!(matches!(reproducing_g(&theta, 4), Err(Error::ThetaZeroIsOne)));
    }

    #[test]
    fn frames_of_fixtures() {
        for (_, mu) in fixtures::all() {
            let f = frame(&mu, 512);
            assert!(f.gram_deviation() <= GRAM_TOL);
            assert!(f.spectrum_deviation() <= 1e-8);
            assert!(f.distance_to_one() > 1e-6);
            assert!(f.unitarity_defect().unwrap() <= 1e-8);
        }
        let f = frame(&fixtures::plus_minus_i(), 64);
        let mut eig = f.eigenvalues().to_vec();
        eig.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((eig[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((eig[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn omega_of_point_mass_at_minus_one_is_constant() {
        let f = frame(&fixtures::delta_minus_one(), 16);
        assert!((f.omega()[(0, 0)] - poly::one()).norm() < 1e-15);
        assert!((1..=16).all(|k| f.omega()[(k, 0)].norm() < 1e-15));
    }

    #[test]
    fn omega_columns_match_raw_formula_inside_disc() {
        let mu = fixtures::three_atom();
        let theta = clark_inner(&mu).unwrap();
        let f = frame(&mu, 256);
        for (j, atom) in mu.atoms().iter().enumerate() {
            let col: Vec<c64> = (0..=256).map(|k| f.omega()[(k, j)]).collect();
            let z = c(0.3, -0.4);
            let raw = (poly::one() - theta.eval(z).unwrap()) * atom.weight.sqrt()
                / (poly::one() - atom.point().conj() * z);
            assert!((poly::eval(&col, z) - raw).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_improves_with_degree() {
        let mu = fixtures::three_atom();
        let devs: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| frame(&mu, n).gram_deviation())
            .collect();
        assert!(
            devs.windows(2).all(|w| w[1] <= 1.1 * w[0] || w[1] < 1e-13),
            "{devs:?}"
        );
        assert!(matches!(
            clark_embedding(&mu, &clark_inner(&mu).unwrap(), 8),
            Err(Error::IllConditionedClark { .. })
        ));
    }

    #[test]
    fn laurent_projections() {
        let mut f = LaurentVec::zeros(3);
        f.set(1, poly::one());
        f.set(-1, poly::one());
        let p = project_plus(&f);
        let m = project_minus(&f);
        assert_eq!(p.get(1), poly::one());
        assert_eq!(p.get(-1), c64::default());
        assert_eq!(m.get(-1), poly::one());
        let sum: Vec<c64> = p.coeffs().iter().zip(m.coeffs()).map(|(a, b)| a + b).collect();
        assert_eq!(sum, f.coeffs());
        assert_eq!(project_minus(&project_plus(&f)).norm(), 0.0);
    }

    #[test]
    fn model_projection_for_rational_inner_is_idempotent() {
        let theta = clark_inner(&fixtures::three_atom()).unwrap();
        let u = theta.taylor(128);
        let f: Vec<c64> = (0..=128).map(|k| c(1.0 / (1.0 + k as f64), (k % 3) as f64 * 0.1)).collect();
        let p = project_model(&u, &f);
        let pp = project_model(&u, &p);
        assert!(p.iter().zip(&pp).all(|(a, b)| (a - b).norm() < 1e-10));
        let one = project_model(&[c(0.0, 0.0), c(-1.0, 0.0)], &[poly::one(), c(0.0, 0.0)]);
        assert!((one[0] - poly::one()).norm() < 1e-15);
    }

    #[test]
    fn model_projection_for_phi_is_a_contraction() {
        let u = phi_coeffs(1.0, 64).coeffs;
        let f: Vec<c64> = (0..=64).map(|k| c((k as f64).cos(), 0.0)).collect();
        let p = project_model(&u, &f);
        let norm = |v: &[c64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm(&p) <= norm(&f) + 1e-12);
    }
}
