//! Truncated matrices of the shift, its Clark perturbations `V` and `Ṽ`, the functional
//! calculus `φ_t(·)`, and the cocycle `W_t`, together with their structural checks.
//!
//! Analytic operators act on coefficients `0..=N`; bilateral ones on `−N..=N`, stored
//! with index `k` at position `k + N`.

use faer::{c64, Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner::{clark_inner, phi, phi_coeffs, product_inner, InnerProduct, RationalInner};
use crate::linalg::{self, toeplitz_lower};
use crate::measure::MultiMeasureSystem;
use crate::modelspace::{clark_embedding, one_minus, project_model, reproducing_g, ClarkFrame};
use crate::poly;

/// Eigenvalues of the Clark unitary closer than this to 1 are refused by the calculus.
pub const SPECTRUM_GAP: f64 = 1e-6;

/// Coefficient window of a truncated operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Indices `0..=N`.
    Analytic(usize),
    /// Indices `−N..=N`.
    Bilateral(usize),
}

impl Window {
    pub fn degree(self) -> usize {
        match self {
            Window::Analytic(n) | Window::Bilateral(n) => n,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Window::Analytic(n) => n + 1,
            Window::Bilateral(n) => 2 * n + 1,
        }
    }

    /// Lowest coefficient index.
    pub fn low(self) -> isize {
        match self {
            Window::Analytic(_) => 0,
            Window::Bilateral(n) => -(n as isize),
        }
    }

    /// Matrix position of coefficient `k`.
    pub fn position(self, k: isize) -> usize {
        let p = k - self.low();
        assert!(
            p >= 0 && (p as usize) < self.dim(),
            "index {k} outside window"
        );
        p as usize
    }

    /// Default edge margin `⌈N/4⌉`.
    pub fn default_margin(self) -> usize {
        self.degree().div_ceil(4)
    }
}

/// A square matrix over a coefficient window. Residual norms only look at the interior:
/// the window minus `margin` indices at each truncated edge. The index 0 of an analytic
/// window is a genuine boundary of `H²` and is kept.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    matrix: Mat<c64>,
    window: Window,
    margin: usize,
}

impl TruncatedOperator {
    pub fn new(matrix: Mat<c64>, window: Window) -> Self {
        assert_eq!(matrix.nrows(), window.dim(), "rows do not match window");
        assert_eq!(matrix.ncols(), window.dim(), "columns do not match window");
        Self {
            matrix,
            margin: window.default_margin(),
            window,
        }
    }

    pub fn identity(window: Window) -> Self {
        Self::new(linalg::identity(window.dim()), window)
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        assert!(margin <= self.window.degree(), "margin larger than window");
        self.margin = margin;
        self
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Entry `(j, k)` in coefficient indices.
    pub fn entry(&self, j: isize, k: isize) -> c64 {
        self.matrix[(self.window.position(j), self.window.position(k))]
    }

    /// Image of the basis vector `e_k`, listed over the window.
    pub fn column(&self, k: isize) -> Vec<c64> {
        let c = self.window.position(k);
        (0..self.window.dim()).map(|r| self.matrix[(r, c)]).collect()
    }

    /// `(first position, length)` of the interior.
    pub fn interior_range(&self) -> (usize, usize) {
        let n = self.window.degree();
        match self.window {
            Window::Analytic(_) => (0, n + 1 - self.margin),
            Window::Bilateral(_) => (self.margin, 2 * (n - self.margin) + 1),
        }
    }

    pub fn interior(&self) -> MatRef<'_, c64> {
        let (s, l) = self.interior_range();
        self.matrix.as_ref().submatrix(s, s, l, l)
    }

    /// Spectral norm of the interior block.
    pub fn interior_norm(&self) -> Result<f64> {
        linalg::spectral_norm(self.interior())
    }

    /// Spectral norm of the interior block of `self − other`.
    pub fn interior_distance(&self, other: &Self) -> Result<f64> {
        self.same_window(other);
        let (s, l) = self.interior_range();
        let a = self.matrix.as_ref().submatrix(s, s, l, l);
        let b = other.matrix.as_ref().submatrix(s, s, l, l);
        linalg::distance(a, b)
    }

    /// `‖(AᴴA − I)_interior‖₂`.
    pub fn isometry_residual(&self) -> Result<f64> {
        let gram = self.matrix.adjoint() * &self.matrix;
        self.like(gram)
            .interior_distance(&Self::identity(self.window).with_margin(self.margin))
    }

    /// `‖(AAᴴ − I)_interior‖₂`.
    pub fn coisometry_residual(&self) -> Result<f64> {
        let gram = &self.matrix * self.matrix.adjoint();
        self.like(gram)
            .interior_distance(&Self::identity(self.window).with_margin(self.margin))
    }

    pub fn adjoint(&self) -> Self {
        self.like(self.matrix.adjoint().to_owned())
    }

    pub fn compose(&self, other: &Self) -> Self {
        self.same_window(other);
        self.like(&self.matrix * &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.same_window(other);
        self.like(&self.matrix - &other.matrix)
    }

    /// The analytic block (indices `≥ 0`) of a bilateral operator.
    pub fn analytic_block(&self) -> Self {
        match self.window {
            Window::Analytic(_) => self.clone(),
            Window::Bilateral(n) => Self {
                matrix: self.matrix.as_ref().submatrix(n, n, n + 1, n + 1).to_owned(),
                window: Window::Analytic(n),
                margin: self.margin,
            },
        }
    }

    fn like(&self, matrix: Mat<c64>) -> Self {
        Self {
            matrix,
            window: self.window,
            margin: self.margin,
        }
    }

    fn same_window(&self, other: &Self) {
        assert_eq!(self.window, other.window, "window mismatch");
    }
}

/// The unilateral shift on `0..=N`.
pub fn shift(n: usize) -> TruncatedOperator {
    let w = Window::Analytic(n);
    TruncatedOperator::new(Mat::from_fn(w.dim(), w.dim(), |j, k| unit_if(j == k + 1)), w)
}

/// The bilateral shift on `−N..=N`.
pub fn bilateral_shift(n: usize) -> TruncatedOperator {
    let w = Window::Bilateral(n);
    TruncatedOperator::new(Mat::from_fn(w.dim(), w.dim(), |j, k| unit_if(j == k + 1)), w)
}

fn unit_if(b: bool) -> c64 {
    if b {
        poly::one()
    } else {
        c64::default()
    }
}

/// Multiplication by an analytic symbol: entry `(j, k) = symbol[j − k]`.
pub fn mult_by(symbol: &[c64], window: Window) -> TruncatedOperator {
    TruncatedOperator::new(toeplitz_lower(symbol, window.dim()), window)
}

/// Writes `S + (1−θ)⊗g` into the analytic corner starting at `offset`.
fn add_model_perturbation(m: &mut Mat<c64>, offset: usize, theta_taylor: &[c64], g: &[c64]) {
    let u = one_minus(theta_taylor);
    for j in 0..g.len() {
        for k in 0..g.len() {
            m[(offset + j, offset + k)] += u[j] * g[k].conj();
        }
    }
}

/// `V f = zf + (f, g)(1 − θ)` on `0..=N`.
///
/// ```
/// use cocyclic::{inner::clark_inner, measure::fixtures, operators::build_v};
/// let theta = clark_inner(&fixtures::delta_minus_one()).unwrap();
/// let v = build_v(&theta, 16).unwrap();
/// assert!((v.entry(0, 0).re + 1.0).abs() < 1e-12);
/// assert!((v.entry(2, 1).re - 1.0).abs() < 1e-12);
/// ```
pub fn build_v(theta: &RationalInner, n: usize) -> Result<TruncatedOperator> {
    let g = reproducing_g(theta, n)?;
    let mut op = shift(n);
    add_model_perturbation(&mut op.matrix, 0, &theta.taylor(n), &g);
    Ok(op)
}

/// `Ṽ f = zf + (f, g)(1 − θ) − f_{−1}(1 − θ(1)̄ θ)` on `−N..=N`, where `f_{−1}` is the
/// coefficient of `z̄`.
pub fn build_vtilde(theta: &RationalInner, n: usize) -> Result<TruncatedOperator> {
    let g = reproducing_g(theta, n)?;
    let mut op = bilateral_shift(n);
    let tay = theta.taylor(n);
    add_model_perturbation(&mut op.matrix, n, &tay, &g);
    subtract_coanalytic_correction(&mut op.matrix, n, theta, &tay)?;
    Ok(op)
}

fn subtract_coanalytic_correction(
    m: &mut Mat<c64>,
    n: usize,
    theta: &RationalInner,
    theta_taylor: &[c64],
) -> Result<()> {
    let c = theta.boundary_value_at_one()?.conj();
    let col = n - 1;
    for j in 0..=n {
        let w = if j == 0 { poly::one() } else { c64::default() } - c * theta_taylor[j];
        m[(n + j, col)] -= w;
    }
    Ok(())
}

/// The cogenerator built from a finite family of measures, with its ingredients.
#[derive(Debug, Clone)]
pub struct MultiCogenerator {
    pub op: TruncatedOperator,
    pub thetas: Vec<RationalInner>,
    pub product: InnerProduct,
    pub frames: Vec<ClarkFrame>,
}

/// `Ṽ = S̃ + Σ_n (·, θ̂_n g_n) θ̂_n(1 − θ_n) − (·, z̄)(1 − θ(1)̄ θ)` with `θ = Π θ_k`,
/// `θ̂_n = Π_{k<n} θ_k`, and `g_n = (θ_n − θ_n(0))/(z(1 − θ_n(0)))`.
pub fn build_multi_v(system: &MultiMeasureSystem, n: usize, cap: usize) -> Result<MultiCogenerator> {
    let thetas = system
        .components()
        .iter()
        .map(clark_inner)
        .collect::<Result<Vec<_>>>()?;
    let product = product_inner(&thetas, cap)?;
    let frames = system
        .components()
        .iter()
        .zip(&thetas)
        .map(|(mu, th)| clark_embedding(mu, th, n))
        .collect::<Result<Vec<_>>>()?;
    let mut op = bilateral_shift(n);
    for (theta_n, hat) in thetas.iter().zip(&product.partials) {
        let hat_taylor = hat.taylor(n);
        let column = poly::mul_truncated(&hat_taylor, &one_minus(&theta_n.taylor(n)), n + 1);
        let row = poly::mul_truncated(&hat_taylor, &reproducing_g(theta_n, n)?, n + 1);
        for (j, cj) in column.iter().enumerate() {
            for (k, rk) in row.iter().enumerate() {
                op.matrix[(n + j, n + k)] += cj * rk.conj();
            }
        }
    }
    let theta = &product.product;
    subtract_coanalytic_correction(&mut op.matrix, n, theta, &theta.taylor(n))?;
    Ok(MultiCogenerator {
        op,
        thetas,
        product,
        frames,
    })
}

/// Block structure of a multi-measure cogenerator on `H²`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiBlockReport {
    pub unitarity: f64,
    pub coisometry: f64,
    /// `‖B_nᴴ V̂ B_n − Ũ_n‖` with `B_n = T_{θ̂_n} Ω_n`.
    pub block_deviation: Vec<f64>,
    /// Largest coupling between distinct blocks, including the `θH²` part.
    pub cross_block: f64,
}

impl MultiCogenerator {
    pub fn block_report(&self) -> Result<MultiBlockReport> {
        let n = self.op.window().degree();
        let v = self.op.analytic_block();
        let vm = v.matrix();
        let blocks: Vec<Mat<c64>> = self
            .frames
            .iter()
            .zip(&self.product.partials)
            .map(|(f, hat)| &toeplitz_lower(&hat.taylor(n), n + 1) * f.omega())
            .collect();
        let mut block_deviation = Vec::new();
        let mut cross: f64 = 0.0;
        for (i, bi) in blocks.iter().enumerate() {
            let image = vm * bi;
            let own = bi.adjoint() * &image;
            block_deviation.push(linalg::distance(
                own.as_ref(),
                self.frames[i].clark_unitary().as_ref(),
            )?);
            for (k, bk) in blocks.iter().enumerate() {
                if k != i {
                    cross = cross.max(linalg::spectral_norm((bk.adjoint() * &image).as_ref())?);
                }
            }
        }
        // The remaining part θH²: columns of T_θ away from the truncation edge.
        let theta = &self.product.product;
        let (_, len) = v.interior_range();
        let keep = len.saturating_sub(theta.degree());
        let t_theta = toeplitz_lower(&theta.taylor(n), n + 1);
        let rest = t_theta.as_ref().subcols(0, keep);
        for b in &blocks {
            cross = cross.max(linalg::spectral_norm((b.adjoint() * (vm * rest)).as_ref())?);
            cross = cross.max(linalg::spectral_norm((rest.adjoint() * (vm * b)).as_ref())?);
        }
        Ok(MultiBlockReport {
            unitarity: self.op.isometry_residual()?,
            coisometry: self.op.coisometry_residual()?,
            block_deviation,
            cross_block: cross,
        })
    }
}

/// `φ_t(Ũ)` in atom coordinates, via the eigendecomposition of the Clark unitary.
fn phi_of_clark_unitary(frame: &ClarkFrame, t: f64) -> Result<Mat<c64>> {
    let (f, _) = linalg::eigen_apply(frame.clark_unitary().as_ref(), |l| {
        if (l - poly::one()).norm() < SPECTRUM_GAP {
            Err(Error::SpectrumAtOne {
                eigenvalue: format!("{l}"),
                tol: SPECTRUM_GAP,
            })
        } else {
            Ok(phi(t, l))
        }
    })?;
    Ok(f)
}

/// `φ_t(V) = Ω φ_t(Ũ) Ωᴴ + T_θ T_{φ_t} T_θᴴ`: the calculus on `K_θ` through the Clark
/// unitary and on `θH²`, where `V` is the shift, through multiplication by `φ_t`.
pub fn calculus_v(frame: &ClarkFrame, t: f64) -> Result<TruncatedOperator> {
    let n = frame.degree();
    let omega = frame.omega();
    let model = omega * phi_of_clark_unitary(frame, t)? * omega.adjoint();
    let theta = frame.theta().taylor(n);
    let theta_phi = poly::mul_truncated(&theta, &phi_coeffs(t, n).coeffs, n + 1);
    let shift_part = toeplitz_lower(&theta_phi, n + 1) * toeplitz_lower(&theta, n + 1).adjoint();
    Ok(TruncatedOperator::new(model + shift_part, Window::Analytic(n)))
}

/// `φ_t(Ṽ)`: equal to `φ_t(V)` on `H²` and, for `u ∈ H²₋`,
/// `φ_t(Ṽ)u = P_−(φ_t u) + θ(1)̄ θ P_+(φ_t u)`.
pub fn calculus_vtilde(frame: &ClarkFrame, t: f64) -> Result<TruncatedOperator> {
    let n = frame.degree();
    let w = Window::Bilateral(n);
    let c = phi_coeffs(t, 2 * n).coeffs;
    let analytic = calculus_v(frame, t)?;
    let mut m = Mat::<c64>::zeros(w.dim(), w.dim());
    m.as_mut()
        .submatrix_mut(n, n, n + 1, n + 1)
        .copy_from(analytic.matrix());
    // Column of e_{−k} sits at position n − k.
    for k in 1..=n {
        for (i, &ci) in c.iter().enumerate().take(k) {
            m[(n - k + i, n - k)] = ci;
        }
    }
    let hankel = Mat::from_fn(n + 1, n, |j, col| c[j + n - col]);
    let theta = frame.theta();
    let scale = theta.boundary_value_at_one()?.conj();
    let lifted = toeplitz_lower(&theta.taylor(n), n + 1) * hankel * faer::Scale(scale);
    m.as_mut().submatrix_mut(n, 0, n + 1, n).copy_from(&lifted);
    Ok(TruncatedOperator::new(m, w))
}

/// `W_t` with `φ_t(Ṽ) = W_t S̃_t`: the identity on `H²₋` and, on `H²`,
/// `I + φ_t(V)T_φᴴ − T_φT_φᴴ − T_{1−θ(1)̄θ}(I − T_φT_φᴴ)`.
///
/// The naive product `φ_t(Ṽ)·M_φᴴ` ([`cocycle_w_by_product`]) represents the same
/// operator but mixes in the truncation of `M_φᴴ` below index `−N`.
pub fn cocycle_w(frame: &ClarkFrame, t: f64) -> Result<TruncatedOperator> {
    let n = frame.degree();
    let d = n + 1;
    let w = Window::Bilateral(n);
    let fv = calculus_v(frame, t)?;
    let tphi = toeplitz_lower(&phi_coeffs(t, n).coeffs, d);
    let tphi_adj = tphi.adjoint().to_owned();
    let defect = linalg::identity(d) - &tphi * &tphi_adj;
    let theta = frame.theta();
    let c = theta.boundary_value_at_one()?.conj();
    let weight = one_minus(&poly::scale(&theta.taylor(n), c));
    let block = linalg::identity(d) + fv.matrix() * &tphi_adj - &tphi * &tphi_adj
        - toeplitz_lower(&weight, d) * &defect;
    let mut m = linalg::identity(w.dim());
    m.as_mut().submatrix_mut(n, n, d, d).copy_from(&block);
    Ok(TruncatedOperator::new(m, w))
}

/// `φ_t(Ṽ)·M_{φ_t}ᴴ` computed literally on the bilateral window.
pub fn cocycle_w_by_product(frame: &ClarkFrame, t: f64) -> Result<TruncatedOperator> {
    let n = frame.degree();
    let m = mult_by(&phi_coeffs(t, 2 * n).coeffs, Window::Bilateral(n));
    Ok(calculus_vtilde(frame, t)?.compose(&m.adjoint()))
}

/// `‖W_{t+s} − W_t S̃_t W_s S̃_tᴴ‖` on the interior, with every factor a window matrix.
pub fn cocycle_law_residual(frame: &ClarkFrame, t: f64, s: f64) -> Result<f64> {
    let n = frame.degree();
    let mt = mult_by(&phi_coeffs(t, 2 * n).coeffs, Window::Bilateral(n));
    let rhs = cocycle_w(frame, t)?
        .compose(&mt)
        .compose(&cocycle_w(frame, s)?)
        .compose(&mt.adjoint());
    cocycle_w(frame, t + s)?.interior_distance(&rhs)
}

/// `‖φ_t(V)φ_s(V) − φ_{t+s}(V)‖` on the interior.
pub fn semigroup_residual_v(frame: &ClarkFrame, t: f64, s: f64) -> Result<f64> {
    let lhs = calculus_v(frame, t)?.compose(&calculus_v(frame, s)?);
    lhs.interior_distance(&calculus_v(frame, t + s)?)
}

/// `‖φ_t(Ṽ)φ_s(Ṽ) − φ_{t+s}(Ṽ)‖` on the interior.
pub fn semigroup_residual_vtilde(frame: &ClarkFrame, t: f64, s: f64) -> Result<f64> {
    let lhs = calculus_vtilde(frame, t)?.compose(&calculus_vtilde(frame, s)?);
    lhs.interior_distance(&calculus_vtilde(frame, t + s)?)
}

/// Result of [`wold_check`].
#[derive(Debug, Clone, Serialize)]
pub struct WoldReport {
    /// Dimension of the numerically stable range of `V^k`.
    pub unitary_dim: usize,
    /// Number of atoms, i.e. the expected dimension.
    pub expected_dim: usize,
    /// Largest principal angle between that range and `span Ω`, in radians.
    pub angle: f64,
    /// Interior norm of `V T_θ − T_θ S`.
    pub intertwining: f64,
}

/// Unitary part of the Wold split of `V` as the range of `V^k` with `k = 2^j ≥ 2N`,
/// compared with `span Ω`; plus the check that `V(θh) = θ(zh)`.
pub fn wold_check(v: &TruncatedOperator, frame: &ClarkFrame) -> Result<WoldReport> {
    let n = v.window().degree();
    let power = range_power(v, 2 * n);
    let range = linalg::range_basis(power.as_ref(), 1e-8)?;
    let omega = frame.omega().qr().compute_thin_Q();
    let sine = linalg::subspace_sine(range.as_ref(), omega.as_ref())?;
    let t_theta = mult_by(&frame.theta().taylor(n), Window::Analytic(n));
    let lhs = v.compose(&t_theta);
    let rhs = t_theta.compose(&shift(n));
    Ok(WoldReport {
        unitary_dim: range.ncols(),
        expected_dim: frame.omega().ncols(),
        angle: sine.asin(),
        intertwining: lhs.interior_distance(&rhs)?,
    })
}

/// Dimension of the stable range of `V^k`, `k = 2^j ≥ min_power`, at rank tolerance 1e−8.
pub fn unitary_part_dim(v: &TruncatedOperator, min_power: usize) -> Result<usize> {
    let power = range_power(v, min_power);
    Ok(linalg::range_basis(power.as_ref(), 1e-8)?.ncols())
}

fn range_power(v: &TruncatedOperator, min_power: usize) -> Mat<c64> {
    let mut p = v.matrix().clone();
    let mut k = 1;
    while k < min_power.max(1) {
        p = &p * &p;
        k *= 2;
    }
    p
}

/// `ρ(v) = ‖(φ_t(Ṽ) − φ_t(S̃))(φ̄_t v) + (1 − θ(1)̄θ)v‖ / ‖v‖` on the interior.
#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub residual: f64,
    /// `‖P_{K_{φ_t}} v − v‖ / ‖v‖`.
    pub deviation: f64,
}

/// Precomputed `φ_t(Ṽ) − φ_t(S̃)` for repeated defect checks.
pub struct DefectProbe {
    difference: TruncatedOperator,
    phi: Vec<c64>,
    weight: Vec<c64>,
}

/// Largest `‖P_{K_{φ_t}} v − v‖ / ‖v‖` accepted by [`DefectProbe::check`].
pub const MODEL_SPACE_TOL: f64 = 1e-6;

impl DefectProbe {
    pub fn new(frame: &ClarkFrame, t: f64) -> Result<Self> {
        let n = frame.degree();
        let phi = phi_coeffs(t, 2 * n).coeffs;
        let difference = calculus_vtilde(frame, t)?.sub(&mult_by(&phi, Window::Bilateral(n)));
        let theta = frame.theta();
        let c = theta.boundary_value_at_one()?.conj();
        let weight = one_minus(&poly::scale(&theta.taylor(n), c));
        Ok(Self {
            difference,
            phi,
            weight,
        })
    }

    pub fn operator(&self) -> &TruncatedOperator {
        &self.difference
    }

    /// Fails with [`Error::NotInModelSpace`] when `v` is not in `K_{φ_t}` to
    /// [`MODEL_SPACE_TOL`]; the error carries both numbers.
    pub fn check(&self, v: &[c64]) -> Result<DefectReport> {
        let window = self.difference.window();
        let n = window.degree();
        assert_eq!(v.len(), n + 1, "v must have N + 1 coefficients");
        let norm_v = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm_v == 0.0 {
            return Ok(DefectReport {
                residual: 0.0,
                deviation: 0.0,
            });
        }
        let projected = project_model(&self.phi, v);
        let deviation = projected
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / norm_v;
        // φ̄_t v on −N..=N: coefficient k is Σ_j c̄_j v_{k+j}.
        let lifted: Vec<c64> = (-(n as isize)..=n as isize)
            .map(|k| {
                (0..=n)
                    .filter_map(|i| {
                        let j = i as isize - k;
                        (j >= 0).then(|| self.phi[j as usize].conj() * v[i])
                    })
                    .sum()
            })
            .collect();
        let m = self.difference.matrix();
        let wv = poly::mul_truncated(&self.weight, v, n + 1);
        let (start, len) = self.difference.interior_range();
        let mut sq = 0.0;
        for r in start..start + len {
            let mut acc: c64 = (0..window.dim()).map(|col| m[(r, col)] * lifted[col]).sum();
            if r >= n {
                acc += wv[r - n];
            }
            sq += acc.norm_sqr();
        }
        let residual = sq.sqrt() / norm_v;
        if deviation > MODEL_SPACE_TOL {
            return Err(Error::NotInModelSpace {
                deviation,
                residual,
            });
        }
        Ok(DefectReport {
            residual,
            deviation,
        })
    }
}

/// Eigenpairs of the truncated projection `I − T_{φ_t} T_{φ_t}ᴴ`, eigenvalues
/// nondecreasing. Eigenvectors with eigenvalue near 1 lie in `K_{φ_t}` up to rounding.
pub fn model_space_eigenbasis(t: f64, n: usize) -> Result<(Vec<f64>, Mat<c64>)> {
    let dim = n + 1;
    let tphi = toeplitz_lower(&phi_coeffs(t, n).coeffs, dim);
    let proj = linalg::identity(dim) - &tphi * tphi.adjoint();
    let eig = proj
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let values = (0..dim).map(|i| eig.S().column_vector()[i].re).collect();
    Ok((values, eig.U().to_owned()))
}

/// The `count` eigenvectors of [`model_space_eigenbasis`] with the largest eigenvalues.
pub fn model_space_vectors(t: f64, n: usize, count: usize) -> Result<Vec<Vec<c64>>> {
    let (_, u) = model_space_eigenbasis(t, n)?;
    Ok((0..count.min(n + 1))
        .map(|j| u.col(n - j).iter().copied().collect())
        .collect())
}

/// One-shot form of [`DefectProbe::check`].
pub fn defect_q(frame: &ClarkFrame, t: f64, v: &[c64]) -> Result<DefectReport> {
    DefectProbe::new(frame, t)?.check(v)
}
