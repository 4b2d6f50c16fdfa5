//! Gauss–Legendre rules and adaptive bisection.

use crate::error::{Error, Result};

/// Nodes and weights on `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// The `n`-point rule, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Bisects until a panel and its two halves agree to `tol` (relative to the panel
    /// value, floored at `tol` absolute).
    pub fn integrate_adaptive(
        &self,
        a: f64,
        b: f64,
        tol: f64,
        f: &impl Fn(f64) -> f64,
    ) -> Result<f64> {
        self.adaptive(a, b, self.integrate(a, b, f), tol, f, 0)
    }

    fn adaptive(
        &self,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        f: &impl Fn(f64) -> f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = self.integrate(a, m, f);
        let right = self.integrate(m, b, f);
        let both = left + right;
        if (both - whole).abs() <= tol * both.abs().max(1.0) {
            return Ok(both);
        }
        if depth >= 40 {
            return Err(Error::QuadratureNotConverged { a, b, depth });
        }
        Ok(self.adaptive(a, m, left, tol, f, depth + 1)?
            + self.adaptive(m, b, right, tol, f, depth + 1)?)
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
