//! Dense complex polynomials and power series, coefficients in ascending order.

use faer::c64;

pub fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn one() -> c64 {
    c64::new(1.0, 0.0)
}

pub fn eval(p: &[c64], z: c64) -> c64 {
    p.iter().rev().fold(zero(), |acc, &a| acc * z + a)
}

pub fn mul(a: &[c64], b: &[c64]) -> Vec<c64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Product truncated to `n` coefficients.
pub fn mul_truncated(a: &[c64], b: &[c64], n: usize) -> Vec<c64> {
    let mut out = vec![zero(); n];
    for (i, &x) in a.iter().enumerate().take(n) {
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[c64], b: &[c64]) -> Vec<c64> {
    let mut out = vec![zero(); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn sub(a: &[c64], b: &[c64]) -> Vec<c64> {
    add(a, &scale(b, -one()))
}

pub fn scale(a: &[c64], c: c64) -> Vec<c64> {
    a.iter().map(|&x| x * c).collect()
}

/// Drops trailing coefficients with modulus at most `tol · max|coef|`.
pub fn trim(mut p: Vec<c64>, tol: f64) -> Vec<c64> {
    let big = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    while p.len() > 1 && p.last().is_some_and(|c| c.norm() <= tol * big) {
        p.pop();
    }
    p
}

/// The first `n` Maclaurin coefficients of `num/den`; requires `den[0] ≠ 0`.
pub fn series_div(num: &[c64], den: &[c64], n: usize) -> Vec<c64> {
    let d0 = den[0];
    let mut out = vec![zero(); n];
    for k in 0..n {
        let mut acc = num.get(k).copied().unwrap_or_default();
        for i in 1..den.len().min(k + 1) {
            acc -= den[i] * out[k - i];
        }
        out[k] = acc / d0;
    }
    out
}

/// Synthetic division by `(z − root)`: returns the quotient and the remainder `p(root)`.
pub fn deflate(p: &[c64], root: c64) -> (Vec<c64>, c64) {
    if p.len() <= 1 {
        return (Vec::new(), p.first().copied().unwrap_or_default());
    }
    let n = p.len() - 1;
    let mut q = vec![zero(); n];
    let mut acc = p[n];
    for k in (0..n).rev() {
        q[k] = acc;
        acc = p[k] + acc * root;
    }
    (q, acc)
}

/// `Π_j (roots_j − z)`.
pub fn from_reversed_roots(roots: &[c64]) -> Vec<c64> {
    roots
        .iter()
        .fold(vec![one()], |acc, &r| mul(&acc, &[r, -one()]))
}

pub fn derivative(p: &[c64]) -> Vec<c64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}
