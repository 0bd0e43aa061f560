//! Small dense helpers shared by the geometry, certification and solver modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, Normal};

/// Lower Cholesky factor `L` with `A = L Lᵀ`, rejecting pivots below
/// `rel_tol · trace(A)/n`.
pub fn cholesky(a: &DMatrix<f64>, rel_tol: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return None;
    }
    let scale = a.trace() / n as f64;
    if !(scale.is_finite() && scale > 0.0) {
        return None;
    }
    let pivot_tol = rel_tol * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > pivot_tol) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solve `L y = b` for lower-triangular `L`.
pub fn forward_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Solve `Lᵀ x = b` for lower-triangular `L`.
pub fn backward_solve_transposed(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of an SPD matrix from its lower Cholesky factor.
pub fn spd_inverse_from_cholesky(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::<f64>::zeros(n);
        e[j] = 1.0;
        let col = backward_solve_transposed(l, &forward_solve(l, &e));
        inv.set_column(j, &col);
    }
    symmetrize(&inv)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// `f(A)` for symmetric `A`, applying `f` to the eigenvalues.
pub fn sym_apply(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(a, |x| x.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(a, |x| 1.0 / x.sqrt())
}

/// Orthogonal (Householder) matrix `Q` with `Q e₁ = v` for a unit vector `v`.
pub fn householder_to(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut w = -v.clone();
    w[0] += 1.0;
    let ww = w.norm_squared();
    if ww < 1e-30 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / ww)
}

/// Numerical rank via singular values relative to the largest one.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Visit every `k`-subset of `0..m` in lexicographic order.
pub fn for_each_combination(m: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Deterministic low-discrepancy unit directions in `Rⁿ`.
///
/// The first `2n` entries are `±eₖ`; the rest come from a Halton sequence
/// pushed through the normal quantile function and normalized.
pub fn sphere_directions(n: usize, count: usize) -> Vec<DVector<f64>> {
    assert!(n >= 1 && n <= PRIMES.len(), "unsupported dimension {n}");
    let mut out = Vec::with_capacity(count);
    for k in 0..n {
        for sign in [1.0, -1.0] {
            if out.len() == count {
                return out;
            }
            let mut e = DVector::zeros(n);
            e[k] = sign;
            out.push(e);
        }
    }
    if n == 1 {
        return out;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut i = 1u64;
    while out.len() < count {
        let v = DVector::from_fn(n, |k, _| normal.inverse_cdf(radical_inverse(i, PRIMES[k])));
        i += 1;
        let norm = v.norm();
        if norm > 1e-9 && norm.is_finite() {
            out.push(v / norm);
        }
    }
    out
}
