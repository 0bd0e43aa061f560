//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(passive);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("svd computed with both factors")
}

/// Residual of projecting `col` onto the span of the passive columns,
/// relative to `‖col‖`.
fn independence(a: &DMatrix<f64>, passive: &[usize], j: usize) -> f64 {
    let col = a.column(j).into_owned();
    let norm = col.norm();
    if norm == 0.0 {
        return 0.0;
    }
    if passive.is_empty() {
        return 1.0;
    }
    let coef = solve_passive(a, &col, passive);
    (&col - a.select_columns(passive) * coef).norm() / norm
}

/// Minimize `‖Ax − b‖` subject to `x ≥ 0`.
///
/// Deterministic: candidate columns are scanned in index order and ties go to
/// the lowest index. Columns numerically dependent on the current passive set
/// are skipped until the passive set changes.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsSolution {
    let (m, k) = a.shape();
    assert_eq!(m, b.len(), "nnls: row count mismatch");
    let mut x = DVector::<f64>::zeros(k);
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; k];
    let mut skipped = vec![false; k];
    let scale = a.amax().max(f64::MIN_POSITIVE) * b.amax().max(1.0);
    let wtol = 1e-13 * scale * (m.max(k) as f64);
    let max_outer = 3 * k + 10;
    let mut iterations = 0;

    for _ in 0..max_outer {
        let r = b - a * &x;
        let w = a.transpose() * r;
        let mut best: Option<usize> = None;
        for j in 0..k {
            if in_passive[j] || skipped[j] || w[j] <= wtol {
                continue;
            }
            if best.is_none_or(|bj| w[j] > w[bj]) {
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if independence(a, &passive, j) < 1e-10 {
            skipped[j] = true;
            continue;
        }
        iterations += 1;
        passive.push(j);
        passive.sort_unstable();
        in_passive[j] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            let s = solve_passive(a, b, &passive);
            if s.iter().all(|&v| v > 0.0) || inner > 3 * k + 10 {
                for (idx, &p) in passive.iter().enumerate() {
                    x[p] = s[idx].max(0.0);
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (idx, &p) in passive.iter().enumerate() {
                if s[idx] <= 0.0 {
                    let denom = x[p] - s[idx];
                    let t = if denom > 0.0 { x[p] / denom } else { 0.0 };
                    alpha = alpha.min(t);
                }
            }
            for (idx, &p) in passive.iter().enumerate() {
                x[p] += alpha * (s[idx] - x[p]);
            }
            let mut kept = Vec::with_capacity(passive.len());
            for &p in &passive {
                if x[p] <= 1e-15 {
                    x[p] = 0.0;
                    in_passive[p] = false;
                } else {
                    kept.push(p);
                }
            }
            passive = kept;
            if passive.is_empty() {
                break;
            }
        }
        skipped.iter_mut().for_each(|s| *s = false);
    }

    let residual_norm = (a * &x - b).norm();
    NnlsSolution { x, residual_norm, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_nonnegative_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let s = nnls(&a, &b);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!(s.residual_norm < 1e-12);
    }

    #[test]
    fn clamps_negative_component() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_row_slice(&[1.0, -3.0]);
        let s = nnls(&a, &b);
        assert_eq!(s.x[1], 0.0);
        assert!((s.residual_norm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_columns_prefer_lowest_index() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_row_slice(&[2.0, 1.0]);
        let s = nnls(&a, &b);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert_eq!(s.x[1], 0.0);
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(
            entries in proptest::collection::vec(-1.0f64..1.0, 24),
            rhs in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let a = DMatrix::from_row_slice(6, 4, &entries);
            let b = DVector::from_vec(rhs);
            let s = nnls(&a, &b);
            let w = a.transpose() * (&b - &a * &s.x);
            for j in 0..4 {
                prop_assert!(s.x[j] >= 0.0);
                prop_assert!(w[j] <= 1e-9);
                if s.x[j] > 1e-9 {
                    prop_assert!(w[j].abs() <= 1e-9);
                }
            }
        }
    }
}
