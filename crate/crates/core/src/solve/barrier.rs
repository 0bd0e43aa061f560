//! Log-barrier Newton method for problems of the form
//!
//! ```text
//! minimize  cᵀθ − Σⱼ log θ_{dⱼ}
//! s.t.      ‖Gᵢθ + gᵢ‖ ≤ fᵢᵀθ + f0ᵢ
//! ```
//!
//! using the barrier `−log((fᵢᵀθ + f0ᵢ)² − ‖Gᵢθ + gᵢ‖²)` (parameter 2 per
//! constraint). Both extremal-ellipsoid problems fit this template with `θ`
//! holding a triangular factor whose diagonal carries the log-determinant.

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::linalg;

pub(crate) struct Cone {
    pub g: DMatrix<f64>,
    pub g0: DVector<f64>,
    pub f: DVector<f64>,
    pub f0: f64,
}

pub(crate) struct Problem {
    pub dim: usize,
    pub linear: DVector<f64>,
    pub log_idx: Vec<usize>,
    pub cones: Vec<Cone>,
}

impl Problem {
    /// Barrier value at `θ`, or `None` outside the domain.
    fn value(&self, theta: &DVector<f64>, t: f64) -> Option<f64> {
        let mut v = t * self.linear.dot(theta);
        for &j in &self.log_idx {
            if theta[j] <= 0.0 {
                return None;
            }
            v -= t * theta[j].ln();
        }
        for c in &self.cones {
            let s = c.f.dot(theta) + c.f0;
            let u = &c.g * theta + &c.g0;
            let d = s * s - u.norm_squared();
            if s <= 0.0 || d <= 0.0 {
                return None;
            }
            v -= d.ln();
        }
        Some(v)
    }

    fn derivatives(&self, theta: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.dim;
        let mut grad = &self.linear * t;
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for &j in &self.log_idx {
            grad[j] -= t / theta[j];
            hess[(j, j)] += t / (theta[j] * theta[j]);
        }
        for c in &self.cones {
            let s = c.f.dot(theta) + c.f0;
            let u = &c.g * theta + &c.g0;
            let d = s * s - u.norm_squared();
            let v = &c.f * (2.0 * s) - c.g.transpose() * &u * 2.0;
            grad -= &v / d;
            hess += (c.g.transpose() * &c.g * 2.0 - &c.f * c.f.transpose() * 2.0) / d;
            hess.ger(1.0 / (d * d), &v, &v, 1.0);
        }
        (grad, linalg::symmetrize(&hess))
    }

    fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
        let mut reg = 0.0;
        let scale = hess.diagonal().amax().max(1e-300);
        loop {
            let mut h = hess.clone();
            for i in 0..h.nrows() {
                h[(i, i)] += reg;
            }
            if let Some(l) = linalg::cholesky(&h, 1e-15) {
                return -linalg::backward_solve_transposed(&l, &linalg::forward_solve(&l, grad));
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        }
    }

    fn centering(&self, theta: &mut DVector<f64>, t: f64, budget: &mut usize) -> Result<()> {
        let mut value = self.value(theta, t).ok_or_else(|| Error::DegenerateInput("start is infeasible".into()))?;
        loop {
            if *budget == 0 {
                return Err(Error::Unconverged { iterations: 0, gap: f64::NAN });
            }
            *budget -= 1;
            let (grad, hess) = self.derivatives(theta, t);
            let dir = Self::newton_direction(&hess, &grad);
            let decrement = -grad.dot(&dir);
            // Below this the barrier value cannot resolve further descent.
            if decrement / 2.0 <= 1e-11_f64.max(1e-15 * value.abs()) {
                return Ok(());
            }
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-20 {
                let trial = &*theta + &dir * step;
                if let Some(v) = self.value(&trial, t) {
                    if v < value && v <= value - 0.25 * step * decrement {
                        *theta = trial;
                        value = v;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // No progress possible at working precision.
                return Ok(());
            }
        }
    }

    /// Path-following from a strictly feasible `θ` until the barrier gap
    /// `ν/t` drops below `eps`.
    pub fn solve(&self, mut theta: DVector<f64>, eps: f64, max_newton: usize) -> Result<DVector<f64>> {
        let nu = 2.0 * self.cones.len() as f64;
        let mut t = 1.0;
        let mut budget = max_newton;
        loop {
            match self.centering(&mut theta, t, &mut budget) {
                Ok(()) => {}
                Err(Error::Unconverged { .. }) => {
                    return Err(Error::Unconverged { iterations: max_newton, gap: nu / t });
                }
                Err(e) => return Err(e),
            }
            if nu / t <= eps {
                return Ok(theta);
            }
            t *= 8.0;
        }
    }
}

/// Index of `L[i][j]`, `i ≥ j`, in row-major packed lower-triangular storage.
pub(crate) fn tri_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

pub(crate) fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn unpack_lower(theta: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i >= j { theta[tri_index(i, j)] } else { 0.0 })
}

/// Minimum-volume enclosing ellipsoid via the log-barrier method on
/// `{x : ‖Lx + d‖ ≤ 1}` with `L` lower triangular; independent of
/// [`super::mvee_points`] and used as a cross-check.
pub fn mvee_points_barrier(points: &[DVector<f64>], cfg: &SolverConfig) -> Result<Ellipsoid> {
    cfg.validate()?;
    let first = points.first().ok_or(Error::EmptyBody)?;
    let n = first.len();
    for p in points {
        check_dim(n, p.len())?;
    }
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / points.len() as f64;
    let radius = points.iter().map(|p| (p - &mean).norm()).fold(0.0, f64::max);
    if radius == 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    // Work in coordinates y = (x − mean)/radius.
    let ys: Vec<DVector<f64>> = points.iter().map(|p| (p - &mean) / radius).collect();
    let tl = tri_len(n);
    let dim = tl + n;
    let cones = ys
        .iter()
        .map(|y| {
            let mut g = DMatrix::zeros(n, dim);
            for i in 0..n {
                for j in 0..=i {
                    g[(i, tri_index(i, j))] = y[j];
                }
                g[(i, tl + i)] = 1.0;
            }
            Cone { g, g0: DVector::zeros(n), f: DVector::zeros(dim), f0: 1.0 }
        })
        .collect();
    let problem = Problem {
        dim,
        linear: DVector::zeros(dim),
        log_idx: (0..n).map(|i| tri_index(i, i)).collect(),
        cones,
    };
    let mut theta0 = DVector::zeros(dim);
    for i in 0..n {
        theta0[tri_index(i, i)] = 0.5;
    }
    let theta = problem.solve(theta0, cfg.eps, cfg.max_iter)?;
    let l = unpack_lower(&theta, n);
    let d = theta.rows(tl, n).into_owned();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::DegenerateInput("singular factor".into()))?;
    let center_y = -(&linv * d);
    let shape_y = l.transpose() * &l;
    Ellipsoid::from_computed(&mean + center_y * radius, shape_y / (radius * radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_mvee_of_square() {
        let pts: Vec<_> = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|p| DVector::from_row_slice(p))
            .collect();
        let e = mvee_points_barrier(&pts, &SolverConfig::with_eps(1e-10)).unwrap();
        assert!((e.shape() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-8);
    }

    #[test]
    fn packed_indices() {
        assert_eq!(tri_index(0, 0), 0);
        assert_eq!(tri_index(2, 1), 4);
        assert_eq!(tri_len(3), 6);
    }
}
