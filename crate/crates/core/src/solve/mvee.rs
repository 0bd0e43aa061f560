//! Minimum-volume enclosing ellipsoid by first-order ascent on the lifted
//! D-optimal design dual, with away steps.

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::certify::{CertKind, ContactCertificate};
use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Iterations between full refactorizations of the moment matrix.
const REFRESH: usize = 64;

fn lifted_inverse(q: &[DVector<f64>], u: &[f64]) -> Option<DMatrix<f64>> {
    let d = q[0].len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (qi, &ui) in q.iter().zip(u) {
        if ui > 0.0 {
            m.ger(ui, qi, qi, 1.0);
        }
    }
    let l = linalg::cholesky(&m, 1e-14)?;
    Some(linalg::spd_inverse_from_cholesky(&l))
}

fn refresh_g(q: &[DVector<f64>], minv: &DMatrix<f64>, g: &mut [f64]) {
    for (gi, qi) in g.iter_mut().zip(q) {
        *gi = (minv * qi).dot(qi);
    }
}

/// Minimum-volume ellipsoid containing `points`.
///
/// Works on the lifted points `(x, 1) ∈ Rⁿ⁺¹`: maximizes `log det Σuᵢqᵢqᵢᵀ`
/// over the simplex by alternating toward steps on the most violated point and
/// away steps on the least useful supported one. Stops once every point has
/// form at most `1 + eps` and every supported point at least `1 − eps`.
/// The certificate carries `λ = n·u`, which satisfies the multiplier
/// equations exactly.
pub fn mvee_points(points: &[DVector<f64>], cfg: &SolverConfig) -> Result<(Ellipsoid, ContactCertificate)> {
    cfg.validate()?;
    let first = points.first().ok_or(Error::EmptyBody)?;
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    for p in points {
        check_dim(n, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBody("non-finite coordinate".into()));
        }
    }
    let m = points.len();
    let d = n + 1;
    let df = d as f64;
    let nf = n as f64;

    // Center and scale for conditioning; the answer is mapped back at the end.
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / m as f64;
    let scale = points.iter().map(|p| (p - &mean).amax()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let q: Vec<DVector<f64>> = points
        .iter()
        .map(|p| {
            let mut v = DVector::zeros(d);
            v.rows_mut(0, n).copy_from(&((p - &mean) / scale));
            v[n] = 1.0;
            v
        })
        .collect();
    let lifted = DMatrix::from_fn(d, m, |i, j| q[j][i]);
    if linalg::rank(&lifted, 1e-10) < d {
        return Err(Error::DegenerateInput("points do not span the space affinely".into()));
    }

    // Stopping on the lifted forms g with tolerance e keeps the returned forms
    // within (g − 1)/n ≤ 1 + e(n+1)/n; tighten so the bound is eps.
    let target = cfg.eps * nf / df;
    let mut u = vec![1.0 / m as f64; m];
    let mut minv = lifted_inverse(&q, &u).ok_or_else(|| Error::DegenerateInput("singular moment matrix".into()))?;
    let mut g = vec![0.0; m];
    refresh_g(&q, &minv, &mut g);

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < cfg.max_iter {
        let (mut j, mut kappa) = (0, f64::NEG_INFINITY);
        let (mut k, mut low) = (usize::MAX, f64::INFINITY);
        for i in 0..m {
            if g[i] > kappa {
                kappa = g[i];
                j = i;
            }
            if u[i] > 0.0 && g[i] < low {
                low = g[i];
                k = i;
            }
        }
        let eps_plus = kappa / df - 1.0;
        let eps_minus = 1.0 - low / df;
        gap = eps_plus.max(eps_minus);
        if gap <= target {
            break;
        }
        iterations += 1;
        let (idx, step) = if eps_plus > eps_minus {
            (j, (kappa - df) / (df * (kappa - 1.0)))
        } else {
            let drop = u[k] / (1.0 - u[k]);
            let t = (df - low) / (df * (low - 1.0));
            (k, -t.min(drop))
        };
        if step == 0.0 || !step.is_finite() {
            break;
        }
        let v = &minv * &q[idx];
        let gi = g[idx];
        let denom = (1.0 - step) + step * gi;
        for i in 0..m {
            let qv = q[i].dot(&v);
            g[i] = (g[i] - step * qv * qv / denom) / (1.0 - step);
        }
        minv = (&minv - (&v * v.transpose()) * (step / denom)) / (1.0 - step);
        for ui in u.iter_mut() {
            *ui *= 1.0 - step;
        }
        u[idx] += step;
        if u[idx] < 1e-15 {
            u[idx] = 0.0;
        }
        if iterations % REFRESH == 0 {
            let total: f64 = u.iter().sum();
            u.iter_mut().for_each(|x| *x /= total);
            if let Some(fresh) = lifted_inverse(&q, &u) {
                minv = fresh;
                refresh_g(&q, &minv, &mut g);
            }
        }
    }
    if gap > target {
        return Err(Error::Unconverged { iterations, gap });
    }

    let total: f64 = u.iter().sum();
    u.iter_mut().for_each(|x| *x /= total);
    let c_scaled = q.iter().zip(&u).fold(DVector::zeros(n), |acc, (qi, &ui)| acc + qi.rows(0, n) * ui);
    let mut s = DMatrix::<f64>::zeros(n, n);
    for (qi, &ui) in q.iter().zip(&u) {
        if ui > 0.0 {
            let r = qi.rows(0, n) - &c_scaled;
            s.ger(ui, &r, &r, 1.0);
        }
    }
    let l = linalg::cholesky(&s, 1e-14).ok_or_else(|| Error::DegenerateInput("singular scatter".into()))?;
    let shape_scaled = linalg::spd_inverse_from_cholesky(&l) / nf;
    let center = &mean + c_scaled * scale;
    let e = Ellipsoid::from_computed(center, shape_scaled / (scale * scale))?;

    let mut contacts = Vec::new();
    let mut multipliers = Vec::new();
    for (p, &ui) in points.iter().zip(&u) {
        if ui * nf > crate::certify::PRUNE_TOL {
            contacts.push(p.clone());
            multipliers.push(nf * ui);
        }
    }
    Ok((e, ContactCertificate { kind: CertKind::Ce, contacts, multipliers }))
}
