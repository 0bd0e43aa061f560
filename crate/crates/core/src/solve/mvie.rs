//! Maximum-volume ellipsoid inscribed in an inequality polytope.

use nalgebra::{DMatrix, DVector};

use super::barrier::{tri_index, tri_len, unpack_lower, Cone, Problem};
use super::SolverConfig;
use crate::certify::{certify_ie, ContactCertificate};
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::polytope::{Halfspace, Polytope};

fn unit_facets(facets: &[Halfspace]) -> Vec<Halfspace> {
    facets
        .iter()
        .map(|f| {
            let s = f.normal.norm();
            Halfspace::new(&f.normal / s, f.offset / s)
        })
        .collect()
}

/// Center and radius of the largest ball inside `{⟨aᵢ,x⟩ ≤ bᵢ}`, by the
/// barrier method on `max r s.t. ⟨aᵢ,c⟩ + r‖aᵢ‖ ≤ bᵢ`.
pub fn chebyshev_center(body: &Polytope) -> Result<(DVector<f64>, f64)> {
    let facets = body
        .halfspaces()
        .ok_or_else(|| Error::InvalidBody("expected an inequality representation".into()))?;
    if !body.is_bounded() {
        return Err(Error::InvalidBody("inequality system is unbounded".into()));
    }
    let n = body.dim();
    let unit = unit_facets(facets);
    let scale = 1.0 + unit.iter().map(|f| f.offset.abs()).fold(0.0, f64::max);
    let cones = unit
        .iter()
        .map(|f| {
            let mut fv = DVector::zeros(n + 1);
            fv.rows_mut(0, n).copy_from(&(-&f.normal));
            fv[n] = -1.0;
            Cone { g: DMatrix::zeros(0, n + 1), g0: DVector::zeros(0), f: fv, f0: f.offset }
        })
        .collect();
    let mut linear = DVector::zeros(n + 1);
    linear[n] = -1.0;
    let problem = Problem { dim: n + 1, linear, log_idx: Vec::new(), cones };
    let mut theta = DVector::zeros(n + 1);
    theta[n] = unit.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min) - 1.0;
    let theta = problem.solve(theta, 1e-9 * scale, 10_000)?;
    let r = theta[n];
    if r <= 1e-10 * scale {
        return Err(Error::InvalidBody("polytope has empty interior".into()));
    }
    Ok((theta.rows(0, n).into_owned(), r))
}

/// Maximum-volume inscribed ellipsoid of a bounded inequality polytope.
///
/// Parameterizes `E = {c + Lw : ‖w‖ ≤ 1}` with `L` lower triangular and
/// maximizes `Σ log Lⱼⱼ` under `‖Lᵀaᵢ‖ ≤ bᵢ − ⟨aᵢ,c⟩`, after moving the
/// Chebyshev center to the origin and scaling its radius to one. The
/// certificate is recovered from the facets active at the solution.
pub fn mvie_polytope(body: &Polytope, cfg: &SolverConfig) -> Result<(Ellipsoid, ContactCertificate)> {
    cfg.validate()?;
    let (c0, r0) = chebyshev_center(body)?;
    let n = body.dim();
    let facets: Vec<Halfspace> = unit_facets(body.halfspaces().expect("checked by chebyshev_center"))
        .into_iter()
        .map(|f| {
            let offset = (f.offset - f.normal.dot(&c0)) / r0;
            Halfspace::new(f.normal, offset)
        })
        .collect();
    let tl = tri_len(n);
    let dim = tl + n;
    let cones = facets
        .iter()
        .map(|f| {
            let a = &f.normal;
            let mut g = DMatrix::zeros(n, dim);
            for j in 0..n {
                for i in j..n {
                    g[(j, tri_index(i, j))] = a[i];
                }
            }
            let mut fv = DVector::zeros(dim);
            fv.rows_mut(tl, n).copy_from(&(-a));
            Cone { g, g0: DVector::zeros(n), f: fv, f0: f.offset }
        })
        .collect();
    let problem = Problem {
        dim,
        linear: DVector::zeros(dim),
        log_idx: (0..n).map(|i| tri_index(i, i)).collect(),
        cones,
    };
    let mut theta = DVector::zeros(dim);
    for i in 0..n {
        theta[tri_index(i, i)] = 0.5;
    }
    let theta = problem.solve(theta, cfg.eps, cfg.max_iter)?;
    let to_ellipsoid = |theta: &DVector<f64>| {
        let l = unpack_lower(theta, n) * r0;
        Ellipsoid::from_factor(&c0 + theta.rows(tl, n) * r0, &l)
    };
    let tol = (10.0 * cfg.eps).max(1e-12);
    let mut e = to_ellipsoid(&theta)?;
    let mut cert = certify_ie(body, &e, tol)?;
    if let Some(polished) = polish(&facets, &theta, n) {
        if let Ok(p) = to_ellipsoid(&polished) {
            let pc = certify_ie(body, &p, tol)?;
            if pc.residuals.feasibility <= tol && score(&pc) < score(&cert) {
                e = p;
                cert = pc;
            }
        }
    }
    Ok((e, cert.certificate))
}

fn score(r: &crate::certify::CertResult) -> f64 {
    r.residuals.max_equation().max(r.residuals.feasibility)
}

/// Facets with `h ≤ 1 + ACTIVE_GAP` enter the polishing system.
const ACTIVE_GAP: f64 = 1e-5;

/// Residual of the square system in `(θ, λ)`: tight active facets plus the
/// contact equations `Σλwwᵀ = I`, `Σλw = 0` in the unit-ball frame.
fn kkt_residual(facets: &[&Halfspace], z: &DVector<f64>, n: usize) -> DVector<f64> {
    let tl = tri_len(n);
    let theta = z.rows(0, tl + n).into_owned();
    let l = unpack_lower(&theta, n);
    let c = theta.rows(tl, n);
    let m = facets.len();
    let mut out = DVector::zeros(m + tl + n);
    let mut mat = -DMatrix::<f64>::identity(n, n);
    let mut cen = DVector::<f64>::zeros(n);
    for (k, f) in facets.iter().enumerate() {
        let v = l.transpose() * &f.normal;
        let s = v.norm();
        out[k] = s + f.normal.dot(&c) - f.offset;
        let w = v / s;
        let lam = z[tl + n + k];
        mat += &w * w.transpose() * lam;
        cen += w * lam;
    }
    let mut r = m;
    for i in 0..n {
        for j in i..n {
            out[r] = mat[(i, j)];
            r += 1;
        }
    }
    out.rows_mut(r, n).copy_from(&cen);
    out
}

/// Newton refinement of a barrier solution on the active facets, with a
/// central-difference Jacobian and SVD solves. `None` if the active set does
/// not yield nonnegative multipliers.
fn polish(facets: &[Halfspace], theta: &DVector<f64>, n: usize) -> Option<DVector<f64>> {
    let tl = tri_len(n);
    let l = unpack_lower(theta, n);
    let c = theta.rows(tl, n);
    let active: Vec<&Halfspace> = facets
        .iter()
        .filter(|f| (f.offset - f.normal.dot(&c)) / (l.transpose() * &f.normal).norm() <= 1.0 + ACTIVE_GAP)
        .collect();
    if active.is_empty() {
        return None;
    }
    let w: Vec<DVector<f64>> = active
        .iter()
        .map(|f| {
            let v = l.transpose() * &f.normal;
            let s = v.norm();
            v / s
        })
        .collect();
    let lambda = crate::certify::recover_multipliers(n, &w);
    let mut z = DVector::zeros(tl + n + active.len());
    z.rows_mut(0, tl + n).copy_from(theta);
    z.rows_mut(tl + n, active.len()).copy_from(&DVector::from_vec(lambda));
    let mut f = kkt_residual(&active, &z, n);
    for _ in 0..10 {
        let norm = f.norm();
        if norm < 1e-15 {
            break;
        }
        let dim = z.len();
        let mut jac = DMatrix::zeros(f.len(), dim);
        for k in 0..dim {
            let h = 1e-7 * (1.0 + z[k].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let d = (kkt_residual(&active, &zp, n) - kkt_residual(&active, &zm, n)) / (2.0 * h);
            jac.set_column(k, &d);
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let step = svd.solve(&(-&f), cutoff).ok()?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..6 {
            let trial = &z + &step * t;
            let ft = kkt_residual(&active, &trial, n);
            if ft.norm() < norm {
                z = trial;
                f = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let lam = z.rows(tl + n, active.len());
    if lam.iter().any(|&x| x < -1e-12) || (0..n).any(|i| z[tri_index(i, i)] <= 0.0) {
        return None;
    }
    Some(z.rows(0, tl + n).into_owned())
}
