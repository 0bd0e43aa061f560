//! Fritz John optimality certificates.
//!
//! All residuals are measured in the frame `w = Lᵀ(x − c)` where `X = LLᵀ`,
//! in which the candidate ellipsoid is the unit ball and the conditions read
//! `Σλwwᵀ = I`, `Σλw = 0`, `Σλ = n`. This makes every residual independent of
//! the scale and position of the input.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::nnls::nnls;
use crate::polytope::{Halfspace, Polytope};
use crate::slab::{AxialEllipsoidParams, ParamForm, SlabSpec};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Multipliers below this are treated as zero.
pub const PRUNE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertKind {
    Ce,
    Ie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactCertificate {
    pub kind: CertKind,
    pub contacts: Vec<DVector<f64>>,
    pub multipliers: Vec<f64>,
}

impl ContactCertificate {
    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn multiplier_sum(&self) -> f64 {
        self.multipliers.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `‖Σλwwᵀ − I‖_F / √n`.
    pub matrix_eq: f64,
    /// `‖Σλw‖ / n`.
    pub centroid_eq: f64,
    /// `|Σλ − n| / n`.
    pub multiplier_sum: f64,
    /// Largest deviation of a used contact from the common boundary.
    pub contact_membership: f64,
    /// Largest normalized violation of the containment condition.
    pub feasibility: f64,
}

impl Residuals {
    /// Equation residuals against `tol`, contact deviation against `√tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.matrix_eq <= tol
            && self.centroid_eq <= tol
            && self.multiplier_sum <= tol
            && self.feasibility <= tol
            && self.contact_membership <= tol.sqrt()
    }

    pub fn max_equation(&self) -> f64 {
        self.matrix_eq.max(self.centroid_eq).max(self.multiplier_sum)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertResult {
    pub passed: bool,
    pub residuals: Residuals,
    pub certificate: ContactCertificate,
}

impl CertResult {
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::NotOptimal(format!("{:?}", self.residuals)))
        }
    }
}

impl Serialize for CertResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let contacts: Vec<Vec<f64>> =
            self.certificate.contacts.iter().map(|c| c.iter().copied().collect()).collect();
        let mut st = s.serialize_struct("CertResult", 4)?;
        st.serialize_field("passed", &self.passed)?;
        st.serialize_field("residuals", &self.residuals)?;
        st.serialize_field("contacts", &contacts)?;
        st.serialize_field("multipliers", &self.certificate.multipliers)?;
        st.end()
    }
}

fn normalized(e: &Ellipsoid, u: &DVector<f64>) -> DVector<f64> {
    e.cholesky().transpose() * (u - e.center())
}

/// Equation residuals of `(w, λ)` in the normalized frame.
fn equation_residuals(n: usize, w: &[DVector<f64>], lambda: &[f64]) -> (f64, f64, f64) {
    let mut m = -DMatrix::<f64>::identity(n, n);
    let mut centroid = DVector::<f64>::zeros(n);
    let mut sum = 0.0;
    for (wi, &li) in w.iter().zip(lambda) {
        m += wi * wi.transpose() * li;
        centroid += wi * li;
        sum += li;
    }
    let nf = n as f64;
    (m.norm() / nf.sqrt(), centroid.norm() / nf, (sum - nf).abs() / nf)
}

/// Nonnegative multipliers for normalized contacts, via NNLS on the stacked
/// matrix, centroid and trace equations.
pub fn recover_multipliers(n: usize, w: &[DVector<f64>]) -> Vec<f64> {
    if w.is_empty() {
        return Vec::new();
    }
    let tri = n * (n + 1) / 2;
    let rows = tri + n + 1;
    let mut a = DMatrix::<f64>::zeros(rows, w.len());
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for i in 0..n {
        for j in i..n {
            let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            for (k, wk) in w.iter().enumerate() {
                a[(r, k)] = scale * wk[i] * wk[j];
            }
            if i == j {
                rhs[r] = 1.0;
            }
            r += 1;
        }
    }
    for i in 0..n {
        for (k, wk) in w.iter().enumerate() {
            a[(r, k)] = wk[i];
        }
        r += 1;
    }
    for k in 0..w.len() {
        a[(r, k)] = 1.0;
    }
    rhs[r] = n as f64;
    nnls(&a, &rhs).x.iter().map(|&l| if l < PRUNE_TOL { 0.0 } else { l }).collect()
}

/// Assemble a result from normalized contacts and multipliers, dropping
/// contacts whose multiplier vanished.
fn assemble(
    e: &Ellipsoid,
    kind: CertKind,
    contacts: Vec<DVector<f64>>,
    w: Vec<DVector<f64>>,
    lambda: Vec<f64>,
    deviations: Vec<f64>,
    feasibility: f64,
    tol: f64,
) -> CertResult {
    let n = e.dim();
    let (matrix_eq, centroid_eq, multiplier_sum) = equation_residuals(n, &w, &lambda);
    let mut kept_contacts = Vec::new();
    let mut kept_lambda = Vec::new();
    let mut contact_membership = 0.0f64;
    for ((u, l), dev) in contacts.into_iter().zip(lambda).zip(deviations) {
        if l > 0.0 {
            contact_membership = contact_membership.max(dev);
            kept_contacts.push(u);
            kept_lambda.push(l);
        }
    }
    let residuals = Residuals {
        matrix_eq,
        centroid_eq,
        multiplier_sum,
        contact_membership,
        feasibility: feasibility.max(0.0),
    };
    let k_bound = n * (n + 3) / 2;
    let passed = residuals.within(tol) && !kept_lambda.is_empty() && kept_lambda.len() <= k_bound;
    CertResult {
        passed,
        residuals,
        certificate: ContactCertificate { kind, contacts: kept_contacts, multipliers: kept_lambda },
    }
}

/// Certify `E = ce(co(points))`.
pub fn certify_ce_points(points: &[DVector<f64>], e: &Ellipsoid, tol: f64) -> Result<CertResult> {
    if points.is_empty() {
        return Err(Error::EmptyBody);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut contacts = Vec::new();
    let mut w = Vec::new();
    let mut dev = Vec::new();
    let threshold = 1.0 - tol.sqrt();
    for p in points {
        check_dim(e.dim(), p.len())?;
        let wi = normalized(e, p);
        let f = wi.norm_squared();
        worst = worst.max(f - 1.0);
        if f >= threshold {
            contacts.push(p.clone());
            w.push(wi);
            dev.push((f - 1.0).abs());
        }
    }
    let lambda = recover_multipliers(e.dim(), &w);
    Ok(assemble(e, CertKind::Ce, contacts, w, lambda, dev, worst, tol))
}

/// Certify `E = ce(P)` for a vertex polytope.
pub fn certify_ce(body: &Polytope, e: &Ellipsoid, tol: f64) -> Result<CertResult> {
    let pts = body
        .vertices()
        .ok_or_else(|| Error::InvalidBody("circumscribed certificate needs vertices".into()))?;
    certify_ce_points(pts, e, tol)
}

/// Normalized facet data: unit normal `ν/‖ν‖` in the `w` frame and the
/// distance `h` from the center to the facet in that frame.
fn normalized_facet(e: &Ellipsoid, f: &Halfspace) -> (DVector<f64>, f64) {
    let nu = linalg::forward_solve(e.cholesky(), &f.normal);
    let norm = nu.norm();
    (nu / norm, (f.offset - f.normal.dot(e.center())) / norm)
}

/// Certify `E = ie(P)` for an inequality polytope.
pub fn certify_ie(body: &Polytope, e: &Ellipsoid, tol: f64) -> Result<CertResult> {
    let facets = body
        .halfspaces()
        .ok_or_else(|| Error::InvalidBody("inscribed certificate needs inequalities".into()))?;
    check_dim(e.dim(), body.dim())?;
    if !body.is_bounded() {
        return Err(Error::InvalidBody("inequality system is unbounded".into()));
    }
    let mut min_h = f64::INFINITY;
    let mut contacts = Vec::new();
    let mut w = Vec::new();
    let mut dev = Vec::new();
    let threshold = 1.0 + tol.sqrt();
    for f in facets {
        let (wi, h) = normalized_facet(e, f);
        min_h = min_h.min(h);
        if h <= threshold {
            contacts.push(e.boundary_point(&wi));
            w.push(wi);
            dev.push((h - 1.0).abs());
        }
    }
    let lambda = recover_multipliers(e.dim(), &w);
    Ok(assemble(e, CertKind::Ie, contacts, w, lambda, dev, 1.0 - min_h, tol))
}

/// Check user-supplied contacts and multipliers against `E`, without any
/// body: feasibility is reported as zero.
pub fn verify_certificate(e: &Ellipsoid, cert: &ContactCertificate, tol: f64) -> Result<CertResult> {
    if cert.contacts.len() != cert.multipliers.len() {
        return Err(Error::InvalidParameter("contacts and multipliers differ in length".into()));
    }
    if let Some(&l) = cert.multipliers.iter().find(|&&l| l < -tol) {
        return Err(Error::InvalidParameter(format!("negative multiplier {l}")));
    }
    let mut w = Vec::with_capacity(cert.len());
    let mut dev = Vec::with_capacity(cert.len());
    for u in &cert.contacts {
        check_dim(e.dim(), u.len())?;
        let wi = normalized(e, u);
        dev.push((wi.norm_squared() - 1.0).abs());
        w.push(wi);
    }
    let lambda: Vec<f64> = cert.multipliers.iter().map(|&l| l.max(0.0)).collect();
    Ok(assemble(e, cert.kind, cert.contacts.clone(), w, lambda, dev, 0.0, tol))
}

/// Points `y e₁ ± r eⱼ`, `j = 2..n`, each carrying `weight / (2(n−1))`.
fn ring(n: usize, y: f64, r: f64, weight: f64, out: &mut Vec<(DVector<f64>, f64)>) {
    let share = weight / (2.0 * (n as f64 - 1.0));
    for j in 1..n {
        for sign in [1.0, -1.0] {
            let mut x = DVector::zeros(n);
            x[0] = y;
            x[j] = sign * r;
            out.push((x, share));
        }
    }
}

/// Contacts on the two rims with the multipliers of the two-level solution.
fn rim_contacts(s: &SlabSpec, tau: f64) -> Vec<(DVector<f64>, f64)> {
    let (al, be, n) = (s.alpha, s.beta, s.dim as f64);
    let mut out = Vec::new();
    let lb = n * (tau - al) / (be - al);
    let la = n * (be - tau) / (be - al);
    ring(s.dim, al, (1.0 - al * al).max(0.0).sqrt(), la, &mut out);
    ring(s.dim, be, (1.0 - be * be).max(0.0).sqrt(), lb, &mut out);
    out
}

/// Max of `a(y−τ)² + b(1−y²)` over `y ∈ [lo, hi]`.
fn axial_form_max(a: f64, b: f64, tau: f64, lo: f64, hi: f64) -> f64 {
    let f = |y: f64| a * (y - tau).powi(2) + b * (1.0 - y * y);
    let mut m = f(lo).max(f(hi));
    if a < b {
        let y = a * tau / (a - b);
        if y > lo && y < hi {
            m = m.max(f(y));
        }
    }
    m
}

fn certify_weighted(
    e: &Ellipsoid,
    kind: CertKind,
    weighted: Vec<(DVector<f64>, f64)>,
    deviation: impl Fn(&DVector<f64>) -> f64,
    feasibility: f64,
    tol: f64,
) -> CertResult {
    let mut contacts = Vec::new();
    let mut w = Vec::new();
    let mut lambda = Vec::new();
    let mut dev = Vec::new();
    let mut negative = 0.0f64;
    for (u, l) in weighted {
        negative = negative.max(-l);
        w.push(normalized(e, &u));
        dev.push(deviation(&u));
        contacts.push(u);
        lambda.push(if l < PRUNE_TOL { 0.0 } else { l });
    }
    let k_bound = e.dim() * (e.dim() + 3) / 2;
    let mut r = assemble(e, kind, contacts.clone(), w.clone(), lambda, dev.clone(), feasibility, tol);
    if r.certificate.len() > k_bound && r.residuals.within(tol) {
        // Symmetric spreading can exceed the contact bound; a basic NNLS
        // solution on the same contacts restores it.
        let reduced = recover_multipliers(e.dim(), &w);
        r = assemble(e, kind, contacts, w, reduced, dev, feasibility, tol);
    }
    if negative > tol {
        r.passed = false;
        r.residuals.feasibility = r.residuals.feasibility.max(negative);
    }
    r
}

/// Certificate for the circumscribed ellipsoid of `B_αβ` with contacts on
/// the rims, or on the levels `α, 0, β` when the result is the unit ball.
pub fn certify_slab_ce(s: &SlabSpec, p: &AxialEllipsoidParams, tol: f64) -> Result<CertResult> {
    let p = p.to_form(ParamForm::Shape);
    let e = p.to_ellipsoid()?;
    let (al, be, n) = (s.alpha, s.beta, s.dim as f64);
    let is_ball = p.tau == 0.0 && p.a == 1.0 && p.b == 1.0;
    let weighted = if is_ball && al * be < 0.0 {
        let mut out = Vec::new();
        let wb = 1.0 / (be * (be - al));
        let wa = -1.0 / (al * (be - al));
        ring(s.dim, al, (1.0 - al * al).max(0.0).sqrt(), wa, &mut out);
        ring(s.dim, 0.0, 1.0, n + 1.0 / (al * be), &mut out);
        ring(s.dim, be, (1.0 - be * be).max(0.0).sqrt(), wb, &mut out);
        out
    } else {
        rim_contacts(s, p.tau)
    };
    let feas = axial_form_max(p.a, p.b, p.tau, al, be) - 1.0;
    Ok(certify_weighted(&e, CertKind::Ce, weighted, |u| (e.form(u) - 1.0).abs(), feas, tol))
}

/// Certificate for the circumscribed ellipsoid of `Q_αβ`; feasibility is
/// checked on the rims only.
pub fn certify_cone_ce(s: &SlabSpec, p: &AxialEllipsoidParams, tol: f64) -> Result<CertResult> {
    let p = p.to_form(ParamForm::Shape);
    let e = p.to_ellipsoid()?;
    let f = |y: f64| p.a * (y - p.tau).powi(2) + p.b * (1.0 - y * y);
    let feas = f(s.alpha).max(f(s.beta)) - 1.0;
    let weighted = rim_contacts(s, p.tau);
    Ok(certify_weighted(&e, CertKind::Ce, weighted, |u| (e.form(u) - 1.0).abs(), feas, tol))
}

/// Ring parameter `u* = aτ/(b²−a²)` where the inscribed ellipsoid touches the
/// sphere, in the frame where the ellipsoid is the unit ball.
pub fn ie_ring_parameter(p: &AxialEllipsoidParams) -> Option<f64> {
    let p = p.to_form(ParamForm::Factor);
    let gap = p.b * p.b - p.a * p.a;
    if gap <= 1e-14 {
        return None;
    }
    Some(p.a * p.tau / gap)
}

/// Certificate for the inscribed ellipsoid of `B_αβ`: facet tangency points
/// `τ ∓ a` on the axis and a ring on the sphere, with multipliers
/// `μ = (n−1)/(1−u²)` on the ring and `(1 − μu² ± μu)/2` on the facets.
pub fn certify_slab_ie(s: &SlabSpec, p: &AxialEllipsoidParams, tol: f64) -> Result<CertResult> {
    let p = p.to_form(ParamForm::Factor);
    let e = p.to_ellipsoid()?;
    let n = s.dim;
    let nf = n as f64;
    let q = |u: f64| (p.a * u + p.tau).powi(2) + p.b * p.b * (1.0 - u * u);
    let (lo, hi) = (p.tau - p.a, p.tau + p.a);
    let mut sphere = q(-1.0).max(q(1.0));
    let ring_u = ie_ring_parameter(&p);
    if let Some(u) = ring_u {
        if u.abs() < 1.0 {
            sphere = sphere.max(q(u));
        }
    }
    let feas = (sphere - 1.0).max(s.alpha - lo).max(hi - s.beta);

    let mut weighted = Vec::new();
    match ring_u {
        Some(u) if u.abs() < 1.0 => {
            let mu = (nf - 1.0) / (1.0 - u * u);
            let mut axis = |x1: f64, l: f64| {
                let mut x = DVector::zeros(n);
                x[0] = x1;
                weighted.push((x, l));
            };
            axis(lo, 0.5 * (1.0 - mu * u * u + mu * u));
            axis(hi, 0.5 * (1.0 - mu * u * u - mu * u));
            let r = p.b * (1.0 - u * u).sqrt();
            ring(n, p.tau + p.a * u, r, mu, &mut weighted);
        }
        _ => {
            // Unit ball inside the full ball: any orthonormal frame of contacts.
            for k in 0..n {
                for sign in [1.0, -1.0] {
                    let mut x = DVector::zeros(n);
                    x[k] = sign;
                    weighted.push((x, 0.5));
                }
            }
        }
    }
    let dev = |u: &DVector<f64>| {
        let on_sphere = (u.norm_squared() - 1.0).abs();
        let on_facet = (u[0] - s.alpha).abs().min((u[0] - s.beta).abs());
        on_sphere.min(on_facet)
    };
    Ok(certify_weighted(&e, CertKind::Ie, weighted, dev, feas, tol))
}

/// Outcome of a scaled-containment check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnReport {
    pub passed: bool,
    pub factor: f64,
    /// Largest normalized violation; nonpositive when contained.
    pub worst_violation: f64,
    #[serde(skip)]
    pub worst_point: Option<DVector<f64>>,
}

/// Scaled-containment check: a circumscribed ellipsoid shrunk by `n` (or `√n`
/// for centrally symmetric bodies) lies inside the body; an inscribed one
/// blown up by the same factor contains it.
pub fn john_factors(
    body: &Polytope,
    e: &Ellipsoid,
    kind: CertKind,
    symmetric: bool,
    tol: f64,
) -> Result<JohnReport> {
    check_dim(e.dim(), body.dim())?;
    let n = e.dim() as f64;
    let factor = if symmetric { n.sqrt() } else { n };
    match kind {
        CertKind::Ce => {
            let inner = e.scaled(1.0 / factor)?;
            let facets = body.to_halfspaces()?;
            let mut worst = f64::NEG_INFINITY;
            let mut worst_point = None;
            for f in &facets {
                let norm = f.normal.norm();
                let v = (inner.support(&f.normal)? - f.offset) / norm;
                if v > worst {
                    worst = v;
                    worst_point = Some(inner.support_point(&f.normal)?);
                }
            }
            Ok(JohnReport { passed: worst <= tol, factor, worst_violation: worst, worst_point })
        }
        CertKind::Ie => {
            let outer = e.scaled(factor)?;
            let verts = body.to_vertices()?;
            let mut worst = f64::NEG_INFINITY;
            let mut worst_point = None;
            for v in verts {
                let f = outer.form(&v) - 1.0;
                if f > worst {
                    worst = f;
                    worst_point = Some(v);
                }
            }
            Ok(JohnReport { passed: worst <= tol, factor, worst_violation: worst, worst_point })
        }
    }
}

/// Breadth of a point set over a deterministic set of unit directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreadthReport {
    pub breadth: f64,
    pub bound: f64,
    pub passed: bool,
}

pub fn min_width(points: &[DVector<f64>], directions: &[DVector<f64>]) -> f64 {
    directions
        .iter()
        .map(|d| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let t = p.dot(d);
                (lo.min(t), hi.max(t))
            });
            hi - lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum width of a vertex polytope already in John position
/// (`ce(body) = Bₙ`) over 500 directions, compared with `2/√n`.
pub fn breadth_diameter(body: &Polytope, tol: f64) -> Result<BreadthReport> {
    let pts = body
        .vertices()
        .ok_or_else(|| Error::InvalidBody("breadth needs vertices".into()))?;
    let n = body.dim();
    let dirs = linalg::sphere_directions(n, 500);
    let breadth = min_width(pts, &dirs);
    let bound = 2.0 / (n as f64).sqrt();
    Ok(BreadthReport { breadth, bound, passed: breadth >= bound - tol })
}

/// `(c, d, γ)` with `q(u) ≡ (cu + d)² + γ(u − a)(b − u)` and `γ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LukacsCertificate {
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
}

impl LukacsCertificate {
    /// Coefficients `(q₂, q₁, q₀)` of the represented quadratic.
    pub fn coefficients(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let g = self.gamma;
        (self.c * self.c - g, 2.0 * self.c * self.d + g * (a + b), self.d * self.d - g * a * b)
    }
}

/// Representation of a quadratic `q₂u² + q₁u + q₀` that is nonnegative on
/// `[a, b]`, built from the line through `(a, −√q(a))` and `(b, √q(b))`.
pub fn lukacs_certificate(q: (f64, f64, f64), a: f64, b: f64) -> Result<LukacsCertificate> {
    let (q2, q1, q0) = q;
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("interval [{a}, {b}]")));
    }
    let f = |u: f64| (q2 * u + q1) * u + q0;
    let mut min = f(a).min(f(b));
    if q2 > 0.0 {
        let v = -q1 / (2.0 * q2);
        if v > a && v < b {
            min = min.min(f(v));
        }
    }
    let scale = q2.abs().max(q1.abs()).max(q0.abs()).max(1.0);
    if min < -1e-12 * scale {
        return Err(Error::NotNonnegative(min));
    }
    let (ra, rb) = (f(a).max(0.0).sqrt(), f(b).max(0.0).sqrt());
    let c = (ra + rb) / (b - a);
    let d = -(ra * b + rb * a) / (b - a);
    let gamma = c * c - q2;
    if gamma < -1e-12 * scale {
        return Err(Error::NotNonnegative(gamma));
    }
    Ok(LukacsCertificate { c, d, gamma: gamma.max(0.0) })
}

/// Lukács certificate for `1 − (au+τ)² − b²(1−u²) ≥ 0` on `[−1, 1]`, the
/// sphere constraint of an axial ellipsoid inside the unit ball.
pub fn ie_slab_lukacs(p: &AxialEllipsoidParams) -> Result<LukacsCertificate> {
    let p = p.to_form(ParamForm::Factor);
    let (a, b, t) = (p.a, p.b, p.tau);
    lukacs_certificate((b * b - a * a, -2.0 * a * t, 1.0 - t * t - b * b), -1.0, 1.0)
}
