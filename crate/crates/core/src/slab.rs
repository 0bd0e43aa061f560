//! Closed-form extremal ellipsoids of ball slabs `B_αβ = {‖x‖ ≤ 1, α ≤ x₁ ≤ β}`
//! and truncated cones `Q_αβ = co(S_α ∪ S_β)`, where `S_y` is the disc cut from
//! the unit ball by the plane `x₁ = y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{map_ellipsoid, AffineMap, Ellipsoid, PIVOT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// `|α+β|` below this routes to the symmetric branch.
pub const SYMMETRIC_TOL: f64 = 1e-12;
/// `|αβ + 1/n|` below this counts as the boundary `αβ = −1/n`.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Relative size of `N₁ − √Δ` below which the conjugate form of `τ` is used.
pub const CANCELLATION_TOL: f64 = 1e-8;

/// `{x : ⟨X₀(x−c₀), x−c₀⟩ ≤ 1, lower ≤ ⟨p, x−c₀⟩ ≤ upper}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSlab {
    pub shape: DMatrix<f64>,
    pub center: DVector<f64>,
    pub normal: DVector<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl GeneralSlab {
    pub fn new(ambient: &Ellipsoid, normal: DVector<f64>, lower: f64, upper: f64) -> Result<Self> {
        check_dim(ambient.dim(), normal.len())?;
        if normal.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidDirection);
        }
        if !(lower < upper) {
            return Err(Error::InvalidParameter(format!("bounds {lower} < {upper} violated")));
        }
        Ok(Self {
            shape: ambient.shape().clone(),
            center: ambient.center().clone(),
            normal,
            lower,
            upper,
        })
    }

    pub fn ambient(&self) -> Result<Ellipsoid> {
        Ellipsoid::from_computed(self.center.clone(), self.shape.clone())
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        let e = self.ambient()?;
        let t = self.normal.dot(&(x - &self.center));
        Ok(e.contains(x, tol) && t >= self.lower - tol && t <= self.upper + tol)
    }
}

/// Normalized slab parameters with `−1 ≤ α < β ≤ 1` and `β² ≥ α²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Set when `x₁ ↦ −x₁` was applied to reach `β² ≥ α²`.
    pub reflected: bool,
}

impl SlabSpec {
    /// Validates the bounds and reflects if `β² < α²`.
    pub fn new(dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter("non-finite slab bound".into()));
        }
        if !(-1.0 <= alpha && alpha < beta && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need -1 <= alpha < beta <= 1, got alpha={alpha}, beta={beta}"
            )));
        }
        if beta * beta < alpha * alpha {
            Ok(Self { dim, alpha: -beta, beta: -alpha, reflected: true })
        } else {
            Ok(Self { dim, alpha, beta, reflected: false })
        }
    }

    fn n(&self) -> f64 {
        self.dim as f64
    }

    /// The reflection `x₁ ↦ −x₁`.
    pub fn reflection(dim: usize) -> AffineMap {
        let mut r = DMatrix::identity(dim, dim);
        r[(0, 0)] = -1.0;
        AffineMap::linear_only(r).expect("reflection is invertible")
    }
}

/// Which branch of the closed-form case split produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlabCase {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
    #[serde(rename = "iii")]
    III,
}

impl SlabCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlabCase::I => "i",
            SlabCase::II => "ii",
            SlabCase::III => "iii",
        }
    }
}

/// How `(a, b)` parameterize the axial ellipsoid centered at `τe₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamForm {
    /// `X = diag(a, b, …, b)`: inverse squared semi-axes.
    Shape,
    /// `E = τe₁ + diag(a, b, …, b)(Bₙ)`: semi-axes.
    Factor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialEllipsoidParams {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    pub form: ParamForm,
}

impl AxialEllipsoidParams {
    /// Semi-axis along `e₁` and the repeated transverse semi-axis.
    pub fn semi_axes(&self) -> (f64, f64) {
        match self.form {
            ParamForm::Shape => (1.0 / self.a.sqrt(), 1.0 / self.b.sqrt()),
            ParamForm::Factor => (self.a, self.b),
        }
    }

    /// Shape-form diagonal `(a, b)`.
    pub fn shape_diagonal(&self) -> (f64, f64) {
        match self.form {
            ParamForm::Shape => (self.a, self.b),
            ParamForm::Factor => (1.0 / (self.a * self.a), 1.0 / (self.b * self.b)),
        }
    }

    pub fn to_form(&self, form: ParamForm) -> Self {
        if form == self.form {
            return *self;
        }
        let (a, b) = match form {
            ParamForm::Shape => self.shape_diagonal(),
            ParamForm::Factor => self.semi_axes(),
        };
        Self { a, b, form, ..*self }
    }

    /// Expand to `E(diag(a,b,…,b), τe₁)` after converting to shape form.
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid> {
        let (a, b) = self.shape_diagonal();
        let n = self.dim;
        let mut c = DVector::zeros(n);
        c[0] = self.tau;
        let mut d = DVector::from_element(n, b);
        d[0] = a;
        Ellipsoid::from_computed(c, DMatrix::from_diagonal(&d))
    }

    /// `vol(E)/vol(Bₙ) = (a b^{n−1})^{−1/2}` in shape form.
    pub fn volume_ratio(&self) -> f64 {
        let (a, b) = self.shape_diagonal();
        (-0.5 * (a.ln() + (self.dim as f64 - 1.0) * b.ln())).exp()
    }

    /// Largest absolute difference in `(τ, a, b)` after bringing `other` to
    /// this form.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let o = other.to_form(self.form);
        (self.tau - o.tau).abs().max((self.a - o.a).abs()).max((self.b - o.b).abs())
    }
}

/// Map a general slab to `B_αβ`.
///
/// The returned map `M` satisfies `G = M(B_αβ)` when `reflected` is false and
/// `G = M(R(B_αβ))` with `R: x₁ ↦ −x₁` when it is true; [`denormalize`]
/// applies `R` before `M`.
pub fn normalize(g: &GeneralSlab) -> Result<(SlabSpec, AffineMap)> {
    let n = g.center.len();
    check_dim(n, g.normal.len())?;
    if linalg::cholesky(&g.shape, PIVOT_TOL).is_none() {
        return Err(Error::InvalidEllipsoid("ambient shape is not positive definite".into()));
    }
    let root_inv = linalg::sym_inv_sqrt(&g.shape);
    let q = &root_inv * &g.normal;
    let qn = q.norm();
    if qn == 0.0 {
        return Err(Error::InvalidDirection);
    }
    let alpha = (g.lower / qn).max(-1.0);
    let beta = (g.upper / qn).min(1.0);
    if alpha >= 1.0 || beta <= -1.0 || alpha >= beta {
        return Err(Error::EmptyBody);
    }
    let spec = SlabSpec::new(n, alpha, beta)?;
    let rot = linalg::householder_to(&(q / qn));
    let m = AffineMap::new(root_inv * rot, g.center.clone())?;
    Ok((spec, m))
}

/// Push an axial ellipsoid back to the original coordinates.
pub fn denormalize(p: &AxialEllipsoidParams, m: &AffineMap, reflected: bool) -> Result<Ellipsoid> {
    check_dim(p.dim, m.dim())?;
    let e = p.to_ellipsoid()?;
    let e = if reflected { map_ellipsoid(&SlabSpec::reflection(p.dim), &e)? } else { e };
    map_ellipsoid(m, &e)
}

fn ce_case(s: &SlabSpec) -> SlabCase {
    let n = s.n();
    if s.alpha * s.beta <= -1.0 / n + BOUNDARY_TOL {
        SlabCase::I
    } else if (s.alpha + s.beta).abs() <= SYMMETRIC_TOL {
        SlabCase::II
    } else {
        SlabCase::III
    }
}

fn symmetric_ce(s: &SlabSpec) -> Result<(f64, f64, f64)> {
    let n = s.n();
    let b2 = s.beta * s.beta;
    if b2 >= 1.0 {
        return Err(Error::DegenerateInput("symmetric cylinder with beta = 1".into()));
    }
    Ok((0.0, 1.0 / (n * b2), (n - 1.0) / (n * (1.0 - b2))))
}

/// Smaller root of the center equation, with the conjugate form used when the
/// direct numerator cancels.
fn asymmetric_tau(s: &SlabSpec) -> f64 {
    let (al, be, n) = (s.alpha, s.beta, s.n());
    let sum = al + be;
    let diff = be * be - al * al;
    let delta = n * n * diff * diff + 4.0 * (1.0 - al * al) * (1.0 - be * be);
    let root = delta.sqrt();
    let n1 = n * sum * sum + 2.0 * (1.0 + al * be);
    let numerator = n1 - root;
    if numerator.abs() < CANCELLATION_TOL * root {
        2.0 * sum * (1.0 + n * al * be) / (n1 + root)
    } else {
        numerator / (2.0 * (n + 1.0) * sum)
    }
}

fn asymmetric_ce(s: &SlabSpec) -> Result<(f64, f64, f64)> {
    let (al, be, n) = (s.alpha, s.beta, s.n());
    let tau = asymmetric_tau(s);
    if !(al < tau && tau < be) {
        return Err(Error::DegenerateInput(format!("center {tau} outside ({al}, {be})")));
    }
    let a = 1.0 / (n * (tau - al) * (be - tau));
    let b = (1.0 - a * (tau - al).powi(2)) / (1.0 - al * al);
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::DegenerateInput(format!("non-positive axes a={a}, b={b}")));
    }
    Ok((tau, a, b))
}

fn shape_params(s: &SlabSpec, (tau, a, b): (f64, f64, f64)) -> AxialEllipsoidParams {
    AxialEllipsoidParams { tau, a, b, dim: s.dim, form: ParamForm::Shape }
}

/// Minimum-volume ellipsoid containing `B_αβ`, in shape form, with the branch
/// that fired.
pub fn ce_slab_with_case(s: &SlabSpec) -> Result<(AxialEllipsoidParams, SlabCase)> {
    let case = ce_case(s);
    let triple = match case {
        SlabCase::I => (0.0, 1.0, 1.0),
        SlabCase::II => symmetric_ce(s)?,
        SlabCase::III => asymmetric_ce(s)?,
    };
    Ok((shape_params(s, triple), case))
}

pub fn ce_slab(s: &SlabSpec) -> Result<AxialEllipsoidParams> {
    ce_slab_with_case(s).map(|r| r.0)
}

/// The other root of the center equation, which lies at or beyond `β`.
pub fn ce_slab_rejected_root(s: &SlabSpec) -> Option<f64> {
    let (al, be, n) = (s.alpha, s.beta, s.n());
    let sum = al + be;
    if sum.abs() <= SYMMETRIC_TOL {
        return None;
    }
    let diff = be * be - al * al;
    let delta = n * n * diff * diff + 4.0 * (1.0 - al * al) * (1.0 - be * be);
    let n1 = n * sum * sum + 2.0 * (1.0 + al * be);
    Some((n1 + delta.sqrt()) / (2.0 * (n + 1.0) * sum))
}

/// Which form of the case-(ii) test in the inscribed problem to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IeThreshold {
    /// `4n(1−α²) < (n+1)²(β²−α²)`.
    Squared,
    /// `4n(1−α²) < (n+1)(β²−α²)`.
    Linear,
}

fn ie_case(s: &SlabSpec, threshold: IeThreshold) -> SlabCase {
    let (al, be, n) = (s.alpha, s.beta, s.n());
    if (al + be).abs() <= SYMMETRIC_TOL {
        return SlabCase::I;
    }
    let factor = match threshold {
        IeThreshold::Squared => (n + 1.0) * (n + 1.0),
        IeThreshold::Linear => n + 1.0,
    };
    if 4.0 * n * (1.0 - al * al) < factor * (be * be - al * al) {
        SlabCase::II
    } else {
        SlabCase::III
    }
}

/// Maximum-volume ellipsoid inside `B_αβ`, in factor form, using the given
/// case-(ii) threshold.
pub fn ie_slab_with_threshold(
    s: &SlabSpec,
    threshold: IeThreshold,
) -> (AxialEllipsoidParams, SlabCase) {
    let (al, be, n) = (s.alpha, s.beta, s.n());
    let case = ie_case(s, threshold);
    let (tau, a, b) = match case {
        SlabCase::I => (0.0, be, 1.0),
        SlabCase::II => {
            let tau = 0.5 * (al + (al * al + 4.0 * n * (1.0 - al * al) / ((n + 1.0) * (n + 1.0))).sqrt());
            let a = tau - al;
            (tau, a, (a * (a + n * tau)).sqrt())
        }
        SlabCase::III => {
            let a = 0.5 * (be - al);
            let h = 0.5 * ((1.0 - al * al).sqrt() + (1.0 - be * be).sqrt());
            (0.5 * (al + be), a, (a * a + h * h).sqrt())
        }
    };
    (AxialEllipsoidParams { tau, a, b, dim: s.dim, form: ParamForm::Factor }, case)
}

pub fn ie_slab_with_case(s: &SlabSpec) -> (AxialEllipsoidParams, SlabCase) {
    ie_slab_with_threshold(s, IeThreshold::Squared)
}

pub fn ie_slab(s: &SlabSpec) -> AxialEllipsoidParams {
    ie_slab_with_case(s).0
}

/// Minimum-volume ellipsoid containing the truncated cone `Q_αβ`, in shape
/// form.
///
/// Only exact equality `αβ = −1/n` (within [`BOUNDARY_TOL`]) yields the unit
/// ball. For `αβ < −1/n` with `α + β ≠ 0` the asymmetric formula is applied
/// and its Fritz John certificate is checked before returning.
pub fn ce_cone_with_case(s: &SlabSpec) -> Result<(AxialEllipsoidParams, SlabCase)> {
    let n = s.n();
    let prod = s.alpha * s.beta;
    if s.alpha <= -1.0 && s.beta >= 1.0 {
        return Err(Error::DegenerateInput("cone over two points is a segment".into()));
    }
    if (prod + 1.0 / n).abs() <= BOUNDARY_TOL {
        return Ok((shape_params(s, (0.0, 1.0, 1.0)), SlabCase::I));
    }
    if (s.alpha + s.beta).abs() <= SYMMETRIC_TOL {
        return Ok((shape_params(s, symmetric_ce(s)?), SlabCase::II));
    }
    let params = shape_params(s, asymmetric_ce(s)?);
    if prod < -1.0 / n {
        let cert = crate::certify::certify_cone_ce(s, &params, crate::certify::DEFAULT_TOL)?;
        if !cert.passed {
            return Err(Error::NotOptimal(format!(
                "cone formula failed certification: {:?}",
                cert.residuals
            )));
        }
    }
    Ok((params, SlabCase::III))
}

pub fn ce_cone(s: &SlabSpec) -> Result<AxialEllipsoidParams> {
    ce_cone_with_case(s).map(|r| r.0)
}

/// Points of `∂B_αβ` in the normalized frame.
///
/// Each level `y` contributes the `2(n−1)` points `y e₁ ± r eⱼ` with
/// `r = √(1−y²)`; levels are the two rims, `levels` interior heights, and the
/// facet discs sampled at `levels` radii.
pub fn slab_boundary_samples(s: &SlabSpec, levels: usize) -> Vec<DVector<f64>> {
    let n = s.dim;
    let mut out = Vec::new();
    let mut ring = |y: f64, r: f64| {
        for j in 1..n {
            for sign in [1.0, -1.0] {
                let mut x = DVector::zeros(n);
                x[0] = y;
                x[j] = sign * r;
                out.push(x);
            }
        }
    };
    for k in 0..=levels + 1 {
        let y = s.alpha + (s.beta - s.alpha) * k as f64 / (levels + 1) as f64;
        ring(y, (1.0 - y * y).max(0.0).sqrt());
    }
    for &y in &[s.alpha, s.beta] {
        let rim = (1.0 - y * y).max(0.0).sqrt();
        for k in 0..levels {
            ring(y, rim * k as f64 / levels as f64);
        }
    }
    out
}

/// Points of the two rim spheres of `Q_αβ` in the normalized frame.
pub fn cone_rim_samples(s: &SlabSpec) -> Vec<DVector<f64>> {
    let n = s.dim;
    let mut out = Vec::new();
    for &y in &[s.alpha, s.beta] {
        let r = (1.0 - y * y).max(0.0).sqrt();
        for j in 1..n {
            for sign in [1.0, -1.0] {
                let mut x = DVector::zeros(n);
                x[0] = y;
                x[j] = sign * r;
                out.push(x);
            }
        }
    }
    out
}
