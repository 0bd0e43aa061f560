use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Maximum absolute asymmetry accepted in a shape matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative Cholesky pivot tolerance used for SPD validation.
pub const PIVOT_TOL: f64 = 1e-12;
/// Default slack on the quadratic form for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Natural log of the volume of the unit ball in `Rⁿ`.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

pub fn unit_ball_volume(n: usize) -> f64 {
    ln_unit_ball_volume(n).exp()
}

/// The ellipsoid `{x : ⟨X(x−c), x−c⟩ ≤ 1}` with SPD shape `X` and center `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidRecord", into = "EllipsoidRecord")]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl Ellipsoid {
    /// Validates symmetry and positive definiteness of `shape`.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::InvalidEllipsoid(format!(
                "shape is {}x{}, center has length {n}",
                shape.nrows(),
                shape.ncols()
            )));
        }
        if center.iter().chain(shape.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidEllipsoid("non-finite entry".into()));
        }
        let asym = linalg::max_asymmetry(&shape);
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidEllipsoid(format!("shape asymmetry {asym:e}")));
        }
        Self::from_symmetric(center, linalg::symmetrize(&shape))
    }

    /// Like [`Ellipsoid::new`] but symmetrizes first; used for computed shapes
    /// that carry round-off asymmetry.
    pub fn from_computed(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        if shape.nrows() != center.len() || shape.ncols() != center.len() {
            return Err(Error::InvalidEllipsoid("shape/center size mismatch".into()));
        }
        Self::from_symmetric(center, linalg::symmetrize(&shape))
    }

    fn from_symmetric(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let chol = linalg::cholesky(&shape, PIVOT_TOL)
            .ok_or_else(|| Error::InvalidEllipsoid("shape is not positive definite".into()))?;
        let e = Self { center, shape, chol };
        let v = e.volume();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidEllipsoid(format!("volume {v} is not finite and positive")));
        }
        Ok(e)
    }

    /// Ellipsoid `c + A(Bₙ)` for an invertible factor `A`, i.e. `X = (AAᵀ)⁻¹`.
    pub fn from_factor(center: DVector<f64>, factor: &DMatrix<f64>) -> Result<Self> {
        let inv = factor.clone().try_inverse().ok_or(Error::SingularMap)?;
        Self::from_computed(center, inv.transpose() * inv)
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidEllipsoid(format!("radius {radius}")));
        }
        let n = center.len();
        Self::new(center, DMatrix::identity(n, n) / (radius * radius))
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::ball(DVector::zeros(n), 1.0).expect("unit ball is valid")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// Lower Cholesky factor `L` of the shape, `X = L Lᵀ`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn shape_inverse(&self) -> DMatrix<f64> {
        linalg::spd_inverse_from_cholesky(&self.chol)
    }

    /// Symmetric factor `A = X^{−1/2}`, so that `E = c + A(Bₙ)`.
    pub fn factor(&self) -> DMatrix<f64> {
        linalg::sym_inv_sqrt(&self.shape)
    }

    /// `⟨X(x−c), x−c⟩`.
    pub fn form(&self, x: &DVector<f64>) -> f64 {
        (self.chol.transpose() * (x - &self.center)).norm_squared()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.form(x) <= 1.0 + tol
    }

    pub fn ln_volume(&self) -> f64 {
        ln_unit_ball_volume(self.dim()) - self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn volume(&self) -> f64 {
        self.ln_volume().exp()
    }

    /// `s_E(d) = ⟨c,d⟩ + ⟨X⁻¹d,d⟩^{1/2}`.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), d.len())?;
        if d.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidDirection);
        }
        Ok(self.center.dot(d) + linalg::forward_solve(&self.chol, d).norm())
    }

    /// Boundary point maximizing `⟨d, x⟩`: `c + X⁻¹d / ⟨X⁻¹d,d⟩^{1/2}`.
    pub fn support_point(&self, d: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), d.len())?;
        let y = linalg::forward_solve(&self.chol, d);
        let norm = y.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDirection);
        }
        Ok(&self.center + linalg::backward_solve_transposed(&self.chol, &y) / norm)
    }

    /// Boundary point `c + L⁻ᵀw` for a unit vector `w`.
    pub fn boundary_point(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.center + linalg::backward_solve_transposed(&self.chol, w)
    }

    /// Homothetic copy about the center, semi-axes multiplied by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {t}")));
        }
        Self::from_computed(self.center.clone(), &self.shape / (t * t))
    }
}

#[derive(Serialize, Deserialize)]
struct EllipsoidRecord {
    dim: usize,
    center: Vec<f64>,
    shape: Vec<Vec<f64>>,
}

impl From<Ellipsoid> for EllipsoidRecord {
    fn from(e: Ellipsoid) -> Self {
        let n = e.dim();
        Self {
            dim: n,
            center: e.center.iter().copied().collect(),
            shape: (0..n).map(|i| e.shape.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<EllipsoidRecord> for Ellipsoid {
    type Error = Error;

    fn try_from(r: EllipsoidRecord) -> Result<Self> {
        check_dim(r.dim, r.center.len())?;
        check_dim(r.dim, r.shape.len())?;
        for row in &r.shape {
            check_dim(r.dim, row.len())?;
        }
        let shape = DMatrix::from_fn(r.dim, r.dim, |i, j| r.shape[i][j]);
        Ellipsoid::new(DVector::from_vec(r.center), shape)
    }
}

/// Invertible affine map `x ↦ offset + linear·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        let n = offset.len();
        if linear.nrows() != n || linear.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: linear.nrows() });
        }
        let det = linear.determinant();
        if !(det.is_finite() && det != 0.0) || linalg::rank(&linear, 1e-13) < n {
            return Err(Error::SingularMap);
        }
        Ok(Self { linear, offset })
    }

    pub fn identity(n: usize) -> Self {
        Self { linear: DMatrix::identity(n, n), offset: DVector::zeros(n) }
    }

    pub fn translation(t: DVector<f64>) -> Self {
        let n = t.len();
        Self { linear: DMatrix::identity(n, n), offset: t }
    }

    pub fn linear_only(linear: DMatrix<f64>) -> Result<Self> {
        let n = linear.nrows();
        Self::new(linear, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn det(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.linear * x
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &other.linear,
            offset: &self.offset + &self.linear * &other.offset,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.linear.clone().try_inverse().ok_or(Error::SingularMap)?;
        let offset = -(&inv * &self.offset);
        Ok(AffineMap { linear: inv, offset })
    }

    /// Largest entrywise deviation from another map.
    pub fn distance(&self, other: &AffineMap) -> f64 {
        let dl = (&self.linear - &other.linear).amax();
        let db = (&self.offset - &other.offset).amax();
        dl.max(db)
    }
}

/// Image of `E(X,c)` under `x ↦ a + Ax`: `E(A⁻ᵀXA⁻¹, a + Ac)`.
pub fn map_ellipsoid(t: &AffineMap, e: &Ellipsoid) -> Result<Ellipsoid> {
    check_dim(e.dim(), t.dim())?;
    let inv = t.linear.clone().try_inverse().ok_or(Error::SingularMap)?;
    let shape = inv.transpose() * e.shape() * &inv;
    Ellipsoid::from_computed(t.apply(e.center()), shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn volume_examples() {
        let c = DVector::zeros(2);
        assert_relative_eq!(Ellipsoid::unit_ball(2).volume(), PI, max_relative = 1e-14);
        let e = Ellipsoid::new(c.clone(), diag(&[0.5, 0.5])).unwrap();
        assert_relative_eq!(e.volume(), 2.0 * PI, max_relative = 1e-14);
        let e = Ellipsoid::new(c, diag(&[2.0, 2.0 / 3.0])).unwrap();
        assert_relative_eq!(e.volume(), PI * 3f64.sqrt() / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn unit_ball_volumes_match_recurrence() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        for n in 3..12 {
            let r = unit_ball_volume(n) / unit_ball_volume(n - 2);
            assert_relative_eq!(r, 2.0 * PI / n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let c = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(Ellipsoid::new(c.clone(), asym), Err(Error::InvalidEllipsoid(_))));
        assert!(Ellipsoid::new(c.clone(), diag(&[1.0, -1.0])).is_err());
        assert!(Ellipsoid::new(c, diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn support_examples() {
        let e = Ellipsoid::new(DVector::from_row_slice(&[1.0, 0.0]), diag(&[0.25, 1.0])).unwrap();
        assert_relative_eq!(e.support(&DVector::from_row_slice(&[1.0, 0.0])).unwrap(), 3.0);
        let b = Ellipsoid::unit_ball(3);
        let d = DVector::from_row_slice(&[0.6, 0.0, 0.8]);
        assert_relative_eq!(b.support(&d).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(b.support(&DVector::zeros(3)), Err(Error::InvalidDirection));
    }

    #[test]
    fn support_point_is_on_boundary() {
        let shape = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let e = Ellipsoid::new(DVector::from_row_slice(&[0.2, -1.0]), shape).unwrap();
        let d = DVector::from_row_slice(&[0.3, -0.7]);
        let p = e.support_point(&d).unwrap();
        assert_relative_eq!(e.form(&p), 1.0, max_relative = 1e-13);
        assert_relative_eq!(p.dot(&d), e.support(&d).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn contains_examples() {
        let b = Ellipsoid::unit_ball(2);
        assert!(b.contains(b.center(), 0.0));
        let x = DVector::from_row_slice(&[0.6, 0.8]);
        assert!(b.contains(&x, 0.0) || (b.form(&x) - 1.0).abs() < 1e-15);
        let tol = 1e-6;
        assert!(!b.contains(&(x * (1.0 + 2.0 * tol)), tol));
    }

    #[test]
    fn map_examples() {
        let e = Ellipsoid::unit_ball(3);
        let same = map_ellipsoid(&AffineMap::identity(3), &e).unwrap();
        assert_eq!(same.shape(), e.shape());
        let t = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let moved = map_ellipsoid(&AffineMap::translation(t.clone()), &e).unwrap();
        assert_eq!(moved.center(), &t);
        let scaled = AffineMap::linear_only(DMatrix::identity(3, 3) * 2.0).unwrap();
        let big = map_ellipsoid(&scaled, &e).unwrap();
        assert_relative_eq!(big.shape()[(0, 0)], 0.25);
        assert_relative_eq!(big.volume(), 8.0 * e.volume(), max_relative = 1e-13);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(AffineMap::linear_only(singular), Err(Error::SingularMap));
    }

    #[test]
    fn serde_round_trip() {
        let shape = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let e = Ellipsoid::new(DVector::from_row_slice(&[1.0, -2.0]), shape).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"dim":2,"center":[1.0,-2.0],"shape":[[2.0,0.5],[0.5,1.0]]}"#);
        let back: Ellipsoid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        let bad = r#"{"dim":2,"center":[0,0],"shape":[[1,2],[2,1]]}"#;
        assert!(serde_json::from_str::<Ellipsoid>(bad).is_err());
    }
}
