use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::nnls::nnls;

/// The closed halfspace `⟨normal, x⟩ ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "HalfspaceRecord", into = "HalfspaceRecord")]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: DVector<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// Signed violation `⟨normal, x⟩ − offset`.
    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Serialize, Deserialize)]
struct HalfspaceRecord {
    normal: Vec<f64>,
    offset: f64,
}

impl From<HalfspaceRecord> for Halfspace {
    fn from(r: HalfspaceRecord) -> Self {
        Self::new(DVector::from_vec(r.normal), r.offset)
    }
}

impl From<Halfspace> for HalfspaceRecord {
    fn from(h: Halfspace) -> Self {
        Self { normal: h.normal.iter().copied().collect(), offset: h.offset }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Vertices(Vec<DVector<f64>>),
    Halfspaces(Vec<Halfspace>),
}

/// A convex polytope given by its vertices (convex hull) or by an inequality
/// system.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    rep: Representation,
}

impl Polytope {
    pub fn from_vertices(points: Vec<DVector<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyBody)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidBody("non-finite coordinate".into()));
            }
        }
        Ok(Self { dim, rep: Representation::Vertices(points) })
    }

    pub fn from_halfspaces(facets: Vec<Halfspace>) -> Result<Self> {
        let first = facets.first().ok_or(Error::EmptyBody)?;
        let dim = first.normal.len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for h in &facets {
            check_dim(dim, h.normal.len())?;
            if h.normal.iter().any(|v| !v.is_finite()) || !h.offset.is_finite() {
                return Err(Error::InvalidBody("non-finite coefficient".into()));
            }
            if h.normal.norm() == 0.0 {
                return Err(Error::InvalidBody("zero normal".into()));
            }
        }
        Ok(Self { dim, rep: Representation::Halfspaces(facets) })
    }

    /// Axis-aligned box `[−r, r]ⁿ` as an inequality system.
    pub fn cube(n: usize, r: f64) -> Self {
        let mut facets = Vec::with_capacity(2 * n);
        for k in 0..n {
            for s in [1.0, -1.0] {
                let mut a = DVector::zeros(n);
                a[k] = s;
                facets.push(Halfspace::new(a, r));
            }
        }
        Self { dim: n, rep: Representation::Halfspaces(facets) }
    }

    /// The `2ⁿ` vertices of `[−r, r]ⁿ`.
    pub fn cube_vertices(n: usize, r: f64) -> Self {
        let points = (0..1usize << n)
            .map(|mask| DVector::from_fn(n, |k, _| if mask >> k & 1 == 1 { -r } else { r }))
            .collect();
        Self { dim: n, rep: Representation::Vertices(points) }
    }

    /// Vertices `±r·eₖ` of the cross-polytope.
    pub fn cross_polytope_vertices(n: usize, r: f64) -> Self {
        let mut points = Vec::with_capacity(2 * n);
        for k in 0..n {
            for s in [r, -r] {
                let mut e = DVector::zeros(n);
                e[k] = s;
                points.push(e);
            }
        }
        Self { dim: n, rep: Representation::Vertices(points) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn vertices(&self) -> Option<&[DVector<f64>]> {
        match &self.rep {
            Representation::Vertices(v) => Some(v),
            Representation::Halfspaces(_) => None,
        }
    }

    pub fn halfspaces(&self) -> Option<&[Halfspace]> {
        match &self.rep {
            Representation::Halfspaces(h) => Some(h),
            Representation::Vertices(_) => None,
        }
    }

    /// Polar `{x : ⟨uᵢ, x⟩ ≤ 1}` of a vertex polytope.
    pub fn polar(&self) -> Result<Polytope> {
        let pts = self
            .vertices()
            .ok_or_else(|| Error::InvalidBody("polar expects a vertex representation".into()))?;
        let facets = pts.iter().map(|u| Halfspace::new(u.clone(), 1.0)).collect();
        Polytope::from_halfspaces(facets)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        match &self.rep {
            Representation::Halfspaces(h) => Ok(h.iter().all(|f| f.slack(x) <= tol)),
            Representation::Vertices(_) => {
                let facets = self.to_halfspaces()?;
                Ok(facets.iter().all(|f| f.slack(x) <= tol))
            }
        }
    }

    /// `max ⟨d, x⟩` over the polytope; `+∞` when unbounded in direction `d`.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, d.len())?;
        match &self.rep {
            Representation::Vertices(v) => {
                Ok(v.iter().map(|u| u.dot(d)).fold(f64::NEG_INFINITY, f64::max))
            }
            Representation::Halfspaces(h) => {
                if !halfspaces_bounded(h) {
                    return Ok(f64::INFINITY);
                }
                let verts = enumerate_vertices(self.dim, h)?;
                Ok(verts.iter().map(|u| u.dot(d)).fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Boundedness of the feasible region: every `±eₖ` lies in the cone of the
    /// normals, equivalently the support is finite along all coordinate
    /// directions.
    pub fn is_bounded(&self) -> bool {
        match &self.rep {
            Representation::Vertices(_) => true,
            Representation::Halfspaces(h) => halfspaces_bounded(h),
        }
    }

    /// Facet description of a full-dimensional vertex polytope.
    pub fn to_halfspaces(&self) -> Result<Vec<Halfspace>> {
        match &self.rep {
            Representation::Halfspaces(h) => Ok(h.clone()),
            Representation::Vertices(v) => enumerate_facets(self.dim, v),
        }
    }

    /// Vertex description of a bounded inequality system.
    pub fn to_vertices(&self) -> Result<Vec<DVector<f64>>> {
        match &self.rep {
            Representation::Vertices(v) => Ok(v.clone()),
            Representation::Halfspaces(h) => {
                if !halfspaces_bounded(h) {
                    return Err(Error::InvalidBody("inequality system is unbounded".into()));
                }
                let v = enumerate_vertices(self.dim, h)?;
                if v.is_empty() {
                    return Err(Error::EmptyBody);
                }
                Ok(v)
            }
        }
    }
}

fn halfspaces_bounded(h: &[Halfspace]) -> bool {
    let n = h[0].normal.len();
    let a = DMatrix::from_fn(n, h.len(), |i, j| h[j].normal[i] / h[j].normal.norm());
    (0..n).all(|k| {
        [1.0, -1.0].iter().all(|&s| {
            let mut e = DVector::zeros(n);
            e[k] = s;
            nnls(&a, &e).residual_norm < 1e-9
        })
    })
}

/// Generalized cross product of the rows of an `(n−1)×n` matrix.
fn cofactor_normal(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.ncols();
    if n == 1 {
        return DVector::from_element(1, 1.0);
    }
    DVector::from_fn(n, |k, _| {
        let minor = m.clone().remove_column(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

fn push_unique(list: &mut Vec<Halfspace>, h: Halfspace, tol: f64) {
    let dup = list
        .iter()
        .any(|g| (&g.normal - &h.normal).amax() < tol && (g.offset - h.offset).abs() < tol);
    if !dup {
        list.push(h);
    }
}

/// Brute-force facet enumeration over `n`-subsets of points.
pub fn enumerate_facets(n: usize, pts: &[DVector<f64>]) -> Result<Vec<Halfspace>> {
    if pts.len() < n + 1 {
        return Err(Error::DegenerateInput("fewer than n+1 points".into()));
    }
    let scale = pts.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-9 * scale;
    let mut facets = Vec::new();
    linalg::for_each_combination(pts.len(), n, |idx| {
        let base = &pts[idx[0]];
        let m = DMatrix::from_fn(n - 1, n, |r, c| pts[idx[r + 1]][c] - base[c]);
        let normal = cofactor_normal(&m);
        let norm = normal.norm();
        if norm <= 1e-10 * scale.powi(n as i32 - 1) {
            return;
        }
        let normal = normal / norm;
        let offset = normal.dot(base);
        let (mut above, mut below) = (false, false);
        for p in pts {
            let s = normal.dot(p) - offset;
            above |= s > tol;
            below |= s < -tol;
        }
        match (above, below) {
            (false, true) => push_unique(&mut facets, Halfspace::new(normal, offset), 1e-9),
            (true, false) => push_unique(&mut facets, Halfspace::new(-normal, -offset), 1e-9),
            _ => {}
        }
    });
    if facets.len() < n + 1 {
        return Err(Error::DegenerateInput("points are not full-dimensional".into()));
    }
    Ok(facets)
}

/// Brute-force vertex enumeration over `n`-subsets of inequalities.
pub fn enumerate_vertices(n: usize, h: &[Halfspace]) -> Result<Vec<DVector<f64>>> {
    let normed: Vec<Halfspace> = h
        .iter()
        .map(|f| {
            let s = f.normal.norm();
            Halfspace::new(&f.normal / s, f.offset / s)
        })
        .collect();
    let mut verts: Vec<DVector<f64>> = Vec::new();
    linalg::for_each_combination(normed.len(), n, |idx| {
        let a = DMatrix::from_fn(n, n, |r, c| normed[idx[r]].normal[c]);
        let b = DVector::from_fn(n, |r, _| normed[idx[r]].offset);
        if a.determinant().abs() < 1e-12 {
            return;
        }
        let Some(x) = a.lu().solve(&b) else { return };
        let tol = 1e-9 * (1.0 + x.amax());
        if normed.iter().all(|f| f.slack(&x) <= tol)
            && !verts.iter().any(|v| (v - &x).amax() < tol)
        {
            verts.push(x);
        }
    });
    Ok(verts)
}
