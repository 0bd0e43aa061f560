//! Finite groups of affine isometries, orbits, and invariant ellipsoids by
//! uniform averaging over the group.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certify::{CertKind, ContactCertificate};
use crate::ellipsoid::{AffineMap, Ellipsoid};
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Tolerance for group axioms: closure, inverses, orthogonality.
pub const GROUP_TOL: f64 = 1e-10;
/// Orbit points closer than this are identified.
pub const ORBIT_TOL: f64 = 1e-9;
/// Relative tolerance of [`check_invariant_ellipsoid`].
pub const INVARIANCE_TOL: f64 = 1e-9;

/// Upper bound on the order of generated groups.
const MAX_ORDER: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ElementRecord>", into = "Vec<ElementRecord>")]
pub struct FiniteGroup {
    elements: Vec<AffineMap>,
    identity: usize,
}

/// Coarse hash key; exact matches are confirmed with [`AffineMap::distance`].
fn key(g: &AffineMap) -> Vec<i64> {
    g.linear().iter().chain(g.offset().iter()).map(|v| (v * 1e6).round() as i64).collect()
}

struct Lookup<'a> {
    elements: &'a [AffineMap],
    index: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> Lookup<'a> {
    fn new(elements: &'a [AffineMap]) -> Self {
        let mut index: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, g) in elements.iter().enumerate() {
            index.entry(key(g)).or_default().push(i);
        }
        Self { elements, index }
    }

    fn find(&self, g: &AffineMap) -> Option<usize> {
        if let Some(hit) = self
            .index
            .get(&key(g))
            .and_then(|c| c.iter().copied().find(|&i| self.elements[i].distance(g) <= GROUP_TOL))
        {
            return Some(hit);
        }
        // Rounding can split near-equal entries across keys.
        self.elements.iter().position(|e| e.distance(g) <= GROUP_TOL)
    }
}

fn check_isometry(g: &AffineMap, form: &DMatrix<f64>) -> Result<()> {
    let a = g.linear();
    let dev = (a.transpose() * form * a - form).amax();
    if dev > GROUP_TOL * form.amax().max(1.0) {
        return Err(Error::NotAGroup(format!("linear part is not orthogonal (deviation {dev:e})")));
    }
    Ok(())
}

impl FiniteGroup {
    /// Validates a complete element list: orthogonal linear parts, identity,
    /// inverses and pairwise closure.
    pub fn new(elements: Vec<AffineMap>) -> Result<Self> {
        let n = elements.first().ok_or_else(|| Error::NotAGroup("no elements".into()))?.dim();
        Self::with_form(elements, &DMatrix::identity(n, n))
    }

    /// As [`FiniteGroup::new`], with linear parts required to preserve the
    /// quadratic form `F` (`gᵀFg = F`) instead of the Euclidean one.
    pub fn with_form(elements: Vec<AffineMap>, form: &DMatrix<f64>) -> Result<Self> {
        let n = elements.first().ok_or_else(|| Error::NotAGroup("no elements".into()))?.dim();
        check_dim(n, form.nrows())?;
        for g in &elements {
            check_dim(n, g.dim())?;
            check_isometry(g, form)?;
        }
        let lookup = Lookup::new(&elements);
        for (i, g) in elements.iter().enumerate() {
            if lookup.find(g) != Some(i) {
                return Err(Error::NotAGroup(format!("element {i} is repeated")));
            }
        }
        let identity = lookup
            .find(&AffineMap::identity(n))
            .ok_or_else(|| Error::NotAGroup("identity is missing".into()))?;
        for (i, g) in elements.iter().enumerate() {
            if lookup.find(&g.inverse()?).is_none() {
                return Err(Error::NotAGroup(format!("inverse of element {i} is missing")));
            }
            for (j, h) in elements.iter().enumerate() {
                if lookup.find(&g.compose(h)).is_none() {
                    return Err(Error::NotAGroup(format!("product of elements {i} and {j} is missing")));
                }
            }
        }
        Ok(Self { elements, identity })
    }

    /// Closure of a generating set under composition.
    pub fn generate(generators: &[AffineMap]) -> Result<Self> {
        let n = generators.first().ok_or_else(|| Error::NotAGroup("no generators".into()))?.dim();
        let form = DMatrix::identity(n, n);
        for g in generators {
            check_dim(n, g.dim())?;
            check_isometry(g, &form)?;
        }
        let mut elements = vec![AffineMap::identity(n)];
        let mut index: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        index.insert(key(&elements[0]), vec![0]);
        let mut frontier = 0;
        while frontier < elements.len() {
            let g = elements[frontier].clone();
            frontier += 1;
            for s in generators {
                let h = s.compose(&g);
                let k = key(&h);
                let seen = index
                    .get(&k)
                    .is_some_and(|c| c.iter().any(|&i| elements[i].distance(&h) <= GROUP_TOL));
                if seen {
                    continue;
                }
                if elements.len() >= MAX_ORDER {
                    return Err(Error::NotAGroup(format!("generated more than {MAX_ORDER} elements")));
                }
                index.entry(k).or_default().push(elements.len());
                elements.push(h);
            }
        }
        Self::new(elements)
    }

    /// The hyperoctahedral group of all `2ⁿ n!` signed permutation matrices.
    pub fn signed_permutations(n: usize) -> Result<Self> {
        if !(1..=4).contains(&n) {
            return Err(Error::InvalidDimension(n));
        }
        let mut elements = Vec::new();
        for perm in permutations(n) {
            for signs in 0..1usize << n {
                let m = DMatrix::from_fn(n, n, |i, j| {
                    if perm[j] == i {
                        if signs >> j & 1 == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    } else {
                        0.0
                    }
                });
                elements.push(AffineMap::linear_only(m)?);
            }
        }
        Self::new(elements)
    }

    /// All `n!` coordinate permutations.
    pub fn permutations(n: usize) -> Result<Self> {
        if !(1..=6).contains(&n) {
            return Err(Error::InvalidDimension(n));
        }
        let elements = permutations(n)
            .into_iter()
            .map(|perm| AffineMap::linear_only(DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(perm[j] == i)))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    /// Rotations of the plane by multiples of `2π/k`.
    pub fn cyclic(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("cyclic group of order 0".into()));
        }
        let elements = (0..k).map(|j| rotation(2.0 * PI * j as f64 / k as f64)).collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    /// Symmetries of the regular `k`-gon: `k` rotations and `k` reflections.
    pub fn dihedral(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("dihedral group of order 0".into()));
        }
        let mut elements = (0..k).map(|j| rotation(2.0 * PI * j as f64 / k as f64)).collect::<Result<Vec<_>>>()?;
        for j in 0..k {
            let t = 2.0 * PI * j as f64 / k as f64;
            let m = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
            elements.push(AffineMap::linear_only(m)?);
        }
        Self::new(elements)
    }

    /// Group generated by `diag(−1, I)` and `diag(1, O)` for each orthogonal
    /// `O` in `transverse`; a finite subgroup of the automorphisms of every
    /// slab `B_αβ` with `α = −β`, whose `e₁`-preserving part fixes every slab.
    pub fn slab_group(n: usize, transverse: &[DMatrix<f64>]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut generators = vec![block(-1.0, &DMatrix::identity(n - 1, n - 1))?];
        for o in transverse {
            check_dim(n - 1, o.nrows())?;
            check_dim(n - 1, o.ncols())?;
            generators.push(block(1.0, o)?);
        }
        Self::generate(&generators)
    }

    /// The `e₁`-preserving subgroup `{diag(1, Ō)}` with `Ō` ranging over the
    /// signed permutations of the remaining coordinates.
    pub fn axial_group(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let inner = Self::signed_permutations(n - 1)?;
        let elements = inner.elements.iter().map(|g| block(1.0, g.linear())).collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    /// Named built-in groups: `signed-permutations`, `permutations`,
    /// `cyclic-K`, `dihedral-K` (planar), `slab` and `axial`.
    pub fn builtin(name: &str, dim: usize) -> Result<Self> {
        let planar = |k: &str, f: fn(usize) -> Result<Self>| -> Result<Self> {
            if dim != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: dim });
            }
            let k = k.parse::<usize>().map_err(|_| Error::Parse(format!("bad group order in {name:?}")))?;
            f(k)
        };
        match name {
            "signed-permutations" | "hyperoctahedral" => Self::signed_permutations(dim),
            "permutations" => Self::permutations(dim),
            "slab" => {
                if dim < 2 {
                    return Err(Error::InvalidDimension(dim));
                }
                let transverse: Vec<_> =
                    Self::signed_permutations(dim - 1)?.elements.iter().map(|g| g.linear().clone()).collect();
                Self::slab_group(dim, &transverse)
            }
            "axial" => Self::axial_group(dim),
            _ => {
                if let Some(k) = name.strip_prefix("cyclic-") {
                    planar(k, Self::cyclic)
                } else if let Some(k) = name.strip_prefix("dihedral-") {
                    planar(k, Self::dihedral)
                } else {
                    Err(Error::Parse(format!("unknown group {name:?}")))
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[AffineMap] {
        &self.elements
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }
}

fn rotation(t: f64) -> Result<AffineMap> {
    AffineMap::linear_only(DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]))
}

fn block(first: f64, rest: &DMatrix<f64>) -> Result<AffineMap> {
    let n = rest.nrows() + 1;
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = first;
    m.view_mut((1, 1), (n - 1, n - 1)).copy_from(rest);
    AffineMap::linear_only(m)
}

/// Permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRecord {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl From<FiniteGroup> for Vec<ElementRecord> {
    fn from(g: FiniteGroup) -> Self {
        g.elements
            .iter()
            .map(|e| {
                let n = e.dim();
                ElementRecord {
                    matrix: (0..n).map(|i| e.linear().row(i).iter().copied().collect()).collect(),
                    offset: e.offset().iter().copied().collect(),
                }
            })
            .collect()
    }
}

impl TryFrom<Vec<ElementRecord>> for FiniteGroup {
    type Error = Error;

    fn try_from(records: Vec<ElementRecord>) -> Result<Self> {
        let elements = records
            .into_iter()
            .map(|r| {
                let n = r.offset.len();
                check_dim(n, r.matrix.len())?;
                for row in &r.matrix {
                    check_dim(n, row.len())?;
                }
                AffineMap::new(DMatrix::from_fn(n, n, |i, j| r.matrix[i][j]), DVector::from_vec(r.offset))
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteGroup::new(elements)
    }
}

/// `{gx : g ∈ G}` without repeats, in element order.
pub fn orbit(g: &FiniteGroup, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    check_dim(g.dim(), x.len())?;
    let mut out: Vec<DVector<f64>> = Vec::new();
    for e in &g.elements {
        let y = e.apply(x);
        if !out.iter().any(|z| (z - &y).amax() <= ORBIT_TOL) {
            out.push(y);
        }
    }
    Ok(out)
}

/// Uniform average of `gx` over the group; fixed by every element.
pub fn invariant_center(g: &FiniteGroup, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(g.dim(), x.len())?;
    let sum = g.elements.iter().fold(DVector::zeros(x.len()), |acc, e| acc + e.apply(x));
    Ok(sum / g.order() as f64)
}

/// Shape `X` with `X⁻¹ = n · avg_g (gx − c)(gx − c)ᵀ`.
///
/// For `c` fixed by the group the average is invariant under conjugation by
/// every linear part, so `E(X, c)` is a `G`-invariant ellipsoid through the
/// whole orbit.
pub fn invariant_shape(g: &FiniteGroup, x: &DVector<f64>, c: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = g.dim();
    check_dim(n, x.len())?;
    check_dim(n, c.len())?;
    let mut avg = DMatrix::<f64>::zeros(n, n);
    for e in &g.elements {
        let d = e.apply(x) - c;
        avg.ger(1.0, &d, &d, 1.0);
    }
    avg /= g.order() as f64;
    let scatter = linalg::symmetrize(&(avg * n as f64));
    let l = linalg::cholesky(&scatter, 1e-12).ok_or(Error::SingularShape)?;
    Ok(linalg::symmetrize(&linalg::spd_inverse_from_cholesky(&l)))
}

/// Ellipsoid through the orbit of `x` built from the group average, with the
/// uniform multipliers `λᵢ = n/|orbit|` on the orbit points.
pub fn orbit_ellipsoid(g: &FiniteGroup, x: &DVector<f64>) -> Result<(Ellipsoid, ContactCertificate)> {
    let c = invariant_center(g, x)?;
    let shape = invariant_shape(g, x, &c)?;
    let contacts = orbit(g, x)?;
    let lambda = g.dim() as f64 / contacts.len() as f64;
    let multipliers = vec![lambda; contacts.len()];
    let e = Ellipsoid::from_computed(c, shape)?;
    Ok((e, ContactCertificate { kind: CertKind::Ce, contacts, multipliers }))
}

/// Largest relative violation of `gc = c` and `AᵀXA = X` over the group.
pub fn invariance_residual(g: &FiniteGroup, e: &Ellipsoid) -> Result<f64> {
    check_dim(g.dim(), e.dim())?;
    let c = e.center();
    let x = e.shape();
    let cs = 1.0 + c.amax();
    let xs = x.amax();
    let mut worst: f64 = 0.0;
    for el in &g.elements {
        let a = el.linear();
        worst = worst.max((el.apply(c) - c).amax() / cs);
        worst = worst.max((a.transpose() * x * a - x).amax() / xs);
    }
    Ok(worst)
}

/// Whether every element maps `E` onto itself, within [`INVARIANCE_TOL`].
pub fn check_invariant_ellipsoid(g: &FiniteGroup, e: &Ellipsoid) -> Result<bool> {
    Ok(invariance_residual(g, e)? <= INVARIANCE_TOL)
}
