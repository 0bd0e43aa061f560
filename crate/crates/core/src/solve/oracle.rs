//! Brute-force search for axial extremal ellipsoids of slabs and cones.
//!
//! The search never uses the closed forms. For a center `τ` and first
//! parameter `a` the best feasible `b` is the tightest ratio over a boundary
//! sample; the volume objective is unimodal in `a`, so golden-section search
//! handles it, and `τ` is scanned on a grid of `resolution` points and then
//! refined inside the best cell.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::slab::{AxialEllipsoidParams, ParamForm, SlabSpec};

/// Boundary samples along `[α, β]` (circumscribed slab) or `[−1, 1]`
/// (inscribed slab).
const SAMPLES: usize = 257;
const INNER_ITERS: usize = 90;
const OUTER_ITERS: usize = 80;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleProblem {
    Ce,
    Ie,
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    /// Best grid point before refinement.
    pub coarse: AxialEllipsoidParams,
    pub refined: AxialEllipsoidParams,
    /// `−ln a − (n−1) ln b` in shape form, i.e. twice the log volume ratio.
    pub objective: f64,
}

fn golden_min(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

struct Search {
    n: f64,
    problem: OracleProblem,
    alpha: f64,
    beta: f64,
    /// Sample abscissae with `1 − y² > 0`.
    interior: Vec<f64>,
    /// Sample abscissae at `±1`, where only the axial term constrains.
    poles: Vec<f64>,
}

impl Search {
    fn new(s: &SlabSpec, problem: OracleProblem) -> Self {
        let (lo, hi, count) = match problem {
            OracleProblem::Ce => (s.alpha, s.beta, SAMPLES),
            OracleProblem::Ie => (-1.0, 1.0, 2 * SAMPLES - 1),
            OracleProblem::Cone => (s.alpha, s.beta, 2),
        };
        let mut interior = Vec::new();
        let mut poles = Vec::new();
        for k in 0..count {
            let y = lo + (hi - lo) * k as f64 / (count - 1) as f64;
            if 1.0 - y * y > 1e-14 {
                interior.push(y);
            } else {
                poles.push(y);
            }
        }
        Self { n: s.dim as f64, problem, alpha: s.alpha, beta: s.beta, interior, poles }
    }

    /// Ratio whose minimum over the sample gives the best `b` (shape form) or
    /// `b²` (factor form).
    fn ratio(&self, tau: f64, a: f64, y: f64) -> f64 {
        match self.problem {
            OracleProblem::Ce | OracleProblem::Cone => (1.0 - a * (y - tau).powi(2)) / (1.0 - y * y),
            OracleProblem::Ie => (1.0 - (a * y + tau).powi(2)) / (1.0 - y * y),
        }
    }

    /// Best transverse parameter for `(τ, a)`; `refine` polishes the sample
    /// minimum by a local golden-section search between its neighbours.
    fn transverse(&self, tau: f64, a: f64, refine: bool) -> Option<f64> {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for (k, &y) in self.interior.iter().enumerate() {
            let r = self.ratio(tau, a, y);
            if r < best {
                best = r;
                arg = k;
            }
        }
        if arg == usize::MAX {
            return None;
        }
        if refine && self.problem != OracleProblem::Cone && self.interior.len() > 2 {
            let lo = self.interior[arg.saturating_sub(1)];
            let hi = self.interior[(arg + 1).min(self.interior.len() - 1)];
            let (_, r) = golden_min(lo, hi, 60, |y| self.ratio(tau, a, y));
            best = best.min(r);
        }
        if !(best > 0.0) {
            return None;
        }
        match self.problem {
            OracleProblem::Ie => Some(best.sqrt()),
            _ => Some(best),
        }
    }

    /// Shape-form objective `−ln a − (n−1) ln b`, or the factor-form
    /// `−ln a − (n−1) ln b` to be minimized for the inscribed problem.
    fn objective(&self, tau: f64, a: f64, refine: bool) -> f64 {
        if !(a > 0.0) {
            return f64::INFINITY;
        }
        match self.problem {
            OracleProblem::Ce | OracleProblem::Cone => {
                if self.poles.iter().any(|&y| a * (y - tau).powi(2) > 1.0) {
                    return f64::INFINITY;
                }
            }
            OracleProblem::Ie => {
                if tau - a < self.alpha || tau + a > self.beta {
                    return f64::INFINITY;
                }
            }
        }
        match self.transverse(tau, a, refine) {
            Some(b) => -a.ln() - (self.n - 1.0) * b.ln(),
            None => f64::INFINITY,
        }
    }

    /// Upper end of the admissible range of `a` at center `τ`.
    fn a_max(&self, tau: f64) -> f64 {
        match self.problem {
            OracleProblem::Ie => (tau - self.alpha).min(self.beta - tau),
            _ => {
                let far = self
                    .interior
                    .iter()
                    .chain(&self.poles)
                    .map(|&y| (y - tau).abs())
                    .fold(0.0, f64::max);
                1.0 / (far * far)
            }
        }
    }

    fn best_a(&self, tau: f64, refine: bool) -> (f64, f64) {
        let hi = self.a_max(tau);
        if !(hi > 0.0 && hi.is_finite()) {
            return (f64::NAN, f64::INFINITY);
        }
        match self.problem {
            // Concave constraint in a: search a directly, the upper end is
            // admissible.
            OracleProblem::Ie => golden_min(0.0, hi, INNER_ITERS, |a| self.objective(tau, a, refine)),
            _ => {
                let (la, f) = golden_min(hi.ln() - 40.0, hi.ln(), INNER_ITERS, |la| {
                    self.objective(tau, la.exp(), refine)
                });
                (la.exp(), f)
            }
        }
    }

    fn params(&self, tau: f64, a: f64, dim: usize) -> AxialEllipsoidParams {
        let b = self.transverse(tau, a, true).unwrap_or(f64::NAN);
        let form = match self.problem {
            OracleProblem::Ie => ParamForm::Factor,
            _ => ParamForm::Shape,
        };
        AxialEllipsoidParams { tau, a, b, dim, form }
    }
}

/// Grid search plus refinement; see the module documentation.
pub fn grid_oracle_search(s: &SlabSpec, problem: OracleProblem, resolution: usize) -> Result<OracleReport> {
    if resolution < 64 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} < 64")));
    }
    let search = Search::new(s, problem);
    if problem == OracleProblem::Cone && search.interior.is_empty() {
        return Err(Error::DegenerateInput("cone over two points is a segment".into()));
    }
    let width = s.beta - s.alpha;
    let cell = width / resolution as f64;
    let mut best = (f64::INFINITY, 0usize, f64::NAN);
    for k in 0..resolution {
        let tau = s.alpha + cell * (k as f64 + 0.5);
        let (a, f) = search.best_a(tau, false);
        if f < best.0 {
            best = (f, k, a);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::DegenerateInput("no feasible grid point".into()));
    }
    let tau0 = s.alpha + cell * (best.1 as f64 + 0.5);
    let coarse = search.params(tau0, best.2, s.dim);

    let lo = (tau0 - cell).max(s.alpha);
    let hi = (tau0 + cell).min(s.beta);
    let (tau, _) = golden_min(lo, hi, OUTER_ITERS, |t| search.best_a(t, true).1);
    let (a, objective) = search.best_a(tau, true);
    let refined = search.params(tau, a, s.dim);
    let objective = match problem {
        OracleProblem::Ie => {
            let (sa, sb) = refined.shape_diagonal();
            -sa.ln() - (search.n - 1.0) * sb.ln()
        }
        _ => objective,
    };
    Ok(OracleReport { coarse, refined, objective })
}

/// Refined oracle triple in the same form as the matching closed form: shape
/// form for the circumscribed problems, factor form for the inscribed one.
pub fn grid_oracle_slab(s: &SlabSpec, problem: OracleProblem, resolution: usize) -> Result<AxialEllipsoidParams> {
    grid_oracle_search(s, problem, resolution).map(|r| r.refined)
}
