//! Ellipsoid method with central, deep and parallel cuts.
//!
//! Each step replaces the current ellipsoid `E` by the minimum-volume
//! ellipsoid containing `{x ∈ E : lower ≤ ⟨p, x−c⟩ ≤ upper}`, computed with
//! the closed-form slab solution in normalized coordinates.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::polytope::Halfspace;
use crate::slab::{ce_slab_with_case, denormalize, normalize, GeneralSlab, SlabCase};

/// Default volume below which the feasible set is declared empty.
pub const DEFAULT_VOLUME_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutStepRecord {
    pub iteration: usize,
    pub normal: Vec<f64>,
    /// Cut bounds in the frame where `E` is the unit ball and `p` is `e₁`,
    /// clamped to `[−1, 1]`.
    pub alpha: f64,
    pub beta: f64,
    pub case: SlabCase,
    pub volume_before: f64,
    pub volume_after: f64,
    /// `(a b^{n−1})^{−1/2}` from the normalized shape parameters.
    pub ratio: f64,
}

/// `√(pᵀX⁻¹p)`: half the width of `E` along `p` in units of `⟨p, ·⟩`.
fn half_width(e: &Ellipsoid, p: &DVector<f64>) -> f64 {
    crate::linalg::forward_solve(e.cholesky(), p).norm()
}

/// Minimum-volume ellipsoid containing `{x ∈ E : lower ≤ ⟨p, x−c⟩ ≤ upper}`.
///
/// Infinite bounds are allowed. When the slab holds the whole ellipsoid or
/// its bounds satisfy `αβ ≤ −1/n`, `E` itself is returned unchanged.
pub fn parallel_cut_step(e: &Ellipsoid, p: &DVector<f64>, lower: f64, upper: f64) -> Result<(Ellipsoid, CutStepRecord)> {
    let n = e.dim();
    check_dim(n, p.len())?;
    if p.iter().all(|&v| v == 0.0) || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDirection);
    }
    if lower.is_nan() || upper.is_nan() {
        return Err(Error::InvalidParameter("cut bound is NaN".into()));
    }
    let w = half_width(e, p);
    let (alpha, beta) = (lower / w, upper / w);
    if alpha >= 1.0 || beta <= -1.0 || alpha >= beta {
        return Err(Error::EmptySlab);
    }
    let (alpha, beta) = (alpha.max(-1.0), beta.min(1.0));
    let slab = GeneralSlab::new(e, p.clone(), alpha * w, beta * w)?;
    let (spec, map) = normalize(&slab)?;
    let (params, case) = ce_slab_with_case(&spec)?;
    let volume_before = e.volume();
    let next = match case {
        SlabCase::I => e.clone(),
        _ => denormalize(&params, &map, spec.reflected)?,
    };
    let ratio = match case {
        SlabCase::I => 1.0,
        _ => params.volume_ratio(),
    };
    let record = CutStepRecord {
        iteration: 0,
        normal: p.iter().copied().collect(),
        alpha,
        beta,
        case,
        volume_before,
        volume_after: next.volume(),
        ratio,
    };
    Ok((next, record))
}

/// Cut through the center keeping `{⟨p, x−c⟩ ≤ 0}`.
pub fn central_cut_step(e: &Ellipsoid, p: &DVector<f64>) -> Result<(Ellipsoid, CutStepRecord)> {
    check_dim(e.dim(), p.len())?;
    parallel_cut_step(e, p, f64::NEG_INFINITY, 0.0)
}

/// Answer of a separation oracle at a query point.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Satisfied,
    /// Every feasible `x` has `lower ≤ ⟨normal, x⟩ ≤ upper`, and the query
    /// point violates the upper bound.
    Violated { normal: DVector<f64>, lower: f64, upper: f64 },
}

pub trait SeparationOracle {
    fn dim(&self) -> usize;
    fn separate(&self, x: &DVector<f64>) -> Separation;
}

/// Oracle for `{x : ⟨aᵢ, x⟩ ≤ bᵢ}`; reports the constraint with the largest
/// normalized violation, paired with the tightest antiparallel constraint as
/// the lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSystem {
    constraints: Vec<Halfspace>,
    tol: f64,
}

impl HalfspaceSystem {
    pub fn new(constraints: Vec<Halfspace>, tol: f64) -> Result<Self> {
        let n = constraints.first().ok_or(Error::EmptyBody)?.normal.len();
        for h in &constraints {
            check_dim(n, h.normal.len())?;
            if h.normal.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidDirection);
            }
        }
        Ok(Self { constraints, tol })
    }

    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }
}

impl SeparationOracle for HalfspaceSystem {
    fn dim(&self) -> usize {
        self.constraints[0].normal.len()
    }

    fn separate(&self, x: &DVector<f64>) -> Separation {
        let mut worst: Option<(usize, f64)> = None;
        for (i, h) in self.constraints.iter().enumerate() {
            let v = (h.normal.dot(x) - h.offset) / h.normal.norm();
            if v > self.tol && worst.is_none_or(|(_, w)| v > w) {
                worst = Some((i, v));
            }
        }
        let Some((i, _)) = worst else {
            return Separation::Satisfied;
        };
        let h = &self.constraints[i];
        let unit = &h.normal / h.normal.norm();
        let scale = h.normal.norm();
        let lower = self
            .constraints
            .iter()
            .filter_map(|g| {
                let gn = g.normal.norm();
                // ⟨−g/‖g‖, x⟩ ≥ −offset/‖g‖ bounds ⟨unit, x⟩ from below.
                ((&g.normal / gn).dot(&unit) <= -1.0 + 1e-12).then(|| -g.offset / gn * scale)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Separation::Violated { normal: h.normal.clone(), lower, upper: h.offset }
    }
}

/// Feasibility problem in the JSON input format: an inequality list plus an
/// initial ellipsoid (default: ball of `radius` about the origin).
#[derive(Debug, Clone, Deserialize)]
pub struct FeasibilityInput {
    pub constraints: Vec<Halfspace>,
    #[serde(default)]
    pub initial: Option<Ellipsoid>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub volume_floor: Option<f64>,
}

pub struct FeasibilityProblem<O> {
    pub oracle: O,
    /// Must contain the feasible set.
    pub initial: Ellipsoid,
    pub volume_floor: f64,
}

impl<O: SeparationOracle> FeasibilityProblem<O> {
    pub fn new(oracle: O, initial: Ellipsoid, volume_floor: f64) -> Result<Self> {
        check_dim(oracle.dim(), initial.dim())?;
        if !(volume_floor >= 0.0 && volume_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!("volume floor {volume_floor}")));
        }
        Ok(Self { oracle, initial, volume_floor })
    }
}

impl FeasibilityProblem<HalfspaceSystem> {
    pub fn from_input(input: FeasibilityInput, tol: f64) -> Result<Self> {
        let system = HalfspaceSystem::new(input.constraints, tol)?;
        let n = system.dim();
        let initial = match (input.initial, input.radius) {
            (Some(e), _) => e,
            (None, r) => Ellipsoid::ball(DVector::zeros(n), r.unwrap_or(1.0))?,
        };
        Self::new(system, initial, input.volume_floor.unwrap_or(DEFAULT_VOLUME_FLOOR))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FeasibilityOutcome {
    Feasible { point: Vec<f64> },
    /// The volume fell below the floor, or a cut left an empty slab.
    Infeasible { volume: f64, empty_slab: bool },
    Budget { volume: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub outcome: FeasibilityOutcome,
    pub iterations: usize,
    pub ellipsoid: Ellipsoid,
    pub trace: Vec<CutStepRecord>,
}

/// Run the ellipsoid method for at most `max_iter` cuts.
pub fn solve_feasibility<O: SeparationOracle>(p: &FeasibilityProblem<O>, max_iter: usize) -> Result<FeasibilityReport> {
    solve_feasibility_with_sink(p, max_iter, None)
}

/// As [`solve_feasibility`], also appending each step as one JSON line to
/// `sink`.
pub fn solve_feasibility_with_sink<O: SeparationOracle>(
    p: &FeasibilityProblem<O>,
    max_iter: usize,
    mut sink: Option<&mut dyn Write>,
) -> Result<FeasibilityReport> {
    let mut e = p.initial.clone();
    let mut trace = Vec::new();
    let ln_floor = p.volume_floor.ln();
    for iteration in 0..=max_iter {
        let (normal, lower, upper) = match p.oracle.separate(e.center()) {
            Separation::Satisfied => {
                let outcome = FeasibilityOutcome::Feasible { point: e.center().iter().copied().collect() };
                return Ok(FeasibilityReport { outcome, iterations: iteration, ellipsoid: e, trace });
            }
            Separation::Violated { normal, lower, upper } => (normal, lower, upper),
        };
        if e.ln_volume() < ln_floor {
            let outcome = FeasibilityOutcome::Infeasible { volume: e.volume(), empty_slab: false };
            return Ok(FeasibilityReport { outcome, iterations: iteration, ellipsoid: e, trace });
        }
        if iteration == max_iter {
            break;
        }
        let shift = normal.dot(e.center());
        let (next, mut record) = match parallel_cut_step(&e, &normal, lower - shift, upper - shift) {
            Ok(step) => step,
            Err(Error::EmptySlab) => {
                let outcome = FeasibilityOutcome::Infeasible { volume: e.volume(), empty_slab: true };
                return Ok(FeasibilityReport { outcome, iterations: iteration, ellipsoid: e, trace });
            }
            Err(err) => return Err(err),
        };
        record.iteration = iteration;
        if let Some(w) = sink.as_deref_mut() {
            let line = serde_json::to_string(&record).map_err(|err| Error::Io(err.to_string()))?;
            writeln!(w, "{line}").map_err(|err| Error::Io(err.to_string()))?;
        }
        trace.push(record);
        e = next;
    }
    let outcome = FeasibilityOutcome::Budget { volume: e.volume() };
    Ok(FeasibilityReport { outcome, iterations: max_iter, ellipsoid: e, trace })
}
