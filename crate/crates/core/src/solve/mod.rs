//! Numerical extremal-ellipsoid solvers and the brute-force slab oracle.

mod barrier;
mod mvee;
mod mvie;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use barrier::mvee_points_barrier;
pub use mvee::mvee_points;
pub use mvie::{chebyshev_center, mvie_polytope};
pub use oracle::{grid_oracle_search, grid_oracle_slab, OracleProblem, OracleReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative optimality gap target.
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { eps: 1e-7, max_iter: 100_000, seed: 0 }
    }
}

impl SolverConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}
