//! Extremal ellipsoids of convex bodies.
//!
//! Closed-form minimum-volume circumscribed and maximum-volume inscribed
//! ellipsoids of ball slabs and truncated cones, numerical solvers for point
//! sets and inequality systems, Fritz John optimality certificates, finite
//! symmetry groups, and a parallel-cut ellipsoid method.

pub mod error;
pub mod linalg;
pub mod nnls;
pub mod ellipsoid;
pub mod polytope;

pub use ellipsoid::{map_ellipsoid, AffineMap, Ellipsoid};
pub use error::{Error, Result};
pub use polytope::{Halfspace, Polytope, Representation};
pub mod slab;
pub mod certify;
pub mod solve;
pub mod symmetry;
pub mod cutting;
pub mod io;
