//! CSV polylines for planar instances: header `series,x,y`, series in
//! `body`, `ellipsoid`, `contacts`.

use std::f64::consts::PI;
use std::fmt::Write;

use extremal_ellipsoids::{Ellipsoid, Halfspace};
use nalgebra::DVector;

use crate::format::number;

pub const SAMPLES: usize = 720;

/// Planar convex body: intersection of halfspaces and optionally the unit
/// disc, seen from an interior point.
pub struct Body {
    pub facets: Vec<Halfspace>,
    pub disc: bool,
    pub interior: DVector<f64>,
}

impl Body {
    /// Boundary point along the ray from the interior point at angle `t`.
    fn radial(&self, t: f64) -> DVector<f64> {
        let d = DVector::from_row_slice(&[t.cos(), t.sin()]);
        let p = &self.interior;
        let mut r = f64::INFINITY;
        for f in &self.facets {
            let ad = f.normal.dot(&d);
            if ad > 0.0 {
                r = r.min((f.offset - f.normal.dot(p)) / ad);
            }
        }
        if self.disc {
            let pd = p.dot(&d);
            r = r.min(-pd + (pd * pd - p.norm_squared() + 1.0).max(0.0).sqrt());
        }
        p + d * r
    }
}

fn row(out: &mut String, series: &str, x: f64, y: f64) {
    let _ = writeln!(out, "{series},{},{}", number(x), number(y));
}

pub fn csv(body: &Body, e: &Ellipsoid, contacts: &[DVector<f64>]) -> String {
    let mut out = String::from("series,x,y\n");
    for k in 0..SAMPLES {
        let t = 2.0 * PI * k as f64 / SAMPLES as f64;
        let p = body.radial(t);
        row(&mut out, "body", p[0], p[1]);
    }
    for k in 0..SAMPLES {
        let t = 2.0 * PI * k as f64 / SAMPLES as f64;
        let p = e.boundary_point(&DVector::from_row_slice(&[t.cos(), t.sin()]));
        row(&mut out, "ellipsoid", p[0], p[1]);
    }
    for c in contacts {
        row(&mut out, "contacts", c[0], c[1]);
    }
    out
}
