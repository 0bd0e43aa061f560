use extremal_ellipsoids::certify::{certify_ce_points, certify_ie, john_factors, CertKind};
use extremal_ellipsoids::slab::{ie_slab, SlabSpec};
use extremal_ellipsoids::solve::{mvee_points, mvee_points_barrier, mvie_polytope, SolverConfig};
use extremal_ellipsoids::{map_ellipsoid, AffineMap, Halfspace, Polytope};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<DVector<f64>> {
    (0..m).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))).collect()
}

#[test]
fn mvee_agrees_with_barrier_solver_in_r4() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let pts = cloud(&mut rng, 4, 200);
    let eps = 1e-7;
    let (e, _) = mvee_points(&pts, &SolverConfig::with_eps(eps)).unwrap();
    assert!(certify_ce_points(&pts, &e, 10.0 * eps).unwrap().passed);
    let reference = mvee_points_barrier(&pts, &SolverConfig::with_eps(eps / 100.0)).unwrap();
    let ratio = e.volume() / reference.volume();
    let bound = (1.0 + 5.0 * eps).powi(4);
    assert!(ratio <= bound && 1.0 / ratio <= bound, "volume ratio {ratio}");
}

#[test]
fn mvee_is_affine_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig::with_eps(1e-10);
    for n in 2..=4 {
        let pts = cloud(&mut rng, n, 12);
        let lin = DMatrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
        let t = AffineMap::new(lin, DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0))).unwrap();
        let moved: Vec<_> = pts.iter().map(|p| t.apply(p)).collect();
        let (e, _) = mvee_points(&pts, &cfg).unwrap();
        let (f, _) = mvee_points(&moved, &cfg).unwrap();
        let expected = map_ellipsoid(&t, &e).unwrap();
        assert!((f.volume() / expected.volume() - 1.0).abs() <= 1e-6);
        assert!((f.volume() / e.volume() - t.det().abs()).abs() <= 1e-6 * t.det().abs());
        assert!((f.center() - expected.center()).amax() <= 1e-6);
    }
}

#[test]
fn mvee_volume_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = SolverConfig::with_eps(1e-10);
    let mut pts = cloud(&mut rng, 3, 10);
    let (e, cert) = mvee_points(&pts, &cfg).unwrap();
    let base = e.volume();

    pts.push(DVector::from_row_slice(&[1.5, -0.2, 0.3]));
    let (grown, _) = mvee_points(&pts, &cfg).unwrap();
    assert!(grown.volume() >= base * (1.0 - 1e-9));
    pts.pop();

    let interior = pts
        .iter()
        .position(|p| !cert.contacts.iter().any(|c| (c - p).amax() < 1e-12))
        .expect("some point is not a contact");
    pts.remove(interior);
    let (same, _) = mvee_points(&pts, &cfg).unwrap();
    assert!((same.volume() / base - 1.0).abs() <= 1e-9);
}

#[test]
fn mvie_of_tangent_polygon_approaches_ie_slab() {
    // B_αβ with α = −0.5, β = 0.5 cut by 256 tangent lines of the unit circle.
    let mut facets: Vec<Halfspace> = (0..256)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 256.0;
            Halfspace::new(DVector::from_row_slice(&[t.cos(), t.sin()]), 1.0)
        })
        .collect();
    facets.push(Halfspace::new(DVector::from_row_slice(&[1.0, 0.0]), 0.5));
    facets.push(Halfspace::new(DVector::from_row_slice(&[-1.0, 0.0]), 0.5));
    let body = Polytope::from_halfspaces(facets).unwrap();
    let (e, _) = mvie_polytope(&body, &SolverConfig::default()).unwrap();
    let p = ie_slab(&SlabSpec::new(2, -0.5, 0.5).unwrap());
    let (tau, a, b) = (p.tau, p.a, p.b);
    let x = e.shape_inverse();
    assert!((e.center()[0] - tau).abs() <= 1e-3 && e.center()[1].abs() <= 1e-3);
    assert!((x[(0, 0)].sqrt() - a).abs() <= 1e-3, "{x}");
    assert!((x[(1, 1)].sqrt() - b).abs() <= 1e-3, "{x}");
    assert!(x[(0, 1)].abs() <= 1e-3);
}

#[test]
fn mvie_blown_up_by_n_contains_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..5 {
        let mut facets: Vec<Halfspace> = (0..10)
            .map(|_| {
                let d = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)).normalize();
                Halfspace::new(d, rng.gen_range(0.5..1.5))
            })
            .collect();
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut d = DVector::zeros(3);
                d[k] = s;
                facets.push(Halfspace::new(d, 2.0));
            }
        }
        let body = Polytope::from_halfspaces(facets).unwrap();
        let (e, _) = mvie_polytope(&body, &SolverConfig::default()).unwrap();
        assert!(certify_ie(&body, &e, 1e-6).unwrap().passed);
        let r = john_factors(&body, &e, CertKind::Ie, false, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.factor - 3.0).abs() < 1e-15);
    }
}

#[test]
fn sandwich_inscribed_body_circumscribed() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = SolverConfig::with_eps(1e-10);
    for n in 2..=3 {
        let pts = cloud(&mut rng, n, 9);
        let body = Polytope::from_vertices(pts.clone()).unwrap();
        let h = Polytope::from_halfspaces(body.to_halfspaces().unwrap()).unwrap();
        let (inner, _) = mvie_polytope(&h, &cfg).unwrap();
        let (outer, _) = mvee_points(&pts, &cfg).unwrap();
        for f in h.halfspaces().unwrap() {
            assert!(inner.support(&f.normal).unwrap() <= f.offset + 1e-8);
        }
        for p in &pts {
            assert!(outer.contains(p, 1e-8));
        }
        assert!(inner.volume() < outer.volume());
    }
}
