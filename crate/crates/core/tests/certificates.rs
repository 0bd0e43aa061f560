use extremal_ellipsoids::certify::{
    certify_ce_points, certify_ie, certify_slab_ce, certify_slab_ie, CertResult, PRUNE_TOL,
};
use extremal_ellipsoids::linalg::sphere_directions;
use extremal_ellipsoids::slab::{ce_slab, ie_slab, SlabSpec};
use extremal_ellipsoids::solve::{mvee_points, SolverConfig};
use extremal_ellipsoids::{Halfspace, Polytope};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<DVector<f64>> {
    (0..m).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))).collect()
}

/// `min_d max_i ⟨d, uᵢ − c⟩` over 500 directions.
fn halfspace_margin(r: &CertResult, c: &DVector<f64>) -> f64 {
    let n = c.len();
    sphere_directions(n, 500)
        .iter()
        .map(|d| r.certificate.contacts.iter().map(|u| d.dot(&(u - c))).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn slab_contacts_surround_the_center() {
    for (n, al, be) in [(2, -0.5, 0.5), (3, 0.1, 0.9), (2, -0.2, 0.95), (5, -0.8, 0.9)] {
        let s = SlabSpec::new(n, al, be).unwrap();
        let ce = ce_slab(&s).unwrap();
        let r = certify_slab_ce(&s, &ce, 1e-8).unwrap();
        assert!(r.passed);
        assert!(halfspace_margin(&r, &ce.to_ellipsoid().unwrap().center().clone()) > 0.0);
        let ie = ie_slab(&s);
        let r = certify_slab_ie(&s, &ie, 1e-8).unwrap();
        assert!(r.passed);
        assert!(halfspace_margin(&r, &ie.to_ellipsoid().unwrap().center().clone()) > 0.0);
    }
}

#[test]
fn polar_of_contacts_has_unit_ball_as_inscribed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=4 {
        let pts = cloud(&mut rng, n, 4 * n);
        let (e, _) = mvee_points(&pts, &SolverConfig::with_eps(1e-12)).unwrap();
        let r = certify_ce_points(&pts, &e, 1e-8).unwrap();
        assert!(r.passed);
        // Map to John position: x ↦ Lᵀ(x − c).
        let lt = e.cholesky().transpose();
        let w: Vec<DVector<f64>> = r.certificate.contacts.iter().map(|u| &lt * (u - e.center())).collect();
        let polar = Polytope::from_halfspaces(w.iter().map(|u| Halfspace::new(u.clone(), 1.0)).collect()).unwrap();
        let ball = extremal_ellipsoids::Ellipsoid::unit_ball(n);
        let dual = certify_ie(&polar, &ball, 1e-8).unwrap();
        assert!(dual.passed, "{:?}", dual.residuals);
        assert_eq!(dual.certificate.len(), r.certificate.len());
        let mut a = dual.certificate.multipliers.clone();
        let mut b = r.certificate.multipliers.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-6, "{a:?} vs {b:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_certificates_are_minimal_and_surround_center(seed in 0u64..10_000, m in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 3) as usize;
        let pts = cloud(&mut rng, n, n + 2 + m);
        let (e, _) = mvee_points(&pts, &SolverConfig::with_eps(1e-10)).unwrap();
        let r = certify_ce_points(&pts, &e, 1e-8).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.certificate.len() <= n * (n + 3) / 2);
        prop_assert!(r.certificate.multipliers.iter().all(|&l| l >= PRUNE_TOL));
        prop_assert!((r.certificate.multiplier_sum() - n as f64).abs() <= 1e-8 * n as f64);
        prop_assert!(halfspace_margin(&r, e.center()) > 0.0);
    }
}
