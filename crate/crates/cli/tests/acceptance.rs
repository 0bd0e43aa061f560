//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines show up in plain `cargo test`
//! output. The process fails when a criterion outside `KNOWN_UNATTAINABLE`
//! fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use extremal_ellipsoids::certify::{
    certify_ce_points, certify_cone_ce, certify_ie, certify_slab_ce, certify_slab_ie, breadth_diameter,
    john_factors, CertKind,
};
use extremal_ellipsoids::cutting::{central_cut_step, parallel_cut_step};
use extremal_ellipsoids::slab::{
    ce_cone, ce_slab, ie_slab, ie_slab_with_threshold, AxialEllipsoidParams, IeThreshold, SlabSpec,
};
use extremal_ellipsoids::solve::{grid_oracle_slab, mvee_points, mvie_polytope, OracleProblem, SolverConfig};
use extremal_ellipsoids::symmetry::{invariant_shape, FiniteGroup};
use extremal_ellipsoids::{AffineMap, Ellipsoid, Halfspace, Polytope};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: usize = 15;
const DIMS: [usize; 3] = [2, 3, 5];
const ORACLE_RESOLUTION: usize = 512;
const ORACLE_TOL: f64 = 1e-4;
const GRID_BUDGET_SECS: f64 = 60.0;
const CERT_TOL: f64 = 1e-8;
const BALL_TOL: f64 = 1e-3;
const JOHN_TOL: f64 = 1e-8;
const DUALITY_TOL: f64 = 1e-5;
const SYMMETRY_TOL: f64 = 1e-6;
const CUT_TOL: f64 = 1e-10;
const BREADTH_TOL: f64 = 1e-6;
/// Solver gap target for criteria checked at 1e-8; the default 1e-7 leaves
/// residuals of that order.
const SOLVER_EPS: f64 = 1e-10;

/// Criteria that fail for mathematical reasons; see the decisions ledger.
const KNOWN_UNATTAINABLE: [usize; 1] = [5];

type Criterion = (usize, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Normalized slab bounds on a 15-point grid of `[−1, 1]`.
fn grid() -> Vec<(f64, f64)> {
    let v: Vec<f64> = (0..GRID).map(|i| -1.0 + 2.0 * i as f64 / (GRID - 1) as f64).collect();
    let mut out = Vec::new();
    for (i, &al) in v.iter().enumerate() {
        for &be in &v[i + 1..] {
            if be * be >= al * al {
                out.push((al, be));
            }
        }
    }
    out
}

fn triple_diff(p: &AxialEllipsoidParams, q: &AxialEllipsoidParams) -> f64 {
    (p.tau - q.tau).abs().max((p.a - q.a).abs()).max((p.b - q.b).abs())
}

/// Worst closed-form versus oracle discrepancy over the grid.
fn grid_worst(
    problem: OracleProblem,
    closed: impl Fn(&SlabSpec) -> AxialEllipsoidParams,
    skip: impl Fn(f64, f64) -> bool,
) -> (f64, usize, String) {
    let mut worst = (0.0, String::new());
    let mut count = 0;
    for n in DIMS {
        for (al, be) in grid() {
            if skip(al, be) {
                continue;
            }
            let s = SlabSpec::new(n, al, be).expect("grid point is valid");
            let oracle = grid_oracle_slab(&s, problem, ORACLE_RESOLUTION).expect("oracle runs");
            let d = triple_diff(&closed(&s), &oracle);
            count += 1;
            if d > worst.0 {
                worst = (d, format!("n={n} alpha={al:.4} beta={be:.4}"));
            }
        }
    }
    (worst.0, count, worst.1)
}

fn segment(al: f64, be: f64) -> bool {
    al <= -1.0 && be >= 1.0
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let (worst, count, at) = grid_worst(OracleProblem::Ce, |s| ce_slab(s).expect("ce_slab"), |_, _| false);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= ORACLE_TOL && secs < GRID_BUDGET_SECS,
        format!("{count} instances, worst {worst:.2e} at {at}, {secs:.1} s"),
    )
}

fn criterion_2() -> Verdict {
    let mut worst = [0.0f64; 2];
    let mut mismatches = [0usize; 2];
    let mut count = 0;
    for n in DIMS {
        for (al, be) in grid() {
            let s = SlabSpec::new(n, al, be).expect("grid point is valid");
            let oracle = grid_oracle_slab(&s, OracleProblem::Ie, ORACLE_RESOLUTION).expect("oracle runs");
            for (k, t) in [IeThreshold::Squared, IeThreshold::Linear].into_iter().enumerate() {
                let d = triple_diff(&ie_slab_with_threshold(&s, t).0, &oracle);
                worst[k] = worst[k].max(d);
                if d > ORACLE_TOL {
                    mismatches[k] += 1;
                }
            }
            debug_assert_eq!(ie_slab(&s), ie_slab_with_threshold(&s, IeThreshold::Squared).0);
            count += 1;
        }
    }
    let supported = match (mismatches[0], mismatches[1]) {
        (0, m) if m > 0 => "(n+1)^2",
        (m, 0) if m > 0 => "(n+1)",
        (0, 0) => "both",
        _ => "neither",
    };
    verdict(
        worst[0] <= ORACLE_TOL && supported == "(n+1)^2",
        format!(
            "{count} instances, worst {:.2e}; oracle supports threshold {supported} \
             (squared: {} mismatches, linear: {} mismatches, worst {:.2e})",
            worst[0], mismatches[0], mismatches[1], worst[1]
        ),
    )
}

fn criterion_3() -> Verdict {
    let (worst, count, at) = grid_worst(OracleProblem::Cone, |s| ce_cone(s).expect("ce_cone"), segment);
    verdict(worst <= ORACLE_TOL, format!("{count} instances (segment excluded), worst {worst:.2e} at {at}"))
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<DVector<f64>> {
    let t = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.5..0.5));
    (0..m)
        .map(|_| &t * DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect()
}

fn symmetric_points(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<DVector<f64>> {
    let half = random_points(rng, n, m);
    half.iter().cloned().chain(half.iter().map(|p| -p)).collect()
}

/// Random bounded H-polytope: tangent planes to the unit sphere at random
/// directions, plus the cube to guarantee boundedness.
fn random_halfspaces(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Polytope {
    let mut h: Vec<Halfspace> = (0..m)
        .map(|_| {
            let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            Halfspace::new(d.normalize(), rng.gen_range(0.5..1.5))
        })
        .collect();
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut d = DVector::zeros(n);
            d[k] = s;
            h.push(Halfspace::new(d, 2.0));
        }
    }
    Polytope::from_halfspaces(h).expect("bounded polytope")
}

fn criterion_4() -> Verdict {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for n in DIMS {
        for (al, be) in grid() {
            let s = SlabSpec::new(n, al, be).expect("grid point is valid");
            let mut runs = vec![
                ("ce_slab", certify_slab_ce(&s, &ce_slab(&s).expect("ce_slab"), CERT_TOL)),
                ("ie_slab", certify_slab_ie(&s, &ie_slab(&s), CERT_TOL)),
            ];
            if !segment(al, be) {
                runs.push(("ce_cone", certify_cone_ce(&s, &ce_cone(&s).expect("ce_cone"), CERT_TOL)));
            }
            for (name, r) in runs {
                checked += 1;
                match r {
                    Ok(r) if r.passed => worst = worst.max(r.residuals.max_equation()),
                    _ => failures.push(format!("{name} n={n} ({al:.3},{be:.3})")),
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = SolverConfig::with_eps(SOLVER_EPS);
    for n in 2..=4 {
        for trial in 0..5 {
            let pts = random_points(&mut rng, n, 10 + 5 * trial);
            let (e, _) = mvee_points(&pts, &cfg).expect("mvee");
            checked += 1;
            match certify_ce_points(&pts, &e, CERT_TOL) {
                Ok(r) if r.passed => worst = worst.max(r.residuals.max_equation()),
                _ => failures.push(format!("mvee n={n} trial={trial}")),
            }
            let body = random_halfspaces(&mut rng, n, 6 + 2 * trial);
            let (e, _) = mvie_polytope(&body, &cfg).expect("mvie");
            checked += 1;
            match certify_ie(&body, &e, CERT_TOL) {
                Ok(r) if r.passed => worst = worst.max(r.residuals.max_equation()),
                _ => failures.push(format!("mvie n={n} trial={trial}")),
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("{checked} certificates, worst equation residual {worst:.2e}, failures {failures:?}"),
    )
}

fn criterion_5() -> Verdict {
    let n = 2;
    let edge = 1.0 / 2f64.sqrt();
    let inside = SlabSpec::new(n, -(edge - 1e-6), edge - 1e-6).expect("valid");
    let p = ce_slab(&inside).expect("ce_slab");
    let near_ball = p.tau.abs().max((p.a - 1.0).abs()).max((p.b - 1.0).abs());
    let outside = SlabSpec::new(n, -(edge + 1e-3), edge + 1e-3).expect("valid");
    let ratio = ce_slab(&outside).expect("ce_slab").volume_ratio();
    let first = near_ball <= BALL_TOL;
    let second = ratio < 1.0;
    verdict(
        first && second,
        format!(
            "beta=1/sqrt2-1e-6: distance to ball {near_ball:.2e} ({}); \
             beta=1/sqrt2+1e-3: volume ratio {ratio} ({}), alpha*beta={:.6} < -1/n so the \
             circumscribed ellipsoid is the unit ball itself",
            if first { "ok" } else { "too far" },
            if second { "smaller" } else { "not smaller" },
            outside.alpha * outside.beta
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = SolverConfig::with_eps(SOLVER_EPS);
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut record = |label: String, r: extremal_ellipsoids::certify::JohnReport| {
        worst = worst.max(r.worst_violation);
        if !r.passed {
            violations.push(label);
        }
    };
    for n in [2, 3] {
        for trial in 0..50 {
            let pts = random_points(&mut rng, n, n + 2 + trial % 12);
            let body = Polytope::from_vertices(pts.clone()).expect("polytope");
            let (e, _) = mvee_points(&pts, &cfg).expect("mvee");
            record(format!("ce n={n} #{trial}"), john_factors(&body, &e, CertKind::Ce, false, JOHN_TOL).expect("john"));

            let pts = symmetric_points(&mut rng, n, n + 1 + trial % 6);
            let body = Polytope::from_vertices(pts.clone()).expect("polytope");
            let (e, _) = mvee_points(&pts, &cfg).expect("mvee");
            record(format!("sym ce n={n} #{trial}"), john_factors(&body, &e, CertKind::Ce, true, JOHN_TOL).expect("john"));
            let h = Polytope::from_halfspaces(body.to_halfspaces().expect("facets")).expect("polytope");
            let (e, _) = mvie_polytope(&h, &cfg).expect("mvie");
            record(format!("sym ie n={n} #{trial}"), john_factors(&body, &e, CertKind::Ie, true, JOHN_TOL).expect("john"));
        }
    }
    verdict(
        violations.is_empty(),
        format!("300 checks in R^2 and R^3, worst normalized violation {worst:.3}, violations {violations:?}"),
    )
}

/// The affine map `x ↦ Lᵀ(x − c)` taking `e` to the unit ball.
fn normalizer(e: &Ellipsoid) -> AffineMap {
    let lt = e.cholesky().transpose();
    let offset = -(&lt * e.center());
    AffineMap::new(lt, offset).expect("invertible")
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig::with_eps(SOLVER_EPS);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 2 + trial % 3;
        let pts = random_points(&mut rng, n, 3 * n + trial);
        let (e, cert) = mvee_points(&pts, &cfg).expect("mvee");
        let t = normalizer(&e);
        let facets = cert
            .contacts
            .iter()
            .map(|u| Halfspace::new(t.apply(u), 1.0))
            .collect();
        let polar = Polytope::from_halfspaces(facets).expect("polar of contacts");
        let (ie, _) = mvie_polytope(&polar, &cfg).expect("mvie");
        let d = (ie.shape() - DMatrix::<f64>::identity(n, n)).abs().max().max(ie.center().abs().max());
        worst = worst.max(d);
    }
    verdict(worst <= DUALITY_TOL, format!("20 point sets in R^2..R^4, worst deviation from B_n {worst:.2e}"))
}

fn criterion_8() -> Verdict {
    let cfg = SolverConfig::with_eps(SOLVER_EPS);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let g = FiniteGroup::signed_permutations(n).expect("group");
        let zero = DVector::zeros(n);
        let bodies = [
            (DVector::from_element(n, 1.0), Polytope::cube_vertices(n, 1.0), 1.0 / n as f64),
            (DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 }), Polytope::cross_polytope_vertices(n, 1.0), 1.0),
        ];
        for (x, body, expected) in bodies {
            let shape = invariant_shape(&g, &x, &zero).expect("shape");
            let exact = (&shape - DMatrix::identity(n, n) * expected).abs().max();
            let pts = body.vertices().expect("vertices");
            let (e, _) = mvee_points(pts, &cfg).expect("mvee");
            let solved = (&shape - e.shape()).abs().max().max(e.center().abs().max());
            worst = worst.max(exact).max(solved);
        }
    }
    verdict(worst <= SYMMETRY_TOL, format!("cube and cross-polytope, n=1..3, worst {worst:.2e}"))
}

fn criterion_9() -> Verdict {
    let mut worst = 0.0f64;
    for n in 2..=10 {
        let nf = n as f64;
        let ball = Ellipsoid::unit_ball(n);
        let mut p = DVector::zeros(n);
        p[0] = 1.0;
        let (e, rec) = central_cut_step(&ball, &p).expect("central cut");
        let along = nf / (nf + 1.0);
        let across = nf / (nf * nf - 1.0).sqrt();
        let ratio = along * across.powi(n as i32 - 1);
        let mut expected = DMatrix::identity(n, n) / (across * across);
        expected[(0, 0)] = 1.0 / (along * along);
        let mut center = DVector::zeros(n);
        center[0] = -1.0 / (nf + 1.0);
        let (_, parallel) = parallel_cut_step(&ball, &p, -1.0, 0.0).expect("parallel cut");
        worst = worst
            .max((e.center() - &center).abs().max())
            .max((e.shape() - &expected).abs().max() / expected.abs().max())
            .max((rec.ratio - ratio).abs())
            .max((e.volume() / ball.volume() - ratio).abs())
            .max((parallel.ratio - rec.ratio).abs());
    }
    verdict(worst <= CUT_TOL, format!("n=2..10, worst deviation {worst:.2e}"))
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = SolverConfig::with_eps(SOLVER_EPS);
    let mut min_slack = f64::INFINITY;
    let mut failures = 0;
    for trial in 0..50 {
        let n = 2 + trial % 3;
        let pts = random_points(&mut rng, n, n + 2 + trial % 10);
        let (e, _) = mvee_points(&pts, &cfg).expect("mvee");
        let t = normalizer(&e);
        let body = Polytope::from_vertices(pts.iter().map(|p| t.apply(p)).collect()).expect("polytope");
        let r = breadth_diameter(&body, BREADTH_TOL).expect("breadth");
        min_slack = min_slack.min(r.breadth - r.bound);
        failures += usize::from(!r.passed);
    }
    verdict(failures == 0, format!("50 polytopes in R^2..R^4, smallest breadth minus bound {min_slack:.4}"))
}

fn run(bin: &str, args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(bin).args(args).output().expect("binary runs");
    let mut bytes = out.stdout;
    bytes.extend_from_slice(&out.stderr);
    (bytes, out.status.code().unwrap_or(-1))
}

fn criterion_11() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_extremal");
    let dir = tempfile::tempdir().expect("temp dir");
    let file = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).expect("write input");
        p.to_string_lossy().into_owned()
    };
    let points = file("points.json", "[[0,0],[2,0.3],[1,1.7],[-0.4,1.1],[0.7,-0.6]]");
    let halfspaces = file("h.json", "[[1,0,1],[-1,0,1],[0,1,1],[0,-1,1],[1,1,1.5]]");
    let cert = file(
        "cert.json",
        r#"{"ellipsoid": {"dim": 2, "center": [0, 0], "shape": [[0.5, 0], [0, 0.5]]}, "points": [[1,1],[1,-1],[-1,1],[-1,-1]]}"#,
    );
    let cut = file("cut.json", r#"{"constraints": [[1,1,1],[-1,0,-0.2],[0,-1,-0.2]], "radius": 10}"#);
    let sym = file("sym.json", r#"{"group": {"builtin": "dihedral-5", "dim": 2}, "point": [1, 0.3]}"#);
    let plot = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (p1, p2, t1) = (plot("slab.csv"), plot("mvee.csv"), plot("trace.jsonl"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["slab-ce", "--dim", "3", "--alpha", "0.1", "--beta", "0.9", "--oracle"],
        vec!["slab-ie", "--dim", "2", "--alpha", "-0.2", "--beta", "0.95", "--plot", &p1],
        vec!["cone-ce", "--dim", "3", "--alpha", "0.2", "--beta", "0.8"],
        vec!["mvee", "--input", &points, "--plot", &p2],
        vec!["mvie", "--input", &halfspaces],
        vec!["certify", "--input", &cert],
        vec!["cut-solve", "--input", &cut, "--trace", &t1],
        vec!["symmetry", "--input", &sym],
        vec!["symmetry", "--group", "signed-permutations", "--dim", "3", "--point", "1,1,1"],
        vec!["oracle", "--dim", "2", "--alpha", "-0.5", "--beta", "0.5", "--problem", "ie"],
        vec!["slab-ce", "--dim", "2", "--alpha", "0.5", "--beta", "0.1"],
        vec!["frobnicate"],
    ];
    let side_files = [&p1, &p2, &t1];
    let read_side = || side_files.iter().map(|p| std::fs::read(p).unwrap_or_default()).collect::<Vec<_>>();
    let mut differing = Vec::new();
    let mut outputs = Vec::new();
    for round in 0..2 {
        let results: Vec<_> = commands.iter().map(|c| run(bin, c)).collect();
        outputs.push((results, read_side()));
        if round == 0 {
            for p in side_files {
                let _ = std::fs::remove_file(Path::new(p));
            }
        }
    }
    for (k, c) in commands.iter().enumerate() {
        if outputs[0].0[k] != outputs[1].0[k] {
            differing.push(c[0].to_string());
        }
    }
    if outputs[0].1 != outputs[1].1 {
        differing.push("side files".into());
    }
    let empty_side = outputs[0].1.iter().any(Vec::is_empty);
    verdict(
        differing.is_empty() && !empty_side,
        format!("{} invocations plus plot and trace files, differing {differing:?}", commands.len()),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "closed-form CE slab vs oracle", criterion_1),
        (2, "closed-form IE slab vs oracle", criterion_2),
        (3, "closed-form CE cone vs oracle", criterion_3),
        (4, "Fritz John certification", criterion_4),
        (5, "case (i) threshold", criterion_5),
        (6, "John factors", criterion_6),
        (7, "duality round trip", criterion_7),
        (8, "cube and cross-polytope symmetry", criterion_8),
        (9, "central-cut consistency", criterion_9),
        (10, "breadth bound", criterion_10),
        (11, "CLI determinism", criterion_11),
    ];
    let mut unexpected = Vec::new();
    for (k, name, f) in criteria {
        let start = Instant::now();
        let v = f();
        let known = KNOWN_UNATTAINABLE.contains(&k);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, unattainable as stated)",
            (false, false) => "FAIL",
        };
        println!("criterion {k:>2} {tag}: {name}: {} [{:.1} s]", v.detail, start.elapsed().as_secs_f64());
        if !v.pass && !known {
            unexpected.push(k);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
