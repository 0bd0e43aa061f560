//! `extremal`: closed-form, numerical and certified extremal ellipsoids from
//! the command line. Every command prints one JSON document on stdout.

mod format;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use extremal_ellipsoids::certify::{
    certify_ce_points, certify_cone_ce, certify_ie, certify_slab_ce, certify_slab_ie, CertResult,
    DEFAULT_TOL,
};
use extremal_ellipsoids::cutting::{solve_feasibility, FeasibilityInput, FeasibilityProblem};
use extremal_ellipsoids::io::{parse_group, parse_halfspaces, parse_points};
use extremal_ellipsoids::slab::{
    ce_cone_with_case, ce_slab_with_case, ie_slab_with_case, AxialEllipsoidParams, SlabCase, SlabSpec,
};
use extremal_ellipsoids::solve::{grid_oracle_search, mvee_points, mvie_polytope, OracleProblem, SolverConfig};
use extremal_ellipsoids::symmetry::{
    check_invariant_ellipsoid, invariant_center, invariant_shape, orbit, FiniteGroup,
};
use extremal_ellipsoids::{Ellipsoid, Error, Halfspace, Polytope};
use nalgebra::DVector;
use serde_json::{json, Value};

use plot::Body;

/// Grid resolution of `--oracle` and the `oracle` command.
const ORACLE_RESOLUTION: usize = 512;

#[derive(Parser)]
#[command(name = "extremal", version, about = "Extremal ellipsoids of convex bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum-volume ellipsoid containing the ball slab B_αβ.
    SlabCe(SlabArgs),
    /// Maximum-volume ellipsoid inside the ball slab B_αβ.
    SlabIe(SlabArgs),
    /// Minimum-volume ellipsoid containing the truncated cone Q_αβ.
    ConeCe(SlabArgs),
    /// Minimum-volume ellipsoid containing a point set.
    Mvee(InputArgs),
    /// Maximum-volume ellipsoid inside an inequality polytope.
    Mvie(InputArgs),
    /// Check the optimality certificate of a given ellipsoid.
    Certify(InputArgs),
    /// Ellipsoid method for a system of linear inequalities.
    CutSolve(CutArgs),
    /// Orbit and invariant ellipsoid of a point under a finite group.
    Symmetry(SymmetryArgs),
    /// Brute-force grid search for the axial extremal ellipsoid.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = SolverConfig::default().eps)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// CSV polyline of the body and the ellipse (planar instances).
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SlabArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Also run the grid oracle and report the discrepancy.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CutArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Write one JSON line per cut to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SymmetryArgs {
    /// JSON `{"group": ..., "point": [...]}`.
    #[arg(long, required_unless_present = "group")]
    input: Option<PathBuf>,
    /// Built-in group name, used with `--dim` and `--point`.
    #[arg(long, conflicts_with = "input", requires_all = ["dim", "point"])]
    group: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    point: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Ce,
    Ie,
    Cone,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = ProblemArg::Ce)]
    problem: ProblemArg,
    #[arg(long, default_value_t = ORACLE_RESOLUTION)]
    resolution: usize,
    #[command(flatten)]
    common: Common,
}

/// Failure with a machine-readable code and an exit status.
struct Failure {
    code: &'static str,
    message: String,
    status: u8,
}

impl Failure {
    fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), status: 2 }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, status) = match &e {
            Error::Unconverged { .. } => ("unconverged", 1),
            Error::NotOptimal(_) => ("not_optimal", 1),
            Error::Parse(_) => ("malformed_input", 2),
            Error::DimensionMismatch { .. } => ("dimension_mismatch", 2),
            Error::InvalidDimension(_) => ("invalid_dimension", 2),
            Error::InvalidParameter(_) => ("invalid_parameter", 2),
            Error::InvalidDirection => ("invalid_direction", 2),
            Error::InvalidEllipsoid(_) => ("invalid_ellipsoid", 2),
            Error::EmptyBody => ("empty_body", 2),
            Error::EmptySlab => ("empty_slab", 2),
            Error::InvalidBody(_) => ("invalid_body", 2),
            Error::DegenerateInput(_) => ("degenerate_input", 2),
            Error::SingularMap | Error::SingularShape => ("singular", 2),
            Error::NotAGroup(_) => ("not_a_group", 2),
            Error::NotNonnegative(_) => ("not_nonnegative", 2),
            Error::Io(_) => ("io_error", 2),
        };
        Self { code, message: e.to_string(), status }
    }
}

type Outcome = Result<Value, Failure>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output types serialize")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage("io_error", format!("{}: {e}", path.display())))
}

fn json_input(text: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::usage("malformed_input", e.to_string()))
}

fn config(c: &Common) -> Result<SolverConfig, Failure> {
    let cfg = SolverConfig { eps: c.eps, seed: c.seed, ..SolverConfig::default() };
    cfg.validate()?;
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        return Err(Failure::usage("invalid_parameter", format!("tol must be positive, got {}", c.tol)));
    }
    Ok(cfg)
}

fn write_plot(path: &Option<PathBuf>, dim: usize, make: impl FnOnce() -> Result<String, Failure>) -> Result<(), Failure> {
    let Some(path) = path else {
        return Ok(());
    };
    if dim != 2 {
        return Err(Failure::usage("plot_requires_2d", format!("--plot needs a planar instance, got dimension {dim}")));
    }
    let text = make()?;
    fs::write(path, text).map_err(|e| Failure::usage("io_error", format!("{}: {e}", path.display())))
}

/// `lo ≤ x₁ ≤ hi` as two halfspaces.
fn axial_bounds(lo: f64, hi: f64) -> Vec<Halfspace> {
    vec![
        Halfspace::new(DVector::from_row_slice(&[1.0, 0.0]), hi),
        Halfspace::new(DVector::from_row_slice(&[-1.0, 0.0]), -lo),
    ]
}

/// Ellipsoid and contacts brought back to the frame of the requested bounds.
fn unreflect(spec: &SlabSpec, p: &AxialEllipsoidParams, cert: &CertResult) -> Result<(Ellipsoid, Vec<DVector<f64>>), Failure> {
    let e = p.to_ellipsoid()?;
    if !spec.reflected {
        return Ok((e, cert.certificate.contacts.clone()));
    }
    let r = SlabSpec::reflection(spec.dim);
    let e = extremal_ellipsoids::map_ellipsoid(&r, &e)?;
    Ok((e, cert.certificate.contacts.iter().map(|c| r.apply(c)).collect()))
}

#[derive(Clone, Copy, PartialEq)]
enum SlabKind {
    Ce,
    Ie,
    Cone,
}

fn slab_command(args: &SlabArgs, kind: SlabKind) -> Outcome {
    config(&args.common)?;
    let spec = SlabSpec::new(args.dim, args.alpha, args.beta)?;
    let tol = args.common.tol;
    let (params, case, cert, problem): (AxialEllipsoidParams, SlabCase, CertResult, OracleProblem) = match kind {
        SlabKind::Ce => {
            let (p, case) = ce_slab_with_case(&spec)?;
            (p, case, certify_slab_ce(&spec, &p, tol)?, OracleProblem::Ce)
        }
        SlabKind::Ie => {
            let (p, case) = ie_slab_with_case(&spec);
            (p, case, certify_slab_ie(&spec, &p, tol)?, OracleProblem::Ie)
        }
        SlabKind::Cone => {
            let (p, case) = ce_cone_with_case(&spec)?;
            (p, case, certify_cone_ce(&spec, &p, tol)?, OracleProblem::Cone)
        }
    };
    let mut out = json!({
        "tau": params.tau,
        "a": params.a,
        "b": params.b,
        "case": case.as_str(),
        "form": params.form,
        "dim": spec.dim,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "reflected": spec.reflected,
        "volume_ratio": params.volume_ratio(),
        "certificate": to_value(&cert),
    });
    if args.oracle {
        let report = grid_oracle_search(&spec, problem, ORACLE_RESOLUTION)?;
        out["oracle"] = json!({"tau": report.refined.tau, "a": report.refined.a, "b": report.refined.b});
        out["discrepancy"] = json!(params.max_abs_diff(&report.refined));
    }
    write_plot(&args.common.plot, spec.dim, || {
        let (e, contacts) = unreflect(&spec, &params, &cert)?;
        let (lo, hi) = if spec.reflected { (-spec.beta, -spec.alpha) } else { (spec.alpha, spec.beta) };
        let body = match kind {
            SlabKind::Cone => {
                // Trapezoid through the four rim points.
                let rim = |y: f64| (1.0 - y * y).max(0.0).sqrt();
                let (rl, rh) = (rim(lo), rim(hi));
                let slope = (rh - rl) / (hi - lo);
                let side = |s: f64| {
                    let n = DVector::from_row_slice(&[-s * slope, s]);
                    let off = n.dot(&DVector::from_row_slice(&[lo, s * rl]));
                    Halfspace::new(n, off)
                };
                let mut facets = axial_bounds(lo, hi);
                facets.extend([side(1.0), side(-1.0)]);
                Body { facets, disc: false, interior: DVector::from_row_slice(&[0.5 * (lo + hi), 0.0]) }
            }
            _ => Body {
                facets: axial_bounds(lo, hi),
                disc: true,
                interior: DVector::from_row_slice(&[0.5 * (lo + hi), 0.0]),
            },
        };
        Ok(plot::csv(&body, &e, &contacts))
    })?;
    Ok(out)
}

fn ellipsoid_value(e: &Ellipsoid) -> Value {
    json!({"ellipsoid": to_value(e), "volume": e.volume()})
}

/// Certificates of solver output are checked at no less than `10·eps`.
fn solver_tol(c: &Common) -> f64 {
    c.tol.max(10.0 * c.eps)
}

fn mvee_command(args: &InputArgs) -> Outcome {
    let cfg = config(&args.common)?;
    let points = parse_points(&read(&args.input)?)?;
    let (e, _) = mvee_points(&points, &cfg)?;
    let cert = certify_ce_points(&points, &e, solver_tol(&args.common))?;
    let mut out = ellipsoid_value(&e);
    out["certificate"] = to_value(&cert);
    write_plot(&args.common.plot, e.dim(), || {
        let facets = Polytope::from_vertices(points.clone())?.to_halfspaces()?;
        let body = Body { facets, disc: false, interior: e.center().clone() };
        Ok(plot::csv(&body, &e, &cert.certificate.contacts))
    })?;
    Ok(out)
}

fn mvie_command(args: &InputArgs) -> Outcome {
    let cfg = config(&args.common)?;
    let facets = parse_halfspaces(&read(&args.input)?)?;
    let body = Polytope::from_halfspaces(facets.clone())?;
    let (e, _) = mvie_polytope(&body, &cfg)?;
    let cert = certify_ie(&body, &e, solver_tol(&args.common))?;
    let mut out = ellipsoid_value(&e);
    out["certificate"] = to_value(&cert);
    write_plot(&args.common.plot, e.dim(), || {
        let body = Body { facets, disc: false, interior: e.center().clone() };
        Ok(plot::csv(&body, &e, &cert.certificate.contacts))
    })?;
    Ok(out)
}

fn certify_command(args: &InputArgs) -> Outcome {
    config(&args.common)?;
    let mut v = json_input(&read(&args.input)?)?;
    let e_value = v.get_mut("ellipsoid").map(Value::take).ok_or_else(|| Failure::usage("malformed_input", "missing \"ellipsoid\""))?;
    let e: Ellipsoid = serde_json::from_value(e_value).map_err(|err| {
        let msg = err.to_string();
        if msg.contains("dimension mismatch") {
            Failure::usage("dimension_mismatch", msg)
        } else if msg.contains("invalid ellipsoid") {
            Failure::usage("invalid_ellipsoid", msg)
        } else {
            Failure::usage("malformed_input", msg)
        }
    })?;
    let tol = args.common.tol;
    let (kind, cert) = if let Some(points) = v.get("points") {
        let points = parse_points(&points.to_string())?;
        ("ce", certify_ce_points(&points, &e, tol)?)
    } else if let Some(h) = v.get("halfspaces") {
        let body = Polytope::from_halfspaces(parse_halfspaces(&h.to_string())?)?;
        ("ie", certify_ie(&body, &e, tol)?)
    } else {
        return Err(Failure::usage("malformed_input", "expected \"points\" or \"halfspaces\""));
    };
    let mut out = to_value(&cert);
    out["kind"] = json!(kind);
    Ok(out)
}

fn cut_command(args: &CutArgs) -> Outcome {
    config(&args.common)?;
    let v = json_input(&read(&args.input)?)?;
    let constraints = v.get("constraints").ok_or_else(|| Failure::usage("malformed_input", "missing \"constraints\""))?;
    let field = |key: &str| -> Result<Option<f64>, Failure> {
        match v.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(x) => x.as_f64().map(Some).ok_or_else(|| Failure::usage("malformed_input", format!("\"{key}\" must be a number"))),
        }
    };
    let initial = match v.get("initial") {
        None | Some(Value::Null) => None,
        Some(e) => Some(serde_json::from_value::<Ellipsoid>(e.clone()).map_err(|err| {
            let msg = err.to_string();
            let code = if msg.contains("dimension mismatch") { "dimension_mismatch" } else { "malformed_input" };
            Failure::usage(code, msg)
        })?),
    };
    let input = FeasibilityInput {
        constraints: parse_halfspaces(&constraints.to_string())?,
        initial,
        radius: field("radius")?,
        volume_floor: field("volume_floor")?,
    };
    let problem = FeasibilityProblem::from_input(input, args.common.tol)?;
    let report = solve_feasibility(&problem, args.max_iter)?;
    if let Some(path) = &args.trace {
        let text: String = report.trace.iter().map(|r| format::render(&to_value(r)) + "\n").collect();
        fs::write(path, text).map_err(|e| Failure::usage("io_error", format!("{}: {e}", path.display())))?;
    }
    let mut out = to_value(&report.outcome);
    out["iterations"] = json!(report.iterations);
    out["ellipsoid"] = to_value(&report.ellipsoid);
    out["volume"] = json!(report.ellipsoid.volume());
    out["cuts"] = json!(report.trace.len());
    write_plot(&args.common.plot, report.ellipsoid.dim(), || {
        let body = Body {
            facets: problem.oracle.constraints().to_vec(),
            disc: false,
            interior: report.ellipsoid.center().clone(),
        };
        Ok(plot::csv(&body, &report.ellipsoid, &[]))
    })?;
    Ok(out)
}

fn symmetry_command(args: &SymmetryArgs) -> Outcome {
    config(&args.common)?;
    let (group, point) = match (&args.input, &args.group) {
        (Some(path), _) => {
            let v = json_input(&read(path)?)?;
            let g = v.get("group").ok_or_else(|| Failure::usage("malformed_input", "missing \"group\""))?;
            let p = v.get("point").ok_or_else(|| Failure::usage("malformed_input", "missing \"point\""))?;
            let point: Vec<f64> =
                serde_json::from_value(p.clone()).map_err(|e| Failure::usage("malformed_input", e.to_string()))?;
            (parse_group(&g.to_string())?, point)
        }
        (None, Some(name)) => {
            let dim = args.dim.expect("clap requires --dim");
            (FiniteGroup::builtin(name, dim)?, args.point.clone().expect("clap requires --point"))
        }
        (None, None) => unreachable!("clap requires --input or --group"),
    };
    let x = DVector::from_vec(point);
    let orb = orbit(&group, &x)?;
    let c = invariant_center(&group, &x)?;
    let mut out = json!({
        "order": group.order(),
        "orbit": orb.iter().map(|p| p.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "center": c.iter().copied().collect::<Vec<_>>(),
    });
    match invariant_shape(&group, &x, &c) {
        Ok(shape) => {
            let e = Ellipsoid::from_computed(c, shape)?;
            let cert = certify_ce_points(&orb, &e, args.common.tol)?;
            out["ellipsoid"] = to_value(&e);
            out["invariant"] = json!(check_invariant_ellipsoid(&group, &e)?);
            out["certificate"] = to_value(&cert);
            write_plot(&args.common.plot, e.dim(), || {
                let facets = Polytope::from_vertices(orb.clone())?.to_halfspaces()?;
                let body = Body { facets, disc: false, interior: e.center().clone() };
                Ok(plot::csv(&body, &e, &cert.certificate.contacts))
            })?;
        }
        Err(Error::SingularShape) => {
            out["ellipsoid"] = Value::Null;
            if args.common.plot.is_some() {
                return Err(Error::SingularShape.into());
            }
        }
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn oracle_command(args: &OracleArgs) -> Outcome {
    config(&args.common)?;
    let spec = SlabSpec::new(args.dim, args.alpha, args.beta)?;
    let (problem, closed) = match args.problem {
        ProblemArg::Ce => (OracleProblem::Ce, ce_slab_with_case(&spec)?.0),
        ProblemArg::Ie => (OracleProblem::Ie, ie_slab_with_case(&spec).0),
        ProblemArg::Cone => (OracleProblem::Cone, ce_cone_with_case(&spec)?.0),
    };
    let report = grid_oracle_search(&spec, problem, args.resolution)?;
    let triple = |p: &AxialEllipsoidParams| json!({"tau": p.tau, "a": p.a, "b": p.b});
    if args.common.plot.is_some() {
        return Err(Failure::usage("plot_unsupported", "--plot is not available for this command"));
    }
    Ok(json!({
        "problem": problem,
        "resolution": args.resolution,
        "form": report.refined.form,
        "coarse": triple(&report.coarse),
        "refined": triple(&report.refined),
        "objective": report.objective,
        "closed_form": triple(&closed),
        "discrepancy": closed.max_abs_diff(&report.refined),
    }))
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::SlabCe(a) => slab_command(a, SlabKind::Ce),
        Command::SlabIe(a) => slab_command(a, SlabKind::Ie),
        Command::ConeCe(a) => slab_command(a, SlabKind::Cone),
        Command::Mvee(a) => mvee_command(a),
        Command::Mvie(a) => mvie_command(a),
        Command::Certify(a) => certify_command(a),
        Command::CutSolve(a) => cut_command(a),
        Command::Symmetry(a) => symmetry_command(a),
        Command::Oracle(a) => oracle_command(a),
    }
}

fn emit_error(f: &Failure) -> ExitCode {
    let v = json!({"error": {"code": f.code, "message": f.message}});
    println!("{}", format::render(&v));
    ExitCode::from(f.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                ErrorKind::UnknownArgument => "unknown_flag",
                ErrorKind::InvalidSubcommand => "unknown_command",
                ErrorKind::MissingRequiredArgument | ErrorKind::MissingSubcommand => "missing_argument",
                ErrorKind::InvalidValue | ErrorKind::ValueValidation => "invalid_value",
                ErrorKind::ArgumentConflict => "argument_conflict",
                _ => "invalid_arguments",
            };
            let message = e.render().to_string();
            let message = message.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            return emit_error(&Failure::usage(code, message));
        }
    };
    match run(&cli) {
        Ok(v) => {
            println!("{}", format::render(&v));
            // An exhausted cut budget is a non-convergence, reported with
            // the partial result.
            if v.get("status").and_then(Value::as_str) == Some("budget") {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => emit_error(&f),
    }
}
