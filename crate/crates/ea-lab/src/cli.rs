//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a computation or verification fails,
//! 2 on usage errors (bad flags, unreadable or malformed input files).
//! All JSON output is a deterministic function of the configuration and
//! seed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::Builtin;
use crate::error::{Error, Result};
use crate::flow::geodesic_field;
use crate::flow::integrate::{integrate_geodesic, IntegrationOptions};
use crate::flow::sphere::{classify_sphere_orbit, OrbitClass, OrbitOptions, SphereOrbit};
use crate::io;
use crate::lattice::{build_gamma, certify, enumerate_candidates};
use crate::linalg::Vector;
use crate::metric::MetricAlgebra;
use crate::scalar::Rational;
use crate::solver::{
    completeness_classify, find_special_directions, Completeness, CompletenessOptions,
    SolverOptions,
};

#[derive(Parser)]
#[command(
    name = "ea-lab",
    version,
    about = "Geodesic flows of left-invariant metrics on low-dimensional Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Builtin algebra (sl2, sol, euc, sol_euc) or path to an algebra JSON
    /// file; a positional algebra argument takes precedence.
    #[arg(long, global = true)]
    algebra: Option<String>,
    /// Path to a metric JSON file. Builtin algebras default to their
    /// standard pairing; file algebras require this flag.
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Integrator error tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Integration horizon.
    #[arg(long, global = true, default_value_t = 100.0)]
    horizon: f64,
    /// Seed for all randomized starts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multistart density for the direction survey and orbit count for the
    /// sphere portrait.
    #[arg(long = "grid-density", global = true, default_value_t = 64)]
    grid_density: usize,
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print dimension, basis, brackets, and pairing of an algebra.
    Info { algebra: Option<String> },
    /// Print the metric adjoint matrix ad* of each basis vector.
    Adstar { algebra: Option<String> },
    /// Evaluate the geodesic field exactly at a rational point.
    Field {
        algebra: Option<String>,
        /// Comma-separated rational coordinates, e.g. 1,-1/2,3.
        #[arg(long)]
        at: String,
    },
    /// Integrate a geodesic and emit t,x,q rows as CSV.
    Integrate {
        algebra: Option<String>,
        /// Comma-separated rational coordinates of the initial vector.
        #[arg(long)]
        at: String,
    },
    /// Survey constant and radial directions on the unit sphere.
    Radial { algebra: Option<String> },
    /// Classify seeded spherized orbits and emit the portrait.
    SphereOrbits { algebra: Option<String> },
    /// Decide completeness of the geodesic through a point.
    Complete {
        algebra: Option<String>,
        /// Comma-separated rational coordinates of the initial vector.
        #[arg(long)]
        at: String,
    },
    /// Run the registered verification checks.
    Verify {
        /// Keep only checks whose id starts with this prefix.
        filter: Option<String>,
    },
    /// Enumerate reciprocal quartics and certify loxodromic lattice data.
    LatticeSearch {
        /// Coefficient bound: scan |a|, |b| up to this value.
        #[arg(default_value_t = 10)]
        bound: i64,
    },
}

/// Parses arguments, runs one command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        // Clap chooses the code: 0 for --help/--version, 2 for usage errors.
        Err(e) => e.exit(),
    };
    if let Err(msg) = apply_thread_cap() {
        eprintln!("error: {msg}");
        return 2;
    }
    match dispatch(&cli.command, &cli.opts) {
        Ok(code) => code,
        Err(e) => {
            report(&e);
            exit_code(&e)
        }
    }
}

/// EA_LAB_THREADS caps the worker pool; unset means the library default.
fn apply_thread_cap() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("EA_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("EA_LAB_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("EA_LAB_THREADS must be a positive integer".to_string());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn report(e: &Error) {
    match e {
        Error::Json(j) => eprintln!("error: malformed JSON at line {}, column {}: {j}", j.line(), j.column()),
        other => eprintln!("error: {other}"),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownBuiltin(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: &Command, opts: &GlobalOpts) -> Result<i32> {
    match cmd {
        Command::Info { algebra } => info(algebra.as_deref(), opts),
        Command::Adstar { algebra } => adstar(algebra.as_deref(), opts),
        Command::Field { algebra, at } => field(algebra.as_deref(), at, opts),
        Command::Integrate { algebra, at } => integrate(algebra.as_deref(), at, opts),
        Command::Radial { algebra } => radial(algebra.as_deref(), opts),
        Command::SphereOrbits { algebra } => sphere_orbits(algebra.as_deref(), opts),
        Command::Complete { algebra, at } => complete(algebra.as_deref(), at, opts),
        Command::Verify { filter } => verify(filter.as_deref(), opts),
        Command::LatticeSearch { bound } => lattice_search(*bound, opts),
    }
}

// ---------------------------------------------------------------------------
// Input loading

/// Algebra plus pairing from the positional argument and global flags.
fn load_setup(positional: Option<&str>, opts: &GlobalOpts) -> Result<MetricAlgebra<Rational>> {
    let source = positional
        .or(opts.algebra.as_deref())
        .ok_or_else(|| Error::InvalidInput("no algebra given; name one or pass --algebra".to_string()))?;
    if let Some(builtin) = Builtin::ALL.iter().find(|b| b.name() == source) {
        return match &opts.metric {
            None => Ok(builtin.metric_algebra()),
            Some(path) => {
                let form = io::load_metric_json(&std::fs::read_to_string(path)?, builtin.algebra().dim())?;
                MetricAlgebra::new(builtin.algebra(), form)
            }
        };
    }
    let algebra = io::load_algebra_json(&std::fs::read_to_string(source)?)?;
    let path = opts.metric.as_ref().ok_or_else(|| {
        Error::InvalidInput("a file algebra needs --metric <pairing.json>".to_string())
    })?;
    let form = io::load_metric_json(&std::fs::read_to_string(path)?, algebra.dim())?;
    MetricAlgebra::new(algebra, form)
}

fn parse_point(at: &str, dim: usize) -> Result<Vector<Rational>> {
    let v = io::parse_rational_vector(at)?;
    if v.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "--at has {} coordinates, the algebra has dimension {dim}",
            v.dim()
        )));
    }
    Ok(v)
}

/// Writes the primary output to --out or stdout.
fn emit(opts: &GlobalOpts, text: &str) -> Result<i32> {
    match &opts.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn fmt_rationals(v: &Vector<Rational>) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

// ---------------------------------------------------------------------------
// info / adstar / field

#[derive(Serialize)]
struct BracketOut {
    i: usize,
    j: usize,
    coeffs: std::collections::BTreeMap<String, String>,
}

#[derive(Serialize)]
struct EntryOut {
    i: usize,
    j: usize,
    value: String,
}

#[derive(Serialize)]
struct InfoOut {
    name: Option<String>,
    dim: usize,
    basis: Vec<String>,
    /// Same shape as the algebra input format, so this round-trips.
    brackets: Vec<BracketOut>,
    /// Same shape as the metric input format.
    metric: Vec<EntryOut>,
    inertia: (usize, usize),
}

fn info_data(ma: &MetricAlgebra<Rational>) -> Result<InfoOut> {
    let alg = ma.algebra();
    let n = alg.dim();
    let mut brackets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut coeffs = std::collections::BTreeMap::new();
            for k in 0..n {
                let c = alg.structure_constant(i, j, k);
                if !num_traits::Zero::is_zero(c) {
                    coeffs.insert(k.to_string(), c.to_string());
                }
            }
            if !coeffs.is_empty() {
                brackets.push(BracketOut { i, j, coeffs });
            }
        }
    }
    let mut metric = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = &ma.form().matrix()[(i, j)];
            if !num_traits::Zero::is_zero(v) {
                metric.push(EntryOut {
                    i,
                    j,
                    value: v.to_string(),
                });
            }
        }
    }
    Ok(InfoOut {
        name: ma.label().map(str::to_string),
        dim: n,
        basis: alg.basis_names().to_vec(),
        brackets,
        metric,
        inertia: ma.form().signature()?,
    })
}

fn info(positional: Option<&str>, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?;
    let data = info_data(&ma)?;
    if opts.json {
        return emit(opts, &pretty(&data));
    }
    let mut text = String::new();
    if let Some(name) = &data.name {
        text.push_str(&format!("algebra: {name} (builtin)\n"));
    }
    text.push_str(&format!("dim: {}\n", data.dim));
    text.push_str(&format!("basis: {}\n", data.basis.join(", ")));
    text.push_str("brackets:\n");
    for b in &data.brackets {
        let terms: Vec<String> = b
            .coeffs
            .iter()
            .map(|(k, c)| {
                let name = &data.basis[k.parse::<usize>().expect("index key")];
                if c == "1" {
                    name.clone()
                } else if c == "-1" {
                    format!("-{name}")
                } else {
                    format!("{c} {name}")
                }
            })
            .collect();
        text.push_str(&format!(
            "  [{}, {}] = {}\n",
            data.basis[b.i],
            data.basis[b.j],
            terms.join(" + ")
        ));
    }
    text.push_str("metric (nonzero pairings):\n");
    for e in &data.metric {
        text.push_str(&format!(
            "  <{}, {}> = {}\n",
            data.basis[e.i], data.basis[e.j], e.value
        ));
    }
    text.push_str(&format!(
        "inertia: ({}, {})\n",
        data.inertia.0, data.inertia.1
    ));
    emit(opts, &text)
}

#[derive(Serialize)]
struct AdstarOut {
    basis: Vec<String>,
    /// Row-major rational entries, one matrix per basis vector.
    matrices: Vec<Vec<Vec<String>>>,
}

fn adstar(positional: Option<&str>, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?;
    let n = ma.dim();
    let matrices: Vec<Vec<Vec<String>>> = (0..n)
        .map(|i| {
            let m = ma.adstar_basis(i);
            (0..n)
                .map(|r| (0..n).map(|c| m[(r, c)].to_string()).collect())
                .collect()
        })
        .collect();
    let data = AdstarOut {
        basis: ma.algebra().basis_names().to_vec(),
        matrices,
    };
    if opts.json {
        return emit(opts, &pretty(&data));
    }
    let mut text = String::new();
    for (name, m) in data.basis.iter().zip(&data.matrices) {
        text.push_str(&format!("ad*_{name}:\n"));
        for row in m {
            text.push_str(&format!("  [{}]\n", row.join(", ")));
        }
    }
    emit(opts, &text)
}

#[derive(Serialize)]
struct FieldOut {
    at: Vec<String>,
    value: Vec<String>,
}

fn field(positional: Option<&str>, at: &str, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?;
    let x = parse_point(at, ma.dim())?;
    let f = geodesic_field(&ma, &x);
    if opts.json {
        let data = FieldOut {
            at: x.iter().map(|c| c.to_string()).collect(),
            value: f.iter().map(|c| c.to_string()).collect(),
        };
        return emit(opts, &pretty(&data));
    }
    emit(opts, &format!("F{} = {}\n", fmt_rationals(&x), fmt_rationals(&f)))
}

// ---------------------------------------------------------------------------
// integrate / radial / sphere-orbits / complete

fn integrate(positional: Option<&str>, at: &str, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?;
    let x0 = parse_point(at, ma.dim())?.map(crate::scalar::Scalar::from_rational);
    let traj = integrate_geodesic(
        &ma.to_float::<f64>(),
        &x0,
        &IntegrationOptions {
            tol: opts.tol,
            horizon: opts.horizon,
        },
    )?;
    if opts.json {
        return emit(opts, &io::trajectory_json(&traj));
    }
    let csv = io::trajectory_csv(&traj);
    if let Some(path) = &opts.out {
        std::fs::write(path, &csv)?;
        let sidecar = format!("{}.meta.json", path.display());
        std::fs::write(sidecar, io::trajectory_sidecar_json(&traj))?;
        Ok(0)
    } else {
        print!("{csv}");
        Ok(0)
    }
}

fn radial(positional: Option<&str>, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?.to_float::<f64>();
    let survey = find_special_directions(
        &ma,
        &SolverOptions {
            grid_density: opts.grid_density,
            seed: opts.seed,
        },
    )?;
    if opts.json {
        return emit(opts, &pretty(&survey.directions));
    }
    let mut text = String::new();
    text.push_str(&format!(
        "{} classes from {} starts ({} converged, {} distinct roots)\n",
        survey.directions.len(),
        survey.starts,
        survey.converged,
        survey.distinct_roots
    ));
    for d in &survey.directions {
        let coords: Vec<String> = d.direction.iter().map(|x| format!("{x:.6}")).collect();
        text.push_str(&format!(
            "  {:?} [{}] lambda={:.6} {:?} residual={:.2e} component={} dim={}{}\n",
            d.kind,
            coords.join(", "),
            d.lambda,
            d.causal,
            d.residual,
            d.component,
            d.component_dim,
            if d.isolated { " isolated" } else { "" },
        ));
    }
    emit(opts, &text)
}

/// Deterministic unit starts for the portrait: Box-Muller over a seeded
/// stream, one start per grid-density unit.
fn seeded_sphere_starts(dim: usize, count: usize, seed: u64) -> Vec<Vector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(count);
    while starts.len() < count {
        let coords: Vec<f64> = (0..dim.div_ceil(2))
            .flat_map(|_| {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let v: f64 = rng.gen();
                let r = (-2.0 * u.ln()).sqrt();
                [r * (std::f64::consts::TAU * v).cos(), r * (std::f64::consts::TAU * v).sin()]
            })
            .take(dim)
            .collect();
        let x = Vector(coords);
        let n = x.norm();
        if n > 1e-6 {
            starts.push(x.scale(&(1.0 / n)));
        }
    }
    starts
}

fn sphere_orbits(positional: Option<&str>, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?.to_float::<f64>();
    let orbit_opts = OrbitOptions {
        horizon: opts.horizon,
        tol: opts.tol,
    };
    let starts = seeded_sphere_starts(ma.dim(), opts.grid_density, opts.seed);
    let orbits: Vec<SphereOrbit<f64>> = starts
        .iter()
        .map(|u| classify_sphere_orbit(&ma, u, &orbit_opts))
        .collect::<Result<_>>()?;
    if opts.json {
        return emit(opts, &io::sphere_portrait_json(&orbits));
    }
    let mut fixed = 0usize;
    let mut converges = 0usize;
    let mut closed = 0usize;
    let mut unresolved = 0usize;
    for o in &orbits {
        match o.verdict.class {
            OrbitClass::FixedPoint { .. } => fixed += 1,
            OrbitClass::ConvergesToFixedPoint { .. } => converges += 1,
            OrbitClass::ClosedOrbit { .. } => closed += 1,
            OrbitClass::Unresolved { .. } => unresolved += 1,
        }
    }
    emit(
        opts,
        &format!(
            "{} orbits: {fixed} at fixed points, {converges} converging to fixed points, \
             {closed} closed, {unresolved} unresolved\n",
            orbits.len()
        ),
    )
}

fn complete(positional: Option<&str>, at: &str, opts: &GlobalOpts) -> Result<i32> {
    let ma = load_setup(positional, opts)?;
    let v = parse_point(at, ma.dim())?.map(crate::scalar::Scalar::from_rational);
    let report = completeness_classify(
        &ma.to_float::<f64>(),
        &v,
        &CompletenessOptions {
            horizon: opts.horizon,
            tol: opts.tol,
        },
    )?;
    if opts.json {
        return emit(opts, &pretty(&report));
    }
    let mut text = match &report.verdict {
        Completeness::Complete => "complete".to_string(),
        Completeness::FutureIncomplete { blowup_time } => {
            format!("future-incomplete, blowup at t = {blowup_time}")
        }
        Completeness::PastIncomplete { blowup_time } => {
            format!("past-incomplete, blowup at t = {blowup_time}")
        }
        Completeness::BothIncomplete {
            future_time,
            past_time,
        } => format!("incomplete both ways, blowups at t = {future_time} and t = {past_time}"),
        Completeness::Undetermined { reason } => format!("undetermined: {reason}"),
    };
    if report.certified {
        text.push_str(" (certified)");
    }
    if let Some(c) = report.confirmation {
        text.push_str(&format!(" (integrator confirms {c:.6})"));
    }
    text.push('\n');
    emit(opts, &text)
}

// ---------------------------------------------------------------------------
// verify / lattice-search

fn verify(filter: Option<&str>, opts: &GlobalOpts) -> Result<i32> {
    let results = crate::checks::run_checks(filter);
    if filter.is_some() && results.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no check id starts with `{}`",
            filter.unwrap_or_default()
        )));
    }
    let all_pass = results.iter().all(|r| r.pass);
    if opts.json {
        emit(opts, &pretty(&results))?;
    } else {
        let mut text = String::new();
        for r in &results {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            let extra = match (&r.residual, &r.witness) {
                (Some(res), _) if *res != 0.0 => format!("  residual {res:.2e}"),
                (_, Some(w)) if !r.pass => format!("  {w}"),
                _ => String::new(),
            };
            text.push_str(&format!("{tag}  {}{extra}\n", r.check_id));
        }
        let passed = results.iter().filter(|r| r.pass).count();
        text.push_str(&format!("{passed}/{} checks passed\n", results.len()));
        emit(opts, &text)?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct LatticeOut {
    a: i64,
    b: i64,
    lambda: f64,
    alpha: f64,
    companion: [[i64; 4]; 4],
    residual: f64,
    preservation_residual: f64,
}

fn lattice_search(bound: i64, opts: &GlobalOpts) -> Result<i32> {
    if bound < 0 {
        return Err(Error::InvalidInput("bound must be nonnegative".to_string()));
    }
    let mut rows = Vec::new();
    for q in enumerate_candidates(bound) {
        let cert = certify(&q)?;
        let gamma = build_gamma(&cert)?;
        rows.push(LatticeOut {
            a: q.a,
            b: q.b,
            lambda: cert.lambda,
            alpha: cert.alpha,
            companion: cert.companion,
            residual: cert.residual,
            preservation_residual: gamma.preservation_residual,
        });
    }
    if opts.json {
        return emit(opts, &pretty(&rows));
    }
    let mut text = String::new();
    text.push_str(&format!("{} loxodromic quartics with |a|, |b| <= {bound}\n", rows.len()));
    for r in &rows {
        text.push_str(&format!(
            "  a={:>3} b={:>3}  lambda={:.6}  alpha={:.6}  residual={:.2e}  preservation={:.2e}\n",
            r.a, r.b, r.lambda, r.alpha, r.residual, r.preservation_residual
        ));
    }
    emit(opts, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn seeded_starts_are_unit_and_reproducible() {
        let a = seeded_sphere_starts(3, 8, 7);
        let b = seeded_sphere_starts(3, 8, 7);
        assert_eq!(a.len(), 8);
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.0, v.0);
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn builtin_names_resolve_and_files_require_metric() {
        let opts = GlobalOpts {
            algebra: None,
            metric: None,
            tol: 1e-10,
            horizon: 100.0,
            seed: 0,
            grid_density: 64,
            json: false,
            out: None,
        };
        assert!(load_setup(Some("sol"), &opts).is_ok());
        assert!(matches!(
            load_setup(None, &opts),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            load_setup(Some("/nonexistent/x.json"), &opts),
            Err(Error::Io(_))
        ));
    }
}
