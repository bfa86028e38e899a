//! Command-line front end: `profile`, `check`, `optimize` and `homology`.
//!
//! Exit codes are 0 on success, 1 when a `check` fails, 2 for usage and
//! schema errors and 3 for domain errors. `MULTIBUBBLE_SEED` takes precedence
//! over `--seed`. Floats are written with 9 significant digits and the output
//! contains no timestamps, so equal inputs give byte-identical output.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::Exp1;
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::gauss::{cdf, density, mc_model_cell_measure, mc_model_interface_area, quantile, stream_rng, McSpec, QuadratureSpec};
use crate::homology::{build_complex, homology_ranks, IncidenceComplex};
use crate::optimizer::{compare_to_model, minimize_perimeter, HistoryEntry, OptProblem, OptResult};
use crate::profile::{dpsi, face_limit_check, invert_psi, model_profile, profile_value, psi, FaceFixture, ProfileOptions};
use crate::simplex::{e_basis, InterfaceAreaTable, MeasureVector, SimplexShift};

/// Environment variable overriding `--seed`.
pub const SEED_ENV: &str = "MULTIBUBBLE_SEED";
/// Tolerance on the sum of a measure vector given on the command line.
pub const MEASURE_INPUT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "multibubble", version, about = "Gaussian multi-bubble clusters")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub mc_samples: usize,
    #[arg(long, global = true, default_value_t = 1e-11)]
    pub quad_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model profile I_m(v) with gradient, Hessian and interface areas.
    Profile {
        /// Comma-separated cell measures.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
    },
    /// Numerical identity checks for q cells.
    Check {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=6))]
        q: u64,
    },
    /// Minimize perimeter over pull-back clusters in R^n with measures v.
    Optimize {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        /// Iteration history CSV; defaults to `<output>.history.csv` when `--output` is set.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Betti numbers of an incidence complex given as JSON.
    Homology {
        /// Path to the complex, or `-` for stdin.
        input: PathBuf,
    },
}

/// Outcome of a command that did not succeed.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Usage(String),
    Domain(String),
    CheckFailed,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::CheckFailed => 1,
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_) | Error::InvalidComplex(_) => Failure::Usage(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Applies [`sig9`] to every float in a JSON value; integers are left alone.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(sig9(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn flatten_into(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Array(items) if !items.is_empty() => {
            for (i, item) in items.iter().enumerate() {
                flatten_into(&key(&i.to_string()), item, rows);
            }
        }
        Value::Object(map) if !map.is_empty() => {
            for (k, item) in map {
                flatten_into(&key(k), item, rows);
            }
        }
        scalar => rows.push((prefix.to_string(), scalar.to_string())),
    }
}

/// Two-column `path,value` CSV of a JSON document. Array elements use their
/// index as path segment; values are JSON scalars.
pub fn to_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten_into("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "value"]).expect("in-memory write");
    for (path, value) in rows {
        w.write_record([path, value]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

fn insert_path(root: &mut Value, path: &[&str], leaf: Value) -> Result<(), String> {
    let Some((head, rest)) = path.split_first() else {
        *root = leaf;
        return Ok(());
    };
    if let Ok(index) = head.parse::<usize>() {
        if root.is_null() {
            *root = Value::Array(Vec::new());
        }
        let items = root.as_array_mut().ok_or_else(|| format!("'{head}' indexes a non-array"))?;
        if index > items.len() {
            return Err(format!("array index {index} skips entries"));
        }
        if index == items.len() {
            items.push(Value::Null);
        }
        insert_path(&mut items[index], rest, leaf)
    } else {
        if root.is_null() {
            *root = Value::Object(Map::new());
        }
        let map = root.as_object_mut().ok_or_else(|| format!("'{head}' keys a non-object"))?;
        insert_path(map.entry(head.to_string()).or_insert(Value::Null), rest, leaf)
    }
}

/// Inverse of [`to_csv`].
pub fn from_csv(text: &str) -> Result<Value, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut root = Value::Null;
    for record in r.records() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != 2 {
            return Err(format!("expected 2 columns, got {}", record.len()));
        }
        let leaf: Value = serde_json::from_str(&record[1]).map_err(|e| e.to_string())?;
        let path: Vec<&str> = if record[0].is_empty() { Vec::new() } else { record[0].split('.').collect() };
        insert_path(&mut root, &path, leaf)?;
    }
    Ok(root)
}

/// History CSV with header `iteration,rho,objective,perimeter,feasibility`.
pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "rho", "objective", "perimeter", "feasibility"])
        .expect("in-memory write");
    for h in history {
        w.write_record([
            h.iteration.to_string(),
            sig9(h.rho).to_string(),
            sig9(h.objective).to_string(),
            sig9(h.perimeter).to_string(),
            sig9(h.feasibility).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn parse_history_csv(text: &str) -> Result<Vec<HistoryEntry>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| e.to_string())?;
        let num = |k: usize| -> Result<f64, String> { record[k].parse::<f64>().map_err(|e| e.to_string()) };
        out.push(HistoryEntry {
            iteration: record[0].parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
            rho: num(1)?,
            objective: num(2)?,
            perimeter: num(3)?,
            feasibility: num(4)?,
        });
    }
    Ok(out)
}

/// Parses a comma-separated measure vector, renormalizing small sum errors.
pub fn parse_measure(text: &str) -> Result<MeasureVector, Failure> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| Failure::Usage(format!("cannot parse measure vector '{text}': {e}")))?;
    if values.len() < 2 {
        return Err(Failure::Usage("a measure vector needs at least two entries".into()));
    }
    let sum: f64 = values.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > MEASURE_INPUT_TOL {
        return Err(Failure::Usage(format!(
            "measure entries sum to {sum}, not within {MEASURE_INPUT_TOL:e} of 1"
        )));
    }
    if values.iter().any(|x| *x <= 0.0) {
        return Err(Failure::Domain(format!("measure vector '{text}' is not strictly interior")));
    }
    MeasureVector::renormalized(&values, MEASURE_INPUT_TOL).map_err(|e| Failure::Domain(e.to_string()))
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!(m.row(i).iter().copied().collect::<Vec<_>>())).collect())
}

fn table_json(t: &InterfaceAreaTable) -> Value {
    matrix_rows(t.matrix())
}

/// Global settings shared by the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub mc_samples: usize,
    pub quad: QuadratureSpec,
}

impl RunConfig {
    fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            quad: self.quad,
            ..ProfileOptions::default()
        }
    }
}

pub fn cmd_profile(v: &MeasureVector, cfg: &RunConfig) -> Result<Value, Failure> {
    if !v.is_interior() {
        return Err(Failure::Domain("measure vector is not strictly interior".into()));
    }
    let r = model_profile(v, &cfg.profile_options())?;
    Ok(json!({
        "command": "profile",
        "q": v.q(),
        "v": v.as_slice(),
        "x": r.x.as_slice(),
        "value": r.value,
        "gradient": r.gradient.as_slice(),
        "hessian": matrix_rows(r.hessian.matrix()),
        "areas": table_json(&r.areas),
        "trace_residual": r.trace_residual,
        "newton_iterations": r.newton_iterations,
    }))
}

struct CheckLine {
    name: String,
    residual: f64,
    tolerance: f64,
}

/// Uniform on the simplex, conditioned on every entry being at least `floor`.
pub fn random_interior<R: Rng>(q: usize, floor: f64, rng: &mut R) -> MeasureVector {
    loop {
        let e: Vec<f64> = (0..q).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        let v: Vec<f64> = e.iter().map(|x| x / s).collect();
        if v.iter().all(|x| *x >= floor) {
            if let Ok(m) = MeasureVector::renormalized(&v, 1e-12) {
                return m;
            }
        }
    }
}

fn relative_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

fn identity_checks(q: usize, cfg: &RunConfig) -> Result<Vec<CheckLine>, Failure> {
    let opts = cfg.profile_options();
    let quad = cfg.quad;
    let mut rng = stream_rng(cfg.seed, 0xc4ec_0001, q as u64);
    let basis = e_basis(q);
    let mut lines = Vec::new();
    let mut push = |name: &str, residual: f64, tolerance: f64| {
        lines.push(CheckLine {
            name: name.to_string(),
            residual,
            tolerance,
        })
    };
    let points: Vec<MeasureVector> = (0..3).map(|_| random_interior(q, 0.01, &mut rng)).collect();

    let (mut dpsi_gap, mut grad_gap, mut hess_gap, mut trace_gap, mut newton_gap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut newton_iters = 0usize;
    for v in &points {
        let report = model_profile(v, &opts)?;
        let x = &report.x;
        let jac = dpsi(x, &quad)?;
        for k in 0..q - 1 {
            let u: DVector<f64> = basis.column(k).into();

            let h = 1e-5;
            let xp = SimplexShift::new(x.coords() + &u * h)?;
            let xm = SimplexShift::new(x.coords() - &u * h)?;
            let fd = (psi(&xp, &quad)?.values() - psi(&xm, &quad)?.values()) / (2.0 * h);
            dpsi_gap = dpsi_gap.max(relative_gap(&fd, &jac.apply(&u)));

            let vp = MeasureVector::new(v.values() + &u * h)?;
            let vm = MeasureVector::new(v.values() - &u * h)?;
            let fd = (profile_value(&vp, &opts)? - profile_value(&vm, &opts)?) / (2.0 * h);
            let exact = report.gradient.coords().dot(&u);
            grad_gap = grad_gap.max((fd - exact).abs() / report.gradient.coords().amax().max(1e-12));

            let h = 1e-4;
            let vp = MeasureVector::new(v.values() + &u * h)?;
            let vm = MeasureVector::new(v.values() - &u * h)?;
            let gp = model_profile(&vp, &opts)?.gradient.into_inner();
            let gm = model_profile(&vm, &opts)?.gradient.into_inner();
            let fd = (gp - gm) / (2.0 * h);
            hess_gap = hess_gap.max(relative_gap(&fd, &report.hessian.apply(&u)));
        }
        trace_gap = trace_gap.max(report.trace_residual / report.value);
        let inv = invert_psi(v, &opts)?;
        newton_iters = newton_iters.max(inv.iterations);
        newton_gap = newton_gap.max((psi(&inv.x, &quad)?.values() - v.values()).amax());
    }
    push("dpsi_finite_difference", dpsi_gap, 1e-5);
    push("gradient_finite_difference", grad_gap, 1e-5);
    push("hessian_finite_difference", hess_gap, 1e-4);
    push("trace_identity", trace_gap, 1e-6);
    push("newton_round_trip", newton_gap, 1e-9);
    push("newton_iterations", newton_iters as f64, 25.0);

    if q == 2 {
        let mut worst = 0.0f64;
        for k in 1..10 {
            let p = k as f64 / 10.0;
            let v = MeasureVector::from_slice(&[p, 1.0 - p])?;
            worst = worst.max((profile_value(&v, &opts)? - density(quantile(p)?)).abs());
        }
        push("single_bubble_closed_form", worst, 1e-8);
        let c = cdf(0.0);
        push("half_space_measure", (c - 0.5).abs(), 1e-15);
    } else {
        let face: Vec<f64> = random_interior(q - 1, 0.05, &mut rng).as_slice().to_vec();
        let report = face_limit_check(&FaceFixture::new(&face), &opts)?;
        let residual = if report.decreasing { report.final_gap } else { f64::INFINITY };
        push("face_limit", residual, crate::profile::FACE_LIMIT_TOL);
    }

    let spec = McSpec::new(cfg.mc_samples, cfg.seed);
    let v = &points[0];
    let x = invert_psi(v, &opts)?.x;
    let mut worst_sigma = 0.0f64;
    for i in 0..q {
        let est = mc_model_cell_measure(&x, i, &spec.with_stream(i as u64))?;
        worst_sigma = worst_sigma.max((est.value - v.values()[i]).abs() / est.std_err.max(1e-12));
    }
    let areas = model_profile(v, &opts)?.areas;
    for (i, j) in areas.pairs() {
        let est = mc_model_interface_area(&x, i, j, &spec.with_stream(1000 + (i * q + j) as u64))?;
        let scale = est.std_err.max(1e-12);
        worst_sigma = worst_sigma.max((est.value - areas.get(i, j)).abs() / scale);
    }
    push("monte_carlo_vs_quadrature_sigmas", worst_sigma, 4.0);
    Ok(lines)
}

pub fn cmd_check(q: usize, cfg: &RunConfig) -> Result<(Value, bool), Failure> {
    if !(2..=6).contains(&q) {
        return Err(Failure::Usage(format!("check supports 2 <= q <= 6, got {q}")));
    }
    let lines = identity_checks(q, cfg)?;
    let passed = lines.iter().all(|l| l.residual <= l.tolerance);
    let checks: Vec<Value> = lines
        .iter()
        .map(|l| {
            json!({
                "name": l.name,
                "residual": if l.residual.is_finite() { json!(l.residual) } else { json!("inf") },
                "tolerance": l.tolerance,
                "passed": l.residual <= l.tolerance,
            })
        })
        .collect();
    Ok((
        json!({ "command": "check", "q": q, "seed": cfg.seed, "passed": passed, "checks": checks }),
        passed,
    ))
}

pub fn optimize_json(r: &OptResult, q: usize, n: usize, cfg: &RunConfig) -> Result<Value, Failure> {
    let cluster = r.cluster()?;
    let complex = build_complex(&cluster)?;
    let betti = homology_ranks(&complex);
    let comparison = compare_to_model(r, &cfg.quad)?;
    Ok(json!({
        "command": "optimize",
        "q": q,
        "n": n,
        "v": r.v.as_slice(),
        "perimeter": r.perimeter,
        "profile_value": r.profile_value,
        "profile_gap": r.profile_gap,
        "isometry_defect": r.isometry_defect,
        "measure_error": r.measure_error,
        "measures": r.measures.as_slice(),
        "b": matrix_rows(&r.b),
        "lambda": r.lambda.as_slice(),
        "areas": table_json(&r.areas),
        "mc_perimeter": { "value": r.mc_perimeter.value, "std_err": r.mc_perimeter.std_err },
        "complex": {
            "vertices": complex.vertices(),
            "edges": complex.edges().iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
            "triangles": complex.triangles().iter().map(|&(i, j, k)| [i, j, k]).collect::<Vec<_>>(),
            "b0": betti.b0,
            "b1": betti.b1,
        },
        "model_comparison": {
            "max_area_deviation": comparison.max_deviation,
            "all_areas_positive": comparison.all_positive,
        },
        "start": r.start,
        "iterations": r.history.len(),
    }))
}

pub fn cmd_optimize(q: usize, n: usize, v: &MeasureVector, starts: usize, cfg: &RunConfig) -> Result<(Value, OptResult), Failure> {
    if q < 2 || n == 0 || q > n + 1 {
        return Err(Failure::Usage(format!(
            "optimize needs 2 <= q <= n + 1 (got q = {q}, n = {n}); outside that range the simplicial cluster does not exist in R^n"
        )));
    }
    if v.q() != q {
        return Err(Failure::Usage(format!("v has {} entries, expected {q}", v.q())));
    }
    let problem = OptProblem::new(q, n, v.clone())?
        .with_seed(cfg.seed)
        .with_starts(starts)
        .with_mc(McSpec::new(cfg.mc_samples, cfg.seed));
    let problem = OptProblem {
        profile: cfg.profile_options(),
        ..problem
    };
    let r = minimize_perimeter(&problem)?;
    Ok((optimize_json(&r, q, n, cfg)?, r))
}

pub fn cmd_homology(text: &str) -> Result<Value, Failure> {
    let s = IncidenceComplex::from_json_str(text).map_err(|e| Failure::Usage(e.to_string()))?;
    let b = homology_ranks(&s);
    Ok(json!({
        "command": "homology",
        "q": s.q(),
        "vertices": s.vertices().len(),
        "edges": s.edges().len(),
        "triangles": s.triangles().len(),
        "b0": b.b0,
        "b1": b.b1,
    }))
}

fn render(mut value: Value, format: Format) -> String {
    round_floats(&mut value);
    match format {
        Format::Json => serde_json::to_string_pretty(&value).expect("json renders") + "\n",
        Format::Csv => to_csv(&value),
    }
}

fn write_target(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write output: {e}"))),
    }
}

fn history_path(explicit: Option<&PathBuf>, output: Option<&PathBuf>) -> Option<PathBuf> {
    explicit.cloned().or_else(|| {
        output.map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".history.csv");
            PathBuf::from(s)
        })
    })
}

fn execute(cli: &Cli, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let output = cli.output.as_deref();
    match &cli.command {
        Command::Profile { v } => {
            let v = parse_measure(v)?;
            write_target(output, &render(cmd_profile(&v, cfg)?, cli.format), out)
        }
        Command::Check { q } => {
            let (report, passed) = cmd_check(*q as usize, cfg)?;
            write_target(output, &render(report, cli.format), out)?;
            if passed {
                Ok(())
            } else {
                Err(Failure::CheckFailed)
            }
        }
        Command::Optimize { q, n, v, starts, history } => {
            if *q < 2 || *q > n + 1 {
                return Err(Failure::Usage(format!(
                    "optimize needs 2 <= q <= n + 1 (got q = {q}, n = {n}); outside that range the simplicial cluster does not exist in R^n"
                )));
            }
            let v = parse_measure(v)?;
            let (report, result) = cmd_optimize(*q, *n, &v, *starts, cfg)?;
            write_target(output, &render(report, cli.format), out)?;
            if let Some(path) = history_path(history.as_ref(), cli.output.as_ref()) {
                std::fs::write(&path, history_csv(&result.history))
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Homology { input } => {
            let text = if input.as_os_str() == "-" {
                let mut s = String::new();
                std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
                    .map_err(|e| Failure::Usage(format!("cannot read stdin: {e}")))?;
                s
            } else {
                std::fs::read_to_string(input).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?
            };
            write_target(output, &render(cmd_homology(&text)?, cli.format), out)
        }
    }
}

/// Parses `args` (including the program name) and runs the command. `env_seed`
/// is the value of [`SEED_ENV`], if set.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let seed = match env_seed {
        Some(s) => match s.trim().parse::<u64>() {
            Ok(seed) => seed,
            Err(_) => {
                let _ = writeln!(err, "error: {SEED_ENV}='{s}' is not an unsigned integer");
                return 2;
            }
        },
        None => cli.seed,
    };
    let quad = QuadratureSpec::with_tol(cli.quad_tol);
    if let Err(e) = quad.validate() {
        let _ = writeln!(err, "error: {e}");
        return 2;
    }
    if cli.mc_samples == 0 {
        let _ = writeln!(err, "error: --mc-samples must be positive");
        return 2;
    }
    let cfg = RunConfig {
        seed,
        mc_samples: cli.mc_samples,
        quad,
    };
    match execute(&cli, &cfg, out) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Domain(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
                Failure::CheckFailed => {
                    let _ = writeln!(err, "error: at least one check failed");
                }
            }
            f.exit_code()
        }
    }
}
