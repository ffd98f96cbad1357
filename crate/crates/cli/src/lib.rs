//! Command-line front end for the `halfband` toolkit.
//!
//! [`run`] parses arguments (merging an optional `key = value` config
//! file), executes one subcommand and writes a JSON or CSV report. Exit
//! codes: 0 on success, 2 on usage or input errors, 1 on numerical
//! failures. Failures print a JSON error record on stderr.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use halfband::analysis::{
    convergence_study, detect_bound_state, essential_spectrum_probe, gamma_threshold_search, sigma_sweep,
    solve_spectrum, DetectOptions, SigmaFamily, ThresholdOptions,
};
use halfband::eigen::SolverOptions;
use halfband::geometry::{DomainSpec, TruncationBc};
use halfband::oracles;
use halfband::sigma::{load_profile, SigmaProfile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "halfband", version, about = "Bound states of the Robin half-band", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenpairs of the truncated band.
    Solve(Common),
    /// Decide whether a bound state lies below the strip threshold.
    Detect(Common),
    /// Bound-state verdicts along a family of profiles.
    Sweep(SweepArgs),
    /// Bisect constant sigma for the point where binding stops.
    Threshold(ThresholdArgs),
    /// Ground energy under repeated mesh refinement.
    Converge(ConvergeArgs),
    /// Spectrum near the strip threshold as the truncation grows.
    ProbeEssential(ProbeArgs),
    /// Closed-form and one-dimensional reference values.
    Oracle(OracleArgs),
    /// Write one eigenfunction as `x,y,value` rows.
    ExportEigenfunction(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Truncation {
    Dirichlet,
    Neumann,
}

impl From<Truncation> for TruncationBc {
    fn from(t: Truncation) -> Self {
        match t {
            Truncation::Dirichlet => TruncationBc::Dirichlet,
            Truncation::Neumann => TruncationBc::Neumann,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Band half-width.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Mesh pitch [default: d / 8].
    #[arg(long)]
    h: Option<f64>,
    /// Truncation parameter, the cut is x + y = 2L [default: 8 d].
    #[arg(long = "L")]
    length: Option<f64>,
    /// Constant Robin coefficient.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "sigma_file")]
    sigma: Option<f64>,
    /// Profile file of `y value` lines.
    #[arg(long)]
    sigma_file: Option<PathBuf>,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Truncation::Dirichlet)]
    truncation: Truncation,
    /// Output path; stdout when absent (JSON only).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed of the eigensolver's starting vectors.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// `key = value` file supplying any flag; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Constant sigma values (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "factors")]
    values: Vec<f64>,
    /// Multipliers of the --sigma-file profile (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "sigma_file")]
    factors: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
struct ThresholdArgs {
    #[command(flatten)]
    common: Common,
    /// Search interval `lo hi` for constant sigma.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    bracket: Option<Vec<f64>>,
    /// Stop once the bracket is this narrow.
    #[arg(long, default_value_t = 0.05)]
    width: f64,
}

#[derive(Debug, Clone, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Number of mesh levels (h, h/2, ...).
    #[arg(long, default_value_t = 3)]
    levels: usize,
}

#[derive(Debug, Clone, Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    /// Truncation lengths (comma separated) [default: 4d, 8d, 16d].
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OracleName {
    StripThreshold,
    RectGroundState,
    RobinInterval,
    SquareRobin,
    Fdm1dRobin,
    LshapeReference,
}

#[derive(Debug, Clone, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    name: OracleName,
    /// Rectangle length parameter.
    #[arg(long)]
    w: Option<f64>,
    /// Robin coefficient of the interval and square oracles.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Grid points of the finite-difference oracle.
    #[arg(long, default_value_t = 800)]
    n: usize,
    /// L-shape width [default: sqrt(2) d].
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    /// Eigenpair index, 0 for the ground state.
    #[arg(long, default_value_t = 0)]
    index: usize,
}

/// Sigma as given on the command line.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum SigmaSource {
    Constant(f64),
    File(PathBuf),
}

/// Fully resolved settings, embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    subcommand: String,
    d: f64,
    h: f64,
    #[serde(rename = "L")]
    length: f64,
    truncation_bc: TruncationBc,
    sigma: SigmaSource,
    k: usize,
    tol: f64,
    out: Option<PathBuf>,
    format: Format,
    seed: u64,
    /// Subcommand-specific settings.
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(halfband::Error),
    Numerical(halfband::Error),
}

impl From<halfband::Error> for Failure {
    fn from(e: halfband::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e)
        } else {
            Failure::Numerical(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(halfband::Error::Io(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn long_names(sub: &str) -> Vec<String> {
    let cmd = Cli::command();
    cmd.find_subcommand(sub)
        .map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect())
        .unwrap_or_default()
}

fn all_long_names() -> Vec<String> {
    let cmd = Cli::command();
    cmd.get_subcommands()
        .flat_map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect::<Vec<_>>())
        .collect()
}

/// Parse a `key = value` config file into `(key, values)` pairs.
fn parse_config(text: &str) -> Outcome<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected `key = value`", no + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() || key == "config" {
            return Err(Failure::Usage(format!("config line {}: invalid key `{key}`", no + 1)));
        }
        out.push((key, value.split_whitespace().map(str::to_string).collect()));
    }
    Ok(out)
}

fn flag_given(argv: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Append flags from `--config` that the command line does not set.
fn merge_config(argv: &[String]) -> Outcome<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text)?;
    let sub = argv.iter().skip(1).find(|a| !a.starts_with('-')).cloned().unwrap_or_default();
    let accepted = long_names(&sub);
    let known = all_long_names();
    let sigma_on_cli = flag_given(argv, "sigma") || flag_given(argv, "sigma-file");
    let mut merged = argv.to_vec();
    for (key, values) in entries {
        if !known.contains(&key) {
            return Err(Failure::Usage(format!("unknown config key `{key}`")));
        }
        if !accepted.contains(&key) || flag_given(argv, &key) {
            continue;
        }
        if sigma_on_cli && (key == "sigma" || key == "sigma-file") {
            continue;
        }
        if values.is_empty() {
            return Err(Failure::Usage(format!("config key `{key}` has no value")));
        }
        merged.push(format!("--{key}"));
        merged.extend(values);
    }
    Ok(merged)
}

struct Resolved {
    config: RunConfig,
    spec: DomainSpec,
    profile: SigmaProfile,
    solver: SolverOptions,
}

fn resolve(name: &str, c: &Common) -> Outcome<Resolved> {
    if !(c.d > 0.0) {
        return Err(Failure::Usage(format!("--d must be positive, got {}", c.d)));
    }
    let h = c.h.unwrap_or(c.d / 8.0);
    let length = c.length.unwrap_or(8.0 * c.d);
    let spec = DomainSpec::new(c.d, length, h, c.truncation.into())?;
    let (sigma, profile) = match (&c.sigma, &c.sigma_file) {
        (_, Some(path)) => (SigmaSource::File(path.clone()), load_profile(path, c.d)?),
        (Some(v), None) => (SigmaSource::Constant(*v), SigmaProfile::constant(*v)),
        (None, None) => (SigmaSource::Constant(0.0), SigmaProfile::constant(0.0)),
    };
    if c.format == Format::Csv && c.out.is_none() {
        return Err(Failure::Usage("--format csv needs --out (metadata goes to <out>.json)".into()));
    }
    let solver = SolverOptions {
        tol: c.tol,
        seed: c.seed,
        ..SolverOptions::default()
    };
    let config = RunConfig {
        subcommand: name.to_string(),
        d: c.d,
        h,
        length,
        truncation_bc: spec.truncation_bc,
        sigma,
        k: c.k,
        tol: c.tol,
        out: c.out.clone(),
        format: c.format,
        seed: c.seed,
        extra: BTreeMap::new(),
    };
    Ok(Resolved {
        config,
        spec,
        profile,
        solver,
    })
}

/// A report ready for writing: JSON body plus an optional CSV table.
struct Report {
    json: Value,
    csv: Option<String>,
}

fn envelope(config: &RunConfig, result: Value) -> Value {
    let mut out = json!({ "tool": "halfband", "version": VERSION, "config": config });
    if let (Value::Object(o), Value::Object(r)) = (&mut out, result) {
        for (k, v) in r {
            o.insert(k, v);
        }
    }
    out
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn emit(config: &RunConfig, report: Report) -> Outcome<()> {
    let body = serde_json::to_string_pretty(&report.json).expect("json");
    match (config.format, &config.out) {
        (Format::Json, None) => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{body}").and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
        (Format::Json, Some(path)) => write_atomic(path, format!("{body}\n").as_bytes())?,
        (Format::Csv, Some(path)) => {
            let csv = report
                .csv
                .ok_or_else(|| Failure::Usage(format!("{} has no CSV form", config.subcommand)))?;
            write_atomic(path, csv.as_bytes())?;
            write_atomic(&sidecar(path), format!("{body}\n").as_bytes())?;
        }
        (Format::Csv, None) => unreachable!("checked in resolve"),
    }
    Ok(())
}

fn cmd_solve(c: &Common) -> Outcome<(RunConfig, Report)> {
    let r = resolve("solve", c)?;
    let solve = solve_spectrum(&r.spec, &r.profile, r.config.k, &r.solver)?;
    let summary = solve.summary(&r.spec, &r.profile)?;
    let mut csv = String::from("index,eigenvalue,residual\n");
    for (i, (e, res)) in summary.spectrum.eigenvalues.iter().zip(&summary.spectrum.residuals).enumerate() {
        let _ = writeln!(csv, "{i},{},{}", num(*e), num(*res));
    }
    let json = envelope(&r.config, to_value(&summary));
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn detect_options(solver: SolverOptions) -> DetectOptions {
    DetectOptions {
        solver,
        ..DetectOptions::default()
    }
}

fn cmd_detect(c: &Common) -> Outcome<(RunConfig, Report)> {
    let r = resolve("detect", c)?;
    let v = detect_bound_state(&r.spec, &r.profile, &detect_options(r.solver))?;
    let mut csv = String::from("h,L,E0,n_free\n");
    for l in &v.levels {
        let _ = writeln!(csv, "{},{},{},{}", num(l.h), num(l.length), num(l.e0), l.n_free);
    }
    let json = envelope(&r.config, to_value(&v));
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn cmd_sweep(a: &SweepArgs) -> Outcome<(RunConfig, Report)> {
    let mut r = resolve("sweep", &a.common)?;
    let family = if !a.factors.is_empty() {
        SigmaFamily::Scaled {
            base: r.profile.clone(),
            factors: a.factors.clone(),
        }
    } else if !a.values.is_empty() {
        if a.common.sigma_file.is_some() {
            return Err(Failure::Usage("--values describes constant profiles; use --factors with --sigma-file".into()));
        }
        SigmaFamily::Constant(a.values.clone())
    } else {
        return Err(Failure::Usage("sweep needs --values or --factors".into()));
    };
    r.config.extra.insert("values".into(), to_value(&a.values));
    r.config.extra.insert("factors".into(), to_value(&a.factors));
    let table = sigma_sweep(&r.spec, &family, r.config.k, &detect_options(r.solver))?;
    let mut csv = String::from("param,sup_norm,verdict,E0_extrapolated,gap_to_threshold");
    for i in 0..r.config.k {
        let _ = write!(csv, ",ritz_{i}");
    }
    csv.push('\n');
    for row in &table.rows {
        let _ = write!(
            csv,
            "{},{},{},{},{}",
            num(row.param),
            num(row.sup_norm),
            row.verdict,
            num(row.e0_extrapolated),
            num(row.gap_to_threshold)
        );
        for v in &row.ritz {
            let _ = write!(csv, ",{}", num(*v));
        }
        csv.push('\n');
    }
    let mut json = envelope(&r.config, to_value(&table));
    json["postcondition_holds"] = Value::Bool(table.postcondition_holds());
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn cmd_threshold(a: &ThresholdArgs) -> Outcome<(RunConfig, Report)> {
    let mut r = resolve("threshold", &a.common)?;
    let (lo, hi) = match a.bracket.as_deref() {
        None => (-100.0, 0.0),
        Some([lo, hi]) => (*lo, *hi),
        Some(_) => unreachable!("clap enforces two values"),
    };
    r.config.extra.insert("bracket".into(), json!([lo, hi]));
    r.config.extra.insert("width".into(), json!(a.width));
    let opts = ThresholdOptions {
        detect: detect_options(r.solver),
        h_over_d: r.spec.h / r.spec.d,
        length_over_d: r.spec.length / r.spec.d,
        width: a.width,
        truncation_bc: r.spec.truncation_bc,
    };
    let report = gamma_threshold_search(r.spec.d, (lo, hi), &opts)?;
    let mut csv = String::from("gamma,verdict,E0_extrapolated,upper_bound,binding\n");
    for s in &report.steps {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(s.gamma),
            s.verdict,
            num(s.e0_extrapolated),
            num(s.upper_bound),
            s.binding
        );
    }
    let json = envelope(&r.config, to_value(&report));
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn cmd_converge(a: &ConvergeArgs) -> Outcome<(RunConfig, Report)> {
    let mut r = resolve("converge", &a.common)?;
    r.config.extra.insert("levels".into(), json!(a.levels));
    let report = convergence_study(&r.spec, &r.profile, a.levels, &r.solver)?;
    let mut csv = String::from("h,L,E0,n_free\n");
    for l in &report.records {
        let _ = writeln!(csv, "{},{},{},{}", num(l.h), num(l.length), num(l.e0), l.n_free);
    }
    let json = envelope(&r.config, to_value(&report));
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn cmd_probe(a: &ProbeArgs) -> Outcome<(RunConfig, Report)> {
    let mut r = resolve("probe-essential", &a.common)?;
    let lengths = if a.lengths.is_empty() {
        vec![4.0 * r.spec.d, 8.0 * r.spec.d, 16.0 * r.spec.d]
    } else {
        a.lengths.clone()
    };
    r.config.extra.insert("lengths".into(), to_value(&lengths));
    let report = essential_spectrum_probe(&r.spec, &lengths, &r.profile, &r.solver)?;
    let mut csv = String::from("L,count_in_window,first_excited\n");
    for row in &report.rows {
        let _ = writeln!(csv, "{},{},{}", num(row.length), row.count_in_window, num(row.first_excited));
    }
    let json = envelope(&r.config, to_value(&report));
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn require(v: Option<f64>, flag: &str, name: OracleName) -> Outcome<f64> {
    v.ok_or_else(|| {
        let n = to_value(&name);
        Failure::Usage(format!("oracle {} needs --{flag}", n.as_str().unwrap_or("")))
    })
}

fn cmd_oracle(a: &OracleArgs) -> Outcome<(RunConfig, Report)> {
    let c = &a.common;
    if !(c.d > 0.0) {
        return Err(Failure::Usage(format!("--d must be positive, got {}", c.d)));
    }
    let mut config = RunConfig {
        subcommand: "oracle".into(),
        d: c.d,
        h: c.h.unwrap_or(c.d / 8.0),
        length: c.length.unwrap_or(8.0 * c.d),
        truncation_bc: c.truncation.into(),
        sigma: SigmaSource::Constant(c.sigma.unwrap_or(0.0)),
        k: c.k,
        tol: c.tol,
        out: c.out.clone(),
        format: c.format,
        seed: c.seed,
        extra: BTreeMap::new(),
    };
    if c.format == Format::Csv && c.out.is_none() {
        return Err(Failure::Usage("--format csv needs --out (metadata goes to <out>.json)".into()));
    }
    config.extra.insert("name".into(), to_value(&a.name));
    let value = match a.name {
        OracleName::StripThreshold => oracles::strip_threshold(c.d)?,
        OracleName::RectGroundState => {
            let w = require(a.w, "w", a.name)?;
            config.extra.insert("w".into(), json!(w));
            oracles::rect_ground_state(c.d, w)?
        }
        OracleName::RobinInterval => {
            let g = require(a.gamma, "gamma", a.name)?;
            config.extra.insert("gamma".into(), json!(g));
            oracles::robin_interval_lambda0(g, c.d)?
        }
        OracleName::SquareRobin => {
            let g = require(a.gamma, "gamma", a.name)?;
            config.extra.insert("gamma".into(), json!(g));
            oracles::square_robin_ground_state(g, c.d)?
        }
        OracleName::Fdm1dRobin => {
            let g = require(a.gamma, "gamma", a.name)?;
            config.extra.insert("gamma".into(), json!(g));
            config.extra.insert("n".into(), json!(a.n));
            oracles::fdm_1d_robin(g, c.d, a.n)?
        }
        OracleName::LshapeReference => {
            let b = a.b.unwrap_or(std::f64::consts::SQRT_2 * c.d);
            config.extra.insert("b".into(), json!(b));
            oracles::lshape_reference(b)?
        }
    };
    let name = to_value(&a.name);
    let csv = format!("name,value\n{},{}\n", name.as_str().unwrap_or(""), num(value.value));
    let json = envelope(&config, to_value(&value));
    Ok((config, Report { json, csv: Some(csv) }))
}

fn cmd_export(a: &ExportArgs) -> Outcome<(RunConfig, Report)> {
    let mut r = resolve("export-eigenfunction", &a.common)?;
    r.config.extra.insert("index".into(), json!(a.index));
    let k = r.config.k.max(a.index + 1);
    let solve = solve_spectrum(&r.spec, &r.profile, k, &r.solver)?;
    let u = solve.mode(a.index);
    let mut csv = String::from("x,y,value\n");
    for (p, v) in solve.mesh.vertices.iter().zip(&u) {
        let _ = writeln!(csv, "{},{},{}", num(p[0]), num(p[1]), num(*v));
    }
    let mut json = envelope(
        &r.config,
        json!({
            "index": a.index,
            "eigenvalue": solve.spectrum.eigenvalues[a.index],
            "residual": solve.spectrum.residuals[a.index],
            "n_vertices": u.len(),
        }),
    );
    if r.config.format == Format::Json {
        let rows: Vec<[f64; 3]> = solve.mesh.vertices.iter().zip(&u).map(|(p, v)| [p[0], p[1], *v]).collect();
        json["vertices"] = to_value(&rows);
    }
    Ok((r.config, Report { json, csv: Some(csv) }))
}

fn execute(cli: &Cli) -> Outcome<()> {
    let (config, report) = match &cli.command {
        Command::Solve(c) => cmd_solve(c)?,
        Command::Detect(c) => cmd_detect(c)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::Threshold(a) => cmd_threshold(a)?,
        Command::Converge(a) => cmd_converge(a)?,
        Command::ProbeEssential(a) => cmd_probe(a)?,
        Command::Oracle(a) => cmd_oracle(a)?,
        Command::ExportEigenfunction(a) => cmd_export(a)?,
    };
    emit(&config, report)
}

fn error_record(kind: &str, message: &str) -> String {
    json!({ "tool": "halfband", "version": VERSION, "error": { "kind": kind, "message": message } }).to_string()
}

/// Run the tool on `argv` (including the program name) and return the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let merged = match merge_config(&argv) {
        Ok(m) => m,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", error_record("Usage", &msg));
            return 2;
        }
        Err(_) => unreachable!("config merging only fails on usage"),
    };
    let cli = match Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", error_record("Usage", &msg));
            2
        }
        Err(Failure::Input(e)) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            2
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let e = parse_config("# comment\nd = 2\n\nbracket = -5 0  # inline\n").unwrap();
        assert_eq!(e[0], ("d".to_string(), vec!["2".to_string()]));
        assert_eq!(e[1].1, vec!["-5", "0"]);
        assert!(parse_config("d 2").is_err());
        assert!(parse_config("config = x").is_err());
    }

    #[test]
    fn flag_detection() {
        let argv: Vec<String> = ["halfband", "solve", "--d=2", "--sigma", "1"].map(String::from).to_vec();
        assert!(flag_given(&argv, "d"));
        assert!(flag_given(&argv, "sigma"));
        assert!(!flag_given(&argv, "sigma-file"));
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -4.934802200544679, 1e-300, 12345.678] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar(Path::new("a/b.csv")), PathBuf::from("a/b.csv.json"));
    }

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
