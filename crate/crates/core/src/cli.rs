//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input, 3 quadrature did not
//! converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::algebra::{gell_mann_basis, sun_coordinates};
use crate::error::Error;
use crate::jet::{EvalPoint, Poly};
use crate::model::HoloSeed;
use crate::stack::{action, immersion_at, QuadConfig};
use crate::verify::{run_suite, GridSpec, SuiteConfig, THREADS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cpn-stack",
    version,
    about = "Verify identities of CP^{N-1} projector towers and export their surfaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity suite over a grid and write a JSON report.
    Verify(VerifyArgs),
    /// Export su(N) coordinates of the surface X_k over a grid.
    Surface(SurfaceArgs),
    /// Integrate the action density of level k over the sphere.
    Action(ActionArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Cartesian grid as WxH points on [-extent, extent]^2.
    #[arg(long, value_parser = parse_grid, conflicts_with = "random")]
    pub grid: Option<(usize, usize)>,
    /// Half-width of the cartesian square, or radius for random grids.
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
    /// Uniform random points in the disk of radius extent.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub prng_seed: u64,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        match (self.grid, self.random) {
            (_, Some(count)) => GridSpec::Random {
                count,
                extent: self.extent,
                prng_seed: self.prng_seed,
            },
            (Some((nx, ny)), None) => GridSpec::Cartesian {
                nx,
                ny,
                extent: self.extent,
            },
            (None, None) => GridSpec::Cartesian {
                nx: 21,
                ny: 21,
                extent: self.extent,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed file (JSON).
    #[arg(long)]
    pub seed: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Tolerance for the identity residuals.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated subset of checks to run.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    /// Random weight vectors per grid point.
    #[arg(long)]
    pub weights: Option<usize>,
    /// Report path; without it the JSON goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub seed: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ActionArgs {
    #[arg(long)]
    pub seed: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Stop refining once successive estimates differ by less than this.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 4)]
    pub max_refinements: usize,
    /// Gauss-Legendre points per panel.
    #[arg(long, default_value_t = 8)]
    pub rule_order: usize,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("grid size {t:?}: {e}"));
    Ok((parse(w)?, parse(h)?))
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            Error::DegeneratePoint { .. } => EXIT_CHECK_FAILED,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses a seed file:
///
/// ```json
/// {"n": 2, "components": [[[1, 0]], [[0, 0], [1, 0]]], "label": "optional"}
/// ```
///
/// Each component lists `[re, im]` coefficients in ascending degree.
pub fn parse_seed_file(text: &str, fallback_label: &str) -> Result<HoloSeed, CliError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| CliError::input(format!("seed file is not valid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::input("seed file: top level must be an object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "n" | "components" | "label")) {
        return Err(CliError::input(format!("seed file: unknown field `{k}`")));
    }
    let n = obj
        .get("n")
        .ok_or_else(|| CliError::input("seed file: missing field `n`"))?
        .as_u64()
        .ok_or_else(|| CliError::input("seed file: `n` must be a non-negative integer"))? as usize;
    let comps = obj
        .get("components")
        .ok_or_else(|| CliError::input("seed file: missing field `components`"))?
        .as_array()
        .ok_or_else(|| CliError::input("seed file: `components` must be an array"))?;
    if comps.len() != n {
        return Err(CliError::input(format!(
            "seed file: `components` has {} entries but `n` is {n}",
            comps.len()
        )));
    }
    let label = match obj.get("label") {
        None => fallback_label.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(CliError::input("seed file: `label` must be a string")),
    };
    let mut polys = Vec::with_capacity(n);
    for (j, comp) in comps.iter().enumerate() {
        let coeffs = comp.as_array().ok_or_else(|| {
            CliError::input(format!(
                "seed file: `components[{j}]` must be an array of [re, im] pairs"
            ))
        })?;
        let mut cs = Vec::with_capacity(coeffs.len());
        for (d, pair) in coeffs.iter().enumerate() {
            let field = format!("components[{j}][{d}]");
            let pair = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| CliError::input(format!("seed file: `{field}` must be a [re, im] pair")))?;
            let num = |x: &Value| {
                x.as_f64()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::input(format!("seed file: `{field}` must hold two finite numbers")))
            };
            cs.push(Complex64::new(num(&pair[0])?, num(&pair[1])?));
        }
        polys.push(Poly::new(cs));
    }
    if polys.iter().all(Poly::is_zero) {
        return Err(CliError::input("seed file: `components` are all zero polynomials"));
    }
    HoloSeed::new(label, polys).map_err(|e| CliError::input(format!("seed file: {e}")))
}

fn read_seed(path: &Path) -> Result<HoloSeed, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read seed file {}: {e}", path.display())))?;
    let label = path
        .file_stem()
        .map_or_else(|| "seed".to_string(), |s| s.to_string_lossy().into_owned());
    parse_seed_file(&text, &label)
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn check_level(seed: &HoloSeed, k: usize) -> Result<(), CliError> {
    if k >= seed.n() {
        return Err(CliError::input(format!(
            "--k {k} is out of range for N = {} (0..={})",
            seed.n(),
            seed.n() - 1
        )));
    }
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let seed = read_seed(&args.seed)?;
    let mut cfg = SuiteConfig::default();
    if let Some(tol) = args.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(CliError::input(format!("--tol must be positive, got {tol}")));
        }
        cfg.tolerances.identity = tol;
    }
    if let Some(w) = args.weights {
        cfg.weights_per_point = w;
    }
    if let Some(names) = &args.checks {
        cfg = cfg.only(names.iter().cloned())?;
    }
    let report = run_suite(&seed, &args.grid.spec(), &cfg)?;
    let mut json = report.to_json();
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    eprint!("{}", report.to_table());
    eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
    Ok(if report.all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// 15 significant digits, as written to CSV and reparsed for JSON.
fn fixed_digits(v: f64) -> String {
    format!("{v:.14e}")
}

#[derive(Serialize)]
struct SurfaceRecord {
    xi1: f64,
    xi2: f64,
    coords: Vec<f64>,
}

#[derive(Serialize)]
struct SurfaceExport {
    seed: String,
    n: usize,
    level: usize,
    basis: Vec<String>,
    points: Vec<SurfaceRecord>,
    degenerate: usize,
}

pub fn cmd_surface(args: &SurfaceArgs) -> Result<i32, CliError> {
    let seed = read_seed(&args.seed)?;
    check_level(&seed, args.k)?;
    let points = args.grid.spec().points()?;
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    let rows: Vec<Option<(EvalPoint, Vec<f64>)>> = pool.install(|| {
        points
            .par_iter()
            .map(|&p| match immersion_at(&seed, args.k, p) {
                Ok(s) => Ok(Some((p, sun_coordinates(&s.x, 1e-8)?))),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_, Error>>()
    })?;
    let degenerate = rows.iter().filter(|r| r.is_none()).count();
    let rows: Vec<(EvalPoint, Vec<f64>)> = rows.into_iter().flatten().collect();
    let n = seed.n();
    let basis: Vec<String> = (1..n * n).map(|a| format!("lambda{a}")).collect();

    let body = match args.format {
        Format::Csv => {
            let mut s = String::from("xi1,xi2");
            for b in &basis {
                s.push(',');
                s.push_str(b);
            }
            s.push('\n');
            for (p, coords) in &rows {
                let fields: Vec<String> = [p.xi1, p.xi2].iter().chain(coords).map(|&v| fixed_digits(v)).collect();
                s.push_str(&fields.join(","));
                s.push('\n');
            }
            s.push_str(&format!("# degenerate={degenerate}\n"));
            s
        }
        Format::Json => {
            let round = |v: f64| fixed_digits(v).parse::<f64>().expect("formatted float parses");
            let export = SurfaceExport {
                seed: seed.label.clone(),
                n,
                level: args.k,
                basis: gell_mann_basis(n).into_iter().map(|b| b.label).collect(),
                points: rows
                    .iter()
                    .map(|(p, c)| SurfaceRecord {
                        xi1: round(p.xi1),
                        xi2: round(p.xi2),
                        coords: c.iter().map(|&v| round(v)).collect(),
                    })
                    .collect(),
                degenerate,
            };
            let mut s = serde_json::to_string_pretty(&export).expect("surface serializes");
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}

pub fn cmd_action(args: &ActionArgs) -> Result<i32, CliError> {
    let seed = read_seed(&args.seed)?;
    check_level(&seed, args.k)?;
    let cfg = QuadConfig {
        rule_order: args.rule_order,
        tol: args.tol,
        max_refinements: args.max_refinements,
        ..QuadConfig::default()
    };
    let r = action(&seed, args.k, &cfg)?;
    let body = match args.format {
        Some(Format::Json) => {
            let mut s = serde_json::to_string_pretty(&r).expect("action serializes");
            s.push('\n');
            s
        }
        _ => format!(
            "value {:.12}\nest_error {:.3e}\ninner {:.12}\nouter {:.12}\nrefinements {}\nchart_split {}\n",
            r.value, r.est_error, r.inner, r.outer, r.refinements, r.chart_split
        ),
    };
    emit(args.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Surface(a) => cmd_surface(a),
        Command::Action(a) => cmd_action(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parsing() {
        assert_eq!(parse_grid("21x21"), Ok((21, 21)));
        assert_eq!(parse_grid("3X5"), Ok((3, 5)));
        assert!(parse_grid("21").is_err());
        assert!(parse_grid("ax2").is_err());
    }

    #[test]
    fn seed_file_round_trip() {
        let s = parse_seed_file(r#"{"n": 2, "components": [[[1, 0]], [[0, 0], [1, 0]]]}"#, "cp1").unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.label, "cp1");
        assert_eq!(s.degree(), 1);
    }

    #[test]
    fn seed_file_diagnostics_name_the_field() {
        let cases = [
            (r#"{"components": []}"#, "`n`"),
            (r#"{"n": 3, "components": [[[1,0]], [[0,0],[1,0]]]}"#, "`components`"),
            (r#"{"n": 2, "components": [[[1,0]], [[0,0],[1]]]}"#, "components[1][1]"),
            (r#"{"n": 2, "components": [[[1,0]], "x"]}"#, "components[1]"),
            (r#"{"n": 2, "components": [[[0,0]], [[0,0]]]}"#, "all zero"),
            (r#"{"n": 2, "components": [[[1,0]], [[0,1]]], "extra": 1}"#, "`extra`"),
            ("not json", "valid JSON"),
        ];
        for (text, needle) in cases {
            let e = parse_seed_file(text, "t").unwrap_err();
            assert_eq!(e.code, EXIT_INPUT);
            assert!(e.message.contains(needle), "{text}: {}", e.message);
        }
    }

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fixed_digits(0.5), "5.00000000000000e-1");
        assert_eq!(fixed_digits(-1.0 / 3.0).len(), "-3.33333333333333e-1".len());
    }

    #[test]
    fn error_codes() {
        let nc = Error::NoConvergence {
            refinements: 1,
            last_change: 1.0,
            tol: 0.0,
        };
        assert_eq!(CliError::from(nc).code, EXIT_NO_CONVERGENCE);
        assert_eq!(CliError::from(Error::InvalidSeed("x".into())).code, EXIT_INPUT);
    }
}
