//! `kgd`: validate graphs, check contraction families, build and verify
//! isometric dilations.
//!
//! Exit codes: 0 when every requested check holds, 1 when one fails, 2 on
//! input or usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kgd_core::conditions::{check_brehmer_solel, check_doubly_commuting, check_popescu, PopescuGrid};
use kgd_core::contraction::{check_lambda_contraction, check_tck, check_toeplitz_family, LambdaContraction};
use kgd_core::dilation::{
    check_coisometric_inheritance, check_dc_streg_equivalence, check_regular, check_star_regular, dilate,
    verify_dilation, DilateOptions, DilationError,
};
use kgd_core::io::{self, IoError, FORMAT_VERSION};
use kgd_core::kgraph::{KGraph, Shape};
use kgd_core::report::Report;
use kgd_core::selftest::{selftest, SelftestOptions};

#[derive(Parser, Debug)]
#[command(name = "kgd", version, about = "Higher-rank graph contractions and their isometric dilations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Absolute tolerance for every residual and margin.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Lower end of the Popescu sampling interval (rho, 1).
    #[arg(long, global = true, default_value_t = 0.5)]
    rho: f64,
    /// Number of Popescu sample points inside (rho, 1); s = 1 is always added.
    #[arg(long = "grid-count", global = true, default_value_t = 32)]
    grid_count: usize,
    /// Largest path shape to evaluate, e.g. "2,1". Defaults to the largest
    /// nonempty shape of an acyclic graph and to all ones otherwise.
    #[arg(long = "shape-cap", global = true)]
    shape_cap: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for dilation term order and self-test generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the factorization axioms of a graph.
    ValidateGraph { graph: PathBuf },
    /// Check the contraction axioms and the Popescu, Brehmer-Solel and
    /// doubly-commuting conditions, or only the named checks.
    Check {
        graph: PathBuf,
        family: PathBuf,
        #[arg(value_enum)]
        only: Vec<Condition>,
    },
    /// Build the minimal isometric dilation.
    Dilate { graph: PathBuf, family: PathBuf },
    /// Verify a candidate dilation against a family.
    VerifyDilation { graph: PathBuf, family: PathBuf, dilation: PathBuf },
    /// Run the randomized property suites.
    Selftest {
        /// Random families per suite.
        #[arg(long, default_value_t = 60)]
        count: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Condition {
    Axioms,
    Popescu,
    BrehmerSolel,
    DoublyCommuting,
    Toeplitz,
    Tck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Validated settings shared by every command.
#[derive(Clone, Debug)]
struct RunConfig {
    tol: f64,
    grid: PopescuGrid,
    shape_cap: Option<Shape>,
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(IoError),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

/// A finished command: pass/fail, a JSON document and its text rendering.
struct Outcome {
    holds: bool,
    json: Value,
    text: String,
}

impl Outcome {
    fn from_reports(command: &str, reports: Vec<Report>, informational: Vec<Report>, extra: Value) -> Outcome {
        let holds = reports.iter().all(|r| r.holds);
        let mut text: String = reports.iter().map(Report::to_text).collect();
        for r in &informational {
            text.push_str(&format!("(informational) {}", r.to_text()));
        }
        text.push_str(&format!("result: {}\n", if holds { "holds" } else { "FAILS" }));
        let mut json = json!({
            "format": FORMAT_VERSION,
            "command": command,
            "holds": holds,
            "reports": reports,
            "informational": informational,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut json, extra) {
            m.extend(e);
        }
        Outcome { holds, json, text }
    }
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    if !(cli.rho > 0.0 && cli.rho < 1.0) {
        return Err(CliError::Usage(format!("--rho must lie in (0, 1), got {}", cli.rho)));
    }
    if cli.grid_count < 2 {
        return Err(CliError::Usage(format!("--grid-count must be at least 2, got {}", cli.grid_count)));
    }
    let shape_cap = cli.shape_cap.as_deref().map(Shape::parse).transpose().map_err(CliError::Usage)?;
    Ok(RunConfig { tol: cli.tol, grid: PopescuGrid { rho: cli.rho, count: cli.grid_count }, shape_cap, seed: cli.seed })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("KGD_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("KGD_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn load_graph(path: &Path) -> Result<Arc<KGraph>, CliError> {
    Ok(Arc::new(io::load_graph(path)?))
}

fn invalid_graph(command: &str, g: &KGraph) -> Outcome {
    let report = g.validate();
    let mut text = String::from("graph: FAILS\n");
    for v in &report.violations {
        text.push_str(&format!("  [{:?}] {} ({})\n", v.kind, v.message, v.edges.join(", ")));
    }
    text.push_str("result: FAILS\n");
    let json = json!({ "format": FORMAT_VERSION, "command": command, "holds": false, "graph": report });
    Outcome { holds: false, json, text }
}

fn load_family(g: &Arc<KGraph>, path: &Path, cfg: &RunConfig) -> Result<LambdaContraction, CliError> {
    let v = io::load_contraction(g.clone(), path)?;
    let cap = match (&cfg.shape_cap, g.acyclicity().max_shape) {
        (Some(cap), _) => {
            if cap.rank() != g.rank() {
                return Err(CliError::Usage(format!(
                    "--shape-cap has {} entries, graph has rank {}",
                    cap.rank(),
                    g.rank()
                )));
            }
            cap.clone()
        }
        (None, Some(max)) => max,
        (None, None) => return Ok(v),
    };
    Ok(v.with_shape_cap(cap))
}

const DEFAULT_CONDITIONS: [Condition; 4] =
    [Condition::Axioms, Condition::Popescu, Condition::BrehmerSolel, Condition::DoublyCommuting];

fn condition_report(c: Condition, v: &LambdaContraction, cfg: &RunConfig) -> Report {
    match c {
        Condition::Axioms => check_lambda_contraction(v, cfg.tol),
        Condition::Popescu => check_popescu(v, cfg.grid, cfg.tol),
        Condition::BrehmerSolel => check_brehmer_solel(v, cfg.tol),
        Condition::DoublyCommuting => check_doubly_commuting(v, cfg.tol),
        Condition::Toeplitz => check_toeplitz_family(v, cfg.tol),
        Condition::Tck => check_tck(v, cfg.tol),
    }
}

fn condition_reports(v: &LambdaContraction, cfg: &RunConfig) -> Vec<Report> {
    DEFAULT_CONDITIONS.iter().map(|&c| condition_report(c, v, cfg)).collect()
}

fn validate_graph(path: &Path) -> Result<Outcome, CliError> {
    let g = load_graph(path)?;
    let report = g.validate();
    if !report.valid {
        return Ok(invalid_graph("validate-graph", &g));
    }
    let acyclicity = g.acyclicity();
    let text = format!(
        "graph: valid (rank {}, {} vertices, {} edges, {})\nresult: holds\n",
        g.rank(),
        g.vertex_count(),
        g.edges().len(),
        match &acyclicity.max_shape {
            Some(m) => format!("acyclic, largest shape {m}"),
            None => "cyclic".into(),
        }
    );
    let json = json!({
        "format": FORMAT_VERSION,
        "command": "validate-graph",
        "holds": true,
        "graph": report,
        "rank": g.rank(),
        "vertices": g.vertex_count(),
        "edges": g.edges().len(),
        "acyclicity": acyclicity,
    });
    Ok(Outcome { holds: true, json, text })
}

/// Without `only`, Toeplitz and TCK reports are informational.
fn check(graph: &Path, family: &Path, only: &[Condition], cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = load_graph(graph)?;
    if !g.validate().valid {
        return Ok(invalid_graph("check", &g));
    }
    let v = load_family(&g, family, cfg)?;
    if !only.is_empty() {
        let mut selected = only.to_vec();
        selected.sort();
        selected.dedup();
        let reports = selected.iter().map(|&c| condition_report(c, &v, cfg)).collect();
        return Ok(Outcome::from_reports("check", reports, Vec::new(), json!({})));
    }
    let info = vec![condition_report(Condition::Toeplitz, &v, cfg), condition_report(Condition::Tck, &v, cfg)];
    Ok(Outcome::from_reports("check", condition_reports(&v, cfg), info, json!({})))
}

fn dilate_cmd(graph: &Path, family: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = load_graph(graph)?;
    if !g.validate().valid {
        return Ok(invalid_graph("dilate", &g));
    }
    let v = load_family(&g, family, cfg)?;
    let opts = DilateOptions { tol: cfg.tol, grid: cfg.grid, seed: cfg.seed };
    match dilate(&v, opts) {
        Ok(result) => {
            let holds = result.diagnostics.holds;
            let text = format!(
                "dilation: dim H = {}, dim K = {}\n{}result: {}\n",
                result.dilated.dim_h(),
                result.dilation.x.dim_h(),
                result.diagnostics.to_text(),
                if holds { "holds" } else { "FAILS" }
            );
            let json = serde_json::to_value(result.to_json()).expect("dilation serializes");
            Ok(Outcome { holds, json, text })
        }
        Err(DilationError::Shape(m)) => Err(CliError::Usage(m)),
        Err(e) => {
            let mut out = Outcome::from_reports(
                "dilate",
                condition_reports(&v, cfg),
                Vec::new(),
                json!({ "error": e.to_string() }),
            );
            out.holds = false;
            out.json["holds"] = json!(false);
            out.text = format!("dilate: {e}\n{}", out.text.replace("result: holds\n", "result: FAILS\n"));
            Ok(out)
        }
    }
}

fn verify(graph: &Path, family: &Path, dilation: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = load_graph(graph)?;
    if !g.validate().valid {
        return Ok(invalid_graph("verify-dilation", &g));
    }
    let v = load_family(&g, family, cfg)?;
    let doc = io::load_dilation(dilation)?;
    let v = match &doc.support {
        Some(u) => {
            if u.nrows() != v.dim_h() || u.ncols() != doc.dim_h {
                return Err(CliError::Usage(format!(
                    "support is {}x{}, expected {}x{}",
                    u.nrows(),
                    u.ncols(),
                    v.dim_h(),
                    doc.dim_h
                )));
            }
            v.map_ops(|m| u.adjoint() * m * u).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None if !v.is_nondegenerate(cfg.tol) => v.nondegenerate_part().0,
        None => v,
    };
    let usage = |e: DilationError| CliError::Usage(format!("{}: {e}", dilation.display()));
    let d = doc.dilation(&v).map_err(usage)?;
    let contract = verify_dilation(&v, &d, cfg.tol).map_err(usage)?;
    let reports =
        vec![contract, check_dc_streg_equivalence(&v, &d, cfg.tol), check_coisometric_inheritance(&v, &d, cfg.tol)];
    let info = vec![check_regular(&v, &d, cfg.tol), check_star_regular(&v, &d, cfg.tol)];
    Ok(Outcome::from_reports("verify-dilation", reports, info, json!({ "dimK": doc.dim_k, "dimH": doc.dim_h })))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = config(cli)?;
    configure_threads()?;
    match &cli.command {
        Command::ValidateGraph { graph } => validate_graph(graph),
        Command::Check { graph, family, only } => check(graph, family, only, &cfg),
        Command::Dilate { graph, family } => dilate_cmd(graph, family, &cfg),
        Command::VerifyDilation { graph, family, dilation } => verify(graph, family, dilation, &cfg),
        Command::Selftest { count } => {
            let opts = SelftestOptions { seed: cfg.seed, count: *count, tol: cfg.tol, grid: cfg.grid };
            Ok(Outcome::from_reports("selftest", vec![selftest(opts)], Vec::new(), json!({ "seed": cfg.seed })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("kgd: {e}");
            return ExitCode::from(2);
        }
    };
    let rendered = match cli.format {
        Format::Json => io::to_json(&outcome.json),
        Format::Text => outcome.text,
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                eprintln!("kgd: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{rendered}"),
    }
    ExitCode::from(if outcome.holds { 0 } else { 1 })
}
