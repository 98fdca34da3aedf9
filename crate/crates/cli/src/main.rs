//! `cloudsel` command-line tool.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 no feasible
//! combination, 4 file or resource error, 5 evaluation error.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use cloudsel::bench::{run_bench, BenchConfig};
use cloudsel::catalog::{generate_synthetic_catalog, Catalog, CatalogDocument, DependencyMode};
use cloudsel::codes::ErrorCode;
use cloudsel::session::{run_session, Mode, Outcome, RelaxationPolicy, SessionDocument};
use cloudsel_server::AppState;

#[derive(Debug, Parser)]
#[command(name = "cloudsel", version, about = "Select VM images and infrastructure services for a cloud migration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a catalog and list every violation.
    Validate {
        #[arg(long)]
        catalog: PathBuf,
    },
    /// Run a session document and write the ranked result document.
    Evaluate {
        #[arg(long)]
        session: PathBuf,
        /// Catalog to use instead of the one named in the session.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Output file; the result goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        /// `auto` or a fixed number of requirements an alternative may fail.
        #[arg(long)]
        relaxation: Option<RelaxationPolicy>,
    },
    /// Time the pipeline on synthetic catalogs of growing size.
    Bench {
        /// Bench config (TOML); defaults to 100..1000 in steps of 100, 20 repetitions.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for bench_report.csv and bench_summary.toml.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the parallel combination step.
        #[arg(long)]
        parallel: bool,
    },
    /// Write a random catalog over the standard attribute schema.
    Generate {
        #[arg(long)]
        images: usize,
        #[arg(long)]
        services: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only pair images with services of the same provider.
        #[arg(long)]
        same_provider: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the bundled demo catalog and session into a directory.
    Demo {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        /// Extra catalogs, served under their file stem. The demo catalog is always served as `demo`.
        #[arg(long)]
        catalog: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persist sessions to this directory and restore them on start.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: ErrorCode,
    message: String,
}

impl Failure {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(ErrorCode::Input, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::new(ErrorCode::Input, format!("{}: {e}", path.display())))
}

/// Loads a catalog, reporting every violation rather than the first.
fn load_catalog(path: &Path) -> Result<Catalog, Failure> {
    let text = read(path)?;
    let doc = CatalogDocument::parse(&text).map_err(|e| Failure::new(ErrorCode::Validation, format!("{}: {e}", path.display())))?;
    let violations = doc.violations();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("{}: {v}", path.display())).collect();
        return Err(Failure::new(ErrorCode::Validation, lines.join("\n")));
    }
    Catalog::from_document(doc).map_err(|e| Failure::new(ErrorCode::Validation, e.to_string()))
}

fn validate(catalog: &Path) -> CmdResult {
    load_catalog(catalog)?;
    println!("OK");
    Ok(())
}

fn evaluate(
    session_path: &Path,
    catalog: Option<&Path>,
    out: Option<&Path>,
    mode: Option<Mode>,
    relaxation: Option<RelaxationPolicy>,
) -> CmdResult {
    let text = read(session_path)?;
    let mut session = SessionDocument::parse(&text)
        .map_err(|e| Failure::new(ErrorCode::Validation, format!("{}: {e}", session_path.display())))?;
    let catalog_path = match (catalog, &session.catalog) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(rel)) => session_path.parent().unwrap_or(Path::new(".")).join(rel),
        (None, None) => {
            return Err(Failure::new(ErrorCode::Usage, "no catalog: pass --catalog or set `catalog` in the session"))
        }
    };
    let catalog = load_catalog(&catalog_path)?;
    if let Some(m) = mode {
        session.mode = m;
    }
    if let Some(r) = relaxation {
        session.relaxation = r;
    }
    let result = run_session(&catalog, &session).map_err(|e| {
        Failure::new(ErrorCode::from(&e), format!("{}: {e}", session_path.display()))
    })?;
    let doc = result.to_toml();
    match out {
        Some(p) => write(p, &doc)?,
        None => print!("{doc}"),
    }
    let r = &result.relaxation;
    eprintln!("relaxation level used: images {}, services {}", r.image_level, r.service_level);
    for w in &result.warnings {
        eprintln!(
            "warning: {} hierarchy, goal `{}`: consistency ratio {:.3} exceeds 0.1",
            w.hierarchy, w.goal, w.consistency_ratio
        );
    }
    match (&result.outcome, &result.best) {
        (Outcome::Ok, Some(b)) => {
            eprintln!("best: {} on {} (value {:.6})", b.image_id, b.service_id, b.combined_value);
            Ok(())
        }
        _ => Err(Failure::new(ErrorCode::NoFeasibleCombination, "no feasible image-service combination")),
    }
}

fn bench(config: Option<&Path>, out: &Path, seed: Option<u64>, parallel: bool) -> CmdResult {
    let mut cfg = match config {
        Some(p) => BenchConfig::parse(&read(p)?).map_err(|e| Failure::new(ErrorCode::Validation, format!("{}: {e}", p.display())))?,
        None => BenchConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.parallel |= parallel;
    let report = run_bench(&cfg).map_err(|e| Failure::new(ErrorCode::Validation, e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| Failure::new(ErrorCode::Input, format!("{}: {e}", out.display())))?;
    write(&out.join("bench_report.csv"), &report.to_csv())?;
    write(&out.join("bench_summary.toml"), &report.summary_toml())?;

    println!("{:>6} {:>6} {:>12} {:>12} {:>12} {:>12}", "m", "n", "images_s", "services_s", "combine_s", "total_s");
    for row in report.rows() {
        match (&row.error, row.image_evaluation, row.service_evaluation, row.combination, row.total) {
            (None, Some(i), Some(s), Some(c), Some(t)) => {
                println!("{:>6} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}", row.m, row.n, i.mean, s.mean, c.mean, t.mean)
            }
            (err, ..) => println!("{:>6} {:>6} error: {}", row.m, row.n, err.as_deref().unwrap_or("unknown")),
        }
    }
    if let Some(fit) = &report.summary.total_fit {
        println!("total ~ {:.3e}*s^2 + {:.3e}*s + {:.3e} (R^2 = {:.4})", fit.a2, fit.a1, fit.a0, fit.r_squared);
    }
    Ok(())
}

fn generate(images: usize, services: usize, seed: u64, same_provider: bool, out: Option<&Path>) -> CmdResult {
    let mode = if same_provider { DependencyMode::SameProvider } else { DependencyMode::CrossProduct };
    let catalog = generate_synthetic_catalog(images, services, seed, mode)
        .map_err(|e| Failure::new(ErrorCode::Validation, e.to_string()))?;
    let text = catalog.to_document().to_toml();
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn demo(out: &Path) -> CmdResult {
    fs::create_dir_all(out).map_err(|e| Failure::new(ErrorCode::Input, format!("{}: {e}", out.display())))?;
    write(&out.join("demo_catalog.toml"), cloudsel::demo::CATALOG_TOML)?;
    write(&out.join("demo_session.toml"), cloudsel::demo::SESSION_TOML)?;
    println!("wrote {} and {}", out.join("demo_catalog.toml").display(), out.join("demo_session.toml").display());
    Ok(())
}

fn serve(catalogs: &[PathBuf], addr: SocketAddr, snapshot_dir: Option<&Path>) -> CmdResult {
    let mut registry = BTreeMap::from([("demo".to_string(), cloudsel::demo::catalog())]);
    for path in catalogs {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Failure::new(ErrorCode::Usage, format!("{}: cannot derive a catalog id", path.display())))?;
        registry.insert(id.to_string(), load_catalog(path)?);
    }
    let ids: Vec<String> = registry.keys().cloned().collect();
    let mut state = AppState::new(registry);
    if let Some(dir) = snapshot_dir {
        state = state
            .with_snapshot_dir(dir)
            .map_err(|e| Failure::new(ErrorCode::Input, format!("{}: {e}", dir.display())))?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(ErrorCode::Input, e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::new(ErrorCode::Input, format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::new(ErrorCode::Input, e.to_string()))?;
        println!("listening on http://{local} (catalogs: {})", ids.join(", "));
        cloudsel_server::serve(listener, Arc::new(state)).await.map_err(|e| Failure::new(ErrorCode::Input, e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { catalog } => validate(catalog),
        Command::Evaluate { session, catalog, out, mode, relaxation } => {
            evaluate(session, catalog.as_deref(), out.as_deref(), *mode, *relaxation)
        }
        Command::Bench { config, out, seed, parallel } => bench(config.as_deref(), out, *seed, *parallel),
        Command::Generate { images, services, seed, same_provider, out } => {
            generate(*images, *services, *seed, *same_provider, out.as_deref())
        }
        Command::Demo { out } => demo(out),
        Command::Serve { catalog, addr, snapshot_dir } => serve(catalog, *addr, snapshot_dir.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code.exit_code())
        }
    }
}
