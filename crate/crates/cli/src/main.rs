//! `inequity`: run single simulations or parameter sweeps from a TOML config.
//!
//! ```text
//! inequity run   --config run.toml   --out results/run   [--seed 42] [--force]
//! inequity sweep --config sweep.toml --out results/sweep [--seed 42] [--parallelism 8] [--force]
//! inequity version
//! ```
//!
//! Exit codes: 0 on success, 1 for usage or config errors, 2 for runtime and
//! I/O errors.

use std::fmt;
use std::fs;
use std::io;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use inequity_core::runner::{run_experiment, write_run};
use inequity_core::{parse_config, ConfigDocument, Topology};

#[derive(Debug, Parser)]
#[command(
    name = "inequity",
    version,
    about = "Inequity-averse partner selection in the prisoner's dilemma"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write its timeseries (and lattice snapshots).
    Run(Common),
    /// Run every cell of a sweep and write per-run timeseries plus sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the number of available cores.
        #[arg(long, value_name = "K")]
        parallelism: Option<NonZeroUsize>,
    },
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML document describing the run or sweep.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; created if absent.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the seed (the master seed for sweeps) given in the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Replace the output directory even if it is not empty.
    #[arg(long)]
    force: bool,
}

#[derive(Debug)]
enum Failure {
    /// Bad input from the user: exit 1.
    Config(String),
    /// Environment or runtime trouble: exit 2.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<inequity_core::Error> for Failure {
    fn from(e: inequity_core::Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Version => {
            println!("inequity {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Run(common) => run(common),
        Command::Sweep {
            common,
            parallelism,
        } => sweep(common, parallelism),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load(path: &Path) -> Result<ConfigDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_config(&text).map_err(|e| match Failure::from(e) {
        Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(common: Common) -> Result<(), Failure> {
    let ConfigDocument::Run(mut cfg) = load(&common.config)? else {
        return Err(Failure::Config(format!(
            "{}: is a sweep document; use `inequity sweep`",
            common.config.display()
        )));
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let existing = claim_output(&common.out, common.force)?;
    let shape = match cfg.topology {
        Topology::Mixed { n, ns } => format!("N={n} Ns={ns}"),
        Topology::Lattice { rows, cols } => format!("{rows}x{cols}"),
    };
    eprintln!(
        "run: {} {shape} c/b={} for {} generations, seed {}",
        cfg.model().as_str(),
        cfg.cb,
        cfg.gmax,
        cfg.seed
    );
    let start = Instant::now();
    publish(&common.out, existing, |dir| write_run(&cfg, dir).map(drop))?;
    eprintln!(
        "run: wrote {} in {:.1}s",
        common.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn sweep(common: Common, parallelism: Option<NonZeroUsize>) -> Result<(), Failure> {
    let ConfigDocument::Sweep(mut spec) = load(&common.config)? else {
        return Err(Failure::Config(format!(
            "{}: is a single-run document; use `inequity run`",
            common.config.display()
        )));
    };
    if let Some(seed) = common.seed {
        spec.master_seed = seed;
    }
    let existing = claim_output(&common.out, common.force)?;
    let workers = parallelism
        .or_else(|| std::thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get);
    let cells = inequity_core::runner::sweep_cells(&spec)?.len();
    eprintln!(
        "sweep: {} cells x {} runs of {} generations on {workers} threads",
        cells, spec.runs_per_cell, spec.gmax
    );
    let start = Instant::now();
    publish(&common.out, existing, |dir| {
        run_experiment(&spec, workers, dir).map(drop)
    })?;
    eprintln!(
        "sweep: wrote {} in {:.1}s",
        common.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Whether `out` already exists. Refuses a non-empty directory unless forced.
fn claim_output(out: &Path, force: bool) -> Result<bool, Failure> {
    match fs::read_dir(out).map(|mut entries| entries.next().is_some()) {
        Ok(true) if !force => Err(Failure::Config(format!(
            "{} is not empty; pass --force to replace it",
            out.display()
        ))),
        Ok(_) => Ok(true),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(io_failure(out, e)),
    }
}

/// Writes into a scratch directory next to `out` and moves it into place
/// only if `write` succeeds, so a failed command leaves nothing behind.
fn publish(
    out: &Path,
    existing: bool,
    write: impl FnOnce(&Path) -> inequity_core::Result<()>,
) -> Result<(), Failure> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".inequity-")
        .tempdir_in(parent)
        .map_err(|e| io_failure(parent, e))?;
    write(staging.path())?;

    if existing {
        fs::remove_dir_all(out).map_err(|e| io_failure(out, e))?;
    }
    let staged = staging.keep();
    // Scratch directories are created owner-only.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let _ = fs::set_permissions(&staged, fs::Permissions::from_mode(0o755));
    }
    fs::rename(&staged, out).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        io_failure(out, e)
    })
}
