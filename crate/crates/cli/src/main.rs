//! `rnc`: run, sweep and replay seeded network-coding experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resilient_nc::cryptokit::pke_keygen;
use resilient_nc::harness::{self, Executor, Grid, HarnessError, Report, TrialConfig};
use resilient_nc::netsim::{profile, Topology};

#[derive(Parser)]
#[command(name = "rnc", version, about = "Byzantine-resilient network coding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of one configuration and write a report.
    Run(Box<RunArgs>),
    /// Run every cell of a TOML parameter grid.
    Sweep(SweepArgs),
    /// Re-run the configuration embedded in a report.
    Rerun(RerunArgs),
    /// Print capacity and latency parameters of a topology.
    Profile {
        #[arg(long)]
        topology: PathBuf,
    },
    /// Generate a key pair for the public-key scheme.
    Keygen {
        #[arg(long, default_value_t = 61)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes `<PREFIX>.sk` and `<PREFIX>.pk`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Output {
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON mirror of the report.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Run trials one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    q: Option<u32>,
    /// Packets per slice; defaults to C - z.
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    z: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated strategies: null, random, additive, replay, forger.
    #[arg(long)]
    adversary: Option<String>,
    /// auto, omniscient, causal or secret-excluded.
    #[arg(long)]
    knowledge: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// skew, lookahead or edges.
    #[arg(long)]
    delta_mode: Option<String>,
    /// Comma-separated controlled edge indices (file order); greedy min-cut placement otherwise.
    #[arg(long)]
    edges: Option<String>,
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    index_free: bool,
    #[arg(long)]
    pke_k: Option<u32>,
    /// Keep the message from the adversary.
    #[arg(long)]
    hide_message: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Summary table file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one report per cell.
    #[arg(long)]
    reports: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RerunArgs {
    report: PathBuf,
    /// Exit with status 1 unless the new report is byte-identical.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
enum Failure {
    Harness(HarnessError),
    Io(PathBuf, std::io::Error),
    Mismatch,
    Interrupted,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self::Harness(e)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn executor(sequential: bool) -> Executor {
    if sequential {
        Executor::Sequential
    } else {
        Executor::default()
    }
}

fn build_config(a: &RunArgs) -> Result<TrialConfig, Failure> {
    let mut c = TrialConfig::default();
    c.set("scheme", &a.scheme)?;
    c.load_topology(&a.topology)?;
    let optional = [
        ("q", a.q.map(|v| v.to_string())),
        ("b", a.b.map(|v| v.to_string())),
        ("z", a.z.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("trials", a.trials.map(|v| v.to_string())),
        ("adversary", a.adversary.clone()),
        ("knowledge", a.knowledge.clone()),
        ("seed", a.seed.map(|v| v.to_string())),
        ("delta_mode", a.delta_mode.clone()),
        ("edges", a.edges.clone()),
        ("sessions", a.sessions.map(|v| v.to_string())),
        ("pke_k", a.pke_k.map(|v| v.to_string())),
    ];
    for (key, value) in optional {
        if let Some(v) = value {
            c.set(key, &v)?;
        }
    }
    c.index_free = a.index_free;
    c.expose_message = !a.hide_message;
    Ok(c)
}

fn emit(report: &Report, output: &Output) -> Result<(), Failure> {
    let text = report.to_text();
    match &output.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &output.json {
        write(path, &report.to_json())?;
    }
    Ok(())
}

fn run_config(config: &TrialConfig, output: &Output, cancel: &AtomicBool) -> Result<Report, Failure> {
    let start = Instant::now();
    let report = harness::run_with_cancel(config, executor(output.sequential), cancel)?;
    eprintln!(
        "{} trials x {} strategies in {:.2?}",
        report.metrics.completed_trials,
        report.metrics.strategies.len(),
        start.elapsed()
    );
    emit(&report, output)?;
    if report.metrics.interrupted {
        return Err(Failure::Interrupted);
    }
    Ok(report)
}

fn dispatch(cli: Cli, cancel: &AtomicBool) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let config = build_config(&args)?;
            run_config(&config, &args.output, cancel)?;
        }
        Command::Rerun(args) => {
            let original = read(&args.report)?;
            let config = Report::parse_config(&original)?;
            let report = run_config(&config, &args.output, cancel)?;
            if args.check && report.to_text() != original {
                return Err(Failure::Mismatch);
            }
        }
        Command::Sweep(args) => {
            let grid = Grid::load(&args.grid)?;
            let table = harness::run_sweep(&grid, executor(args.sequential))?;
            if let Some(dir) = &args.reports {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.clone(), e))?;
                for (i, cell) in table.cells.iter().enumerate() {
                    write(&dir.join(format!("cell-{i:03}.txt")), &cell.report.to_text())?;
                }
            }
            match &args.out {
                Some(path) => write(path, &table.to_text())?,
                None => print!("{}", table.to_text()),
            }
        }
        Command::Profile { topology } => {
            let topo = Topology::load(&topology).map_err(HarnessError::from)?;
            let p = profile(&topo).map_err(HarnessError::from)?;
            println!("C: {}", p.capacity);
            let caps: Vec<String> = p.sink_capacities.iter().map(|c| c.to_string()).collect();
            println!("sink_capacities: {}", caps.join(","));
            println!("delta_skew: {}", p.delta);
            println!("lookahead: {}", p.lookahead);
            println!("edges: {}", p.edge_count);
        }
        Command::Keygen { k, seed, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (sk, pk) = pke_keygen(k, &mut rng).map_err(HarnessError::from)?;
            let with_ext = |ext: &str| {
                let mut p = out.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            write(&with_ext(".sk"), &sk.to_file_string())?;
            write(&with_ext(".pk"), &pk.to_file_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&cancel);
    // a second handler registration only fails if one exists already
    let _ = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst));
    match dispatch(cli, &cancel) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(2)
        }
        Err(Failure::Mismatch) => {
            eprintln!("error: re-run differs from the original report");
            ExitCode::from(1)
        }
        Err(Failure::Interrupted) => {
            eprintln!("interrupted: wrote a partial report");
            ExitCode::from(130)
        }
    }
}
