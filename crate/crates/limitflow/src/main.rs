use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use limitflow::report::Status;
use limitflow::{emit_outputs, load_scenario, resolve_out, run_scenario, LoadError, Overrides, Report, RunOptions};

const EXIT_INVALID: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "limitflow", version, about = "Sampled asymptotics of linear ODEs with convergent coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Output directory; defaults to the scenario's `output`, then $LIMITFLOW_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator tolerance, overriding the scenario.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for `initial = random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sampling steps, overriding the scenario.
    #[arg(long)]
    horizon: Option<usize>,
    /// Record wall-clock time per analysis in report.json.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its outputs.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run every `*.ini` scenario in a directory concurrently.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Parse and validate a scenario without running it.
    Verify { scenario: PathBuf },
}

enum Done {
    Ran(Report),
    Invalid(String),
    Io(String),
}

impl Done {
    fn code(&self) -> u8 {
        match self {
            Done::Ran(r) => r.exit_code() as u8,
            Done::Invalid(_) => EXIT_INVALID,
            Done::Io(_) => EXIT_IO,
        }
    }
}

fn execute(path: &Path, args: &RunArgs, out: impl FnOnce(Option<&Path>) -> PathBuf) -> Done {
    let mut scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e @ LoadError::Read { .. }) => return Done::Io(e.to_string()),
        Err(e) => return Done::Invalid(e.to_string()),
    };
    let overrides = Overrides { tol: args.tol, horizon: args.horizon };
    if let Err(e) = overrides.apply(&mut scenario) {
        return Done::Invalid(format!("{}: {e}", path.display()));
    }
    let report = run_scenario(&scenario, &RunOptions { seed: args.seed, timings: args.timings });
    let dir = out(scenario.output.as_deref());
    match emit_outputs(&report, &dir) {
        Ok(_) => Done::Ran(report),
        Err(e) => Done::Io(e.to_string()),
    }
}

fn summarize(label: &str, done: &Done) {
    match done {
        Done::Ran(r) => {
            for a in r.analyses.iter().filter(|a| !a.ok) {
                println!("{label}: ERROR {}: {}", a.name, a.error.as_deref().unwrap_or(""));
            }
            for v in &r.verdicts {
                let tag = match v.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::NotApplicable => "N/A ",
                    Status::HypothesesUnmet => "HYP ",
                };
                println!("{label}: {tag} {:<24} {}", v.check, v.detail);
            }
            println!("{label}: {:?}", r.outcome);
        }
        Done::Invalid(e) => eprintln!("{label}: {e}"),
        Done::Io(e) => eprintln!("{label}: io error: {e}"),
    }
}

fn batch(dir: &Path, args: &RunArgs) -> u8 {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "ini")).collect(),
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            return EXIT_IO;
        }
    };
    files.sort();
    let base = resolve_out(args.out.as_deref(), None);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Done>>> = Mutex::new((0..files.len()).map(|_| None).collect());
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(files.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = files.get(i) else { break };
                let stem = path.file_stem().map_or_else(|| format!("scenario{i}"), |s| s.to_string_lossy().into_owned());
                let done = execute(path, args, |_| base.join(&stem));
                results.lock().expect("no worker panics while holding the lock")[i] = Some(done);
            });
        }
    });
    let results = results.into_inner().expect("workers joined");
    let mut code = 0;
    for (path, done) in files.iter().zip(results) {
        let done = done.expect("every file processed");
        summarize(&path.display().to_string(), &done);
        code = code.max(done.code());
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                for w in &s.warnings {
                    println!("warning: {w}");
                }
                println!("{}: valid ({} analyses)", s.name, s.analyses.len());
                0
            }
            Err(e @ LoadError::Read { .. }) => {
                eprintln!("{e}");
                EXIT_IO
            }
            Err(e) => {
                eprintln!("{e}");
                EXIT_INVALID
            }
        },
        Command::Run { scenario, args } => {
            let done = execute(&scenario, &args, |own| resolve_out(args.out.as_deref(), own));
            summarize(&scenario.display().to_string(), &done);
            done.code()
        }
        Command::Batch { dir, args } => batch(&dir, &args),
    };
    debug_assert!(code <= EXIT_NUMERICAL);
    ExitCode::from(code)
}
