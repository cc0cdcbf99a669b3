//! `treevrpsd` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
//! error, 3 enumeration limit exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use treevrpsd::report::{self, ReportConfig, ReportRow};
use treevrpsd::{
    bound_set, enum_limit_from_env, evaluate, generate, parse_instance, run, EvalError, GeneratorParams,
    Instance, Method, PmfFamily, Policy, Realization, Topology,
};

#[derive(Parser)]
#[command(name = "treevrpsd", version, about = "Randomized a priori routing on trees with stochastic demands")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance document.
    Gen {
        #[arg(long, allow_negative_numbers = true)]
        n: i64,
        #[arg(long, allow_negative_numbers = true)]
        capacity: i64,
        #[arg(long, default_value = "path")]
        topology: Topology,
        /// det:<k>, unif:<lo>-<hi> or two:<k1>,<p1>,<k2>
        #[arg(long)]
        pmf: PmfFamily,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        length_low: f64,
        #[arg(long, default_value_t = 1.0)]
        length_high: f64,
        /// Instance name; defaults to the file stem of --out.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the lower and upper bounds of an instance as JSON.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run one policy on one realization and print the walk.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: Policy,
        /// Seed for drawing demands and the initial load.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated demands by customer; overrides sampling.
        #[arg(long, value_delimiter = ',')]
        demands: Option<Vec<u32>>,
        /// Initial load in 1..=Q; overrides sampling.
        #[arg(long)]
        initial_load: Option<u32>,
    },
    /// Expected cost of a policy with bounds and ratios.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: Policy,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Evaluate every instance in a directory into a CSV table.
    Report {
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo replications for instances too large to enumerate.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Runtime(String),
    Usage(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Limit(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Runtime(m) | Failure::Usage(m) | Failure::Limit(m) => m,
        }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn limit() -> Result<u64, Failure> {
    enum_limit_from_env().map_err(Failure::Usage)
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::TooLarge(t) => Failure::Limit(format!("{t} (try --mode mc)")),
        other => Failure::Usage(other.to_string()),
    }
}

/// `foo.csv` -> `foo.hist.csv`
fn histogram_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.hist.csv"))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Gen {
            n,
            capacity,
            topology,
            pmf,
            seed,
            length_low,
            length_high,
            name,
            out,
        } => {
            let name = name.unwrap_or_else(|| {
                out.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let params = GeneratorParams {
                name,
                n,
                capacity,
                topology,
                length_range: (length_low, length_high),
                pmf,
                seed,
            };
            let inst = generate(&params).map_err(|e| Failure::Usage(e.to_string()))?;
            write(&out, &inst.to_json())?;
            println!("{}", out.display());
        }
        Command::Bounds { instance } => {
            let inst = load(&instance)?;
            let b = bound_set(&inst.tree, &inst.model);
            println!("{}", serde_json::to_string_pretty(&b).expect("plain struct"));
        }
        Command::Simulate {
            instance,
            policy,
            seed,
            demands,
            initial_load,
        } => {
            let inst = load(&instance)?;
            let sampled = inst
                .model
                .sample_realization(&mut treevrpsd::evaluator::replication_rng(seed, 0));
            let r = Realization::new(
                demands.unwrap_or(sampled.demands),
                initial_load.unwrap_or(sampled.initial_load),
            );
            let trace = run(&inst.tree, &inst.tree.dfs_order(), &r, policy)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            print!("{}", trace.dump());
            println!("TOTAL {}", trace.total_length);
        }
        Command::Evaluate {
            instance,
            policy,
            mode,
            samples,
            seed,
            format,
        } => {
            let inst = load(&instance)?;
            let limit = limit()?;
            let method = match mode {
                Mode::Exact => Method::Exact { limit },
                Mode::Mc => Method::MonteCarlo { samples, seed },
            };
            let eval = evaluate(&inst.name, &inst.tree, &inst.model, policy, method).map_err(eval_failure)?;
            match format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&eval).expect("plain struct"))
                }
                Format::Csv => {
                    let clairvoyant_lb =
                        report::clairvoyant_for(&inst, policy, limit).map_err(eval_failure)?;
                    print!("{}", report::rows_to_csv(&[ReportRow { eval, clairvoyant_lb }]));
                }
            }
        }
        Command::Report {
            corpus_dir,
            out_csv,
            seed,
            samples,
        } => {
            if samples < 2 {
                return Err(Failure::Usage(format!("--samples must be at least 2, got {samples}")));
            }
            let cfg = ReportConfig {
                seed,
                samples,
                enum_limit: limit()?,
            };
            let out = report::run_report(&corpus_dir, &cfg)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", corpus_dir.display())))?;
            write(&out_csv, &report::rows_to_csv(&out.rows))?;
            write(&histogram_path(&out_csv), &report::ratio_histogram_csv(&out.rows))?;
            println!("{} rows written to {}", out.rows.len(), out_csv.display());
            if !out.failures.is_empty() {
                for (path, msg) in &out.failures {
                    eprintln!("failed: {}: {msg}", path.display());
                }
                return Err(Failure::Runtime(format!(
                    "{} instance(s) failed",
                    out.failures.len()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Command::Evaluate { mode: Mode::Mc, samples, .. } = &cli.command {
        if *samples < 2 {
            eprintln!("error: --samples must be at least 2 for Monte Carlo, got {samples}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
