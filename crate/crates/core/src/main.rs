use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thermosmc::datafile;
use thermosmc::driver::{
    cmd_bench, cmd_gradcheck, cmd_run, print_bench_table, print_grad_report, ModelChoice,
    RunConfig,
};
use thermosmc::error::Result;
use thermosmc::models::{ct_generate, irt_generate_synthetic};

/// Worker-count override, honored only when `--workers` is absent.
const WORKERS_ENV: &str = "THERMOSMC_WORKERS";

#[derive(Parser)]
#[command(
    name = "thermosmc",
    version,
    about = "Bayesian parameter estimation by SMC over thermal particle ensembles with an HMC kernel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SMC inference; writes a trace CSV and prints a summary
    Run(RunArgs),
    /// Check analytic gradients against finite differences
    Gradcheck(GradcheckArgs),
    /// Time the iteration loop over particle and worker sweeps
    Bench(BenchArgs),
    /// Write synthetic datasets for the built-in models
    GenData(GenDataArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target model: ct | irt | gaussian-toy
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Leapfrog step size
    #[arg(long)]
    step_size: Option<f64>,
    /// Leapfrog steps per proposal
    #[arg(long)]
    leapfrog: Option<usize>,
    /// Resample when ESS falls below this fraction of the ensemble
    #[arg(long)]
    ess_threshold: Option<f64>,
    /// Negate the momentum after accepted proposals
    #[arg(long)]
    invert_momentum: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Propagation workers; defaults to available parallelism
    #[arg(long)]
    workers: Option<usize>,
    /// Trace file path; without it the trace goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record measured per-iteration wall times in the trace
    /// (forfeits byte-identical reruns)
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.merge_file(path)?;
        }
        if self.workers.is_none() {
            if let Ok(value) = std::env::var(WORKERS_ENV) {
                config.apply_key("workers", value.trim())?;
            }
        }
        if let Some(model) = &self.model {
            config.model = ModelChoice::parse(model)?;
        }
        if let Some(n) = self.particles {
            config.n_particles = n;
        }
        if let Some(n) = self.iterations {
            config.n_iterations = n;
        }
        if let Some(t) = self.temperature {
            config.temperature = t;
        }
        if let Some(eps) = self.step_size {
            config.step_size = eps;
        }
        if let Some(l) = self.leapfrog {
            config.n_leapfrog = l;
        }
        if let Some(rho) = self.ess_threshold {
            config.ess_threshold = rho;
        }
        if self.invert_momentum {
            config.invert_momentum = true;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(w) = self.workers {
            config.workers = Some(w);
        }
        if let Some(out) = self.out {
            config.out = Some(out);
        }
        if self.timing {
            config.timing = true;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct GradcheckArgs {
    /// Target model: ct | irt | gaussian-toy
    #[arg(long, default_value = "ct")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeded standard-normal check points
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Central-difference step
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// IRT dataset size used for the check
    #[arg(long, default_value_t = 20)]
    persons: usize,
    #[arg(long, default_value_t = 5)]
    items: usize,
    /// Test hook: perturb the analytic gradient by 1e-3
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Target model: ct | irt | gaussian-toy
    #[arg(long, default_value = "ct")]
    model: String,
    /// Particle counts to sweep
    #[arg(long, value_delimiter = ',', default_value = "2048,65538")]
    particles: Vec<usize>,
    /// Worker counts to sweep
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    workers: Vec<usize>,
    /// SMC iterations per cell
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    step_size: f64,
    #[arg(long, default_value_t = 100)]
    leapfrog: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenDataArgs {
    #[command(subcommand)]
    model: GenDataModel,
}

#[derive(Subcommand)]
enum GenDataModel {
    /// Binomial head counts for the two-coin model
    Ct {
        /// True biases, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.75")]
        p_true: Vec<f64>,
        #[arg(long, default_value_t = 40)]
        n_obs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Responses drawn from prior-sampled abilities and item parameters
    Irt {
        #[arg(long, default_value_t = 100)]
        persons: usize,
        #[arg(long, default_value_t = 20)]
        items: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let config = args.into_config()?;
            cmd_run(&config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck(args) => {
            let config = RunConfig {
                model: ModelChoice::parse(&args.model)?,
                irt_persons: args.persons,
                irt_items: args.items,
                seed: args.seed,
                ..RunConfig::default()
            };
            let report = cmd_gradcheck(&config, args.points, args.step, args.corrupt_gradient)?;
            print_grad_report(&report);
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bench(args) => {
            let config = RunConfig {
                model: ModelChoice::parse(&args.model)?,
                n_iterations: args.iterations,
                step_size: args.step_size,
                n_leapfrog: args.leapfrog,
                temperature: args.temperature,
                seed: args.seed,
                ..RunConfig::default()
            };
            let rows = cmd_bench(&config, &args.particles, &args.workers)?;
            print_bench_table(&rows);
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData(args) => {
            match args.model {
                GenDataModel::Ct {
                    p_true,
                    n_obs,
                    seed,
                    out,
                } => {
                    if p_true.len() != 2 {
                        return Err(thermosmc::Error::InvalidArgument(
                            "--p-true needs exactly two biases".into(),
                        ));
                    }
                    let data = ct_generate([p_true[0], p_true[1]], n_obs, seed)?;
                    datafile::write_ct(&out, &data)?;
                    let [k1, k2] = data.heads();
                    println!(
                        "{{\"n_obs\":{},\"heads\":[{},{}],\"p_true\":[{},{}]}}",
                        data.n_obs(),
                        k1,
                        k2,
                        p_true[0],
                        p_true[1]
                    );
                }
                GenDataModel::Irt {
                    persons,
                    items,
                    seed,
                    out,
                } => {
                    let (data, truth) = irt_generate_synthetic(persons, items, seed)?;
                    datafile::write_irt(&out, &data)?;
                    println!(
                        "{}",
                        serde_json::json!({
                            "persons": persons,
                            "items": items,
                            "truth": truth,
                        })
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
