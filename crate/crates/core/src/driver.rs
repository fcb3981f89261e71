//! Run configuration, the inference engine behind the CLI, and report
//! emission.
//!
//! A run is fully specified by a [`RunConfig`]: model selection, ensemble
//! size, temperature, kernel settings, seed, and worker count. Identical
//! configurations produce byte-identical trace files regardless of worker
//! count; per-iteration wall times are therefore written as `0` unless the
//! `timing` option is set, which records real milliseconds and forfeits
//! byte-exact reproducibility.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::datafile;
use crate::error::{Error, Result};
use crate::hmc::KernelConfig;
use crate::model::ModelSpec;
use crate::models::{ct_model, gaussian_toy, irt_generate_synthetic, irt_model, CoinTossData};
use crate::parallel::{partition, SeedPlan};
use crate::smc::{
    init_ensemble, smc_iterate, weighted_estimate, ResampleMethod, SmcConfig, TraceRecord,
};

/// Gradient checks must stay below this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Which built-in target to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    CoinToss,
    Irt,
    GaussianToy,
}

impl ModelChoice {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "ct" => Ok(ModelChoice::CoinToss),
            "irt" => Ok(ModelChoice::Irt),
            "gaussian-toy" => Ok(ModelChoice::GaussianToy),
            other => Err(Error::invalid(format!(
                "unknown model `{other}` (expected ct, irt, or gaussian-toy)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelChoice::CoinToss => "ct",
            ModelChoice::Irt => "irt",
            ModelChoice::GaussianToy => "gaussian-toy",
        }
    }
}

/// Everything one run needs; also the schema of the config file.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelChoice,
    /// Coin-toss data file; defaults to the N=40, K=(20,30) dataset.
    pub ct_data: Option<PathBuf>,
    /// IRT response file; without it a synthetic dataset is drawn.
    pub irt_data: Option<PathBuf>,
    pub irt_persons: usize,
    pub irt_items: usize,
    /// Seed for the synthetic IRT dataset, separate from the run seed so the
    /// data stays fixed while chains vary.
    pub irt_data_seed: u64,
    pub gaussian_dim: usize,
    pub n_particles: usize,
    pub n_iterations: usize,
    pub temperature: f64,
    pub k_b: f64,
    pub mass: f64,
    pub step_size: f64,
    pub n_leapfrog: usize,
    pub ess_threshold: f64,
    pub resampler: ResampleMethod,
    pub invert_momentum: bool,
    pub hmc_calls: usize,
    pub seed: u64,
    /// Propagation workers; `None` means available hardware parallelism.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Record measured per-iteration wall times in the trace.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelChoice::CoinToss,
            ct_data: None,
            irt_data: None,
            irt_persons: 100,
            irt_items: 20,
            irt_data_seed: 1,
            gaussian_dim: 2,
            n_particles: 1024,
            n_iterations: 10,
            temperature: 1.0,
            k_b: 1.0,
            mass: 1.0,
            step_size: 0.01,
            n_leapfrog: 100,
            ess_threshold: 0.5,
            resampler: ResampleMethod::Multinomial,
            invert_momentum: false,
            hmc_calls: 1,
            seed: 0,
            workers: None,
            out: None,
            timing: false,
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!(
            "config key `{key}`: expected a boolean, got `{value}`"
        ))),
    }
}

impl RunConfig {
    /// Apply one `key = value` pair. Unknown keys are errors so typos in
    /// experiment configs cannot pass silently.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = ModelChoice::parse(value)?,
            "ct_data" => self.ct_data = Some(PathBuf::from(value)),
            "irt_data" => self.irt_data = Some(PathBuf::from(value)),
            "irt_persons" => self.irt_persons = parse_as(key, value)?,
            "irt_items" => self.irt_items = parse_as(key, value)?,
            "irt_data_seed" => self.irt_data_seed = parse_as(key, value)?,
            "gaussian_dim" => self.gaussian_dim = parse_as(key, value)?,
            "particles" => self.n_particles = parse_as(key, value)?,
            "iterations" => self.n_iterations = parse_as(key, value)?,
            "temperature" => self.temperature = parse_as(key, value)?,
            "k_b" => self.k_b = parse_as(key, value)?,
            "mass" => self.mass = parse_as(key, value)?,
            "step_size" => self.step_size = parse_as(key, value)?,
            "leapfrog" => self.n_leapfrog = parse_as(key, value)?,
            "ess_threshold" => self.ess_threshold = parse_as(key, value)?,
            "resampler" => {
                self.resampler = match value {
                    "multinomial" => ResampleMethod::Multinomial,
                    "systematic" => ResampleMethod::Systematic,
                    _ => {
                        return Err(Error::invalid(format!(
                            "config key `resampler`: expected multinomial or systematic, got `{value}`"
                        )))
                    }
                }
            }
            "invert_momentum" => self.invert_momentum = parse_bool(key, value)?,
            "hmc_calls" => self.hmc_calls = parse_as(key, value)?,
            "seed" => self.seed = parse_as(key, value)?,
            "workers" => self.workers = Some(parse_as(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "timing" => self.timing = parse_bool(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Merge a `key = value` file into this configuration. `#` starts a
    /// comment; blank lines are skipped.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    index + 1
                ))
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::invalid(
                "config key `iterations`: must run at least one SMC iteration, nothing to estimate otherwise",
            ));
        }
        if self.n_particles == 0 {
            return Err(Error::invalid("config key `particles`: must be at least 1"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("config key `temperature`: must be positive"));
        }
        if !(self.ess_threshold.is_finite() && (0.0..=1.0).contains(&self.ess_threshold)) {
            return Err(Error::invalid(
                "config key `ess_threshold`: must lie in [0, 1]",
            ));
        }
        if self.hmc_calls == 0 {
            return Err(Error::invalid("config key `hmc_calls`: must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("config key `workers`: must be at least 1"));
        }
        self.kernel().validate().map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::invalid(format!("config key: {msg}")),
            other => other,
        })
    }

    pub fn kernel(&self) -> KernelConfig {
        KernelConfig {
            step_size: self.step_size,
            n_leapfrog: self.n_leapfrog,
            mass: self.mass,
            k_b: self.k_b,
            invert_momentum_on_accept: self.invert_momentum,
        }
    }

    pub fn smc(&self) -> SmcConfig {
        SmcConfig {
            ess_threshold: self.ess_threshold,
            resampler: self.resampler,
            hmc_calls_per_iteration: self.hmc_calls,
        }
    }

    /// Worker count actually used: the configured value or the hardware
    /// parallelism, never more than the particle count.
    pub fn resolved_workers(&self) -> usize {
        let requested = self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
        requested.clamp(1, self.n_particles)
    }
}

/// Build the configured model, including any ground truth it carries.
pub fn build_model(config: &RunConfig) -> Result<ModelSpec> {
    match config.model {
        ModelChoice::CoinToss => {
            let data = match &config.ct_data {
                Some(path) => datafile::read_ct(path)?,
                None => CoinTossData::new(40, [20, 30]).expect("reference dataset is valid"),
            };
            Ok(ct_model(&data))
        }
        ModelChoice::Irt => match &config.irt_data {
            Some(path) => Ok(irt_model(&datafile::read_irt(path)?)),
            None => {
                let (data, truth) = irt_generate_synthetic(
                    config.irt_persons,
                    config.irt_items,
                    config.irt_data_seed,
                )?;
                Ok(irt_model(&data).with_truth(truth))
            }
        },
        ModelChoice::GaussianToy => gaussian_toy(config.gaussian_dim),
    }
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub param_names: Vec<String>,
    pub truth: Option<Vec<f64>>,
    pub trace: Vec<TraceRecord>,
    pub estimate: Vec<f64>,
    pub workers: usize,
    pub total_wall: Duration,
}

/// Run the full SMC loop for an already-built model.
pub fn run_with_model(model: &ModelSpec, config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let workers = config.resolved_workers();
    let kernel = config.kernel();
    let smc = config.smc();
    let seeds = SeedPlan::new(config.seed);
    let plan = partition(config.n_particles, workers)?;

    let started = Instant::now();
    let mut ensemble = init_ensemble(
        config.n_particles,
        model,
        config.temperature,
        &kernel,
        &mut seeds.init_rng(),
    )?;
    let mut trace = Vec::with_capacity(config.n_iterations);
    for _ in 0..config.n_iterations {
        trace.push(smc_iterate(
            &mut ensemble,
            model,
            &kernel,
            &smc,
            &plan,
            &seeds,
        )?);
    }
    let estimate = weighted_estimate(&trace, config.temperature, config.k_b)?;
    Ok(RunOutput {
        param_names: model.param_names().to_vec(),
        truth: model.truth().map(<[f64]>::to_vec),
        trace,
        estimate,
        workers,
        total_wall: started.elapsed(),
    })
}

/// Build the model named by the config and run it.
pub fn run_inference(config: &RunConfig) -> Result<RunOutput> {
    let model = build_model(config)?;
    run_with_model(&model, config)
}

/// 17 significant digits, enough to round-trip an f64 exactly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the per-iteration trace as CSV with the fixed header
/// `iteration,e_min,ess,resampled,acceptance_rate,wall_ms,mean_<name>...`.
pub fn write_trace<W: Write>(
    writer: &mut W,
    param_names: &[String],
    trace: &[TraceRecord],
    timing: bool,
) -> io::Result<()> {
    let mean_cols: Vec<String> = param_names.iter().map(|n| format!("mean_{n}")).collect();
    writeln!(
        writer,
        "iteration,e_min,ess,resampled,acceptance_rate,wall_ms,{}",
        mean_cols.join(",")
    )?;
    for record in trace {
        let wall_ms = if timing {
            record.wall_time.as_millis()
        } else {
            0
        };
        write!(
            writer,
            "{},{},{},{},{},{}",
            record.iteration,
            fmt_float(record.e_min),
            fmt_float(record.ess),
            record.resampled,
            fmt_float(record.acceptance_rate),
            wall_ms
        )?;
        for mean in &record.mean_params {
            write!(writer, ",{}", fmt_float(*mean))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Machine-readable per-run record; one JSON line on stdout.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub model: String,
    pub n_particles: usize,
    pub n_iterations: usize,
    pub temperature: f64,
    pub k_b: f64,
    pub seed: u64,
    pub workers: usize,
    pub param_names: Vec<String>,
    pub estimate: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<Vec<f64>>,
    pub e_min_final: f64,
    pub ess_final: f64,
    pub resample_count: usize,
    pub divergences: usize,
}

pub fn summarize(config: &RunConfig, output: &RunOutput) -> Summary {
    let last = output.trace.last().expect("validated: at least one iteration");
    let abs_error = output.truth.as_ref().map(|truth| {
        truth
            .iter()
            .zip(&output.estimate)
            .map(|(t, e)| (t - e).abs())
            .collect()
    });
    Summary {
        model: config.model.label().to_string(),
        n_particles: config.n_particles,
        n_iterations: config.n_iterations,
        temperature: config.temperature,
        k_b: config.k_b,
        seed: config.seed,
        workers: output.workers,
        param_names: output.param_names.clone(),
        estimate: output.estimate.clone(),
        truth: output.truth.clone(),
        abs_error,
        e_min_final: last.e_min,
        ess_final: last.ess,
        resample_count: output.trace.iter().filter(|r| r.resampled).count(),
        divergences: output.trace.iter().map(|r| r.divergences).sum(),
    }
}

fn human_summary(summary: &Summary) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "model {}  particles {}  iterations {}  T {}  seed {}  workers {}",
        summary.model,
        summary.n_particles,
        summary.n_iterations,
        summary.temperature,
        summary.seed,
        summary.workers
    );
    if summary.param_names.len() <= 10 {
        for (index, name) in summary.param_names.iter().enumerate() {
            let mut line = format!("  {name}: estimate {:.6}", summary.estimate[index]);
            if let (Some(truth), Some(err)) = (&summary.truth, &summary.abs_error) {
                let _ = write!(line, "  truth {:.6}  |err| {:.6}", truth[index], err[index]);
            }
            let _ = writeln!(text, "{line}");
        }
    } else {
        let _ = writeln!(text, "  parameters: {}", summary.param_names.len());
        if let Some(err) = &summary.abs_error {
            let mean_err = err.iter().sum::<f64>() / err.len() as f64;
            let _ = writeln!(text, "  mean |err| vs truth: {mean_err:.6}");
        }
    }
    let _ = writeln!(
        text,
        "  e_min {:.6}  ess {:.1}  resampled {}x  divergences {}",
        summary.e_min_final, summary.ess_final, summary.resample_count, summary.divergences
    );
    text
}

/// Run inference, write the trace, and print the summary. Returns the
/// summary for callers that want to inspect it.
pub fn cmd_run(config: &RunConfig) -> Result<Summary> {
    let output = run_inference(config)?;
    match &config.out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            write_trace(&mut file, &output.param_names, &output.trace, config.timing)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_trace(&mut lock, &output.param_names, &output.trace, config.timing)?;
        }
    }
    let summary = summarize(config, &output);
    print!("{}", human_summary(&summary));
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    eprintln!(
        "run finished in {:.1} ms",
        output.total_wall.as_secs_f64() * 1e3
    );
    Ok(summary)
}

/// Outcome of a gradient check over seeded points.
#[derive(Clone, Debug)]
pub struct GradReport {
    pub model: String,
    pub n_points: usize,
    pub h: f64,
    pub tolerance: f64,
    pub max_error: f64,
    pub worst_point: Vec<f64>,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

/// Check analytic gradients against central finite differences at
/// standard-normal points drawn from the config seed.
pub fn cmd_gradcheck(
    config: &RunConfig,
    n_points: usize,
    h: f64,
    corrupt: bool,
) -> Result<GradReport> {
    if n_points == 0 {
        return Err(Error::invalid("need at least one check point"));
    }
    let mut model = build_model(config)?;
    if corrupt {
        model = model.with_corrupted_gradient(1e-3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut max_error = -1.0;
    let mut worst_point = Vec::new();
    for _ in 0..n_points {
        let point: Vec<f64> = (0..model.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let error = model.check_gradient(&point, h)?;
        if error > max_error {
            max_error = error;
            worst_point = point;
        }
    }
    Ok(GradReport {
        model: config.model.label().to_string(),
        n_points,
        h,
        tolerance: GRADCHECK_TOLERANCE,
        max_error,
        worst_point,
    })
}

pub fn print_grad_report(report: &GradReport) {
    println!(
        "gradcheck {}: {} points, h {:.1e}: max relative error {:.3e} (tolerance {:.0e}) -> {}",
        report.model,
        report.n_points,
        report.h,
        report.max_error,
        report.tolerance,
        if report.passed() { "pass" } else { "FAIL" }
    );
    let coords: Vec<String> = report
        .worst_point
        .iter()
        .take(8)
        .map(|x| format!("{x:.4}"))
        .collect();
    let ellipsis = if report.worst_point.len() > 8 { ", ..." } else { "" };
    println!("  worst point: [{}{}]", coords.join(", "), ellipsis);
}

/// One cell of a benchmark sweep.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub n_particles: usize,
    pub workers: usize,
    /// Wall time of the SMC iteration loop.
    pub wall_ms: f64,
    /// Microseconds per particle per iteration.
    pub us_per_particle: f64,
    /// `t(W=1) / t(W)` for the same particle count, when W=1 was measured.
    pub speedup: Option<f64>,
}

/// Time the iteration loop across a grid of particle and worker counts.
pub fn cmd_bench(
    config: &RunConfig,
    particle_sweep: &[usize],
    worker_sweep: &[usize],
) -> Result<Vec<BenchRow>> {
    if particle_sweep.is_empty() || worker_sweep.is_empty() {
        return Err(Error::invalid("sweep lists must be non-empty"));
    }
    let model = build_model(config)?;
    let mut rows = Vec::new();
    for &n_particles in particle_sweep {
        let mut baseline = None;
        for &workers in worker_sweep {
            let mut cell = config.clone();
            cell.n_particles = n_particles;
            cell.workers = Some(workers);
            let output = run_with_model(&model, &cell)?;
            let wall_ms: f64 = output
                .trace
                .iter()
                .map(|r| r.wall_time.as_secs_f64() * 1e3)
                .sum();
            if workers == 1 {
                baseline = Some(wall_ms);
            }
            let per_particle =
                wall_ms * 1e3 / (n_particles as f64 * config.n_iterations as f64);
            rows.push(BenchRow {
                n_particles,
                workers,
                wall_ms,
                us_per_particle: per_particle,
                speedup: baseline.map(|b| b / wall_ms),
            });
        }
    }
    Ok(rows)
}

pub fn print_bench_table(rows: &[BenchRow]) {
    println!(
        "{:>10} {:>8} {:>12} {:>16} {:>9}",
        "particles", "workers", "wall_ms", "us_per_particle", "speedup"
    );
    for row in rows {
        let speedup = row
            .speedup
            .map_or_else(|| "n/a".to_string(), |s| format!("{s:.2}"));
        println!(
            "{:>10} {:>8} {:>12.2} {:>16.3} {:>9}",
            row.n_particles, row.workers, row.wall_ms, row.us_per_particle, speedup
        );
    }
}
