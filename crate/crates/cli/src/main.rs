mod config_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppi_core::harness::{method_interval, BankMode, CoverageTruth, DeltaPolicy, ResultSet};
use ppi_core::io::{load_paired_dataset, load_sim_dataset, write_paired};
use ppi_core::{
    compute_savings, generate_bank, optimize_risk_split, run_coverage_sweep, run_width_sweep,
    summary_stats, Axis, BankSpec, Error, ErrorClass, Format, LabeledBank, Method, RiskSplit,
    SignificanceLevel, SimDataset, Source, SweepConfig, WsrOptions,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "ppi",
    version,
    about = "Confidence intervals from paired real and proxy scores"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// `key = value` file; its entries override flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One interval on paired and proxy-only CSV files.
    #[command(args_override_self = true)]
    Interval(IntervalArgs),
    /// Summary statistics of paired and proxy-only CSV files.
    #[command(args_override_self = true)]
    Summary(SummaryArgs),
    /// Generate a synthetic bank with a target correlation.
    #[command(args_override_self = true)]
    GenData(GenDataArgs),
    /// Mean widths along one axis.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Empirical coverage along one axis.
    #[command(args_override_self = true)]
    Coverage(CoverageArgs),
    /// Real samples saved relative to the real-only baseline.
    #[command(args_override_self = true)]
    Savings(SavingsArgs),
}

#[derive(Args)]
struct WsrArgs {
    /// Candidate means per unit of range.
    #[arg(long, default_value_t = 1001)]
    grid_size: usize,
    /// Bet truncation constant.
    #[arg(long, default_value_t = 0.99)]
    wsr_c: f64,
}

impl WsrArgs {
    fn options(&self) -> Result<WsrOptions, Error> {
        WsrOptions::new(self.grid_size, self.wsr_c)
    }
}

#[derive(Args)]
struct IntervalArgs {
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Rectifier level for two-stage and rectifier (default 0.9 alpha).
    #[arg(long, conflicts_with = "optimize_delta")]
    delta: Option<f64>,
    #[arg(long)]
    optimize_delta: bool,
    #[arg(long)]
    paired: PathBuf,
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Paired share used for estimation by cv-split.
    #[arg(long, default_value_t = 0.2)]
    split_frac: f64,
    #[command(flatten)]
    wsr: WsrArgs,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long)]
    paired: PathBuf,
    #[arg(long)]
    sim: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Proxy mean (defaults to --mu).
    #[arg(long)]
    mu_sim: Option<f64>,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 20_000)]
    size: usize,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated methods.
    #[arg(
        long,
        default_value = "classical,suresim,suresim-ub,two-stage,two-stage-ub,cv,cv-split"
    )]
    methods: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Proxy-only samples per draw.
    #[arg(long = "N", default_value_t = 2000)]
    cap_n: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.97)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long)]
    mu_sim: Option<f64>,
    #[arg(long, default_value_t = 100)]
    redraws: usize,
    #[arg(long)]
    optimize_delta: bool,
    /// One bank per grid point instead of one per redraw.
    #[arg(long, overrides_with = "fresh_bank")]
    bootstrap_bank: bool,
    #[arg(long, overrides_with = "bootstrap_bank")]
    fresh_bank: bool,
    /// Bank size as a multiple of n + N + heldout.
    #[arg(long, default_value_t = 4)]
    bank_multiplier: usize,
    /// Correlation tolerance for generated banks.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long)]
    sim_with_replacement: bool,
    #[arg(long, default_value_t = 0.2)]
    split_frac: f64,
    /// Report pre-truncation bounds.
    #[arg(long)]
    untruncated: bool,
    /// Labeled bank CSV (from gen-data) to draw from.
    #[arg(long, conflicts_with_all = ["paired", "sim"])]
    bank: Option<PathBuf>,
    /// Real paired CSV to resample (with --sim).
    #[arg(long, requires = "sim")]
    paired: Option<PathBuf>,
    #[arg(long, requires = "paired")]
    sim: Option<PathBuf>,
    #[command(flatten)]
    wsr: WsrArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    axis: Axis,
    /// Comma-separated axis values.
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long, default_value = "nsim")]
    axis: Axis,
    /// Comma-separated axis values (defaults to the fixed value).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// exact or heldout.
    #[arg(long, default_value = "exact")]
    truth: String,
    #[arg(long, default_value_t = 400)]
    heldout: usize,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct SavingsArgs {
    /// Largest real sample size tried by the search.
    #[arg(long, default_value_t = 10_000)]
    savings_cap: usize,
    #[command(flatten)]
    exp: ExperimentArgs,
}

/// Sidecar written next to a generated bank.
#[derive(Serialize, Deserialize)]
struct BankSidecar {
    true_mu: f64,
    achieved_rho: f64,
    spec: BankSpec,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

impl ExperimentArgs {
    fn config(&self, seed: u64, axis: Axis, grid: Vec<f64>) -> Result<SweepConfig, Error> {
        Ok(SweepConfig {
            methods: parse_list(&self.methods, "method")?,
            axis,
            grid,
            n: self.n,
            cap_n: self.cap_n,
            alpha: self.alpha,
            rho: self.rho,
            mu_real: self.mu,
            mu_sim: self.mu_sim.unwrap_or(self.mu),
            redraws: self.redraws,
            seed,
            delta_policy: if self.optimize_delta {
                DeltaPolicy::Optimized
            } else {
                DeltaPolicy::Heuristic
            },
            bank_mode: if self.bootstrap_bank {
                BankMode::Bootstrap
            } else {
                BankMode::Fresh
            },
            bank_multiplier: self.bank_multiplier,
            rho_tolerance: self.tol,
            sim_with_replacement: self.sim_with_replacement,
            split_fraction: self.split_frac,
            untruncated: self.untruncated,
            wsr: self.wsr.options()?,
            ..SweepConfig::default()
        })
    }

    fn source(&self) -> Result<Source, Error> {
        if let Some(path) = &self.bank {
            return load_bank(path).map(Source::Bank);
        }
        match (&self.paired, &self.sim) {
            (Some(p), Some(s)) => Ok(Source::Real {
                paired: load_paired_dataset(p)?,
                sim: load_sim_dataset(s)?,
            }),
            _ => Ok(Source::Synthetic),
        }
    }
}

/// A bank CSV, with its generating spec from the sidecar when present.
fn load_bank(path: &Path) -> Result<LabeledBank, Error> {
    let pairs = load_paired_dataset(path)?;
    let stats = summary_stats(&pairs, &SimDataset::default())?;
    let side = sidecar_path(path);
    let spec = if side.exists() {
        let text = std::fs::read_to_string(&side)
            .map_err(|e| Error::Config(format!("{}: {e}", side.display())))?;
        serde_json::from_str::<BankSidecar>(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", side.display())))?
            .spec
    } else {
        BankSpec {
            mu_real: stats.mean_y,
            mu_sim: stats.mean_f_paired,
            rho_target: stats.rho.unwrap_or(0.0),
            size: pairs.n(),
            rho_tolerance: 0.0,
            seed: 0,
        }
    };
    Ok(LabeledBank {
        true_mu: stats.mean_y,
        achieved_rho: stats.rho.unwrap_or(0.0),
        pairs,
        spec,
    })
}

fn write_output(
    global: &Global,
    default: Format,
    body: impl FnOnce(Format, &mut dyn Write) -> Result<(), Error>,
) -> Result<(), Error> {
    let format = global.format.unwrap_or(default);
    match &global.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            body(format, &mut file)
        }
        None => body(format, &mut std::io::stdout().lock()),
    }
}

fn emit<T: ResultSet>(global: &Global, result: &T) -> Result<(), Error> {
    write_output(global, Format::Csv, |f, out| result.write(f, out))
}

fn emit_json(global: &Global, value: &serde_json::Value) -> Result<(), Error> {
    if global.format == Some(Format::Csv) {
        return Err(Error::Config("this command only writes JSON".into()));
    }
    write_output(global, Format::Json, |_, out| {
        serde_json::to_writer_pretty(&mut *out, value)
            .map_err(|e| Error::Serialize(e.to_string()))?;
        writeln!(out).map_err(|e| Error::Serialize(e.to_string()))
    })
}

fn interval(global: &Global, a: &IntervalArgs) -> Result<ExitCode, Error> {
    let opts = a.wsr.options()?;
    let alpha = SignificanceLevel::new(a.alpha)?;
    let paired = load_paired_dataset(&a.paired)?;
    let sim = match &a.sim {
        Some(p) => load_sim_dataset(p)?,
        None => SimDataset::default(),
    };
    let split = if a.optimize_delta {
        optimize_risk_split(&paired, &sim, alpha, &opts)?
    } else if let Some(d) = a.delta {
        RiskSplit::new(alpha, d)?
    } else {
        RiskSplit::heuristic(alpha)
    };
    let ci = method_interval(
        a.method,
        &paired,
        &sim,
        split,
        a.split_frac,
        global.seed,
        &opts,
    )?;
    let value = serde_json::json!({
        "method": a.method,
        "alpha": a.alpha,
        "lower": ci.lower,
        "upper": ci.upper,
        "width": ci.width(),
        "truncated_lower": ci.truncated_lower,
        "truncated_upper": ci.truncated_upper,
        "n": paired.n(),
        "N": sim.cap_n(),
    });
    emit_json(global, &value)?;
    Ok(ExitCode::SUCCESS)
}

fn summary(global: &Global, a: &SummaryArgs) -> Result<ExitCode, Error> {
    let paired = load_paired_dataset(&a.paired)?;
    let sim = match &a.sim {
        Some(p) => load_sim_dataset(p)?,
        None => SimDataset::default(),
    };
    let stats = summary_stats(&paired, &sim)?;
    let value = serde_json::to_value(stats).map_err(|e| Error::Serialize(e.to_string()))?;
    emit_json(global, &value)?;
    Ok(ExitCode::SUCCESS)
}

fn gen_data(global: &Global, a: &GenDataArgs) -> Result<ExitCode, Error> {
    let out = global
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("gen-data needs --out FILE".into()))?;
    let spec = BankSpec {
        mu_real: a.mu,
        mu_sim: a.mu_sim.unwrap_or(a.mu),
        rho_target: a.rho,
        size: a.size,
        rho_tolerance: a.tol,
        seed: global.seed,
    };
    let bank = generate_bank(&spec)?;
    write_paired(out, &bank.pairs)?;
    let side = BankSidecar {
        true_mu: bank.true_mu,
        achieved_rho: bank.achieved_rho,
        spec,
    };
    let json = serde_json::to_string_pretty(&side).map_err(|e| Error::Serialize(e.to_string()))?;
    let path = sidecar_path(out);
    std::fs::write(&path, json + "\n")
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(ExitCode::SUCCESS)
}

fn fixed_value(exp: &ExperimentArgs, axis: Axis) -> f64 {
    match axis {
        Axis::NSim => exp.cap_n as f64,
        Axis::Rho => exp.rho,
        Axis::Alpha => exp.alpha,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let g = &cli.global;
    match &cli.command {
        Command::Interval(a) => interval(g, a),
        Command::Summary(a) => summary(g, a),
        Command::GenData(a) => gen_data(g, a),
        Command::Sweep(a) => {
            let cfg = a.exp.config(g.seed, a.axis, parse_list(&a.grid, "grid")?)?;
            emit(g, &run_width_sweep(&cfg, &a.exp.source()?)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Coverage(a) => {
            let grid = match &a.grid {
                Some(s) => parse_list(s, "grid")?,
                None => vec![fixed_value(&a.exp, a.axis)],
            };
            let mut cfg = a.exp.config(g.seed, a.axis, grid)?;
            cfg.trials_for_coverage = a.trials;
            cfg.heldout = a.heldout;
            cfg.coverage_truth = match a.truth.as_str() {
                "exact" => CoverageTruth::Exact,
                "heldout" => CoverageTruth::Heldout,
                other => return Err(Error::Config(format!("unknown coverage truth `{other}`"))),
            };
            emit(g, &run_coverage_sweep(&cfg, &a.exp.source()?)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Savings(a) => {
            let mut cfg = a.exp.config(g.seed, Axis::NSim, vec![a.exp.cap_n as f64])?;
            cfg.savings_cap = a.savings_cap;
            let res = compute_savings(&cfg, &a.exp.source()?)?;
            emit(g, &res)?;
            if res.any_censored() {
                eprintln!("warning: the savings search hit --savings-cap for some redraws");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Infeasible => 4,
    })
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config_file::find_config_path(&args) {
        match config_file::load(&path) {
            Ok(extra) => args.extend(extra),
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        }
    }
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
