//! Command-line front end: `fit`, `test`, `dimension`, `simulate`, `power-curve`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dimension::{target_matrix, tdrr, RidgeOverride, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::hybrid::{hybrid_test, TestConfig};
use crate::io::{load_csv, parse_recipe, to_json, CsvSchema, FeatureTerm};
use crate::kernel_stats::{standardize_columns, WeightConfig, DEFAULT_BANDWIDTH_MULTIPLIER, DEFAULT_WEIGHT_CONSTANT};
use crate::model::{fit_least_squares, linear_in_terms, model_by_name, Dataset, FitOptions, ParametricModel};
use crate::simulation::{run_study, Covariance, PowerTable, StudySpec};

#[derive(Debug, Parser)]
#[command(
    name = "hybridtest",
    version,
    about = "Adaptive-to-model hybrid lack-of-fit test for parametric regression models",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a parametric family by least squares and print the fit as JSON.
    Fit(DataArgs),
    /// Run the hybrid test on a CSV file and print the outcome as JSON.
    Test(TestArgs),
    /// Estimate the indicative dimension and print the spectrum and TDRR chains as JSON.
    Dimension(TestArgs),
    /// Monte Carlo size/power table (CSV, plus a JSON sidecar with q̂ histograms when --out is set).
    Simulate(SimArgs),
    /// Monte Carlo power curve: a against rejection rate of T_n and T_Zh, as CSV.
    PowerCurve(SimArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Model family: intercept, linear, linear-intercept, polynomial:K, exp-index,
    /// quadratic-index, study4, quadratic-geo.
    #[arg(long, default_value = "linear-intercept")]
    pub model: String,
    /// Instead of --model: intercept plus linear terms in every covariate and these
    /// derived terms, e.g. "square(5);square(6);product(5,6)".
    #[arg(long)]
    pub recipe: Option<String>,
    /// Response column name.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Seed for the multi-start least-squares fit.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the primary output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Weight constant c in w(x) = c·exp(-‖x‖).
    #[arg(long = "c", default_value_t = DEFAULT_WEIGHT_CONSTANT)]
    pub c: f64,
    /// Bandwidth multiplier c_h in h = c_h·n^(-1/(p+4)).
    #[arg(long = "ch", default_value_t = DEFAULT_BANDWIDTH_MULTIPLIER)]
    pub ch: f64,
    /// Ridge c1n [default: 3e-4·√8·ln(n)/√n].
    #[arg(long)]
    pub c1n: Option<f64>,
    /// Ridge c2n [default: (4/5)·√8·ln(n)/√n].
    #[arg(long)]
    pub c2n: Option<f64>,
    /// TDRR threshold τ.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Use raw covariates for weights, kernel and target matrix (default: standardized).
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Also report Zheng's kernel statistic.
    #[arg(long)]
    pub zheng: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Study number (1–4).
    #[arg(long)]
    pub study: u8,
    /// Covariate dimension(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub p: Vec<usize>,
    /// Sample size(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    pub n: Vec<usize>,
    /// Departure magnitude(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1")]
    pub a: Vec<f64>,
    /// Covariance of X: identity or ar (0.5^|i-j|).
    #[arg(long = "cov", default_value = "identity")]
    pub cov: String,
    /// Monte Carlo replications per grid point.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Use 1000 replications (overrides --reps).
    #[arg(long)]
    pub full: bool,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: available parallelism]; 1 runs serially.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fitted family [default: the study's own null family].
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Write the primary output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct DimensionReport {
    n: usize,
    p: usize,
    q_hat: usize,
    eigenvalues: Vec<f64>,
    s: Vec<f64>,
    s_star: Vec<f64>,
    r: Vec<f64>,
    c1n: f64,
    c2n: f64,
    tau: f64,
    theta_hat: Vec<f64>,
}

/// Parses `args` (program name first) and runs the command. Returns the exit
/// status: 0 on success, 1 on a pipeline error, 2 on a usage error.
pub fn dispatch<I, A>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let body = ErrorBody { error: ErrorDetail { kind: e.kind(), message: e.to_string() } };
            let _ = writeln!(stdout, "{}", serde_json::to_string(&body).unwrap_or_default());
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let (data, model) = load(&args)?;
            let fit = fit_least_squares(&data, &model, None, &FitOptions::default().with_seed(args.seed))?;
            emit(&to_json(&fit)?, args.out.as_deref(), stdout)
        }
        Command::Test(args) => {
            let (data, model) = load(&args.data)?;
            let mut cfg = test_config(&args.tuning, data.n(), args.data.seed)?;
            cfg.zheng = args.zheng;
            let outcome = hybrid_test(&data, &model, &cfg)?;
            emit(&to_json(&outcome)?, args.data.out.as_deref(), stdout)
        }
        Command::Dimension(args) => {
            let (data, model) = load(&args.data)?;
            let cfg = test_config(&args.tuning, data.n(), args.data.seed)?;
            let fit = fit_least_squares(&data, &model, None, &cfg.fit)?;
            let z = if cfg.standardize { standardize_columns(&data.x)? } else { data.x.clone() };
            let target = target_matrix(&z, &fit.residuals)?;
            let ridges = cfg.ridges.resolve(data.n())?;
            let chain = tdrr(&target.eigenvalues, &ridges);
            let report = DimensionReport {
                n: data.n(),
                p: data.p(),
                q_hat: chain.q_hat,
                eigenvalues: target.eigenvalues,
                s: chain.s,
                s_star: chain.s_star,
                r: chain.r,
                c1n: ridges.c1n,
                c2n: ridges.c2n,
                tau: ridges.tau,
                theta_hat: fit.theta_hat,
            };
            emit(&to_json(&report)?, args.data.out.as_deref(), stdout)
        }
        Command::Simulate(args) => {
            let table = simulate(&args, stderr)?;
            emit(&table.to_csv(), args.out.as_deref(), stdout)?;
            if let Some(out) = &args.out {
                std::fs::write(out.with_extension("json"), to_json(&table)?)?;
            }
            Ok(())
        }
        Command::PowerCurve(args) => {
            let table = simulate(&args, stderr)?;
            emit(&table.power_curve_csv(), args.out.as_deref(), stdout)
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn load(args: &DataArgs) -> Result<(Dataset<f64>, ParametricModel<f64>)> {
    let schema = CsvSchema { response: args.response.clone(), ..CsvSchema::default() };
    let data = load_csv::<f64>(&args.data, &schema)?;
    let model = match &args.recipe {
        Some(recipe) => {
            let extra = parse_recipe(recipe)?;
            let mut terms: Vec<FeatureTerm> = (1..=data.p()).map(FeatureTerm::Identity).collect();
            terms.extend(extra);
            crate::io::feature_expand(&data, &terms[data.p()..])?;
            linear_in_terms("recipe", terms, true)
        }
        None => model_by_name(&args.model, data.p())?,
    };
    Ok((data, model))
}

fn test_config(t: &TuningArgs, n: usize, seed: u64) -> Result<TestConfig<f64>> {
    if !(t.ch > 0.0) {
        return Err(Error::Config(format!("--ch must be positive, got {}", t.ch)));
    }
    let ridges = RidgeOverride { c1n: t.c1n, c2n: t.c2n, tau: t.tau };
    ridges.resolve(n)?;
    Ok(TestConfig {
        weight: WeightConfig::new(t.c)?,
        bandwidth_multiplier: t.ch,
        ridges,
        standardize: !t.no_standardize,
        zheng: false,
        fit: FitOptions::default().with_seed(seed),
    })
}

fn simulate(args: &SimArgs, stderr: &mut dyn Write) -> Result<PowerTable> {
    let covariance: Covariance = args.cov.parse()?;
    let reps = if args.full { 1000 } else { args.reps };
    if reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::Config(format!("--level must lie in (0, 1), got {}", args.level)));
    }
    let mut grid = Vec::new();
    for &n in &args.n {
        for &p in &args.p {
            for &a in &args.a {
                let mut spec = StudySpec::new(args.study, n, p, a, covariance)?;
                if let Some(m) = &args.model {
                    model_by_name::<f64>(m, p)?;
                    spec.null_family = m.clone();
                }
                grid.push(spec);
            }
        }
    }
    let cfg = test_config(&args.tuning, args.n.iter().copied().min().unwrap_or(2), 0)?;
    let _ = writeln!(stderr, "simulating {} grid point(s) x {reps} replications", grid.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_study(&grid, reps, args.level, args.seed, &cfg))
}
