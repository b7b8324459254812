//! Benchmark command-line interface.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure budget
//! exceeded (or validation failure), 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convbf::bench::{
    export, export_sweep_csv, parse_threshold, run_experiment, Campaign, ExperimentConfig,
    ExportFormat, FilterKind, SystemKind,
};
use convbf::convolution::{
    conv_density_quadrature, gaussian_conv_closed_form, trapezoid, DistanceMetric, Grid1D,
};
use convbf::distributions::{ExponentialThreshold, GaussianSpec, NoiseSpec};
use convbf::error::Error;

/// Fraction of runs allowed to fail numerically before the campaign itself
/// is considered failed.
const FAILURE_BUDGET: f64 = 0.05;

#[derive(Parser)]
#[command(name = "convbf", about = "Convolutional Bayesian filtering benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo campaign and export it.
    Run(RunArgs),
    /// Run a cross-product of filters and thresholds into one CSV.
    Sweep(SweepArgs),
    /// Check the convolution-layer numerical oracles and print pass/fail.
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with the same field names as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["wiener", "sequence", "reactor"])]
    system: Option<String>,
    #[arg(long, value_parser = ["none", "a", "b"])]
    case: Option<String>,
    #[arg(long)]
    filter: Option<String>,
    /// Transition threshold rate, or "off".
    #[arg(long)]
    alpha: Option<String>,
    /// Measurement threshold rate, or "off".
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = ["wiener", "sequence", "reactor"])]
    system: String,
    #[arg(long, value_parser = ["none", "a", "b"])]
    case: String,
    /// Comma-separated filter names.
    #[arg(long)]
    filter: String,
    /// Comma-separated threshold rates (each a number or "off").
    #[arg(long, default_value = "off")]
    alpha: String,
    /// Comma-separated threshold rates (each a number or "off").
    #[arg(long, default_value = "off")]
    beta: String,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Numerical(_) | Error::GridResolution { .. } | Error::WeightDegeneracy { .. } => 2,
        _ => 1,
    }
}

fn build_run_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::config(format!("invalid config file: {e}")))?
        }
        None => {
            let need = |name: &str, v: &Option<String>| {
                v.clone()
                    .ok_or_else(|| Error::config(format!("--{name} is required without --config")))
            };
            ExperimentConfig::new(
                SystemKind::parse(&need("system", &args.system)?)?,
                convbf::models::MismatchCase::parse(&need("case", &args.case)?)?,
                FilterKind::parse(&need("filter", &args.filter)?)?,
            )
        }
    };
    if let Some(s) = &args.system {
        cfg.system = SystemKind::parse(s)?;
    }
    if let Some(c) = &args.case {
        cfg.case = convbf::models::MismatchCase::parse(c)?;
    }
    if let Some(f) = &args.filter {
        cfg.filter = FilterKind::parse(f)?;
    }
    if let Some(a) = &args.alpha {
        cfg.alpha = parse_threshold(a)?;
    }
    if let Some(b) = &args.beta {
        cfg.beta = parse_threshold(b)?;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(m) = args.steps {
        cfg.steps = m;
    }
    if let Some(p) = args.particles {
        cfg.particles = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn over_budget(campaign: &Campaign) -> bool {
    campaign.summary.failed_runs as f64 > FAILURE_BUDGET * campaign.config.runs as f64
}

fn cmd_run(args: &RunArgs) -> Result<bool, Error> {
    let cfg = build_run_config(args)?;
    let format = ExportFormat::parse(&args.format)?;
    let summary = run_experiment(&cfg)?;
    let campaign = Campaign { config: cfg, summary };
    export(&campaign, format, &args.out)?;
    println!(
        "{} case={} filter={}: mean RMSE {:.6}, median {:.6}, failed {}/{}; wrote {}",
        campaign.config.system.name(),
        campaign.config.case.name(),
        campaign.config.filter.name(),
        campaign.summary.mean,
        campaign.summary.median,
        campaign.summary.failed_runs,
        campaign.config.runs,
        args.out.display(),
    );
    Ok(over_budget(&campaign))
}

fn parse_list<T>(s: &str, parse: impl Fn(&str) -> Result<T, Error>) -> Result<Vec<T>, Error> {
    s.split(',').map(|item| parse(item.trim())).collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, Error> {
    let system = SystemKind::parse(&args.system)?;
    let case = convbf::models::MismatchCase::parse(&args.case)?;
    let filters = parse_list(&args.filter, FilterKind::parse)?;
    let alphas = parse_list(&args.alpha, parse_threshold)?;
    let betas = parse_list(&args.beta, parse_threshold)?;

    let mut campaigns = Vec::new();
    for &filter in &filters {
        for &alpha in &alphas {
            for &beta in &betas {
                let mut cfg = ExperimentConfig::new(system, case, filter);
                cfg.alpha = alpha;
                cfg.beta = beta;
                if let Some(r) = args.runs {
                    cfg.runs = r;
                }
                if let Some(m) = args.steps {
                    cfg.steps = m;
                }
                if let Some(p) = args.particles {
                    cfg.particles = p;
                }
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                let summary = run_experiment(&cfg)?;
                campaigns.push(Campaign { config: cfg, summary });
            }
        }
    }
    export_sweep_csv(&campaigns, &args.out)?;
    let mut budget_exceeded = false;
    for campaign in &campaigns {
        let flag = over_budget(campaign);
        budget_exceeded |= flag;
        println!(
            "{} alpha={} beta={}: mean RMSE {:.6}, failed {}/{}{}",
            campaign.config.filter.name(),
            threshold_str(campaign.config.alpha),
            threshold_str(campaign.config.beta),
            campaign.summary.mean,
            campaign.summary.failed_runs,
            campaign.config.runs,
            if flag { " [FAILURE BUDGET EXCEEDED]" } else { "" },
        );
    }
    println!("wrote {}", args.out.display());
    Ok(budget_exceeded)
}

fn threshold_str(t: ExponentialThreshold) -> String {
    match t {
        ExponentialThreshold::Disabled => "-".to_string(),
        ExponentialThreshold::Rate(r) => format!("{r}"),
    }
}

fn check(name: &str, ok: bool, all_ok: &mut bool) {
    println!("{}: {}", name, if ok { "pass" } else { "FAIL" });
    *all_ok &= ok;
}

fn cmd_validate() -> Result<bool, Error> {
    let mut ok = true;
    let base = NoiseSpec::Gaussian(GaussianSpec::zero_mean(
        nalgebra::DMatrix::from_element(1, 1, 1.0),
    )?);

    // Quadrature matches the closed-form inflated Gaussian pointwise.
    let mut worst = 0.0f64;
    for rate in [0.05, 0.5, 5.0] {
        let threshold = ExponentialThreshold::rate(rate)?;
        let inflated = gaussian_conv_closed_form(
            &nalgebra::DMatrix::from_element(1, 1, 1.0),
            threshold,
        )?[(0, 0)];
        let grid = Grid1D::default_for(0.0, (1.0 + inflated).sqrt());
        let numeric =
            conv_density_quadrature(&base, DistanceMetric::SquaredEuclidean, threshold, grid)?;
        let reference = NoiseSpec::Gaussian(GaussianSpec::zero_mean(
            nalgebra::DMatrix::from_element(1, 1, inflated),
        )?);
        for (k, y) in grid.values().enumerate() {
            let exact = reference
                .log_density(&nalgebra::DVector::from_element(1, y))?
                .exp();
            worst = worst.max((numeric[k] - exact).abs());
        }
    }
    check(
        &format!("quadrature vs closed form (L-inf {worst:.2e} <= 1e-6)"),
        worst <= 1e-6,
        &mut ok,
    );

    // Quadrature output is a normalized nonnegative density.
    let threshold = ExponentialThreshold::rate(0.5)?;
    let grid = Grid1D::default_for(0.0, 1.5);
    let density =
        conv_density_quadrature(&base, DistanceMetric::SquaredEuclidean, threshold, grid)?;
    let mass = trapezoid(&density, grid.step());
    let nonneg = density.iter().all(|v| *v >= 0.0);
    check(
        &format!("quadrature normalization (mass {mass:.10}, nonnegative {nonneg})"),
        (mass - 1.0).abs() <= 1e-8 && nonneg,
        &mut ok,
    );

    // Scaled metric limit: as sigma^2 -> 0 the convolution approaches the base.
    let mut last = f64::INFINITY;
    let mut monotone = true;
    for sigma2 in [1.0, 1e-2, 1e-4, 1e-6] {
        let grid = Grid1D::default_for(0.0, 2.0);
        let numeric = conv_density_quadrature(
            &base,
            DistanceMetric::ScaledSquared { sigma2 },
            ExponentialThreshold::rate(1.0)?,
            grid,
        )?;
        let mut dist = 0.0f64;
        for (k, y) in grid.values().enumerate() {
            let exact = base
                .log_density(&nalgebra::DVector::from_element(1, y))?
                .exp();
            dist = dist.max((numeric[k] - exact).abs());
        }
        monotone &= dist < last;
        last = dist;
    }
    check(
        &format!("limiting property (final L-inf {last:.2e}, monotone {monotone})"),
        monotone && last <= 1e-4,
        &mut ok,
    );

    // Closed-form hand values.
    let q = nalgebra::DMatrix::identity(4, 4);
    let inflated = gaussian_conv_closed_form(&q, ExponentialThreshold::rate(0.05)?)?;
    let hand = (inflated - nalgebra::DMatrix::identity(4, 4) * 11.0).norm() <= 1e-12;
    check("closed form Q=I4, rate 0.05 -> 11*I4", hand, &mut ok);

    Ok(!ok)
}

fn main() -> ExitCode {
    // flag-level errors are configuration errors (exit 1), not clap's
    // default exit 2, which is reserved for the numerical failure budget
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate => cmd_validate(),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
