//! `scorediff`: batch front end for fitting score-difference models,
//! simulating seasons and querying fitted models.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "scorediff", version, about = "Score-difference models for league matches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-season summary statistics of the score differences.
    Describe(DescribeArgs),
    /// Fit one or more models and rank them by AIC.
    Fit(FitArgs),
    /// Simulate a full season from a fitted model.
    Simulate(SimulateArgs),
    /// Complete a partially played season by simulation.
    Complete(CompleteArgs),
    /// Final-difference law given the half-time difference.
    Conditional(ConditionalArgs),
    /// Parametric-bootstrap band for the ECDF of the observed differences.
    EcdfBand(EcdfBandArgs),
    /// Expected home-win / draw / away-win counts against the observed ones.
    ExpectedOutcomes(ExpectedOutcomesArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Match CSV (season, home, away, ft_home, ft_away, optional round,
    /// ht_home, ht_away, odds_1, odds_x, odds_2).
    #[arg(long)]
    input: PathBuf,
    /// Keep only rows whose season column equals this string.
    #[arg(long)]
    season: Option<String>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DescribeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Model as `layout:family[:copula]`, e.g. `univariate:skellam` or
    /// `model-b:skellam:frank`. Repeatable.
    #[arg(long = "model", default_value = "univariate:skellam")]
    models: Vec<String>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Gradient norm at which a fit counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    gtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    xtol: f64,
    #[arg(long, default_value_t = 1e-8)]
    em_tol: f64,
    /// Variance link: `log` or `softplus`.
    #[arg(long, default_value = "log")]
    link: String,
    /// Baseline team (default: lexicographically first).
    #[arg(long)]
    baseline: Option<String>,
    /// Use the odds strength gap |logit p1 - logit p2| as an inflation covariate in
    /// zero-inflated full-time fits.
    #[arg(long)]
    odds_covariate: bool,
    /// Recorded in the outputs; fitting itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Fitted model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    n_sims: usize,
    #[arg(long)]
    seed: u64,
    /// Points for win, draw and loss.
    #[arg(long, default_value = "2,1,0")]
    points: String,
    #[arg(long, default_value_t = 2)]
    relegation_slots: usize,
    /// Run replications on one thread (results are identical).
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Fixture CSV with `home,away` columns; defaults to a double round
    /// robin over the model's teams.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompleteArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Fixture CSV with `home,away` columns still to be played.
    #[arg(long)]
    remaining: PathBuf,
}

#[derive(Debug, Args)]
struct ConditionalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    home: String,
    #[arg(long)]
    away: String,
    /// Half-time difference, home minus away.
    #[arg(long, allow_negative_numbers = true)]
    half_diff: i64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct EcdfBandArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_reps: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ExpectedOutcomesArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Describe(a) => commands::describe(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Complete(a) => commands::complete(&a),
        Command::Conditional(a) => commands::conditional(&a),
        Command::EcdfBand(a) => commands::ecdf_band(&a),
        Command::ExpectedOutcomes(a) => commands::expected_outcomes(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
