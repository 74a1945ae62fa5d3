use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use scorediff::copula::CopulaFamily;
use scorediff::fit::{fit_bivariate, fit_univariate, FitConfig, FitResult, HalfDiffs, MatchDiff};
use scorediff::league::{
    complete_season, describe as season_stats, ecdf_band as bootstrap_band, expected_outcomes as expected_counts,
    implied_outcomes, observed_outcomes, odds_strength_gap, simulate_season, OutcomeCounts, PointsScheme,
    SimulationConfig, SimulationSummary,
};
use scorediff::regress::{Family, Layout, ModelStructure, VarianceLink};
use serde::Serialize;

use crate::output::{load_model, load_records, out_dir, read_fixtures, write_json, write_rows};
use crate::{
    CompleteArgs, ConditionalArgs, DescribeArgs, EcdfBandArgs, ExpectedOutcomesArgs, FitArgs, SimArgs, SimulateArgs,
};

/// Exit status when every output was written but some fit did not converge.
const NOT_CONVERGED: u8 = 2;

pub fn describe(args: &DescribeArgs) -> Result<ExitCode> {
    let records = load_records(&args.data)?;
    let stats = season_stats(&records);
    let dir = out_dir(&args.out.out)?;
    write_json(dir.join("describe.json"), &stats)?;
    write_rows(dir.join("describe.csv"), &stats)?;
    Ok(ExitCode::SUCCESS)
}

/// `layout:family[:copula]`.
fn parse_model(spec: &str) -> Result<ModelStructure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (layout, family, copula) = match parts.as_slice() {
        [l, f] => (l.parse::<Layout>()?, f.parse::<Family>()?, None),
        [l, f, c] => (l.parse::<Layout>()?, f.parse::<Family>()?, Some(c.parse::<CopulaFamily>()?)),
        _ => bail!("model `{spec}` is not of the form layout:family[:copula]"),
    };
    Ok(match (layout, copula) {
        (Layout::Univariate, None) => ModelStructure::univariate(family, 0),
        (Layout::Univariate, Some(_)) => bail!("model `{spec}`: a full-time model takes no copula"),
        (Layout::BivA, Some(c)) if c != CopulaFamily::Independence => {
            bail!("model `{spec}`: model A has independent halves")
        }
        (Layout::BivA, _) => ModelStructure::bivariate(layout, family, CopulaFamily::Independence, 0),
        (_, None) => bail!("model `{spec}`: layouts B and C need a copula (frank, gumbel or independence)"),
        (_, Some(c)) => ModelStructure::bivariate(layout, family, c, 0),
    })
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    model: String,
    /// `full-time` or `half-time`: likelihoods are comparable only within
    /// one kind of data.
    data: &'static str,
    layout: String,
    family: String,
    copula: String,
    loglik: f64,
    n_params: usize,
    n_obs: usize,
    aic: f64,
    bic: f64,
    delta_aic: f64,
    best: bool,
    converged: bool,
    gradient_norm: f64,
    n_iter: usize,
    file: String,
}

fn data_kind(layout: Layout) -> &'static str {
    if layout == Layout::Univariate {
        "full-time"
    } else {
        "half-time"
    }
}

pub fn fit(args: &FitArgs) -> Result<ExitCode> {
    let records = load_records(&args.data)?;
    let structures = args.models.iter().map(|m| parse_model(m)).collect::<Result<Vec<_>>>()?;
    let mut labels: Vec<String> = structures.iter().map(ModelStructure::label).collect();
    labels.sort();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        bail!("model `{}` requested twice", w[0]);
    }
    let config = FitConfig {
        max_iter: args.max_iter,
        gradient_tol: args.gtol,
        parameter_tol: args.xtol,
        em_tol: args.em_tol,
        seed: args.seed,
        link: parse_link(&args.link)?,
        baseline: args.baseline.clone(),
    };

    let full_time = || -> Result<Vec<MatchDiff>> {
        records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut m = r.to_match_diff();
                if args.odds_covariate {
                    let (o1, ox, o2) = r.odds().with_context(|| format!("match {} has no odds", i + 1))?;
                    m.covariates.push(odds_strength_gap(o1, ox, o2)?);
                }
                Ok(m)
            })
            .collect()
    };
    let halves = || -> Result<Vec<HalfDiffs>> {
        let out: Vec<HalfDiffs> = records.iter().filter_map(|r| r.to_half_diffs()).collect();
        let missing = records.len() - out.len();
        ensure!(missing == 0, "{missing} of {} matches lack half-time scores", records.len());
        Ok(out)
    };

    let dir = out_dir(&args.out.out)?;
    let mut rows = Vec::with_capacity(structures.len());
    for s in &structures {
        let label = s.label();
        let result = if s.layout == Layout::Univariate {
            let s =
                if args.odds_covariate && s.family == Family::ZiSkellam { s.with_inflation_covariates(2) } else { *s };
            fit_univariate(&full_time()?, &s, &config)
        } else {
            fit_bivariate(&halves()?, s, &config)
        }
        .with_context(|| format!("fitting {label}"))?;
        for d in &result.diagnostics {
            eprintln!("{label}: {d}");
        }
        if !result.converged {
            eprintln!(
                "{label}: not converged after {} iterations (gradient norm {:.3e})",
                result.n_iter, result.gradient_norm
            );
        }
        let file = format!("fit_{label}.json");
        write_json(dir.join(&file), &result)?;
        rows.push(comparison_row(&result, label, file));
    }
    rank(&mut rows);
    write_json(dir.join("comparison.json"), &rows)?;
    write_rows(dir.join("comparison.csv"), &rows)?;
    Ok(if rows.iter().all(|r| r.converged) { ExitCode::SUCCESS } else { ExitCode::from(NOT_CONVERGED) })
}

fn parse_link(s: &str) -> Result<VarianceLink> {
    match s.to_ascii_lowercase().as_str() {
        "log" => Ok(VarianceLink::Log),
        "softplus" => Ok(VarianceLink::Softplus),
        other => bail!("unknown variance link `{other}` (log or softplus)"),
    }
}

fn comparison_row(r: &FitResult, model: String, file: String) -> ComparisonRow {
    let s = &r.structure;
    ComparisonRow {
        model,
        data: data_kind(s.layout),
        layout: s.layout.to_string(),
        family: s.family.to_string(),
        copula: s.copula.to_string(),
        loglik: r.loglik,
        n_params: r.n_params,
        n_obs: r.n_obs,
        aic: r.aic,
        bic: r.bic,
        delta_aic: 0.0,
        best: false,
        converged: r.converged,
        gradient_norm: r.gradient_norm,
        n_iter: r.n_iter,
        file,
    }
}

/// Sorts by data kind then AIC and flags the minimum of each kind.
fn rank(rows: &mut [ComparisonRow]) {
    rows.sort_by(|a, b| a.data.cmp(b.data).then(a.aic.total_cmp(&b.aic)).then_with(|| a.model.cmp(&b.model)));
    let mut start = 0;
    while start < rows.len() {
        let end = start + rows[start..].iter().take_while(|r| r.data == rows[start].data).count();
        let min = rows[start].aic;
        rows[start].best = true;
        for r in &mut rows[start..end] {
            r.delta_aic = r.aic - min;
        }
        start = end;
    }
}

fn parse_points(s: &str) -> Result<PointsScheme> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("points scheme `{s}`"))?;
    let [win, draw, loss] = v[..] else { bail!("points scheme `{s}` needs three values: win,draw,loss") };
    ensure!(win >= draw && draw >= loss, "points scheme `{s}` must satisfy win >= draw >= loss");
    Ok(PointsScheme { win, draw, loss })
}

fn sim_config(a: &SimArgs) -> Result<SimulationConfig> {
    ensure!(a.n_sims > 0, "--n-sims must be positive");
    Ok(SimulationConfig {
        n_sims: a.n_sims,
        seed: a.seed,
        scheme: parse_points(&a.points)?,
        relegation_slots: a.relegation_slots,
        parallel: !a.serial,
    })
}

#[derive(Debug, Serialize)]
struct StandingRow<'a> {
    rank: usize,
    team: &'a str,
    current_points: u32,
    expected_points: f64,
    points_lower: f64,
    points_upper: f64,
    expected_goal_diff: f64,
    championship: f64,
    relegation: f64,
}

/// Teams ordered by expected points, then expected goal difference, then name.
fn standings(summary: &SimulationSummary) -> Vec<StandingRow<'_>> {
    let mut teams: Vec<_> = summary.teams.iter().collect();
    teams.sort_by(|a, b| {
        b.expected_points
            .total_cmp(&a.expected_points)
            .then(b.expected_goal_diff.total_cmp(&a.expected_goal_diff))
            .then_with(|| a.team.cmp(&b.team))
    });
    teams
        .into_iter()
        .enumerate()
        .map(|(i, t)| StandingRow {
            rank: i + 1,
            team: &t.team,
            current_points: t.current_points,
            expected_points: t.expected_points,
            points_lower: t.points_lower,
            points_upper: t.points_upper,
            expected_goal_diff: t.expected_goal_diff,
            championship: t.championship,
            relegation: t.relegation,
        })
        .collect()
}

fn double_round_robin(teams: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::with_capacity(teams.len() * teams.len().saturating_sub(1));
    for h in teams {
        for a in teams {
            if h != a {
                out.push((h.clone(), a.clone()));
            }
        }
    }
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let model = load_model(&args.sim.model)?;
    let config = sim_config(&args.sim)?;
    let fixtures = match &args.fixtures {
        Some(p) => read_fixtures(p)?,
        None => double_round_robin(model.teams.names()),
    };
    let summary = simulate_season(&fixtures, &model, &config).context("simulating season")?;
    let dir = out_dir(&args.out.out)?;
    write_json(dir.join("simulation.json"), &summary)?;
    write_rows(dir.join("standings.csv"), &standings(&summary))?;
    Ok(ExitCode::SUCCESS)
}

pub fn complete(args: &CompleteArgs) -> Result<ExitCode> {
    let played = load_records(&args.data)?;
    let model = load_model(&args.sim.model)?;
    let config = sim_config(&args.sim)?;
    let remaining = read_fixtures(&args.remaining)?;
    let summary = complete_season(&played, &remaining, &model, &config).context("completing season")?;
    let dir = out_dir(&args.out.out)?;
    write_json(dir.join("completion.json"), &summary)?;
    write_rows(dir.join("standings.csv"), &standings(&summary))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct PmfPoint {
    final_diff: i64,
    prob: f64,
}

#[derive(Debug, Serialize)]
struct ConditionalReport {
    model: String,
    home: String,
    away: String,
    half_diff: i64,
    /// Law of the full-time difference given the half-time difference.
    pmf: Vec<PmfPoint>,
    win: f64,
    draw: f64,
    loss: f64,
}

pub fn conditional(args: &ConditionalArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    ensure!(
        model.structure.layout != Layout::Univariate,
        "conditional prediction needs a half-time model (A, B or C); {} is full-time",
        args.model.display()
    );
    let table = model
        .bivariate(&args.home, &args.away)?
        .conditional_distribution(args.half_diff)
        .with_context(|| format!("conditioning on half-time difference {}", args.half_diff))?;
    let pmf = (table.lo..=table.hi())
        .zip(&table.pmf)
        .map(|(y, &prob)| PmfPoint { final_diff: args.half_diff + y, prob })
        .collect();
    let report = ConditionalReport {
        model: model.structure.label(),
        home: args.home.clone(),
        away: args.away.clone(),
        half_diff: args.half_diff,
        pmf,
        win: table.win,
        draw: table.draw,
        loss: table.loss,
    };
    let dir = out_dir(&args.out.out)?;
    write_json(dir.join("conditional.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct BandRow {
    z: i64,
    lower: f64,
    upper: f64,
    observed: f64,
}

#[derive(Debug, Serialize)]
struct BandReport {
    model: String,
    n_matches: usize,
    n_reps: usize,
    seed: u64,
    coverage: f64,
    points: Vec<BandRow>,
}

pub fn ecdf_band(args: &EcdfBandArgs) -> Result<ExitCode> {
    let records = load_records(&args.data)?;
    let model = load_model(&args.model)?;
    let diffs: Vec<MatchDiff> = records.iter().map(|r| r.to_match_diff()).collect();
    let band = bootstrap_band(&diffs, &model, args.n_reps, args.seed).context("building ECDF band")?;
    let points: Vec<BandRow> = (0..band.lower.len())
        .map(|i| BandRow {
            z: band.z_lo + i as i64,
            lower: band.lower[i],
            upper: band.upper[i],
            observed: band.observed[i],
        })
        .collect();
    let dir = out_dir(&args.out.out)?;
    write_rows(dir.join("ecdf_band.csv"), &points)?;
    let report = BandReport {
        model: model.structure.label(),
        n_matches: diffs.len(),
        n_reps: band.n_reps,
        seed: band.seed,
        coverage: band.coverage(),
        points,
    };
    write_json(dir.join("ecdf_band.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct Implied {
    n_matches: usize,
    counts: OutcomeCounts,
}

#[derive(Debug, Serialize)]
struct OutcomeReport {
    model: String,
    n_matches: usize,
    expected: OutcomeCounts,
    observed: OutcomeCounts,
    /// Bookmaker-implied counts over the matches that carry odds.
    implied: Option<Implied>,
}

pub fn expected_outcomes(args: &ExpectedOutcomesArgs) -> Result<ExitCode> {
    let records = load_records(&args.data)?;
    let model = load_model(&args.model)?;
    let fixtures: Vec<(String, String)> = records.iter().map(|r| (r.home.clone(), r.away.clone())).collect();
    let expected = expected_counts(&fixtures, &model).context("computing expected outcomes")?;
    let (implied, n_odds) = implied_outcomes(&records)?;
    let report = OutcomeReport {
        model: model.structure.label(),
        n_matches: records.len(),
        expected,
        observed: observed_outcomes(records.iter().map(|r| r.diff())),
        implied: (n_odds > 0).then_some(Implied { n_matches: n_odds, counts: implied }),
    };
    let dir = out_dir(&args.out.out)?;
    write_json(dir.join("expected_outcomes.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}
