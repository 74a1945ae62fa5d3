//! Monte Carlo season simulation and season completion.
//!
//! Replication `i` draws from its own ChaCha stream `(seed, i)`, so serial
//! and parallel runs produce identical summaries. Teams level on points and
//! goal difference share championship and relegation credit equally: a
//! difference-only model cannot reproduce head-to-head or goals-scored
//! tie-breakers.

use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{fixture_laws, FixtureSampler};
use super::records::MatchRecord;
use crate::error::{Error, Result};
use crate::fit::FitResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointsScheme {
    pub win: u32,
    pub draw: u32,
    pub loss: u32,
}

impl Default for PointsScheme {
    /// 2/1/0, the handball convention.
    fn default() -> Self {
        Self { win: 2, draw: 1, loss: 0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamRecord {
    pub points: u32,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    pub goal_diff: i64,
}

/// League table over a fixed team list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTable {
    pub teams: Vec<String>,
    pub rows: Vec<TeamRecord>,
    pub scheme: PointsScheme,
}

impl SeasonTable {
    pub fn empty(teams: Vec<String>, scheme: PointsScheme) -> Self {
        let rows = vec![TeamRecord::default(); teams.len()];
        Self { teams, rows, scheme }
    }

    /// Table from played results `(home, away, home - away)`.
    pub fn from_results<'a>(
        teams: Vec<String>,
        results: impl IntoIterator<Item = (&'a str, &'a str, i64)>,
        scheme: PointsScheme,
    ) -> Result<Self> {
        let mut table = Self::empty(teams, scheme);
        let index: BTreeMap<&str, usize> = table.teams.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let pos = |t: &str| index.get(t).copied().ok_or_else(|| Error::UnknownTeam(t.to_string()));
        let mut idx = Vec::new();
        for (h, a, d) in results {
            idx.push((pos(h)?, pos(a)?, d));
        }
        for (h, a, d) in idx {
            table.record(h, a, d);
        }
        Ok(table)
    }

    pub(crate) fn record(&mut self, home: usize, away: usize, diff: i64) {
        let s = self.scheme;
        let (h, a) = match diff.cmp(&0) {
            std::cmp::Ordering::Greater => ((s.win, 1, 0, 0), (s.loss, 0, 0, 1)),
            std::cmp::Ordering::Equal => ((s.draw, 0, 1, 0), (s.draw, 0, 1, 0)),
            std::cmp::Ordering::Less => ((s.loss, 0, 0, 1), (s.win, 1, 0, 0)),
        };
        for (idx, (pts, w, dr, l), gd) in [(home, h, diff), (away, a, -diff)] {
            let r = &mut self.rows[idx];
            r.points += pts;
            r.wins += w;
            r.draws += dr;
            r.losses += l;
            r.goal_diff += gd;
        }
    }

    pub fn total_points(&self) -> u64 {
        self.rows.iter().map(|r| u64::from(r.points)).sum()
    }

    /// Team indices by points, then goal difference (descending); remaining
    /// ties keep team-list order.
    pub fn standings(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.teams.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.rows[a], &self.rows[b]);
            rb.points.cmp(&ra.points).then(rb.goal_diff.cmp(&ra.goal_diff))
        });
        order
    }

    /// Credit per team for finishing in positions `[from, to)` of the
    /// standings, split evenly across teams level on points and goal
    /// difference.
    pub fn position_credit(&self, from: usize, to: usize) -> Vec<f64> {
        let order = self.standings();
        let key = |i: usize| (self.rows[i].points, self.rows[i].goal_diff);
        let mut credit = vec![0.0; order.len()];
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && key(order[end]) == key(order[start]) {
                end += 1;
            }
            let overlap = end.min(to).saturating_sub(start.max(from));
            if overlap > 0 {
                let share = overlap as f64 / (end - start) as f64;
                for &t in &order[start..end] {
                    credit[t] = share;
                }
            }
            start = end;
        }
        credit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_sims: usize,
    pub seed: u64,
    pub scheme: PointsScheme,
    /// Number of bottom places that are relegated.
    pub relegation_slots: usize,
    /// Run replications on the rayon pool; results are identical either way.
    pub parallel: bool,
}

impl SimulationConfig {
    pub fn new(n_sims: usize, seed: u64) -> Self {
        Self { n_sims, seed, scheme: PointsScheme::default(), relegation_slots: 2, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSummary {
    pub team: String,
    /// Points already earned before the simulated fixtures.
    pub current_points: u32,
    pub expected_points: f64,
    pub points_lower: f64,
    pub points_upper: f64,
    pub expected_goal_diff: f64,
    pub championship: f64,
    pub relegation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub teams: Vec<TeamSummary>,
    pub n_sims: usize,
    pub seed: u64,
    pub n_matches: usize,
    pub n_simulated_matches: usize,
    /// Smallest and largest total points over the simulated tables.
    pub total_points_range: (u64, u64),
    pub scheme: PointsScheme,
}

struct Replicate {
    points: Vec<u32>,
    goal_diff: Vec<i64>,
    champion: Vec<f64>,
    relegated: Vec<f64>,
    total: u64,
}

fn fixture_indices(teams: &[String], fixtures: &[(String, String)]) -> Result<Vec<(usize, usize)>> {
    let index: BTreeMap<&str, usize> = teams.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let pos = |t: &str| index.get(t).copied().ok_or_else(|| Error::UnknownTeam(t.to_string()));
    fixtures.iter().map(|(h, a)| Ok((pos(h)?, pos(a)?))).collect()
}

fn run(
    start: &SeasonTable,
    played: usize,
    fixtures: &[(String, String)],
    model: &FitResult,
    config: &SimulationConfig,
) -> Result<SimulationSummary> {
    if config.n_sims == 0 {
        return Err(Error::InvalidParameter("n_sims must be positive".into()));
    }
    let idx = fixture_indices(&start.teams, fixtures)?;
    let samplers: Vec<FixtureSampler> = fixture_laws(model, fixtures)?.iter().map(|l| l.sampler()).collect();
    let n_teams = start.teams.len();
    let relegation_from = n_teams.saturating_sub(config.relegation_slots);
    let replicate = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let mut table = start.clone();
        for (&(h, a), s) in idx.iter().zip(&samplers) {
            table.record(h, a, s.sample(&mut rng));
        }
        Replicate {
            points: table.rows.iter().map(|r| r.points).collect(),
            goal_diff: table.rows.iter().map(|r| r.goal_diff).collect(),
            champion: table.position_credit(0, 1),
            relegated: table.position_credit(relegation_from, n_teams),
            total: table.total_points(),
        }
    };
    let reps: Vec<Replicate> = if config.parallel {
        (0..config.n_sims).into_par_iter().map(replicate).collect()
    } else {
        (0..config.n_sims).map(replicate).collect()
    };

    let n = config.n_sims as f64;
    let teams = (0..n_teams)
        .map(|t| {
            let mut pts: Vec<f64> = reps.iter().map(|r| f64::from(r.points[t])).collect();
            let expected_points = pts.iter().sum::<f64>() / n;
            pts.sort_by(f64::total_cmp);
            TeamSummary {
                team: start.teams[t].clone(),
                current_points: start.rows[t].points,
                expected_points,
                points_lower: percentile(&pts, 0.025),
                points_upper: percentile(&pts, 0.975),
                expected_goal_diff: reps.iter().map(|r| r.goal_diff[t] as f64).sum::<f64>() / n,
                championship: reps.iter().map(|r| r.champion[t]).sum::<f64>() / n,
                relegation: reps.iter().map(|r| r.relegated[t]).sum::<f64>() / n,
            }
        })
        .collect();
    let totals = reps.iter().map(|r| r.total);
    let range = (totals.clone().min().unwrap_or(0), totals.max().unwrap_or(0));
    Ok(SimulationSummary {
        teams,
        n_sims: config.n_sims,
        seed: config.seed,
        n_matches: played + fixtures.len(),
        n_simulated_matches: fixtures.len(),
        total_points_range: range,
        scheme: config.scheme,
    })
}

/// Linear-interpolation percentile (type 7) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Simulates every fixture from scratch.
pub fn simulate_season(
    fixtures: &[(String, String)],
    model: &FitResult,
    config: &SimulationConfig,
) -> Result<SimulationSummary> {
    if fixtures.is_empty() {
        return Err(Error::InvalidParameter("no fixtures to simulate".into()));
    }
    let mut names: Vec<String> = fixtures.iter().flat_map(|(h, a)| [h.clone(), a.clone()]).collect();
    names.sort();
    names.dedup();
    let start = SeasonTable::empty(names, config.scheme);
    run(&start, 0, fixtures, model, config)
}

/// Adds simulated results for `remaining` to the table of `played`.
pub fn complete_season(
    played: &[MatchRecord],
    remaining: &[(String, String)],
    model: &FitResult,
    config: &SimulationConfig,
) -> Result<SimulationSummary> {
    let played_pairs: HashSet<(&str, &str)> = played.iter().map(|r| (r.home.as_str(), r.away.as_str())).collect();
    if let Some((h, a)) = remaining.iter().find(|(h, a)| played_pairs.contains(&(h.as_str(), a.as_str()))) {
        return Err(Error::InvalidParameter(format!("fixture {h} v {a} is already played")));
    }
    for (h, a) in remaining {
        model.teams.index_of(h)?;
        model.teams.index_of(a)?;
    }
    let mut names: Vec<String> = played
        .iter()
        .flat_map(|r| [r.home.clone(), r.away.clone()])
        .chain(remaining.iter().flat_map(|(h, a)| [h.clone(), a.clone()]))
        .collect();
    names.sort();
    names.dedup();
    let start = SeasonTable::from_results(
        names,
        played.iter().map(|r| (r.home.as_str(), r.away.as_str(), r.diff())),
        config.scheme,
    )?;
    run(&start, played.len(), remaining, model, config)
}
