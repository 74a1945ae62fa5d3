mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scorediff::copula::{CopulaFamily, CopulaSpec};
use scorediff::fit::{FitResult, MatchDiff};
use scorediff::league::*;
use scorediff::regress::{AbilitySpec, Family, Layout, ModelParams, ModelStructure, TeamIndex};

fn skellam_model(teams: &TeamIndex, ability: AbilitySpec, sigma2: f64) -> FitResult {
    let params = ModelParams { halves: vec![half(ability, sigma2)], copula: CopulaSpec::independence() };
    known_model(ModelStructure::univariate(Family::Skellam, teams.len()), teams, params)
}

fn record(home: &str, away: &str, ft_home: u32, ft_away: u32) -> MatchRecord {
    MatchRecord {
        season: "S".into(),
        round: None,
        home: home.into(),
        away: away.into(),
        ft_home,
        ft_away,
        ht_home: None,
        ht_away: None,
        odds_1: None,
        odds_x: None,
        odds_2: None,
    }
}

/// Circle-method rounds: each team once per round, return leg mirrored.
fn rounds(teams: &[String]) -> Vec<Vec<(String, String)>> {
    let n = teams.len();
    assert!(n.is_multiple_of(2));
    let mut order: Vec<usize> = (0..n).collect();
    let mut first = Vec::new();
    for r in 0..n - 1 {
        let round: Vec<(String, String)> = (0..n / 2)
            .map(|i| {
                let (a, b) = (order[i], order[n - 1 - i]);
                let (h, w) = if (r + i) % 2 == 0 { (a, b) } else { (b, a) };
                (teams[h].clone(), teams[w].clone())
            })
            .collect();
        first.push(round);
        order[1..].rotate_right(1);
    }
    let second: Vec<_> = first.iter().map(|r| r.iter().map(|(h, a)| (a.clone(), h.clone())).collect()).collect();
    first.into_iter().chain(second).collect()
}

#[test]
fn description_matches_direct_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let names = team_names(6);
    let records: Vec<MatchRecord> = double_round_robin(&names)
        .iter()
        .map(|(h, a)| {
            use rand::Rng;
            record(h, a, rng.random_range(20..35), rng.random_range(18..33))
        })
        .collect();
    let stats = &describe(&records)[0];

    let d: Vec<f64> = records.iter().map(|r| f64::from(r.ft_home) - f64::from(r.ft_away)).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let pop_sd = (var * (n - 1.0) / n).sqrt();
    let skew = d.iter().map(|v| ((v - mean) / pop_sd).powi(3)).sum::<f64>() / n;
    assert!((stats.diff_mean - mean).abs() < 1e-12);
    assert!((stats.diff_sd - var.sqrt()).abs() < 1e-12);
    assert!((stats.diff_skewness - skew).abs() < 1e-12);

    let h: Vec<f64> = records.iter().map(|r| f64::from(r.ft_home)).collect();
    let a: Vec<f64> = records.iter().map(|r| f64::from(r.ft_away)).collect();
    let (mh, ma) = (h.iter().sum::<f64>() / n, a.iter().sum::<f64>() / n);
    let sxy: f64 = h.iter().zip(&a).map(|(x, y)| (x - mh) * (y - ma)).sum();
    let sxx: f64 = h.iter().map(|x| (x - mh).powi(2)).sum();
    let syy: f64 = a.iter().map(|y| (y - ma).powi(2)).sum();
    assert!((stats.home_var - sxx / (n - 1.0)).abs() < 1e-10);
    assert!((stats.home_away_corr - sxy / (sxx * syy).sqrt()).abs() < 1e-12);
}

#[test]
fn differences_of_one_and_minus_one() {
    let text = "season,home,away,ft_home,ft_away\nS,a,b,2,1\nS,b,a,1,2\nS,a,b,3,2\nS,b,a,2,3\n";
    let got = ingest_reader(text.as_bytes()).unwrap();
    let stats = &describe(&got.records)[0];
    assert_eq!(stats.diff_mean, 0.0);
    // squared deviations sum to 4 over n - 1 = 3
    assert!((stats.diff_sd - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(stats.diff_skewness, 0.0);
}

#[test]
fn expected_outcomes_are_self_consistent() {
    let names = team_names(10);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ability = random_abilities(&teams, 1.5, &mut rng);
    let model = skellam_model(&teams, ability, 14.0);
    let fixtures: Vec<_> = double_round_robin(&names).into_iter().cycle().take(900).collect();

    let expected = expected_outcomes(&fixtures, &model).unwrap();
    assert!((expected.total() - fixtures.len() as f64).abs() < 1e-8);

    let laws = fixture_laws(&model, &fixtures).unwrap();
    let probs: Vec<(f64, f64, f64)> = laws.iter().map(FixtureLaw::outcome_probs).collect();
    let sd = |f: fn(&(f64, f64, f64)) -> f64| probs.iter().map(|p| f(p) * (1.0 - f(p))).sum::<f64>().sqrt();
    let sds = [sd(|p| p.0), sd(|p| p.1), sd(|p| p.2)];
    for _ in 0..5 {
        let observed = observed_outcomes(laws.iter().map(|l| l.sampler().sample(&mut rng)));
        let pairs = [
            (observed.home_wins, expected.home_wins),
            (observed.draws, expected.draws),
            (observed.away_wins, expected.away_wins),
        ];
        for ((o, e), s) in pairs.into_iter().zip(sds) {
            assert!((o - e).abs() <= 3.0 * s, "observed {o}, expected {e}, sd {s}");
        }
    }
}

#[test]
fn implied_outcomes_use_only_rows_with_odds() {
    let mut with_odds = record("a", "b", 30, 28);
    (with_odds.odds_1, with_odds.odds_x, with_odds.odds_2) = (Some(1.5), Some(8.0), Some(8.0));
    let (counts, n) = implied_outcomes(&[with_odds, record("b", "a", 25, 25)]).unwrap();
    assert_eq!(n, 1);
    assert!((counts.total() - 1.0).abs() < 1e-15);
    assert!((counts.home_wins - 8.0 / 11.0).abs() < 1e-12);
}

#[test]
fn simulated_tables_conserve_points_and_replay_exactly() {
    let names = team_names(8);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = skellam_model(&teams, random_abilities(&teams, 1.0, &mut rng), 12.0);
    let fixtures = double_round_robin(&names);

    let parallel = SimulationConfig::new(2000, 77);
    let serial = SimulationConfig { parallel: false, ..parallel };
    let a = simulate_season(&fixtures, &model, &parallel).unwrap();
    let b = simulate_season(&fixtures, &model, &serial).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let total = 2 * fixtures.len() as u64;
    assert_eq!(a.total_points_range, (total, total));
    let champ: f64 = a.teams.iter().map(|t| t.championship).sum();
    let releg: f64 = a.teams.iter().map(|t| t.relegation).sum();
    assert!((champ - 1.0).abs() < 1e-12, "{champ}");
    assert!((releg - 2.0).abs() < 1e-12, "{releg}");
    for t in &a.teams {
        assert!((0.0..=1.0).contains(&t.championship) && (0.0..=1.0).contains(&t.relegation));
        assert!(t.points_lower <= t.expected_points && t.expected_points <= t.points_upper);
    }

    let other = simulate_season(&fixtures, &model, &SimulationConfig::new(2000, 78)).unwrap();
    assert_ne!(a, other);
}

#[test]
fn symmetric_two_team_league_is_a_coin_flip() {
    let names = team_names(2);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let model = skellam_model(&teams, AbilitySpec::flat(&teams, 0.0), 10.0);
    let config = SimulationConfig { relegation_slots: 1, ..SimulationConfig::new(20_000, 1) };
    let s = simulate_season(&double_round_robin(&names), &model, &config).unwrap();
    let se = (0.25f64 / 20_000.0).sqrt();
    for t in &s.teams {
        assert!((t.championship - 0.5).abs() < 4.0 * se, "{}", t.championship);
        assert!((t.relegation - 0.5).abs() < 4.0 * se, "{}", t.relegation);
    }
}

#[test]
fn single_simulation_collapses_the_interval() {
    let names = team_names(4);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let model = skellam_model(&teams, AbilitySpec::flat(&teams, 1.0), 10.0);
    let s = simulate_season(&double_round_robin(&names), &model, &SimulationConfig::new(1, 9)).unwrap();
    for t in &s.teams {
        assert_eq!(t.points_lower, t.expected_points);
        assert_eq!(t.points_upper, t.expected_points);
    }
}

#[test]
fn dominant_team_wins_the_title() {
    let names = team_names(4);
    let teams = TeamIndex::new(names.clone(), Some("Team03")).unwrap();
    let mut ability = AbilitySpec::flat(&teams, 0.0);
    // +6 at home, and the opponent's mean is -6 when it visits
    ability.beta.insert("Team00".into(), 6.0);
    ability.gamma.insert("Team00".into(), -6.0);
    let model = skellam_model(&teams, ability, 7.0);
    let s = simulate_season(&double_round_robin(&names), &model, &SimulationConfig::new(10_000, 4)).unwrap();
    let dom = s.teams.iter().find(|t| t.team == "Team00").unwrap();
    assert!(dom.championship > 0.99, "{}", dom.championship);
    assert_eq!(dom.relegation, 0.0);
}

#[test]
fn completing_a_finished_season_reproduces_the_table() {
    let names = team_names(4);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let model = skellam_model(&teams, AbilitySpec::flat(&teams, 0.0), 10.0);
    // lower index always wins by three
    let played: Vec<MatchRecord> = double_round_robin(&names)
        .iter()
        .map(|(h, a)| if h < a { record(h, a, 30, 27) } else { record(h, a, 27, 30) })
        .collect();
    let s = complete_season(&played, &[], &model, &SimulationConfig::new(50, 2)).unwrap();
    assert_eq!(s.n_simulated_matches, 0);
    let expected_points = [12.0, 8.0, 4.0, 0.0];
    for (t, want) in s.teams.iter().zip(expected_points) {
        assert_eq!(f64::from(t.current_points), want);
        assert_eq!((t.expected_points, t.points_lower, t.points_upper), (want, want, want));
    }
    let champ: Vec<f64> = s.teams.iter().map(|t| t.championship).collect();
    let releg: Vec<f64> = s.teams.iter().map(|t| t.relegation).collect();
    assert_eq!(champ, [1.0, 0.0, 0.0, 0.0]);
    assert_eq!(releg, [0.0, 0.0, 1.0, 1.0]);
}

#[test]
fn completion_respects_mathematical_certainties() {
    // 18 teams, 29 of 34 rounds played; the last team lost every match and
    // every other played match was drawn
    let names = team_names(18);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = skellam_model(&teams, random_abilities(&teams, 1.0, &mut rng), 14.0);
    let schedule = rounds(&names);
    let last = names[17].as_str();
    let played: Vec<MatchRecord> = schedule[..29]
        .iter()
        .flatten()
        .map(|(h, a)| {
            if a == last {
                record(h, a, 30, 20)
            } else if h == last {
                record(h, a, 20, 30)
            } else {
                record(h, a, 27, 27)
            }
        })
        .collect();
    let remaining: Vec<(String, String)> = schedule[29..].iter().flatten().cloned().collect();
    let s = complete_season(&played, &remaining, &model, &SimulationConfig::new(2000, 6)).unwrap();

    let bottom = s.teams.iter().find(|t| t.team == last).unwrap();
    assert_eq!(bottom.current_points, 0);
    let next = s.teams.iter().filter(|t| t.team != last).map(|t| t.current_points).min().unwrap();
    assert!(next >= 30, "gap {next}");
    assert_eq!(bottom.relegation, 1.0);
    assert_eq!(bottom.championship, 0.0);
    // ten points from five rounds cannot close the gap to anyone
    for t in s.teams.iter().filter(|t| t.team != last && t.current_points > 2 * 5) {
        assert!(t.relegation < 1.0);
    }
    let total = 2 * (played.len() + remaining.len()) as u64;
    assert_eq!(s.total_points_range, (total, total));
}

#[test]
fn safe_team_is_never_relegated() {
    let names = team_names(6);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let model = skellam_model(&teams, AbilitySpec::flat(&teams, 0.0), 14.0);
    let schedule = rounds(&names);
    let played: Vec<MatchRecord> = schedule[..9]
        .iter()
        .flatten()
        .map(|(h, a)| if h < a { record(h, a, 30, 25) } else { record(h, a, 25, 30) })
        .collect();
    let remaining: Vec<(String, String)> = schedule[9..].iter().flatten().cloned().collect();
    let s = complete_season(&played, &remaining, &model, &SimulationConfig::new(5000, 3)).unwrap();
    let points = |name: &str| s.teams.iter().find(|t| t.team == name).unwrap();
    let top = points("Team00");
    // the two bottom teams cannot reach Team00 even by winning out
    for name in ["Team04", "Team05"] {
        assert!(top.current_points > points(name).current_points + 2 * 5);
    }
    assert_eq!(top.relegation, 0.0);
}

#[test]
fn completion_rejects_replayed_or_unknown_fixtures() {
    let names = team_names(4);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let model = skellam_model(&teams, AbilitySpec::flat(&teams, 0.0), 10.0);
    let played = vec![record("Team00", "Team01", 30, 28)];
    let config = SimulationConfig::new(10, 1);
    let replay = vec![("Team00".to_string(), "Team01".to_string())];
    assert!(complete_season(&played, &replay, &model, &config).is_err());
    let unknown = vec![("Team00".to_string(), "Nobody".to_string())];
    assert!(complete_season(&played, &unknown, &model, &config).is_err());
}

#[test]
fn ecdf_band_is_monotone_and_covers_its_own_data() {
    let names = team_names(10);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = skellam_model(&teams, random_abilities(&teams, 1.5, &mut rng), 14.0);
    let fixtures = double_round_robin(&names);
    let laws = fixture_laws(&model, &fixtures).unwrap();

    let mut coverage = 0.0;
    let trials = 10;
    for trial in 0..trials {
        let observed: Vec<MatchDiff> = fixtures
            .iter()
            .zip(&laws)
            .map(|((h, a), l)| MatchDiff::new(h.clone(), a.clone(), l.sampler().sample(&mut rng)))
            .collect();
        let band = ecdf_band(&observed, &model, 200, trial).unwrap();
        for w in band.lower.windows(2).chain(band.upper.windows(2)) {
            assert!(w[0] <= w[1]);
        }
        assert!(band.lower.iter().zip(&band.upper).all(|(l, u)| l <= u));
        assert_eq!(band.band_at(band.z_lo - 1000), (0.0, 0.0));
        assert_eq!(band.band_at(band.z_hi() + 1000), (1.0, 1.0));
        coverage += band.coverage();
    }
    coverage /= trials as f64;
    assert!(coverage >= 0.9, "{coverage}");

    let few = ecdf_band(&[MatchDiff::new("Team00", "Team01", 1)], &model, MIN_REPLICATES - 1, 0);
    assert!(few.is_err());
}

#[test]
fn equal_teams_at_level_half_time_are_symmetric() {
    let names = team_names(4);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let ability = AbilitySpec::flat(&teams, 0.0);
    for theta in [2.0, -3.0] {
        let params = ModelParams {
            halves: vec![half(ability.clone(), 14.0), half(ability.clone(), 15.0)],
            copula: CopulaSpec::frank(theta).unwrap(),
        };
        let s = ModelStructure::bivariate(Layout::BivB, Family::Skellam, CopulaFamily::Frank, teams.len());
        let model = known_model(s, &teams, params);
        let c = model.bivariate("Team01", "Team02").unwrap().conditional_distribution(0).unwrap();
        assert!((c.win - c.loss).abs() < 1e-9, "{} vs {}", c.win, c.loss);
        assert!((c.win + c.draw + c.loss - 1.0).abs() < 1e-10);
    }
}
