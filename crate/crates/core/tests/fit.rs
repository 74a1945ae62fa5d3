mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scorediff::copula::{CopulaFamily, CopulaSpec};
use scorediff::fit::{fit_bivariate, fit_univariate, fit_zi_em, FitConfig, HalfDiffs, MatchDiff, PackedLikelihood};
use scorediff::regress::{Family, Layout, ModelStructure, TeamIndex, VarianceLink};
use scorediff::Error;

use common::*;

fn league(n: usize, seed: u64) -> (TeamIndex, Vec<(String, String)>, ChaCha8Rng) {
    let names = team_names(n);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    (teams, double_round_robin(&names), ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn univariate_fits_converge_for_every_family() {
    let (teams, fixtures, mut rng) = league(8, 11);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data = simulate_skellam(&fixtures, &ability, 14.0, 0.0, &mut rng);
    data.extend(simulate_skellam(&fixtures, &ability, 14.0, 0.0, &mut rng));
    let config = FitConfig::default();
    for family in [Family::Skellam, Family::DiscNormal, Family::DiscLaplace, Family::ZiSkellam] {
        let t = Instant::now();
        let fit = fit_univariate(&data, &ModelStructure::univariate(family, 0), &config).unwrap();
        assert!(fit.converged, "{family}: {:?} {:?}", fit.gradient_norm, fit.diagnostics);
        assert_eq!(fit.n_params, if family == Family::ZiSkellam { 17 } else { 16 });
        assert!((fit.aic - (-2.0 * fit.loglik + 2.0 * fit.n_params as f64)).abs() < 1e-9);
        eprintln!("{family}: ll={:.4} iters={} in {:?}", fit.loglik, fit.n_iter, t.elapsed());
    }
}

#[test]
fn single_pair_is_unidentifiable() {
    let data = vec![MatchDiff::new("a", "b", 3), MatchDiff::new("a", "b", -1), MatchDiff::new("a", "b", 0)];
    let err = fit_univariate(&data, &ModelStructure::univariate(Family::Skellam, 0), &FitConfig::default());
    assert!(matches!(err, Err(Error::Unidentifiable(_))));
}

#[test]
fn model_b_recovers_copula() {
    let (teams, fixtures, mut rng) = league(18, 5);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data: Vec<HalfDiffs> = Vec::new();
    for _ in 0..3 {
        data.extend(simulate_model_b(&fixtures, &ability, [14.0, 15.0], CopulaSpec::frank(2.0).unwrap(), &mut rng));
    }
    let config = FitConfig::default();
    let t = Instant::now();
    let b = ModelStructure::bivariate(Layout::BivB, Family::Skellam, CopulaFamily::Frank, 0);
    let fit = fit_bivariate(&data, &b, &config).unwrap();
    eprintln!("B: ll={:.4} iters={} conv={} in {:?}", fit.loglik, fit.n_iter, fit.converged, t.elapsed());
    assert!(fit.converged, "{} {:?}", fit.gradient_norm, fit.diagnostics);
    assert!((fit.estimates.copula.theta() - 2.0).abs() < 0.75, "{}", fit.estimates.copula.theta());
}

#[test]
fn em_trace_is_monotone_and_recovers_inflation() {
    let (teams, fixtures, mut rng) = league(6, 21);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data = Vec::new();
    while data.len() < 1000 {
        data.extend(simulate_skellam(&fixtures, &ability, 14.0, 0.1, &mut rng));
    }
    data.truncate(1000);
    let t = Instant::now();
    let fit = fit_zi_em(&data, &ModelStructure::univariate(Family::ZiSkellam, 0), &FitConfig::default()).unwrap();
    eprintln!("ZI: trace len={} in {:?}", fit.em_trace.len(), t.elapsed());
    assert!(fit.converged);
    for w in fit.em_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-10, "{w:?}");
    }
    let p = fit.estimates.halves[0].inflation.as_ref().unwrap().prob(&[1.0]).unwrap();
    assert!((p - 0.1).abs() < 0.08, "p = {p}");
}

#[test]
fn analytic_gradients_match_central_differences() {
    let (teams, _, mut rng) = league(5, 3);
    for s in all_structures(teams.len()) {
        let worst = worst_gradient_error(&s, &teams, 20, &mut rng);
        assert!(worst < 1e-4, "{}: {worst:e}", s.label());
    }
}

fn halves_data(seed: u64) -> (TeamIndex, Vec<HalfDiffs>) {
    let (teams, fixtures, mut rng) = league(8, seed);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data = Vec::new();
    for _ in 0..2 {
        data.extend(simulate_model_b(&fixtures, &ability, [14.0, 15.0], CopulaSpec::frank(2.0).unwrap(), &mut rng));
    }
    (teams, data)
}

#[test]
fn model_a_is_two_univariate_fits() {
    let (_, data) = halves_data(8);
    let config = FitConfig::default();
    let a = ModelStructure::bivariate(Layout::BivA, Family::Skellam, CopulaFamily::Independence, 0);
    let fit_a = fit_bivariate(&data, &a, &config).unwrap();
    let uni = ModelStructure::univariate(Family::Skellam, 0);
    let first: Vec<MatchDiff> = data.iter().map(|h| MatchDiff::new(h.home.clone(), h.away.clone(), h.first)).collect();
    let second: Vec<MatchDiff> =
        data.iter().map(|h| MatchDiff::new(h.home.clone(), h.away.clone(), h.second)).collect();
    let sum =
        fit_univariate(&first, &uni, &config).unwrap().loglik + fit_univariate(&second, &uni, &config).unwrap().loglik;
    assert!((fit_a.loglik - sum).abs() < 1e-6, "{} vs {sum}", fit_a.loglik);
    assert_eq!(fit_a.n_params, 4 * 8);
}

#[test]
fn nested_models_order_their_likelihoods() {
    let config = FitConfig::default();
    for seed in [1, 2, 3] {
        let (_, data) = halves_data(100 + seed);
        let ll = |layout, copula| {
            let s = ModelStructure::bivariate(layout, Family::Skellam, copula, 0);
            let f = fit_bivariate(&data, &s, &config).unwrap();
            assert!(f.converged, "{}: {}", s.label(), f.gradient_norm);
            f.loglik
        };
        let b_ind = ll(Layout::BivB, CopulaFamily::Independence);
        let b = ll(Layout::BivB, CopulaFamily::Frank);
        let c = ll(Layout::BivC, CopulaFamily::Frank);
        let a = ll(Layout::BivA, CopulaFamily::Independence);
        assert!(c >= b - 1e-6 && b >= b_ind - 1e-6, "seed {seed}: C {c}, B {b}, B-ind {b_ind}");
        assert!(c >= a - 1e-6 && a >= b_ind - 1e-6, "seed {seed}: C {c}, A {a}, B-ind {b_ind}");
    }
}

#[test]
fn zero_inflation_never_lowers_the_likelihood() {
    let config = FitConfig::default();
    for (seed, p) in [(1, 0.0), (2, 0.05), (3, 0.15)] {
        let (teams, fixtures, mut rng) = league(6, 300 + seed);
        let ability = random_abilities(&teams, 0.5, &mut rng);
        let mut data = Vec::new();
        for _ in 0..4 {
            data.extend(simulate_skellam(&fixtures, &ability, 12.0, p, &mut rng));
        }
        let plain = fit_univariate(&data, &ModelStructure::univariate(Family::Skellam, 0), &config).unwrap();
        let zi = fit_univariate(&data, &ModelStructure::univariate(Family::ZiSkellam, 0), &config).unwrap();
        assert!(zi.loglik >= plain.loglik - 1e-8, "p={p}: {} < {}", zi.loglik, plain.loglik);
    }
}

#[test]
fn no_zeros_means_no_inflation() {
    let (teams, fixtures, mut rng) = league(6, 41);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data = Vec::new();
    for _ in 0..4 {
        data.extend(simulate_skellam(&fixtures, &ability, 12.0, 0.0, &mut rng));
    }
    data.iter_mut().filter(|m| m.diff == 0).for_each(|m| m.diff = 1);
    let config = FitConfig::default();
    let plain = fit_univariate(&data, &ModelStructure::univariate(Family::Skellam, 0), &config).unwrap();
    let zi = fit_univariate(&data, &ModelStructure::univariate(Family::ZiSkellam, 0), &config).unwrap();
    let p = zi.estimates.halves[0].inflation.as_ref().unwrap().prob(&[1.0]).unwrap();
    assert!(p < 1e-12, "p = {p}");
    assert!((zi.loglik - plain.loglik).abs() < 1e-6);
    for (h, a) in &fixtures {
        let d = zi.estimates.halves[0].ability.predict_mean(h, a).unwrap()
            - plain.estimates.halves[0].ability.predict_mean(h, a).unwrap();
        assert!(d.abs() < 1e-4, "{h} v {a}: {d}");
    }
}

#[test]
fn row_order_does_not_matter() {
    let (teams, fixtures, mut rng) = league(6, 51);
    let ability = random_abilities(&teams, 0.5, &mut rng);
    let mut data = Vec::new();
    for _ in 0..3 {
        data.extend(simulate_skellam(&fixtures, &ability, 12.0, 0.0, &mut rng));
    }
    let mut shuffled = data.clone();
    shuffled.shuffle(&mut rng);
    let config = FitConfig::default();
    for family in [Family::Skellam, Family::DiscNormal, Family::ZiSkellam] {
        let s = ModelStructure::univariate(family, 0);
        let a = fit_univariate(&data, &s, &config).unwrap();
        let b = fit_univariate(&shuffled, &s, &config).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-6, "{family}");
        for (h, w) in &fixtures {
            let d = a.estimates.halves[0].ability.predict_mean(h, w).unwrap()
                - b.estimates.halves[0].ability.predict_mean(h, w).unwrap();
            assert!(d.abs() < 1e-6, "{family}: {h} v {w}: {d}");
        }
    }
}

#[test]
fn reported_loglik_matches_direct_evaluation() {
    let (_, halves) = halves_data(61);
    let full: Vec<MatchDiff> =
        halves.iter().map(|h| MatchDiff::new(h.home.clone(), h.away.clone(), h.first + h.second)).collect();
    let config = FitConfig::default();
    for family in [Family::Skellam, Family::ZiSkellam, Family::DiscNormal, Family::DiscLaplace] {
        let fit = fit_univariate(&full, &ModelStructure::univariate(family, 0), &config).unwrap();
        let direct: f64 =
            full.iter().map(|m| fit.distribution(0, &m.home, &m.away, &[]).unwrap().log_pmf(m.diff)).sum();
        assert!((fit.loglik - direct).abs() < 1e-8, "{family}: {} vs {direct}", fit.loglik);
    }
    for (layout, copula) in [(Layout::BivB, CopulaFamily::Frank), (Layout::BivC, CopulaFamily::Gumbel)] {
        let fit =
            fit_bivariate(&halves, &ModelStructure::bivariate(layout, Family::Skellam, copula, 0), &config).unwrap();
        let direct: f64 = halves
            .iter()
            .map(|h| fit.bivariate(&h.home, &h.away).unwrap().joint_pmf(h.first, h.second).unwrap().ln())
            .sum();
        assert!((fit.loglik - direct).abs() < 1e-8, "{layout}: {} vs {direct}", fit.loglik);
    }
}

/// Wald intervals for the fixture means from the observed information,
/// computed here by differencing the analytic gradient.
#[test]
fn mean_predictions_have_nominal_coverage() {
    let config = FitConfig::default();
    let names = team_names(6);
    let teams = TeamIndex::new(names.clone(), None).unwrap();
    let fixtures = double_round_robin(&names);
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let truth = random_abilities(&teams, 0.5, &mut rng);
    let s = ModelStructure::univariate(Family::Skellam, teams.len());
    let (mut covered, mut total) = (0usize, 0usize);
    for _ in 0..100 {
        let mut data = Vec::new();
        for _ in 0..10 {
            data.extend(simulate_skellam(&fixtures, &truth, 14.0, 0.0, &mut rng));
        }
        let fit = fit_univariate(&data, &s, &config).unwrap();
        assert!(fit.converged);
        let lik = PackedLikelihood::univariate(&data, &teams, &s, VarianceLink::Log).unwrap();
        let n = fit.packed.len();
        let mut info = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-5;
            let mut xp = fit.packed.clone();
            let mut xm = fit.packed.clone();
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (lik.value_and_gradient(&xp).1, lik.value_and_gradient(&xm).1);
            for i in 0..n {
                info[(i, j)] = -(gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let cov = ((&info + info.transpose()) * 0.5).try_inverse().unwrap();
        let t = teams.len();
        for (h, a) in &fixtures {
            // mu = alpha + beta_h + gamma_a; the baseline (index 0) has no slot
            let mut grad = DVector::<f64>::zeros(n);
            grad[0] = 1.0;
            let (hi, ai) = (teams.index_of(h).unwrap(), teams.index_of(a).unwrap());
            if hi > 0 {
                grad[hi] = 1.0;
            }
            if ai > 0 {
                grad[t - 1 + ai] = 1.0;
            }
            let se = (grad.transpose() * &cov * &grad)[(0, 0)].sqrt();
            let est = fit.estimates.halves[0].ability.predict_mean(h, a).unwrap();
            let mu = truth.predict_mean(h, a).unwrap();
            covered += usize::from((est - mu).abs() <= 1.96 * se);
            total += 1;
        }
    }
    let rate = covered as f64 / total as f64;
    assert!(rate >= 0.9, "coverage {rate}");
}
