//! Synthetic leagues for recovery and self-consistency tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scorediff::copula::CopulaFamily;
use scorediff::copula::{BivariateZ, CopulaSpec};
use scorediff::fit::{FitResult, HalfDiffs, MatchDiff, PackedLikelihood};
use scorediff::regress::{
    pack_parameters, unpack_parameters, AbilitySpec, Family, HalfParams, Layout, ModelParams, ModelStructure,
    TeamIndex, VarianceLink,
};
use scorediff::zdist::{DistOnZ, Skellam2Params, ZiSkellamParams};

pub fn team_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("Team{i:02}")).collect()
}

/// Every ordered pair once: a double round-robin.
pub fn double_round_robin(teams: &[String]) -> Vec<(String, String)> {
    teams.iter().flat_map(|h| teams.iter().filter(move |a| *a != h).map(move |a| (h.clone(), a.clone()))).collect()
}

pub fn random_abilities(teams: &TeamIndex, alpha: f64, rng: &mut ChaCha8Rng) -> AbilitySpec {
    let mut spec = AbilitySpec::flat(teams, alpha);
    for name in teams.names() {
        if name != teams.baseline() {
            spec.beta.insert(name.clone(), rng.random_range(-1.0..1.0));
            spec.gamma.insert(name.clone(), rng.random_range(-1.0..1.0));
        }
    }
    spec
}

pub fn skellam(mu: f64, sigma2: f64) -> DistOnZ {
    DistOnZ::Skellam2(Skellam2Params::new(mu, sigma2).unwrap())
}

pub fn simulate_skellam(
    fixtures: &[(String, String)],
    ability: &AbilitySpec,
    sigma2: f64,
    zero_inflation: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<MatchDiff> {
    fixtures
        .iter()
        .map(|(h, a)| {
            let mu = ability.predict_mean(h, a).unwrap();
            let base = Skellam2Params::new(mu, sigma2).unwrap();
            let d = DistOnZ::ZiSkellam(ZiSkellamParams::new(base, zero_inflation).unwrap());
            MatchDiff::new(h.clone(), a.clone(), d.sample(rng))
        })
        .collect()
}

/// Shared abilities, per-half variances, copula-coupled halves.
pub fn simulate_model_b(
    fixtures: &[(String, String)],
    ability: &AbilitySpec,
    sigma2: [f64; 2],
    copula: CopulaSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<HalfDiffs> {
    fixtures
        .iter()
        .map(|(h, a)| {
            let mu = ability.predict_mean(h, a).unwrap();
            let law = BivariateZ::new(skellam(mu, sigma2[0]), skellam(mu, sigma2[1]), copula);
            let (x, y) = law.sample(rng);
            HalfDiffs::new(h.clone(), a.clone(), x, y)
        })
        .collect()
}

/// A "fitted" model with known parameters, for prediction and simulation
/// tests that should not depend on the optimizer.
pub fn known_model(structure: ModelStructure, teams: &TeamIndex, params: ModelParams) -> FitResult {
    let link = VarianceLink::Log;
    let packed = pack_parameters(&structure, teams, &params, link).unwrap();
    FitResult {
        structure,
        teams: teams.clone(),
        link,
        estimates: params,
        n_params: packed.len(),
        packed,
        loglik: 0.0,
        n_obs: 1,
        aic: 0.0,
        bic: 0.0,
        converged: true,
        n_iter: 0,
        gradient_norm: 0.0,
        em_trace: Vec::new(),
        diagnostics: Vec::new(),
    }
}

pub fn half(ability: AbilitySpec, scale: f64) -> HalfParams {
    HalfParams { ability, scale, inflation: None }
}

/// A random interior point of the packed parameter space (log variance link):
/// small abilities, moderate scales, a copula parameter away from its bounds.
pub fn random_point(s: &ModelStructure, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..s.n_ability_blocks() * s.block_len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    for _ in 0..s.n_halves() {
        let scale: f64 = match s.family {
            Family::DiscLaplace => rng.random_range(1.5..4.0),
            _ => rng.random_range(8.0..20.0),
        };
        x.push(scale.ln());
    }
    for _ in 0..s.n_inflation_params() {
        x.push(rng.random_range(-3.0..0.0));
    }
    if s.has_copula() {
        x.push(match s.copula {
            CopulaFamily::Gumbel => rng.random_range(0.2f64..4.0).ln(),
            _ => rng.random_range(-5.0..5.0),
        });
    }
    assert_eq!(x.len(), s.n_params());
    x
}

/// Discrepancy between the analytic gradient at `x` and central differences
/// (step 1e-5), relative to the size of the numerical gradient (floored at
/// one).
pub fn gradient_error(lik: &PackedLikelihood, x: &[f64]) -> f64 {
    let (f, g) = lik.value_and_gradient(x);
    assert!(f.is_finite(), "point is infeasible");
    let numeric: Vec<f64> = (0..x.len())
        .map(|j| {
            let h = 1e-5;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            (lik.value(&xp) - lik.value(&xm)) / (2.0 * h)
        })
        .collect();
    let scale = numeric.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    g.iter().zip(&numeric).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Worst [`gradient_error`] over `points` random interior points. Each point
/// is checked on two round robins simulated from the model at that point,
/// so no observation sits in a cell the model makes astronomically unlikely
/// (where the copula rectangle is dominated by cancellation).
pub fn worst_gradient_error(s: &ModelStructure, teams: &TeamIndex, points: usize, rng: &mut ChaCha8Rng) -> f64 {
    let fixtures = double_round_robin(teams.names());
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let x = random_point(s, rng);
        let params = unpack_parameters(&x, s, teams, VarianceLink::Log).unwrap();
        let model = known_model(*s, teams, params);
        let lik = if s.layout == Layout::Univariate {
            let mut data = Vec::new();
            for (h, a) in fixtures.iter().chain(&fixtures) {
                let covariates: Vec<f64> = (1..s.n_inflation).map(|_| rng.random_range(0.0..2.0)).collect();
                let diff = model.distribution(0, h, a, &covariates).unwrap().sample(rng);
                data.push(MatchDiff { home: h.clone(), away: a.clone(), diff, covariates });
            }
            PackedLikelihood::univariate(&data, teams, s, VarianceLink::Log).unwrap()
        } else {
            let data: Vec<HalfDiffs> = fixtures
                .iter()
                .chain(&fixtures)
                .map(|(h, a)| {
                    let (y1, y2) = model.bivariate(h, a).unwrap().sample(rng);
                    HalfDiffs::new(h.clone(), a.clone(), y1, y2)
                })
                .collect();
            PackedLikelihood::bivariate(&data, teams, s, VarianceLink::Log).unwrap()
        };
        worst = worst.max(gradient_error(&lik, &x));
    }
    worst
}

/// Every layout/family/copula combination the likelihood supports.
pub fn all_structures(n_teams: usize) -> Vec<ModelStructure> {
    let families = [Family::Skellam, Family::ZiSkellam, Family::DiscNormal, Family::DiscLaplace];
    let mut out = Vec::new();
    for family in families {
        out.push(ModelStructure::univariate(family, n_teams));
        if family == Family::ZiSkellam {
            out.push(ModelStructure::univariate(family, n_teams).with_inflation_covariates(2));
        }
        out.push(ModelStructure::bivariate(Layout::BivA, family, CopulaFamily::Independence, n_teams));
        for layout in [Layout::BivB, Layout::BivC] {
            for copula in [CopulaFamily::Frank, CopulaFamily::Gumbel] {
                out.push(ModelStructure::bivariate(layout, family, copula, n_teams));
            }
        }
    }
    out
}
