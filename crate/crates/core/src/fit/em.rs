//! EM for the zero-inflated Skellam regression.
//!
//! E-step: each observed zero gets responsibility
//! `w = p / (p + (1 - p) P_base(0))`. M-step: the inflation logit maximizes
//! `Σ w ln p + (1 - w) ln(1 - p)` (closed form `p = mean(w)` without
//! covariates) and the base model maximizes the likelihood with each zero
//! down-weighted to `1 - w`.

use super::likelihood::{inflation_probability, MatchDiff, PackedLikelihood};
use super::optim::{minimize, BfgsOutcome};
use super::{initial_half, maximize, pairs, univariate_teams, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::regress::{logit, Family, Layout, ModelStructure, LOGIT_FLOOR};

pub fn fit_zi_em(data: &[MatchDiff], structure: &ModelStructure, config: &FitConfig) -> Result<FitResult> {
    if structure.layout != Layout::Univariate || structure.family != Family::ZiSkellam {
        return Err(Error::InvalidParameter("EM applies to the univariate zero-inflated Skellam".into()));
    }
    let teams = univariate_teams(data, config)?;
    let n_inflation = 1 + data.first().map_or(0, |m| m.covariates.len());
    let zi_structure = ModelStructure { n_teams: teams.len(), ..ModelStructure::univariate(Family::ZiSkellam, 0) }
        .with_inflation_covariates(n_inflation);
    let base_structure = ModelStructure::univariate(Family::Skellam, teams.len());
    let zi = PackedLikelihood::univariate(data, &teams, &zi_structure, config.link)?;
    let base = PackedLikelihood::univariate(data, &teams, &base_structure, config.link)?;

    let pair_idx = pairs(data.iter().map(|m| (m.home.as_str(), m.away.as_str())), &teams)?;
    let diffs: Vec<f64> = data.iter().map(|m| m.diff as f64).collect();
    let (mut x0, mut diagnostics) = initial_half(&pair_idx, &diffs, &teams, Family::Skellam);
    let s = x0.pop().expect("scale");
    x0.push(config.link.from_scale(s));
    let plain = maximize(&base, x0, config);
    if !plain.f.is_finite() {
        return Err(Error::Numerical("base Skellam fit has no feasible start".into()));
    }

    let is_zero: Vec<bool> = data.iter().map(|m| m.diff == 0).collect();
    let n = data.len() as f64;
    let zero_frac = is_zero.iter().filter(|&&z| z).count() as f64 / n;
    let base_zero: f64 = base.base_log_pmfs(&plain.x).expect("feasible").iter().map(|l| l.exp()).sum::<f64>() / n;
    let mut gamma = vec![0.0; n_inflation];
    gamma[0] = logit((zero_frac - base_zero).clamp(0.01, 0.5));
    let z_rows: Vec<Vec<f64>> = zi.covariate_rows().map(<[f64]>::to_vec).collect();

    let mut x = plain.x.clone();
    let joined = |x: &[f64], g: &[f64]| [x, g].concat();
    let mut trace = vec![zi.value(&joined(&x, &gamma))];
    let mut n_iter = 0;
    while n_iter < config.max_iter {
        n_iter += 1;
        let lb = base.base_log_pmfs(&x).expect("EM iterates stay feasible");
        let w: Vec<f64> = (0..data.len())
            .map(|i| {
                if !is_zero[i] {
                    return 0.0;
                }
                let p = inflation_probability(&gamma, &z_rows[i]);
                p / (p + (1.0 - p) * lb[i].exp())
            })
            .collect();
        gamma = if n_inflation == 1 {
            vec![logit(w.iter().sum::<f64>() / n)]
        } else {
            logistic_m_step(&w, &z_rows, gamma, config).x
        };
        let weighted = base.clone().with_weights(w.iter().map(|v| 1.0 - v).collect());
        x = maximize(&weighted, x, config).x;
        let ll = zi.value(&joined(&x, &gamma));
        let prev = *trace.last().expect("non-empty");
        trace.push(ll);
        if ll - prev < config.em_tol {
            break;
        }
    }

    // direct polish so the reported gradient refers to the mixture likelihood
    let mut polished = maximize(&zi, joined(&x, &gamma), config);
    let floor_gamma = {
        let mut g = vec![0.0; n_inflation];
        g[0] = LOGIT_FLOOR;
        g
    };
    let nested = zi.value(&joined(&plain.x, &floor_gamma));
    if polished.f < nested {
        diagnostics.push("mixture optimum fell below the plain fit; returning p = 0".into());
        polished = BfgsOutcome { x: joined(&plain.x, &floor_gamma), f: nested, ..polished };
        polished.grad = zi.value_and_gradient(&polished.x).1;
    }
    if polished.f >= *trace.last().expect("non-empty") {
        trace.push(polished.f);
    }
    if polished.x[zi_structure.offsets().inflation] <= LOGIT_FLOOR + 1.0 {
        diagnostics.push("inflation probability estimated at zero".into());
    }
    let mut result = FitResult::assemble(&zi, &teams, config, &polished, diagnostics)?;
    result.n_iter = n_iter;
    result.em_trace = trace;
    Ok(result)
}

/// Maximizes `Σ w ln p + (1 - w) ln(1 - p)` over logistic coefficients.
fn logistic_m_step(w: &[f64], z: &[Vec<f64>], start: Vec<f64>, config: &FitConfig) -> BfgsOutcome {
    let neg = |g: &[f64]| {
        let mut f = 0.0;
        let mut grad = vec![0.0; g.len()];
        for (wi, zi) in w.iter().zip(z) {
            let eta: f64 = g.iter().zip(zi).map(|(a, b)| a * b).sum();
            // ln p = -softplus(-eta), ln(1-p) = -softplus(eta)
            let sp = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
            f += wi * sp(-eta) + (1.0 - wi) * sp(eta);
            let p = crate::regress::logistic(eta);
            for (gk, zk) in grad.iter_mut().zip(zi) {
                *gk += (p - wi) * zk;
            }
        }
        (f, grad)
    };
    minimize(neg, start, &config.bfgs())
}
