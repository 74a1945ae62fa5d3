//! Half-time models. Independent halves (Model A) factorize into two
//! univariate fits; coupled models start from their margins, then fit the
//! copula parameter alone, then refine everything jointly.

use super::likelihood::{HalfDiffs, MatchDiff, PackedLikelihood};
use super::optim::{minimize, BfgsOptions, BfgsOutcome};
use super::{fit_univariate, initial_half, maximize, pairs, team_index, FitConfig, FitResult};
use crate::copula::CopulaFamily;
use crate::error::{Error, Result};
use crate::regress::{copula_from_unconstrained, logit, Family, Layout, ModelStructure};

/// Candidate copula values scanned before the one-dimensional search.
const FRANK_GRID: [f64; 8] = [-6.0, -3.0, -1.0, -0.3, 0.3, 1.0, 3.0, 6.0];
const GUMBEL_GRID: [f64; 5] = [1.05, 1.3, 1.8, 2.5, 4.0];

pub fn fit_bivariate(data: &[HalfDiffs], structure: &ModelStructure, config: &FitConfig) -> Result<FitResult> {
    if structure.layout == Layout::Univariate {
        return Err(Error::InvalidParameter("fit_bivariate needs layout A, B or C".into()));
    }
    let teams = team_index(
        data.iter().flat_map(|m| [m.home.as_str(), m.away.as_str()]),
        |t| pairs(data.iter().map(|m| (m.home.as_str(), m.away.as_str())), t),
        config,
    )?;
    let structure = ModelStructure { n_teams: teams.len(), n_inflation: 1, ..*structure };
    let lik = PackedLikelihood::bivariate(data, &teams, &structure, config.link)?;

    if structure.layout == Layout::BivA {
        let (halves, diagnostics) = fit_halves(data, structure.family, config)?;
        let x = combine_halves(&structure, &halves);
        let (f, grad) = lik.value_and_gradient(&x);
        let out = BfgsOutcome {
            x,
            f,
            grad,
            n_iter: halves.iter().map(|h| h.n_iter).sum(),
            converged: halves.iter().all(|h| h.converged),
        };
        return FitResult::assemble(&lik, &teams, config, &out, diagnostics);
    }

    // margins under independence
    let independent = ModelStructure { copula: CopulaFamily::Independence, ..structure };
    let (mut x, mut n_iter, mut diagnostics) = match structure.layout {
        Layout::BivC => {
            let (halves, diagnostics) = fit_halves(data, structure.family, config)?;
            let n_iter = halves.iter().map(|h| h.n_iter).sum();
            (combine_halves(&independent, &halves), n_iter, diagnostics)
        }
        _ => {
            let ind = PackedLikelihood::bivariate(data, &teams, &independent, config.link)?;
            let (x0, diagnostics) = shared_start(data, &teams, structure.family, config)?;
            let out = maximize(&ind, x0, config);
            (out.x, out.n_iter, diagnostics)
        }
    };
    if !structure.has_copula() {
        let out = maximize(&lik, x, config);
        let out = BfgsOutcome { n_iter: out.n_iter + n_iter, ..out };
        return FitResult::assemble(&lik, &teams, config, &out, diagnostics);
    }

    // copula parameter alone, margins held at their estimates
    let grid: Vec<f64> = match structure.copula {
        CopulaFamily::Gumbel => GUMBEL_GRID.iter().map(|th| (th - 1.0_f64).ln()).collect(),
        _ => FRANK_GRID.to_vec(),
    };
    let with_t = |t: f64| {
        let mut v = x.clone();
        v.push(t);
        v
    };
    let t0 = grid
        .iter()
        .copied()
        .map(|t| (t, lik.value(&with_t(t))))
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
        .ok_or_else(|| Error::Numerical("no feasible copula starting value".into()))?;
    let one_d = |t: &[f64]| {
        let (f, g) = lik.value_and_gradient(&with_t(t[0]));
        (-f, vec![-g[g.len() - 1]])
    };
    let theta_only = minimize(one_d, vec![t0], &BfgsOptions { max_iter: 200, ..config.bfgs() });
    n_iter += theta_only.n_iter;
    x.push(theta_only.x[0]);

    let start_ll = lik.value(&x);
    let joint = maximize(&lik, x.clone(), config);
    let out = if joint.f >= start_ll {
        BfgsOutcome { n_iter: joint.n_iter + n_iter, ..joint }
    } else {
        let (f, grad) = lik.value_and_gradient(&x);
        BfgsOutcome { x, f, grad, n_iter: joint.n_iter + n_iter, converged: false }
    };
    let theta = copula_from_unconstrained(structure.copula, out.x[out.x.len() - 1]).theta();
    match structure.copula {
        CopulaFamily::Gumbel if theta - 1.0 < 1e-6 => {
            diagnostics.push(format!("Gumbel theta {theta} at the independence boundary"))
        }
        CopulaFamily::Frank if theta.abs() > 100.0 => {
            diagnostics.push(format!("Frank theta {theta} near comonotone/countermonotone limit"))
        }
        _ => {}
    }
    FitResult::assemble(&lik, &teams, config, &out, diagnostics)
}

fn fit_halves(data: &[HalfDiffs], family: Family, config: &FitConfig) -> Result<(Vec<FitResult>, Vec<String>)> {
    let uni = ModelStructure::univariate(family, 0);
    // the joint gradient stacks both halves, so each must meet gtol / sqrt(2)
    let config = &FitConfig { gradient_tol: config.gradient_tol / 2.0, ..config.clone() };
    let mut diagnostics = Vec::new();
    let fits = [0, 1]
        .into_iter()
        .map(|h| {
            let rows: Vec<MatchDiff> = data
                .iter()
                .map(|m| MatchDiff::new(m.home.clone(), m.away.clone(), if h == 0 { m.first } else { m.second }))
                .collect();
            let fit = fit_univariate(&rows, &uni, config)?;
            diagnostics.extend(fit.diagnostics.iter().map(|d| format!("half {}: {d}", h + 1)));
            Ok(fit)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fits, diagnostics))
}

/// Univariate packing is `[block, scale, (logit)]`; the two-half layout
/// wants `[block1, block2, scale1, scale2, (logit1, logit2)]`.
fn combine_halves(structure: &ModelStructure, halves: &[FitResult]) -> Vec<f64> {
    let len = structure.block_len();
    let mut x: Vec<f64> = halves.iter().flat_map(|h| h.packed[..len].to_vec()).collect();
    x.extend(halves.iter().map(|h| h.packed[len]));
    if structure.family == Family::ZiSkellam {
        x.extend(halves.iter().map(|h| h.packed[len + 1]));
    }
    x
}

/// Start for shared abilities: least squares on both halves stacked.
fn shared_start(
    data: &[HalfDiffs],
    teams: &crate::regress::TeamIndex,
    family: Family,
    config: &FitConfig,
) -> Result<(Vec<f64>, Vec<String>)> {
    let idx = pairs(data.iter().map(|m| (m.home.as_str(), m.away.as_str())), teams)?;
    let stacked_pairs: Vec<(usize, usize)> = idx.iter().chain(&idx).copied().collect();
    let stacked: Vec<f64> = data.iter().map(|m| m.first as f64).chain(data.iter().map(|m| m.second as f64)).collect();
    let (mut x, diagnostics) = initial_half(&stacked_pairs, &stacked, teams, family);
    let scale = x.pop().expect("scale");
    x.extend([config.link.from_scale(scale); 2]);
    if family == Family::ZiSkellam {
        x.extend([logit(0.05); 2]);
    }
    Ok((x, diagnostics))
}
