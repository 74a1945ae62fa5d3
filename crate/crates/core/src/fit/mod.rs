//! Maximum-likelihood fitting of the regression models.
//!
//! Parameters are optimized on the unconstrained packed scale (see
//! [`crate::regress`]) by BFGS with analytic gradients. Zero inflation is
//! fitted by EM; bivariate models start from inference-for-margins
//! estimates and are then refined jointly.

mod bivariate;
mod em;
mod likelihood;
mod optim;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use bivariate::fit_bivariate;
pub use em::fit_zi_em;
pub use likelihood::{HalfDiffs, MatchDiff, PackedLikelihood};

use crate::copula::BivariateZ;
use crate::error::{Error, Result};
use crate::regress::{
    check_identifiable, unpack_parameters, Family, Layout, ModelParams, ModelStructure, TeamIndex, VarianceLink,
};
use crate::zdist::{DiscLaplaceParams, DiscNormalParams, DistOnZ, Skellam2Params, ZiSkellamParams};
use optim::{minimize, BfgsOptions, BfgsOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Euclidean norm of the log-likelihood gradient at which a fit counts
    /// as converged.
    pub gradient_tol: f64,
    /// Relative step size below which the optimizer stops making progress.
    pub parameter_tol: f64,
    /// EM stops once an iteration raises the log-likelihood by less.
    pub em_tol: f64,
    /// Carried into reports; the optimizer itself is deterministic.
    pub seed: u64,
    pub link: VarianceLink,
    /// Baseline team; defaults to the lexicographically first.
    pub baseline: Option<String>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gradient_tol: 1e-6,
            parameter_tol: 1e-12,
            em_tol: 1e-8,
            seed: 0,
            link: VarianceLink::Log,
            baseline: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.gradient_tol) && ok(self.parameter_tol) && ok(self.em_tol)) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("fit tolerances and max_iter must be positive".into()));
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions { max_iter: self.max_iter, gtol: self.gradient_tol, xtol: self.parameter_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub structure: ModelStructure,
    pub teams: TeamIndex,
    pub link: VarianceLink,
    pub estimates: ModelParams,
    /// Estimates on the optimizer's unconstrained scale.
    pub packed: Vec<f64>,
    pub loglik: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each EM iteration (zero-inflated fits only).
    #[serde(default)]
    pub em_trace: Vec<f64>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// `(AIC, BIC) = (-2ℓ + 2k, -2ℓ + k ln n)`.
pub fn information_criteria(loglik: f64, n_params: usize, n_obs: usize) -> Result<(f64, f64)> {
    if n_obs == 0 {
        return Err(Error::InvalidParameter("information criteria need at least one observation".into()));
    }
    let k = n_params as f64;
    Ok((-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * (n_obs as f64).ln()))
}

impl FitResult {
    pub(crate) fn assemble(
        lik: &PackedLikelihood,
        teams: &TeamIndex,
        config: &FitConfig,
        out: &BfgsOutcome,
        diagnostics: Vec<String>,
    ) -> Result<Self> {
        let link = config.link;
        let structure = *lik.structure();
        let (loglik, grad) = lik.value_and_gradient(&out.x);
        let (aic, bic) = information_criteria(loglik, structure.n_params(), lik.n_obs())?;
        let gradient_norm = optim::norm(&grad);
        Ok(Self {
            structure,
            teams: teams.clone(),
            link,
            estimates: unpack_parameters(&out.x, &structure, teams, link)?,
            packed: out.x.clone(),
            loglik,
            n_params: structure.n_params(),
            n_obs: lik.n_obs(),
            aic,
            bic,
            converged: out.converged && loglik.is_finite() && gradient_norm < config.gradient_tol,
            n_iter: out.n_iter,
            gradient_norm,
            em_trace: Vec::new(),
            diagnostics,
        })
    }

    /// Law of the score difference in `half` (0 for univariate models) for a
    /// fixture. `covariates` are the extra inflation covariates, if any.
    pub fn distribution(&self, half: usize, home: &str, away: &str, covariates: &[f64]) -> Result<DistOnZ> {
        let h = self
            .estimates
            .halves
            .get(half)
            .ok_or_else(|| Error::InvalidParameter(format!("model has no half {half}")))?;
        let mu = h.ability.predict_mean(home, away)?;
        marginal_law(self.structure.family, mu, h.scale, || {
            let spec = h.inflation.as_ref().ok_or_else(|| Error::InvalidParameter("missing inflation".into()))?;
            let mut z = Vec::with_capacity(covariates.len() + 1);
            z.push(1.0);
            z.extend_from_slice(covariates);
            spec.prob(&z)
        })
    }

    /// Joint law of the two half-time differences of a fixture.
    pub fn bivariate(&self, home: &str, away: &str) -> Result<BivariateZ> {
        if self.structure.layout == Layout::Univariate {
            return Err(Error::Unsupported("univariate model has no half-time law".into()));
        }
        Ok(BivariateZ::new(
            self.distribution(0, home, away, &[])?,
            self.distribution(1, home, away, &[])?,
            self.estimates.copula,
        ))
    }
}

pub(crate) fn marginal_law(
    family: Family,
    mu: f64,
    scale: f64,
    inflation: impl FnOnce() -> Result<f64>,
) -> Result<DistOnZ> {
    Ok(match family {
        Family::Skellam => DistOnZ::Skellam2(Skellam2Params::new(mu, scale)?),
        Family::ZiSkellam => DistOnZ::ZiSkellam(ZiSkellamParams::new(Skellam2Params::new(mu, scale)?, inflation()?)?),
        Family::DiscNormal => DistOnZ::DiscNormal(DiscNormalParams::new(mu, scale)?),
        Family::DiscLaplace => DistOnZ::DiscLaplace(DiscLaplaceParams::new(mu, scale)?),
    })
}

pub(crate) fn team_index<'a>(
    names: impl Iterator<Item = &'a str>,
    pairs_of: impl Fn(&TeamIndex) -> Result<Vec<(usize, usize)>>,
    config: &FitConfig,
) -> Result<TeamIndex> {
    config.validate()?;
    let teams = TeamIndex::new(names, config.baseline.as_deref())?;
    check_identifiable(&pairs_of(&teams)?, &teams)?;
    Ok(teams)
}

/// Fits a univariate model. `structure.n_teams` (and, for zero inflation,
/// `n_inflation`) are taken from the data.
pub fn fit_univariate(data: &[MatchDiff], structure: &ModelStructure, config: &FitConfig) -> Result<FitResult> {
    if structure.layout != Layout::Univariate {
        return Err(Error::InvalidParameter(format!("{} is not a univariate layout", structure.layout)));
    }
    if structure.family == Family::ZiSkellam {
        return fit_zi_em(data, structure, config);
    }
    let teams = univariate_teams(data, config)?;
    let structure = ModelStructure { n_teams: teams.len(), ..*structure };
    let lik = PackedLikelihood::univariate(data, &teams, &structure, config.link)?;
    let pairs = pairs(data.iter().map(|m| (m.home.as_str(), m.away.as_str())), &teams)?;
    let diffs: Vec<f64> = data.iter().map(|m| m.diff as f64).collect();
    let (mut x0, diagnostics) = initial_half(&pairs, &diffs, &teams, structure.family);
    let scale = x0.pop().expect("scale");
    x0.push(config.link.from_scale(scale));
    let out = maximize(&lik, x0, config);
    FitResult::assemble(&lik, &teams, config, &out, diagnostics)
}

pub(crate) fn univariate_teams(data: &[MatchDiff], config: &FitConfig) -> Result<TeamIndex> {
    team_index(
        data.iter().flat_map(|m| [m.home.as_str(), m.away.as_str()]),
        |t| pairs(data.iter().map(|m| (m.home.as_str(), m.away.as_str())), t),
        config,
    )
}

pub(crate) fn pairs<'a>(
    it: impl Iterator<Item = (&'a str, &'a str)>,
    teams: &TeamIndex,
) -> Result<Vec<(usize, usize)>> {
    it.map(|(h, a)| Ok((teams.index_of(h)?, teams.index_of(a)?))).collect()
}

pub(crate) fn maximize(lik: &PackedLikelihood, x0: Vec<f64>, config: &FitConfig) -> BfgsOutcome {
    let neg = |x: &[f64]| {
        let (f, g) = lik.value_and_gradient(x);
        (-f, g.into_iter().map(|v| -v).collect())
    };
    let mut out = minimize(neg, x0, &config.bfgs());
    out.f = -out.f;
    out.grad.iter_mut().for_each(|v| *v = -*v);
    out
}

/// Least-squares abilities plus a family-appropriate scale: returns
/// `[alpha, beta.., gamma.., scale]` with the scale on its natural scale.
pub(crate) fn initial_half(
    pairs: &[(usize, usize)],
    y: &[f64],
    teams: &TeamIndex,
    family: Family,
) -> (Vec<f64>, Vec<String>) {
    let t = teams.len();
    let cols = 2 * t - 1;
    let row = |&(h, a): &(usize, usize)| {
        let mut idx = vec![0];
        if let Some(s) = teams.slot(h) {
            idx.push(1 + s);
        }
        if let Some(s) = teams.slot(a) {
            idx.push(t + s);
        }
        idx
    };
    // tiny ridge keeps the normal equations positive definite
    let mut xtx = DMatrix::<f64>::identity(cols, cols) * 1e-8;
    let mut xty = DVector::<f64>::zeros(cols);
    for (p, &v) in pairs.iter().zip(y) {
        let r = row(p);
        for &i in &r {
            xty[i] += v;
            for &j in &r {
                xtx[(i, j)] += 1.0;
            }
        }
    }
    let beta: Vec<f64> = match xtx.clone().cholesky() {
        Some(c) => c.solve(&xty).iter().copied().collect(),
        None => vec![0.0; cols],
    };
    let fitted: Vec<f64> = pairs.iter().map(|p| row(p).iter().map(|&i| beta[i]).sum()).collect();
    let n = y.len() as f64;
    let resid_var = y.iter().zip(&fitted).map(|(v, f)| (v - f).powi(2)).sum::<f64>() / n;
    let max_mu = fitted.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut diagnostics = Vec::new();
    if y.iter().all(|&v| v == y[0]) {
        diagnostics.push(format!("all score differences equal {}; the scale sits on its boundary", y[0]));
    }
    let scale = match family {
        Family::Skellam | Family::ZiSkellam => resid_var.max(1.2 * max_mu + 0.5),
        Family::DiscNormal => (resid_var - 1.0 / 12.0).max(0.25),
        Family::DiscLaplace => (resid_var.max(0.5) / 2.0).sqrt(),
    };
    let mut x = beta;
    x.push(scale);
    (x, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn information_criteria_examples() {
        let (aic, _) = information_criteria(-1601.736, 38, 306).unwrap();
        assert!((aic - 3279.472).abs() < 1e-9);
        let (aic, _) = information_criteria(-1590.047, 72, 306).unwrap();
        assert!((aic - 3324.094).abs() < 1e-9);
        assert_eq!(information_criteria(0.0, 0, 1).unwrap(), (0.0, 0.0));
        let (_, bic) = information_criteria(-10.0, 3, 100).unwrap();
        assert!((bic - (20.0 + 3.0 * 100f64.ln())).abs() < 1e-12);
        assert!(information_criteria(-1.0, 1, 0).is_err());
    }

    #[test]
    fn least_squares_start_recovers_exact_means() {
        let teams = TeamIndex::new(["a", "b", "c"], None).unwrap();
        let truth = [0.5, 1.0, -0.5, 0.25, 2.0];
        let pairs: Vec<(usize, usize)> =
            (0..3).flat_map(|h| (0..3).filter(move |&a| a != h).map(move |a| (h, a))).collect();
        let y: Vec<f64> = pairs
            .iter()
            .map(|&(h, a)| {
                let b = teams.slot(h).map_or(0.0, |s| truth[1 + s]);
                let g = teams.slot(a).map_or(0.0, |s| truth[3 + s]);
                truth[0] + b + g
            })
            .collect();
        let (x, _) = initial_half(&pairs, &y, &teams, Family::DiscNormal);
        for (a, b) in x.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
