//! Packed log-likelihoods with analytic gradients.
//!
//! Marginal derivatives follow from closed forms: for the Skellam law
//! `∂p(z)/∂θ1 = p(z-1) - p(z)` and `∂p(z)/∂θ2 = p(z+1) - p(z)`, hence
//! `∂F(z)/∂θ1 = -p(z)` and `∂F(z)/∂θ2 = p(z+1)`; the discretized laws
//! differentiate their continuous cdf at the cell edges. Copula terms use the
//! analytic partials of the copula cdf.

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaPartials, CopulaSpec};
use crate::error::{Error, Result};
use crate::regress::{
    copula_from_unconstrained, copula_jacobian, logistic, Family, Layout, ModelStructure, Offsets, TeamIndex,
    VarianceLink,
};
use crate::zdist::{
    disc_laplace_log_pmf, laplace_cdf, log_add_exp, log_std_normal_interval, log_std_normal_pdf, skellam_log_pmf_range,
    std_normal_cdf, SkellamParams, TAIL_EPS,
};

/// One full-time observation: home team, away team, score difference
/// (home minus away).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchDiff {
    pub home: String,
    pub away: String,
    pub diff: i64,
    /// Extra covariates for the inflation logit; the intercept is implicit.
    #[serde(default)]
    pub covariates: Vec<f64>,
}

impl MatchDiff {
    pub fn new(home: impl Into<String>, away: impl Into<String>, diff: i64) -> Self {
        Self { home: home.into(), away: away.into(), diff, covariates: Vec::new() }
    }
}

/// Score differences of the two halves of one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfDiffs {
    pub home: String,
    pub away: String,
    pub first: i64,
    pub second: i64,
}

impl HalfDiffs {
    pub fn new(home: impl Into<String>, away: impl Into<String>, first: i64, second: i64) -> Self {
        Self { home: home.into(), away: away.into(), first, second }
    }
}

/// Marginal log-pmf and cdf values with derivatives with respect to
/// `(mean, scale, inflation logit)`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Marginal {
    pub log_pmf: f64,
    pub dlp: [f64; 3],
    /// `F(y)` and `F(y - 1)`.
    pub cdf: [f64; 2],
    pub dcdf: [[f64; 3]; 2],
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn skellam_marginal(mu: f64, sigma2: f64, y: i64, with_cdf: bool) -> Option<Marginal> {
    if !(sigma2 > mu.abs()) {
        return None;
    }
    let p = SkellamParams::new(0.5 * (sigma2 + mu), 0.5 * (sigma2 - mu)).ok()?;
    let lo = if with_cdf { p.support(TAIL_EPS).0.min(y - 1) } else { y - 1 };
    let run = skellam_log_pmf_range(lo, y + 1, &p);
    let k = run.len();
    let (lm, l0, lp) = (run[k - 3], run[k - 2], run[k - 1]);
    if !l0.is_finite() {
        return None;
    }
    let rm = (lm - l0).exp();
    let rp = (lp - l0).exp();
    let mut out = Marginal { log_pmf: l0, dlp: [0.5 * (rm - rp), 0.5 * (rm + rp - 2.0), 0.0], ..Marginal::default() };
    if with_cdf {
        let below: f64 = run[..k - 2].iter().map(|v| v.exp()).sum();
        let (pm, p0, pp) = (lm.exp(), l0.exp(), lp.exp());
        out.cdf = [(below + p0).min(1.0), below.min(1.0)];
        out.dcdf = [[-0.5 * (p0 + pp), 0.5 * (pp - p0), 0.0], [-0.5 * (pm + p0), 0.5 * (p0 - pm), 0.0]];
    }
    Some(out)
}

fn zi_marginal(mu: f64, sigma2: f64, logit: f64, y: i64, with_cdf: bool) -> Option<Marginal> {
    let base = skellam_marginal(mu, sigma2, y, with_cdf)?;
    let ln_p = -softplus(-logit);
    let ln_q = -softplus(logit);
    let (p, q) = (ln_p.exp(), ln_q.exp());
    let lb = base.log_pmf;
    let lp = if y == 0 { log_add_exp(ln_p, ln_q + lb) } else { ln_q + lb };
    let share = (ln_q + lb - lp).exp();
    let d_logit = if y == 0 { p * q * (1.0 - lb.exp()) / lp.exp() } else { -p };
    let mut out =
        Marginal { log_pmf: lp, dlp: [share * base.dlp[0], share * base.dlp[1], d_logit], ..Marginal::default() };
    if with_cdf {
        for (k, atom) in [(0, y >= 0), (1, y > 0)] {
            let ind = f64::from(u8::from(atom));
            let fb = base.cdf[k];
            out.cdf[k] = (q * fb + p * ind).min(1.0);
            out.dcdf[k] = [q * base.dcdf[k][0], q * base.dcdf[k][1], p * q * (ind - fb)];
        }
    }
    Some(out)
}

fn normal_marginal(mu: f64, sigma2: f64, y: i64, with_cdf: bool) -> Option<Marginal> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return None;
    }
    let s = sigma2.sqrt();
    let a = (y as f64 - 0.5 - mu) / s;
    let b = (y as f64 + 0.5 - mu) / s;
    let lp = log_std_normal_interval(a, b);
    if !lp.is_finite() {
        return None;
    }
    let ra = (log_std_normal_pdf(a) - lp).exp();
    let rb = (log_std_normal_pdf(b) - lp).exp();
    let mut out =
        Marginal { log_pmf: lp, dlp: [(ra - rb) / s, -(rb * b - ra * a) / (2.0 * sigma2), 0.0], ..Marginal::default() };
    if with_cdf {
        for (k, t) in [(0, b), (1, a)] {
            let phi = log_std_normal_pdf(t).exp();
            out.cdf[k] = std_normal_cdf(t);
            out.dcdf[k] = [-phi / s, -phi * t / (2.0 * sigma2), 0.0];
        }
    }
    Some(out)
}

fn laplace_marginal(mu: f64, scale: f64, y: i64, with_cdf: bool) -> Option<Marginal> {
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    let params = crate::zdist::DiscLaplaceParams::new(mu, scale).ok()?;
    let lp = disc_laplace_log_pmf(y, &params);
    if !lp.is_finite() {
        return None;
    }
    let lo = y as f64 - 0.5 - mu;
    let hi = y as f64 + 0.5 - mu;
    let log_density = |d: f64| -d.abs() / scale - (2.0 * scale).ln();
    let rl = (log_density(lo) - lp).exp();
    let rh = (log_density(hi) - lp).exp();
    let mut out = Marginal { log_pmf: lp, dlp: [rl - rh, (rl * lo - rh * hi) / scale, 0.0], ..Marginal::default() };
    if with_cdf {
        for (k, d) in [(0, hi), (1, lo)] {
            let f = log_density(d).exp();
            out.cdf[k] = laplace_cdf(mu + d, mu, scale);
            out.dcdf[k] = [-f, -f * d / scale, 0.0];
        }
    }
    Some(out)
}

/// Marginal evaluation for any fitted family. `None` marks an infeasible
/// parameter combination.
pub(crate) fn eval_marginal(
    family: Family,
    mu: f64,
    scale: f64,
    logit: f64,
    y: i64,
    with_cdf: bool,
) -> Option<Marginal> {
    if !mu.is_finite() {
        return None;
    }
    match family {
        Family::Skellam => skellam_marginal(mu, scale, y, with_cdf),
        Family::ZiSkellam => zi_marginal(mu, scale, logit, y, with_cdf),
        Family::DiscNormal => normal_marginal(mu, scale, y, with_cdf),
        Family::DiscLaplace => laplace_marginal(mu, scale, y, with_cdf),
    }
}

#[derive(Debug, Clone)]
struct Obs {
    home: usize,
    away: usize,
    y: [i64; 2],
    /// Inflation covariates with the leading intercept.
    z: Vec<f64>,
}

/// Log-likelihood of a dataset as a function of the packed parameter vector.
#[derive(Debug, Clone)]
pub struct PackedLikelihood {
    structure: ModelStructure,
    teams: TeamIndex,
    link: VarianceLink,
    obs: Vec<Obs>,
    weights: Option<Vec<f64>>,
}

impl PackedLikelihood {
    pub fn univariate(
        data: &[MatchDiff],
        teams: &TeamIndex,
        structure: &ModelStructure,
        link: VarianceLink,
    ) -> Result<Self> {
        if structure.layout != Layout::Univariate {
            return Err(Error::InvalidParameter("univariate data needs the univariate layout".into()));
        }
        let obs = data
            .iter()
            .map(|m| {
                let mut z = Vec::with_capacity(structure.n_inflation);
                z.push(1.0);
                if structure.family == Family::ZiSkellam {
                    if m.covariates.len() + 1 != structure.n_inflation {
                        return Err(Error::DimensionMismatch {
                            expected: structure.n_inflation - 1,
                            got: m.covariates.len(),
                        });
                    }
                    z.extend(&m.covariates);
                }
                Ok(Obs { home: teams.index_of(&m.home)?, away: teams.index_of(&m.away)?, y: [m.diff, 0], z })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(structure, teams, link, obs)
    }

    pub fn bivariate(
        data: &[HalfDiffs],
        teams: &TeamIndex,
        structure: &ModelStructure,
        link: VarianceLink,
    ) -> Result<Self> {
        if structure.layout == Layout::Univariate {
            return Err(Error::InvalidParameter("half-time data needs a bivariate layout".into()));
        }
        let obs = data
            .iter()
            .map(|m| {
                Ok(Obs {
                    home: teams.index_of(&m.home)?,
                    away: teams.index_of(&m.away)?,
                    y: [m.first, m.second],
                    z: vec![1.0],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(structure, teams, link, obs)
    }

    fn build(structure: &ModelStructure, teams: &TeamIndex, link: VarianceLink, obs: Vec<Obs>) -> Result<Self> {
        if teams.len() != structure.n_teams {
            return Err(Error::DimensionMismatch { expected: structure.n_teams, got: teams.len() });
        }
        Ok(Self { structure: *structure, teams: teams.clone(), link, obs, weights: None })
    }

    /// Per-observation weights on the log-likelihood terms.
    pub(crate) fn with_weights(mut self, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), self.obs.len());
        self.weights = Some(weights);
        self
    }

    pub fn n_obs(&self) -> usize {
        self.obs.len()
    }

    pub fn n_params(&self) -> usize {
        self.structure.n_params()
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x, false).0
    }

    /// Log-likelihood and its gradient; `-inf` (with a zero gradient) outside
    /// the feasible region.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(x, true)
    }

    /// Log-pmf of each observation under the base (non-inflated) law,
    /// univariate layout only.
    pub(crate) fn base_log_pmfs(&self, x: &[f64]) -> Option<Vec<f64>> {
        let off = self.structure.offsets();
        let scale = self.link.to_scale(x[off.scales]);
        let base = match self.structure.family {
            Family::ZiSkellam => Family::Skellam,
            f => f,
        };
        self.obs
            .iter()
            .map(|o| {
                let (mu, _) = self.mean(x, &off, 0, o);
                eval_marginal(base, mu, scale, 0.0, o.y[0], false).map(|m| m.log_pmf)
            })
            .collect()
    }

    /// Inflation covariate rows, univariate layout.
    pub(crate) fn covariate_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.obs.iter().map(|o| o.z.as_slice())
    }

    fn mean(&self, x: &[f64], off: &Offsets, half: usize, o: &Obs) -> (f64, [Option<usize>; 3]) {
        let b = off.block(half);
        let t = self.teams.len();
        let hs = self.teams.slot(o.home).map(|s| b + 1 + s);
        let as_ = self.teams.slot(o.away).map(|s| b + t + s);
        let mu = x[b] + hs.map_or(0.0, |i| x[i]) + as_.map_or(0.0, |i| x[i]);
        (mu, [Some(b), hs, as_])
    }

    fn evaluate(&self, x: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let n = self.structure.n_params();
        assert_eq!(x.len(), n, "packed parameter length");
        let infeasible = || (f64::NEG_INFINITY, vec![0.0; n]);
        let off = self.structure.offsets();
        let halves = self.structure.n_halves();
        let scales: Vec<f64> = (0..halves).map(|h| self.link.to_scale(x[off.scales + h])).collect();
        let dscales: Vec<f64> = (0..halves).map(|h| self.link.derivative(x[off.scales + h])).collect();
        let copula = if self.structure.has_copula() {
            Some(copula_from_unconstrained(self.structure.copula, x[off.copula]))
        } else {
            None
        };
        let zi = self.structure.family == Family::ZiSkellam;
        let univariate = self.structure.layout == Layout::Univariate;

        let mut total = 0.0;
        let mut grad = vec![0.0; n];
        let mut local = [[0.0; 3]; 2];
        let mut idx = [[None; 3]; 2];
        for (i, o) in self.obs.iter().enumerate() {
            let w = self.weights.as_ref().map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            let mut marg = [Marginal::default(); 2];
            for h in 0..halves {
                let (mu, ix) = self.mean(x, &off, h, o);
                idx[h] = ix;
                let logit = match (zi, univariate) {
                    (false, _) => 0.0,
                    (true, true) => o.z.iter().zip(&x[off.inflation..]).map(|(z, g)| z * g).sum(),
                    (true, false) => x[off.inflation + h],
                };
                match eval_marginal(self.structure.family, mu, scales[h], logit, o.y[h], copula.is_some()) {
                    Some(m) => marg[h] = m,
                    None => return infeasible(),
                }
            }
            let (ll, d_theta) = match &copula {
                None => {
                    for h in 0..halves {
                        local[h] = marg[h].dlp;
                    }
                    (marg[..halves].iter().map(|m| m.log_pmf).sum::<f64>(), 0.0)
                }
                Some(c) => match coupled(c, &marg, &mut local) {
                    Some(v) => v,
                    None => return infeasible(),
                },
            };
            total += w * ll;
            if with_grad {
                for h in 0..halves {
                    for ix in idx[h].into_iter().flatten() {
                        grad[ix] += w * local[h][0];
                    }
                    grad[off.scales + h] += w * local[h][1] * dscales[h];
                    if zi {
                        if univariate {
                            for (k, z) in o.z.iter().enumerate() {
                                grad[off.inflation + k] += w * local[h][2] * z;
                            }
                        } else {
                            grad[off.inflation + h] += w * local[h][2];
                        }
                    }
                }
                if copula.is_some() {
                    grad[off.copula] += w * d_theta * copula_jacobian(self.structure.copula, x[off.copula]);
                }
            }
        }
        if !total.is_finite() {
            return infeasible();
        }
        (total, grad)
    }
}

/// Log of the copula rectangle and its derivatives; writes the marginal
/// parameter derivatives into `local` and returns `(log J, d log J / dθ)`.
fn coupled(c: &CopulaSpec, m: &[Marginal; 2], local: &mut [[f64; 3]; 2]) -> Option<(f64, f64)> {
    let [u1, u0] = m[0].cdf;
    let [v1, v0] = m[1].cdf;
    let p11: CopulaPartials = c.partials(u1, v1);
    let p01 = c.partials(u0, v1);
    let p10 = c.partials(u1, v0);
    let p00 = c.partials(u0, v0);
    let j = p11.value - p01.value - p10.value + p00.value;
    if !(j > 0.0) {
        return None;
    }
    let d_u1 = (p11.du - p10.du) / j;
    let d_u0 = (p00.du - p01.du) / j;
    let d_v1 = (p11.dv - p01.dv) / j;
    let d_v0 = (p00.dv - p10.dv) / j;
    for k in 0..3 {
        local[0][k] = d_u1 * m[0].dcdf[0][k] + d_u0 * m[0].dcdf[1][k];
        local[1][k] = d_v1 * m[1].dcdf[0][k] + d_v0 * m[1].dcdf[1][k];
    }
    let d_theta = (p11.dtheta - p01.dtheta - p10.dtheta + p00.dtheta) / j;
    Some((j.ln(), d_theta))
}

/// Logistic inflation probability, used by EM.
pub(crate) fn inflation_probability(coeffs: &[f64], z: &[f64]) -> f64 {
    logistic(coeffs.iter().zip(z).map(|(g, v)| g * v).sum())
}
