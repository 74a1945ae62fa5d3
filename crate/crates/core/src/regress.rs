//! Team-ability regression structure.
//!
//! The mean score difference of a fixture with `home` hosting `away` is
//! `alpha + beta[home] + gamma[away]`, with both offsets of the baseline team
//! pinned to zero. Bivariate layouts reuse one ability block per half (A, C)
//! or share a single block across halves (B).
//!
//! Packed parameter order, for every layout:
//!
//! 1. ability blocks, each `[alpha, beta(non-baseline teams in index order),
//!    gamma(non-baseline teams in index order)]`;
//! 2. one scale per half, on the unconstrained scale of the [`VarianceLink`];
//! 3. inflation coefficients (zero-inflated family only): the covariate
//!    coefficients for the univariate layout, one logit per half otherwise;
//! 4. the copula parameter (Frank: θ itself, Gumbel: `ln(θ - 1)`), when the
//!    layout carries one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, CopulaSpec};
use crate::error::{Error, Result};

/// Ordered, de-duplicated team names with a designated baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamIndex {
    names: Vec<String>,
    baseline: usize,
}

impl TeamIndex {
    /// Sorts names lexicographically. The baseline defaults to the first name.
    pub fn new<I, S>(names: I, baseline: Option<&str>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self::with_order(names, baseline)
    }

    /// Keeps the caller's order; names must already be unique.
    pub fn with_order(names: Vec<String>, baseline: Option<&str>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("team index needs at least one team".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidParameter(format!("duplicate team `{dup}`")));
        }
        let baseline = match baseline {
            None => 0,
            Some(b) => names.iter().position(|n| n == b).ok_or_else(|| Error::UnknownTeam(b.to_string()))?,
        };
        Ok(Self { names, baseline })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn baseline(&self) -> &str {
        &self.names[self.baseline]
    }

    pub fn baseline_index(&self) -> usize {
        self.baseline
    }

    pub fn index_of(&self, team: &str) -> Result<usize> {
        self.names.iter().position(|n| n == team).ok_or_else(|| Error::UnknownTeam(team.to_string()))
    }

    /// Position of a team among the non-baseline teams, i.e. its offset in a
    /// packed beta or gamma run.
    pub(crate) fn slot(&self, idx: usize) -> Option<usize> {
        match idx.cmp(&self.baseline) {
            std::cmp::Ordering::Less => Some(idx),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(idx - 1),
        }
    }
}

/// Intercept plus per-team home (`beta`) and away (`gamma`) abilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilitySpec {
    pub alpha: f64,
    pub beta: BTreeMap<String, f64>,
    pub gamma: BTreeMap<String, f64>,
}

impl AbilitySpec {
    /// All abilities zero, intercept `alpha`.
    pub fn flat(teams: &TeamIndex, alpha: f64) -> Self {
        let zeros: BTreeMap<String, f64> = teams.names().iter().map(|n| (n.clone(), 0.0)).collect();
        Self { alpha, beta: zeros.clone(), gamma: zeros }
    }

    pub fn predict_mean(&self, home: &str, away: &str) -> Result<f64> {
        let b = self.beta.get(home).ok_or_else(|| Error::UnknownTeam(home.to_string()))?;
        let g = self.gamma.get(away).ok_or_else(|| Error::UnknownTeam(away.to_string()))?;
        Ok(self.alpha + b + g)
    }

    /// `beta[team] - gamma[team]`.
    pub fn home_advantage(&self, team: &str) -> Result<f64> {
        let b = self.beta.get(team).ok_or_else(|| Error::UnknownTeam(team.to_string()))?;
        let g = self.gamma.get(team).ok_or_else(|| Error::UnknownTeam(team.to_string()))?;
        Ok(b - g)
    }

    /// Checks every team is present and the baseline offsets are zero.
    pub fn validate(&self, teams: &TeamIndex) -> Result<()> {
        for name in teams.names() {
            if !self.beta.contains_key(name) || !self.gamma.contains_key(name) {
                return Err(Error::UnknownTeam(name.clone()));
            }
        }
        let b = teams.baseline();
        if self.beta[b] != 0.0 || self.gamma[b] != 0.0 {
            return Err(Error::InvalidParameter(format!("baseline team `{b}` must have zero offsets")));
        }
        Ok(())
    }
}

pub fn predict_mean(home: &str, away: &str, spec: &AbilitySpec) -> Result<f64> {
    spec.predict_mean(home, away)
}

pub fn home_advantage(team: &str, spec: &AbilitySpec) -> Result<f64> {
    spec.home_advantage(team)
}

/// Logistic model for the zero-inflation probability,
/// `p = 1 / (1 + exp(-z'γ))`. The covariate vector `z` carries its own
/// intercept column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationSpec {
    pub coeffs: Vec<f64>,
}

/// Logit floor used to represent an inflation probability of zero.
pub const LOGIT_FLOOR: f64 = -700.0;

impl InflationSpec {
    /// Intercept-only model with probability `p`.
    pub fn constant(p: f64) -> Self {
        Self { coeffs: vec![logit(p)] }
    }

    pub fn prob(&self, covariates: &[f64]) -> Result<f64> {
        if covariates.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch { expected: self.coeffs.len(), got: covariates.len() });
        }
        Ok(logistic(self.linear(covariates)))
    }

    pub(crate) fn linear(&self, covariates: &[f64]) -> f64 {
        self.coeffs.iter().zip(covariates).map(|(g, z)| g * z).sum()
    }
}

pub fn inflation_prob(covariates: &[f64], spec: &InflationSpec) -> Result<f64> {
    spec.prob(covariates)
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    if p <= 0.0 {
        return LOGIT_FLOOR;
    }
    (p / (1.0 - p)).ln().max(LOGIT_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One full-time score difference per match.
    Univariate,
    /// Halves independent, separate abilities per half.
    BivA,
    /// Halves coupled by a copula, abilities shared, variance per half.
    BivB,
    /// Halves coupled by a copula, separate abilities per half.
    BivC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Skellam,
    ZiSkellam,
    DiscNormal,
    DiscLaplace,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Skellam => "skellam",
            Family::ZiSkellam => "zi-skellam",
            Family::DiscNormal => "disc-normal",
            Family::DiscLaplace => "disc-laplace",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "skellam" => Ok(Family::Skellam),
            "zi-skellam" | "zi" => Ok(Family::ZiSkellam),
            "disc-normal" | "normal" => Ok(Family::DiscNormal),
            "disc-laplace" | "laplace" => Ok(Family::DiscLaplace),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layout::Univariate => "univariate",
            Layout::BivA => "model-a",
            Layout::BivB => "model-b",
            Layout::BivC => "model-c",
        })
    }
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "univariate" | "full-time" | "ft" => Ok(Layout::Univariate),
            "a" | "model-a" | "biv-a" => Ok(Layout::BivA),
            "b" | "model-b" | "biv-b" => Ok(Layout::BivB),
            "c" | "model-c" | "biv-c" => Ok(Layout::BivC),
            other => Err(Error::InvalidParameter(format!("unknown layout `{other}`"))),
        }
    }
}

/// Transform between a positive scale and the unconstrained optimizer value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceLink {
    #[default]
    Log,
    Softplus,
}

impl VarianceLink {
    pub fn to_scale(&self, s: f64) -> f64 {
        match self {
            VarianceLink::Log => s.exp(),
            VarianceLink::Softplus => {
                if s > 30.0 {
                    s
                } else {
                    s.exp().ln_1p()
                }
            }
        }
    }

    pub fn from_scale(&self, v: f64) -> f64 {
        match self {
            VarianceLink::Log => v.ln(),
            VarianceLink::Softplus => {
                if v > 30.0 {
                    v
                } else {
                    v.exp_m1().ln()
                }
            }
        }
    }

    /// `d scale / d s`.
    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            VarianceLink::Log => s.exp(),
            VarianceLink::Softplus => logistic(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelStructure {
    pub layout: Layout,
    pub family: Family,
    pub copula: CopulaFamily,
    pub n_teams: usize,
    /// Length of each inflation covariate vector (intercept included);
    /// meaningful for the zero-inflated univariate model only.
    pub n_inflation: usize,
}

impl ModelStructure {
    pub fn univariate(family: Family, n_teams: usize) -> Self {
        Self { layout: Layout::Univariate, family, copula: CopulaFamily::Independence, n_teams, n_inflation: 1 }
    }

    /// Model A ignores `copula`: its halves are independent by definition.
    pub fn bivariate(layout: Layout, family: Family, copula: CopulaFamily, n_teams: usize) -> Self {
        let copula = if layout == Layout::BivA { CopulaFamily::Independence } else { copula };
        Self { layout, family, copula, n_teams, n_inflation: 1 }
    }

    pub fn with_inflation_covariates(mut self, n_inflation: usize) -> Self {
        self.n_inflation = n_inflation.max(1);
        self
    }

    pub fn n_halves(&self) -> usize {
        if self.layout == Layout::Univariate {
            1
        } else {
            2
        }
    }

    pub fn n_ability_blocks(&self) -> usize {
        match self.layout {
            Layout::Univariate | Layout::BivB => 1,
            Layout::BivA | Layout::BivC => 2,
        }
    }

    pub fn block_len(&self) -> usize {
        2 * self.n_teams - 1
    }

    pub fn has_copula(&self) -> bool {
        matches!(self.layout, Layout::BivB | Layout::BivC) && self.copula != CopulaFamily::Independence
    }

    pub fn n_inflation_params(&self) -> usize {
        match (self.family, self.layout) {
            (Family::ZiSkellam, Layout::Univariate) => self.n_inflation,
            (Family::ZiSkellam, _) => 2,
            _ => 0,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_ability_blocks() * self.block_len()
            + self.n_halves()
            + self.n_inflation_params()
            + usize::from(self.has_copula())
    }

    pub(crate) fn offsets(&self) -> Offsets {
        let abilities = self.n_ability_blocks() * self.block_len();
        let scales = abilities;
        let inflation = scales + self.n_halves();
        let copula = inflation + self.n_inflation_params();
        Offsets { block_len: self.block_len(), shared: self.n_ability_blocks() == 1, scales, inflation, copula }
    }

    /// Short stable label, e.g. `model-b_skellam_frank`.
    pub fn label(&self) -> String {
        if self.has_copula() {
            format!("{}_{}_{}", self.layout, self.family, self.copula)
        } else {
            format!("{}_{}", self.layout, self.family)
        }
    }
}

/// Positions of each parameter group in the packed vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Offsets {
    pub block_len: usize,
    pub shared: bool,
    pub scales: usize,
    pub inflation: usize,
    pub copula: usize,
}

impl Offsets {
    pub fn block(&self, half: usize) -> usize {
        if self.shared {
            0
        } else {
            half * self.block_len
        }
    }
}

/// Parameters of one half (or the full match, for the univariate layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfParams {
    pub ability: AbilitySpec,
    /// Variance for Skellam-type and discrete-normal margins, Laplace scale
    /// `b` for the discrete Laplace.
    pub scale: f64,
    pub inflation: Option<InflationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub halves: Vec<HalfParams>,
    pub copula: CopulaSpec,
}

pub(crate) fn copula_to_unconstrained(c: &CopulaSpec) -> f64 {
    match c.family() {
        CopulaFamily::Gumbel => (c.theta() - 1.0).max(1e-300).ln(),
        _ => c.theta(),
    }
}

pub(crate) fn copula_from_unconstrained(family: CopulaFamily, t: f64) -> CopulaSpec {
    match family {
        CopulaFamily::Gumbel => CopulaSpec::unchecked(family, 1.0 + t.exp()),
        _ => CopulaSpec::unchecked(family, t),
    }
}

/// `d θ / d t` for the copula transform.
pub(crate) fn copula_jacobian(family: CopulaFamily, t: f64) -> f64 {
    match family {
        CopulaFamily::Gumbel => t.exp(),
        CopulaFamily::Frank => 1.0,
        CopulaFamily::Independence => 0.0,
    }
}

pub fn pack_parameters(
    structure: &ModelStructure,
    teams: &TeamIndex,
    params: &ModelParams,
    link: VarianceLink,
) -> Result<Vec<f64>> {
    if teams.len() != structure.n_teams {
        return Err(Error::DimensionMismatch { expected: structure.n_teams, got: teams.len() });
    }
    if params.halves.len() != structure.n_halves() {
        return Err(Error::DimensionMismatch { expected: structure.n_halves(), got: params.halves.len() });
    }
    let mut out = Vec::with_capacity(structure.n_params());
    for block in 0..structure.n_ability_blocks() {
        let a = &params.halves[block].ability;
        a.validate(teams)?;
        out.push(a.alpha);
        let others = teams.names().iter().enumerate().filter(|(i, _)| *i != teams.baseline_index());
        out.extend(others.clone().map(|(_, n)| a.beta[n]));
        out.extend(others.map(|(_, n)| a.gamma[n]));
    }
    for h in &params.halves {
        out.push(link.from_scale(h.scale));
    }
    if structure.family == Family::ZiSkellam {
        if structure.layout == Layout::Univariate {
            let inf = params.halves[0].inflation.as_ref().ok_or_else(missing_inflation)?;
            if inf.coeffs.len() != structure.n_inflation {
                return Err(Error::DimensionMismatch { expected: structure.n_inflation, got: inf.coeffs.len() });
            }
            out.extend(&inf.coeffs);
        } else {
            for h in &params.halves {
                let inf = h.inflation.as_ref().ok_or_else(missing_inflation)?;
                if inf.coeffs.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: inf.coeffs.len() });
                }
                out.push(inf.coeffs[0]);
            }
        }
    }
    if structure.has_copula() {
        if params.copula.family() != structure.copula {
            return Err(Error::InvalidParameter(format!(
                "copula {} does not match structure {}",
                params.copula.family(),
                structure.copula
            )));
        }
        out.push(copula_to_unconstrained(&params.copula));
    }
    debug_assert_eq!(out.len(), structure.n_params());
    Ok(out)
}

fn missing_inflation() -> Error {
    Error::InvalidParameter("zero-inflated structure needs inflation coefficients".into())
}

pub fn unpack_parameters(
    packed: &[f64],
    structure: &ModelStructure,
    teams: &TeamIndex,
    link: VarianceLink,
) -> Result<ModelParams> {
    if packed.len() != structure.n_params() {
        return Err(Error::DimensionMismatch { expected: structure.n_params(), got: packed.len() });
    }
    if teams.len() != structure.n_teams {
        return Err(Error::DimensionMismatch { expected: structure.n_teams, got: teams.len() });
    }
    let off = structure.offsets();
    let t = teams.len();
    let ability_at = |start: usize| {
        let mut beta = BTreeMap::new();
        let mut gamma = BTreeMap::new();
        for (i, name) in teams.names().iter().enumerate() {
            let (b, g) = match teams.slot(i) {
                None => (0.0, 0.0),
                Some(s) => (packed[start + 1 + s], packed[start + t + s]),
            };
            beta.insert(name.clone(), b);
            gamma.insert(name.clone(), g);
        }
        AbilitySpec { alpha: packed[start], beta, gamma }
    };
    let halves = (0..structure.n_halves())
        .map(|h| {
            let inflation = match (structure.family, structure.layout) {
                (Family::ZiSkellam, Layout::Univariate) => Some(InflationSpec {
                    coeffs: packed[off.inflation..off.inflation + structure.n_inflation].to_vec(),
                }),
                (Family::ZiSkellam, _) => Some(InflationSpec { coeffs: vec![packed[off.inflation + h]] }),
                _ => None,
            };
            HalfParams { ability: ability_at(off.block(h)), scale: link.to_scale(packed[off.scales + h]), inflation }
        })
        .collect();
    let copula = if structure.has_copula() {
        copula_from_unconstrained(structure.copula, packed[off.copula])
    } else {
        CopulaSpec::independence()
    };
    Ok(ModelParams { halves, copula })
}

/// Verifies the `(home, away)` design has full column rank for
/// `[alpha, beta(non-baseline), gamma(non-baseline)]`.
pub fn check_identifiable(pairs: &[(usize, usize)], teams: &TeamIndex) -> Result<()> {
    let t = teams.len();
    if t < 2 {
        return Err(Error::Unidentifiable("at least two teams are required".into()));
    }
    let cols = 2 * t - 1;
    let mut distinct: Vec<(usize, usize)> = pairs.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut design = DMatrix::<f64>::zeros(distinct.len(), cols);
    for (r, &(h, a)) in distinct.iter().enumerate() {
        design[(r, 0)] = 1.0;
        if let Some(s) = teams.slot(h) {
            design[(r, 1 + s)] = 1.0;
        }
        if let Some(s) = teams.slot(a) {
            design[(r, t + s)] = 1.0;
        }
    }
    let rank = design.rank(1e-9);
    if rank < cols {
        return Err(Error::Unidentifiable(format!(
            "design rank {rank} < {cols} parameters ({} distinct fixtures)",
            distinct.len()
        )));
    }
    Ok(())
}
