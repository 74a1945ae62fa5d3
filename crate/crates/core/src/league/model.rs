//! Full-time score-difference law of a fixture under a fitted model.

use rand::Rng;

use crate::copula::{BivariateSampler, BivariateZ};
use crate::error::Result;
use crate::fit::FitResult;
use crate::regress::Layout;
use crate::zdist::{DistOnZ, DistSampler, PmfTable};

/// Univariate models give the full-time law directly; half-time models
/// give it as the law of the sum of both halves.
#[derive(Debug, Clone)]
pub enum FixtureLaw {
    Univariate(DistOnZ),
    Halves { joint: BivariateZ, full_time: PmfTable },
}

impl FixtureLaw {
    pub fn new(model: &FitResult, home: &str, away: &str) -> Result<Self> {
        if model.structure.layout == Layout::Univariate {
            return Ok(Self::Univariate(model.distribution(0, home, away, &[])?));
        }
        let joint = model.bivariate(home, away)?;
        let full_time = joint.sum_table()?;
        Ok(Self::Halves { joint, full_time })
    }

    /// `(P(home win), P(draw), P(away win))`.
    pub fn outcome_probs(&self) -> (f64, f64, f64) {
        let (below, at) = match self {
            Self::Univariate(d) => (d.cdf(-1), d.pmf(0)),
            Self::Halves { full_time, .. } => (full_time.cdf_at(-1), full_time.pmf_at(0)),
        };
        let draw = at;
        let away = below;
        ((1.0 - away - draw).max(0.0), draw, away)
    }

    pub fn cdf(&self, z: i64) -> f64 {
        match self {
            Self::Univariate(d) => d.cdf(z),
            Self::Halves { full_time, .. } => full_time.cdf_at(z),
        }
    }

    pub fn sampler(&self) -> FixtureSampler {
        match self {
            Self::Univariate(d) => FixtureSampler::Univariate(d.sampler()),
            Self::Halves { joint, .. } => FixtureSampler::Halves(joint.sampler()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum FixtureSampler {
    Univariate(DistSampler),
    Halves(BivariateSampler),
}

impl FixtureSampler {
    /// A full-time score difference.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match self {
            Self::Univariate(s) => s.sample(rng),
            Self::Halves(s) => {
                let (a, b) = s.sample(rng);
                a + b
            }
        }
    }
}

pub fn fixture_laws(model: &FitResult, fixtures: &[(String, String)]) -> Result<Vec<FixtureLaw>> {
    fixtures.iter().map(|(h, a)| FixtureLaw::new(model, h, a)).collect()
}
