//! Univariate distributions on the integers.
//!
//! Every family exposes log-space evaluation as the primary interface; the
//! linear `pmf` is a thin `exp` wrapper. Cumulative probabilities for the
//! Skellam family are summed from a truncation point below which the omitted
//! mass is under [`TAIL_EPS`]; the discretized families use their closed-form
//! cdf.

mod bessel;
mod discretized;
mod skellam;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Poisson;

pub use bessel::log_bessel_i;
pub use discretized::{disc_laplace_log_pmf, disc_normal_log_pmf, DiscLaplaceParams, DiscNormalParams};
pub use skellam::{
    skellam2_to_rates, skellam_log_pmf, skellam_moments, zi_skellam_log_pmf, Moments, Skellam2Params, SkellamParams,
    ZiSkellamParams,
};

pub(crate) use discretized::{laplace_cdf, log_std_normal_interval, log_std_normal_pdf, std_normal_cdf};
pub(crate) use skellam::skellam_log_pmf_range;

use crate::error::{Error, Result};

/// Mass allowed in each omitted tail when truncating infinite sums.
pub const TAIL_EPS: f64 = 1e-14;

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistOnZ {
    Skellam(SkellamParams),
    Skellam2(Skellam2Params),
    ZiSkellam(ZiSkellamParams),
    DiscNormal(DiscNormalParams),
    DiscLaplace(DiscLaplaceParams),
}

/// Probabilities over a contiguous block of integers.
#[derive(Debug, Clone)]
pub struct PmfTable {
    pub lo: i64,
    pub pmf: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl PmfTable {
    pub fn hi(&self) -> i64 {
        self.lo + self.pmf.len() as i64 - 1
    }

    pub fn pmf_at(&self, z: i64) -> f64 {
        if z < self.lo || z > self.hi() {
            0.0
        } else {
            self.pmf[(z - self.lo) as usize]
        }
    }

    pub fn cdf_at(&self, z: i64) -> f64 {
        if z < self.lo {
            0.0
        } else if z >= self.hi() {
            *self.cdf.last().unwrap()
        } else {
            self.cdf[(z - self.lo) as usize]
        }
    }

    /// Smallest tabulated `z` with `cdf(z) >= u`, or `None` if `u` exceeds the
    /// tabulated mass.
    pub fn quantile(&self, u: f64) -> Option<i64> {
        let idx = self.cdf.partition_point(|&c| c < u);
        (idx < self.cdf.len()).then(|| self.lo + idx as i64)
    }
}

impl DistOnZ {
    pub fn log_pmf(&self, z: i64) -> f64 {
        match self {
            DistOnZ::Skellam(p) => skellam_log_pmf(z, p),
            DistOnZ::Skellam2(p) => skellam_log_pmf(z, &p.rates()),
            DistOnZ::ZiSkellam(p) => zi_skellam_log_pmf(z, p),
            DistOnZ::DiscNormal(p) => disc_normal_log_pmf(z, p),
            DistOnZ::DiscLaplace(p) => disc_laplace_log_pmf(z, p),
        }
    }

    pub fn pmf(&self, z: i64) -> f64 {
        self.log_pmf(z).exp()
    }

    /// Integer range outside of which each tail holds less than `TAIL_EPS`.
    pub fn support(&self) -> (i64, i64) {
        match self {
            DistOnZ::Skellam(p) => p.support(TAIL_EPS),
            DistOnZ::Skellam2(p) => p.rates().support(TAIL_EPS),
            DistOnZ::ZiSkellam(p) => {
                let (lo, hi) = p.base().rates().support(TAIL_EPS);
                (lo.min(0), hi.max(0))
            }
            DistOnZ::DiscNormal(p) => {
                let w = 8.5 * p.sigma();
                ((p.mu() - w).floor() as i64 - 1, (p.mu() + w).ceil() as i64 + 1)
            }
            DistOnZ::DiscLaplace(p) => {
                let w = p.scale() * (0.5 / TAIL_EPS).ln();
                ((p.mu() - w).floor() as i64 - 1, (p.mu() + w).ceil() as i64 + 1)
            }
        }
    }

    /// `P(Z <= z)`.
    pub fn cdf(&self, z: i64) -> f64 {
        match self {
            DistOnZ::Skellam(p) => skellam_cdf(z, p),
            DistOnZ::Skellam2(p) => skellam_cdf(z, &p.rates()),
            DistOnZ::ZiSkellam(p) => {
                let base = skellam_cdf(z, &p.base().rates());
                let atom = if z >= 0 { p.p() } else { 0.0 };
                ((1.0 - p.p()) * base + atom).min(1.0)
            }
            DistOnZ::DiscNormal(p) => discretized::disc_normal_cdf(z, p),
            DistOnZ::DiscLaplace(p) => discretized::disc_laplace_cdf(z, p),
        }
    }

    /// Tabulates pmf and cdf over [`DistOnZ::support`]. The cdf column agrees
    /// exactly with [`DistOnZ::cdf`].
    pub fn table(&self) -> PmfTable {
        let (lo, hi) = self.support();
        match self {
            DistOnZ::Skellam(p) => skellam_table(lo, hi, p),
            DistOnZ::Skellam2(p) => skellam_table(lo, hi, &p.rates()),
            DistOnZ::ZiSkellam(p) => {
                let base = skellam_table(lo, hi, &p.base().rates());
                let keep = 1.0 - p.p();
                let zs = lo..=hi;
                let pmf = zs.clone().zip(&base.pmf).map(|(z, b)| keep * b + if z == 0 { p.p() } else { 0.0 });
                let cdf = zs.zip(&base.cdf).map(|(z, c)| (keep * c + if z >= 0 { p.p() } else { 0.0 }).min(1.0));
                PmfTable { lo, pmf: pmf.collect(), cdf: cdf.collect() }
            }
            DistOnZ::DiscNormal(_) | DistOnZ::DiscLaplace(_) => PmfTable {
                lo,
                pmf: (lo..=hi).map(|z| self.pmf(z)).collect(),
                cdf: (lo..=hi).map(|z| self.cdf(z)).collect(),
            },
        }
    }

    /// Smallest integer `z` with `cdf(z) >= u`.
    pub fn quantile(&self, u: f64) -> Result<i64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> i64 {
        let guess = match self {
            DistOnZ::DiscNormal(p) => {
                let x = p.mu() + p.sigma() * discretized::std_normal_quantile(u);
                Some((x - 0.5).ceil())
            }
            DistOnZ::DiscLaplace(p) => {
                let b = p.scale();
                let x = if u < 0.5 { p.mu() + b * (2.0 * u).ln() } else { p.mu() - b * (2.0 * (1.0 - u)).ln() };
                Some((x - 0.5).ceil())
            }
            _ => None,
        };
        match guess {
            Some(g) if g.is_finite() => self.walk_to_quantile(g as i64, u),
            Some(_) => self.walk_to_quantile(0, u),
            None => {
                let table = self.table();
                match table.quantile(u) {
                    Some(z) => z,
                    None => self.walk_up_from(table.hi(), *table.cdf.last().unwrap(), u),
                }
            }
        }
    }

    fn walk_to_quantile(&self, mut z: i64, u: f64) -> i64 {
        while self.cdf(z) < u {
            z += 1;
        }
        while self.cdf(z - 1) >= u {
            z -= 1;
        }
        z
    }

    /// Continues the cumulative sum past the tabulated range for `u` closer to
    /// one than the truncation resolves. Stops when the pmf underflows.
    fn walk_up_from(&self, mut z: i64, mut acc: f64, u: f64) -> i64 {
        loop {
            z += 1;
            let p = self.pmf(z);
            let next = acc + p;
            if next >= u || next == acc {
                return z;
            }
            acc = next;
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            DistOnZ::Skellam(p) => skellam_moments(p),
            DistOnZ::Skellam2(p) => skellam_moments(&p.rates()),
            _ => {
                let t = self.table();
                let zs = (t.lo..=t.hi()).map(|z| z as f64);
                let mean: f64 = zs.clone().zip(&t.pmf).map(|(z, p)| z * p).sum();
                let (m2, m3) = zs.zip(&t.pmf).fold((0.0, 0.0), |(a, b), (z, p)| {
                    let d = z - mean;
                    (a + d * d * p, b + d * d * d * p)
                });
                Moments { mean, variance: m2, skewness: m3 / m2.powf(1.5) }
            }
        }
    }

    /// A reusable sampler with per-distribution setup done once.
    pub fn sampler(&self) -> DistSampler {
        let poissons = |p: &SkellamParams| {
            (Poisson::new(p.theta1()).expect("positive rate"), Poisson::new(p.theta2()).expect("positive rate"))
        };
        match self {
            DistOnZ::Skellam(p) => DistSampler::Skellam(poissons(p)),
            DistOnZ::Skellam2(p) => DistSampler::Skellam(poissons(&p.rates())),
            DistOnZ::ZiSkellam(p) => DistSampler::ZiSkellam { p: p.p(), pair: poissons(&p.base().rates()) },
            _ => DistSampler::Inverse(*self),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.sampler().sample(rng)
    }
}

fn skellam_table(lo: i64, hi: i64, p: &SkellamParams) -> PmfTable {
    let pmf: Vec<f64> = skellam_log_pmf_range(lo, hi, p).into_iter().map(f64::exp).collect();
    let mut acc = 0.0;
    let cdf = pmf
        .iter()
        .map(|q| {
            acc += q;
            acc.min(1.0)
        })
        .collect();
    PmfTable { lo, pmf, cdf }
}

/// `P(Z <= z)` summed from the lower truncation point.
fn skellam_cdf(z: i64, p: &SkellamParams) -> f64 {
    let (lo, hi) = p.support(TAIL_EPS);
    if z < lo {
        return 0.0;
    }
    // same recurrence and accumulation order as `DistOnZ::table`
    let top = (z.min(hi) - lo) as usize;
    let mut acc = 0.0;
    for lp in skellam_log_pmf_range(lo, hi, p).into_iter().take(top + 1) {
        acc += lp.exp();
    }
    acc.min(1.0)
}

#[derive(Debug, Clone)]
pub enum DistSampler {
    Skellam((Poisson<f64>, Poisson<f64>)),
    ZiSkellam { p: f64, pair: (Poisson<f64>, Poisson<f64>) },
    Inverse(DistOnZ),
}

impl DistSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match self {
            DistSampler::Skellam((x, y)) => x.sample(rng) as i64 - y.sample(rng) as i64,
            DistSampler::ZiSkellam { p, pair: (x, y) } => {
                if rng.random::<f64>() < *p {
                    0
                } else {
                    x.sample(rng) as i64 - y.sample(rng) as i64
                }
            }
            DistSampler::Inverse(d) => {
                let u: f64 = Open01.sample(rng);
                d.quantile_unchecked(u)
            }
        }
    }
}

/// Free-function form of [`DistOnZ::cdf`].
pub fn dist_cdf(z: i64, d: &DistOnZ) -> f64 {
    d.cdf(z)
}

pub fn dist_quantile(u: f64, d: &DistOnZ) -> Result<i64> {
    d.quantile(u)
}

pub fn dist_sample<R: Rng + ?Sized>(d: &DistOnZ, rng: &mut R) -> i64 {
    d.sample(rng)
}
