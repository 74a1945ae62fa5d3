//! Skellam (difference of Poissons) in rate and mean/variance form, plus the
//! zero-inflated mixture.

use super::bessel::{log_bessel_i_log_half, log_bessel_i_run};
use super::log_add_exp;
use crate::error::{Error, Result};

/// Rates of the two Poisson components of `Z = X - Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams {
    theta1: f64,
    theta2: f64,
}

impl SkellamParams {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 > 0.0 && theta1.is_finite()) || !(theta2 > 0.0 && theta2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Skellam rates must be positive and finite, got ({theta1}, {theta2})"
            )));
        }
        Ok(Self { theta1, theta2 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn moments(&self) -> Moments {
        skellam_moments(self)
    }

    /// `ln(x/2)` for the Bessel argument `x = 2 sqrt(θ1 θ2)`.
    fn log_half_arg(&self) -> f64 {
        0.5 * (self.theta1.ln() + self.theta2.ln())
    }

    /// Index range outside of which each tail carries less than `eps` mass.
    pub(crate) fn support(&self, eps: f64) -> (i64, i64) {
        let k1 = poisson_upper_cut(self.theta1, eps);
        let k2 = poisson_upper_cut(self.theta2, eps);
        (-(k2 - 1), k1 - 1)
    }
}

/// Mean and variance form, `μ = θ1 - θ2`, `σ² = θ1 + θ2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Skellam2Params {
    mu: f64,
    sigma2: f64,
}

impl Skellam2Params {
    /// Requires `sigma2 > |mu|` so both implied rates are positive.
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        skellam2_to_rates(mu, sigma2)?;
        Ok(Self { mu, sigma2 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rates(&self) -> SkellamParams {
        SkellamParams { theta1: 0.5 * (self.sigma2 + self.mu), theta2: 0.5 * (self.sigma2 - self.mu) }
    }
}

impl From<SkellamParams> for Skellam2Params {
    fn from(p: SkellamParams) -> Self {
        Self { mu: p.theta1 - p.theta2, sigma2: p.theta1 + p.theta2 }
    }
}

/// Zero-inflated Skellam: extra mass `p` at zero on top of the base law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZiSkellamParams {
    base: Skellam2Params,
    p: f64,
}

impl ZiSkellamParams {
    pub fn new(base: Skellam2Params, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("inflation must lie in [0, 1), got {p}")));
        }
        Ok(Self { base, p })
    }

    pub fn base(&self) -> Skellam2Params {
        self.base
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

pub fn skellam2_to_rates(mu: f64, sigma2: f64) -> Result<SkellamParams> {
    if !mu.is_finite() || !sigma2.is_finite() || sigma2 <= mu.abs() {
        return Err(Error::InvalidParameter(format!("Skellam2 requires sigma2 > |mu|, got mu={mu}, sigma2={sigma2}")));
    }
    SkellamParams::new(0.5 * (sigma2 + mu), 0.5 * (sigma2 - mu))
}

pub fn skellam_moments(p: &SkellamParams) -> Moments {
    let mean = p.theta1 - p.theta2;
    let variance = p.theta1 + p.theta2;
    Moments { mean, variance, skewness: mean / variance.powf(1.5) }
}

/// `log P(Z = z)` for `Z ~ Skellam(θ1, θ2)`:
/// `-(θ1+θ2) + (z/2) ln(θ1/θ2) + ln I_|z|(2 sqrt(θ1 θ2))`.
pub fn skellam_log_pmf(z: i64, p: &SkellamParams) -> f64 {
    let n = z.unsigned_abs();
    let tilt = if z == 0 { 0.0 } else { 0.5 * z as f64 * (p.theta1.ln() - p.theta2.ln()) };
    -(p.theta1 + p.theta2) + tilt + log_bessel_i_log_half(n, p.log_half_arg())
}

/// Log-pmf over the contiguous range `lo..=hi`, sharing one Bessel recurrence.
pub(crate) fn skellam_log_pmf_range(lo: i64, hi: i64, p: &SkellamParams) -> Vec<f64> {
    debug_assert!(lo <= hi);
    let n_max = lo.unsigned_abs().max(hi.unsigned_abs());
    let log_i = log_bessel_i_run(n_max, p.log_half_arg());
    let log_ratio = p.theta1.ln() - p.theta2.ln();
    let base = -(p.theta1 + p.theta2);
    (lo..=hi)
        .map(|z| {
            let tilt = if z == 0 { 0.0 } else { 0.5 * z as f64 * log_ratio };
            base + tilt + log_i[z.unsigned_abs() as usize]
        })
        .collect()
}

pub fn zi_skellam_log_pmf(z: i64, p: &ZiSkellamParams) -> f64 {
    let base = skellam_log_pmf(z, &p.base.rates());
    let log_keep = (-p.p).ln_1p();
    if z == 0 {
        log_add_exp(p.p.ln(), log_keep + base)
    } else {
        log_keep + base
    }
}

/// Smallest `k > λ` with the Chernoff bound `e^{-λ} (eλ/k)^k` on
/// `P(Poisson(λ) >= k)` below `eps`.
pub(crate) fn poisson_upper_cut(lambda: f64, eps: f64) -> i64 {
    let target = eps.ln();
    let mut k = lambda.floor() as i64 + 1;
    loop {
        let kf = k as f64;
        let bound = -lambda + kf * (1.0 + lambda.ln() - kf.ln());
        if bound < target {
            return k;
        }
        // step proportional to the spread keeps the search short for large λ
        k += 1 + (lambda.sqrt() / 4.0) as i64;
    }
}
