//! Continuous laws discretized onto the integers by integrating over
//! `(z - 0.5, z + 0.5]`.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// Discretized normal; `sigma2` is the variance of the underlying normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscNormalParams {
    mu: f64,
    sigma2: f64,
}

impl DiscNormalParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discrete normal needs finite mu and sigma2 > 0, got ({mu}, {sigma2})"
            )));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Discretized Laplace. The second parameter is the *scale* `b` of the
/// density `exp(-|x - mu| / b) / 2b`, not a variance (variance is `2b²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscLaplaceParams {
    mu: f64,
    scale: f64,
}

impl DiscLaplaceParams {
    pub fn new(mu: f64, scale: f64) -> Result<Self> {
        if !mu.is_finite() || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discrete Laplace needs finite mu and scale > 0, got ({mu}, {scale})"
            )));
        }
        Ok(Self { mu, scale })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln φ(t)` for the standard normal density.
pub(crate) fn log_std_normal_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// `ln Q(t)` where `Q = 1 - Φ` is the standard normal upper tail.
pub(crate) fn log_std_normal_sf(t: f64) -> f64 {
    if t < 37.0 {
        (0.5 * erfc(t / SQRT_2)).ln()
    } else {
        // Mills-ratio expansion; relative error below 1e-12 from t = 37
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2) + 105.0 / (t2 * t2 * t2 * t2);
        -0.5 * t2 - t.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

pub(crate) fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / SQRT_2)
}

pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

/// `ln(Φ(b) - Φ(a))` for `a < b`, without cancellation in either tail.
pub(crate) fn log_std_normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        let la = log_std_normal_sf(a);
        let lb = log_std_normal_sf(b);
        la + (-(lb - la).exp_m1()).ln()
    } else if b <= 0.0 {
        let lb = log_std_normal_sf(-b);
        let la = log_std_normal_sf(-a);
        lb + (-(la - lb).exp_m1()).ln()
    } else {
        let upper = 0.5 * erfc(b / SQRT_2);
        let lower = 0.5 * erfc(-a / SQRT_2);
        (1.0 - upper - lower).ln()
    }
}

pub fn disc_normal_log_pmf(z: i64, p: &DiscNormalParams) -> f64 {
    let s = p.sigma();
    let zf = z as f64;
    log_std_normal_interval((zf - 0.5 - p.mu) / s, (zf + 0.5 - p.mu) / s)
}

pub(crate) fn disc_normal_cdf(z: i64, p: &DiscNormalParams) -> f64 {
    std_normal_cdf((z as f64 + 0.5 - p.mu) / p.sigma())
}

/// Continuous Laplace cdf at `x`.
pub(crate) fn laplace_cdf(x: f64, mu: f64, b: f64) -> f64 {
    let d = (x - mu) / b;
    if d < 0.0 {
        0.5 * d.exp()
    } else {
        1.0 - 0.5 * (-d).exp()
    }
}

pub fn disc_laplace_log_pmf(z: i64, p: &DiscLaplaceParams) -> f64 {
    let b = p.scale;
    let lo = z as f64 - 0.5 - p.mu;
    let hi = z as f64 + 0.5 - p.mu;
    // ln(1 - e^{-1/b}) is shared by both one-sided branches
    let width = (-(-1.0 / b).exp_m1()).ln();
    if lo >= 0.0 {
        -LN_2 - lo / b + width
    } else if hi <= 0.0 {
        -LN_2 + hi / b + width
    } else {
        (1.0 - 0.5 * (-hi / b).exp() - 0.5 * (lo / b).exp()).ln()
    }
}

pub(crate) fn disc_laplace_cdf(z: i64, p: &DiscLaplaceParams) -> f64 {
    laplace_cdf(z as f64 + 0.5, p.mu, p.scale)
}
