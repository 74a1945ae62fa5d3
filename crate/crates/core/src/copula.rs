//! Frank and Gumbel copulas and the discrete bivariate law they induce on
//! pairs of integer marginals.
//!
//! The joint pmf comes from differencing the copula over the unit rectangle
//! spanned by the marginal cdfs:
//!
//! ```text
//! P(Y1 = a, Y2 = b) = C(F(a), G(b)) - C(F(a-1), G(b)) - C(F(a), G(b-1)) + C(F(a-1), G(b-1))
//! ```

use rand::distr::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zdist::{DistOnZ, PmfTable};

/// Rectangle values below this are treated as a cdf bug, not rounding.
pub const RECTANGLE_TOLERANCE: f64 = -1e-9;

/// Below this |θ| the Frank copula is evaluated from its Taylor expansion.
const FRANK_SERIES_CUTOFF: f64 = 1e-4;

/// Below this θ the Frank copula is evaluated through its reflection
/// `C(u, v; θ) = u - C(u, 1 - v; -θ)` so the closed form only sees `θ > 0`.
const FRANK_REFLECT_BELOW: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Frank,
    Gumbel,
}

impl std::fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Frank => "frank",
            CopulaFamily::Gumbel => "gumbel",
        })
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" | "none" => Ok(CopulaFamily::Independence),
            "frank" => Ok(CopulaFamily::Frank),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            other => Err(Error::InvalidParameter(format!("unknown copula family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    family: CopulaFamily,
    theta: f64,
}

/// Copula value and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CopulaPartials {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
    pub dtheta: f64,
}

impl CopulaSpec {
    /// Validates the dependence parameter: Frank needs `θ != 0`, Gumbel
    /// `θ >= 1`. The Independence tag ignores `theta`.
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        match family {
            CopulaFamily::Independence => Ok(Self::independence()),
            CopulaFamily::Frank if theta != 0.0 && theta.is_finite() => Ok(Self { family, theta }),
            CopulaFamily::Gumbel if theta >= 1.0 && theta.is_finite() => Ok(Self { family, theta }),
            _ => Err(Error::InvalidParameter(format!("{family} copula cannot take theta = {theta}"))),
        }
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Frank, theta)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Gumbel, theta)
    }

    pub fn independence() -> Self {
        Self { family: CopulaFamily::Independence, theta: 0.0 }
    }

    /// Frank at exactly zero is accepted here and evaluates as independence;
    /// optimizers pass through it.
    pub(crate) fn unchecked(family: CopulaFamily, theta: f64) -> Self {
        Self { family, theta }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `C(u, v)` for `u, v` already known to lie in `[0, 1]`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        match self.family {
            CopulaFamily::Independence => u * v,
            CopulaFamily::Frank => frank(u, v, self.theta).value,
            CopulaFamily::Gumbel => gumbel(u, v, self.theta).value,
        }
    }

    pub(crate) fn partials(&self, u: f64, v: f64) -> CopulaPartials {
        if u <= 0.0 || v <= 0.0 {
            return CopulaPartials { value: 0.0, du: 0.0, dv: 0.0, dtheta: 0.0 };
        }
        if u >= 1.0 {
            return CopulaPartials { value: v, du: 0.0, dv: 1.0, dtheta: 0.0 };
        }
        if v >= 1.0 {
            return CopulaPartials { value: u, du: 1.0, dv: 0.0, dtheta: 0.0 };
        }
        match self.family {
            CopulaFamily::Independence => CopulaPartials { value: u * v, du: v, dv: u, dtheta: 0.0 },
            CopulaFamily::Frank => frank(u, v, self.theta),
            CopulaFamily::Gumbel => gumbel(u, v, self.theta),
        }
    }

    /// Conditional cdf `P(V <= v | U = u) = dC/du`.
    pub fn conditional_cdf(&self, v: f64, u: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        match self.family {
            CopulaFamily::Independence => v,
            _ => self.partials(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON), v).du,
        }
    }

    /// Solves `P(V <= v | U = u) = w` for `v`.
    pub fn conditional_inverse(&self, w: f64, u: f64) -> f64 {
        match self.family {
            CopulaFamily::Independence => w,
            CopulaFamily::Frank if self.theta == 0.0 => w,
            CopulaFamily::Frank => {
                let t = self.theta;
                let a = w * (-t).exp_m1() / ((-t * u).exp() * (1.0 - w) + w);
                (-a.ln_1p() / t).clamp(0.0, 1.0)
            }
            CopulaFamily::Gumbel => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                while hi - lo > 1e-10 {
                    let mid = 0.5 * (lo + hi);
                    if self.conditional_cdf(mid, u) < w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// One draw `(U, V)` from the copula by conditional inversion.
    pub fn sample_uniforms<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = Open01.sample(rng);
        let w: f64 = Open01.sample(rng);
        (u, self.conditional_inverse(w, u))
    }
}

pub fn copula_cdf(u: f64, v: f64, c: &CopulaSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("copula arguments must lie in [0, 1], got ({u}, {v})")));
    }
    Ok(c.cdf(u, v))
}

/// Frank copula with derivatives, for `u, v` strictly inside `(0, 1)`.
fn frank(u: f64, v: f64, theta: f64) -> CopulaPartials {
    if theta < FRANK_REFLECT_BELOW {
        let r = frank(u, 1.0 - v, -theta);
        return CopulaPartials { value: u - r.value, du: 1.0 - r.du, dv: r.dv, dtheta: r.dtheta };
    }
    if theta.abs() < FRANK_SERIES_CUTOFF {
        return frank_series(u, v, theta);
    }
    let eu = (-theta * u).exp();
    let ev = (-theta * v).exp();
    let a = (-theta * u).exp_m1();
    let b = (-theta * v).exp_m1();
    let c = (-theta).exp_m1();
    // D = c + ab; for θ > 1 the expanded form avoids 1 + ab/c cancelling
    let (d, log_term) = if theta.abs() <= 1.0 {
        (c + a * b, (a * b / c).ln_1p())
    } else {
        let d = (-theta * (u + v)).exp() - eu - ev + (-theta).exp();
        (d, (d / c).ln())
    };
    let value = -log_term / theta;
    let du = eu * b / d;
    let dv = ev * a / d;
    let da = -u * eu;
    let db = -v * ev;
    let dc = -(-theta).exp();
    let dlog = (da * b + a * db) / d - a * b * dc / (c * d);
    let dtheta = log_term / (theta * theta) - dlog / theta;
    CopulaPartials { value, du, dv, dtheta }
}

/// Second-order expansion of the Frank copula about θ = 0.
fn frank_series(u: f64, v: f64, theta: f64) -> CopulaPartials {
    let (ub, vb) = (1.0 - u, 1.0 - v);
    let g = u * v * ub * vb;
    let s = (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
    let t2 = theta * theta / 12.0;
    let value = u * v + 0.5 * theta * g + t2 * g * s;
    // d/du of u(1-u)(1-2u) is 1 - 6u + 6u²
    let du = v + 0.5 * theta * v * vb * (1.0 - 2.0 * u) + t2 * v * vb * (1.0 - 2.0 * v) * (1.0 - 6.0 * u + 6.0 * u * u);
    let dv = u + 0.5 * theta * u * ub * (1.0 - 2.0 * v) + t2 * u * ub * (1.0 - 2.0 * u) * (1.0 - 6.0 * v + 6.0 * v * v);
    let dtheta = 0.5 * g + theta / 6.0 * g * s;
    CopulaPartials { value, du, dv, dtheta }
}

/// Gumbel copula with derivatives, for `u, v` strictly inside `(0, 1)`.
fn gumbel(u: f64, v: f64, theta: f64) -> CopulaPartials {
    let x = -u.ln();
    let y = -v.ln();
    let (lx, ly) = (x.ln(), y.ln());
    let (ax, ay) = (theta * lx, theta * ly);
    let log_a = if ax > ay { ax + (ay - ax).exp().ln_1p() } else { ay + (ax - ay).exp().ln_1p() };
    let log_w = log_a / theta;
    let w = log_w.exp();
    let value = (-w).exp();
    let du = value * ((theta - 1.0) * (lx - log_w)).exp() / u;
    let dv = value * ((theta - 1.0) * (ly - log_w)).exp() / v;
    // x^θ/A and y^θ/A
    let (sx, sy) = ((ax - log_a).exp(), (ay - log_a).exp());
    let dlog_w = -log_a / (theta * theta) + (sx * lx + sy * ly) / theta;
    let dtheta = -value * w * dlog_w;
    CopulaPartials { value, du, dv, dtheta }
}

/// Two integer marginals coupled by a copula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateZ {
    pub marginal1: DistOnZ,
    pub marginal2: DistOnZ,
    pub copula: CopulaSpec,
}

/// Conditional law of the second coordinate given the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub given_x: i64,
    pub lo: i64,
    pub pmf: Vec<f64>,
    pub win: f64,
    pub draw: f64,
    pub loss: f64,
}

impl ConditionalTable {
    pub fn hi(&self) -> i64 {
        self.lo + self.pmf.len() as i64 - 1
    }

    pub fn pmf_at(&self, y: i64) -> f64 {
        if y < self.lo || y > self.hi() {
            0.0
        } else {
            self.pmf[(y - self.lo) as usize]
        }
    }
}

/// Copula rectangle from the four cdf values, with the negativity check.
pub(crate) fn rectangle(c: &CopulaSpec, f1: f64, f0: f64, g1: f64, g0: f64) -> Result<f64> {
    let raw = c.cdf(f1, g1) - c.cdf(f0, g1) - c.cdf(f1, g0) + c.cdf(f0, g0);
    if raw < RECTANGLE_TOLERANCE {
        return Err(Error::Numerical(format!("copula rectangle is {raw:e} for F in [{f0}, {f1}], G in [{g0}, {g1}]")));
    }
    Ok(raw.max(0.0))
}

impl BivariateZ {
    pub fn new(marginal1: DistOnZ, marginal2: DistOnZ, copula: CopulaSpec) -> Self {
        Self { marginal1, marginal2, copula }
    }

    pub fn joint_pmf(&self, y1: i64, y2: i64) -> Result<f64> {
        let m1 = &self.marginal1;
        let m2 = &self.marginal2;
        let raw = rectangle(&self.copula, m1.cdf(y1), m1.cdf(y1 - 1), m2.cdf(y2), m2.cdf(y2 - 1))?;
        Ok(raw.min(m1.pmf(y1)).min(m2.pmf(y2)))
    }

    fn tables(&self) -> (PmfTable, PmfTable) {
        (self.marginal1.table(), self.marginal2.table())
    }

    fn joint_from_tables(&self, t1: &PmfTable, t2: &PmfTable, y1: i64, y2: i64) -> Result<f64> {
        let raw = rectangle(&self.copula, t1.cdf_at(y1), t1.cdf_at(y1 - 1), t2.cdf_at(y2), t2.cdf_at(y2 - 1))?;
        Ok(raw.min(t1.pmf_at(y1)).min(t2.pmf_at(y2)))
    }

    pub fn conditional_pmf(&self, y: i64, given_x: i64) -> Result<f64> {
        let px = self.marginal_x_mass(given_x)?;
        Ok(self.joint_pmf(given_x, y)? / px)
    }

    fn marginal_x_mass(&self, x: i64) -> Result<f64> {
        let px = self.marginal1.pmf(x);
        if px < 1e-12 {
            return Err(Error::Numerical(format!("P(X = {x}) = {px:e} is too small to condition on")));
        }
        Ok(px)
    }

    /// Conditional pmf of the second coordinate over `[μ - 12σ, μ + 12σ]`
    /// (widened to the marginal's truncation support), with the win / draw /
    /// loss split for a final difference `x + y`.
    pub fn conditional_distribution(&self, given_x: i64) -> Result<ConditionalTable> {
        let px = self.marginal_x_mass(given_x)?;
        let (t1, t2) = self.tables();
        let m = self.marginal2.moments();
        let sd = m.variance.sqrt();
        let lo = ((m.mean - 12.0 * sd).floor() as i64).min(t2.lo);
        let hi = ((m.mean + 12.0 * sd).ceil() as i64).max(t2.hi());

        let f1 = t1.cdf_at(given_x);
        let f0 = t1.cdf_at(given_x - 1);
        let captured = rectangle(&self.copula, f1, f0, t2.cdf_at(hi), t2.cdf_at(lo - 1))?;
        let omitted = 1.0 - captured / (f1 - f0);
        if omitted > 1e-10 {
            return Err(Error::Numerical(format!(
                "conditional mass outside [{lo}, {hi}] is {omitted:e} given x = {given_x}"
            )));
        }

        let pmf = (lo..=hi)
            .map(|y| self.joint_from_tables(&t1, &t2, given_x, y).map(|j| j / px))
            .collect::<Result<Vec<_>>>()?;
        let threshold = -given_x;
        let (mut win, mut draw, mut loss) = (0.0, 0.0, 0.0);
        for (y, p) in (lo..=hi).zip(&pmf) {
            match y.cmp(&threshold) {
                std::cmp::Ordering::Greater => win += p,
                std::cmp::Ordering::Equal => draw += p,
                std::cmp::Ordering::Less => loss += p,
            }
        }
        Ok(ConditionalTable { given_x, lo, pmf, win, draw, loss })
    }

    /// `P(Y > -x | X = x)`: the side leading by `x` at the break finishes
    /// ahead overall.
    pub fn win_probability(&self, given_x: i64) -> Result<f64> {
        Ok(self.conditional_distribution(given_x)?.win)
    }

    /// Pmf of `Y1 + Y2` over the sum of the marginal supports.
    pub fn sum_table(&self) -> Result<PmfTable> {
        let (t1, t2) = self.tables();
        let lo = t1.lo + t2.lo;
        let hi = t1.hi() + t2.hi();
        let mut pmf = vec![0.0; (hi - lo + 1) as usize];
        for y1 in t1.lo..=t1.hi() {
            for y2 in t2.lo..=t2.hi() {
                pmf[(y1 + y2 - lo) as usize] += self.joint_from_tables(&t1, &t2, y1, y2)?;
            }
        }
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        Ok(PmfTable { lo, pmf, cdf })
    }

    pub fn sampler(&self) -> BivariateSampler {
        let (t1, t2) = self.tables();
        BivariateSampler { model: *self, t1, t2 }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        self.sampler().sample(rng)
    }
}

/// Draws from a [`BivariateZ`] with marginal tables built once.
#[derive(Debug, Clone)]
pub struct BivariateSampler {
    model: BivariateZ,
    t1: PmfTable,
    t2: PmfTable,
}

impl BivariateSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        let (u, v) = self.model.copula.sample_uniforms(rng);
        let y1 = self.t1.quantile(u).unwrap_or_else(|| self.model.marginal1.quantile(u).unwrap_or(self.t1.hi()));
        let y2 = self.t2.quantile(v).unwrap_or_else(|| self.model.marginal2.quantile(v).unwrap_or(self.t2.hi()));
        (y1, y2)
    }
}

pub fn joint_pmf(y1: i64, y2: i64, b: &BivariateZ) -> Result<f64> {
    b.joint_pmf(y1, y2)
}

pub fn conditional_pmf(y: i64, given_x: i64, b: &BivariateZ) -> Result<f64> {
    b.conditional_pmf(y, given_x)
}

pub fn win_probability(given_x: i64, b: &BivariateZ) -> Result<f64> {
    b.win_probability(given_x)
}

pub fn joint_sample<R: Rng + ?Sized>(b: &BivariateZ, rng: &mut R) -> (i64, i64) {
    b.sample(rng)
}
