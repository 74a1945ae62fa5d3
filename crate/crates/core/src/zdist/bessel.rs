//! Log-space modified Bessel function of the first kind, integer order.

use crate::error::{Error, Result};

/// Hard cap on series length; reached only for arguments far outside the
/// score-difference domain (x in the millions).
const MAX_TERMS: usize = 10_000_000;

const RESCALE: f64 = 1e280;

/// `ln(r!)` for integer `r`, by direct summation.
pub(crate) fn ln_factorial(r: u64) -> f64 {
    (2..=r).map(|k| (k as f64).ln()).sum()
}

/// `log I_r(x)` from the power series
/// `I_r(x) = (x/2)^r Σ_m (x²/4)^m / (m! (r+m)!)`.
///
/// Terms are generated by their ratio and summed in linear space with a
/// running rescale, so the result is accurate well past the point where
/// `I_r(x)` itself overflows. Summation stops once the series has passed its
/// peak and the current term falls below `1e-18` of the largest term.
pub fn log_bessel_i(r: u64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_bessel_i requires x > 0, got {x}")));
    }
    Ok(log_bessel_i_unchecked(r, x))
}

pub(crate) fn log_bessel_i_unchecked(r: u64, x: f64) -> f64 {
    log_bessel_i_log_half(r, (0.5 * x).ln())
}

/// Series evaluation parametrized by `ln(x/2)`, so that arguments whose
/// square underflows still produce the correct leading-order term.
pub(crate) fn log_bessel_i_log_half(r: u64, log_half: f64) -> f64 {
    let half = log_half.exp();
    let q = half * half;
    let rf = r as f64;

    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut max_term = 1.0_f64;
    let mut log_scale = 0.0_f64;
    if q > 0.0 {
        for m in 1..MAX_TERMS {
            let mf = m as f64;
            term *= q / (mf * (rf + mf));
            sum += term;
            if term > max_term {
                max_term = term;
            } else if term < 1e-18 * max_term {
                break;
            }
            if sum > RESCALE {
                sum /= RESCALE;
                term /= RESCALE;
                max_term /= RESCALE;
                log_scale += RESCALE.ln();
            }
        }
    }
    rf * log_half - ln_factorial(r) + sum.ln() + log_scale
}

/// `log I_n(x)` for every `n` in `0..=n_max`, with `x = 2 exp(log_half)`.
///
/// The two highest orders come from the series; the rest follow from the
/// downward recurrence `I_{n-1} = I_{n+1} + (2n/x) I_n`, which only adds
/// positive quantities and is therefore stable.
pub(crate) fn log_bessel_i_run(n_max: u64, log_half: f64) -> Vec<f64> {
    let top = n_max as usize;
    let mut out = vec![0.0; top + 1];
    let upper = log_bessel_i_log_half(n_max + 1, log_half);
    out[top] = log_bessel_i_log_half(n_max, log_half);
    let half = log_half.exp();
    // inv = I_{n+1} / I_n
    let mut inv = (upper - out[top]).exp();
    for n in (1..=top).rev() {
        // I_{n-1}/I_n = I_{n+1}/I_n + n/half
        let nf = n as f64;
        let log_down = nf.ln() - log_half + (inv * half / nf).ln_1p();
        out[n - 1] = out[n] + log_down;
        inv = (-log_down).exp();
    }
    out
}
