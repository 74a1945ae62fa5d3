//! Bookmaker odds to outcome probabilities.

use crate::error::{Error, Result};
use crate::regress::logit;

/// Equal-vig inversion: `p_i = (1/o_i) / Σ_j (1/o_j)`.
pub fn odds_to_probs(odds_1: f64, odds_x: f64, odds_2: f64) -> Result<(f64, f64, f64)> {
    if !(odds_1 > 1.0 && odds_x > 1.0 && odds_2 > 1.0) || ![odds_1, odds_x, odds_2].iter().all(|o| o.is_finite()) {
        return Err(Error::Domain(format!(
            "decimal odds must be finite and exceed 1, got ({odds_1}, {odds_x}, {odds_2})"
        )));
    }
    let (a, b, c) = (1.0 / odds_1, 1.0 / odds_x, 1.0 / odds_2);
    let s = a + b + c;
    Ok((a / s, b / s, c / s))
}

/// Strength gap implied by the odds, `|logit(p_home) - logit(p_away)|`;
/// used as a covariate on the inflation probability.
pub fn odds_strength_gap(odds_1: f64, odds_x: f64, odds_2: f64) -> Result<f64> {
    let (p1, _, p2) = odds_to_probs(odds_1, odds_x, odds_2)?;
    Ok((logit(p1) - logit(p2)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let (a, b, c) = odds_to_probs(2.0, 2.0, 2.0).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 1.0 / 3.0).abs() < 1e-15 && (c - 1.0 / 3.0).abs() < 1e-15);
        let (a, b, c) = odds_to_probs(1.5, 8.0, 8.0).unwrap();
        assert!((a - 0.727_272_727_272_727_3).abs() < 1e-12);
        assert!((b - 0.136_363_636_363_636_4).abs() < 1e-12);
        assert!((c - b).abs() < 1e-15);
        assert!(odds_to_probs(1.0, 2.0, 3.0).is_err());
        assert!(odds_to_probs(f64::INFINITY, 2.0, 3.0).is_err());
        // logit(8/11) - logit(3/22) = ln(8/3) + ln(19/3)
        let want = (8.0_f64 / 3.0).ln() + (19.0_f64 / 3.0).ln();
        assert!((odds_strength_gap(1.5, 8.0, 8.0).unwrap() - want).abs() < 1e-12);
        assert_eq!(odds_strength_gap(3.0, 3.5, 3.0).unwrap(), 0.0);
    }
}
