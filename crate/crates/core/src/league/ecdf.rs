//! Parametric-bootstrap percentile band for the ECDF of score differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{fixture_laws, FixtureSampler};
use super::simulate::percentile;
use crate::error::{Error, Result};
use crate::fit::{FitResult, MatchDiff};

pub const MIN_REPLICATES: usize = 100;

/// Pointwise 95% band on `z_lo..=z_hi`; the observed ECDF is on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfBand {
    pub z_lo: i64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub observed: Vec<f64>,
    pub n_reps: usize,
    pub seed: u64,
}

impl EcdfBand {
    pub fn z_hi(&self) -> i64 {
        self.z_lo + self.lower.len() as i64 - 1
    }

    /// `(lower, upper)` at any integer; `(0, 0)` below the grid and `(1, 1)`
    /// above it.
    pub fn band_at(&self, z: i64) -> (f64, f64) {
        if z < self.z_lo {
            (0.0, 0.0)
        } else if z > self.z_hi() {
            (1.0, 1.0)
        } else {
            let i = (z - self.z_lo) as usize;
            (self.lower[i], self.upper[i])
        }
    }

    /// Share of grid points where the observed ECDF lies inside the band.
    pub fn coverage(&self) -> f64 {
        let inside = self
            .observed
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(o, (l, u))| *l <= *o && *o <= *u)
            .count();
        inside as f64 / self.observed.len() as f64
    }
}

fn ecdf(sorted: &[i64], z_lo: i64, len: usize) -> Vec<f64> {
    let n = sorted.len() as f64;
    let mut out = Vec::with_capacity(len);
    let mut k = 0;
    for i in 0..len {
        let z = z_lo + i as i64;
        while k < sorted.len() && sorted[k] <= z {
            k += 1;
        }
        out.push(k as f64 / n);
    }
    out
}

/// Replicates the observed fixture list `n_reps` times from `model`.
/// Replicate `i` uses ChaCha stream `(seed, i)`.
pub fn ecdf_band(observed: &[MatchDiff], model: &FitResult, n_reps: usize, seed: u64) -> Result<EcdfBand> {
    if n_reps < MIN_REPLICATES {
        return Err(Error::InvalidParameter(format!("ECDF band needs at least {MIN_REPLICATES} replicates")));
    }
    if observed.is_empty() {
        return Err(Error::InvalidParameter("no observations".into()));
    }
    let fixtures: Vec<(String, String)> = observed.iter().map(|m| (m.home.clone(), m.away.clone())).collect();
    let samplers: Vec<FixtureSampler> = fixture_laws(model, &fixtures)?.iter().map(|l| l.sampler()).collect();
    let reps: Vec<Vec<i64>> = (0..n_reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut v: Vec<i64> = samplers.iter().map(|s| s.sample(&mut rng)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut obs: Vec<i64> = observed.iter().map(|m| m.diff).collect();
    obs.sort_unstable();
    let z_lo = reps.iter().map(|r| r[0]).chain([obs[0]]).min().expect("non-empty");
    let z_hi = reps.iter().map(|r| r[r.len() - 1]).chain([obs[obs.len() - 1]]).max().expect("non-empty");
    let len = (z_hi - z_lo + 1) as usize;
    let curves: Vec<Vec<f64>> = reps.iter().map(|r| ecdf(r, z_lo, len)).collect();
    let (lower, upper) = (0..len)
        .map(|i| {
            let mut col: Vec<f64> = curves.iter().map(|c| c[i]).collect();
            col.sort_by(f64::total_cmp);
            (percentile(&col, 0.025), percentile(&col, 0.975))
        })
        .unzip();
    Ok(EcdfBand { z_lo, lower, upper, observed: ecdf(&obs, z_lo, len), n_reps, seed })
}
