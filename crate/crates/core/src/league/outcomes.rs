//! Expected home-win / draw / away-win counts.

use serde::{Deserialize, Serialize};

use super::model::FixtureLaw;
use super::odds::odds_to_probs;
use super::records::MatchRecord;
use crate::error::Result;
use crate::fit::FitResult;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub home_wins: f64,
    pub draws: f64,
    pub away_wins: f64,
}

impl OutcomeCounts {
    pub fn total(&self) -> f64 {
        self.home_wins + self.draws + self.away_wins
    }

    fn add(&mut self, (h, d, a): (f64, f64, f64)) {
        self.home_wins += h;
        self.draws += d;
        self.away_wins += a;
    }
}

/// Sum over fixtures of the model's outcome probabilities.
pub fn expected_outcomes(fixtures: &[(String, String)], model: &FitResult) -> Result<OutcomeCounts> {
    let mut out = OutcomeCounts::default();
    for (h, a) in fixtures {
        out.add(FixtureLaw::new(model, h, a)?.outcome_probs());
    }
    Ok(out)
}

pub fn observed_outcomes(diffs: impl IntoIterator<Item = i64>) -> OutcomeCounts {
    let mut out = OutcomeCounts::default();
    for d in diffs {
        out.add(match d.cmp(&0) {
            std::cmp::Ordering::Greater => (1.0, 0.0, 0.0),
            std::cmp::Ordering::Equal => (0.0, 1.0, 0.0),
            std::cmp::Ordering::Less => (0.0, 0.0, 1.0),
        });
    }
    out
}

/// Bookmaker-implied counts over the records that carry odds, with the
/// number of such records.
pub fn implied_outcomes(records: &[MatchRecord]) -> Result<(OutcomeCounts, usize)> {
    let mut out = OutcomeCounts::default();
    let mut n = 0;
    for (o1, ox, o2) in records.iter().filter_map(MatchRecord::odds) {
        out.add(odds_to_probs(o1, ox, o2)?);
        n += 1;
    }
    Ok((out, n))
}
