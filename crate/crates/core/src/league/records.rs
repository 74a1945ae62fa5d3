//! Match records, CSV ingestion and per-season descriptive statistics.
//!
//! CSV schema (UTF-8, comma separated, header required):
//!
//! | column | type | required |
//! |---|---|---|
//! | `season` | string | yes |
//! | `round` | integer | no |
//! | `home`, `away` | string | yes |
//! | `ft_home`, `ft_away` | integer ≥ 0 | yes |
//! | `ht_home`, `ht_away` | integer ≥ 0 | no |
//! | `odds_1`, `odds_x`, `odds_2` | decimal > 1 | no (all or none) |

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{HalfDiffs, MatchDiff};

pub const REQUIRED_COLUMNS: [&str; 5] = ["season", "home", "away", "ft_home", "ft_away"];
pub const OPTIONAL_COLUMNS: [&str; 6] = ["round", "ht_home", "ht_away", "odds_1", "odds_x", "odds_2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub season: String,
    #[serde(default)]
    pub round: Option<u32>,
    pub home: String,
    pub away: String,
    pub ft_home: u32,
    pub ft_away: u32,
    #[serde(default)]
    pub ht_home: Option<u32>,
    #[serde(default)]
    pub ht_away: Option<u32>,
    #[serde(default)]
    pub odds_1: Option<f64>,
    #[serde(default)]
    pub odds_x: Option<f64>,
    #[serde(default)]
    pub odds_2: Option<f64>,
}

impl MatchRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.home.is_empty() || self.away.is_empty() {
            return Err("team names must be non-empty".into());
        }
        if self.home == self.away {
            return Err(format!("team `{}` cannot play itself", self.home));
        }
        match (self.ht_home, self.ht_away) {
            (Some(h), Some(a)) => {
                if h > self.ft_home || a > self.ft_away {
                    return Err(format!(
                        "half-time score {h}:{a} exceeds full-time score {}:{}",
                        self.ft_home, self.ft_away
                    ));
                }
            }
            (None, None) => {}
            _ => return Err("half-time goals must be given for both teams or neither".into()),
        }
        match (self.odds_1, self.odds_x, self.odds_2) {
            (Some(a), Some(b), Some(c)) => {
                if !(a > 1.0 && b > 1.0 && c > 1.0) {
                    return Err(format!("decimal odds must exceed 1, got ({a}, {b}, {c})"));
                }
            }
            (None, None, None) => {}
            _ => return Err("odds must be given for all three outcomes or none".into()),
        }
        Ok(())
    }

    /// Full-time home minus away goals.
    pub fn diff(&self) -> i64 {
        i64::from(self.ft_home) - i64::from(self.ft_away)
    }

    pub fn has_half_time(&self) -> bool {
        self.ht_home.is_some() && self.ht_away.is_some()
    }

    pub fn odds(&self) -> Option<(f64, f64, f64)> {
        Some((self.odds_1?, self.odds_x?, self.odds_2?))
    }

    pub fn to_match_diff(&self) -> MatchDiff {
        MatchDiff::new(self.home.clone(), self.away.clone(), self.diff())
    }

    /// First- and second-half differences, when half-time goals are known.
    pub fn to_half_diffs(&self) -> Option<HalfDiffs> {
        let (hh, ha) = (i64::from(self.ht_home?), i64::from(self.ht_away?));
        let first = hh - ha;
        Some(HalfDiffs::new(self.home.clone(), self.away.clone(), first, self.diff() - first))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<MatchRecord>,
    pub warnings: Vec<String>,
}

/// Reads and validates a match file; the first invalid row aborts with its
/// line number.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_reader(file)
}

pub fn ingest_reader<R: std::io::Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Ingested { records: Vec::new(), warnings: vec!["input is empty".into()] });
    }
    for col in REQUIRED_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Row { row: 1, msg: format!("missing required column `{col}`") });
        }
    }
    if let Some(extra) = headers.iter().find(|h| !REQUIRED_COLUMNS.contains(h) && !OPTIONAL_COLUMNS.contains(h)) {
        return Err(Error::Row { row: 1, msg: format!("unknown column `{extra}`") });
    }
    let mut records = Vec::new();
    for row in rdr.deserialize::<MatchRecord>() {
        let rec = row?;
        rec.validate().map_err(|msg| Error::Row { row: records.len() + 2, msg })?;
        records.push(rec);
    }
    let mut warnings = Vec::new();
    if records.is_empty() {
        warnings.push("input has a header but no matches".into());
    }
    Ok(Ingested { records, warnings })
}

pub fn write_csv<W: std::io::Write>(records: &[MatchRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn filter_season<'a>(records: &'a [MatchRecord], season: &str) -> Vec<&'a MatchRecord> {
    records.iter().filter(|r| r.season == season).collect()
}

/// Mean, sample SD (`n - 1` denominator) and skewness `m3 / m2^1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, sd: f64::NAN, skewness: f64::NAN };
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(a, b), v| {
        let d = v - mean;
        (a + d * d, b + d * d * d)
    });
    let sd = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { f64::NAN };
    let skewness = if m2 > 0.0 { (m3 / nf) / (m2 / nf).powf(1.5) } else { 0.0 };
    Summary { n, mean, sd, skewness }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonStats {
    pub season: String,
    pub n_matches: usize,
    pub diff_mean: f64,
    pub diff_sd: f64,
    pub diff_skewness: f64,
    pub home_mean: f64,
    pub home_var: f64,
    pub away_mean: f64,
    pub away_var: f64,
    /// Pearson correlation of home and away goals.
    pub home_away_corr: f64,
}

/// Per-season statistics, seasons in lexicographic order.
pub fn describe(records: &[MatchRecord]) -> Vec<SeasonStats> {
    let mut by_season: BTreeMap<&str, Vec<&MatchRecord>> = BTreeMap::new();
    for r in records {
        by_season.entry(r.season.as_str()).or_default().push(r);
    }
    by_season
        .into_iter()
        .map(|(season, rows)| {
            let diffs: Vec<f64> = rows.iter().map(|r| r.diff() as f64).collect();
            let home: Vec<f64> = rows.iter().map(|r| f64::from(r.ft_home)).collect();
            let away: Vec<f64> = rows.iter().map(|r| f64::from(r.ft_away)).collect();
            let d = summarize(&diffs);
            let h = summarize(&home);
            let a = summarize(&away);
            let n = rows.len() as f64;
            let cov = home.iter().zip(&away).map(|(x, y)| (x - h.mean) * (y - a.mean)).sum::<f64>() / (n - 1.0);
            SeasonStats {
                season: season.to_string(),
                n_matches: rows.len(),
                diff_mean: d.mean,
                diff_sd: d.sd,
                diff_skewness: d.skewness,
                home_mean: h.mean,
                home_var: h.sd * h.sd,
                away_mean: a.mean,
                away_var: a.sd * a.sd,
                home_away_corr: cov / (h.sd * a.sd),
            }
        })
        .collect()
}
