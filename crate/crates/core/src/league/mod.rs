//! Match data, odds, outcome summaries, season simulation and bootstrap bands.

mod ecdf;
mod model;
mod odds;
mod outcomes;
mod records;
mod simulate;

pub use ecdf::{ecdf_band, EcdfBand, MIN_REPLICATES};
pub use model::{fixture_laws, FixtureLaw, FixtureSampler};
pub use odds::{odds_strength_gap, odds_to_probs};
pub use outcomes::{expected_outcomes, implied_outcomes, observed_outcomes, OutcomeCounts};
pub use records::{
    describe, filter_season, ingest_csv, ingest_reader, summarize, write_csv, Ingested, MatchRecord, SeasonStats,
    Summary, OPTIONAL_COLUMNS, REQUIRED_COLUMNS,
};
pub use simulate::{
    complete_season, percentile, simulate_season, PointsScheme, SeasonTable, SimulationConfig, SimulationSummary,
    TeamRecord, TeamSummary,
};
