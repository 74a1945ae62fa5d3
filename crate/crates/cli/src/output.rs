//! File plumbing shared by the subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use scorediff::fit::FitResult;
use scorediff::league::{filter_season, ingest_csv, MatchRecord};
use serde::{Deserialize, Serialize};

use crate::DataArgs;

pub fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: Serialize + ?Sized>(path: PathBuf, value: &T) -> Result<()> {
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_rows<T: Serialize>(path: PathBuf, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Validated records, optionally restricted to one season.
pub fn load_records(data: &DataArgs) -> Result<Vec<MatchRecord>> {
    let ingested = ingest_csv(&data.input).with_context(|| format!("reading {}", data.input.display()))?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let records = match &data.season {
        None => ingested.records,
        Some(s) => filter_season(&ingested.records, s).into_iter().cloned().collect(),
    };
    if records.is_empty() {
        match &data.season {
            Some(s) => bail!("no matches for season `{s}` in {}", data.input.display()),
            None => bail!("no matches in {}", data.input.display()),
        }
    }
    Ok(records)
}

/// Reads a fitted model and checks it is internally consistent.
pub fn load_model(path: &Path) -> Result<FitResult> {
    let file = File::open(path).with_context(|| format!("opening model file {}", path.display()))?;
    let model: FitResult = serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("parsing model file {}", path.display()))?;
    let s = &model.structure;
    ensure!(
        model.packed.len() == s.n_params() && model.n_params == s.n_params(),
        "model file {}: {} packed values for a structure with {} parameters",
        path.display(),
        model.packed.len(),
        s.n_params()
    );
    ensure!(
        model.teams.len() == s.n_teams && model.estimates.halves.len() == s.n_halves(),
        "model file {}: team or half count disagrees with the structure",
        path.display()
    );
    Ok(model)
}

#[derive(Debug, Deserialize)]
struct FixtureRow {
    home: String,
    away: String,
}

pub fn read_fixtures(path: &Path) -> Result<Vec<(String, String)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening fixture file {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<FixtureRow>().enumerate() {
        let row = row.with_context(|| format!("{}: fixture {}", path.display(), i + 1))?;
        ensure!(row.home != row.away, "{}: fixture {} pairs `{}` with itself", path.display(), i + 1, row.home);
        out.push((row.home, row.away));
    }
    ensure!(!out.is_empty(), "{} lists no fixtures", path.display());
    Ok(out)
}
