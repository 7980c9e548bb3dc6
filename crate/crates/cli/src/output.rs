use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<S: Serialize>(path: Option<&Path>, value: &S) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_csv<R: Serialize>(path: Option<&Path>, rows: &[R]) -> Result<()> {
    ffverify::protocol::write_csv(sink(path)?, rows)?;
    Ok(())
}

/// Writes `json` or `rows` depending on `format`.
pub fn emit<S: Serialize, R: Serialize>(
    format: Format,
    path: Option<&Path>,
    json: &S,
    rows: &[R],
) -> Result<()> {
    match format {
        Format::Json => write_json(path, json),
        Format::Csv => write_csv(path, rows),
    }
}
