//! Experiment orchestration, evaluation of generator outputs, climate
//! sweeps and report rendering.

pub mod evaluate;
pub mod experiment;
pub mod models;
pub mod report;
pub mod sweep;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const RUN_FILE: &str = "run.json";

#[derive(Serialize)]
struct RunRecord<'a, T> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a T,
}

/// Writes `run.json` with the fully resolved configuration of a run.
pub fn write_run_json<T: Serialize>(dir: impl AsRef<Path>, config: &T) -> Result<()> {
    write_run_record(dir, "", config)
}

pub fn write_run_record<T: Serialize>(dir: impl AsRef<Path>, command: &str, config: &T) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let rec = RunRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
    };
    let mut f = BufWriter::new(File::create(dir.join(RUN_FILE))?);
    serde_json::to_writer_pretty(&mut f, &rec)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
