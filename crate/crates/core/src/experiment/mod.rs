//! Run orchestration: every command writes CSVs plus a `manifest.json` that
//! is sufficient to reproduce them.

mod manifest;
mod runs;

pub use manifest::{sha256_file, Command, RunManifest, SweepAxis, MANIFEST_FILE, MANIFEST_FORMAT};
pub use runs::{
    aggregate_rows, ci95, rerun, run_eval, run_extract, run_oracle, run_sweep, run_train, AggregateRow, ExtractOutcome,
    SeedResult, SweepPoint, TrainOutcome,
};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// CSV writer whose first line is `# manifest: manifest.json config_sha256=...`.
pub struct CsvOut {
    writer: csv::Writer<std::fs::File>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub fn create(path: &Path, config_hash: &str, header: &[&str]) -> Result<Self> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# manifest: {MANIFEST_FILE} config_sha256={config_hash}").map_err(|e| Error::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(CsvOut {
            writer,
            path: path.to_path_buf(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.writer.write_record(fields)?)
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Reads a CSV written by [`CsvOut`], skipping the manifest line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub(crate) fn f6(x: f64) -> String {
    format!("{x:.6}")
}
