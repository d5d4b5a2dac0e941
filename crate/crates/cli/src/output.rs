//! Result files: CSV tables stamped with a schema line, and a run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    /// Creates `dir/name`, writes `# schema=<schema>` and the header row.
    pub fn create(dir: &Path, name: &str, schema: &str, header: &[&str]) -> CliResult<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# schema={schema}").map_err(|e| CliError::io(path.display().to_string(), e))?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.writer
            .flush()
            .map_err(|e| CliError::io(self.path.display().to_string(), e))?;
        Ok(self.path)
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seeds: &'a [u64],
    config: &'a C,
    outputs: Vec<String>,
}

/// Writes `manifest.json`: everything needed to rerun the command. Thread
/// count and timings are left out so that the file is reproducible too.
pub fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &str,
    seeds: &[u64],
    config: &C,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seeds,
        config,
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}
