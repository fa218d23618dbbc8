//! CSV datasets and the run manifest.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        let writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        let mut table = Table { path, writer };
        table.row(header.iter().map(|s| s.to_string()))?;
        Ok(table)
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&fields).map_err(|e| self.error(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer
            .flush()
            .map_err(|e| CliError::io(format!("writing {}", self.path.display()), e))
    }

    fn error(&self, e: csv::Error) -> CliError {
        let context = format!("writing {}", self.path.display());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(context, io),
            other => CliError::io(context, std::io::Error::other(format!("{other:?}"))),
        }
    }
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating output directory {}", dir.display()), e))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: Tool,
    run: Run<'a>,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Run<'a> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling_digest: Option<String>,
    files: Vec<&'a str>,
}

/// Write `run_manifest.toml`: the resolved configuration, the coupling
/// digest and the tool version.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    coupling_digest: Option<String>,
    files: &[&str],
) -> Result<(), CliError> {
    let manifest = Manifest {
        tool: Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        run: Run {
            command,
            coupling_digest,
            files: files.to_vec(),
        },
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(format!("serializing manifest: {e}")))?;
    let path = dir.join("run_manifest.toml");
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
