use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Written next to every primary output as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub tool_version: &'static str,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(argv: &[String], config: serde_json::Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            command_line: argv.to_vec(),
            config,
            seeds,
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
        }
    }

    /// Writes `contents` to `path` and records it.
    pub fn emit(&mut self, path: &Path, contents: &str) -> Result<()> {
        write_file(path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    pub fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        let path = sibling(primary, "manifest.json", true);
        self.outputs.push(path.display().to_string());
        write_file(&path, &mbm_core::io::to_json(&self)?)?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// `dir/name.csv` -> `dir/name.<suffix>`, or `dir/name.csv.<suffix>` when
/// `keep_extension` is set.
pub fn sibling(path: &Path, suffix: &str, keep_extension: bool) -> PathBuf {
    let base = if keep_extension {
        path.file_name()
    } else {
        path.file_stem()
    };
    let name = format!("{}.{suffix}", base.unwrap_or_default().to_string_lossy());
    path.with_file_name(name)
}
