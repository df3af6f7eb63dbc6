//! The `orcu` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input error.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

pub use args::{Cli, Command};
pub use config::FileConfig;

use crate::error::Error;

/// Environment variable that replaces the default output directory.
pub const OUT_DIR_ENV: &str = "ORCU_OUT_DIR";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        CliError {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<Error> for CliError {
    /// Bad arguments and malformed inputs are usage errors; the rest are runtime failures.
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse { .. } => CliError::usage(e),
            Error::Io { .. } | Error::Diverged { .. } | Error::Json(_) => CliError::runtime(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub outputs: Vec<String>,
}

pub(crate) struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub(crate) fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub(crate) fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `manifest.json` listing every file written so far plus itself,
/// by name relative to the output directory.
    pub(crate) fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seeds: serde_json::Value,
    ) -> CliResult<()> {
        let mut outputs = std::mem::take(&mut self.written);
        outputs.push("manifest.json".to_string());
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            outputs,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}
