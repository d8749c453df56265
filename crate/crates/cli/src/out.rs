//! Output directory handling and error-to-exit-code mapping.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{EXIT_DIVERGED, EXIT_USAGE};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<loa::Error> for CliError {
    fn from(e: loa::Error) -> Self {
        use loa::Error as E;
        let code = match &e {
            E::InvalidParameter(_) | E::Io(_) | E::Json(_) | E::Format(_) | E::Parse { .. } | E::Dimension(_) => {
                EXIT_USAGE
            }
            _ => EXIT_DIVERGED,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        loa::Error::Io(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        loa::Error::Json(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text)
}

/// Creates the output directory and echoes the resolved configuration.
pub fn prepare(out: &Path, config: &impl Serialize) -> CliResult<()> {
    fs::create_dir_all(out)?;
    write_json(&out.join("config.json"), config)
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
