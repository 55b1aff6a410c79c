use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use symrank::Error;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

/// Bad input, bad configuration and size guards exit with 2; failures
/// during the computation itself exit with 1.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let usage = matches!(
            e,
            Error::DimensionMismatch(_)
                | Error::NonFinite { .. }
                | Error::Csv(_)
                | Error::TiesInResponse { .. }
                | Error::InvalidInterval(_)
                | Error::SizeOutOfRange { .. }
                | Error::TooLarge { .. }
                | Error::TooSmall(_)
                | Error::ExprParse { .. }
                | Error::UnknownOperator(_)
                | Error::InvalidArchitecture(_)
                | Error::VariableOutOfRange { .. }
                | Error::KTooLarge { .. }
                | Error::UnknownMethod(_)
                | Error::Config(_)
                | Error::InvalidPiecewise(_)
                | Error::NotMonotone { .. }
                | Error::DomainMismatch
                | Error::ColumnMismatch { .. }
                | Error::UnboundedTransform
        );
        CliError { code: if usage { 2 } else { 1 }, message: e.to_string() }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Writes `value` to `dir/name`, or to stdout when no directory is given.
pub fn emit_json<T: Serialize>(value: &T, dir: Option<&Path>, name: &str) -> Result<(), CliError> {
    let text = to_json(value)?;
    match dir {
        Some(d) => {
            ensure_dir(d)?;
            write_file(&d.join(name), &text)
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::runtime(e.to_string())),
    }
}

pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Shortest decimal that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
