use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use qutrit_geometry::synthesis::SCHEMA_VERSION;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or a request beyond the supported size.
    Usage(String),
    /// Invalid input data.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl From<qutrit_geometry::Error> for CliError {
    fn from(e: qutrit_geometry::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// JSON document `{"schema", "config", <key>: payload}` with a trailing newline.
pub fn json_document<T: Serialize>(config: &serde_json::Value, key: &str, payload: &T) -> CliResult<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), SCHEMA_VERSION.into());
    doc.insert("config".into(), config.clone());
    doc.insert(key.into(), serde_json::to_value(payload)?);
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

/// CSV with `# qg3-v1` and `# config: {..}` header lines, optional extra comment lines,
/// then `body`.
pub fn csv_document(config: &serde_json::Value, extra: &[String], body: &str) -> CliResult<String> {
    let mut text = format!("# {SCHEMA_VERSION}\n# config: {}\n", serde_json::to_string(config)?);
    for line in extra {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(body);
    Ok(text)
}

/// Writes the artifact to `out` or stdout, and the summary to stdout (file output) or
/// stderr (stdout output).
pub fn emit(out: Option<&Path>, artifact: &str, summary: Option<&str>) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, artifact)?;
            if let Some(s) = summary {
                println!("{s}");
            }
        }
        None => {
            std::io::stdout().write_all(artifact.as_bytes())?;
            if let Some(s) = summary {
                eprintln!("{s}");
            }
        }
    }
    Ok(())
}
