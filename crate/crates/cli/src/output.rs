//! Report plumbing: error-to-exit-code classification, output format
//! selection, the run manifest embedded in every report, and the JSON/CSV
//! writers.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

/// Failures split by exit code: usage problems (bad arguments or parameter
/// ranges) exit 2, everything that goes wrong while running exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }
}

impl From<qrev_core::Error> for CliError {
    fn from(e: qrev_core::Error) -> Self {
        use qrev_core::Error::*;
        match e {
            // Anything the user can cause with a flag value is a usage error.
            ProbabilityOutOfRange { .. }
            | AngleOutOfRange { .. }
            | InvalidConfig { .. }
            | NotInvertible { .. }
            | DepthTooLarge { .. } => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Report destination and format, shared by every subcommand.
#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report file; written to stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Report format; defaults to json, or to csv when --out ends in .csv
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OutputArgs {
    pub fn format(&self) -> Format {
        if let Some(f) = self.format {
            return f;
        }
        let from_extension = self
            .out
            .as_ref()
            .and_then(|p| p.extension())
            .map_or(false, |ext| ext.eq_ignore_ascii_case("csv"));
        if from_extension {
            Format::Csv
        } else {
            Format::Json
        }
    }

    /// Rejects --format csv for commands whose report is not tabular.
    pub fn require_json(&self) -> Result<(), CliError> {
        match self.format() {
            Format::Json => Ok(()),
            Format::Csv => Err(CliError::usage(
                "this report is not tabular; use --format json",
            )),
        }
    }
}

/// Provenance block serialized into every report; a run is reproducible from
/// its parameters and master seed (the timestamp is informational only).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub master_seed: Option<u64>,
    pub version: &'static str,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        parameters: serde_json::Value,
        master_seed: Option<u64>,
    ) -> Self {
        Self {
            command,
            parameters,
            master_seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: now_rfc3339(),
        }
    }
}

fn now_rfc3339() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| String::from("unknown"))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    manifest: &'a RunManifest,
    results: &'a T,
}

fn write_payload(out: &Option<PathBuf>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, payload).map_err(|e| {
            CliError::runtime(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

pub fn write_json<T: Serialize>(
    out: &Option<PathBuf>,
    manifest: &RunManifest,
    results: &T,
) -> Result<(), CliError> {
    let mut payload = serde_json::to_string_pretty(&Report { manifest, results })
        .map_err(|e| CliError::runtime(format!("serialization failed: {e}")))?;
    payload.push('\n');
    write_payload(out, &payload)
}

/// The manifest rides along in CSV reports as a leading comment line.
fn manifest_comment(manifest: &RunManifest) -> Result<String, CliError> {
    let compact = serde_json::to_string(manifest)
        .map_err(|e| CliError::runtime(format!("serialization failed: {e}")))?;
    Ok(format!("# manifest: {compact}\n"))
}

/// Writes a value grid: `# manifest`, one `# key: value` line per extra,
/// then a header row of column coordinates (under a corner label) and one
/// row per row coordinate.
pub fn write_grid_csv(
    out: &Option<PathBuf>,
    manifest: &RunManifest,
    extras: &[(&str, String)],
    corner: &str,
    rows: &[f64],
    cols: &[f64],
    values: &[Vec<f64>],
) -> Result<(), CliError> {
    let mut s = manifest_comment(manifest)?;
    for (key, value) in extras {
        let _ = writeln!(s, "# {key}: {value}");
    }
    let _ = write!(s, "{corner}");
    for c in cols {
        let _ = write!(s, ",{c}");
    }
    s.push('\n');
    for (r, row_values) in rows.iter().zip(values) {
        let _ = write!(s, "{r}");
        for v in row_values {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    write_payload(out, &s)
}

/// Writes labeled value rows under the given header line.
pub fn write_rows_csv(
    out: &Option<PathBuf>,
    manifest: &RunManifest,
    header: &str,
    rows: &[(String, f64)],
) -> Result<(), CliError> {
    let mut s = manifest_comment(manifest)?;
    let _ = writeln!(s, "{header}");
    for (label, value) in rows {
        let _ = writeln!(s, "{label},{value}");
    }
    write_payload(out, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn output(out: Option<&str>, format: Option<Format>) -> OutputArgs {
        OutputArgs {
            out: out.map(PathBuf::from),
            format,
        }
    }

    #[test]
    fn format_defaults_to_json() {
        assert_eq!(output(None, None).format(), Format::Json);
        assert_eq!(output(Some("report.json"), None).format(), Format::Json);
        assert_eq!(output(Some("report"), None).format(), Format::Json);
    }

    #[test]
    fn csv_extension_switches_the_default() {
        assert_eq!(output(Some("surf.csv"), None).format(), Format::Csv);
        assert_eq!(output(Some("SURF.CSV"), None).format(), Format::Csv);
    }

    #[test]
    fn explicit_format_wins_over_the_extension() {
        assert_eq!(
            output(Some("surf.csv"), Some(Format::Json)).format(),
            Format::Json
        );
        assert_eq!(
            output(Some("surf.json"), Some(Format::Csv)).format(),
            Format::Csv
        );
    }

    #[test]
    fn range_errors_map_to_usage() {
        let err: CliError =
            qrev_core::PartialMeasurement::new(1.5, 0.3).unwrap_err().into();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
