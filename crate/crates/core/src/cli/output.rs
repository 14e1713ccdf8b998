//! Output plumbing for experiment runs: round-trip-exact number formatting,
//! CSV assembly, and the three-file output protocol (resolved config,
//! data CSV, JSON summary).
//!
//! All file contents are built in memory first and written in one pass, so
//! a run that fails part-way leaves no partial output directory behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Formats a real number with 17 significant digits ('.' decimal separator,
/// scientific notation), which round-trips f64 exactly. Non-finite values
/// use the spellings `f64::from_str` accepts back.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Formats a list of reals as a comma-joined string (config values, flags).
pub fn fmt_f64_list(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

/// An in-memory CSV document: a header row plus preformatted cells. Cells
/// never contain commas, quotes, or newlines, so no quoting is performed.
#[derive(Debug, Clone)]
pub struct CsvDoc {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        CsvDoc {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends one row; the cell count must match the header.
    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len(), "CSV row width mismatch");
        self.rows.push(cells);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything one experiment run produces, ready to be written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Fully-resolved configuration (operation parameters; the driver adds
    /// the global keys before writing).
    pub config: BTreeMap<String, String>,
    pub data: CsvDoc,
    pub summary: serde_json::Value,
}

/// Serializes the resolved config as sorted `key=value` lines.
pub fn config_text(config: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in config {
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Writes the three-file output set into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Io(format!("creating {}: {e}", dir.display())))?;
    let files = [
        (dir.join("config.txt"), config_text(&run.config)),
        (dir.join("data.csv"), run.data.to_csv_string()),
        (
            dir.join("summary.json"),
            format!(
                "{}\n",
                serde_json::to_string_pretty(&run.summary)
                    .map_err(|e| Error::Io(format!("serializing summary: {e}")))?
            ),
        ),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (path, content) in files {
        fs::write(&path, content)
            .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
