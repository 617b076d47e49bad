//! Aggregated result tables and their CSV / markdown renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::TableFormat;
use crate::error::{Error, Result};

/// Mean and spread of λ̂ over the successful repeats of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub mean: f64,
    /// `std / √count`.
    pub stderr: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    /// Mean of λ̂ divided by the training-set size.
    pub mean_per_sample: f64,
    pub count: usize,
    pub failures: usize,
    /// Repeats whose λ̂ sat on a grid endpoint.
    pub boundary_hits: usize,
}

impl Cell {
    /// `samples` holds `(λ̂, training size, on boundary)` per successful repeat.
    pub fn aggregate(samples: &[(f64, f64, bool)], failures: usize) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                std: f64::NAN,
                mean_per_sample: f64::NAN,
                count,
                failures,
                boundary_hits: 0,
            };
        }
        let k = count as f64;
        let mean = samples.iter().map(|s| s.0).sum::<f64>() / k;
        let var = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / k;
        let std = var.sqrt();
        Self {
            mean,
            stderr: std / k.sqrt(),
            std,
            mean_per_sample: samples.iter().map(|s| s.0 / s.1).sum::<f64>() / k,
            count,
            failures,
            boundary_hits: samples.iter().filter(|s| s.2).count(),
        }
    }

    /// Every successful repeat hit the grid boundary.
    pub fn boundary_clipped(&self) -> bool {
        self.count > 0 && self.boundary_hits == self.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub grid: String,
    /// Which spread the tables print: `stderr` or `std`.
    pub spread: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub title: String,
    pub corner: String,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    /// `cells[row][column]`
    pub cells: Vec<Vec<Cell>>,
    pub metadata: TableMetadata,
}

impl ResultTable {
    pub fn cell(&self, row: &str, column: &str) -> Option<&Cell> {
        let r = self.row_labels.iter().position(|l| l == row)?;
        let c = self.column_labels.iter().position(|l| l == column)?;
        self.cells.get(r)?.get(c)
    }

    fn spread(&self, cell: &Cell) -> f64 {
        if self.metadata.spread == "std" {
            cell.std
        } else {
            cell.stderr
        }
    }

    fn meta_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("table={}", self.title),
            format!("config_hash={}", self.metadata.config_hash),
            format!("seed={}", self.metadata.seed),
            format!("grid={}", self.metadata.grid),
            format!("spread={}", self.metadata.spread),
        ];
        lines.extend(self.metadata.notes.iter().map(|n| format!("note={n}")));
        lines
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.meta_lines() {
            let _ = writeln!(out, "# {line}");
        }
        let mut header = vec![csv_field(&self.corner)];
        for c in &self.column_labels {
            header.push(csv_field(&format!("{c} mean")));
            header.push(csv_field(&format!("{c} {}", self.metadata.spread)));
        }
        let _ = writeln!(out, "{}", header.join(","));
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let mut fields = vec![csv_field(label)];
            for cell in row {
                fields.push(number(cell.mean));
                fields.push(number(self.spread(cell)));
            }
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for line in self.meta_lines() {
            let _ = writeln!(out, "<!-- {line} -->");
        }
        let mut header = format!("| {} |", self.corner);
        let mut rule = String::from("|---|");
        for c in &self.column_labels {
            let _ = write!(header, " {c} |");
            rule.push_str("---:|");
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{rule}");
        let mut any_clipped = false;
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let mut line = format!("| {label} |");
            for cell in row {
                let mut text = if cell.count == 0 {
                    "n/a".to_string()
                } else {
                    format!("{} ({})", round(cell.mean), round(self.spread(cell)))
                };
                if cell.boundary_clipped() {
                    text.push('*');
                    any_clipped = true;
                }
                if cell.failures > 0 {
                    let _ = write!(text, " [{} failed]", cell.failures);
                }
                let _ = write!(line, " {text} |");
            }
            let _ = writeln!(out, "{line}");
        }
        if any_clipped {
            let _ = writeln!(out, "\n\\* every repeat selected a grid endpoint");
        }
        out
    }

    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => self.to_csv(),
            TableFormat::Markdown => self.to_markdown(),
        }
    }
}

fn round(v: f64) -> String {
    let r = v.round();
    // avoid printing "-0"
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.6}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write `table` to `path` in `format`.
pub fn emit_table(table: &ResultTable, format: TableFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.render(format)).map_err(|e| Error::io(path, e))
}
