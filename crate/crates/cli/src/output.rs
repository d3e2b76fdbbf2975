use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits: one before the point, sixteen after.
            Self::Float(v) => format!("{v:.16e}"),
            Self::Int(v) => v.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

/// A CSV table; `schema` is written as a leading `#` comment.
#[derive(Clone, Debug)]
pub struct Table {
    pub schema: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let body = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        let body = String::from_utf8(body).map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(format!("# schema: {}\n{body}", self.schema))
    }
}

/// Rendered command output plus an optional gnuplot script for CSV data.
pub struct Artifact {
    pub body: String,
    pub gnuplot: Option<String>,
}

impl Artifact {
    pub fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        Ok(Self { body: serde_json::to_string_pretty(value)? + "\n", gnuplot: None })
    }

    pub fn csv(table: &Table, gnuplot: Option<String>) -> Result<Self, CliError> {
        Ok(Self { body: table.to_csv()?, gnuplot })
    }

    /// Writes to `out` (and `out.gp`), or to stdout when `out` is `None`.
    pub fn emit(&self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            None => {
                print!("{}", self.body);
                Ok(())
            }
            Some(path) => {
                std::fs::write(path, &self.body)?;
                if let Some(gp) = &self.gnuplot {
                    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    std::fs::write(script_path(path), gp.replace("{data}", &name))?;
                }
                Ok(())
            }
        }
    }
}

pub fn script_path(data: &Path) -> PathBuf {
    data.with_extension("gp")
}

/// Line plot of column `y` against column `x`; `{data}` is replaced by the CSV
/// file name. `setup` goes before the plot command, `more` is appended to it.
pub fn gnuplot_script(title: &str, xlabel: &str, ylabel: &str, (x, y): (usize, usize), setup: &str, more: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         set xlabel '{xlabel}'\n\
         set ylabel '{ylabel}'\n\
         set grid\n\
         {setup}\
         plot '{{data}}' using {x}:{y} with linespoints{more}\n"
    )
}
