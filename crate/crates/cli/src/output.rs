//! CSV emission with `#`-prefixed metadata headers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Where the table and the human-readable summary go. With an output file
/// the summary is printed on stdout; when the table itself is on stdout the
/// summary moves to stderr so the table stays machine-readable.
pub struct Sink {
    pub table: Box<dyn Write>,
    pub info: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        Ok(match path {
            Some(p) => Self {
                table: Box::new(BufWriter::new(File::create(p)?)),
                info: Box::new(io::stdout()),
            },
            None => Self {
                table: Box::new(BufWriter::new(io::stdout())),
                info: Box::new(io::stderr()),
            },
        })
    }

    pub fn header(&mut self, command: &str, settings: &[(&str, String)]) -> io::Result<()> {
        writeln!(self.table, "# pgsplit {command}")?;
        for (key, value) in settings {
            writeln!(self.table, "# {key} = {value}")?;
        }
        Ok(())
    }

    pub fn columns(&mut self, names: &[String]) -> io::Result<()> {
        writeln!(self.table, "{}", names.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.table.flush()?;
        self.info.flush()
    }
}

/// Lossless decimal form of an `f64` (17 significant digits).
pub fn f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
