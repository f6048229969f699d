//! Where CSV and the human-readable report go.
//!
//! With `--out`, CSV is written to the file and the report to stdout.
//! Without it, CSV goes to stdout and the report to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

pub struct Output {
    pub csv: Box<dyn Write + Send>,
    pub report: Box<dyn Write + Send>,
}

impl Output {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        Ok(match path {
            Some(p) => {
                let file = File::create(p)
                    .with_context(|| format!("cannot create output file {}", p.display()))?;
                Output {
                    csv: Box::new(BufWriter::new(file)),
                    report: Box::new(io::stdout()),
                }
            }
            None => Output {
                csv: Box::new(io::stdout()),
                report: Box::new(io::stderr()),
            },
        })
    }

    pub fn csv_writer(&mut self) -> csv::Writer<&mut (dyn Write + Send)> {
        csv::Writer::from_writer(&mut *self.csv)
    }
}
