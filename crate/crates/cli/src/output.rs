use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Comment block written before every table.
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        let argv: Vec<String> = std::env::args().skip(1).map(|a| quote(&a)).collect();
        Self {
            lines: vec![
                format!("swingbench {}", swingbench::VERSION),
                format!("command: {command}"),
                format!("argv: swingbench {}", argv.join(" ")),
            ],
        }
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }
}

fn quote(arg: &str) -> String {
    if !arg.is_empty() && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_.,/=:+".contains(c)) {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', "'\\''"))
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes the header and a CSV table to `out` (stdout when `None`).
pub fn write_table(
    out: Option<&Path>,
    header: &Header,
    columns: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut sink = sink;
    for line in &header.lines {
        writeln!(sink, "# {line}")?;
    }
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(columns)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
