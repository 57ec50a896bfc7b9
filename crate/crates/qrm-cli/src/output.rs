//! Table assembly and the two output formats. Columns are fixed per
//! command; CSV carries floats at 17 significant digits, JSON is the
//! same records as an array of objects keyed by column name.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    /// −0.0 and +0.0 are the same measurement; print one spelling.
    fn num(v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            v
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{:.16e}", Self::num(*v)),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => match serde_json::Number::from_f64(Self::num(*v)) {
                Some(n) => serde_json::Value::Number(n),
                // JSON has no infinities; mirror the CSV spelling
                None => serde_json::Value::String(format!("{v}")),
            },
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        match out {
            Some(path) => {
                let file = BufWriter::new(File::create(path)?);
                self.write_to(format, file)
            }
            None => {
                let stdout = io::stdout();
                self.write_to(format, stdout.lock())
            }
        }
    }

    fn write_to<W: Write>(&self, format: Format, mut w: W) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(self.columns)?;
                for row in &self.rows {
                    csv.write_record(row.iter().map(Cell::csv))?;
                }
                csv.flush()?;
            }
            Format::Json => {
                let records: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (name, cell) in self.columns.iter().zip(row) {
                            obj.insert((*name).to_string(), cell.json());
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut w, &records)?;
                writeln!(w)?;
            }
        }
        w.flush()
    }
}
