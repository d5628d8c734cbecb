//! CSV and JSON writers. Floats are written with 17 significant digits.

use crate::CliError;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { columns: header.len(), text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => float(*x),
            Cell::I(n) => n.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Where the CSV and its JSON sidecar go. Without a CSV path the table is
/// printed to stdout.
pub struct Sinks {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Sinks {
    pub fn new(out: Option<PathBuf>, csv: Option<PathBuf>, json: Option<PathBuf>) -> Self {
        let csv = out.or(csv);
        let json = json.or_else(|| csv.as_ref().map(|p| p.with_extension("json")));
        Sinks { csv, json }
    }

    pub fn emit(&self, csv: &Csv, json: &serde_json::Value) -> Result<(), CliError> {
        match &self.csv {
            Some(p) => write(p, csv.as_str())?,
            None => print!("{}", csv.as_str()),
        }
        if let Some(p) = &self.json {
            let text = serde_json::to_string_pretty(json).map_err(|e| CliError::Output(e.to_string()))?;
            write(p, &(text + "\n"))?;
        }
        Ok(())
    }
}

fn write(p: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 10.469_043_608_578_24] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[Cell::I(1), Cell::F(2.0)]);
        c.comment("note");
        assert_eq!(c.as_str(), "a,b\n1,2.0000000000000000e0\n# note\n");
    }

    #[test]
    fn sidecar_follows_the_csv() {
        let s = Sinks::new(Some("run/out.csv".into()), None, None);
        assert_eq!(s.json.unwrap(), PathBuf::from("run/out.json"));
        assert!(Sinks::new(None, None, None).json.is_none());
    }
}
