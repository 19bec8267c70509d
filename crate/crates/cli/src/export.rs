use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

/// Seventeen significant digits in the style of C's `%.17g`, trailing zeros
/// trimmed.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if !(-5..17).contains(&exp) {
        let trimmed = trim_fraction(&format!("{}.{}", &digits[..1], &digits[1..]));
        let exp_sign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{trimmed}e{exp_sign}{:02}", exp.abs());
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn numeric(headers: Vec<&'static str>, rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut table = Self::new(headers);
        for row in rows {
            table.push(row.into_iter().map(Cell::Num).collect());
        }
        table
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(writer.into_inner()?)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let map: Map<String, Value> = self
                        .headers
                        .iter()
                        .zip(row)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect();
                    Value::Object(map)
                })
                .collect(),
        )
    }
}

/// Files written by one command, for the manifest.
pub struct Artifacts {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: String, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(&name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        if !self.files.contains(&name) {
            self.files.push(name);
        }
        Ok(path)
    }

    /// Writes `stem.csv` or `stem.json` depending on the configured format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf> {
        match self.format {
            Format::Csv => self.write(format!("{stem}.csv"), &table.to_csv()?),
            Format::Json => {
                let text = serde_json::to_string_pretty(&table.to_json())? + "\n";
                self.write(format!("{stem}.json"), text.as_bytes())
            }
        }
    }

    /// Always CSV, whatever the format flag says.
    pub fn csv(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write(name.to_string(), &table.to_csv()?)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name.to_string(), text.as_bytes())
    }

    /// `manifest.json` with the resolved config and a SHA-256 per artifact.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<PathBuf> {
        self.files.sort();
        let mut checksums = Map::new();
        for name in &self.files {
            let bytes = fs::read(self.dir.join(name))?;
            checksums.insert(name.clone(), json!(format!("{:x}", Sha256::digest(&bytes))));
        }
        let manifest = json!({
            "command": command,
            "config": config,
            "artifacts": checksums,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(0.1 + 0.001 + 1e-7), "0.10100010000000001");
        assert_eq!(fmt17(0.5), "0.5");
        assert_eq!(fmt17(1.0), "1");
        assert_eq!(fmt17(-2.25), "-2.25");
        assert_eq!(fmt17(100.0), "100");
        assert_eq!(fmt17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt17(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt17(1.5e20), "1.5e+20");
        assert_eq!(fmt17(0.0001), "0.0001");
        assert_eq!(fmt17(0.0), "0");
    }

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -5.0e-300, 6.02214076e23, 0.050000000000000003] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_and_json_tables() {
        let mut t = Table::new(vec!["m", "k", "partition", "count"]);
        t.push(vec![Cell::Int(4), Cell::Int(2), Cell::Text("1;0;1".into()), Cell::Int(4)]);
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(csv, "m,k,partition,count\n4,2,1;0;1,4\n");
        assert_eq!(t.to_json()[0]["partition"], "1;0;1");
    }
}
