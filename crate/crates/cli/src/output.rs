use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Formats `x` with 12 significant digits, dropping trailing zeros.
/// Scientific notation is used outside `[1e-5, 1e12)`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A CSV table built row by row. Numbers go through [`sig12`].
pub struct Table {
    text: String,
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Self { text: String::new() };
        t.push_line(header.iter().map(|h| csv_field(h.as_ref())));
        t
    }

    fn push_line(&mut self, fields: impl Iterator<Item = String>) {
        self.text.push_str(&fields.collect::<Vec<_>>().join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.push_line(cells.into_iter().map(|c| match c {
            Cell::Num(x) => sig12(x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => csv_field(&s),
        }));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Where results go: a file plus its manifest, or stdout.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
}

impl Sink {
    /// Writes the main output and any `(suffix, text)` sidecars, then the
    /// manifest. Without `--out` the main output goes to stdout and
    /// sidecars to stderr.
    pub fn emit(&self, main: &str, sidecars: &[(&str, String)]) -> Result<(), CliError> {
        let Some(out) = &self.out else {
            std::io::stdout().write_all(main.as_bytes())?;
            for (_, text) in sidecars {
                eprint!("{text}");
            }
            return Ok(());
        };
        fs::write(out, main)?;
        let mut outputs = vec![out.display().to_string()];
        for (suffix, text) in sidecars {
            let path = sibling(out, suffix);
            fs::write(&path, text)?;
            outputs.push(path.display().to_string());
        }
        let manifest = RunManifest {
            command: self.command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            parameters: self.parameters.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs,
        };
        fs::write(sibling(out, ".manifest.json"), to_json(&manifest))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(1.0 / 9.0), "0.111111111111");
        assert_eq!(sig12(4.0 / 9.0), "0.444444444444");
        assert_eq!(sig12(200.0), "200");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(1.75), "1.75");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(sig12(1.0 / 512.0), "0.001953125");
        assert_eq!(sig12(1.23e-7), "1.23e-7");
        assert_eq!(sig12(6.02214076e23), "6.02214076e23");
        assert_eq!(sig12(0.99999999999999), "1");
    }

    #[test]
    fn quotes_fields_with_commas() {
        let mut t = Table::new(&["theta", "1x(1->2),1x(2->3)"]);
        t.row(vec![Cell::Num(0.5), Cell::Bool(true)]);
        assert_eq!(t.finish(), "theta,\"1x(1->2),1x(2->3)\"\n0.5,true\n");
    }
}
