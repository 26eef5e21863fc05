//! Row tables and their CSV and JSON renderings.
//!
//! Both renderings are deterministic: reals use a fixed significant-digit
//! count and JSON objects keep their keys sorted.

use std::collections::BTreeMap;

use oplab::Certified;
use rug::Float;
use serde_json::{json, Map, Value as Json};

/// Significant digits for reals unless overridden.
pub const DEFAULT_DIGITS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub bits_used: u32,
    pub rel_err_bound: f64,
}

impl<T> From<&Certified<T>> for Provenance {
    fn from(c: &Certified<T>) -> Self {
        Provenance { bits_used: c.bits_used, rel_err_bound: c.rel_err_bound }
    }
}

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    /// Multiprecision real with the provenance of the value.
    Real(Float, Option<Provenance>),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn real(v: &Float, prov: Provenance) -> Cell {
        Cell::Real(v.clone(), Some(prov))
    }

    fn csv(&self, digits: usize) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(v, _) => format_float(v, digits),
            Cell::Num(v) => format_f64(*v),
            Cell::Text(s) => csv_escape(s),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self, digits: usize) -> Json {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(v, None) => json!(format_float(v, digits)),
            Cell::Real(v, Some(p)) => json!({
                "value": format_float(v, digits),
                "bits_used": p.bits_used,
                "rel_err_bound": num(p.rel_err_bound),
            }),
            Cell::Num(v) => num(*v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Scientific notation with `digits` significant digits.
pub fn format_float(v: &Float, digits: usize) -> String {
    if v.is_zero() {
        return "0".into();
    }
    // rug counts significant digits in the precision field
    format!("{:.*e}", digits, v)
}

pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:e}")
    }
}

/// JSON number, or null when not finite.
pub fn num(v: f64) -> Json {
    serde_json::Number::from_f64(v).map_or(Json::Null, Json::Number)
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tabular result of one command.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub parameters: BTreeMap<String, Json>,
    /// Top-level JSON fields beyond the rows.
    pub extra: BTreeMap<String, Json>,
    pub provenance: Option<Provenance>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Table { command: command.into(), columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn param(mut self, key: &str, value: impl Into<Json>) -> Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = self.columns.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(|c| c.csv(digits)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, digits: usize) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|row| Json::Object(self.columns.iter().cloned().zip(row.iter().map(|c| c.json(digits))).collect()))
            .collect();
        let mut top = Map::new();
        top.insert("command".into(), json!(self.command));
        top.insert("columns".into(), json!(self.columns));
        top.insert("parameters".into(), Json::Object(self.parameters.clone().into_iter().collect()));
        top.insert("rows".into(), Json::Array(rows));
        if let Some(p) = self.provenance {
            top.insert("provenance".into(), json!({ "bits_used": p.bits_used, "rel_err_bound": num(p.rel_err_bound) }));
        }
        for (k, v) in &self.extra {
            top.insert(k.clone(), v.clone());
        }
        Json::Object(top)
    }
}

/// Pretty JSON with a trailing newline.
pub fn render_json(v: &Json) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_digits() {
        let third = Float::with_val(256, 1) / 3u32;
        let s = format_float(&third, 30);
        assert_eq!(s, "3.33333333333333333333333333333e-1");
        assert_eq!(s.chars().filter(|c| c.is_ascii_digit()).count(), 31);
    }

    #[test]
    fn header_only_csv() {
        let t = Table::new("zeros", &["k", "x_k"]);
        assert_eq!(t.to_csv(30), "k,x_k\n");
    }

    #[test]
    fn json_keys_sorted() {
        let mut t = Table::new("x", &["b", "a"]);
        t.push(vec![Cell::Int(1), Cell::Int(2)]);
        let s = serde_json::to_string(&t.to_json(30)).unwrap();
        assert!(s.contains(r#""rows":[{"a":2,"b":1}]"#), "{s}");
        assert!(s.find("\"columns\"").unwrap() < s.find("\"command\"").unwrap());
    }
}
