//! Line-delimited structured records.
//!
//! Each record is one JSON object per line with fields in insertion order.
//! The first two fields are always `schema` and `record`. Floats are written
//! with 17 significant digits; non-finite values become `null`.

use std::fmt::Write as _;

pub const SCHEMA: &str = "qstrength/1";

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub struct Record {
    fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self {
            fields: vec![
                ("schema".into(), string(SCHEMA)),
                ("record".into(), string(kind)),
            ],
        }
    }

    fn push(mut self, key: &str, value: String) -> Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn str(self, key: &str, value: &str) -> Self {
        self.push(key, string(value))
    }

    pub fn opt_str(self, key: &str, value: Option<&str>) -> Self {
        match value {
            Some(v) => self.str(key, v),
            None => self.push(key, "null".into()),
        }
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.push(key, float(value))
    }

    pub fn int(self, key: &str, value: u64) -> Self {
        self.push(key, value.to_string())
    }

    pub fn bool(self, key: &str, value: bool) -> Self {
        self.push(key, value.to_string())
    }

    pub fn nums(self, key: &str, values: &[f64]) -> Self {
        let body: Vec<String> = values.iter().map(|&v| float(v)).collect();
        self.push(key, format!("[{}]", body.join(",")))
    }

    pub fn ints(self, key: &str, values: &[u64]) -> Self {
        let body: Vec<String> = values.iter().map(u64::to_string).collect();
        self.push(key, format!("[{}]", body.join(",")))
    }

    pub fn line(&self) -> String {
        let mut out = String::from("{");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}:{}", string(k), v);
        }
        out.push('}');
        out
    }
}
