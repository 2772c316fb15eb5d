//! Plain-text model files.
//!
//! ```text
//! MODEL <kind> v1
//! <key> <value>            hyperparameters, one per line
//! @<name> <v> <v> ...      parameter vectors, 17 significant digits
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub(crate) struct ModelText {
    hyper: Vec<(String, String)>,
    params: Vec<(String, Vec<f64>)>,
}

impl ModelText {
    pub(crate) fn hyper(&mut self, key: &str, value: impl ToString) {
        self.hyper.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn param(&mut self, name: &str, values: &[f64]) {
        self.params.push((name.to_string(), values.to_vec()));
    }

    pub(crate) fn render(&self, kind: &str) -> String {
        let mut out = format!("MODEL {kind} v1\n");
        for (k, v) in &self.hyper {
            let _ = writeln!(out, "{k} {v}");
        }
        for (name, values) in &self.params {
            out.push('@');
            out.push_str(name);
            for v in values {
                let _ = write!(out, " {v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub(crate) fn parse(text: &str, kind: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidModel("empty model file".into()))?;
        let expected = format!("MODEL {kind} v1");
        if header.trim() != expected {
            return Err(Error::InvalidModel(format!(
                "expected header `{expected}`, found `{}`",
                header.trim()
            )));
        }
        let mut m = ModelText::default();
        for line in lines {
            let line = line.trim();
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            if let Some(name) = key.strip_prefix('@') {
                let values = rest
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::InvalidModel(format!("bad number `{t}` in @{name}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                m.params.push((name.to_string(), values));
            } else {
                m.hyper.push((key.to_string(), rest.trim().to_string()));
            }
        }
        Ok(m)
    }

    pub(crate) fn get_str(&self, key: &str) -> Result<&str> {
        self.hyper
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::InvalidModel(format!("missing key `{key}`")))
    }

    pub(crate) fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let s = self.get_str(key)?;
        s.parse()
            .map_err(|_| Error::InvalidModel(format!("bad value `{s}` for `{key}`")))
    }

    pub(crate) fn get_param(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        let values = self
            .params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::InvalidModel(format!("missing parameter @{name}")))?;
        if values.len() != len {
            return Err(Error::InvalidModel(format!(
                "@{name} has {} values, expected {len}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "@{name} contains non-finite values"
            )));
        }
        Ok(values)
    }
}
