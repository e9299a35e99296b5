//! Plain-text `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, keys are the field names of
//! [`ModelParams`]. Complex values are written `re+imj` (either part may be
//! omitted, e.g. `1`, `0.25j`, `-0.5-1e-3j`).

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: cannot parse {value:?} for {key:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

/// One parsed assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits a config text into assignments, preserving order.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: raw.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_string(),
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('j').or_else(|| s.strip_suffix('i')) else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not the leading sign and not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let ch = bytes[k];
        if (ch == b'+' || ch == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Some(Complex64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}j", z.re, -z.im)
    } else {
        format!("{:?}+{:?}j", z.re, z.im)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl ModelParams {
    /// Applies one `key = value` assignment. Returns `Ok(false)` when the key
    /// is not a model field so callers can layer their own keys on top.
    pub fn apply_entry(&mut self, entry: &Entry) -> Result<bool, ConfigError> {
        let bad = || ConfigError::BadValue {
            line: entry.line,
            key: entry.key.clone(),
            value: entry.value.clone(),
        };
        let real = || entry.value.parse::<f64>().map_err(|_| bad());
        let complex = || parse_complex(&entry.value).ok_or_else(bad);
        match entry.key.as_str() {
            "omega" => self.omega = real()?,
            "delta" => self.delta = real()?,
            "epsilon" => self.epsilon = real()?,
            "theta" => self.theta = real()?,
            "coupling_J" | "coupling_j" => self.coupling_j = complex()?,
            "kappa_a" => self.kappa_a = real()?,
            "kappa_b" => self.kappa_b = real()?,
            "kappa" => {
                let k = real()?;
                self.kappa_a = k;
                self.kappa_b = k;
            }
            "gamma" => self.gamma = real()?,
            "p_a" => self.p_a = complex()?,
            "p_b" => self.p_b = complex()?,
            "x_scale" => self.x_scale = real()?,
            "xi" => self.xi = real()?,
            "nonreciprocal" => self.nonreciprocal = parse_bool(&entry.value).ok_or_else(bad)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a complete model configuration; unset keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let mut params = ModelParams::default();
        for entry in parse_entries(text)? {
            if !params.apply_entry(&entry)? {
                return Err(ConfigError::UnknownKey {
                    line: entry.line,
                    key: entry.key,
                });
            }
        }
        Ok(params)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("omega", format!("{:?}", self.omega));
        put("delta", format!("{:?}", self.delta));
        put("epsilon", format!("{:?}", self.epsilon));
        put("theta", format!("{:?}", self.theta));
        put("coupling_J", format_complex(self.coupling_j));
        put("kappa_a", format!("{:?}", self.kappa_a));
        put("kappa_b", format!("{:?}", self.kappa_b));
        put("gamma", format!("{:?}", self.gamma));
        put("p_a", format_complex(self.p_a));
        put("p_b", format_complex(self.p_b));
        put("x_scale", format!("{:?}", self.x_scale));
        put("xi", format!("{:?}", self.xi));
        put("nonreciprocal", self.nonreciprocal.to_string());
        s
    }
}
