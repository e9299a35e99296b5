//! Command implementations behind the `qbattery` binary.
//!
//! Every command returns its output as a string so the binary only has to
//! route it to a file or stdout, and tests can call commands directly.

pub mod commands;
pub mod svg;
pub mod sweep;

use std::fmt;
use std::path::Path;

use qbattery::model::{derive_rates, is_stable, stability_threshold, DerivedRates, ModelParams};

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

impl Failure {
    pub fn config(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }

    pub fn unstable(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_UNSTABLE,
            message: message.to_string(),
        }
    }

    pub fn oracle(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_ORACLE,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub type CmdResult<T> = Result<T, Failure>;

/// Command-line replacements for individual model fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_a: Option<f64>,
    pub kappa_b: Option<f64>,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    pub x_scale: Option<f64>,
    pub xi: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, p: &mut ModelParams) {
        if let Some(v) = self.kappa {
            p.kappa_a = v;
            p.kappa_b = v;
        }
        let fields: [(Option<f64>, &mut f64); 8] = [
            (self.epsilon, &mut p.epsilon),
            (self.kappa_a, &mut p.kappa_a),
            (self.kappa_b, &mut p.kappa_b),
            (self.gamma, &mut p.gamma),
            (self.theta, &mut p.theta),
            (self.delta, &mut p.delta),
            (self.x_scale, &mut p.x_scale),
            (self.xi, &mut p.xi),
        ];
        for (v, slot) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
    }
}

/// Reads a config file (defaults when absent) and applies overrides.
pub fn load_params(config: Option<&Path>, overrides: &Overrides) -> CmdResult<ModelParams> {
    let mut p = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            ModelParams::from_config_str(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => ModelParams::default(),
    };
    overrides.apply(&mut p);
    Ok(p)
}

pub fn rates_of(p: &ModelParams) -> CmdResult<DerivedRates> {
    derive_rates(p).map_err(Failure::config)
}

pub fn threshold_message(r: &DerivedRates) -> String {
    format!(
        "no stable steady state: epsilon = {} is not below Lambda/4 = {}",
        r.epsilon,
        stability_threshold(r)
    )
}

pub fn require_stable(r: &DerivedRates) -> CmdResult<()> {
    if is_stable(r) {
        Ok(())
    } else {
        Err(Failure::unstable(threshold_message(r)))
    }
}

/// Time grid in units of 1/|J|.
#[derive(Debug, Clone, Copy)]
pub struct JtGrid {
    pub t_final: f64,
    pub dt: f64,
}

impl JtGrid {
    pub fn validate(&self) -> CmdResult<()> {
        if self.t_final > 0.0 && self.dt > 0.0 && self.t_final.is_finite() && self.dt.is_finite() {
            Ok(())
        } else {
            Err(Failure::config(format!(
                "time grid needs positive t_final_Jt and dt_Jt (got {} and {})",
                self.t_final, self.dt
            )))
        }
    }
}

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b`.
pub fn parse_grid(spec: &str) -> CmdResult<Vec<f64>> {
    let bad = || Failure::config(format!("grid {spec:?} is not of the form a:b:n"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_grid("0.5:3:6").unwrap(),
            vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        );
        assert_eq!(parse_grid("2:9:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn kappa_override_sets_both_and_specific_wins() {
        let mut p = ModelParams::default();
        Overrides {
            kappa: Some(0.1),
            kappa_b: Some(0.2),
            ..Overrides::default()
        }
        .apply(&mut p);
        assert_eq!((p.kappa_a, p.kappa_b), (0.1, 0.2));
    }
}
