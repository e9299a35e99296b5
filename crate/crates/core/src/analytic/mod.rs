//! Closed-form solutions of the moment equations at zero detuning under the
//! nonreciprocal coupling, plus transcriptions of the published expressions
//! so they can be compared against numerics.

mod cascade;
pub mod printed;
mod steady;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::metrics::MetricsError;
use crate::model::DerivedRates;

pub use cascade::{
    analytic_energy_ergotropy, analytic_moments, radicand_factors, transient_diagnostics,
    EnergyErgotropy,
};
pub use steady::{
    correlator_diagnostics, steady_asymmetric, steady_correlators, steady_symmetric, SteadyReport,
    SYMMETRY_TOL,
};

/// Distance from a removable singularity below which closed forms are refused.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Relative agreement required for a printed formula to count as matching.
pub const MATCH_RTOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("closed forms need {0}")]
    NotApplicable(&'static str),
    #[error("degenerate parameters: {what} = {value:e} is within {DEGENERACY_TOL:e} of zero; integrate the moment equations instead")]
    Degenerate { what: &'static str, value: f64 },
    #[error("no stable steady state: epsilon = {epsilon} >= Lambda/4 = {threshold}")]
    Unstable { epsilon: f64, threshold: f64 },
    #[error("symmetric formulas need Lambda = Delta (got {lambda} and {delta})")]
    Asymmetric { lambda: f64, delta: f64 },
    #[error("radicand x(t)·y(t) = {0:e} is negative")]
    Domain(f64),
    #[error(transparent)]
    Numeric(#[from] DynamicsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// The subset of rates the closed forms depend on, with applicability flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDomain {
    pub omega: f64,
    pub lambda_total: f64,
    pub delta_total: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub mu: Complex64,
    pub delta_zero: bool,
    pub nonreciprocal: bool,
}

impl AnalyticDomain {
    pub fn from_rates(rates: &DerivedRates) -> Self {
        Self {
            omega: rates.omega,
            lambda_total: rates.lambda_total,
            delta_total: rates.delta_total,
            gamma: rates.gamma,
            epsilon: rates.epsilon,
            theta: rates.theta,
            mu: rates.mu,
            delta_zero: rates.delta == 0.0,
            nonreciprocal: rates.nonreciprocal,
        }
    }

    pub fn check_applicable(&self) -> Result<(), AnalyticError> {
        if !self.delta_zero {
            return Err(AnalyticError::NotApplicable("zero detuning"));
        }
        if !self.nonreciprocal {
            return Err(AnalyticError::NotApplicable("the nonreciprocal coupling"));
        }
        Ok(())
    }

    /// Rejects parameters sitting on a removable singularity of the closed forms.
    pub fn check_degeneracy(&self) -> Result<(), AnalyticError> {
        let (e4, l, d) = (4.0 * self.epsilon, self.lambda_total, self.delta_total);
        let guards = [
            ("4ε − Λ", e4 - l),
            ("Δ − Λ + 4ε", d - l + e4),
            ("Δ − Λ − 4ε", d - l - e4),
            ("Δ + Λ + 4ε", d + l + e4),
            ("Δ + Λ − 4ε", d + l - e4),
            ("Δ", d),
            ("Λ² − 16ε²", l * l - e4 * e4),
        ];
        for (what, value) in guards {
            if value.abs() < DEGENERACY_TOL {
                return Err(AnalyticError::Degenerate { what, value });
            }
        }
        Ok(())
    }

    pub fn check_stable(&self) -> Result<(), AnalyticError> {
        let threshold = self.lambda_total / 4.0;
        if self.epsilon >= threshold {
            return Err(AnalyticError::Unstable {
                epsilon: self.epsilon,
                threshold,
            });
        }
        Ok(())
    }
}

/// `−expm1(−z)/z`, continuous through `z = 0`.
fn phi(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 − e^{−kt})/k`, the response of `ẏ = −ky + 1` from `y(0) = 0`.
/// Finite at `k = 0`; `t = ∞` gives `1/k` for `k > 0`.
pub fn relax(k: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return if k > 0.0 { 1.0 / k } else { f64::INFINITY };
    }
    t * phi(k * t)
}

/// `(e^{−lt} − e^{−kt})/(k − l)`, symmetric in `k` and `l` and finite at `k = l`.
pub fn exp_difference(k: f64, l: f64, t: f64) -> f64 {
    let low = k.min(l);
    if t.is_infinite() {
        return if low > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (-low * t).exp() * t * phi((k - l).abs() * t)
}

/// One printed expression evaluated next to the value it should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub formula_id: String,
    /// `None` when the printed expression is undefined (e.g. a negative radicand).
    pub printed_value: Option<f64>,
    pub oracle_value: f64,
    pub abs_diff: Option<f64>,
    pub matches: bool,
}

impl Diagnostic {
    pub fn new(formula_id: &str, printed_value: f64, oracle_value: f64) -> Self {
        let printed = printed_value.is_finite().then_some(printed_value);
        let abs_diff = printed.map(|p| (p - oracle_value).abs());
        let matches = abs_diff.is_some_and(|d| d <= MATCH_RTOL * oracle_value.abs().max(1e-12));
        Self {
            formula_id: formula_id.to_string(),
            printed_value: printed,
            oracle_value,
            abs_diff,
            matches,
        }
    }
}
