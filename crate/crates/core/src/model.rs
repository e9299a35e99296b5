//! Physical parameters of the charger–battery pair and the rates derived from them.
//!
//! All rates are stored in units of the common mode frequency ω. The shared
//! reservoir couples to the collective operator `c = p_a a + p_b b`; the
//! coupled-dissipation ratio `x` rescales `p_a → p_a √x`, `p_b → p_b / √x`
//! and the damping-asymmetry ratio `ξ` rescales the battery's local damping
//! `κ_b → κ_b / ξ²`. Both rescalings happen in [`derive_rates`], never in the
//! stored parameters.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for the `|p_b p_a*| = 1` normalisation check.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub theta: f64,
    /// Coherent coupling. Ignored (overwritten) when `nonreciprocal` is set.
    pub coupling_j: Complex64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma: f64,
    pub p_a: Complex64,
    pub p_b: Complex64,
    pub x_scale: f64,
    pub xi: f64,
    pub nonreciprocal: bool,
}

impl Default for ModelParams {
    /// Symmetric configuration used throughout the charging-dynamics figures:
    /// ε = 0.05, κ_a = κ_b = 0.06, Γ = 0.5, |J| = Γ/2, δ = 0.
    fn default() -> Self {
        Self {
            omega: 1.0,
            delta: 0.0,
            epsilon: 0.05,
            theta: 0.0,
            coupling_j: Complex64::new(0.0, 0.0),
            kappa_a: 0.06,
            kappa_b: 0.06,
            gamma: 0.5,
            p_a: Complex64::new(1.0, 0.0),
            p_b: Complex64::new(1.0, 0.0),
            x_scale: 1.0,
            xi: 1.0,
            nonreciprocal: true,
        }
    }
}

impl ModelParams {
    /// Sets both local damping rates.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa_a = kappa;
        self.kappa_b = kappa;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_asymmetry(mut self, x_scale: f64, xi: f64) -> Self {
        self.x_scale = x_scale;
        self.xi = xi;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite(&'static str),
    Normalization(f64),
    Negative(&'static str),
    NonPositive(&'static str),
    ZeroReservoirAmplitude,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(name) => write!(f, "{name} must be finite"),
            Violation::Normalization(v) => {
                write!(f, "normalization |p_b p_a*| ≠ 1 (got {v})")
            }
            Violation::Negative(name) => write!(f, "{name} must be nonnegative"),
            Violation::NonPositive(name) => write!(f, "{name} must be positive"),
            Violation::ZeroReservoirAmplitude => write!(f, "p_a and p_b must be nonzero"),
        }
    }
}

/// Result of [`validate`]; an empty list of violations means the parameters are usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    Invalid(ValidationReport),
}

pub fn validate(params: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    let reals = [
        ("omega", params.omega),
        ("delta", params.delta),
        ("epsilon", params.epsilon),
        ("theta", params.theta),
        ("kappa_a", params.kappa_a),
        ("kappa_b", params.kappa_b),
        ("gamma", params.gamma),
        ("x_scale", params.x_scale),
        ("xi", params.xi),
    ];
    for (name, v) in reals {
        if !v.is_finite() {
            violations.push(Violation::NonFinite(name));
        }
    }
    let complexes = [
        ("coupling_J", params.coupling_j),
        ("p_a", params.p_a),
        ("p_b", params.p_b),
    ];
    for (name, v) in complexes {
        if !(v.re.is_finite() && v.im.is_finite()) {
            violations.push(Violation::NonFinite(name));
        }
    }

    for (name, v) in [
        ("epsilon", params.epsilon),
        ("gamma", params.gamma),
        ("kappa_a", params.kappa_a),
        ("kappa_b", params.kappa_b),
    ] {
        if v < 0.0 {
            violations.push(Violation::Negative(name));
        }
    }
    for (name, v) in [("x_scale", params.x_scale), ("xi", params.xi)] {
        if v.is_nan() || v <= 0.0 {
            violations.push(Violation::NonPositive(name));
        }
    }
    if params.omega.is_nan() || params.omega <= 0.0 {
        violations.push(Violation::NonPositive("omega"));
    }

    if params.p_a.norm() == 0.0 || params.p_b.norm() == 0.0 {
        violations.push(Violation::ZeroReservoirAmplitude);
    } else {
        let norm = (params.p_b * params.p_a.conj()).norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            violations.push(Violation::Normalization(norm));
        }
    }

    ValidationReport { violations }
}

/// Rates entering the moment equations after the `x` and `ξ` rescalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub gamma: f64,
    /// Γ_a = Γ x |p_a|².
    pub gamma_a: f64,
    /// Γ_b = Γ |p_b|² / x.
    pub gamma_b: f64,
    pub kappa_a: f64,
    /// Effective battery damping κ_b / ξ².
    pub kappa_b: f64,
    /// Λ = Γ_a + κ_a.
    pub lambda_total: f64,
    /// Δ = Γ_b + κ_b.
    pub delta_total: f64,
    /// μ = −p_b p_a*.
    pub mu: Complex64,
    /// −iμΓ/2, the coupling that cancels the battery → charger path.
    pub j_nonreciprocal: Complex64,
    /// The coherent coupling actually in effect.
    pub coupling: Complex64,
    pub nonreciprocal: bool,
}

impl DerivedRates {
    /// Coefficient of ⟨b⟩ in d⟨a⟩/dt: −i(J + iμΓ/2).
    pub fn feedback(&self) -> Complex64 {
        -Complex64::i() * (self.coupling + Complex64::i() * self.mu * (self.gamma / 2.0))
    }

    /// Coefficient of ⟨a⟩ in d⟨b⟩/dt: −i(J* + iμ*Γ/2).
    pub fn feedforward(&self) -> Complex64 {
        -Complex64::i()
            * (self.coupling.conj() + Complex64::i() * self.mu.conj() * (self.gamma / 2.0))
    }

    /// |J|, the scale that converts physical time to the dimensionless `Jt`.
    pub fn coupling_magnitude(&self) -> f64 {
        self.coupling.norm()
    }

    pub fn drive(&self) -> Complex64 {
        Complex64::from_polar(self.epsilon, self.theta)
    }
}

pub fn derive_rates(params: &ModelParams) -> Result<DerivedRates, ModelError> {
    let report = validate(params);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    let gamma_a = params.gamma * params.x_scale * params.p_a.norm_sqr();
    let gamma_b = params.gamma * params.p_b.norm_sqr() / params.x_scale;
    let kappa_b = params.kappa_b / (params.xi * params.xi);
    // μ is unchanged by the √x rescaling of p_a and p_b.
    let mu = -params.p_b * params.p_a.conj();
    let j_nonreciprocal = -Complex64::i() * mu * (params.gamma / 2.0);
    let coupling = if params.nonreciprocal {
        j_nonreciprocal
    } else {
        params.coupling_j
    };
    Ok(DerivedRates {
        omega: params.omega,
        delta: params.delta,
        epsilon: params.epsilon,
        theta: params.theta,
        gamma: params.gamma,
        gamma_a,
        gamma_b,
        kappa_a: params.kappa_a,
        kappa_b,
        lambda_total: gamma_a + params.kappa_a,
        delta_total: gamma_b + kappa_b,
        mu,
        j_nonreciprocal,
        coupling,
        nonreciprocal: params.nonreciprocal,
    })
}

/// Largest drive amplitude for which a steady state exists: Λ/4.
pub fn stability_threshold(rates: &DerivedRates) -> f64 {
    rates.lambda_total / 4.0
}

pub fn is_stable(rates: &DerivedRates) -> bool {
    rates.epsilon < stability_threshold(rates)
}
