//! Battery figures of merit computed from moments.
//!
//! The passive energy uses the Gaussian-state radicand
//! `D = (1 + 2⟨b†b⟩ − 2|⟨b⟩|²)² − 4|⟨bb⟩ − ⟨b⟩²|²`; the passive state of a
//! single-mode Gaussian state is thermal with mean occupation (√D − 1)/2.

mod baseline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{MomentState, Trajectory};

pub use baseline::{
    baseline_state, baseline_trajectory, comparison_ratios, single_photon_baseline, BaselineState,
    ComparisonRatios, SinglePhotonBaseline,
};

/// Allowed shortfall of `D` below one before a state is called unphysical.
pub const RADICAND_TOL: f64 = 1e-9;
/// Allowed imaginary part of ⟨b†b⟩ relative to max(1, |⟨b†b⟩|).
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("⟨b†b⟩ has imaginary part {0:e}; state is not physical")]
    ImaginaryOccupation(f64),
    #[error("passive-energy radicand D = {0} is below 1; moments are unphysical")]
    Unphysical(f64),
    #[error("power needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("power needs a uniform time grid")]
    NonUniformGrid,
    #[error("single-photon baseline needs {0}")]
    Unsupported(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryMetrics {
    pub e_b: f64,
    pub e_b_passive: f64,
    pub ergotropy: f64,
    pub e_a: f64,
    /// dε_b/dt; only available on trajectories.
    pub power: Option<f64>,
    /// ε_b / E_b, undefined when E_b = 0.
    pub eta_util: Option<f64>,
    /// ε_b / E_a, undefined when E_a = 0.
    pub eta_conv: Option<f64>,
}

pub fn passive_radicand(state: &MomentState) -> f64 {
    let b = state.mean_b;
    let pop = 1.0 + 2.0 * state.n_b.re - 2.0 * b.norm_sqr();
    let anomalous = state.bb - b * b;
    pop * pop - 4.0 * anomalous.norm_sqr()
}

pub fn battery_energy(state: &MomentState, omega: f64) -> Result<f64, MetricsError> {
    let n_b = state.n_b;
    if n_b.im.abs() > IMAG_TOL * n_b.re.abs().max(1.0) {
        return Err(MetricsError::ImaginaryOccupation(n_b.im));
    }
    Ok(omega * n_b.re)
}

pub fn charger_energy(state: &MomentState, omega: f64) -> f64 {
    omega * state.n_a.re
}

pub fn passive_energy(state: &MomentState, omega: f64) -> Result<f64, MetricsError> {
    let d = passive_radicand(state);
    if !(d >= 1.0 - RADICAND_TOL) {
        return Err(MetricsError::Unphysical(d));
    }
    if d <= 1.0 {
        return Ok(0.0);
    }
    Ok(omega * (d.sqrt() - 1.0) / 2.0)
}

pub fn ergotropy(state: &MomentState, omega: f64) -> Result<f64, MetricsError> {
    Ok(battery_energy(state, omega)? - passive_energy(state, omega)?)
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRatios {
    pub eta_util: Option<f64>,
    pub eta_conv: Option<f64>,
}

pub fn efficiency_ratios(
    state: &MomentState,
    omega: f64,
) -> Result<EfficiencyRatios, MetricsError> {
    let m = evaluate(state, omega)?;
    Ok(EfficiencyRatios {
        eta_util: m.eta_util,
        eta_conv: m.eta_conv,
    })
}

/// All instantaneous metrics of one state (power left unset).
pub fn evaluate(state: &MomentState, omega: f64) -> Result<BatteryMetrics, MetricsError> {
    let e_b = battery_energy(state, omega)?;
    let e_b_passive = passive_energy(state, omega)?;
    let ergotropy = e_b - e_b_passive;
    let e_a = charger_energy(state, omega);
    Ok(BatteryMetrics {
        e_b,
        e_b_passive,
        ergotropy,
        e_a,
        power: None,
        eta_util: ratio(ergotropy, e_b),
        eta_conv: ratio(ergotropy, e_a),
    })
}

/// Finite-difference derivative of `values` sampled on the uniform grid `t`:
/// central differences inside, second-order one-sided at the ends.
pub fn time_derivative(t: &[f64], values: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let n = values.len();
    if n < 3 || t.len() != n {
        return Err(MetricsError::TooFewSamples(n.min(t.len())));
    }
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let uniform = t
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
    if !(h > 0.0) || !uniform {
        return Err(MetricsError::NonUniformGrid);
    }
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for k in 1..n - 1 {
        d[k] = (values[k + 1] - values[k - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    Ok(d)
}

/// Instantaneous ergotropy power dε_b/dt along a trajectory (units ω²).
pub fn ergotropy_power(traj: &Trajectory, omega: f64) -> Result<Vec<f64>, MetricsError> {
    let erg = traj
        .states
        .iter()
        .map(|s| ergotropy(s, omega))
        .collect::<Result<Vec<_>, _>>()?;
    time_derivative(&traj.t, &erg)
}

/// Metrics at every sample of a trajectory, power included.
pub fn trajectory_metrics(
    traj: &Trajectory,
    omega: f64,
) -> Result<Vec<BatteryMetrics>, MetricsError> {
    let mut out = traj
        .states
        .iter()
        .map(|s| evaluate(s, omega))
        .collect::<Result<Vec<_>, _>>()?;
    if out.len() >= 3 {
        let erg: Vec<f64> = out.iter().map(|m| m.ergotropy).collect();
        let power = time_derivative(&traj.t, &erg)?;
        for (m, p) in out.iter_mut().zip(power) {
            m.power = Some(p);
        }
    }
    Ok(out)
}

pub fn trapezoid(t: &[f64], values: &[f64]) -> f64 {
    t.windows(2)
        .zip(values.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] + vw[1]))
        .sum()
}

/// First `Jt` after the power maximum at which the power per unit `Jt`
/// (i.e. `P / |J|`) falls below `threshold`.
pub fn power_settling_jt(
    jt: &[f64],
    power: &[f64],
    time_scale: f64,
    threshold: f64,
) -> Option<f64> {
    let peak = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    (peak..power.len())
        .find(|&k| power[k] / time_scale < threshold)
        .map(|k| jt[k])
}
