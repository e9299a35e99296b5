//! Single-photon-driven reference battery.
//!
//! Same modes, rates and cascaded coupling as the two-photon battery, but the
//! charger is driven linearly: d⟨a⟩/dt gains `−iεe^{iθ}` instead of the
//! pair-creation term. At zero temperature both modes stay coherent, so the
//! battery's energy equals its ergotropy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{evaluate, ratio, MetricsError};
use crate::analytic::{exp_difference, relax};
use crate::dynamics::MomentState;
use crate::model::DerivedRates;
use crate::ode::Rk4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineState {
    pub mean_a: Complex64,
    pub mean_b: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonBaseline {
    pub e_b1: f64,
    pub e_a1: f64,
    /// E_b1 / E_a1, undefined while the charger is empty.
    pub eta_b1: Option<f64>,
}

impl SinglePhotonBaseline {
    pub fn from_state(state: &BaselineState, omega: f64) -> Self {
        let e_b1 = omega * state.mean_b.norm_sqr();
        let e_a1 = omega * state.mean_a.norm_sqr();
        Self {
            e_b1,
            e_a1,
            eta_b1: ratio(e_b1, e_a1),
        }
    }
}

fn check(rates: &DerivedRates) -> Result<(), MetricsError> {
    if !rates.nonreciprocal {
        return Err(MetricsError::Unsupported("the nonreciprocal configuration"));
    }
    if rates.delta != 0.0 {
        return Err(MetricsError::Unsupported("zero detuning"));
    }
    if !(rates.lambda_total > 0.0 && rates.delta_total > 0.0) {
        return Err(MetricsError::Unsupported(
            "positive total damping on both modes",
        ));
    }
    Ok(())
}

/// Closed-form first moments at time `t` (`f64::INFINITY` gives the steady state).
pub fn baseline_state(rates: &DerivedRates, t: f64) -> Result<BaselineState, MetricsError> {
    check(rates)?;
    let half_l = rates.lambda_total / 2.0;
    let half_d = rates.delta_total / 2.0;
    let drive = -Complex64::i() * rates.drive();
    // a(t) = drive · R(Λ/2, t); b obeys b' = −(Δ/2) b + h a.
    let mean_a = drive * relax(half_l, t);
    let mean_b =
        rates.feedforward() * drive * (relax(half_d, t) - exp_difference(half_d, half_l, t))
            / half_l;
    Ok(BaselineState { mean_a, mean_b })
}

/// Fixed-step RK4 integration of the linear first-moment equations from vacuum.
pub fn baseline_trajectory(
    rates: &DerivedRates,
    t_final: f64,
    dt: f64,
) -> Result<Vec<(f64, BaselineState)>, MetricsError> {
    check(rates)?;
    let drive = -Complex64::i() * rates.drive();
    let g = rates.feedback();
    let h = rates.feedforward();
    let (l, d) = (rates.lambda_total, rates.delta_total);
    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let a = Complex64::new(y[0], y[1]);
        let b = Complex64::new(y[2], y[3]);
        let da = -(l / 2.0) * a + g * b + drive;
        let db = -(d / 2.0) * b + h * a;
        dy.copy_from_slice(&[da.re, da.im, db.re, db.im]);
    };
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut y = [0.0; 4];
    let mut rk = Rk4::new(4);
    let mut out = Vec::with_capacity(steps + 1);
    let zero = Complex64::new(0.0, 0.0);
    out.push((
        0.0,
        BaselineState {
            mean_a: zero,
            mean_b: zero,
        },
    ));
    for k in 0..steps {
        rk.step(&mut rhs, k as f64 * dt, &mut y, dt);
        out.push((
            (k + 1) as f64 * dt,
            BaselineState {
                mean_a: Complex64::new(y[0], y[1]),
                mean_b: Complex64::new(y[2], y[3]),
            },
        ));
    }
    Ok(out)
}

pub fn single_photon_baseline(
    rates: &DerivedRates,
    t: f64,
) -> Result<SinglePhotonBaseline, MetricsError> {
    Ok(SinglePhotonBaseline::from_state(
        &baseline_state(rates, t)?,
        rates.omega,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRatios {
    /// E_b / E_b1.
    pub eta_e: Option<f64>,
    /// ε_b / E_b1.
    pub eta_erg: Option<f64>,
    /// (ε_b / E_a) / (E_b1 / E_a1).
    pub chi: Option<f64>,
}

/// Ratios of a two-photon battery state against the baseline at the same instant.
pub fn comparison_ratios(
    state: &MomentState,
    baseline: &SinglePhotonBaseline,
    omega: f64,
) -> Result<ComparisonRatios, MetricsError> {
    let m = evaluate(state, omega)?;
    let chi = match (m.eta_conv, baseline.eta_b1) {
        (Some(num), Some(den)) => ratio(num, den),
        _ => None,
    };
    Ok(ComparisonRatios {
        eta_e: ratio(m.e_b, baseline.e_b1),
        eta_erg: ratio(m.ergotropy, baseline.e_b1),
        chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_rates, ModelParams};

    #[test]
    fn undriven_baseline_is_empty() {
        let r = derive_rates(&ModelParams::default().with_epsilon(0.0)).unwrap();
        for t in [0.0, 1.0, f64::INFINITY] {
            let b = single_photon_baseline(&r, t).unwrap();
            assert_eq!((b.e_a1, b.e_b1, b.eta_b1), (0.0, 0.0, None));
        }
    }

    #[test]
    fn steady_charger_amplitude() {
        let r = derive_rates(&ModelParams::default().with_theta(0.4)).unwrap();
        let s = baseline_state(&r, f64::INFINITY).unwrap();
        let expected = -2.0 * Complex64::i() * Complex64::from_polar(0.05, 0.4) / 0.56;
        assert!((s.mean_a - expected).norm() < 1e-16);
        let b = single_photon_baseline(&r, f64::INFINITY).unwrap();
        assert!((b.e_a1 - 4.0 * 0.05f64.powi(2) / 0.56f64.powi(2)).abs() < 1e-16);
    }

    #[test]
    fn closed_form_matches_integration() {
        for (kappa, x) in [(0.06, 1.0), (0.02, 1.8), (0.2, 0.6)] {
            let p = ModelParams::default()
                .with_kappa(kappa)
                .with_asymmetry(x, 1.0);
            let r = derive_rates(&p).unwrap();
            let traj = baseline_trajectory(&r, 200.0, 0.01).unwrap();
            for (t, s) in traj.iter().step_by(2500) {
                let c = baseline_state(&r, *t).unwrap();
                assert!((c.mean_a - s.mean_a).norm() < 1e-10);
                assert!((c.mean_b - s.mean_b).norm() < 1e-10);
            }
            let (_, end) = traj.last().unwrap();
            let steady = single_photon_baseline(&r, f64::INFINITY).unwrap();
            assert!((steady.e_b1 - end.mean_b.norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn reciprocal_configuration_is_unsupported() {
        let p = ModelParams {
            nonreciprocal: false,
            ..ModelParams::default()
        };
        let r = derive_rates(&p).unwrap();
        assert!(single_photon_baseline(&r, 1.0).is_err());
    }

    #[test]
    fn identical_batteries_give_unit_storage_ratio() {
        let s = MomentState {
            n_b: Complex64::new(0.2, 0.0),
            n_a: Complex64::new(0.1, 0.0),
            ..MomentState::vacuum()
        };
        let b = SinglePhotonBaseline {
            e_b1: 0.2,
            e_a1: 0.1,
            eta_b1: Some(2.0),
        };
        let r = comparison_ratios(&s, &b, 1.0).unwrap();
        assert_eq!(r.eta_e, Some(1.0));
        assert!(r.eta_erg.unwrap().abs() < 1e-15);
    }

    #[test]
    fn ratios_undefined_at_origin() {
        let r = derive_rates(&ModelParams::default()).unwrap();
        let b = single_photon_baseline(&r, 0.0).unwrap();
        let c = comparison_ratios(&MomentState::vacuum(), &b, 1.0).unwrap();
        assert_eq!((c.eta_e, c.eta_erg, c.chi), (None, None, None));
    }
}
