use serde::{Deserialize, Serialize};

use super::{moment_rhs, DynamicsError, MomentState, DIVERGENCE_LIMIT};
use crate::model::DerivedRates;
use crate::ode::{dopri45, AdaptiveOptions, Rk4};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Fixed-step classical RK4 with step `dt`.
    Rk4,
    /// Dormand–Prince 5(4) between samples, relative tolerance `rtol`.
    Adaptive { rtol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub t_final: f64,
    /// Sample spacing; also the step size for [`Method::Rk4`].
    pub dt: f64,
    pub method: Method,
}

impl IntegrateOptions {
    pub fn rk4(t_final: f64, dt: f64) -> Self {
        Self {
            t_final,
            dt,
            method: Method::Rk4,
        }
    }

    /// Options expressed in the dimensionless time `Jt`.
    pub fn rk4_jt(rates: &DerivedRates, t_final_jt: f64, dt_jt: f64) -> Self {
        let j = rates.coupling_magnitude();
        Self::rk4(t_final_jt / j, dt_jt / j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<MomentState>,
    /// Set when a sample exceeded [`DIVERGENCE_LIMIT`] or went non-finite;
    /// the offending sample is not stored.
    pub diverged: bool,
    /// |J|, used to report `Jt`.
    pub time_scale: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn jt(&self) -> Vec<f64> {
        self.t.iter().map(|t| t * self.time_scale).collect()
    }

    pub fn last(&self) -> Option<&MomentState> {
        self.states.last()
    }
}

fn sample_count(opts: &IntegrateOptions) -> Result<usize, DynamicsError> {
    let ok = opts.dt.is_finite() && opts.t_final.is_finite() && opts.dt > 0.0 && opts.t_final > 0.0;
    if !ok {
        return Err(DynamicsError::BadGrid {
            dt: opts.dt,
            t_final: opts.t_final,
        });
    }
    Ok((opts.t_final / opts.dt - 1e-9).ceil() as usize)
}

/// Integrates from the all-zero (vacuum) moments.
pub fn integrate(
    rates: &DerivedRates,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    integrate_from(rates, MomentState::vacuum(), opts)
}

pub fn integrate_from(
    rates: &DerivedRates,
    initial: MomentState,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    let steps = sample_count(opts)?;
    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    t.push(0.0);
    states.push(initial);

    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = moment_rhs(&MomentState::from_real(y), rates);
        dy.copy_from_slice(&d.to_real());
    };
    let mut y = initial.to_real();
    let mut rk = Rk4::new(MomentState::REAL_DIM);
    let mut h_adapt = opts.dt;
    let mut diverged = false;

    for k in 0..steps {
        let t0 = k as f64 * opts.dt;
        let t1 = (k + 1) as f64 * opts.dt;
        match opts.method {
            Method::Rk4 => rk.step(&mut rhs, t0, &mut y, t1 - t0),
            Method::Adaptive { rtol } => {
                let ao = AdaptiveOptions {
                    rtol,
                    ..AdaptiveOptions::default()
                };
                dopri45(&mut rhs, t0, t1, &mut y, &mut h_adapt, &ao)
                    .map_err(|_| DynamicsError::StepLimit { t: t0 })?;
            }
        }
        let s = MomentState::from_real(&y);
        if !s.is_finite() || s.max_abs() > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
        t.push(t1);
        states.push(s);
    }

    Ok(Trajectory {
        t,
        states,
        diverged,
        time_scale: rates.coupling_magnitude(),
    })
}
