//! Closed first- and second-order moment equations of the driven pair.
//!
//! For a quadratic Hamiltonian with linear jump operators the moments
//! ⟨a⟩, ⟨b⟩, ⟨a†a⟩, ⟨aa⟩, ⟨a†b⟩, ⟨ab⟩, ⟨b†b⟩, ⟨bb⟩ obey a closed affine
//! system. Conjugate moments are never stored; ⟨a†⟩ is `mean_a.conj()` and so on.

mod integrate;
mod steady;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DerivedRates;

pub use integrate::{integrate, integrate_from, IntegrateOptions, Method, Trajectory};
pub use steady::{affine_system, steady_state_numeric, AffineSystem};

/// Magnitude above which a run is declared divergent and truncated.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentState {
    pub mean_a: Complex64,
    pub mean_b: Complex64,
    pub n_a: Complex64,
    pub aa: Complex64,
    pub adag_b: Complex64,
    pub ab: Complex64,
    pub n_b: Complex64,
    pub bb: Complex64,
}

/// Column labels in storage order, shared by the CSV writers.
pub const MOMENT_NAMES: [&str; 8] = ["mean_a", "mean_b", "n_a", "aa", "adag_b", "ab", "n_b", "bb"];

impl MomentState {
    pub const REAL_DIM: usize = 16;

    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn as_array(&self) -> [Complex64; 8] {
        [
            self.mean_a,
            self.mean_b,
            self.n_a,
            self.aa,
            self.adag_b,
            self.ab,
            self.n_b,
            self.bb,
        ]
    }

    pub fn from_array(m: [Complex64; 8]) -> Self {
        Self {
            mean_a: m[0],
            mean_b: m[1],
            n_a: m[2],
            aa: m[3],
            adag_b: m[4],
            ab: m[5],
            n_b: m[6],
            bb: m[7],
        }
    }

    /// Interleaved (re, im) layout of all eight moments.
    pub fn to_real(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (k, z) in self.as_array().iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out
    }

    pub fn from_real(v: &[f64]) -> Self {
        let mut m = [Complex64::new(0.0, 0.0); 8];
        for (k, z) in m.iter_mut().enumerate() {
            *z = Complex64::new(v[2 * k], v[2 * k + 1]);
        }
        Self::from_array(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.as_array()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Componentwise difference, ∞-norm over all complex entries.
    pub fn max_abs_diff(&self, other: &MomentState) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Time derivative of every tracked moment.
pub fn moment_rhs(state: &MomentState, rates: &DerivedRates) -> MomentState {
    let i = Complex64::i();
    let lam = rates.lambda_total;
    let del = rates.delta_total;
    let det = rates.delta;
    let drive = rates.drive();
    let g = rates.feedback();
    let h = rates.feedforward();
    let MomentState {
        mean_a,
        mean_b,
        n_a,
        aa,
        adag_b,
        ab,
        n_b,
        bb,
    } = *state;

    let d_mean_a = -(lam / 2.0 + i * det) * mean_a + g * mean_b - 2.0 * i * drive * mean_a.conj();
    let d_mean_b = -(del / 2.0 + i * det) * mean_b + h * mean_a;

    let d_n_a = -lam * n_a + 2.0 * (2.0 * i * drive.conj() * aa).re + 2.0 * (g * adag_b).re;
    let d_aa = -(lam + 2.0 * i * det) * aa - 4.0 * i * drive * n_a - 2.0 * i * drive + 2.0 * g * ab;
    let d_adag_b =
        -((lam + del) / 2.0) * adag_b + g.conj() * n_b + 2.0 * i * drive.conj() * ab + h * n_a;
    let d_ab =
        -((lam + del) / 2.0 + 2.0 * i * det) * ab - 2.0 * i * drive * adag_b + h * aa + g * bb;
    let d_n_b = -del * n_b + 2.0 * (h.conj() * adag_b).re;
    let d_bb = -(del + 2.0 * i * det) * bb + 2.0 * h * ab;

    MomentState {
        mean_a: d_mean_a,
        mean_b: d_mean_b,
        n_a: d_n_a,
        aa: d_aa,
        adag_b: d_adag_b,
        ab: d_ab,
        n_b: d_n_b,
        bb: d_bb,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error(
        "time step and final time must be positive and finite (dt = {dt}, t_final = {t_final})"
    )]
    BadGrid { dt: f64, t_final: f64 },
    #[error(
        "no stable steady state: epsilon = {epsilon} is not below the threshold Λ/4 = {threshold}"
    )]
    Unstable { epsilon: f64, threshold: f64 },
    #[error("steady-state system is singular (degenerate parameters)")]
    Singular,
    #[error("steady-state residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("adaptive integrator exceeded its step budget at t = {t}")]
    StepLimit { t: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_rates, ModelParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn undriven_vacuum_is_stationary() {
        let r = derive_rates(&ModelParams::default().with_epsilon(0.0)).unwrap();
        assert_eq!(
            moment_rhs(&MomentState::vacuum(), &r),
            MomentState::vacuum()
        );
    }

    #[test]
    fn vacuum_only_feeds_pair_coherence() {
        let r = derive_rates(&ModelParams::default()).unwrap();
        let d = moment_rhs(&MomentState::vacuum(), &r);
        let expected = MomentState {
            aa: c(0.0, -0.1),
            ..MomentState::vacuum()
        };
        assert!(d.max_abs_diff(&expected) < 1e-16, "{d:?}");
    }

    #[test]
    fn charger_ignores_battery_when_cascaded() {
        let r = derive_rates(&ModelParams::default()).unwrap();
        let base = MomentState {
            mean_a: c(0.1, 0.2),
            n_a: c(0.3, 0.0),
            aa: c(-0.05, 0.1),
            ..MomentState::vacuum()
        };
        let perturbed = MomentState {
            mean_b: c(0.7, -0.4),
            n_b: c(1.2, 0.0),
            bb: c(0.3, 0.3),
            adag_b: c(0.01, 0.02),
            ab: c(-0.2, 0.5),
            ..base
        };
        let d0 = moment_rhs(&base, &r);
        let d1 = moment_rhs(&perturbed, &r);
        assert_eq!(d0.mean_a, d1.mean_a);
        assert_eq!(d0.n_a, d1.n_a);
        assert_eq!(d0.aa, d1.aa);
    }

    #[test]
    fn real_layout_round_trips() {
        let s = MomentState {
            mean_a: c(1.0, 2.0),
            bb: c(-3.0, 4.0),
            ab: c(5.0, -6.0),
            ..MomentState::vacuum()
        };
        assert_eq!(MomentState::from_real(&s.to_real()), s);
    }
}
