//! Time-domain closed forms.
//!
//! With the backward path cancelled the charger obeys a closed 2×2 system in
//! (⟨a†a⟩, ⟨aa⟩) with eigen-rates Λ ± 4ε. Each battery moment is then a
//! convolution of the charger solution with an exponential kernel, which
//! `relax`/`exp_difference` evaluate without cancellation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{exp_difference, printed, relax, AnalyticDomain, AnalyticError, Diagnostic};
use crate::dynamics::MomentState;
use crate::metrics::RADICAND_TOL;

/// Real amplitudes of the cascade. Phases are restored in [`assemble`].
#[derive(Debug, Clone, Copy)]
struct Cascade {
    n_a: f64,
    /// ⟨aa⟩ = i e^{iθ} s.
    s: f64,
    /// Projections of the cross moments onto the two charger eigenmodes.
    m: f64,
    w: f64,
    /// Projections of the battery moments; n_b = Γ(M + W).
    big_m: f64,
    big_w: f64,
}

fn cascade(t: f64, dom: &AnalyticDomain) -> Cascade {
    let (eps, gamma) = (dom.epsilon, dom.gamma);
    let (l, d) = (dom.lambda_total, dom.delta_total);
    let lp = l + 4.0 * eps;
    let lm = l - 4.0 * eps;
    let sp = (l + d) / 2.0 + 2.0 * eps;
    let sm = (l + d) / 2.0 - 2.0 * eps;

    let u = -2.0 * eps * relax(lp, t);
    let v = 2.0 * eps * relax(lm, t);

    let m = -(2.0 * eps * gamma / lp) * (relax(sp, t) - exp_difference(sp, lp, t));
    let w = (2.0 * eps * gamma / lm) * (relax(sm, t) - exp_difference(sm, lm, t));

    let battery = |s: f64, k: f64, pre: f64| {
        let direct = (relax(d, t) - exp_difference(d, s, t)) / s;
        let cross = (exp_difference(d, k, t) - exp_difference(d, s, t)) / (s - k);
        pre * (direct - cross)
    };
    let big_m = battery(sp, lp, -2.0 * eps * gamma / lp);
    let big_w = battery(sm, lm, 2.0 * eps * gamma / lm);

    Cascade {
        n_a: (u + v) / 2.0,
        s: (u - v) / 2.0,
        m,
        w,
        big_m,
        big_w,
    }
}

fn assemble(c: &Cascade, dom: &AnalyticDomain) -> MomentState {
    let i = Complex64::i();
    let phase = i * Complex64::from_polar(1.0, dom.theta);
    let mu_c = dom.mu.conj();
    let p = (c.m + c.w) / 2.0;
    let q = (c.m - c.w) / 2.0;
    let n_b = dom.gamma * (c.big_m + c.big_w);
    let r = dom.gamma * (c.big_m - c.big_w);
    MomentState {
        n_a: Complex64::new(c.n_a, 0.0),
        aa: phase * c.s,
        adag_b: mu_c * p,
        ab: mu_c * phase * q,
        n_b: Complex64::new(n_b, 0.0),
        bb: mu_c * mu_c * phase * r,
        ..MomentState::vacuum()
    }
}

fn prepare(t: f64, dom: &AnalyticDomain) -> Result<bool, AnalyticError> {
    dom.check_applicable()?;
    if !(t >= 0.0) {
        return Err(AnalyticError::NotApplicable("a nonnegative time"));
    }
    if t.is_infinite() {
        dom.check_stable()?;
    }
    if dom.epsilon == 0.0 {
        return Ok(false);
    }
    dom.check_degeneracy()?;
    Ok(true)
}

/// All tracked moments at time `t` from vacuum; `t = ∞` gives the steady state.
/// The first moments vanish identically.
pub fn analytic_moments(t: f64, dom: &AnalyticDomain) -> Result<MomentState, AnalyticError> {
    if !prepare(t, dom)? {
        return Ok(MomentState::vacuum());
    }
    Ok(assemble(&cascade(t, dom), dom))
}

/// Factors of the passive-energy radicand, D = x·y, with x = 1 + 4ΓW and
/// y = 1 + 4ΓM.
pub fn radicand_factors(t: f64, dom: &AnalyticDomain) -> Result<(f64, f64), AnalyticError> {
    if !prepare(t, dom)? {
        return Ok((1.0, 1.0));
    }
    let c = cascade(t, dom);
    let g4 = 4.0 * dom.gamma;
    Ok((1.0 + g4 * c.big_w, 1.0 + g4 * c.big_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyErgotropy {
    pub e_b: f64,
    pub ergotropy: f64,
}

pub fn analytic_energy_ergotropy(
    t: f64,
    dom: &AnalyticDomain,
) -> Result<EnergyErgotropy, AnalyticError> {
    let n_b = analytic_moments(t, dom)?.n_b.re;
    let (x, y) = radicand_factors(t, dom)?;
    let d = x * y;
    if d < 1.0 - RADICAND_TOL {
        return Err(AnalyticError::Domain(d));
    }
    let e_b = dom.omega * n_b;
    let passive = dom.omega * ((d.max(1.0)).sqrt() - 1.0) / 2.0;
    Ok(EnergyErgotropy {
        e_b,
        ergotropy: e_b - passive,
    })
}

/// Printed time-domain expressions against the cascade closed form at `t`.
pub fn transient_diagnostics(
    t: f64,
    dom: &AnalyticDomain,
) -> Result<Vec<Diagnostic>, AnalyticError> {
    let s = analytic_moments(t, dom)?;
    let (x, y) = radicand_factors(t, dom)?;
    let mut out = vec![
        Diagnostic::new(
            "charger_occupation_transient",
            printed::charger_occupation(t, dom),
            s.n_a.re,
        ),
        Diagnostic::new(
            "battery_occupation_transient",
            printed::battery_occupation(t, dom),
            s.n_b.re,
        ),
        Diagnostic::new(
            "battery_pair_coherence_magnitude_transient",
            printed::battery_pair_coherence(t, dom).norm(),
            s.bb.norm(),
        ),
        Diagnostic::new(
            "radicand_factor_x_transient",
            printed::radicand_factor_x(t, dom),
            x,
        ),
        Diagnostic::new(
            "radicand_factor_y_transient",
            printed::radicand_factor_y(t, dom),
            y,
        ),
    ];
    if let Ok(e) = analytic_energy_ergotropy(t, dom) {
        out.push(Diagnostic::new(
            "ergotropy_transient",
            printed::transient_ergotropy(t, dom),
            e.ergotropy,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, moment_rhs, IntegrateOptions};
    use crate::metrics::passive_radicand;
    use crate::model::{derive_rates, ModelParams};

    fn domain(p: &ModelParams) -> AnalyticDomain {
        AnalyticDomain::from_rates(&derive_rates(p).unwrap())
    }

    #[test]
    fn vacuum_at_origin() {
        let dom = domain(&ModelParams::default());
        let s = analytic_moments(0.0, &dom).unwrap();
        assert!(s.max_abs() < 1e-300);
        let e = analytic_energy_ergotropy(0.0, &dom).unwrap();
        assert_eq!((e.e_b, e.ergotropy), (0.0, 0.0));
    }

    #[test]
    fn steady_charger_occupation() {
        let dom = domain(&ModelParams::default());
        let s = analytic_moments(f64::INFINITY, &dom).unwrap();
        let expected = 8.0 * 0.0025 / (0.56f64.powi(2) - 16.0 * 0.0025);
        assert!((s.n_a.re - expected).abs() < 1e-15);
        assert!((expected - 0.0731).abs() < 5e-5);
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        for (kappa_b, theta) in [(0.06, 0.0), (0.01, 1.3), (0.3, 4.0)] {
            let p = ModelParams {
                kappa_b,
                ..ModelParams::default().with_theta(theta)
            };
            let rates = derive_rates(&p).unwrap();
            let s = analytic_moments(f64::INFINITY, &AnalyticDomain::from_rates(&rates)).unwrap();
            assert!(moment_rhs(&s, &rates).max_abs() < 1e-14);
        }
    }

    #[test]
    fn tracks_integration_including_pair_coherence() {
        let p = ModelParams::default()
            .with_theta(0.7)
            .with_asymmetry(1.4, 0.8);
        let rates = derive_rates(&p).unwrap();
        let dom = AnalyticDomain::from_rates(&rates);
        let traj = integrate(&rates, &IntegrateOptions::rk4_jt(&rates, 20.0, 1e-3)).unwrap();
        for (t, s) in traj.t.iter().zip(&traj.states).step_by(997) {
            let a = analytic_moments(*t, &dom).unwrap();
            assert!(a.max_abs_diff(s) < 1e-11, "t = {t}");
        }
    }

    #[test]
    fn factors_reproduce_radicand() {
        let dom = domain(&ModelParams::default().with_asymmetry(2.0, 1.5));
        for t in [0.5, 3.0, 40.0, f64::INFINITY] {
            let s = analytic_moments(t, &dom).unwrap();
            let (x, y) = radicand_factors(t, &dom).unwrap();
            assert!((x * y - passive_radicand(&s)).abs() < 1e-13);
        }
    }

    #[test]
    fn unstable_steady_state_is_refused() {
        let dom = domain(&ModelParams::default().with_epsilon(0.15));
        assert!(matches!(
            analytic_moments(f64::INFINITY, &dom),
            Err(AnalyticError::Unstable { .. })
        ));
        assert!(analytic_moments(5.0, &dom).unwrap().n_a.re > 0.0);
    }
}
