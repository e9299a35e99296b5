//! Literal transcriptions of published closed forms.
//!
//! These are kept verbatim, including their mistakes, so that the diagnostics
//! can say which printing agrees with the numerics. Library code computes
//! physical results with [`super::analytic_moments`], not with these.

use num_complex::Complex64;

use super::AnalyticDomain;
use crate::dynamics::MomentState;

/// `e^{−rate·t}`, with `t = ∞` mapped to 0 for decaying terms.
fn decay(rate: f64, t: f64) -> f64 {
    if t.is_infinite() && rate > 0.0 {
        0.0
    } else {
        (-rate * t).exp()
    }
}

struct Sym {
    e: f64,
    l: f64,
    d: f64,
    g2: f64,
}

fn sym(dom: &AnalyticDomain) -> Sym {
    Sym {
        e: dom.epsilon,
        l: dom.lambda_total,
        d: dom.delta_total,
        g2: dom.gamma * dom.gamma,
    }
}

/// Charger occupation ⟨a†a⟩(t).
pub fn charger_occupation(t: f64, dom: &AnalyticDomain) -> f64 {
    let Sym { e, l, .. } = sym(dom);
    decay(l - 4.0 * e, t) * e / (4.0 * e - l)
        + 8.0 * e * e / (l * l - 16.0 * e * e)
        + decay(4.0 * e + l, t) * e / (4.0 * e + l)
}

/// Battery occupation ⟨b†b⟩(t).
pub fn battery_occupation(t: f64, dom: &AnalyticDomain) -> f64 {
    let Sym { e, l, d, g2 } = sym(dom);
    let dm = d - l;
    let dp4 = d + 4.0 * e - l;
    let lp4 = 4.0 * e + l - d;
    64.0 * decay(d, t) * g2 * e * e * dm / (d * (dm * dm - 16.0 * e * e).powi(2))
        + 4.0 * decay(l - 4.0 * e, t) * g2 * e / ((4.0 * e - l) * dp4 * dp4)
        + 16.0 * decay((d - 4.0 * e + l) / 2.0, t) * g2 * e / (dp4 * dp4 * (d - 4.0 * e + l))
        + 4.0 * decay(4.0 * e + l, t) * g2 * e / ((4.0 * e + l) * lp4 * lp4)
        - 16.0 * decay((d + 4.0 * e + l) / 2.0, t) * g2 * e / (lp4 * lp4 * (d + 4.0 * e + l))
        - 32.0 * g2 * e * e * (d + 2.0 * l)
            / (d * (16.0 * e * e - l * l) * ((d + l).powi(2) - 16.0 * e * e))
}

/// Battery pair coherence ⟨bb⟩(t), with its printed phase factor e^{−iθ}.
pub fn battery_pair_coherence(t: f64, dom: &AnalyticDomain) -> Complex64 {
    let Sym { e, l, d, g2 } = sym(dom);
    let dm = d - l;
    let dp4 = d + 4.0 * e - l;
    let lp4 = 4.0 * e + l - d;
    let re = 8.0 * g2 * e * (16.0 * e * e + l * (d + l))
        / (d * ((d + l).powi(2) - 16.0 * e * e) * (l * l - 16.0 * e * e))
        - 8.0 * decay(d, t) * g2 * e * (16.0 * e * e + dm * dm)
            / (d * (dm * dm - 16.0 * e * e).powi(2))
        - 4.0 * decay(l - 4.0 * e, t) * g2 * e / (dp4 * dp4 * (d + 4.0 * e))
        + 16.0 * decay((d - 4.0 * e + l) / 2.0, t) * g2 * e / (dp4 * dp4 * (d - 4.0 * e + l))
        - 4.0 * decay(4.0 * e + l, t) * g2 * e / (lp4 * lp4 * (4.0 * e + l))
        + 16.0 * decay((d + 4.0 * e + l) / 2.0, t) * g2 * e / (lp4 * lp4 * (d + 4.0 * e + l));
    Complex64::i() * Complex64::from_polar(1.0, -dom.theta) * re
}

/// First factor of the passive-energy radicand.
pub fn radicand_factor_x(t: f64, dom: &AnalyticDomain) -> f64 {
    let Sym { e, l, d, g2 } = sym(dom);
    let dp4 = d + 4.0 * e - l;
    1.0 - 16.0 * decay(d, t) * g2 * e / (d * dp4 * dp4)
        + 16.0 * decay(d - 4.0 * e, t) * g2 * e / (d * (4.0 * e - l) * dp4 * dp4)
        - 16.0 * g2 * e / (d * (4.0 * e - l) * (d - 4.0 * e + l))
        + 64.0 * decay((d - 4.0 * e + l) / 2.0, t) * g2 * e / (dp4 * dp4 * (d - 4.0 * e + l))
}

/// Second factor of the passive-energy radicand.
pub fn radicand_factor_y(t: f64, dom: &AnalyticDomain) -> f64 {
    let Sym { e, l, d, g2 } = sym(dom);
    let lp4 = 4.0 * e + l - d;
    1.0 + 16.0 * decay(d, t) * g2 * e / (d * lp4 * lp4) - 16.0 * g2 * e / (d * (4.0 * e + l) * lp4)
        + 16.0 * decay(4.0 * e + l, t) * g2 * e / ((4.0 * e + l) * lp4 * lp4)
        - 64.0 * decay((d + 4.0 * e + l) / 2.0, t) * g2 * e / (lp4 * lp4 * (d + 4.0 * e + l))
}

/// Time-domain ergotropy built from the printed occupation and radicand factors.
/// NaN when the printed radicand is negative.
pub fn transient_ergotropy(t: f64, dom: &AnalyticDomain) -> f64 {
    let xy = radicand_factor_x(t, dom) * radicand_factor_y(t, dom);
    dom.omega * (battery_occupation(t, dom) - (xy.sqrt() - 1.0) / 2.0)
}

fn symmetric_denominator(gamma: f64, eps: f64, lambda: f64) -> (f64, f64, f64) {
    let (e2, l2) = (eps * eps, lambda * lambda);
    let den = 64.0 * e2 * e2 - 20.0 * e2 * l2 + l2 * l2;
    (gamma * gamma * e2, den, l2)
}

/// Steady battery energy per ω for Λ = Δ.
pub fn symmetric_energy(gamma: f64, eps: f64, lambda: f64) -> f64 {
    let (g2e2, den, _) = symmetric_denominator(gamma, eps, lambda);
    24.0 * g2e2 / den
}

/// Steady ergotropy per ω for Λ = Δ, the version whose radicand denominator
/// is quartic in Λ.
pub fn symmetric_ergotropy_quartic(gamma: f64, eps: f64, lambda: f64) -> f64 {
    let (g2e2, den, l2) = symmetric_denominator(gamma, eps, lambda);
    let (e2, g2) = (eps * eps, gamma * gamma);
    let num = 32.0 * e2 * (3.0 * g2 + 2.0 * e2) * l2 - 64.0 * g2 * g2 * e2 - 20.0 * e2 * l2 * l2
        + l2 * l2 * l2;
    24.0 * g2e2 / den + 0.5 - 0.5 * (num / den).sqrt()
}

/// Steady ergotropy per ω for Λ = Δ, the version whose radicand denominator
/// is sextic in Λ.
pub fn symmetric_ergotropy_sextic(gamma: f64, eps: f64, lambda: f64) -> f64 {
    let (g2e2, den, l2) = symmetric_denominator(gamma, eps, lambda);
    let (e2, g2) = (eps * eps, gamma * gamma);
    let l4 = l2 * l2;
    let num =
        -64.0 * g2 * g2 * e2 + 96.0 * g2 * e2 * l2 + 64.0 * e2 * e2 * l2 - 2.0 * e2 * l4 + l4 * l2;
    let rden = 64.0 * e2 * e2 * l2 - 2.0 * e2 * l4 + l4 * l2;
    24.0 * g2e2 / den - 0.5 * (-1.0 + (num / rden).sqrt())
}

/// Steady battery energy under the (x, ξ) rescaling with κ_b = κ_a before
/// rescaling. The published ergotropy expression is the same function.
pub fn asymmetric_energy(gamma: f64, eps: f64, kappa_a: f64, x: f64, xi: f64) -> f64 {
    let lam = x * gamma + kappa_a;
    let tot = gamma / x + lam + kappa_a / (xi * xi);
    let e2 = eps * eps;
    32.0 * gamma * gamma * e2 * (gamma / x + 2.0 * lam + kappa_a / (xi * xi))
        / (lam * (lam * lam - 16.0 * e2) * (tot * tot - 16.0 * e2))
}

/// Steady correlators as printed, with the listed conjugate entries
/// converted to the stored moments.
pub fn steady_correlators(dom: &AnalyticDomain) -> MomentState {
    let Sym { e, l, d, g2 } = sym(dom);
    let g = dom.gamma;
    let mu = dom.mu;
    let i = Complex64::i();
    let th = Complex64::from_polar(1.0, dom.theta);
    let th_c = th.conj();
    let (e2, l2) = (e * e, l * l);
    let pair = (d - 4.0 * e + l) * (d + 4.0 * e + l);
    let n_a = 8.0 * e2 / (l2 - 16.0 * e2);
    let n_b = 32.0 * g2 * e2 * (d + 2.0 * l) * mu.norm_sqr() / (d * pair * (l2 - 16.0 * e2));
    let adag_adag = 2.0 * i * th * e * l / (l2 - 16.0 * e2);
    let bdag_bdag = -8.0 * i * th_c * g2 * e * (16.0 * e2 + l * (d + l)) * mu * mu
        / (d * pair * (16.0 * e2 - l2));
    let cross = (16.0 * e2 - l2) * (16.0 * e2 - (d + l).powi(2));
    let adag_b = 16.0 * g * e2 * (d + 2.0 * l) * mu.conj() / cross;
    let adag_bdag = 4.0 * i * th_c * g * e * (16.0 * e2 + d * l + l2) * mu / cross;
    MomentState {
        n_a: Complex64::new(n_a, 0.0),
        aa: adag_adag.conj(),
        adag_b,
        ab: adag_bdag.conj(),
        n_b: Complex64::new(n_b, 0.0),
        bb: bdag_bdag.conj(),
        ..MomentState::vacuum()
    }
}
