//! Fixed-step RK4 evolution of the density matrix and cutoff selection.

use num_complex::Complex64;
use serde::Serialize;

use super::{build_generator, DensityMatrix, Liouvillian, MomentExtractor, OracleError};
use crate::dynamics::{moment_rhs, MomentState};
use crate::model::DerivedRates;

/// Largest tolerated |Tr ρ(t) − Tr ρ(0)|.
pub const TRACE_TOL: f64 = 1e-6;
/// Largest tolerated population on the top retained level.
pub const EDGE_TOL: f64 = 1e-6;
/// Largest tolerated gap between the truncated generator's moment
/// derivatives and the closed moment equations.
pub const CLOSURE_TOL: f64 = 1e-6;
/// Cutoffs tried by [`auto_cutoff`].
pub const CUTOFF_STEPS: [usize; 3] = [8, 12, 16];
/// Moment change between cutoffs treated as converged outright.
pub const CUTOFF_ABS_TOL: f64 = 1e-8;
/// Relative truncation error accepted from the geometric tail estimate.
pub const CUTOFF_REL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Record moments every this many steps (and always at the end).
    pub sample_every: usize,
}

#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    pub n_cut: usize,
    pub t: Vec<f64>,
    pub moments: Vec<MomentState>,
    pub max_trace_drift: f64,
    pub max_edge_population: f64,
    /// Largest ∞-norm gap between the moment derivatives implied by the
    /// truncated generator and the closed moment equations, over samples.
    pub max_closure_residual: f64,
    pub final_state: DensityMatrix,
}

impl OracleTrajectory {
    /// Fails when the top Fock level carried more than [`EDGE_TOL`] or the
    /// truncation visibly bent the moment dynamics.
    pub fn check_cutoff(&self) -> Result<(), OracleError> {
        if self.max_closure_residual > CLOSURE_TOL {
            return Err(OracleError::CutoffTooSmall {
                n_cut: self.n_cut,
                suggested: (self.n_cut * 2).max(8),
                reason: format!(
                    "truncation changes the moment derivatives by {:.3e} (limit {CLOSURE_TOL:e})",
                    self.max_closure_residual
                ),
            });
        }
        if self.max_edge_population > EDGE_TOL {
            return Err(OracleError::CutoffTooSmall {
                n_cut: self.n_cut,
                suggested: (self.n_cut * 2).max(8),
                reason: format!(
                    "population {:.3e} reached the top retained level (limit {EDGE_TOL:e})",
                    self.max_edge_population
                ),
            });
        }
        Ok(())
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, k: &[Complex64]) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + k * h;
    }
}

pub fn evolve(
    rho0: &DensityMatrix,
    gen: &Liouvillian,
    opts: &EvolveOptions,
) -> Result<OracleTrajectory, OracleError> {
    let EvolveOptions {
        t_final,
        dt,
        sample_every,
    } = *opts;
    if !(dt > 0.0 && t_final > 0.0 && dt.is_finite() && t_final.is_finite()) || sample_every == 0 {
        return Err(OracleError::BadGrid { t_final, dt });
    }
    let steps = (t_final / dt - 1e-9).ceil() as usize;
    let mut y = gen.pack(rho0)?;
    let dim = y.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
    );

    let diag = gen.diagonal_positions();
    let edge = gen.edge_positions();
    let extractor = MomentExtractor::new(gen.n_cut);
    let trace = |y: &[Complex64]| diag.iter().map(|&p| y[p]).sum::<Complex64>();
    let trace0 = trace(&y);

    let mut out = OracleTrajectory {
        n_cut: gen.n_cut,
        t: Vec::new(),
        moments: Vec::new(),
        max_trace_drift: 0.0,
        max_edge_population: 0.0,
        max_closure_residual: 0.0,
        final_state: rho0.clone(),
    };
    let mut deriv = vec![zero; dim];
    let mut record =
        |k: usize, y: &[Complex64], out: &mut OracleTrajectory| -> Result<(), OracleError> {
            let drift = (trace(y) - trace0).norm();
            out.max_trace_drift = out.max_trace_drift.max(drift);
            let e: f64 = edge.iter().map(|&p| y[p].re).sum();
            out.max_edge_population = out.max_edge_population.max(e);
            out.t.push(k as f64 * dt);
            let m = extractor.extract_with(|i, j| gen.entry(y, i, j));
            gen.apply(y, &mut deriv);
            let dm = extractor.extract_with(|i, j| gen.entry(&deriv, i, j));
            let gap = dm.max_abs_diff(&moment_rhs(&m, &gen.rates));
            out.max_closure_residual = out.max_closure_residual.max(gap);
            out.moments.push(m);
            if drift > TRACE_TOL {
                return Err(OracleError::CutoffTooSmall {
                    n_cut: gen.n_cut,
                    suggested: gen.n_cut * 2,
                    reason: format!("trace drifted by {drift:.3e}"),
                });
            }
            Ok(())
        };

    record(0, &y, &mut out)?;
    for k in 0..steps {
        gen.apply(&y, &mut k1);
        axpy(&mut tmp, &y, 0.5 * dt, &k1);
        gen.apply(&tmp, &mut k2);
        axpy(&mut tmp, &y, 0.5 * dt, &k2);
        gen.apply(&tmp, &mut k3);
        axpy(&mut tmp, &y, dt, &k3);
        gen.apply(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        if (k + 1) % sample_every == 0 || k + 1 == steps {
            record(k + 1, &y, &mut out)?;
        }
    }
    out.final_state = gen.unpack(&y);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffRun {
    pub n_cut: usize,
    pub max_edge_population: f64,
    pub max_trace_drift: f64,
    pub max_closure_residual: f64,
    /// Largest moment difference against the previous cutoff over all samples.
    pub change_from_previous: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AutoCutoffReport {
    pub runs: Vec<CutoffRun>,
    /// Evolution at the largest cutoff tried.
    pub trajectory: OracleTrajectory,
    pub converged: bool,
    /// Geometric extrapolation of the remaining truncation error, when
    /// three cutoffs were needed.
    pub estimated_truncation_error: Option<f64>,
}

fn max_moment_change(a: &[MomentState], b: &[MomentState]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

/// Evolves from vacuum at increasing cutoffs until the moments stop changing
/// or the list is exhausted.
pub fn auto_cutoff(
    rates: &DerivedRates,
    opts: &EvolveOptions,
    cutoffs: &[usize],
) -> Result<AutoCutoffReport, OracleError> {
    let mut runs: Vec<CutoffRun> = Vec::new();
    let mut prev: Option<OracleTrajectory> = None;
    let mut changes: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut estimate = None;
    for &n_cut in cutoffs {
        let gen = build_generator(rates, n_cut)?;
        let traj = evolve(&DensityMatrix::vacuum(n_cut), &gen, opts)?;
        let change = prev
            .as_ref()
            .map(|p| max_moment_change(&p.moments, &traj.moments));
        runs.push(CutoffRun {
            n_cut,
            max_edge_population: traj.max_edge_population,
            max_trace_drift: traj.max_trace_drift,
            max_closure_residual: traj.max_closure_residual,
            change_from_previous: change,
        });
        let scale = traj.moments.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
        if let Some(c) = change {
            changes.push(c);
            if c < CUTOFF_ABS_TOL {
                converged = true;
            } else if let [.., c1, c2] = changes[..] {
                if c2 < c1 {
                    let q = c2 / c1;
                    let tail = c2 * q / (1.0 - q);
                    estimate = Some(tail);
                    converged = tail <= (CUTOFF_REL_TOL * scale).max(CUTOFF_ABS_TOL);
                }
            }
        }
        prev = Some(traj);
        if converged {
            break;
        }
    }
    let trajectory = prev.ok_or(OracleError::CutoffTooSmallToBuild(0))?;
    Ok(AutoCutoffReport {
        runs,
        trajectory,
        converged,
        estimated_truncation_error: estimate,
    })
}
