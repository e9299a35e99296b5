//! Truncated two-mode Fock-space integrator for the full master equation.
//!
//! Independent of the moment closure: it builds the Liouvillian from ladder
//! operators and evolves the density matrix directly, then reads moments off
//! by traces.

mod evolve;
mod generator;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::MomentState;

pub use evolve::{
    auto_cutoff, evolve, AutoCutoffReport, CutoffRun, EvolveOptions, OracleTrajectory, CLOSURE_TOL,
    CUTOFF_ABS_TOL, CUTOFF_REL_TOL, CUTOFF_STEPS, EDGE_TOL, TRACE_TOL,
};
pub use generator::{build_generator, Liouvillian};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Fock cutoff must be at least 2 (got {0})")]
    CutoffTooSmallToBuild(usize),
    #[error("cutoff {n_cut} too small: {reason}; try n_cut = {suggested}")]
    CutoffTooSmall {
        n_cut: usize,
        suggested: usize,
        reason: String,
    },
    #[error("state and generator cutoffs differ ({state} vs {generator})")]
    CutoffMismatch { state: usize, generator: usize },
    #[error("bad time grid: t_final = {t_final}, dt = {dt}")]
    BadGrid { t_final: f64, dt: f64 },
    #[error("initial state has odd total photon-number parity components")]
    OddParity,
}

/// Basis index of |n_a, n_b⟩.
pub fn basis_index(n_cut: usize, n_a: usize, n_b: usize) -> usize {
    n_a * n_cut + n_b
}

/// Two-mode density matrix over `n_cut` levels per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub n_cut: usize,
    pub data: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.n_cut * self.n_cut
    }

    pub fn vacuum(n_cut: usize) -> Self {
        Self::fock(n_cut, 0, 0)
    }

    pub fn fock(n_cut: usize, n_a: usize, n_b: usize) -> Self {
        let n = n_cut * n_cut;
        let mut data = DMatrix::zeros(n, n);
        let k = basis_index(n_cut, n_a, n_b);
        data[(k, k)] = Complex64::new(1.0, 0.0);
        Self { n_cut, data }
    }

    /// |ψ⟩⟨ψ| for a normalized copy of `psi`.
    pub fn pure(n_cut: usize, psi: &[Complex64]) -> Self {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n = n_cut * n_cut;
        let data = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self { n_cut, data }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Population on the highest retained level of either mode.
    pub fn edge_population(&self) -> f64 {
        let top = self.n_cut - 1;
        let mut p = 0.0;
        for n_a in 0..self.n_cut {
            for n_b in 0..self.n_cut {
                if n_a == top || n_b == top {
                    let k = basis_index(self.n_cut, n_a, n_b);
                    p += self.data[(k, k)].re;
                }
            }
        }
        p
    }
}

/// Truncated ladder operators on the two-mode space.
pub(crate) struct Ladder {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
}

impl Ladder {
    pub fn new(n_cut: usize) -> Self {
        let n = n_cut * n_cut;
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for n_a in 0..n_cut {
            for n_b in 0..n_cut {
                let k = basis_index(n_cut, n_a, n_b);
                if n_a > 0 {
                    a[(basis_index(n_cut, n_a - 1, n_b), k)] =
                        Complex64::new((n_a as f64).sqrt(), 0.0);
                }
                if n_b > 0 {
                    b[(basis_index(n_cut, n_a, n_b - 1), k)] =
                        Complex64::new((n_b as f64).sqrt(), 0.0);
                }
            }
        }
        Self { a, b }
    }
}

/// Reads the tracked moments off a density matrix.
pub fn extract_moments(rho: &DensityMatrix) -> MomentState {
    MomentExtractor::new(rho.n_cut).extract(rho)
}

/// Precomputed operators for repeated moment extraction at one cutoff.
pub struct MomentExtractor {
    n_cut: usize,
    ops: Vec<Vec<(usize, usize, Complex64)>>,
}

impl MomentExtractor {
    pub fn new(n_cut: usize) -> Self {
        let Ladder { a, b } = Ladder::new(n_cut);
        let ad = a.adjoint();
        let dense = [
            a.clone(),
            b.clone(),
            &ad * &a,
            &a * &a,
            &ad * &b,
            &a * &b,
            b.adjoint() * &b,
            &b * &b,
        ];
        let ops = dense
            .iter()
            .map(|m| {
                let mut t = Vec::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if m[(i, j)] != Complex64::new(0.0, 0.0) {
                            t.push((i, j, m[(i, j)]));
                        }
                    }
                }
                t
            })
            .collect();
        Self { n_cut, ops }
    }

    pub fn extract(&self, rho: &DensityMatrix) -> MomentState {
        assert_eq!(rho.n_cut, self.n_cut, "cutoff mismatch");
        self.extract_with(|i, j| rho.data[(i, j)])
    }

    /// Extraction from any accessor for ρ_{ij}.
    pub(crate) fn extract_with(&self, rho: impl Fn(usize, usize) -> Complex64) -> MomentState {
        let mut m = [Complex64::new(0.0, 0.0); 8];
        for (slot, op) in m.iter_mut().zip(&self.ops) {
            *slot = op.iter().map(|&(i, j, v)| v * rho(j, i)).sum();
        }
        MomentState::from_array(m)
    }
}
