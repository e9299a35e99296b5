use nalgebra::{SMatrix, SVector};

use super::{moment_rhs, DynamicsError, MomentState};
use crate::model::{stability_threshold, DerivedRates};

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Vec12 = SVector<f64, 12>;

/// Real embedding `ṁ = A m + c` of the six second moments (re, im interleaved).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub matrix: Mat12,
    pub offset: Vec12,
}

impl AffineSystem {
    pub fn residual(&self, m: &Vec12) -> Vec12 {
        self.matrix * m + self.offset
    }
}

fn second_moments(state: &MomentState) -> Vec12 {
    Vec12::from_column_slice(&state.to_real()[4..])
}

fn with_second_moments(m: &Vec12) -> MomentState {
    let mut v = [0.0; 16];
    v[4..].copy_from_slice(m.as_slice());
    MomentState::from_real(&v)
}

/// Builds `A` and `c` column by column from the right-hand side, which is
/// affine over the reals.
pub fn affine_system(rates: &DerivedRates) -> AffineSystem {
    let offset = second_moments(&moment_rhs(&MomentState::vacuum(), rates));
    let mut matrix = Mat12::zeros();
    for k in 0..12 {
        let mut e = Vec12::zeros();
        e[k] = 1.0;
        let col = second_moments(&moment_rhs(&with_second_moments(&e), rates)) - offset;
        matrix.set_column(k, &col);
    }
    AffineSystem { matrix, offset }
}

/// Solves `A m + c = 0`. First moments are zero: their equations are
/// homogeneous and decay below threshold.
pub fn steady_state_numeric(rates: &DerivedRates) -> Result<MomentState, DynamicsError> {
    let threshold = stability_threshold(rates);
    if !(rates.epsilon < threshold) {
        return Err(DynamicsError::Unstable {
            epsilon: rates.epsilon,
            threshold,
        });
    }
    let sys = affine_system(rates);
    let lu = sys.matrix.lu();
    let u = lu.u();
    let scale = sys.matrix.amax();
    let min_pivot = (0..12)
        .map(|k| u[(k, k)].abs())
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(DynamicsError::Singular);
    }
    let m = lu.solve(&(-sys.offset)).ok_or(DynamicsError::Singular)?;
    let residual = sys.residual(&m).amax();
    let limit = 1e-12 * sys.offset.amax();
    if residual > limit {
        return Err(DynamicsError::Residual { residual, limit });
    }
    Ok(with_second_moments(&m))
}
