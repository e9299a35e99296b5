//! Sparse Liouvillian on the even-parity block of vec(ρ).
//!
//! Every term of the generator changes the total photon number of each side
//! of ρ by an even amount or both sides by one, so entries ρ_{ij} with
//! n(i) + n(j) even form an invariant block containing the vacuum. Only that
//! block is stored.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{basis_index, DensityMatrix, Ladder, OracleError};
use crate::model::DerivedRates;

type Rows = Vec<Vec<(usize, Complex64)>>;

fn rows_of(m: &DMatrix<Complex64>) -> Rows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .filter(|&k| m[(i, k)] != Complex64::new(0.0, 0.0))
                .map(|k| (k, m[(i, k)]))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub n_cut: usize,
    /// Rates the generator was built from.
    pub rates: DerivedRates,
    /// Full-space index pairs (i, j) of the stored block, in storage order.
    pairs: Vec<(u32, u32)>,
    /// Full index i·N + j → block index, `u32::MAX` outside the block.
    pos: Vec<u32>,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<Complex64>,
}

/// Builds −i[H, ρ] + κ_a L[a] + κ_b L[b] + L[c] with
/// H = δ(a†a + b†b) + J a†b + J* ab† + ε(e^{iθ} a†a† + e^{−iθ} aa) and the
/// collective jump c = √Γ_a a − μ √Γ_b b.
pub fn build_generator(rates: &DerivedRates, n_cut: usize) -> Result<Liouvillian, OracleError> {
    if n_cut < 2 {
        return Err(OracleError::CutoffTooSmallToBuild(n_cut));
    }
    let n = n_cut * n_cut;
    let Ladder { a, b } = Ladder::new(n_cut);
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let c = |x: f64| Complex64::new(x, 0.0);
    let drive = rates.drive();
    let j = rates.coupling;

    let h = (&ad * &a + &bd * &b) * c(rates.delta)
        + &ad * &b * j
        + &a * &bd * j.conj()
        + &ad * &ad * drive
        + &a * &a * drive.conj();

    let collective = &a * c(rates.gamma_a.sqrt()) - &b * (rates.mu * rates.gamma_b.sqrt());
    let jumps: Vec<(f64, DMatrix<Complex64>)> = [
        (rates.kappa_a, a.clone()),
        (rates.kappa_b, b.clone()),
        (1.0, collective),
    ]
    .into_iter()
    .filter(|(rate, op)| *rate > 0.0 && op.iter().any(|z| z.norm() > 0.0))
    .collect();

    let mut h_eff = h;
    for (rate, op) in &jumps {
        h_eff -= op.adjoint() * op * Complex64::new(0.0, 0.5 * rate);
    }
    let h_rows = rows_of(&h_eff);
    let jump_rows: Vec<(f64, Rows)> = jumps.iter().map(|(r, op)| (*r, rows_of(op))).collect();

    let parity = |i: usize| (i / n_cut + i % n_cut) & 1;
    let mut pairs = Vec::new();
    let mut pos = vec![u32::MAX; n * n];
    for i in 0..n {
        for jj in 0..n {
            if parity(i) == parity(jj) {
                pos[i * n + jj] = pairs.len() as u32;
                pairs.push((i as u32, jj as u32));
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(pairs.len() + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    let mut scratch: Vec<(u32, Complex64)> = Vec::new();
    row_ptr.push(0);
    let minus_i = Complex64::new(0.0, -1.0);
    for &(i, jj) in &pairs {
        let (i, jj) = (i as usize, jj as usize);
        scratch.clear();
        // −i H_eff ρ
        for &(k, v) in &h_rows[i] {
            scratch.push((pos[k * n + jj], minus_i * v));
        }
        // +i ρ H_eff†: (ρ H_eff†)_{ij} = Σ_k ρ_{ik} conj(H_eff_{jk})
        for &(k, v) in &h_rows[jj] {
            scratch.push((pos[i * n + k], -minus_i * v.conj()));
        }
        // Σ rate · C ρ C†
        for (rate, rows) in &jump_rows {
            for &(k, ck) in &rows[i] {
                for &(l, cl) in &rows[jj] {
                    scratch.push((pos[k * n + l], ck * cl.conj() * *rate));
                }
            }
        }
        scratch.sort_unstable_by_key(|e| e.0);
        let mut last = u32::MAX;
        for &(cidx, v) in &scratch {
            debug_assert_ne!(cidx, u32::MAX, "generator left the even-parity block");
            if cidx == last {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(cidx);
                val.push(v);
                last = cidx;
            }
        }
        row_ptr.push(col.len());
    }

    Ok(Liouvillian {
        n_cut,
        rates: *rates,
        pairs,
        pos,
        row_ptr,
        col,
        val,
    })
}

impl Liouvillian {
    /// Dimension of the full superoperator, (n_cut²)².
    pub fn superoperator_dim(&self) -> usize {
        let n = self.n_cut * self.n_cut;
        n * n
    }

    /// Number of stored block entries.
    pub fn block_dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// `y = L x` on block vectors.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            *out = s;
        }
    }

    /// Packs ρ into a block vector; fails if ρ has weight outside the block.
    pub fn pack(&self, rho: &DensityMatrix) -> Result<Vec<Complex64>, OracleError> {
        if rho.n_cut != self.n_cut {
            return Err(OracleError::CutoffMismatch {
                state: rho.n_cut,
                generator: self.n_cut,
            });
        }
        let n = rho.dim();
        for i in 0..n {
            for j in 0..n {
                if self.pos[i * n + j] == u32::MAX && rho.data[(i, j)] != Complex64::new(0.0, 0.0) {
                    return Err(OracleError::OddParity);
                }
            }
        }
        Ok(self
            .pairs
            .iter()
            .map(|&(i, j)| rho.data[(i as usize, j as usize)])
            .collect())
    }

    pub fn unpack(&self, x: &[Complex64]) -> DensityMatrix {
        let n = self.n_cut * self.n_cut;
        let mut data = DMatrix::zeros(n, n);
        for (&(i, j), v) in self.pairs.iter().zip(x) {
            data[(i as usize, j as usize)] = *v;
        }
        DensityMatrix {
            n_cut: self.n_cut,
            data,
        }
    }

    /// ρ_{ij} from a block vector, zero outside the block.
    pub(crate) fn entry(&self, x: &[Complex64], i: usize, j: usize) -> Complex64 {
        let n = self.n_cut * self.n_cut;
        match self.pos[i * n + j] {
            u32::MAX => Complex64::new(0.0, 0.0),
            p => x[p as usize],
        }
    }

    /// Block indices of the diagonal entries ρ_{kk}, in basis order.
    pub(crate) fn diagonal_positions(&self) -> Vec<usize> {
        let n = self.n_cut * self.n_cut;
        (0..n).map(|k| self.pos[k * n + k] as usize).collect()
    }

    /// Block indices of the diagonal entries on the top level of either mode.
    pub(crate) fn edge_positions(&self) -> Vec<usize> {
        let top = self.n_cut - 1;
        let n = self.n_cut * self.n_cut;
        let mut out = Vec::new();
        for n_a in 0..self.n_cut {
            for n_b in 0..self.n_cut {
                if n_a == top || n_b == top {
                    let k = basis_index(self.n_cut, n_a, n_b);
                    out.push(self.pos[k * n + k] as usize);
                }
            }
        }
        out
    }
}
