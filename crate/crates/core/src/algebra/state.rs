use std::sync::Arc;

use super::basis::{FockBasis, Occupation};
use super::operator::{operator_matrix, OperatorTag, SparseOperator};
use crate::{Error, Result, C64};

/// Normalized state vector over a fixed-`N` occupation basis.
#[derive(Debug, Clone)]
pub struct FockState {
    basis: Arc<FockBasis>,
    amps: Vec<C64>,
}

impl FockState {
    /// All atoms in `m = 0`.
    pub fn polar(basis: &Arc<FockBasis>) -> Self {
        let n = basis.total_atoms() as u32;
        Self::basis_state(basis, [0, n, 0]).expect("polar state is in every basis")
    }

    pub fn basis_state(basis: &Arc<FockBasis>, occ: Occupation) -> Result<Self> {
        let k = basis.index_of(occ).ok_or_else(|| {
            Error::Domain(format!(
                "occupation {occ:?} not in the N = {} basis",
                basis.total_atoms()
            ))
        })?;
        let mut amps = vec![C64::new(0.0, 0.0); basis.len()];
        amps[k] = C64::new(1.0, 0.0);
        Ok(FockState {
            basis: basis.clone(),
            amps,
        })
    }

    /// Wraps a coefficient vector, normalizing it.
    pub fn from_amplitudes(basis: &Arc<FockBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.len() {
            return Err(Error::Domain(format!(
                "{} coefficients for a basis of {} states",
                amps.len(),
                basis.len()
            )));
        }
        let mut s = FockState {
            basis: basis.clone(),
            amps,
        };
        let norm = s.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!(
                "cannot normalize state with norm {norm}"
            )));
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    pub(crate) fn with_amplitudes(&self, amps: Vec<C64>) -> Self {
        FockState {
            basis: self.basis.clone(),
            amps,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &FockState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        let v = op.apply(&self.amps);
        self.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Mean and variance of a Hermitian observable.
pub fn moments_exact(state: &FockState, op: &SparseOperator) -> (f64, f64) {
    let v = op.apply(state.amplitudes());
    let mean: f64 = state
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    // For Hermitian A, <A^2> = |A psi|^2.
    let second: f64 = v.iter().map(|b| b.norm_sqr()).sum();
    let var = second - mean * mean;
    let scale = second.abs().max(1.0);
    debug_assert!(var >= -1e-9 * scale, "negative variance {var}");
    (mean, if var < 0.0 { 0.0 } else { var })
}

/// Small-angle quantum Fisher information diagonal `(4 Var L_x, 4 Var L_y)`
/// for a pure state.
pub fn qfi_diagonal(state: &FockState) -> (f64, f64) {
    let lx = operator_matrix(OperatorTag::Lx, state.basis());
    let ly = operator_matrix(OperatorTag::Ly, state.basis());
    (
        4.0 * moments_exact(state, &lx).1,
        4.0 * moments_exact(state, &ly).1,
    )
}
