use std::collections::VecDeque;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::ComplexFloat;

use super::operator::{operator_matrix, OperatorTag, SparseOperator};
use super::state::FockState;
use crate::{Error, Result, C64};

/// Connected blocks of at most this many states are exponentiated through a
/// dense eigendecomposition; larger blocks use a Lanczos propagator.
pub const DENSE_THRESHOLD: usize = 300;

const KRYLOV_DIM: usize = 40;
const KRYLOV_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;
const EIGEN_MAX_ITER: usize = 100_000;

/// Reusable `exp(-i A t)` for a Hermitian sparse generator.
///
/// The generator is split into the connected components of its sparsity
/// graph (for the spin-mixing Hamiltonian, the magnetization blocks). Each
/// component is diagonalized lazily the first time a vector with support on
/// it is propagated, so repeated calls at different times are cheap.
#[derive(Debug)]
pub struct Propagator {
    blocks: Vec<Block>,
}

type Eigen = (DVector<f64>, DMatrix<C64>);

#[derive(Debug)]
struct Block {
    indices: Vec<usize>,
    // Local CSR restricted to the block.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    eigen: OnceLock<std::result::Result<Eigen, String>>,
}

impl Propagator {
    pub fn new(generator: &SparseOperator) -> Result<Self> {
        if !generator.is_hermitian() {
            return Err(Error::Numerical(
                "propagator requires a Hermitian generator".into(),
            ));
        }
        let dim = generator.dim();
        let mut component = vec![usize::MAX; dim];
        let mut blocks = Vec::new();
        for seed in 0..dim {
            if component[seed] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut indices = vec![];
            let mut queue = VecDeque::from([seed]);
            component[seed] = id;
            while let Some(r) = queue.pop_front() {
                indices.push(r);
                for (c, _) in generator.row(r) {
                    if component[c] == usize::MAX {
                        component[c] = id;
                        queue.push_back(c);
                    }
                }
            }
            indices.sort_unstable();
            blocks.push(indices);
        }
        let mut local = vec![0usize; dim];
        for indices in &blocks {
            for (k, &g) in indices.iter().enumerate() {
                local[g] = k;
            }
        }
        let blocks = blocks
            .into_iter()
            .map(|indices| {
                let mut row_ptr = Vec::with_capacity(indices.len() + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                row_ptr.push(0);
                for &g in &indices {
                    for (c, v) in generator.row(g) {
                        cols.push(local[c]);
                        vals.push(v);
                    }
                    row_ptr.push(cols.len());
                }
                Block {
                    indices,
                    row_ptr,
                    cols,
                    vals,
                    eigen: OnceLock::new(),
                }
            })
            .collect();
        Ok(Propagator { blocks })
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// `exp(-i A t) v`.
    pub fn apply(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::Domain(format!(
                "vector of length {} for generator of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for block in &self.blocks {
            let sub: Vec<C64> = block.indices.iter().map(|&g| v[g]).collect();
            if sub.iter().all(|c| *c == C64::new(0.0, 0.0)) {
                continue;
            }
            let res = if t == 0.0 {
                sub
            } else if block.indices.len() <= DENSE_THRESHOLD {
                block.apply_dense(&sub, t)?
            } else {
                block.apply_krylov(&sub, t)?
            };
            for (&g, r) in block.indices.iter().zip(res) {
                out[g] = r;
            }
        }
        Ok(out)
    }
}

impl Block {
    fn matvec(&self, v: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn apply_dense(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        let eigen = self.eigen.get_or_init(|| {
            let n = self.indices.len();
            let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            for r in 0..n {
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    m[(r, self.cols[k])] = self.vals[k];
                }
            }
            m.try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
                .map(|e| (e.eigenvalues, e.eigenvectors))
                .ok_or_else(|| {
                    format!("Hermitian eigensolver did not converge for a block of dimension {n}")
                })
        });
        let (values, vectors) = eigen.as_ref().map_err(|e| Error::Numerical(e.clone()))?;
        let mut c = vectors.ad_mul(&DVector::from_column_slice(v));
        for (ck, &lam) in c.iter_mut().zip(values.iter()) {
            *ck *= C64::from_polar(1.0, -lam * t);
        }
        Ok((vectors * c).as_slice().to_vec())
    }

    /// Lanczos with full reorthogonalization and step-size control driven by
    /// the standard `beta_m |e_m^T exp(-i T tau) e_1|` error estimate.
    fn apply_krylov(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        let n = v.len();
        let mut w = v.to_vec();
        let mut done = 0.0;
        let mut tau = t;
        let mut steps = 0usize;
        while (t - done).abs() > 0.0 {
            tau = tau.min(t - done);
            let beta0 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if beta0 == 0.0 {
                return Ok(w);
            }
            let m_max = KRYLOV_DIM.min(n);
            let mut basis: Vec<Vec<C64>> = vec![w.iter().map(|c| c / beta0).collect()];
            let mut alpha = Vec::with_capacity(m_max);
            let mut beta = Vec::with_capacity(m_max);
            let mut tmp = vec![C64::new(0.0, 0.0); n];
            let mut residual = 0.0;
            for j in 0..m_max {
                self.matvec(&basis[j], &mut tmp);
                let a = dot(&basis[j], &tmp).re;
                alpha.push(a);
                for _ in 0..2 {
                    for q in &basis {
                        let h = dot(q, &tmp);
                        tmp.iter_mut().zip(q).for_each(|(x, qv)| *x -= h * qv);
                    }
                }
                let b = tmp.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                residual = b;
                if j + 1 == m_max || b <= 1e-13 * (a.abs() + 1.0) {
                    break;
                }
                beta.push(b);
                basis.push(tmp.iter().map(|c| c / b).collect());
            }
            let m = alpha.len();
            let breakdown = residual <= 1e-13 * (alpha[m - 1].abs() + 1.0);
            let tri = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = tri
                .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
                .ok_or_else(|| {
                    Error::Numerical(format!("Lanczos tridiagonal eigensolver failed at m = {m}"))
                })?;
            let small = |tau: f64| -> DVector<C64> {
                let mut y = DVector::from_element(m, C64::new(0.0, 0.0));
                for k in 0..m {
                    let u0 = eig.eigenvectors[(0, k)];
                    let ph = C64::from_polar(u0, -eig.eigenvalues[k] * tau);
                    for r in 0..m {
                        y[r] += ph * eig.eigenvectors[(r, k)];
                    }
                }
                y * C64::new(beta0, 0.0)
            };
            let mut halvings = 0;
            let y = loop {
                let y = small(tau);
                let err = if breakdown {
                    0.0
                } else {
                    residual * y[m - 1].abs()
                };
                if err <= KRYLOV_TOL * tau / t {
                    break y;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Numerical(format!(
                        "Krylov propagator failed to converge: dimension {n}, t = {t}, reached {done}, \
                         error estimate {err:e} at step {tau:e}"
                    )));
                }
                tau *= 0.5;
            };
            w = vec![C64::new(0.0, 0.0); n];
            for (q, yk) in basis.iter().zip(y.iter()) {
                w.iter_mut().zip(q).for_each(|(x, qv)| *x += yk * qv);
            }
            done += tau;
            steps += 1;
            if halvings == 0 {
                tau *= 2.0;
            }
            if steps > 1_000_000 {
                return Err(Error::Numerical(format!(
                    "Krylov propagator exceeded step budget at t = {done} of {t}"
                )));
            }
        }
        Ok(w)
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `exp(-i A t) v` for a Hermitian sparse `A`.
pub fn expm_apply(generator: &SparseOperator, v: &[C64], t: f64) -> Result<Vec<C64>> {
    Propagator::new(generator)?.apply(v, t)
}

/// `exp(-i H t) |psi>`.
pub fn evolve_exact(state: &FockState, h: &SparseOperator, t: f64) -> Result<FockState> {
    Ok(state.with_amplitudes(expm_apply(h, state.amplitudes(), t)?))
}

/// Phase encoding `exp(-i (phi1 L_x + phi2 L_y)) |psi>`.
pub fn rotate_exact(state: &FockState, phi1: f64, phi2: f64) -> Result<FockState> {
    if phi1 == 0.0 && phi2 == 0.0 {
        return Ok(state.clone());
    }
    let basis = state.basis();
    let lx = operator_matrix(OperatorTag::Lx, basis).scale(C64::new(phi1, 0.0));
    let ly = operator_matrix(OperatorTag::Ly, basis).scale(C64::new(phi2, 0.0));
    evolve_exact(state, &lx.add(&ly), 1.0)
}

/// Spinor phase rotation `exp(-i theta N_0) |psi>`, which maps the classical
/// `psi_0 -> psi_0 exp(-i theta)`.
pub fn spinor_phase_exact(state: &FockState, theta: f64) -> FockState {
    let amps = state
        .amplitudes()
        .iter()
        .zip(state.basis().states())
        .map(|(a, occ)| a * C64::from_polar(1.0, -theta * occ[1] as f64))
        .collect();
    state.with_amplitudes(amps)
}

#[cfg(test)]
mod tests {
    use super::super::{hamiltonian, moments_exact, qfi_diagonal, FockBasis};
    use super::*;
    use std::f64::consts::PI;

    const C2: f64 = -2.0 * PI * 3.8;

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_time_is_identity() {
        let b = FockBasis::new(6).unwrap();
        let psi = FockState::polar(&b);
        let h = hamiltonian(&b, C2, C2.abs());
        assert_eq!(
            evolve_exact(&psi, &h, 0.0).unwrap().amplitudes(),
            psi.amplitudes()
        );
        assert_eq!(
            rotate_exact(&psi, 0.0, 0.0).unwrap().amplitudes(),
            psi.amplitudes()
        );
    }

    #[test]
    fn diagonal_generator_gives_phases() {
        let b = FockBasis::new(5).unwrap();
        let q = 7.3;
        let t = 0.21;
        let amps: Vec<C64> = (0..b.len())
            .map(|k| C64::new(1.0 + k as f64, 0.5 * k as f64))
            .collect();
        let psi = FockState::from_amplitudes(&b, amps).unwrap();
        let out = evolve_exact(&psi, &hamiltonian(&b, 0.0, q), t).unwrap();
        for ((a, o), occ) in psi
            .amplitudes()
            .iter()
            .zip(out.amplitudes())
            .zip(b.states())
        {
            let expected = a * C64::from_polar(1.0, q * occ[1] as f64 * t);
            assert!((o - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_dense() {
        // One connected block of 496 states, forced through both paths.
        let b = FockBasis::new(30).unwrap();
        let gen = operator_matrix(OperatorTag::Lx, &b)
            .add(&operator_matrix(OperatorTag::Qzz, &b).scale(C64::new(0.3, 0.0)));
        let prop = Propagator::new(&gen).unwrap();
        assert_eq!(prop.block_sizes(), vec![b.len()]);
        let psi = FockState::polar(&b);
        let dense = prop.blocks[0].apply_dense(psi.amplitudes(), 0.37).unwrap();
        let krylov = prop.blocks[0].apply_krylov(psi.amplitudes(), 0.37).unwrap();
        assert!(
            max_diff(&dense, &krylov) < 1e-9,
            "{}",
            max_diff(&dense, &krylov)
        );
    }

    #[test]
    fn unitarity_and_block_structure() {
        let b = FockBasis::new(100).unwrap();
        let h = hamiltonian(&b, C2, C2.abs());
        let prop = Propagator::new(&h).unwrap();
        assert_eq!(prop.block_sizes().len(), 201);
        let psi = FockState::polar(&b);
        let out = evolve_exact(&psi, &h, 0.015).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
        let rot = rotate_exact(&out, 0.01, -0.02).unwrap();
        assert!((rot.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn encoding_slope_is_two_n() {
        // The rotation relation maps L_x to -L_y, so the Q_xz slope in phi2
        // has the same magnitude and opposite sign.
        let n = 50usize;
        let b = FockBasis::new(n).unwrap();
        let psi = FockState::polar(&b);
        let qyz = operator_matrix(OperatorTag::Qyz, &b);
        let qxz = operator_matrix(OperatorTag::Qxz, &b);
        let h = 1e-4;
        let slope = |op: &SparseOperator, p1: f64, p2: f64| {
            let plus = moments_exact(&rotate_exact(&psi, p1 * h, p2 * h).unwrap(), op).0;
            let minus = moments_exact(&rotate_exact(&psi, -p1 * h, -p2 * h).unwrap(), op).0;
            (plus - minus) / (2.0 * h)
        };
        let s1 = slope(&qyz, 1.0, 0.0);
        let s2 = slope(&qxz, 0.0, 1.0);
        assert!((s1 - 2.0 * n as f64).abs() < 1e-4, "{s1}");
        assert!((s2 + s1).abs() < 1e-6, "{s1} {s2}");
    }

    #[test]
    fn squeezed_state_exceeds_polar_qfi() {
        let n = 100usize;
        let b = FockBasis::new(n).unwrap();
        let h = hamiltonian(&b, C2, C2.abs());
        let out = evolve_exact(&FockState::polar(&b), &h, 0.010).unwrap();
        let (fx, fy) = qfi_diagonal(&out);
        assert!(fx > 4.0 * n as f64 && fy > 4.0 * n as f64, "{fx} {fy}");
    }

    #[test]
    fn spinor_phase_rotates_quadratures() {
        // exp(-i theta N0) maps Q_yz -> cos(theta) Q_yz - sin(theta) L_x.
        let b = FockBasis::new(8).unwrap();
        let h = hamiltonian(&b, C2, C2.abs());
        let psi = rotate_exact(
            &evolve_exact(&FockState::polar(&b), &h, 0.02).unwrap(),
            0.1,
            0.05,
        )
        .unwrap();
        let theta = 0.7;
        let rotated = spinor_phase_exact(&psi, theta);
        let q = |t| operator_matrix(t, &b);
        let lhs = moments_exact(&rotated, &q(OperatorTag::Qyz)).0;
        let rhs = theta.cos() * moments_exact(&psi, &q(OperatorTag::Qyz)).0
            - theta.sin() * moments_exact(&psi, &q(OperatorTag::Lx)).0;
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} {rhs}");
    }
}
