use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::ComplexFloat;

use super::basis::FockBasis;
use crate::{Error, Result, C64};

/// The one-body spin-1 observables available as Fock-space matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorTag {
    Lx,
    Ly,
    Lz,
    Qyz,
    Qxz,
    Qxx,
    Qyy,
    Qzz,
    NPlus,
    NZero,
    NMinus,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 11] = [
        OperatorTag::Lx,
        OperatorTag::Ly,
        OperatorTag::Lz,
        OperatorTag::Qyz,
        OperatorTag::Qxz,
        OperatorTag::Qxx,
        OperatorTag::Qyy,
        OperatorTag::Qzz,
        OperatorTag::NPlus,
        OperatorTag::NZero,
        OperatorTag::NMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorTag::Lx => "Lx",
            OperatorTag::Ly => "Ly",
            OperatorTag::Lz => "Lz",
            OperatorTag::Qyz => "Qyz",
            OperatorTag::Qxz => "Qxz",
            OperatorTag::Qxx => "Qxx",
            OperatorTag::Qyy => "Qyy",
            OperatorTag::Qzz => "Qzz",
            OperatorTag::NPlus => "N+1",
            OperatorTag::NZero => "N0",
            OperatorTag::NMinus => "N-1",
        }
    }

    /// Single-particle matrix `M` such that the operator is
    /// `sum_{m,n} M[m][n] a_m^dag a_n`, rows/columns ordered `(+1, 0, -1)`.
    pub fn single_particle(self) -> [[C64; 3]; 3] {
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        let i = |x: f64| C64::new(0.0, x);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            OperatorTag::Lx => [[z, r(s), z], [r(s), z, r(s)], [z, r(s), z]],
            OperatorTag::Ly => [[z, i(-s), z], [i(s), z, i(-s)], [z, i(s), z]],
            OperatorTag::Lz => [[r(1.0), z, z], [z, z, z], [z, z, r(-1.0)]],
            OperatorTag::Qyz => [[z, i(-s), z], [i(s), z, i(s)], [z, i(-s), z]],
            OperatorTag::Qxz => [[z, r(s), z], [r(s), z, r(-s)], [z, r(-s), z]],
            OperatorTag::Qxx => [
                [r(-1.0 / 3.0), z, r(1.0)],
                [z, r(2.0 / 3.0), z],
                [r(1.0), z, r(-1.0 / 3.0)],
            ],
            OperatorTag::Qyy => [
                [r(-1.0 / 3.0), z, r(-1.0)],
                [z, r(2.0 / 3.0), z],
                [r(-1.0), z, r(-1.0 / 3.0)],
            ],
            OperatorTag::Qzz => [
                [r(2.0 / 3.0), z, z],
                [z, r(-4.0 / 3.0), z],
                [z, z, r(2.0 / 3.0)],
            ],
            OperatorTag::NPlus => [[r(1.0), z, z], [z, z, z], [z, z, z]],
            OperatorTag::NZero => [[z, z, z], [z, r(1.0), z], [z, z, z]],
            OperatorTag::NMinus => [[z, z, z], [z, z, z], [z, z, r(1.0)]],
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorTag::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

/// Sparse complex matrix over a [`FockBasis`], stored in CSR form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    basis: Arc<FockBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(
        basis: Arc<FockBasis>,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Self {
        let dim = basis.len();
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            basis,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
            hermitian,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Whether the operator was constructed as Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim());
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn adjoint(&self) -> Self {
        let t = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.basis.clone(), t, self.hermitian)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_basis(other);
        let t = self.entries().chain(other.entries()).collect();
        Self::from_triplets(self.basis.clone(), t, self.hermitian && other.hermitian)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_basis(other);
        let mut t = Vec::new();
        for r in 0..self.dim() {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *acc.entry(c).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
            t.extend(acc.into_iter().map(|(c, v)| (r, c, v)));
        }
        Self::from_triplets(self.basis.clone(), t, false)
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `D A D^dag` for a diagonal unitary `D = diag(phases)`.
    pub fn conjugate_by_diagonal(&self, phases: &[C64]) -> Self {
        let t = self
            .entries()
            .map(|(r, c, v)| (r, c, phases[r] * v * phases[c].conj()))
            .collect();
        Self::from_triplets(self.basis.clone(), t, self.hermitian)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .vals
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Upper bound on the spectral norm (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim(), self.dim(), C64::new(0.0, 0.0));
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    fn check_basis(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis,
            "operators live on different bases"
        );
    }
}

/// Second-quantized one-body operator `sum M[m][n] a_m^dag a_n` built from the
/// ladder action `a_m |n_m> = sqrt(n_m) |n_m - 1>`.
pub fn one_body(basis: &Arc<FockBasis>, m: &[[C64; 3]; 3], hermitian: bool) -> SparseOperator {
    let mut t = Vec::new();
    for (col, &occ) in basis.states().iter().enumerate() {
        for a in 0..3 {
            for b in 0..3 {
                let coeff = m[a][b];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                if a == b {
                    t.push((col, col, coeff * occ[a] as f64));
                } else if occ[b] > 0 {
                    let mut next = occ;
                    next[b] -= 1;
                    next[a] += 1;
                    let amp = (occ[b] as f64).sqrt() * ((occ[a] + 1) as f64).sqrt();
                    let row = basis.index_of(next).expect("ladder action stays in basis");
                    t.push((row, col, coeff * amp));
                }
            }
        }
    }
    SparseOperator::from_triplets(basis.clone(), t, hermitian)
}

pub fn operator_matrix(tag: OperatorTag, basis: &Arc<FockBasis>) -> SparseOperator {
    one_body(basis, &tag.single_particle(), true)
}

/// Single-mode spin-mixing Hamiltonian
///
/// `H = c2/(2N) [2(a1^dag a-1^dag a0 a0 + h.c.) + (N1 - N-1)^2 + (2 N0 - 1)(N1 + N-1)] - q N0`
///
/// with `c2` and `q` in rad/s. Block-diagonal in `n_+1 - n_-1`.
pub fn hamiltonian(basis: &Arc<FockBasis>, c2: f64, q: f64) -> SparseOperator {
    let n_total = basis.total_atoms().max(1) as f64;
    let pref = c2 / (2.0 * n_total);
    let mut t = Vec::new();
    for (col, &occ) in basis.states().iter().enumerate() {
        let [p, z, m] = occ.map(|x| x as f64);
        let diag = pref * ((p - m).powi(2) + (2.0 * z - 1.0) * (p + m)) - q * z;
        t.push((col, col, C64::new(diag, 0.0)));
        // a1^dag a-1^dag a0 a0 and its conjugate.
        if occ[1] >= 2 {
            let next = [occ[0] + 1, occ[1] - 2, occ[2] + 1];
            let amp = (z * (z - 1.0) * (p + 1.0) * (m + 1.0)).sqrt();
            let row = basis.index_of(next).unwrap();
            t.push((row, col, C64::new(2.0 * pref * amp, 0.0)));
            t.push((col, row, C64::new(2.0 * pref * amp, 0.0)));
        }
    }
    SparseOperator::from_triplets(basis.clone(), t, true)
}
