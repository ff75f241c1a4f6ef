use std::sync::Arc;

use crate::{Error, Result};

/// Largest supported atom number. The basis then holds 125 751 states.
pub const MAX_ATOMS: usize = 500;

/// Occupation numbers `(n_+1, n_0, n_-1)`.
pub type Occupation = [u32; 3];

/// Fixed-`N` occupation basis.
///
/// States are ordered lexicographically *descending* in `(n_+1, n_0)`:
/// `(N,0,0), (N-1,1,0), (N-1,0,1), (N-2,2,0), ...`. With `m = N - n_+1` the
/// index of `(n_+1, n_0, n_-1)` is `m (m + 1) / 2 + (m - n_0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    total_atoms: usize,
    states: Vec<Occupation>,
}

impl FockBasis {
    pub fn new(total_atoms: usize) -> Result<Arc<Self>> {
        if total_atoms == 0 || total_atoms > MAX_ATOMS {
            return Err(Error::Config(format!(
                "atom number {total_atoms} outside the supported range 1..={MAX_ATOMS}"
            )));
        }
        let n = total_atoms as u32;
        let mut states = Vec::with_capacity(Self::dimension_for(total_atoms));
        for n_plus in (0..=n).rev() {
            for n_zero in (0..=n - n_plus).rev() {
                states.push([n_plus, n_zero, n - n_plus - n_zero]);
            }
        }
        Ok(Arc::new(FockBasis {
            total_atoms,
            states,
        }))
    }

    /// The single-state `N = 0` space, used only as an edge case.
    pub fn vacuum() -> Arc<Self> {
        Arc::new(FockBasis {
            total_atoms: 0,
            states: vec![[0, 0, 0]],
        })
    }

    pub fn dimension_for(total_atoms: usize) -> usize {
        (total_atoms + 1) * (total_atoms + 2) / 2
    }

    pub fn total_atoms(&self) -> usize {
        self.total_atoms
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, index: usize) -> Occupation {
        self.states[index]
    }

    /// Position of an occupation triple, or `None` if it does not sum to `N`.
    pub fn index_of(&self, occ: Occupation) -> Option<usize> {
        let [n_plus, n_zero, n_minus] = occ;
        if (n_plus + n_zero + n_minus) as usize != self.total_atoms {
            return None;
        }
        let m = self.total_atoms - n_plus as usize;
        Some(m * (m + 1) / 2 + (m - n_zero as usize))
    }

    /// Magnetization `n_+1 - n_-1` of a basis state.
    pub fn magnetization(&self, index: usize) -> i64 {
        let [p, _, m] = self.states[index];
        p as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn smallest_basis() {
        let b = FockBasis::new(1).unwrap();
        assert_eq!(b.states(), &[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    }

    #[test]
    fn sizes() {
        assert_eq!(FockBasis::new(2).unwrap().len(), 6);
        assert_eq!(FockBasis::new(100).unwrap().len(), 5151);
        assert_eq!(FockBasis::new(200).unwrap().len(), 20301);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(FockBasis::new(0), Err(Error::Config(_))));
        assert!(matches!(
            FockBasis::new(MAX_ATOMS + 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invariants_hold() {
        for n in [1usize, 2, 5, 17, 40] {
            let b = FockBasis::new(n).unwrap();
            assert_eq!(b.len(), FockBasis::dimension_for(n));
            let mut seen = HashSet::new();
            for (i, &occ) in b.states().iter().enumerate() {
                assert_eq!(occ.iter().sum::<u32>() as usize, n);
                assert!(seen.insert(occ));
                assert_eq!(b.index_of(occ), Some(i));
            }
            assert_eq!(b.index_of([n as u32, 1, 0]), None);
        }
    }
}
