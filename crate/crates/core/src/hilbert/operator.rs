use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::SurdSum;

/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Square matrix acting on the tensor product of a list of target factors,
/// stored row-major. Real operators built from exact entries keep them.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
    exact: Option<Vec<SurdSum>>,
}

impl Operator {
    pub fn from_complex(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Operator {
            dim,
            entries,
            exact: None,
        })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Operator::from_complex(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_exact(dim: usize, entries: Vec<SurdSum>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Operator {
            dim,
            entries: entries
                .iter()
                .map(|e| Complex64::new(e.to_f64(), 0.0))
                .collect(),
            exact: Some(entries),
        })
    }

    /// Matrix whose `k`-th column is `columns[k]`.
    pub fn from_exact_columns(columns: &[Vec<SurdSum>]) -> Result<Self> {
        let dim = columns.len();
        let mut entries = vec![SurdSum::zero(); dim * dim];
        for (c, col) in columns.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: col.len(),
                });
            }
            for (r, v) in col.iter().enumerate() {
                entries[r * dim + c] = v.clone();
            }
        }
        Operator::from_exact(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![SurdSum::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = SurdSum::one();
        }
        Operator::from_exact(dim, entries).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn exact_entry(&self, row: usize, col: usize) -> Option<&SurdSum> {
        self.exact.as_ref().map(|e| &e[row * self.dim + col])
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.entry(k, i).conj() * self.entry(k, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > UNITARY_TOL {
            Err(Error::NotUnitary { deviation })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_norm_column_is_not_unitary() {
        let m = Operator::from_real(2, &[0.5, 0.0, 0.0, 1.0]).unwrap();
        match m.check_unitary() {
            Err(Error::NotUnitary { deviation }) => assert!((deviation - 0.75).abs() < 1e-12),
            other => panic!("expected NotUnitary, got {other:?}"),
        }
    }

    #[test]
    fn identity_is_unitary() {
        assert_eq!(Operator::identity(3).unitarity_deviation(), 0.0);
    }
}
