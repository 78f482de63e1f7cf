use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Label conventionally used for an agent memory that holds no record yet.
pub const BLANK: &str = "blank";

/// One labeled tensor factor: a coin, a spin, an agent memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSpace {
    label: String,
    basis_labels: Vec<String>,
}

impl FactorSpace {
    pub fn new<S: Into<String>, L: Into<String>>(
        label: S,
        basis_labels: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let label = label.into();
        let basis_labels: Vec<String> = basis_labels.into_iter().map(Into::into).collect();
        if basis_labels.len() < 2 {
            return Err(Error::InvalidFactor {
                label,
                reason: "dimension must be at least 2".into(),
            });
        }
        let mut seen = HashSet::new();
        for l in &basis_labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidFactor {
                    label,
                    reason: format!("basis label `{l}` repeated"),
                });
            }
        }
        Ok(FactorSpace {
            label,
            basis_labels,
        })
    }

    /// A memory `{blank, r₁, r₂, ...}` with one record label per outcome.
    pub fn memory<S: Into<String>, L: Into<String>>(
        label: S,
        records: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let labels = std::iter::once(BLANK.to_string()).chain(records.into_iter().map(Into::into));
        FactorSpace::new(label, labels)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn dim(&self) -> usize {
        self.basis_labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis_labels.iter().position(|l| l == label)
    }

    pub fn blank_index(&self) -> Option<usize> {
        self.index_of(BLANK)
    }

    /// Record labels in declaration order (everything except `blank`).
    pub fn record_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.basis_labels[i] != BLANK)
            .collect()
    }
}

/// Ordered tensor product of factors with mixed-radix indexing; the first
/// factor is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductSpace {
    factors: Vec<FactorSpace>,
    strides: Vec<usize>,
    dimension: usize,
}

pub fn make_product_space(factors: Vec<FactorSpace>) -> Result<Arc<ProductSpace>> {
    ProductSpace::new(factors).map(Arc::new)
}

impl ProductSpace {
    pub fn new(factors: Vec<FactorSpace>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &factors {
            if !seen.insert(f.label()) {
                return Err(Error::DuplicateFactor(f.label().to_string()));
            }
        }
        let mut strides = vec![1; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1].dim();
        }
        let dimension = factors.iter().map(FactorSpace::dim).product();
        Ok(ProductSpace {
            factors,
            strides,
            dimension,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn factors(&self) -> &[FactorSpace] {
        &self.factors
    }

    pub fn factor(&self, position: usize) -> &FactorSpace {
        &self.factors[position]
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label() == label)
            .ok_or_else(|| Error::UnknownFactor(label.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let positions = labels
            .iter()
            .map(|l| self.position(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for (p, l) in positions.iter().zip(labels) {
            if !seen.insert(*p) {
                return Err(Error::DuplicateFactor(l.as_ref().to_string()));
            }
        }
        Ok(positions)
    }

    /// Digit of factor `position` in basis index `index`.
    pub fn digit(&self, index: usize, position: usize) -> usize {
        (index / self.strides[position]) % self.factors[position].dim()
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.factors.len()).map(|p| self.digit(index, p)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Index with factor `position` replaced by `digit`.
    pub fn with_digit(&self, index: usize, position: usize, digit: usize) -> usize {
        let old = self.digit(index, position);
        index - old * self.strides[position] + digit * self.strides[position]
    }

    pub fn index_of_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        if labels.len() != self.factors.len() {
            return Err(Error::LabelCount {
                expected: self.factors.len(),
                got: labels.len(),
            });
        }
        let digits = self
            .factors
            .iter()
            .zip(labels)
            .map(|(f, l)| {
                f.index_of(l.as_ref()).ok_or_else(|| Error::UnknownLabel {
                    factor: f.label().to_string(),
                    label: l.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.index(&digits))
    }

    pub fn labels_of(&self, index: usize) -> Vec<&str> {
        (0..self.factors.len())
            .map(|p| self.factors[p].labels()[self.digit(index, p)].as_str())
            .collect()
    }

    /// Splits the space into blocks along `targets`: every block fixes the
    /// non-target digits, and lists full indices in target mixed-radix order.
    pub fn blocks(&self, targets: &[usize]) -> Blocks {
        let target_dims: Vec<usize> = targets.iter().map(|&t| self.factors[t].dim()).collect();
        let sub_dim: usize = target_dims.iter().product();
        let mut offsets = Vec::with_capacity(sub_dim);
        for k in 0..sub_dim {
            let mut rem = k;
            let mut off = 0;
            for (i, &t) in targets.iter().enumerate().rev() {
                off += (rem % target_dims[i]) * self.strides[t];
                rem /= target_dims[i];
            }
            offsets.push(off);
        }
        let bases = (0..self.dimension)
            .filter(|&i| targets.iter().all(|&t| self.digit(i, t) == 0))
            .collect();
        Blocks { bases, offsets }
    }

    pub fn sub_dimension(&self, targets: &[usize]) -> usize {
        targets.iter().map(|&t| self.factors[t].dim()).product()
    }
}

/// Index layout produced by [`ProductSpace::blocks`].
#[derive(Clone, Debug)]
pub struct Blocks {
    pub bases: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl Blocks {
    pub fn iter(&self) -> impl Iterator<Item = impl Iterator<Item = usize> + '_> + '_ {
        self.bases
            .iter()
            .map(move |&b| self.offsets.iter().map(move |&o| b + o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fr_factors() -> Vec<FactorSpace> {
        vec![
            FactorSpace::new("coin", ["heads", "tails"]).unwrap(),
            FactorSpace::memory("Fbar", ["heads", "tails"]).unwrap(),
            FactorSpace::new("spin", ["down", "up"]).unwrap(),
            FactorSpace::memory("F", ["down", "up"]).unwrap(),
            FactorSpace::memory("Wbar", ["okbar", "failbar"]).unwrap(),
            FactorSpace::memory("W", ["ok", "fail"]).unwrap(),
        ]
    }

    #[test]
    fn dimensions() {
        let two = ProductSpace::new(vec![
            FactorSpace::new("coin", ["heads", "tails"]).unwrap(),
            FactorSpace::new("spin", ["down", "up"]).unwrap(),
        ])
        .unwrap();
        assert_eq!(two.dimension(), 4);
        assert_eq!(ProductSpace::new(fr_factors()).unwrap().dimension(), 324);
    }

    #[test]
    fn duplicate_factor_rejected() {
        let err = ProductSpace::new(vec![
            FactorSpace::new("coin", ["heads", "tails"]).unwrap(),
            FactorSpace::new("coin", ["a", "b"]).unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err, Error::DuplicateFactor("coin".into()));
    }

    #[test]
    fn factor_invariants() {
        assert!(FactorSpace::new("x", ["a"]).is_err());
        assert!(FactorSpace::new("x", ["a", "a"]).is_err());
    }

    #[test]
    fn mixed_radix_bijection() {
        let space = ProductSpace::new(fr_factors()).unwrap();
        for i in 0..space.dimension() {
            assert_eq!(space.index(&space.digits(i)), i);
        }
        let idx = space
            .index_of_labels(&["tails", "tails", "up", "up", "blank", "blank"])
            .unwrap();
        assert_eq!(space.labels_of(idx), ["tails", "tails", "up", "up", "blank", "blank"]);
    }

    #[test]
    fn blocks_partition_the_space() {
        let space = ProductSpace::new(fr_factors()).unwrap();
        let blocks = space.blocks(&[3, 0]);
        let mut seen = vec![false; space.dimension()];
        for block in blocks.iter() {
            let idx: Vec<usize> = block.collect();
            assert_eq!(idx.len(), 6);
            // target order: F is the most significant digit of the block
            assert_eq!(space.digit(idx[2], 3), 1);
            assert_eq!(space.digit(idx[1], 0), 1);
            for i in idx {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }
}
