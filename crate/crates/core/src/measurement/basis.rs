use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::{Surd, SurdSum};
use crate::hilbert::{Operator, ProductSpace};

/// Orthonormality tolerance for declared basis vectors.
pub const ORTHO_TOL: f64 = 1e-10;

/// Prefix of outcome labels that complete a partially declared basis.
pub const COMPLETION_PREFIX: &str = "⊥";

#[derive(Clone, Debug, PartialEq)]
pub struct BasisOutcome {
    pub label: String,
    pub vector: Vec<Complex64>,
    pub exact: Option<Vec<SurdSum>>,
    /// Added by completion rather than declared.
    pub completion: bool,
}

/// Orthonormal family of outcome vectors on a list of target factors. A
/// partially declared family is completed with an orthonormal complement
/// whose outcomes are labeled `⊥1`, `⊥2`, ...
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableBasis {
    name: String,
    targets: Vec<String>,
    target_dims: Vec<usize>,
    outcomes: Vec<BasisOutcome>,
    declared: usize,
}

impl ObservableBasis {
    /// Basis from exact real vectors given in target mixed-radix order.
    pub fn new<S: AsRef<str>>(
        name: impl Into<String>,
        space: &ProductSpace,
        targets: &[S],
        outcomes: Vec<(String, Vec<SurdSum>)>,
    ) -> Result<Self> {
        let declared = outcomes
            .into_iter()
            .map(|(label, exact)| BasisOutcome {
                label,
                vector: exact
                    .iter()
                    .map(|e| Complex64::new(e.to_f64(), 0.0))
                    .collect(),
                exact: Some(exact),
                completion: false,
            })
            .collect();
        ObservableBasis::build(name.into(), space, targets, declared)
    }

    /// Basis from floating-point vectors; no exact shadow.
    pub fn new_complex<S: AsRef<str>>(
        name: impl Into<String>,
        space: &ProductSpace,
        targets: &[S],
        outcomes: Vec<(String, Vec<Complex64>)>,
    ) -> Result<Self> {
        let declared = outcomes
            .into_iter()
            .map(|(label, vector)| BasisOutcome {
                label,
                vector,
                exact: None,
                completion: false,
            })
            .collect();
        ObservableBasis::build(name.into(), space, targets, declared)
    }

    /// Computational basis of one factor; outcome labels are its basis labels.
    pub fn computational(space: &ProductSpace, factor: &str) -> Result<Self> {
        let f = space.factor(space.position(factor)?);
        let d = f.dim();
        let outcomes = f
            .labels()
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let mut v = vec![SurdSum::zero(); d];
                v[k] = SurdSum::one();
                (l.clone(), v)
            })
            .collect();
        ObservableBasis::new(factor, space, &[factor], outcomes)
    }

    fn build<S: AsRef<str>>(
        name: String,
        space: &ProductSpace,
        targets: &[S],
        declared: Vec<BasisOutcome>,
    ) -> Result<Self> {
        let positions = space.positions(targets)?;
        if positions.is_empty() {
            return Err(Error::InvalidScenario(format!("basis `{name}` has no target factors")));
        }
        let target_dims: Vec<usize> = positions.iter().map(|&p| space.factor(p).dim()).collect();
        let dim: usize = target_dims.iter().product();
        if declared.is_empty() {
            return Err(Error::InvalidScenario(format!("basis `{name}` declares no outcomes")));
        }
        if declared.len() > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: declared.len(),
            });
        }
        let mut labels = HashSet::new();
        for o in &declared {
            if o.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.vector.len(),
                });
            }
            if !labels.insert(o.label.as_str()) {
                return Err(Error::InvalidScenario(format!(
                    "basis `{name}` repeats outcome `{}`",
                    o.label
                )));
            }
        }
        check_orthonormal(&name, &declared)?;
        let count = declared.len();
        let outcomes = complete(declared, dim);
        Ok(ObservableBasis {
            name,
            targets: targets.iter().map(|t| t.as_ref().to_string()).collect(),
            target_dims,
            outcomes,
            declared: count,
        })
    }

    /// Product basis on the concatenated targets; outcome labels joined by `·`.
    /// Completion outcomes of either side are kept as ordinary vectors.
    pub fn tensor(&self, other: &ObservableBasis) -> Result<Self> {
        let mut seen: HashSet<&str> = self.targets.iter().map(String::as_str).collect();
        for t in &other.targets {
            if !seen.insert(t) {
                return Err(Error::DuplicateFactor(t.clone()));
            }
        }
        let mut outcomes = Vec::new();
        for a in &self.outcomes {
            for b in &other.outcomes {
                let vector = a
                    .vector
                    .iter()
                    .flat_map(|x| b.vector.iter().map(move |y| x * y))
                    .collect();
                let exact = match (&a.exact, &b.exact) {
                    (Some(ea), Some(eb)) => Some(
                        ea.iter()
                            .flat_map(|x| eb.iter().map(move |y| x * y))
                            .collect(),
                    ),
                    _ => None,
                };
                outcomes.push(BasisOutcome {
                    label: format!("{}·{}", a.label, b.label),
                    vector,
                    exact,
                    completion: a.completion || b.completion,
                });
            }
        }
        let declared = outcomes.len();
        Ok(ObservableBasis {
            name: format!("{}·{}", self.name, other.name),
            targets: self.targets.iter().chain(&other.targets).cloned().collect(),
            target_dims: self
                .target_dims
                .iter()
                .chain(&other.target_dims)
                .copied()
                .collect(),
            outcomes,
            declared,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn dimension(&self) -> usize {
        self.target_dims.iter().product()
    }

    pub fn outcomes(&self) -> &[BasisOutcome] {
        &self.outcomes
    }

    pub fn declared_outcomes(&self) -> &[BasisOutcome] {
        &self.outcomes[..self.declared]
    }

    pub fn is_fully_declared(&self) -> bool {
        self.declared == self.dimension()
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o.label == label)
            .ok_or_else(|| Error::UnknownOutcome {
                basis: self.name.clone(),
                outcome: label.to_string(),
            })
    }

    /// Positions of the targets in `space`, checking dimensions agree.
    pub fn positions_in(&self, space: &ProductSpace) -> Result<Vec<usize>> {
        let positions = space.positions(&self.targets)?;
        for (p, &d) in positions.iter().zip(&self.target_dims) {
            let got = space.factor(*p).dim();
            if got != d {
                return Err(Error::DimensionMismatch { expected: d, got });
            }
        }
        Ok(positions)
    }

    /// The unitary sending the `k`-th computational vector to the `k`-th
    /// outcome vector. Needs a fully declared basis.
    pub fn as_operator(&self) -> Result<Operator> {
        if !self.is_fully_declared() {
            return Err(Error::IncompleteBasis {
                basis: self.name.clone(),
                declared: self.declared,
                dimension: self.dimension(),
            });
        }
        let exact: Option<Vec<Vec<SurdSum>>> =
            self.outcomes.iter().map(|o| o.exact.clone()).collect();
        match exact {
            Some(cols) => Operator::from_exact_columns(&cols),
            None => {
                let d = self.dimension();
                let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
                for (c, o) in self.outcomes.iter().enumerate() {
                    for (r, v) in o.vector.iter().enumerate() {
                        entries[r * d + c] = *v;
                    }
                }
                Operator::from_complex(d, entries)
            }
        }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_orthonormal(name: &str, outcomes: &[BasisOutcome]) -> Result<()> {
    for (i, a) in outcomes.iter().enumerate() {
        let n = inner(&a.vector, &a.vector).re;
        if n <= ORTHO_TOL {
            return Err(Error::ZeroVector);
        }
        if (n - 1.0).abs() > ORTHO_TOL {
            return Err(Error::NotOrthonormal {
                basis: name.to_string(),
                a: a.label.clone(),
                b: a.label.clone(),
                inner: n,
            });
        }
        for b in &outcomes[i + 1..] {
            let ip = inner(&a.vector, &b.vector);
            if ip.norm() > ORTHO_TOL {
                return Err(Error::NotOrthonormal {
                    basis: name.to_string(),
                    a: a.label.clone(),
                    b: b.label.clone(),
                    inner: ip.norm(),
                });
            }
        }
    }
    Ok(())
}

/// Gram-Schmidt against computational vectors, exact while every residual
/// norm stays rational.
fn complete(mut outcomes: Vec<BasisOutcome>, dim: usize) -> Vec<BasisOutcome> {
    let mut exact_ok = outcomes.iter().all(|o| o.exact.is_some());
    let mut next = 1;
    for j in 0..dim {
        if outcomes.len() == dim {
            break;
        }
        let mut u = vec![Complex64::new(0.0, 0.0); dim];
        u[j] = Complex64::new(1.0, 0.0);
        for o in &outcomes {
            let c = o.vector[j].conj();
            for (x, v) in u.iter_mut().zip(&o.vector) {
                *x -= c * v;
            }
        }
        let n2 = inner(&u, &u).re;
        if n2 <= 1e-8 {
            continue;
        }
        let s = 1.0 / n2.sqrt();
        let vector: Vec<Complex64> = u.iter().map(|x| x * s).collect();

        let exact = if exact_ok {
            let exact = exact_residual(&outcomes, j, dim);
            if exact.is_none() {
                exact_ok = false;
            }
            exact
        } else {
            None
        };
        outcomes.push(BasisOutcome {
            label: format!("{COMPLETION_PREFIX}{next}"),
            vector,
            exact,
            completion: true,
        });
        next += 1;
    }
    outcomes
}

fn exact_residual(outcomes: &[BasisOutcome], j: usize, dim: usize) -> Option<Vec<SurdSum>> {
    let mut u = vec![SurdSum::zero(); dim];
    u[j] = SurdSum::one();
    for o in outcomes {
        let e = o.exact.as_ref()?;
        let c = e[j].clone();
        if c.is_zero() {
            continue;
        }
        for (x, v) in u.iter_mut().zip(e) {
            *x = &*x - &(&c * v);
        }
    }
    let mut n2 = SurdSum::zero();
    for x in &u {
        n2.add_assign_ref(&x.square());
    }
    let n2 = n2.as_rational()?;
    let scale = Surd::sqrt(&n2.recip()).ok()?;
    Some(u.iter().map(|x| x.mul_surd(&scale)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::FactorSpace;

    fn half() -> SurdSum {
        Surd::sqrt(&num_rational::BigRational::new(1.into(), 2.into()))
            .unwrap()
            .into()
    }

    fn lab() -> ProductSpace {
        ProductSpace::new(vec![
            FactorSpace::new("spin", ["down", "up"]).unwrap(),
            FactorSpace::memory("F", ["down", "up"]).unwrap(),
        ])
        .unwrap()
    }

    fn ok_fail(space: &ProductSpace) -> ObservableBasis {
        // index order: spin major, F minor: (down,blank)=0 (down,down)=1 (down,up)=2 (up,blank)=3 (up,down)=4 (up,up)=5
        let z = SurdSum::zero;
        let h = half();
        let ok = vec![z(), h.clone(), z(), z(), z(), -&h];
        let fail = vec![z(), h.clone(), z(), z(), z(), h];
        ObservableBasis::new(
            "L",
            space,
            &["spin", "F"],
            vec![("ok".into(), ok), ("fail".into(), fail)],
        )
        .unwrap()
    }

    #[test]
    fn completion_is_exact_and_orthonormal() {
        let space = lab();
        let b = ok_fail(&space);
        assert_eq!(b.outcomes().len(), 6);
        assert_eq!(b.declared_outcomes().len(), 2);
        assert!(b.outcomes().iter().all(|o| o.exact.is_some()));
        assert_eq!(b.outcomes()[2].label, "⊥1");
        for (i, a) in b.outcomes().iter().enumerate() {
            for (j, c) in b.outcomes().iter().enumerate() {
                let ip = inner(&a.vector, &c.vector);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-12 && ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_vector_is_not_orthonormal() {
        let space = lab();
        let h = half();
        let z = SurdSum::zero;
        let v = vec![z(), h.clone(), z(), z(), z(), h];
        let err = ObservableBasis::new(
            "B",
            &space,
            &["spin", "F"],
            vec![("a".into(), v.clone()), ("b".into(), v)],
        )
        .unwrap_err();
        match err {
            Error::NotOrthonormal { a, b, inner, .. } => {
                assert_eq!((a.as_str(), b.as_str()), ("a", "b"));
                assert!((inner - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incomplete_basis_has_no_operator() {
        let space = lab();
        assert!(matches!(
            ok_fail(&space).as_operator(),
            Err(Error::IncompleteBasis { .. })
        ));
        let comp = ObservableBasis::computational(&space, "spin").unwrap();
        assert_eq!(comp.as_operator().unwrap(), Operator::identity(2));
    }
}
