use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Signed;

use super::operator::Operator;
use super::space::ProductSpace;
use crate::error::{Error, Result};
use crate::exact::{AmplitudeExpr, Surd, SurdSum};
use crate::measurement::ObservableBasis;

/// Norm tolerance promised by every normalizing operation.
pub const NORM_TOL: f64 = 1e-10;

/// Amplitudes below this magnitude are omitted from dumps.
const DUMP_EPS: f64 = 1e-14;

/// Pure state over a product space. Values are immutable; operations return
/// new states. When every amplitude is known in closed form the exact values
/// ride along with the floating-point ones.
#[derive(Clone, Debug)]
pub struct StateVector {
    space: Arc<ProductSpace>,
    amps: Vec<Complex64>,
    exact: Option<Vec<SurdSum>>,
}

/// One term of a basis expansion: the projected (unnormalized) component and
/// its squared norm.
#[derive(Clone, Debug)]
pub struct BasisComponent {
    pub outcome: String,
    pub component: StateVector,
    pub weight: f64,
    pub weight_exact: Option<BigRational>,
}

impl StateVector {
    pub(crate) fn from_parts(
        space: Arc<ProductSpace>,
        amps: Vec<Complex64>,
        exact: Option<Vec<SurdSum>>,
    ) -> Self {
        debug_assert_eq!(amps.len(), space.dimension());
        StateVector { space, amps, exact }
    }

    pub(crate) fn from_exact(space: Arc<ProductSpace>, exact: Vec<SurdSum>) -> Self {
        let amps = exact
            .iter()
            .map(|e| Complex64::new(e.to_f64(), 0.0))
            .collect();
        StateVector {
            space,
            amps,
            exact: Some(exact),
        }
    }

    /// Unit vector on the basis element named by one label per factor.
    pub fn basis_state<S: AsRef<str>>(space: Arc<ProductSpace>, labels: &[S]) -> Result<Self> {
        let index = space.index_of_labels(labels)?;
        let mut exact = vec![SurdSum::zero(); space.dimension()];
        exact[index] = SurdSum::one();
        Ok(StateVector::from_exact(space, exact))
    }

    /// Normalized superposition of basis elements with exact coefficients.
    /// Repeated label tuples are summed.
    pub fn superpose<S: AsRef<str>>(
        space: Arc<ProductSpace>,
        terms: &[(AmplitudeExpr, Vec<S>)],
    ) -> Result<Self> {
        let mut exact = vec![SurdSum::zero(); space.dimension()];
        for (coef, labels) in terms {
            let index = space.index_of_labels(labels)?;
            exact[index].add_surd(coef);
        }
        StateVector::from_exact(space, exact).normalized()
    }

    /// Superposition from floating-point amplitudes (no exact shadow).
    pub fn from_amplitudes(space: Arc<ProductSpace>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != space.dimension() {
            return Err(Error::DimensionMismatch {
                expected: space.dimension(),
                got: amps.len(),
            });
        }
        StateVector::from_parts(space, amps, None).normalized()
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn exact_amplitudes(&self) -> Option<&[SurdSum]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn amplitude<S: AsRef<str>>(&self, labels: &[S]) -> Result<Complex64> {
        Ok(self.amps[self.space.index_of_labels(labels)?])
    }

    pub fn exact_amplitude<S: AsRef<str>>(&self, labels: &[S]) -> Result<Option<SurdSum>> {
        let i = self.space.index_of_labels(labels)?;
        Ok(self.exact.as_ref().map(|e| e[i].clone()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Exact squared norm, when amplitudes are exact and the result is rational.
    pub fn norm_sqr_exact(&self) -> Option<BigRational> {
        let exact = self.exact.as_ref()?;
        let mut total = SurdSum::zero();
        for a in exact {
            if !a.is_zero() {
                total.add_assign_ref(&a.square());
            }
        }
        total.as_rational()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Rescaled copy with unit norm. Exactness survives when the squared norm
    /// is rational.
    pub fn normalized(&self) -> Result<StateVector> {
        let n2 = self.norm_sqr();
        if n2 <= 1e-300 {
            return Err(Error::ZeroVector);
        }
        if let Some(p) = self.norm_sqr_exact() {
            if !p.is_positive() {
                return Err(Error::ZeroVector);
            }
            let scale = Surd::sqrt(&p.recip())?;
            let exact: Vec<SurdSum> = self
                .exact
                .as_ref()
                .expect("exact norm implies exact amplitudes")
                .iter()
                .map(|a| a.mul_surd(&scale))
                .collect();
            return Ok(StateVector::from_exact(self.space.clone(), exact));
        }
        let s = 1.0 / n2.sqrt();
        Ok(StateVector::from_parts(
            self.space.clone(),
            self.amps.iter().map(|a| a * s).collect(),
            None,
        ))
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_space(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_same_space(&self, other: &StateVector) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Applies a unitary on the listed target factors (identity elsewhere).
    pub fn apply_unitary<S: AsRef<str>>(&self, op: &Operator, targets: &[S]) -> Result<StateVector> {
        op.check_unitary()?;
        let positions = self.space.positions(targets)?;
        self.apply_linear(op, &positions)
    }

    /// Applies any square operator on target positions, without checks.
    pub(crate) fn apply_linear(&self, op: &Operator, positions: &[usize]) -> Result<StateVector> {
        let d = self.space.sub_dimension(positions);
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: op.dim(),
            });
        }
        let blocks = self.space.blocks(positions);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut exact = match (&self.exact, op.is_exact()) {
            (Some(_), true) => Some(vec![SurdSum::zero(); self.amps.len()]),
            _ => None,
        };
        for block in blocks.iter() {
            let idx: Vec<usize> = block.collect();
            if idx.iter().all(|&i| self.amps[i] == Complex64::new(0.0, 0.0)) {
                continue;
            }
            for (r, &ir) in idx.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, &ic) in idx.iter().enumerate() {
                    acc += op.entry(r, c) * self.amps[ic];
                }
                amps[ir] = acc;
            }
            if let (Some(out), Some(src)) = (exact.as_mut(), self.exact.as_ref()) {
                for (r, &ir) in idx.iter().enumerate() {
                    let mut acc = SurdSum::zero();
                    for (c, &ic) in idx.iter().enumerate() {
                        if src[ic].is_zero() {
                            continue;
                        }
                        let m = op.exact_entry(r, c).expect("exact operator");
                        if !m.is_zero() {
                            acc.add_assign_ref(&(m * &src[ic]));
                        }
                    }
                    out[ir] = acc;
                }
            }
        }
        Ok(StateVector::from_parts(self.space.clone(), amps, exact))
    }

    /// `(|v⟩⟨v| ⊗ 1)|ψ⟩` for a vector `v` on the target positions.
    pub(crate) fn project_onto(
        &self,
        vector: &[Complex64],
        exact_vector: Option<&[SurdSum]>,
        positions: &[usize],
    ) -> StateVector {
        let blocks = self.space.blocks(positions);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut exact = match (&self.exact, exact_vector) {
            (Some(_), Some(_)) => Some(vec![SurdSum::zero(); self.amps.len()]),
            _ => None,
        };
        for block in blocks.iter() {
            let idx: Vec<usize> = block.collect();
            let overlap: Complex64 = idx
                .iter()
                .zip(vector)
                .map(|(&i, v)| v.conj() * self.amps[i])
                .sum();
            if overlap != Complex64::new(0.0, 0.0) {
                for (&i, v) in idx.iter().zip(vector) {
                    amps[i] = v * overlap;
                }
            }
            if let (Some(out), Some(src), Some(ev)) = (exact.as_mut(), self.exact.as_ref(), exact_vector) {
                let mut ov = SurdSum::zero();
                for (&i, v) in idx.iter().zip(ev) {
                    if !src[i].is_zero() && !v.is_zero() {
                        ov.add_assign_ref(&(v * &src[i]));
                    }
                }
                if !ov.is_zero() {
                    for (&i, v) in idx.iter().zip(ev) {
                        out[i] = v * &ov;
                    }
                }
            }
        }
        StateVector::from_parts(self.space.clone(), amps, exact)
    }

    /// Keeps only basis elements whose digit at `position` equals `digit`.
    pub(crate) fn restrict_digit(&self, position: usize, digit: usize) -> StateVector {
        let keep = |i: usize| self.space.digit(i, position) == digit;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if keep(i) { *a } else { Complex64::new(0.0, 0.0) })
            .collect();
        let exact = self.exact.as_ref().map(|e| {
            e.iter()
                .enumerate()
                .map(|(i, a)| if keep(i) { a.clone() } else { SurdSum::zero() })
                .collect()
        });
        StateVector::from_parts(self.space.clone(), amps, exact)
    }

    pub(crate) fn add(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        StateVector::from_parts(self.space.clone(), amps, exact)
    }

    pub(crate) fn sub(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect();
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x - y).collect()),
            _ => None,
        };
        StateVector::from_parts(self.space.clone(), amps, exact)
    }

    /// Moves amplitude from digit `from` to digit `to` at `position`; the
    /// result is zero outside the image.
    pub(crate) fn shift_digit(&self, position: usize, from: usize, to: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut exact = self.exact.as_ref().map(|e| vec![SurdSum::zero(); e.len()]);
        for i in 0..self.amps.len() {
            if self.space.digit(i, position) != from {
                continue;
            }
            let j = self.space.with_digit(i, position, to);
            amps[j] = self.amps[i];
            if let (Some(out), Some(src)) = (exact.as_mut(), self.exact.as_ref()) {
                out[j] = src[i].clone();
            }
        }
        StateVector::from_parts(self.space.clone(), amps, exact)
    }

    /// Expansion in `basis` (identity on the other factors): one projected
    /// component per outcome, including completion outcomes.
    pub fn expand_in_basis(&self, basis: &ObservableBasis) -> Result<Vec<BasisComponent>> {
        let positions = basis.positions_in(&self.space)?;
        Ok(basis
            .outcomes()
            .iter()
            .map(|o| {
                let component = self.project_onto(&o.vector, o.exact.as_deref(), &positions);
                BasisComponent {
                    outcome: o.label.clone(),
                    weight: component.norm_sqr(),
                    weight_exact: component.norm_sqr_exact(),
                    component,
                }
            })
            .collect())
    }

    /// One line per nonzero amplitude: `<labels joined by ⊗> <re> <im> [<exact>]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let exact = self.exact.as_ref().map(|e| &e[i]);
            let nonzero = match exact {
                Some(e) => !e.is_zero(),
                None => a.norm() > DUMP_EPS,
            };
            if !nonzero {
                continue;
            }
            let labels = self.space.labels_of(i).join("⊗");
            let _ = write!(out, "{labels} {:.12} {:.12}", a.re, a.im);
            if let Some(e) = exact {
                let _ = write!(out, " {}", e.to_string().replace(' ', ""));
            }
            out.push('\n');
        }
        out
    }
}

impl PartialEq for StateVector {
    /// Equal up to 1e-12 per amplitude on the same space.
    fn eq(&self, other: &Self) -> bool {
        *self.space == *other.space
            && self
                .amps
                .iter()
                .zip(&other.amps)
                .all(|(a, b)| (a - b).norm() <= 1e-12)
    }
}

pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.inner_product(b)
}

pub fn superpose<S: AsRef<str>>(
    space: Arc<ProductSpace>,
    terms: &[(AmplitudeExpr, Vec<S>)],
) -> Result<StateVector> {
    StateVector::superpose(space, terms)
}

pub fn basis_state<S: AsRef<str>>(space: Arc<ProductSpace>, labels: &[S]) -> Result<StateVector> {
    StateVector::basis_state(space, labels)
}

pub fn apply_unitary<S: AsRef<str>>(
    state: &StateVector,
    op: &Operator,
    targets: &[S],
) -> Result<StateVector> {
    state.apply_unitary(op, targets)
}

pub fn expand_in_basis(state: &StateVector, basis: &ObservableBasis) -> Result<Vec<BasisComponent>> {
    state.expand_in_basis(basis)
}
