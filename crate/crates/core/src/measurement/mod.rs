//! Projective measurement: record-copying premeasurement, controlled
//! unitaries, Born probabilities, collapse, and the sequential-projector
//! joint distribution.

mod basis;
mod joint;
mod protocol;

use indexmap::IndexMap;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, StateVector};

pub use basis::{BasisOutcome, ObservableBasis, COMPLETION_PREFIX, ORTHO_TOL};
pub(crate) use joint::{joint_from_leaves, render_columns};
pub use joint::{
    sequential_joint_distribution, JointDistribution, JointEntry, Probability, CLAMP_TOL, SUM_TOL,
};
pub use protocol::{apply_step, MeasurementStep, ProtocolStep};

/// Relative weight above which a populated completion outcome or a non-blank
/// recorder is an error.
pub const POPULATION_TOL: f64 = 1e-10;

/// Outcome probabilities below this have no branch to project on.
pub const BRANCH_TOL: f64 = 1e-12;

/// Entangles `recorder` with the outcome of `basis`: every declared outcome
/// `k` sends `|v_k⟩|blank⟩` to `|v_k⟩|r_k⟩`, where `r_k` is the `k`-th
/// non-blank label of the recorder.
pub fn premeasure(state: &StateVector, basis: &ObservableBasis, recorder: &str) -> Result<StateVector> {
    let space = state.space().clone();
    let positions = basis.positions_in(&space)?;
    let rec = space.position(recorder)?;
    if positions.contains(&rec) {
        return Err(Error::InvalidScenario(format!(
            "recorder `{recorder}` is one of the measured factors of `{}`",
            basis.name()
        )));
    }
    let factor = space.factor(rec);
    let blank = factor.blank_index().ok_or_else(|| Error::BadRecorder {
        recorder: recorder.to_string(),
    })?;
    let records = factor.record_indices();
    if records.len() < basis.declared_outcomes().len() {
        return Err(Error::BadRecorder {
            recorder: recorder.to_string(),
        });
    }

    let total = state.norm_sqr();
    let at_blank = state.restrict_digit(rec, blank);
    if total - at_blank.norm_sqr() > POPULATION_TOL * total {
        return Err(Error::AlreadyRecorded {
            recorder: recorder.to_string(),
        });
    }

    let mut out = state.clone();
    let mut unrecorded = 0.0;
    for o in basis.outcomes() {
        let component = at_blank.project_onto(&o.vector, o.exact.as_deref(), &positions);
        if o.completion {
            unrecorded += component.norm_sqr();
            continue;
        }
        let k = basis.outcome_index(&o.label)?;
        out = out
            .sub(&component)
            .add(&component.shift_digit(rec, blank, records[k]));
    }
    if unrecorded > POPULATION_TOL * total {
        return Err(Error::UnrecordedOutcome { weight: unrecorded });
    }
    Ok(out)
}

/// Applies `cases[label]` on `targets` inside the block where `control`
/// reads `label`; identity in blocks without a case.
pub fn controlled_unitary<S: AsRef<str>>(
    state: &StateVector,
    control: &str,
    cases: &[(String, Operator)],
    targets: &[S],
) -> Result<StateVector> {
    let space = state.space().clone();
    let c = space.position(control)?;
    let positions = space.positions(targets)?;
    if positions.contains(&c) {
        return Err(Error::InvalidScenario(format!(
            "control `{control}` is also a target"
        )));
    }
    let factor = space.factor(c);
    let mut out = state.clone();
    let mut seen = Vec::new();
    for (label, op) in cases {
        op.check_unitary()?;
        let d = factor.index_of(label).ok_or_else(|| Error::UnknownLabel {
            factor: control.to_string(),
            label: label.clone(),
        })?;
        if seen.contains(&d) {
            return Err(Error::InvalidScenario(format!(
                "control label `{label}` has two cases"
            )));
        }
        seen.push(d);
        let block = state.restrict_digit(c, d);
        out = out.sub(&block).add(&block.apply_linear(op, &positions)?);
    }
    Ok(out)
}

/// Born probabilities of every outcome of `basis`, completion outcomes
/// included.
pub fn born_distribution(state: &StateVector, basis: &ObservableBasis) -> Result<IndexMap<String, Probability>> {
    let total = state.norm_sqr();
    if total <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let total_exact = state.norm_sqr_exact();
    let mut out = IndexMap::new();
    for c in state.expand_in_basis(basis)? {
        let exact = match (&c.weight_exact, &total_exact) {
            (Some(w), Some(t)) if !t.is_zero() => Some(w / t),
            _ => None,
        };
        out.insert(c.outcome, Probability::new(c.weight / total, exact));
    }
    Ok(out)
}

/// Von Neumann collapse onto `outcome`, renormalized.
pub fn project(state: &StateVector, basis: &ObservableBasis, outcome: &str) -> Result<StateVector> {
    let positions = basis.positions_in(state.space())?;
    let o = &basis.outcomes()[basis.outcome_index(outcome)?];
    let component = state.project_onto(&o.vector, o.exact.as_deref(), &positions);
    let probability = component.norm_sqr() / state.norm_sqr();
    if probability <= BRANCH_TOL {
        return Err(Error::BranchDoesNotExist {
            outcome: outcome.to_string(),
            probability,
        });
    }
    component.normalized()
}
