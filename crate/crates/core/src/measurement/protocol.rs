use crate::error::{Error, Result};
use crate::hilbert::{Operator, ProductSpace, StateVector};

use super::basis::ObservableBasis;
use super::{controlled_unitary, premeasure};

/// One measurement event. The result is carried by `recorder` when present;
/// `collapse` projects on the result at this point of the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementStep {
    pub basis: ObservableBasis,
    pub recorder: Option<String>,
    pub collapse: bool,
    /// Postselected value of [`MeasurementStep::variable`]; needs `collapse`.
    pub selected_outcome: Option<String>,
}

impl MeasurementStep {
    pub fn new(basis: ObservableBasis, recorder: Option<&str>) -> Self {
        MeasurementStep {
            basis,
            recorder: recorder.map(str::to_string),
            collapse: false,
            selected_outcome: None,
        }
    }

    pub fn collapsing(mut self) -> Self {
        self.collapse = true;
        self
    }

    pub fn selecting(mut self, outcome: &str) -> Self {
        self.collapse = true;
        self.selected_outcome = Some(outcome.to_string());
        self
    }

    /// Name of the result variable: the recorder, else the basis name.
    pub fn variable(&self) -> &str {
        self.recorder.as_deref().unwrap_or(self.basis.name())
    }

    /// `(outcome index, value label)` for every possible result. Recorded
    /// results take the recorder's labels; completion outcomes of a recorded
    /// measurement have no value.
    pub fn values(&self, space: &ProductSpace) -> Result<Vec<(usize, String)>> {
        match &self.recorder {
            Some(r) => {
                let f = space.factor(space.position(r)?);
                let records = f.record_indices();
                if records.len() < self.basis.declared_outcomes().len() {
                    return Err(Error::BadRecorder { recorder: r.clone() });
                }
                Ok(self
                    .basis
                    .declared_outcomes()
                    .iter()
                    .enumerate()
                    .map(|(k, _)| (k, f.labels()[records[k]].clone()))
                    .collect())
            }
            None => Ok(self
                .basis
                .outcomes()
                .iter()
                .enumerate()
                .map(|(k, o)| (k, o.label.clone()))
                .collect()),
        }
    }

    pub fn validate(&self, space: &ProductSpace) -> Result<()> {
        self.basis.positions_in(space)?;
        if self.recorder.is_none() && !self.collapse {
            return Err(Error::InvalidScenario(format!(
                "measurement `{}` neither collapses nor has a recorder",
                self.basis.name()
            )));
        }
        if let Some(sel) = &self.selected_outcome {
            if !self.collapse {
                return Err(Error::PostselectWithoutCollapse(self.variable().to_string()));
            }
            if !self.values(space)?.iter().any(|(_, v)| v == sel) {
                return Err(Error::UnknownValue {
                    variable: self.variable().to_string(),
                    value: sel.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolStep {
    Unitary {
        operator: Operator,
        targets: Vec<String>,
    },
    Controlled {
        control: String,
        cases: Vec<(String, Operator)>,
        targets: Vec<String>,
    },
    Measure(MeasurementStep),
}

impl ProtocolStep {
    pub fn measurement(&self) -> Option<&MeasurementStep> {
        match self {
            ProtocolStep::Measure(m) => Some(m),
            _ => None,
        }
    }

    pub fn measurement_mut(&mut self) -> Option<&mut MeasurementStep> {
        match self {
            ProtocolStep::Measure(m) => Some(m),
            _ => None,
        }
    }

    /// Factors the step can change.
    pub fn touched(&self) -> Vec<String> {
        match self {
            ProtocolStep::Unitary { targets, .. } | ProtocolStep::Controlled { targets, .. } => {
                targets.clone()
            }
            ProtocolStep::Measure(m) => {
                let mut t = m.basis.targets().to_vec();
                t.extend(m.recorder.iter().cloned());
                t
            }
        }
    }
}

/// Unitary part of a step: premeasurement for recorded measurements, no-op
/// for unrecorded ones.
pub fn apply_step(state: &StateVector, step: &ProtocolStep) -> Result<StateVector> {
    match step {
        ProtocolStep::Unitary { operator, targets } => state.apply_unitary(operator, targets),
        ProtocolStep::Controlled {
            control,
            cases,
            targets,
        } => controlled_unitary(state, control, cases, targets),
        ProtocolStep::Measure(m) => match &m.recorder {
            Some(r) => premeasure(state, &m.basis, r),
            None => Ok(state.clone()),
        },
    }
}
