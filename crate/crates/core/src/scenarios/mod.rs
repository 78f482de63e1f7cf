//! Runnable protocols, certainty statements, and the named FR
//! configurations.

mod fr;
mod matrix;
mod statement;

use std::collections::HashSet;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{ProductSpace, StateVector};
use crate::measurement::{
    apply_step, born_distribution, joint_from_leaves, project, sequential_joint_distribution,
    JointDistribution, MeasurementStep, ObservableBasis, Probability, ProtocolStep, BRANCH_TOL,
};

pub use fr::{build_fr_scenario, fr_suite, Agent, FrOptions, Ordering};
pub use matrix::{statement_matrix, statement_matrix_with, MatrixRow, StatementMatrix, MIXED_ROW};
pub use statement::{
    evaluate_statement, evaluate_statement_with, fr_statements, sq_fbar, sq_w, sq_wbar, Modality,
    Predicate, Statement, StatementResult, Thresholds, Verdict,
};

/// A prepared state followed by an ordered protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub space: Arc<ProductSpace>,
    pub initial: StateVector,
    pub steps: Vec<ProtocolStep>,
    pub statements: Vec<Statement>,
    /// Variables shown by default; all variables when absent.
    pub report: Option<Vec<String>>,
}

/// Where a result variable comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub variable: String,
    pub step: usize,
    pub recorder: Option<String>,
    pub collapse: bool,
    pub selected: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// The state after the last step; only when no collapse left a choice.
    pub final_state: Option<StateVector>,
    pub joint: JointDistribution,
    pub records: Vec<Record>,
}

/// One run with collapse outcomes drawn from the Born rule.
#[derive(Clone, Debug)]
pub struct SampledRun {
    pub final_state: StateVector,
    /// Drawn or postselected values of the collapsing steps.
    pub values: IndexMap<String, String>,
}

impl Scenario {
    pub fn new(
        name: &str,
        initial: StateVector,
        steps: Vec<ProtocolStep>,
        statements: Vec<Statement>,
    ) -> Result<Self> {
        let s = Scenario {
            name: name.to_string(),
            space: initial.space().clone(),
            initial,
            steps,
            statements,
            report: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_report(mut self, report: Vec<String>) -> Result<Self> {
        self.report = Some(report);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if **self.initial.space() != *self.space {
            return Err(Error::SpaceMismatch);
        }
        if !self.initial.is_normalized() {
            return Err(Error::InvalidScenario("initial state is not normalized".into()));
        }
        let mut variables = HashSet::new();
        let mut recorders = HashSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                ProtocolStep::Measure(m) => {
                    m.validate(&self.space)?;
                    if !variables.insert(m.variable().to_string()) {
                        return Err(Error::InvalidScenario(format!(
                            "step {}: result `{}` is produced twice",
                            i + 1,
                            m.variable()
                        )));
                    }
                    if let Some(r) = &m.recorder {
                        if !recorders.insert(r.clone()) {
                            return Err(Error::AlreadyRecorded { recorder: r.clone() });
                        }
                    }
                }
                ProtocolStep::Unitary { operator, targets } => {
                    operator.check_unitary()?;
                    self.space.positions(targets)?;
                }
                ProtocolStep::Controlled {
                    control, targets, ..
                } => {
                    self.space.position(control)?;
                    self.space.positions(targets)?;
                }
            }
        }
        for st in &self.statements {
            for v in st.variables() {
                if !variables.contains(&v) {
                    return Err(Error::UnknownVariable(v));
                }
            }
        }
        if let Some(report) = &self.report {
            for v in report {
                if !variables.contains(v) {
                    return Err(Error::UnknownVariable(v.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn measurements(&self) -> impl Iterator<Item = (usize, &MeasurementStep)> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.measurement().map(|m| (i, m)))
    }

    pub fn variables(&self) -> Vec<String> {
        self.measurements().map(|(_, m)| m.variable().to_string()).collect()
    }

    pub fn records(&self) -> Vec<Record> {
        self.measurements()
            .map(|(i, m)| Record {
                variable: m.variable().to_string(),
                step: i,
                recorder: m.recorder.clone(),
                collapse: m.collapse,
                selected: m.selected_outcome.clone(),
            })
            .collect()
    }

    /// Same scenario with only the first `n` steps.
    pub fn truncated(&self, n: usize) -> Scenario {
        Scenario {
            steps: self.steps[..n.min(self.steps.len())].to_vec(),
            statements: Vec::new(),
            report: None,
            ..self.clone()
        }
    }

    /// Number of steps up to and including the last one producing any of
    /// `variables`.
    pub fn horizon<S: AsRef<str>>(&self, variables: &[S]) -> Result<usize> {
        let mut last = None;
        for v in variables {
            let (i, _) = self
                .measurements()
                .find(|(_, m)| m.variable() == v.as_ref())
                .ok_or_else(|| Error::UnknownVariable(v.as_ref().to_string()))?;
            last = Some(last.map_or(i, |l: usize| l.max(i)));
        }
        Ok(last.map_or(0, |l| l + 1))
    }

    /// Runs the protocol by enumerating collapse branches with normalized
    /// states and conditional Born weights; coherent results are read from
    /// their recorders after the last step.
    pub fn run(&self) -> Result<RunOutcome> {
        let mut leaves = Vec::new();
        let mut path = Vec::new();
        enumerate(
            &self.initial,
            &self.steps,
            0,
            Probability::new(1.0, Some(num_rational::BigRational::from_integer(1.into()))),
            &mut path,
            &mut leaves,
        )?;
        let joint = joint_from_leaves(&self.space, &self.steps, leaves)?;
        let choice = self.measurements().any(|(_, m)| m.collapse && m.selected_outcome.is_none());
        let final_state = if choice { None } else { Some(self.evolve_selected()?) };
        Ok(RunOutcome {
            final_state,
            joint,
            records: self.records(),
        })
    }

    /// The state after every step when all collapses are postselected.
    fn evolve_selected(&self) -> Result<StateVector> {
        let mut state = self.initial.clone();
        for step in &self.steps {
            state = apply_step(&state, step)?;
            if let ProtocolStep::Measure(m) = step {
                if let Some(sel) = &m.selected_outcome {
                    state = collapse_on(&state, m, sel)?;
                }
            }
        }
        Ok(state)
    }

    /// Joint distribution of `variables`, read on the run cut after the last
    /// step that produces one of them.
    pub fn joint_for<S: AsRef<str>>(&self, variables: &[S]) -> Result<JointDistribution> {
        let n = self.horizon(variables)?;
        let cut = &self.steps[..n];
        sequential_joint_distribution(&self.initial, cut)?.marginal(variables)
    }

    /// The default report: the `report` variables, or every variable.
    pub fn report_joint(&self) -> Result<JointDistribution> {
        match &self.report {
            Some(r) => self.joint_for(r),
            None => sequential_joint_distribution(&self.initial, &self.steps),
        }
    }

    pub fn evaluate(&self, statement: &Statement) -> Result<StatementResult> {
        self.evaluate_with(statement, &Thresholds::default())
    }

    pub fn evaluate_with(&self, statement: &Statement, thresholds: &Thresholds) -> Result<StatementResult> {
        let joint = self.joint_for(&statement.variables())?;
        evaluate_statement_with(&joint, statement, thresholds)
    }

    /// One run with collapsing steps resolved by `rng`; coherent steps stay
    /// coherent in the final state.
    pub fn sample_run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledRun> {
        let mut state = self.initial.clone();
        let mut values = IndexMap::new();
        for step in &self.steps {
            state = apply_step(&state, step)?;
            let ProtocolStep::Measure(m) = step else { continue };
            if !m.collapse {
                continue;
            }
            let value = match &m.selected_outcome {
                Some(s) => s.clone(),
                None => {
                    let dist = value_distribution(&state, m)?;
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = None;
                    for (v, p) in &dist {
                        if p.p <= BRANCH_TOL {
                            continue;
                        }
                        acc += p.p;
                        pick = Some(v.clone());
                        if u < acc {
                            break;
                        }
                    }
                    pick.ok_or_else(|| Error::InvariantBreach("no outcome to draw".into()))?
                }
            };
            state = collapse_on(&state, m, &value)?;
            values.insert(m.variable().to_string(), value);
        }
        Ok(SampledRun {
            final_state: state,
            values,
        })
    }
}

/// Basis whose outcomes are the step's values: the recorder's computational
/// basis, or the measured basis itself.
fn readout_basis(state: &StateVector, m: &MeasurementStep) -> Result<ObservableBasis> {
    match &m.recorder {
        Some(r) => ObservableBasis::computational(state.space(), r),
        None => Ok(m.basis.clone()),
    }
}

/// Born probabilities of the step's values.
fn value_distribution(state: &StateVector, m: &MeasurementStep) -> Result<Vec<(String, Probability)>> {
    let basis = readout_basis(state, m)?;
    let born = born_distribution(state, &basis)?;
    m.values(state.space())?
        .into_iter()
        .map(|(_, v)| {
            let p = born
                .get(&v)
                .cloned()
                .ok_or_else(|| Error::InvariantBreach(format!("value `{v}` not in readout")))?;
            Ok((v, p))
        })
        .collect()
}

fn collapse_on(state: &StateVector, m: &MeasurementStep, value: &str) -> Result<StateVector> {
    let basis = readout_basis(state, m)?;
    project(state, &basis, value)
}

fn enumerate(
    state: &StateVector,
    steps: &[ProtocolStep],
    at: usize,
    weight: Probability,
    path: &mut Vec<Option<String>>,
    leaves: &mut Vec<(Vec<String>, Probability)>,
) -> Result<()> {
    let Some(step) = steps.get(at) else {
        let coherent: Vec<&MeasurementStep> = steps.iter().filter_map(ProtocolStep::measurement).collect();
        return read_records(state, &coherent, 0, weight, path, leaves);
    };
    let state = apply_step(state, step)?;
    let ProtocolStep::Measure(m) = step else {
        return enumerate(&state, steps, at + 1, weight, path, leaves);
    };
    if !m.collapse {
        path.push(None);
        enumerate(&state, steps, at + 1, weight, path, leaves)?;
        path.pop();
        return Ok(());
    }
    for (value, p) in value_distribution(&state, m)? {
        if p.p <= BRANCH_TOL {
            continue;
        }
        if m.selected_outcome.as_ref().is_some_and(|s| *s != value) {
            continue;
        }
        let next = collapse_on(&state, m, &value)?;
        path.push(Some(value));
        enumerate(&next, steps, at + 1, mul(&weight, &p), path, leaves)?;
        path.pop();
    }
    Ok(())
}

fn read_records(
    state: &StateVector,
    measurements: &[&MeasurementStep],
    i: usize,
    weight: Probability,
    path: &mut Vec<Option<String>>,
    leaves: &mut Vec<(Vec<String>, Probability)>,
) -> Result<()> {
    if i == measurements.len() {
        let outcome = path.iter().map(|v| v.clone().expect("read")).collect();
        leaves.push((outcome, weight));
        return Ok(());
    }
    if path[i].is_some() {
        return read_records(state, measurements, i + 1, weight, path, leaves);
    }
    let m = measurements[i];
    for (value, p) in value_distribution(state, m)? {
        if p.p <= BRANCH_TOL {
            continue;
        }
        let next = collapse_on(state, m, &value)?;
        path[i] = Some(value);
        read_records(&next, measurements, i + 1, mul(&weight, &p), path, leaves)?;
    }
    path[i] = None;
    Ok(())
}

fn mul(a: &Probability, b: &Probability) -> Probability {
    let exact = match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => Some(x * y),
        _ => None,
    };
    Probability::new(a.p * b.p, exact)
}
