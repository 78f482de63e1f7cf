use std::fmt;

use serde_json::{json, Value};

use crate::error::Result;
use crate::measurement::{JointDistribution, JointEntry, Probability};

/// Conjunction of `variable = value` atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate(pub Vec<(String, String)>);

impl Predicate {
    pub fn atom(variable: &str, value: &str) -> Self {
        Predicate(vec![(variable.to_string(), value.to_string())])
    }

    pub fn and(mut self, variable: &str, value: &str) -> Self {
        self.0.push((variable.to_string(), value.to_string()));
        self
    }

    fn matches(&self, joint: &JointDistribution, entry: &JointEntry) -> bool {
        self.0.iter().all(|(var, val)| {
            joint
                .variables()
                .iter()
                .position(|v| v == var)
                .is_some_and(|i| entry.outcome[i] == *val)
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (var, val)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{var} = {val}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Certain,
    Possible,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Certain => "certain",
            Modality::Possible => "possible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    Fails,
    Vacuous,
}

impl Verdict {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "HOLDS" => Some(Verdict::Holds),
            "FAILS" => Some(Verdict::Fails),
            "VACUOUS" => Some(Verdict::Vacuous),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Vacuous => "VACUOUS",
        })
    }
}

/// `certain(event given condition)` claims `P(event | condition) = 1`;
/// `possible(...)` claims it is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub id: String,
    pub modality: Modality,
    pub event: Predicate,
    pub condition: Option<Predicate>,
    pub expect: Option<Verdict>,
}

impl Statement {
    pub fn certain(id: &str, event: Predicate, condition: Predicate) -> Self {
        Statement {
            id: id.to_string(),
            modality: Modality::Certain,
            event,
            condition: Some(condition),
            expect: None,
        }
    }

    pub fn possible(id: &str, event: Predicate) -> Self {
        Statement {
            id: id.to_string(),
            modality: Modality::Possible,
            event,
            condition: None,
            expect: None,
        }
    }

    pub fn expecting(mut self, verdict: Verdict) -> Self {
        self.expect = Some(verdict);
        self
    }

    /// Variables mentioned anywhere, in first-mention order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let atoms = self
            .condition
            .iter()
            .flat_map(|c| c.0.iter())
            .chain(self.event.0.iter());
        for (var, _) in atoms {
            if !out.contains(var) {
                out.push(var.clone());
            }
        }
        out
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.modality, self.event)?;
        if let Some(c) = &self.condition {
            write!(f, " given {c}")?;
        }
        f.write_str(")")
    }
}

/// `W = fail` is certain once `F̄` has seen tails.
pub fn sq_fbar() -> Statement {
    Statement::certain("SQ_FBAR", Predicate::atom("W", "fail"), Predicate::atom("Fbar", "tails"))
}

/// `F` has seen up whenever `W̄` gets okbar.
pub fn sq_wbar() -> Statement {
    Statement::certain("SQ_WBAR", Predicate::atom("F", "up"), Predicate::atom("Wbar", "okbar"))
}

/// `W̄ = okbar` together with `W = ok` happens.
pub fn sq_w() -> Statement {
    Statement::possible("SQ_W", Predicate::atom("Wbar", "okbar").and("W", "ok"))
}

pub fn fr_statements() -> Vec<Statement> {
    vec![sq_fbar(), sq_wbar(), sq_w()]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// `CERTAIN` holds when `|p − 1|` is at most this.
    pub certain: f64,
    /// `POSSIBLE` holds when `p` exceeds this.
    pub possible: f64,
    /// A condition lighter than this makes the statement vacuous.
    pub vacuous: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            certain: 1e-9,
            possible: 1e-9,
            vacuous: 1e-12,
        }
    }
}

impl Thresholds {
    /// Same vacuity threshold, `tolerance` for both certainty and possibility.
    pub fn with_tolerance(tolerance: f64) -> Self {
        Thresholds {
            certain: tolerance,
            possible: tolerance,
            ..Thresholds::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatementResult {
    pub id: String,
    /// `P(event | condition)`, or `P(event)` without a condition. Zero when
    /// vacuous.
    pub probability: Probability,
    pub condition_probability: Option<Probability>,
    pub verdict: Verdict,
    /// Table cells inside the condition (or the event when unconditioned).
    pub witness: Vec<JointEntry>,
}

impl StatementResult {
    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "verdict": self.verdict.to_string(),
            "p": self.probability.p,
            "p_exact": self.probability.exact.as_ref().map(ToString::to_string),
            "condition_p": self.condition_probability.as_ref().map(|c| c.p),
            "witness": self.witness,
        })
    }
}

pub fn evaluate_statement(joint: &JointDistribution, statement: &Statement) -> Result<StatementResult> {
    evaluate_statement_with(joint, statement, &Thresholds::default())
}

pub fn evaluate_statement_with(
    joint: &JointDistribution,
    statement: &Statement,
    thresholds: &Thresholds,
) -> Result<StatementResult> {
    let event_and_condition: Vec<(String, String)> = statement
        .condition
        .iter()
        .flat_map(|c| c.0.iter().cloned())
        .chain(statement.event.0.iter().cloned())
        .collect();
    let joint_p = joint.probability(&event_and_condition)?;
    let (probability, condition_probability, scope) = match &statement.condition {
        Some(c) => {
            let pc = joint.probability(&c.0)?;
            if pc.p < thresholds.vacuous {
                let witness = cells(joint, c);
                return Ok(StatementResult {
                    id: statement.id.clone(),
                    probability: Probability::zero(),
                    condition_probability: Some(pc),
                    verdict: Verdict::Vacuous,
                    witness,
                });
            }
            (joint_p.ratio(&pc), Some(pc), c)
        }
        None => (joint_p, None, &statement.event),
    };
    let holds = match statement.modality {
        Modality::Certain => (probability.p - 1.0).abs() <= thresholds.certain,
        Modality::Possible => probability.p > thresholds.possible,
    };
    Ok(StatementResult {
        id: statement.id.clone(),
        probability,
        condition_probability,
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        witness: cells(joint, scope),
    })
}

fn cells(joint: &JointDistribution, scope: &Predicate) -> Vec<JointEntry> {
    joint
        .entries()
        .iter()
        .filter(|e| scope.matches(joint, e))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::measurement::Probability;

    fn q(n: i64, d: i64) -> Probability {
        let r = BigRational::new(n.into(), d.into());
        Probability::new(n as f64 / d as f64, Some(r))
    }

    fn eq7() -> JointDistribution {
        let vars = vec!["Wbar".to_string(), "W".to_string()];
        let domains = vec![
            vec!["okbar".to_string(), "failbar".to_string()],
            vec!["ok".to_string(), "fail".to_string()],
        ];
        let leaves = vec![
            (vec!["okbar".into(), "ok".into()], q(1, 12)),
            (vec!["okbar".into(), "fail".into()], q(1, 12)),
            (vec!["failbar".into(), "ok".into()], q(1, 12)),
            (vec!["failbar".into(), "fail".into()], q(3, 4)),
        ];
        JointDistribution::from_weights(vars, domains, leaves).unwrap()
    }

    #[test]
    fn possible_one_in_twelve() {
        let r = evaluate_statement(&eq7(), &sq_w()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.probability.exact, Some(BigRational::new(1.into(), 12.into())));
    }

    #[test]
    fn conditional_matches_ratio() {
        let j = eq7();
        let s = Statement::certain("x", Predicate::atom("W", "fail"), Predicate::atom("Wbar", "failbar"));
        let r = evaluate_statement(&j, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.probability.exact, Some(BigRational::new(9.into(), 10.into())));
        assert_eq!(r.witness.len(), 2);
    }

    #[test]
    fn zero_condition_is_vacuous() {
        let vars = vec!["W".to_string()];
        let domains = vec![vec!["ok".to_string(), "fail".to_string()]];
        let j = JointDistribution::from_weights(vars, domains, vec![(vec!["fail".into()], q(1, 1))]).unwrap();
        let s = Statement::certain("v", Predicate::atom("W", "fail"), Predicate::atom("W", "ok"));
        assert_eq!(evaluate_statement(&j, &s).unwrap().verdict, Verdict::Vacuous);
    }

    #[test]
    fn unknown_variable_is_an_error() {
        assert!(evaluate_statement(&eq7(), &sq_fbar()).is_err());
    }
}
