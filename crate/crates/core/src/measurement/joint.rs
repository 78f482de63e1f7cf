use std::collections::HashSet;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ProductSpace, StateVector};

use super::protocol::{apply_step, ProtocolStep};

/// Probabilities in `[-CLAMP_TOL, 0)` are clamped to zero; anything lower is
/// an internal error.
pub const CLAMP_TOL: f64 = 1e-12;

/// Allowed deviation of a distribution's total from one.
pub const SUM_TOL: f64 = 1e-9;

/// Leaves lighter than this are dropped during branch enumeration.
const PRUNE: f64 = 1e-30;

/// A probability with its exact value when every amplitude involved was exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Probability {
    pub p: f64,
    pub exact: Option<BigRational>,
}

impl Probability {
    pub fn new(p: f64, exact: Option<BigRational>) -> Self {
        Probability { p, exact }
    }

    pub fn zero() -> Self {
        Probability::new(0.0, Some(BigRational::zero()))
    }

    fn add(&mut self, other: &Probability) {
        self.p += other.p;
        self.exact = match (self.exact.take(), &other.exact) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }

    /// `self / other`, exact when both are.
    pub fn ratio(&self, other: &Probability) -> Probability {
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        };
        Probability::new(self.p / other.p, exact)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub outcome: Vec<String>,
    pub p: f64,
    #[serde(with = "exact_string", default)]
    pub p_exact: Option<BigRational>,
}

impl JointEntry {
    pub fn probability(&self) -> Probability {
        Probability::new(self.p, self.p_exact.clone())
    }
}

/// Probability table over tuples of recorded outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    variables: Vec<String>,
    table: Vec<JointEntry>,
}

impl JointDistribution {
    /// Builds a normalized table over the full grid `domains[0] × domains[1] × ...`
    /// from unnormalized leaf weights. Weights of repeated tuples add up.
    pub fn from_weights(
        variables: Vec<String>,
        domains: Vec<Vec<String>>,
        leaves: Vec<(Vec<String>, Probability)>,
    ) -> Result<Self> {
        if variables.len() != domains.len() {
            return Err(Error::DimensionMismatch {
                expected: variables.len(),
                got: domains.len(),
            });
        }
        check_unique(&variables)?;
        let mut total = Probability::zero();
        for (_, w) in &leaves {
            total.add(w);
        }
        if total.p <= CLAMP_TOL {
            return Err(Error::BranchDoesNotExist {
                outcome: "postselected run".into(),
                probability: total.p,
            });
        }
        let mut table: Vec<JointEntry> = grid(&domains)
            .into_iter()
            .map(|outcome| JointEntry {
                outcome,
                p: 0.0,
                p_exact: Some(BigRational::zero()),
            })
            .collect();
        let strides = strides(&domains);
        for (outcome, w) in &leaves {
            let mut idx = 0;
            for ((value, domain), stride) in outcome.iter().zip(&domains).zip(&strides) {
                let k = domain.iter().position(|d| d == value).ok_or_else(|| {
                    Error::InvariantBreach(format!("value `{value}` outside its domain"))
                })?;
                idx += k * stride;
            }
            let e = &mut table[idx];
            let mut p = e.probability();
            p.add(&w.ratio(&total));
            e.p = p.p;
            e.p_exact = p.exact;
        }
        let out = JointDistribution { variables, table };
        out.clamped()
    }

    fn clamped(mut self) -> Result<Self> {
        for e in &mut self.table {
            if !e.p.is_finite() || e.p < -CLAMP_TOL {
                return Err(Error::InvariantBreach(format!(
                    "probability {} for {:?}",
                    e.p, e.outcome
                )));
            }
            if e.p < 0.0 {
                e.p = 0.0;
            }
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: JointDistribution =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    /// Checks a decoded table: tuple arity, unique tuples, finite
    /// probabilities, total one, exact values agreeing with the floats.
    pub fn validate(&self) -> Result<()> {
        check_unique(&self.variables)?;
        let mut seen = HashSet::new();
        for e in &self.table {
            if e.outcome.len() != self.variables.len() {
                return Err(Error::Decode(format!(
                    "outcome {:?} has {} values for {} variables",
                    e.outcome,
                    e.outcome.len(),
                    self.variables.len()
                )));
            }
            if !seen.insert(&e.outcome) {
                return Err(Error::Decode(format!("outcome {:?} repeated", e.outcome)));
            }
            if !e.p.is_finite() || e.p < -CLAMP_TOL {
                return Err(Error::Decode(format!("bad probability {}", e.p)));
            }
            if let Some(x) = &e.p_exact {
                let f = x.to_f64().unwrap_or(f64::NAN);
                if x.is_negative() || !((f - e.p).abs() <= 1e-9) {
                    return Err(Error::Decode(format!(
                        "exact value {x} disagrees with {}",
                        e.p
                    )));
                }
            }
        }
        if self.table.is_empty() {
            return Err(Error::Decode("empty table".into()));
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn entries(&self) -> &[JointEntry] {
        &self.table
    }

    pub fn sum(&self) -> f64 {
        self.table.iter().map(|e| e.p).sum()
    }

    pub fn is_exact(&self) -> bool {
        self.table.iter().all(|e| e.p_exact.is_some())
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Values a variable takes in the table, in first-appearance order.
    pub fn domain(&self, variable: &str) -> Result<Vec<String>> {
        let i = self.var_index(variable)?;
        let mut out: Vec<String> = Vec::new();
        for e in &self.table {
            if !out.contains(&e.outcome[i]) {
                out.push(e.outcome[i].clone());
            }
        }
        Ok(out)
    }

    pub fn get<S: AsRef<str>>(&self, outcome: &[S]) -> Option<&JointEntry> {
        self.table.iter().find(|e| {
            e.outcome.len() == outcome.len()
                && e.outcome.iter().zip(outcome).all(|(a, b)| a == b.as_ref())
        })
    }

    /// Probability of the event `variable = value` for every listed pair.
    pub fn probability<A: AsRef<str>, B: AsRef<str>>(&self, event: &[(A, B)]) -> Result<Probability> {
        let mut cond = Vec::new();
        for (var, value) in event {
            let i = self.var_index(var.as_ref())?;
            if !self.table.iter().any(|e| e.outcome[i] == value.as_ref()) {
                return Err(Error::UnknownValue {
                    variable: var.as_ref().to_string(),
                    value: value.as_ref().to_string(),
                });
            }
            cond.push((i, value.as_ref()));
        }
        let mut p = Probability::zero();
        for e in &self.table {
            if cond.iter().all(|(i, v)| e.outcome[*i] == *v) {
                p.add(&e.probability());
            }
        }
        Ok(p)
    }

    /// Sums out every variable not in `keep`; `keep` fixes the new order.
    pub fn marginal<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointDistribution> {
        let idx = keep
            .iter()
            .map(|k| self.var_index(k.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let variables: Vec<String> = keep.iter().map(|k| k.as_ref().to_string()).collect();
        check_unique(&variables)?;
        let mut table: Vec<JointEntry> = Vec::new();
        for e in &self.table {
            let outcome: Vec<String> = idx.iter().map(|&i| e.outcome[i].clone()).collect();
            match table.iter_mut().find(|t| t.outcome == outcome) {
                Some(t) => {
                    let mut p = t.probability();
                    p.add(&e.probability());
                    t.p = p.p;
                    t.p_exact = p.exact;
                }
                None => table.push(JointEntry {
                    outcome,
                    p: e.p,
                    p_exact: e.p_exact.clone(),
                }),
            }
        }
        Ok(JointDistribution { variables, table })
    }

    /// Largest absolute difference between matching cells; cells missing on
    /// one side count as zero. `None` when the variables differ.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> Option<f64> {
        if self.variables != other.variables {
            return None;
        }
        let mut worst = 0.0f64;
        for e in &self.table {
            let q = other.get(&e.outcome).map_or(0.0, |o| o.p);
            worst = worst.max((e.p - q).abs());
        }
        for o in &other.table {
            if self.get(&o.outcome).is_none() {
                worst = worst.max(o.p.abs());
            }
        }
        Some(worst)
    }

    /// Aligned text table, one row per outcome tuple.
    pub fn to_table(&self, exact: bool) -> String {
        let mut header: Vec<String> = self.variables.clone();
        header.push("p".into());
        if exact {
            header.push("exact".into());
        }
        let rows: Vec<Vec<String>> = self
            .table
            .iter()
            .map(|e| {
                let mut r = e.outcome.clone();
                r.push(format!("{:.12}", e.p));
                if exact {
                    r.push(e.p_exact.as_ref().map_or("-".into(), |x| x.to_string()));
                }
                r
            })
            .collect();
        render_columns(&header, &rows)
    }
}

/// Left-aligned columns separated by two spaces.
pub(crate) fn render_columns(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let mut line = String::new();
        for (i, (c, w)) in r.iter().zip(&widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{c}{}", " ".repeat(w - c.chars().count()));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn check_unique(variables: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for v in variables {
        if !seen.insert(v) {
            return Err(Error::InvalidScenario(format!("variable `{v}` appears twice")));
        }
    }
    Ok(())
}

fn strides(domains: &[Vec<String>]) -> Vec<usize> {
    let mut s = vec![1; domains.len()];
    for i in (0..domains.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * domains[i + 1].len();
    }
    s
}

fn grid(domains: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                d.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

mod exact_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(q) => s.serialize_str(&q.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|s| {
            if s.len() > 256 {
                return Err(serde::de::Error::custom("exact value too long"));
            }
            s.parse::<BigRational>()
                .map_err(|_| serde::de::Error::custom(format!("bad rational `{s}`")))
        })
        .transpose()
    }
}

/// Per-measurement bookkeeping for the enumeration.
struct Slot {
    /// `(value, recorder digit or outcome index)`.
    values: Vec<(String, usize)>,
    recorder: Option<usize>,
    selected: Option<String>,
}

/// Joint distribution of all measurement results from the time-ordered
/// projector chain `P_{a_n} U_n ... P_{a_1} U_1 |ψ⟩`: collapsing steps project
/// at their own time, recorded results of coherent steps are read from the
/// recorders at the end. Postselected steps keep one value and the table is
/// renormalized.
pub fn sequential_joint_distribution(initial: &StateVector, steps: &[ProtocolStep]) -> Result<JointDistribution> {
    let space = initial.space().clone();
    let mut slots = Vec::new();
    for step in steps {
        if let ProtocolStep::Measure(m) = step {
            m.validate(&space)?;
            let recorder = m.recorder.as_deref().map(|r| space.position(r)).transpose()?;
            let values = m
                .values(&space)?
                .into_iter()
                .map(|(k, v)| {
                    let key = match recorder {
                        Some(r) => space.factor(r).index_of(&v).expect("value is a recorder label"),
                        None => k,
                    };
                    (v, key)
                })
                .collect();
            slots.push(Slot {
                values,
                recorder,
                selected: m.selected_outcome.clone(),
            });
        }
    }

    let mut leaves = Vec::new();
    let mut path = Vec::with_capacity(slots.len());
    descend(initial.clone(), steps, 0, &slots, &mut path, &mut leaves)?;
    joint_from_leaves(initial.space(), steps, leaves)
}

/// Assembles the joint table of all measurement variables of `steps` from
/// unnormalized leaf weights. The grid holds every declared value, plus the
/// completion outcomes of unrecorded measurements that some leaf populates.
pub(crate) fn joint_from_leaves(
    space: &ProductSpace,
    steps: &[ProtocolStep],
    leaves: Vec<(Vec<String>, Probability)>,
) -> Result<JointDistribution> {
    let mut variables = Vec::new();
    let mut domains = Vec::new();
    for (i, m) in steps.iter().filter_map(ProtocolStep::measurement).enumerate() {
        variables.push(m.variable().to_string());
        let mut domain = Vec::new();
        for (k, v) in m.values(space)? {
            let completion = m.recorder.is_none() && m.basis.outcomes()[k].completion;
            if !completion || leaves.iter().any(|(o, _)| o[i] == v) {
                domain.push(v);
            }
        }
        domains.push(domain);
    }
    JointDistribution::from_weights(variables, domains, leaves)
}

fn leaf_weight(state: &StateVector) -> Probability {
    Probability::new(state.norm_sqr(), state.norm_sqr_exact())
}

fn descend(
    state: StateVector,
    steps: &[ProtocolStep],
    at: usize,
    slots: &[Slot],
    path: &mut Vec<Option<String>>,
    leaves: &mut Vec<(Vec<String>, Probability)>,
) -> Result<()> {
    if state.norm_sqr() < PRUNE {
        return Ok(());
    }
    let Some(step) = steps.get(at) else {
        return read_out(state, slots, 0, path, leaves);
    };
    let evolved = apply_step(&state, step)?;
    let ProtocolStep::Measure(m) = step else {
        return descend(evolved, steps, at + 1, slots, path, leaves);
    };
    let slot = &slots[path.len()];
    if !m.collapse {
        path.push(None);
        descend(evolved, steps, at + 1, slots, path, leaves)?;
        path.pop();
        return Ok(());
    }
    let positions = m.basis.positions_in(state.space())?;
    for (value, key) in &slot.values {
        if slot.selected.as_ref().is_some_and(|s| s != value) {
            continue;
        }
        let branch = match slot.recorder {
            Some(r) => evolved.restrict_digit(r, *key),
            None => {
                let o = &m.basis.outcomes()[*key];
                evolved.project_onto(&o.vector, o.exact.as_deref(), &positions)
            }
        };
        path.push(Some(value.clone()));
        descend(branch, steps, at + 1, slots, path, leaves)?;
        path.pop();
    }
    Ok(())
}

fn read_out(
    state: StateVector,
    slots: &[Slot],
    i: usize,
    path: &mut Vec<Option<String>>,
    leaves: &mut Vec<(Vec<String>, Probability)>,
) -> Result<()> {
    if state.norm_sqr() < PRUNE {
        return Ok(());
    }
    if i == slots.len() {
        let outcome = path
            .iter()
            .map(|v| v.clone().expect("every slot read"))
            .collect();
        leaves.push((outcome, leaf_weight(&state)));
        return Ok(());
    }
    if path[i].is_some() {
        return read_out(state, slots, i + 1, path, leaves);
    }
    let slot = &slots[i];
    let r = slot
        .recorder
        .ok_or_else(|| Error::InvariantBreach("coherent step without recorder".into()))?;
    for (value, digit) in &slot.values {
        let branch = state.restrict_digit(r, *digit);
        path[i] = Some(value.clone());
        read_out(branch, slots, i + 1, path, leaves)?;
    }
    path[i] = None;
    Ok(())
}
