use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::exact::{Surd, SurdSum};
use crate::hilbert::{make_product_space, FactorSpace, ProductSpace, StateVector, BLANK};
use crate::measurement::{MeasurementStep, ObservableBasis, ProtocolStep};
use crate::scenarios::{Modality, Predicate, Scenario, Statement, Verdict};

use super::ast::*;
use super::diagnostic::Diagnostic;

/// Name used when the file sets no `option name`.
pub const DEFAULT_NAME: &str = "scenario";

struct Lowerer<'a> {
    doc: &'a Document,
    whole: Span,
    diagnostics: Vec<Diagnostic>,
    /// Names whose declaration failed; later uses stay silent.
    broken: HashSet<String>,
}

fn big(n: &num_bigint::BigUint) -> BigInt {
    BigInt::from(n.clone())
}

fn rational(q: &Rational) -> Result<BigRational, String> {
    let den = q.den.as_ref().map_or_else(|| BigInt::from(1), big);
    if den.is_zero() {
        return Err(format!("zero denominator in `{q}`"));
    }
    Ok(BigRational::new(big(&q.num), den))
}

fn coef_value(coef: &Option<Coef>) -> Result<Surd, String> {
    let exact = |e: Error| e.to_string();
    match coef {
        None => Ok(Surd::one()),
        Some(Coef::Rational(q)) => Ok(Surd::rational(rational(q)?)),
        Some(Coef::Sqrt(q)) => Surd::sqrt(&rational(q)?).map_err(exact),
        Some(Coef::OverSqrt(q, n)) => {
            if n.is_zero() {
                return Err("division by sqrt(0)".into());
            }
            let inv = BigRational::new(BigInt::from(1), big(n));
            Surd::new(rational(q)?, &inv).map_err(exact)
        }
    }
}

fn list(labels: &[String]) -> String {
    labels.join(", ")
}

impl Lowerer<'_> {
    fn error(&mut self, span: Span, message: String, hint: Option<String>) {
        self.diagnostics.push(Diagnostic::error(span, message, hint));
    }

    fn no_preparation(&mut self) {
        self.error(
            self.whole,
            "no preparation".into(),
            Some("add `prepare FACTOR = AMPLITUDES`, for example `prepare coin = sqrt(1/2) heads + sqrt(1/2) tails`".into()),
        );
    }

    fn decls(&self) -> impl Iterator<Item = (usize, &Spanned<Decl>)> {
        self.doc.decls.iter().enumerate()
    }

    fn basis_decl(&self, name: &str, before: usize) -> Option<&Decl> {
        self.doc.decls[..before]
            .iter()
            .map(|d| &d.node)
            .find(|d| matches!(d, Decl::Basis { name: n, .. } if n.name == name))
    }

    /// Record labels of an agent: the outcomes of its first measurement.
    fn agent_records(&mut self, agent: &Ident, factors: &HashMap<String, Vec<String>>) -> Option<Vec<String>> {
        let first = self.decls().find_map(|(i, d)| match &d.node {
            Decl::Measure {
                observable,
                recorder,
                ..
            } if recorder.name == agent.name => Some((i, observable.clone())),
            _ => None,
        });
        let Some((at, observable)) = first else {
            self.error(
                agent.span,
                format!("agent `{agent}` never records a measurement"),
                Some(format!("declare its memory explicitly: `factor {agent} {{ blank, ... }}`")),
            );
            return None;
        };
        let outcomes: Vec<String> = if let Some(Decl::Basis { outcomes, .. }) = self.basis_decl(&observable.name, at) {
            outcomes.iter().map(|o| o.label.name.clone()).collect()
        } else if let Some(labels) = factors.get(&observable.name) {
            labels.clone()
        } else {
            // reported when the measurement itself is lowered
            self.broken.insert(agent.name.clone());
            return None;
        };
        if outcomes.len() != 2 {
            self.error(
                agent.span,
                format!(
                    "agent `{agent}` first measures `{observable}`, which has {} outcomes; agent memories hold two records",
                    outcomes.len()
                ),
                Some(format!("declare the memory explicitly: `factor {agent} {{ blank, ... }}`")),
            );
            return None;
        }
        Some(outcomes)
    }

    fn space(&mut self) -> Option<Arc<ProductSpace>> {
        let mut factors: Vec<(Ident, Option<Vec<String>>)> = Vec::new();
        let mut plain: HashMap<String, Vec<String>> = HashMap::new();
        let mut seen: HashMap<String, Span> = HashMap::new();
        let doc = self.doc;
        for d in &doc.decls {
            let (name, labels) = match &d.node {
                Decl::Factor { name, labels } => {
                    let labels: Vec<String> = labels.iter().map(|l| l.name.clone()).collect();
                    plain.insert(name.name.clone(), labels.clone());
                    (name, Some(labels))
                }
                Decl::Agent { name } => (name, None),
                _ => continue,
            };
            if let Some(prev) = seen.get(&name.name) {
                let prev = *prev;
                self.error(
                    name.span,
                    format!("`{name}` is declared twice"),
                    Some(format!("first declared at {prev}")),
                );
                continue;
            }
            seen.insert(name.name.clone(), name.span);
            factors.push((name.clone(), labels));
        }
        let mut spaces = Vec::new();
        for (name, labels) in factors {
            let f = match labels {
                Some(labels) => FactorSpace::new(name.name.clone(), labels),
                None => match self.agent_records(&name, &plain) {
                    Some(records) => FactorSpace::memory(name.name.clone(), records),
                    None => continue,
                },
            };
            match f {
                Ok(f) => spaces.push(f),
                Err(e) => self.error(name.span, e.to_string(), None),
            }
        }
        if !self.diagnostics.is_empty() {
            return None;
        }
        let prepared = doc.decls.iter().any(|d| matches!(d.node, Decl::Prepare { .. }));
        if spaces.is_empty() && !prepared {
            self.no_preparation();
            return None;
        }
        if spaces.is_empty() {
            self.error(
                self.whole,
                "no factors declared".into(),
                Some("declare systems with `factor NAME { label, label }` or `agent NAME`".into()),
            );
            return None;
        }
        match make_product_space(spaces) {
            Ok(s) => Some(s),
            Err(e) => {
                self.error(self.whole, e.to_string(), None);
                None
            }
        }
    }

    fn factor_positions(&mut self, space: &ProductSpace, targets: &[Ident]) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        let mut ok = true;
        for t in targets {
            match space.position(&t.name) {
                Ok(p) if out.contains(&p) => {
                    self.error(t.span, format!("factor `{t}` listed twice"), None);
                    ok = false;
                }
                Ok(p) => out.push(p),
                Err(_) => {
                    if !self.broken.contains(&t.name) {
                        self.error(t.span, format!("unknown factor `{t}`"), Some(self.known_factors(space)));
                    }
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn known_factors(&self, space: &ProductSpace) -> String {
        let names: Vec<String> = space.factors().iter().map(|f| f.label().to_string()).collect();
        format!("declared factors: {}", list(&names))
    }

    /// Exact vector on the target subspace, target mixed-radix order.
    fn amplitude_vector(&mut self, space: &ProductSpace, positions: &[usize], expr: &AmpExpr) -> Option<Vec<SurdSum>> {
        let dims: Vec<usize> = positions.iter().map(|&p| space.factor(p).dim()).collect();
        let mut v = vec![SurdSum::zero(); dims.iter().product()];
        let mut ok = true;
        for term in &expr.terms {
            if term.product.len() != positions.len() {
                self.error(
                    term.span,
                    format!(
                        "term names {} label(s) but acts on {} factor(s)",
                        term.product.len(),
                        positions.len()
                    ),
                    Some("give one label per factor, joined by `*`".into()),
                );
                ok = false;
                continue;
            }
            let mut index = 0;
            for ((label, &p), d) in term.product.iter().zip(positions).zip(&dims) {
                let f = space.factor(p);
                match f.index_of(&label.name) {
                    Some(k) => index = index * d + k,
                    None => {
                        self.error(
                            label.span,
                            format!("factor `{}` has no label `{label}`", f.label()),
                            Some(format!("labels of `{}`: {}", f.label(), list(f.labels()))),
                        );
                        ok = false;
                    }
                }
            }
            match coef_value(&term.coef) {
                Ok(c) => {
                    let c = if term.negative { -c } else { c };
                    if ok {
                        v[index].add_surd(&c);
                    }
                }
                Err(m) => {
                    self.error(term.span, format!("malformed amplitude: {m}"), None);
                    ok = false;
                }
            }
        }
        ok.then_some(v)
    }

    fn basis(&mut self, space: &ProductSpace, name: &Ident, targets: &[Ident], outcomes: &[OutcomeDef]) -> Option<ObservableBasis> {
        let positions = self.factor_positions(space, targets)?;
        let mut vectors = Vec::new();
        let mut labels = HashSet::new();
        let mut ok = true;
        for o in outcomes {
            if !labels.insert(o.label.name.as_str()) {
                self.error(o.label.span, format!("basis `{name}` repeats outcome `{}`", o.label), None);
                ok = false;
                continue;
            }
            match self.amplitude_vector(space, &positions, &o.amplitude) {
                Some(v) if v.iter().all(SurdSum::is_zero) => {
                    self.error(
                        o.amplitude.span,
                        format!("outcome `{}` of basis `{name}` is the zero vector", o.label),
                        Some("terms with the same labels add up; check for cancelling or repeated terms".into()),
                    );
                    ok = false;
                }
                Some(v) => vectors.push((o.label.name.clone(), v)),
                None => ok = false,
            }
        }
        if !ok {
            return None;
        }
        let dim: usize = positions.iter().map(|&p| space.factor(p).dim()).product();
        if vectors.len() > dim {
            self.error(
                name.span,
                format!("basis `{name}` declares {} outcomes on a {dim}-dimensional space", vectors.len()),
                None,
            );
            return None;
        }
        let target_names: Vec<&str> = targets.iter().map(Ident::as_str).collect();
        match ObservableBasis::new(name.name.clone(), space, &target_names, vectors) {
            Ok(b) => Some(b),
            Err(Error::NotOrthonormal { a, b, inner, .. }) if a == b => {
                let span = outcomes.iter().find(|o| o.label.name == a).map_or(name.span, |o| o.amplitude.span);
                self.error(
                    span,
                    format!("outcome `{a}` of basis `{name}` is not normalized (squared norm {inner:.6})"),
                    Some("scale the coefficients so their squares sum to 1".into()),
                );
                None
            }
            Err(Error::NotOrthonormal { a, b, inner, .. }) => {
                self.error(
                    name.span,
                    format!("outcomes `{a}` and `{b}` of basis `{name}` are not orthogonal (inner product {inner:.6})"),
                    None,
                );
                None
            }
            Err(e) => {
                self.error(name.span, e.to_string(), None);
                None
            }
        }
    }

    fn prepare(&mut self, space: &Arc<ProductSpace>, targets: &[Ident], expr: &AmpExpr) -> Option<StateVector> {
        let positions = self.factor_positions(space, targets)?;
        let local = self.amplitude_vector(space, &positions, expr)?;
        let dims: Vec<usize> = positions.iter().map(|&p| space.factor(p).dim()).collect();
        let mut terms = Vec::new();
        for (mut index, amp) in local.iter().enumerate() {
            if amp.is_zero() {
                continue;
            }
            let mut digits = vec![0; space.factors().len()];
            for (&p, &d) in positions.iter().zip(&dims).rev() {
                digits[p] = index % d;
                index /= d;
            }
            for surd in amp.terms() {
                let labels: Vec<&str> = digits
                    .iter()
                    .enumerate()
                    .map(|(p, &k)| space.factor(p).labels()[k].as_str())
                    .collect();
                terms.push((surd, labels));
            }
        }
        match StateVector::superpose(space.clone(), &terms) {
            Ok(s) => Some(s),
            Err(e) => {
                let message = match e {
                    Error::ZeroVector => "prepared state is the zero vector".to_string(),
                    e => e.to_string(),
                };
                self.error(expr.span, message, None);
                None
            }
        }
    }

    fn observable(
        &mut self,
        space: &ProductSpace,
        bases: &HashMap<String, ObservableBasis>,
        ident: &Ident,
    ) -> Option<ObservableBasis> {
        if let Some(b) = bases.get(&ident.name) {
            return Some(b.clone());
        }
        if space.position(&ident.name).is_ok() {
            return ObservableBasis::computational(space, &ident.name).ok();
        }
        if !self.broken.contains(&ident.name) {
            let mut known: Vec<String> = bases.keys().cloned().collect();
            known.sort();
            self.error(
                ident.span,
                format!("unknown basis or factor `{ident}`"),
                Some(if known.is_empty() {
                    self.known_factors(space)
                } else {
                    format!("declared bases: {}; {}", list(&known), self.known_factors(space))
                }),
            );
        }
        None
    }

    fn measure(
        &mut self,
        space: &ProductSpace,
        bases: &HashMap<String, ObservableBasis>,
        observable: &Ident,
        recorder: &Ident,
        collapse: &Collapse,
    ) -> Option<MeasurementStep> {
        let basis = self.observable(space, bases, observable);
        let r = match space.position(&recorder.name) {
            Ok(p) => Some(space.factor(p)),
            Err(_) => {
                if !self.broken.contains(&recorder.name) {
                    self.error(recorder.span, format!("unknown recorder `{recorder}`"), Some(self.known_factors(space)));
                }
                None
            }
        };
        let (basis, r) = (basis?, r?);
        if r.blank_index().is_none() {
            self.error(
                recorder.span,
                format!("recorder `{recorder}` has no `{BLANK}` label"),
                Some(format!("give it a `{BLANK}` ready state: `factor {recorder} {{ {BLANK}, ... }}`")),
            );
            return None;
        }
        if basis.targets().contains(&recorder.name) {
            self.error(recorder.span, format!("`{recorder}` cannot record a measurement of itself"), None);
            return None;
        }
        if r.record_indices().len() < basis.declared_outcomes().len() {
            self.error(
                recorder.span,
                format!(
                    "recorder `{recorder}` has {} record labels for {} outcomes",
                    r.record_indices().len(),
                    basis.declared_outcomes().len()
                ),
                None,
            );
            return None;
        }
        let mut m = MeasurementStep::new(basis, Some(&recorder.name));
        match collapse {
            Collapse::No => {}
            Collapse::Yes => m = m.collapsing(),
            Collapse::Select(v) => {
                let values = m.values(space).ok()?;
                if !values.iter().any(|(_, x)| *x == v.name) {
                    let names: Vec<String> = values.into_iter().map(|(_, x)| x).collect();
                    self.error(
                        v.span,
                        format!("`{recorder}` cannot record `{v}`"),
                        Some(format!("possible records: {}", list(&names))),
                    );
                    return None;
                }
                m = m.selecting(&v.name);
            }
        }
        Some(m)
    }

    fn control(
        &mut self,
        space: &ProductSpace,
        bases: &HashMap<String, ObservableBasis>,
        control: &Ident,
        label: &Ident,
        basis: &Ident,
        targets: &[Ident],
    ) -> Option<ProtocolStep> {
        let c = match space.position(&control.name) {
            Ok(p) => Some(space.factor(p)),
            Err(_) => {
                self.error(control.span, format!("unknown factor `{control}`"), Some(self.known_factors(space)));
                None
            }
        };
        if let Some(c) = c {
            if c.index_of(&label.name).is_none() {
                self.error(
                    label.span,
                    format!("factor `{control}` has no label `{label}`"),
                    Some(format!("labels of `{control}`: {}", list(c.labels()))),
                );
                return None;
            }
        }
        let b = match bases.get(&basis.name) {
            Some(b) => Some(b),
            None => {
                if !self.broken.contains(&basis.name) {
                    self.error(basis.span, format!("unknown basis `{basis}`"), None);
                }
                None
            }
        };
        let positions = self.factor_positions(space, targets);
        let (_, b, positions) = (c?, b?, positions?);
        if targets.iter().any(|t| t.name == control.name) {
            self.error(control.span, format!("`{control}` cannot control itself"), None);
            return None;
        }
        let dim: usize = positions.iter().map(|&p| space.factor(p).dim()).product();
        if dim != b.dimension() {
            self.error(
                basis.span,
                format!("basis `{basis}` acts on dimension {} but the targets have dimension {dim}", b.dimension()),
                None,
            );
            return None;
        }
        match b.as_operator() {
            Ok(op) => Some(ProtocolStep::Controlled {
                control: control.name.clone(),
                cases: vec![(label.name.clone(), op)],
                targets: targets.iter().map(|t| t.name.clone()).collect(),
            }),
            Err(_) => {
                self.error(
                    basis.span,
                    format!(
                        "basis `{basis}` declares {} of {} outcomes; a unitary needs all of them",
                        b.declared_outcomes().len(),
                        b.dimension()
                    ),
                    Some("column k of the unitary is the k-th declared outcome".into()),
                );
                None
            }
        }
    }

    fn predicate(&mut self, space: &ProductSpace, values: &HashMap<String, Vec<String>>, p: &PredicateExpr) -> Option<Predicate> {
        let mut ok = true;
        for a in &p.atoms {
            match values.get(&a.variable.name) {
                None => {
                    let mut known: Vec<String> = values.keys().cloned().collect();
                    known.sort();
                    self.error(
                        a.variable.span,
                        format!("unknown variable `{}`", a.variable),
                        Some(if known.is_empty() {
                            "no measurement is recorded".into()
                        } else {
                            format!("recorded variables: {}", list(&known))
                        }),
                    );
                    ok = false;
                }
                Some(vals) if !vals.contains(&a.value.name) => {
                    self.error(
                        a.value.span,
                        format!("variable `{}` has no value `{}`", a.variable, a.value),
                        Some(format!("values: {}", list(vals))),
                    );
                    ok = false;
                }
                Some(_) => {}
            }
        }
        let _ = space;
        ok.then(|| {
            Predicate(
                p.atoms
                    .iter()
                    .map(|a| (a.variable.name.clone(), a.value.name.clone()))
                    .collect(),
            )
        })
    }

    fn run(mut self) -> Result<Scenario, Vec<Diagnostic>> {
        let space = self.space();
        let Some(space) = space else {
            return Err(self.diagnostics);
        };

        let mut bases: HashMap<String, ObservableBasis> = HashMap::new();
        let mut initial: Option<StateVector> = None;
        let mut prepared_at: Option<Span> = None;
        let mut steps = Vec::new();
        let mut statements = Vec::new();
        let mut statement_ids: HashSet<String> = HashSet::new();
        let mut values: HashMap<String, Vec<String>> = HashMap::new();
        let mut name: Option<String> = None;
        let mut report: Option<(Vec<Ident>, Span)> = None;

        let doc = self.doc;
        for d in &doc.decls {
            match &d.node {
                Decl::Factor { .. } | Decl::Agent { .. } => {}
                Decl::Basis {
                    name: bname,
                    targets,
                    outcomes,
                } => {
                    if bases.contains_key(&bname.name) || space.position(&bname.name).is_ok() {
                        self.error(bname.span, format!("`{bname}` is already declared"), None);
                        continue;
                    }
                    match self.basis(&space, bname, targets, outcomes) {
                        Some(b) => {
                            bases.insert(bname.name.clone(), b);
                        }
                        None => {
                            self.broken.insert(bname.name.clone());
                        }
                    }
                }
                Decl::Prepare { targets, amplitude } => {
                    if let Some(first) = prepared_at {
                        self.error(
                            d.span,
                            "second preparation".into(),
                            Some(format!("the state is already prepared at {first}")),
                        );
                        continue;
                    }
                    prepared_at = Some(d.span);
                    initial = self.prepare(&space, targets, amplitude);
                }
                Decl::Measure {
                    observable,
                    recorder,
                    collapse,
                } => {
                    if let Some(m) = self.measure(&space, &bases, observable, recorder, collapse) {
                        if values.contains_key(m.variable()) {
                            self.error(
                                recorder.span,
                                format!("`{recorder}` already records an earlier measurement"),
                                Some("each recorder takes one record; declare another agent".into()),
                            );
                            continue;
                        }
                        let vals = m.values(&space).unwrap_or_default();
                        values.insert(m.variable().to_string(), vals.into_iter().map(|(_, v)| v).collect());
                        steps.push(ProtocolStep::Measure(m));
                    }
                }
                Decl::Control {
                    control,
                    label,
                    basis,
                    targets,
                } => {
                    if let Some(s) = self.control(&space, &bases, control, label, basis, targets) {
                        steps.push(s);
                    }
                }
                Decl::Statement { .. } | Decl::Option { .. } => {}
            }
        }

        // statements and options see every measurement of the protocol
        let doc = self.doc;
        for d in &doc.decls {
            match &d.node {
                Decl::Statement {
                    id,
                    modality,
                    event,
                    condition,
                    expect,
                } => {
                    if !statement_ids.insert(id.name.clone()) {
                        self.error(id.span, format!("statement `{id}` is declared twice"), None);
                        continue;
                    }
                    let event = self.predicate(&space, &values, event);
                    let condition = condition.as_ref().map(|c| self.predicate(&space, &values, c));
                    let (Some(event), Some(condition)) = (event, condition.map_or(Some(None), |c| c.map(Some))) else {
                        continue;
                    };
                    statements.push(Statement {
                        id: id.name.clone(),
                        modality: match modality {
                            ModalityKw::Certain => Modality::Certain,
                            ModalityKw::Possible => Modality::Possible,
                        },
                        event,
                        condition,
                        expect: expect.as_ref().and_then(|e| Verdict::parse(&e.name)),
                    });
                }
                Decl::Option { key, values: vals } => match key.name.as_str() {
                    "name" => {
                        let text: Vec<&str> = vals.iter().map(Ident::as_str).collect();
                        name = Some(text.join(", "));
                    }
                    "report" => {
                        for v in vals {
                            if !values.contains_key(&v.name) {
                                self.error(v.span, format!("unknown variable `{v}`"), None);
                            }
                        }
                        report = Some((vals.clone(), d.span));
                    }
                    _ => self.error(
                        key.span,
                        format!("unknown option `{key}`"),
                        Some("known options: name, report".into()),
                    ),
                },
                _ => {}
            }
        }

        if prepared_at.is_none() {
            self.no_preparation();
        }
        if !self.diagnostics.is_empty() {
            return Err(self.diagnostics);
        }
        let Some(initial) = initial else {
            return Err(self.diagnostics);
        };
        let name = name.unwrap_or_else(|| DEFAULT_NAME.to_string());
        let scenario = Scenario::new(&name, initial, steps, statements).and_then(|s| match report {
            Some((vars, _)) => s.with_report(vars.into_iter().map(|v| v.name).collect()),
            None => Ok(s),
        });
        scenario.map_err(|e| vec![Diagnostic::error(self.whole, e.to_string(), None)])
    }
}

/// Resolves names, builds exact bases and the prepared state, and checks
/// every step. `whole` spans the source and anchors file-level diagnostics.
pub fn lower_document(doc: &Document, whole: Span) -> Result<Scenario, Vec<Diagnostic>> {
    Lowerer {
        doc,
        whole,
        diagnostics: Vec::new(),
        broken: HashSet::new(),
    }
    .run()
}
