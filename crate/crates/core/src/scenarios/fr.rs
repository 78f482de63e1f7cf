use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact::{Surd, SurdSum};
use crate::hilbert::{make_product_space, FactorSpace, Operator, ProductSpace, StateVector};
use crate::measurement::{MeasurementStep, ObservableBasis, ProtocolStep};

use super::statement::fr_statements;
use super::Scenario;

/// Order of the four measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// F̄, F, W̄, W.
    #[default]
    FbarFWbarW,
    /// F, then W̄ on the coin before F̄ looks at it, then F̄, W.
    FWbarFbar,
    /// F̄, F, W, W̄.
    FbarFWWbar,
}

impl Ordering {
    pub const ALL: [Ordering; 3] = [Ordering::FbarFWbarW, Ordering::FWbarFbar, Ordering::FbarFWWbar];

    pub fn name(self) -> &'static str {
        match self {
            Ordering::FbarFWbarW => "FBAR_F_WBAR_W",
            Ordering::FWbarFbar => "F_WBAR_FBAR",
            Ordering::FbarFWWbar => "FBAR_F_W_WBAR",
        }
    }

    pub fn parse(s: &str) -> Option<Ordering> {
        Ordering::ALL.into_iter().find(|o| o.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    Fbar,
    F,
    Wbar,
    W,
}

impl Agent {
    pub const ALL: [Agent; 4] = [Agent::Fbar, Agent::F, Agent::Wbar, Agent::W];

    /// Memory factor label, also the name of the result variable.
    pub fn label(self) -> &'static str {
        match self {
            Agent::Fbar => "Fbar",
            Agent::F => "F",
            Agent::Wbar => "Wbar",
            Agent::W => "W",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrOptions {
    pub ordering: Ordering,
    pub collapse_at: Vec<Agent>,
    /// Adds a memory `Gbar` that copies F̄'s record right after she reads
    /// the coin.
    pub hidden_qubit: bool,
    /// `(variable, value)` pairs; each variable must belong to a collapsing
    /// step.
    pub postselect: Vec<(String, String)>,
}

impl FrOptions {
    pub fn collapse(mut self, agents: &[Agent]) -> Self {
        self.collapse_at.extend_from_slice(agents);
        self
    }

    pub fn select(mut self, variable: &str, value: &str) -> Self {
        self.postselect.push((variable.to_string(), value.to_string()));
        self
    }

    pub fn ordered(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn hidden(mut self) -> Self {
        self.hidden_qubit = true;
        self
    }

    /// Short description used as a scenario name.
    pub fn describe(&self) -> String {
        let mut parts = vec![self.ordering.name().to_string()];
        if self.hidden_qubit {
            parts.push("hidden Gbar".into());
        }
        let mut c: Vec<Agent> = self.collapse_at.clone();
        c.sort();
        c.dedup();
        if c.is_empty() {
            parts.push("no collapse".into());
        } else {
            let names: Vec<&str> = c.iter().map(|a| a.label()).collect();
            parts.push(format!("collapse {}", names.join("+")));
        }
        for (v, val) in &self.postselect {
            parts.push(format!("{v}={val}"));
        }
        parts.join(", ")
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn half() -> SurdSum {
    Surd::sqrt(&q(1, 2)).expect("√½").into()
}

/// `(|a⟩ ∓ |b⟩)/√2` on a pair of factors, with `a`, `b` label pairs.
fn pair_basis(
    name: &str,
    space: &ProductSpace,
    targets: [&str; 2],
    a: [&str; 2],
    b: [&str; 2],
    labels: [&str; 2],
) -> Result<ObservableBasis> {
    let pa = space.factor(space.position(targets[0])?);
    let pb = space.factor(space.position(targets[1])?);
    let db = pb.dim();
    let at = |l: [&str; 2]| -> Result<usize> {
        let i = pa.index_of(l[0]).ok_or_else(|| Error::UnknownLabel {
            factor: targets[0].into(),
            label: l[0].into(),
        })?;
        let j = pb.index_of(l[1]).ok_or_else(|| Error::UnknownLabel {
            factor: targets[1].into(),
            label: l[1].into(),
        })?;
        Ok(i * db + j)
    };
    let (ia, ib) = (at(a)?, at(b)?);
    let n = pa.dim() * db;
    let h = half();
    let mut minus = vec![SurdSum::zero(); n];
    minus[ia] = h.clone();
    minus[ib] = -&h;
    let mut plus = vec![SurdSum::zero(); n];
    plus[ia] = h.clone();
    plus[ib] = h;
    ObservableBasis::new(
        name,
        space,
        &targets,
        vec![(labels[0].to_string(), minus), (labels[1].to_string(), plus)],
    )
}

/// `↓ ↦ (↓+↑)/√2`, `↑ ↦ (↓−↑)/√2`.
fn transverse() -> Operator {
    let h = half();
    Operator::from_exact(2, vec![h.clone(), h.clone(), h.clone(), -&h]).expect("2x2")
}

fn space(hidden: bool) -> Result<Arc<ProductSpace>> {
    let mut factors = vec![
        FactorSpace::new("coin", ["heads", "tails"])?,
        FactorSpace::memory("Fbar", ["heads", "tails"])?,
        FactorSpace::new("spin", ["down", "up"])?,
        FactorSpace::memory("F", ["down", "up"])?,
    ];
    if hidden {
        factors.push(FactorSpace::memory("Gbar", ["heads", "tails"])?);
    }
    factors.push(FactorSpace::memory("Wbar", ["okbar", "failbar"])?);
    factors.push(FactorSpace::memory("W", ["ok", "fail"])?);
    make_product_space(factors)
}

/// The coin in `√(1/3)|heads⟩ + √(2/3)|tails⟩`, everything else blank or down.
pub fn fr_initial(space: &Arc<ProductSpace>) -> Result<StateVector> {
    let rest: Vec<&str> = space.factors()[1..]
        .iter()
        .map(|f| f.labels()[0].as_str())
        .collect();
    let with = |coin: &'static str| -> Vec<&str> {
        std::iter::once(coin).chain(rest.iter().copied()).collect()
    };
    StateVector::superpose(
        space.clone(),
        &[
            (Surd::sqrt(&q(1, 3))?, with("heads")),
            (Surd::sqrt(&q(2, 3))?, with("tails")),
        ],
    )
}

pub fn build_fr_scenario(options: &FrOptions) -> Result<Scenario> {
    let space = space(options.hidden_qubit)?;
    let initial = fr_initial(&space)?;

    let coin = ObservableBasis::computational(&space, "coin")?;
    let spin = ObservableBasis::computational(&space, "spin")?;
    let lbar = pair_basis(
        "Lbar",
        &space,
        ["coin", "Fbar"],
        ["heads", "heads"],
        ["tails", "tails"],
        ["okbar", "failbar"],
    )?;
    let lbar_blank = pair_basis(
        "Lbar",
        &space,
        ["coin", "Fbar"],
        ["heads", "blank"],
        ["tails", "blank"],
        ["okbar", "failbar"],
    )?;
    let l = pair_basis("L", &space, ["spin", "F"], ["down", "down"], ["up", "up"], ["ok", "fail"])?;

    let measure = |basis: &ObservableBasis, agent: Agent| {
        let mut m = MeasurementStep::new(basis.clone(), Some(agent.label()));
        m.collapse = options.collapse_at.contains(&agent);
        ProtocolStep::Measure(m)
    };
    let send = |control: &str| ProtocolStep::Controlled {
        control: control.to_string(),
        cases: vec![("tails".to_string(), transverse())],
        targets: vec!["spin".to_string()],
    };
    let gbar = || -> Result<ProtocolStep> {
        let f = space.factor(space.position("Fbar")?);
        let e = |i: usize| -> Vec<SurdSum> {
            (0..f.dim())
                .map(|k| if k == i { SurdSum::one() } else { SurdSum::zero() })
                .collect()
        };
        let record = ObservableBasis::new(
            "Fbar record",
            &space,
            &["Fbar"],
            vec![("heads".into(), e(1)), ("tails".into(), e(2))],
        )?;
        Ok(ProtocolStep::Measure(MeasurementStep::new(record, Some("Gbar"))))
    };

    let mut steps = Vec::new();
    match options.ordering {
        Ordering::FbarFWbarW | Ordering::FbarFWWbar => {
            steps.push(measure(&coin, Agent::Fbar));
            if options.hidden_qubit {
                steps.push(gbar()?);
            }
            steps.push(send("Fbar"));
            steps.push(measure(&spin, Agent::F));
            if options.ordering == Ordering::FbarFWbarW {
                steps.push(measure(&lbar, Agent::Wbar));
                steps.push(measure(&l, Agent::W));
            } else {
                steps.push(measure(&l, Agent::W));
                steps.push(measure(&lbar, Agent::Wbar));
            }
        }
        Ordering::FWbarFbar => {
            steps.push(send("coin"));
            steps.push(measure(&spin, Agent::F));
            steps.push(measure(&lbar_blank, Agent::Wbar));
            steps.push(measure(&coin, Agent::Fbar));
            if options.hidden_qubit {
                steps.push(gbar()?);
            }
            steps.push(measure(&l, Agent::W));
        }
    }

    for (variable, value) in &options.postselect {
        let m = steps
            .iter_mut()
            .filter_map(ProtocolStep::measurement_mut)
            .find(|m| m.variable() == variable)
            .ok_or_else(|| Error::UnknownVariable(variable.clone()))?;
        if !m.collapse {
            return Err(Error::PostselectWithoutCollapse(variable.clone()));
        }
        m.selected_outcome = Some(value.clone());
    }

    let mut scenario = Scenario::new(&options.describe(), initial, steps, fr_statements())?;
    scenario.report = Some(vec!["Wbar".into(), "W".into()]);
    Ok(scenario)
}

/// The six configurations compared in the statement matrix.
pub fn fr_suite() -> Vec<(String, FrOptions)> {
    use Agent::*;
    vec![
        ("no collapse".into(), FrOptions::default()),
        (
            "Fbar collapses (tails)".into(),
            FrOptions::default().collapse(&[Fbar]).select("Fbar", "tails"),
        ),
        (
            "Fbar and F collapse (tails)".into(),
            FrOptions::default().collapse(&[Fbar, F]).select("Fbar", "tails"),
        ),
        (
            "every agent collapses".into(),
            FrOptions::default().collapse(&[Fbar, F, Wbar, W]),
        ),
        (
            "Wbar before Fbar (okbar, tails)".into(),
            FrOptions::default()
                .ordered(Ordering::FWbarFbar)
                .collapse(&[Wbar, Fbar])
                .select("Wbar", "okbar")
                .select("Fbar", "tails"),
        ),
        (
            "W before Wbar".into(),
            FrOptions::default().ordered(Ordering::FbarFWWbar),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimension() {
        let s = build_fr_scenario(&FrOptions::default()).unwrap();
        assert_eq!(s.space.dimension(), 324);
        assert_eq!(s.variables(), ["Fbar", "F", "Wbar", "W"]);
    }

    #[test]
    fn postselecting_a_coherent_step_is_rejected() {
        let err = build_fr_scenario(&FrOptions::default().select("Fbar", "tails")).unwrap_err();
        assert_eq!(err, Error::PostselectWithoutCollapse("Fbar".into()));
    }

    #[test]
    fn orderings_round_trip_by_name() {
        for o in Ordering::ALL {
            assert_eq!(Ordering::parse(o.name()), Some(o));
        }
    }
}
