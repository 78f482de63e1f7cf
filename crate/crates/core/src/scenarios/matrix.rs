use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measurement::Probability;

use super::fr::{build_fr_scenario, FrOptions};
use super::statement::{fr_statements, Statement, StatementResult, Thresholds, Verdict};

/// Name of the row that merges verdicts across configurations.
pub const MIXED_ROW: &str = "mixed (non-physical)";

#[derive(Clone, Debug)]
pub struct MatrixRow {
    pub configuration: String,
    pub cells: Vec<StatementResult>,
}

impl MatrixRow {
    pub fn all_hold(&self) -> bool {
        !self.cells.is_empty() && self.cells.iter().all(|c| c.verdict == Verdict::Holds)
    }
}

/// Verdicts of the FR statements, one row per configuration.
#[derive(Clone, Debug)]
pub struct StatementMatrix {
    pub statements: Vec<String>,
    pub rows: Vec<MatrixRow>,
    /// Best verdict per statement over all rows, as if each statement could
    /// be read off whichever configuration suits it.
    pub mixed: Option<MatrixRow>,
}

pub fn statement_matrix(configurations: &[(String, FrOptions)]) -> Result<StatementMatrix> {
    statement_matrix_with(configurations, &Thresholds::default(), false)
}

/// Evaluates SQ_FBAR, SQ_WBAR and SQ_W on every configuration. A row where
/// all three hold is an internal error.
pub fn statement_matrix_with(
    configurations: &[(String, FrOptions)],
    thresholds: &Thresholds,
    mixed: bool,
) -> Result<StatementMatrix> {
    let statements = fr_statements();
    let rows = configurations
        .par_iter()
        .map(|(name, options)| {
            let scenario = build_fr_scenario(options)?;
            let cells = statements
                .iter()
                .map(|s| scenario.evaluate_with(s, thresholds))
                .collect::<Result<Vec<_>>>()?;
            Ok(MatrixRow {
                configuration: name.clone(),
                cells,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(row) = rows.iter().find(|r| r.all_hold()) {
        return Err(Error::InvariantBreach(format!(
            "configuration `{}` satisfies every statement",
            row.configuration
        )));
    }
    let mixed = (mixed && !rows.is_empty()).then(|| mixed_row(&statements, &rows));
    Ok(StatementMatrix {
        statements: statements.iter().map(|s| s.id.clone()).collect(),
        rows,
        mixed,
    })
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => 2,
        Verdict::Vacuous => 1,
        Verdict::Fails => 0,
    }
}

fn mixed_row(statements: &[Statement], rows: &[MatrixRow]) -> MatrixRow {
    let cells = (0..statements.len())
        .map(|j| {
            rows.iter()
                .map(|r| &r.cells[j])
                .max_by_key(|c| rank(c.verdict))
                .cloned()
                .expect("rows not empty")
        })
        .collect();
    MatrixRow {
        configuration: MIXED_ROW.to_string(),
        cells,
    }
}

fn cell_text(c: &StatementResult) -> String {
    match (&c.verdict, &c.probability.exact) {
        (Verdict::Vacuous, _) => "VACUOUS".into(),
        (v, Some(x)) => format!("{v} ({x})"),
        (v, None) => format!("{v} ({:.6})", c.probability.p),
    }
}

fn cell_json(c: &StatementResult) -> Value {
    let Probability { p, exact } = &c.probability;
    json!({
        "statement": c.id,
        "verdict": c.verdict.to_string(),
        "p": p,
        "p_exact": exact.as_ref().map(ToString::to_string),
    })
}

impl StatementMatrix {
    pub fn to_json(&self) -> Value {
        let row = |r: &MatrixRow| {
            json!({
                "configuration": r.configuration,
                "cells": r.cells.iter().map(cell_json).collect::<Vec<_>>(),
            })
        };
        json!({
            "statements": self.statements,
            "rows": self.rows.iter().map(row).collect::<Vec<_>>(),
            "mixed": self.mixed.as_ref().map(row),
        })
    }

    pub fn to_table(&self) -> String {
        let mut header = vec!["configuration".to_string()];
        header.extend(self.statements.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .chain(self.mixed.iter())
            .map(|r| {
                std::iter::once(r.configuration.clone())
                    .chain(r.cells.iter().map(cell_text))
                    .collect()
            })
            .collect();
        crate::measurement::render_columns(&header, &rows)
    }
}
