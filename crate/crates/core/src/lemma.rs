//! Errors and reports shared by the graph family generators and their checkers.

use serde::Serialize;
use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("instance would have {nodes} nodes, guard is {limit}")]
    SizeGuard { nodes: u128, limit: u128 },
    #[error("bad sequence: {0}")]
    BadSequence(String),
    #[error("check `{check}` failed: {witness}")]
    LemmaViolation { check: String, witness: String },
    #[error("not an instance of this family: {0}")]
    NotAFamilyInstance(String),
    #[error("cannot decode gadget index: {0}")]
    DecodeAmbiguity(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One verified property with a short human-readable summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub detail: String,
}

/// The list of checks that passed; a failing check aborts with `LemmaViolation`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub family: String,
    pub params: String,
    pub passed: Vec<CheckOutcome>,
}

impl LemmaReport {
    pub fn new(family: &str, params: String) -> Self {
        LemmaReport { family: family.to_string(), params, passed: Vec::new() }
    }

    pub fn pass(&mut self, check: &str, detail: impl Into<String>) {
        self.passed.push(CheckOutcome { check: check.to_string(), detail: detail.into() });
    }

    /// Records `check` as passed when `ok`, otherwise fails with the witness.
    pub fn require(&mut self, check: &str, ok: bool, detail: impl Into<String>) -> Result<(), FamilyError> {
        let detail = detail.into();
        if ok {
            self.pass(check, detail);
            Ok(())
        } else {
            Err(FamilyError::LemmaViolation { check: check.to_string(), witness: detail })
        }
    }
}
