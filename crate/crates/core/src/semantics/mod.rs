//! Executable meaning of Rhyme programs.
//!
//! One interpreter drives any [`QuantumBackend`]: the statevector
//! [`SimBackend`] for `run`, or the circuit builder for `compile`.

pub mod backend;
pub mod classical;
mod interp;
pub mod tables;

use std::fmt;

use crate::engine::EngineError;
use crate::frontend::{Diagnostic, Span};
use crate::types::ClassicalValue;

pub use backend::{MeasureOutcome, QuantumBackend, SimBackend};
pub use interp::{execute, Interpreter};
pub use tables::PhaseTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    Evaluation,
    Quantum,
    Bipartition,
    Capacity,
    Synthesis,
    NotGateExpressible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub message: String,
    pub span: Option<Span>,
}

impl RuntimeError {
    pub fn new(kind: RuntimeErrorKind, message: impl Into<String>) -> Self {
        RuntimeError {
            kind,
            message: message.into(),
            span: None,
        }
    }

    /// Attaches a span unless one is already set.
    pub fn at(mut self, span: Span) -> Self {
        self.span.get_or_insert(span);
        self
    }

    pub fn kind(mut self, kind: RuntimeErrorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_context(mut self, context: impl fmt::Display) -> Self {
        self.message = format!("{} ({context})", self.message);
        self
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.message.clone(), self.span.unwrap_or_default())
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RuntimeError {}

impl From<EngineError> for RuntimeError {
    fn from(e: EngineError) -> Self {
        let kind = match e {
            EngineError::CapacityExceeded { .. } => RuntimeErrorKind::Capacity,
            _ => RuntimeErrorKind::Quantum,
        };
        RuntimeError::new(kind, e.to_string())
    }
}

/// One measurement performed during an execution.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub variable: String,
    pub value: ClassicalValue,
}

/// Observable result of one execution (one shot).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionResult {
    pub printed: Vec<String>,
    pub measurements: Vec<MeasurementRecord>,
    pub warnings: Vec<Diagnostic>,
}

impl ExecutionResult {
    /// Histogram key: printed lines joined by single spaces.
    pub fn outcome_key(&self) -> String {
        self.printed.join(" ")
    }
}
