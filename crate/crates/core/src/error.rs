// SPDX-License-Identifier: Apache-2.0

use crate::graph::{NodeId, Violation};
use crate::policy::OptimizationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bit width {0} is out of range")]
    InvalidWidth(usize),

    #[error("graph is incomplete: no output node for bit {bit}")]
    Incomplete { bit: usize },

    #[error("invalid prefix graph: {}", join_violations(.0))]
    InvalidGraph(Vec<Violation>),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("regroup rejected: {0}")]
    Regroup(String),

    #[error("invalid backbone: {0}")]
    InvalidBackbone(String),

    #[error("{tool} rejected: {reason}")]
    Rejected { tool: &'static str, reason: String },

    #[error("no path from {start} to {end}")]
    NoPath { start: NodeId, end: NodeId },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("arrival profile covers {got} bits, expected {expected}")]
    ProfileWidth { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trace replay failed at step {step}: {reason}")]
    TraceReplay { step: usize, reason: String },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("policy aborted after {} applied actions: {reason}", .trace.len())]
    PolicyAbort {
        reason: String,
        trace: Box<OptimizationTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
