// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::expr::BackboneExpr;
use crate::backbone::{Backbone, RegroupCandidate};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Regroup steps that turn the serial backbone into some target.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegroupTrace {
    pub width: usize,
    pub steps: Vec<(NodeId, NodeId)>,
}

impl RegroupTrace {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies every step to the serial backbone.
    pub fn replay(&self) -> Result<Backbone> {
        let mut b = Backbone::serial(self.width)?;
        for (i, (a, bb)) in self.steps.iter().enumerate() {
            b = b.regroup(*a, *bb).map_err(|e| Error::TraceReplay {
                step: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(b)
    }

    /// One `regroup a.msb a.lsb b.msb b.lsb` line per step.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.steps {
            let _ = writeln!(out, "regroup {} {} {} {}", a.msb, a.lsb, b.msb, b.lsb);
        }
        out
    }

    pub fn parse(width: usize, text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse {
                line: i + 1,
                message: m,
            };
            let mut parts = line.split_whitespace();
            if parts.next() != Some("regroup") {
                return Err(err(format!("expected `regroup`, got {line:?}")));
            }
            let nums: Vec<usize> = parts
                .map(|p| p.parse().map_err(|e| err(format!("bad index {p:?}: {e}"))))
                .collect::<Result<_>>()?;
            let [am, al, bm, bl] = nums[..] else {
                return Err(err(format!("expected four indices, got {}", nums.len())));
            };
            steps.push((NodeId::new(am, al), NodeId::new(bm, bl)));
        }
        Ok(Self { width, steps })
    }
}

/// Schedules regroups from the serial backbone to `target`.
///
/// Each step takes the lowest-column candidate that creates a target node,
/// removes a non-target node and only groups subtrees the target already has. Such a
/// candidate always exists until the target is reached, so the trace has
/// exactly one step per target node with a non-zero LSB.
pub fn derive_trace(target: &Backbone) -> Result<RegroupTrace> {
    let width = target.width();
    let want: BTreeSet<NodeId> = target.node_ids().copied().collect();
    let in_target = |n: &NodeId| n.is_input() || want.contains(n);
    let mut cur = Backbone::serial(width)?;
    let mut trace = RegroupTrace::new(width);
    while &cur != target {
        let step = cur
            .find_candidates()
            .into_iter()
            .rev()
            .find(|c: &RegroupCandidate| {
                want.contains(&c.created())
                    && !want.contains(&c.removed())
                    && in_target(&c.a)
                    && in_target(&c.b)
            })
            .ok_or_else(|| Error::TraceReplay {
                step: trace.len() + 1,
                reason: "no regroup moves toward the target".into(),
            })?;
        cur = cur.regroup(step.a, step.b)?;
        trace.steps.push((step.a, step.b));
    }
    Ok(trace)
}

/// Level increase caused by completing the backbone into a full adder.
pub fn completion_level_gap(b: &Backbone) -> usize {
    b.complete().graph.depth() - b.level()
}

/// Keeps expressions whose completed adder is at most `threshold` levels
/// deeper than the backbone itself.
pub fn filter_low_deficiency(candidates: &[BackboneExpr], threshold: usize) -> Vec<BackboneExpr> {
    candidates
        .iter()
        .filter(|e| {
            e.to_backbone()
                .is_ok_and(|b| completion_level_gap(&b) <= threshold)
        })
        .cloned()
        .collect()
}
