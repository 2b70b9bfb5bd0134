// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, VecDeque};

use super::call::ToolCall;
use super::run::{DecisionContext, PhaseState};
use super::Policy;
use crate::backbone::Backbone;
use crate::backbone::RegroupCandidate;
use crate::error::{Error, Result};
use crate::graph::{theoretical_min_level, NodeId};
use crate::timing::{backbone_cost, graph_arrivals, ArrivalProfile, DelayModel};

/// Phase I: take the regroup with the best resulting score while it
/// strictly improves on the current backbone and the target is unmet. The
/// score is the root arrival, ties broken by the summed arrival of all
/// backbone nodes so plateaus where only inner subtrees get faster are
/// still crossed.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyBackbonePolicy;

const EPS: f64 = 1e-12;

fn score(b: &Backbone, profile: &ArrivalProfile, model: &DelayModel) -> Result<(f64, f64)> {
    let total = b.arrivals(profile, model).values().sum();
    Ok((backbone_cost(b, profile, model)?, total))
}

fn better(x: (f64, f64), y: (f64, f64)) -> bool {
    x.0 < y.0 - EPS || ((x.0 - y.0).abs() <= EPS && x.1 < y.1 - EPS)
}

impl Policy for GreedyBackbonePolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        let PhaseState::Backbone {
            backbone,
            candidates,
            cost,
            ..
        } = &ctx.state
        else {
            return Err(Error::Policy(
                "greedy backbone policy used outside phase 1".into(),
            ));
        };
        if *cost <= ctx.target {
            return Ok(ToolCall::Finish1 {
                reason: Some("target met".into()),
            });
        }
        let current = score(backbone, &ctx.profile, &ctx.model)?;
        let mut best: Option<((f64, f64), RegroupCandidate)> = None;
        for c in candidates {
            let next = backbone.regroup(c.a, c.b)?;
            let s = score(&next, &ctx.profile, &ctx.model)?;
            if best.is_none_or(|(b, _)| better(s, b)) {
                best = Some((s, *c));
            }
        }
        Ok(match best {
            Some((s, c)) if better(s, current) => ToolCall::Regroup { a: c.a, b: c.b },
            _ => ToolCall::Finish1 {
                reason: Some("no regroup improves the cost".into()),
            },
        })
    }
}

/// Phase II: try `level_opt` on critical nodes, least level-efficient first,
/// then `fanout_opt` and `node_clone` on the critical drivers with the most
/// fanout. The first edit that lowers the delay is chosen.
#[derive(Debug, Clone, Copy, Default)]
pub struct CriticalPathRefinePolicy;

impl CriticalPathRefinePolicy {
    fn candidates(ctx: &DecisionContext) -> Vec<ToolCall> {
        let PhaseState::Graph {
            graph, critical, ..
        } = &ctx.state
        else {
            return Vec::new();
        };
        let on_path: BTreeSet<NodeId> = critical.nodes().collect();
        let mut nodes: Vec<_> = critical
            .entries
            .iter()
            .rev()
            .filter(|e| e.parents.is_some())
            .collect();

        let mut out = Vec::new();
        nodes.sort_by_key(|e| {
            std::cmp::Reverse(e.level.saturating_sub(theoretical_min_level(e.span)))
        });
        for e in &nodes {
            if e.level > theoretical_min_level(e.span) {
                out.push(ToolCall::LevelOpt { target: e.node });
            }
        }

        nodes.sort_by_key(|e| std::cmp::Reverse(graph.fanout(&e.node)));
        for e in nodes.iter().filter(|e| graph.fanout(&e.node) >= 2) {
            let mut consumers: Vec<NodeId> = graph
                .consumers(&e.node)
                .iter()
                .filter(|c| graph.parents(c).is_some_and(|p| p.lp == e.node))
                .copied()
                .collect();
            consumers.sort_by_key(|c| on_path.contains(c));
            for c in consumers {
                out.push(ToolCall::FanoutOpt {
                    target: e.node,
                    consumer: c,
                });
            }
            out.push(ToolCall::NodeClone { target: e.node });
        }
        out
    }
}

impl Policy for CriticalPathRefinePolicy {
    fn name(&self) -> &str {
        "critical-path"
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        let PhaseState::Graph {
            graph,
            report,
            critical,
            ..
        } = &ctx.state
        else {
            return Err(Error::Policy(
                "refinement policy used outside phase 2".into(),
            ));
        };
        if report.slack(ctx.target) >= 0.0 {
            return Ok(ToolCall::Finish2 {
                reason: Some("timing met".into()),
            });
        }
        let crit: BTreeSet<NodeId> = critical.nodes().collect();
        for call in Self::candidates(ctx) {
            let action = call.refine_action().expect("refinement call");
            let Ok(out) = action.apply(graph, Some(&crit)) else {
                continue;
            };
            let delay = graph_arrivals(&out.graph, &ctx.profile, &ctx.model)?.delay;
            if delay < report.delay {
                return Ok(call);
            }
        }
        Ok(ToolCall::Finish2 {
            reason: Some("no applicable tool".into()),
        })
    }
}

/// Greedy backbone search followed by critical-path refinement.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPolicy {
    backbone: GreedyBackbonePolicy,
    refine: CriticalPathRefinePolicy,
}

impl Policy for GreedyPolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        match ctx.phase {
            super::Phase::Backbone => self.backbone.decide(ctx),
            super::Phase::Refine => self.refine.decide(ctx),
        }
    }
}

/// Replays a fixed list of calls. A rejected call is offered again on the
/// re-request, so an illegal script runs out the retry budget. Once the
/// script is exhausted it finishes the current phase.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    calls: VecDeque<ToolCall>,
    last: Option<ToolCall>,
}

impl ScriptedPolicy {
    pub fn new(calls: impl IntoIterator<Item = ToolCall>) -> Self {
        Self {
            calls: calls.into_iter().collect(),
            last: None,
        }
    }

    /// One call per line in text form; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut calls = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            calls.push(line.parse::<ToolCall>().map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self::new(calls))
    }

    pub fn remaining(&self) -> usize {
        self.calls.len()
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        if ctx.attempt > 0 {
            if let Some(last) = &self.last {
                return Ok(last.clone());
            }
        }
        let call = self
            .calls
            .pop_front()
            .unwrap_or_else(|| ToolCall::finish(ctx.phase, Some("script exhausted".into())));
        self.last = Some(call.clone());
        Ok(call)
    }
}
