// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::call::{Phase, ToolCall};
use super::Policy;
use crate::backbone::{Backbone, RegroupCandidate};
use crate::error::{Error, Result};
use crate::graph::{critical_path, render_epr, CriticalPath, NodeId, PrefixGraph};
use crate::timing::{backbone_cost, graph_arrivals, ArrivalProfile, DelayModel, TimingReport};

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Target delay `T` in ns.
    pub target: f64,
    /// Iteration bound `K`.
    pub max_iterations: usize,
    /// Re-requests allowed after a rejected call within one iteration.
    pub retries: usize,
    pub model: DelayModel,
}

impl LoopConfig {
    pub fn new(target: f64, max_iterations: usize) -> Self {
        Self {
            target,
            max_iterations,
            retries: 3,
            model: DelayModel::default(),
        }
    }

    pub fn with_model(mut self, model: DelayModel) -> Self {
        self.model = model;
        self
    }
}

/// What the policy sees in each iteration.
#[derive(Debug, Clone)]
pub struct DecisionContext {
    pub phase: Phase,
    /// 1-based.
    pub iteration: usize,
    pub max_iterations: usize,
    /// 0 on the first request of an iteration, then counts re-requests.
    pub attempt: usize,
    pub width: usize,
    pub profile: ArrivalProfile,
    pub model: DelayModel,
    pub target: f64,
    pub state: PhaseState,
    /// Outcome of the previous call, including rejections.
    pub feedback: Option<String>,
}

#[derive(Debug, Clone)]
pub enum PhaseState {
    Backbone {
        backbone: Backbone,
        candidates: Vec<RegroupCandidate>,
        cost: f64,
        /// Timing-annotated S-expression of `backbone`.
        timed: String,
    },
    Graph {
        graph: PrefixGraph,
        report: TimingReport,
        critical: CriticalPath,
        epr: String,
        critical_text: String,
    },
}

impl DecisionContext {
    /// Whether `call` may be applied in this context.
    pub fn check(&self, call: &ToolCall) -> std::result::Result<(), String> {
        if call.phase() != self.phase {
            return Err(format!(
                "{} is not available in phase {}",
                call.name(),
                self.phase
            ));
        }
        if let (ToolCall::Regroup { a, b }, PhaseState::Backbone { candidates, .. }) =
            (call, &self.state)
        {
            if !candidates.contains(&RegroupCandidate::new(*a, *b)) {
                return Err(format!("({a}, {b}) is not a current regroup candidate"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub call: ToolCall,
    pub feedback: String,
}

/// Applied actions in order, plus the closing finish call if one was made.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub finish: Option<ToolCall>,
    /// Calls refused by the orchestrator.
    pub rejected: usize,
}

impl OptimizationTrace {
    /// Number of applied actions.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applied calls followed by the finish call.
    pub fn calls(&self) -> Vec<ToolCall> {
        self.steps
            .iter()
            .map(|s| s.call.clone())
            .chain(self.finish.clone())
            .collect()
    }

    /// One call per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in self.calls() {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Phase1Outcome {
    pub backbone: Backbone,
    pub trace: OptimizationTrace,
}

#[derive(Debug, Clone)]
pub struct Phase2Outcome {
    pub graph: PrefixGraph,
    pub trace: OptimizationTrace,
}

fn candidate_list(c: &[RegroupCandidate]) -> String {
    if c.is_empty() {
        return "none".into();
    }
    c.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn backbone_state(
    b: &Backbone,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<PhaseState> {
    Ok(PhaseState::Backbone {
        backbone: b.clone(),
        candidates: b.find_candidates(),
        cost: backbone_cost(b, profile, model)?,
        timed: b.to_timed_sexpr(profile, model),
    })
}

/// Tool feedback after a regroup: the timed backbone, its cost and the new
/// candidates.
pub(crate) fn regroup_feedback(
    b: &Backbone,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<String> {
    Ok(format!(
        "{}\nCost: {:.4} ns\nCandidates: {}",
        b.to_timed_sexpr(profile, model),
        backbone_cost(b, profile, model)?,
        candidate_list(&b.find_candidates())
    ))
}

/// Asks the policy until it returns an acceptable call or the retry budget
/// runs out.
fn request<P: Policy + ?Sized>(
    policy: &mut P,
    ctx: &mut DecisionContext,
    retries: usize,
    trace: &mut OptimizationTrace,
    mut accept: impl FnMut(&ToolCall) -> std::result::Result<(), String>,
) -> Result<ToolCall> {
    let mut last = String::new();
    for attempt in 0..=retries {
        ctx.attempt = attempt;
        let call = match policy.decide(ctx) {
            Ok(c) => c,
            Err(e) => {
                return Err(Error::PolicyAbort {
                    reason: format!("{} failed: {e}", policy.name()),
                    trace: Box::new(trace.clone()),
                })
            }
        };
        match ctx.check(&call).and_then(|_| accept(&call)) {
            Ok(()) => return Ok(call),
            Err(reason) => {
                trace.rejected += 1;
                last = format!("{call} rejected: {reason}");
                ctx.feedback = Some(last.clone());
            }
        }
    }
    Err(Error::PolicyAbort {
        reason: format!("retry budget exhausted; last: {last}"),
        trace: Box::new(trace.clone()),
    })
}

/// Backbone optimization: starting from the serial backbone, apply the
/// policy's regroups until it finishes or `K` iterations pass.
pub fn run_phase1<P: Policy + ?Sized>(
    width: usize,
    profile: &ArrivalProfile,
    config: &LoopConfig,
    policy: &mut P,
) -> Result<Phase1Outcome> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "iteration bound K must be at least 1".into(),
        ));
    }
    config.model.validate()?;
    let mut backbone = Backbone::serial(width)?;
    profile.ensure_width(width)?;
    let mut trace = OptimizationTrace::default();
    let mut feedback = None;

    for k in 1..=config.max_iterations {
        let mut ctx = DecisionContext {
            phase: Phase::Backbone,
            iteration: k,
            max_iterations: config.max_iterations,
            attempt: 0,
            width,
            profile: profile.clone(),
            model: config.model,
            target: config.target,
            state: backbone_state(&backbone, profile, &config.model)?,
            feedback: feedback.take(),
        };
        let mut next = None;
        let call = request(policy, &mut ctx, config.retries, &mut trace, |c| {
            if let ToolCall::Regroup { a, b } = c {
                next = Some(backbone.regroup(*a, *b).map_err(|e| e.to_string())?);
            }
            Ok(())
        })?;
        if call.is_finish() {
            trace.finish = Some(call);
            break;
        }
        backbone = next.expect("regroup accepted");
        let fb = regroup_feedback(&backbone, profile, &config.model)?;
        trace.steps.push(TraceStep {
            iteration: k,
            call,
            feedback: fb.clone(),
        });
        feedback = Some(fb);
    }
    Ok(Phase1Outcome { backbone, trace })
}

fn graph_state(
    g: &PrefixGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<PhaseState> {
    let report = graph_arrivals(g, profile, model)?;
    let critical = critical_path(g, &report, report.critical_start, report.critical_end)?;
    Ok(PhaseState::Graph {
        graph: g.clone(),
        epr: render_epr(g),
        critical_text: critical.render(),
        report,
        critical,
    })
}

/// Local refinement of a complete graph.
pub fn run_phase2<P: Policy + ?Sized>(
    graph: &PrefixGraph,
    profile: &ArrivalProfile,
    config: &LoopConfig,
    policy: &mut P,
) -> Result<Phase2Outcome> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "iteration bound K must be at least 1".into(),
        ));
    }
    config.model.validate()?;
    graph.ensure_valid()?;
    graph.ensure_complete()?;
    let mut g = graph.clone();
    let mut trace = OptimizationTrace::default();
    let mut feedback = None;

    for k in 1..=config.max_iterations {
        let state = graph_state(&g, profile, &config.model)?;
        let critical: BTreeSet<NodeId> = match &state {
            PhaseState::Graph { critical, .. } => critical.nodes().collect(),
            PhaseState::Backbone { .. } => unreachable!(),
        };
        let mut ctx = DecisionContext {
            phase: Phase::Refine,
            iteration: k,
            max_iterations: config.max_iterations,
            attempt: 0,
            width: g.width(),
            profile: profile.clone(),
            model: config.model,
            target: config.target,
            state,
            feedback: feedback.take(),
        };
        let mut next = None;
        let call = request(policy, &mut ctx, config.retries, &mut trace, |c| {
            if let Some(action) = c.refine_action() {
                let out = action
                    .apply(&g, Some(&critical))
                    .map_err(|e| e.to_string())?;
                out.graph.ensure_valid().map_err(|e| e.to_string())?;
                next = Some(out);
            }
            Ok(())
        })?;
        if call.is_finish() {
            trace.finish = Some(call);
            break;
        }
        let out = next.expect("edit accepted");
        let report = graph_arrivals(&out.graph, profile, &config.model)?;
        let fb = format!(
            "{}; delay: {:.4} ns; slack: {:.4} ns",
            out.summary(),
            report.delay,
            report.slack(config.target)
        );
        g = out.graph;
        trace.steps.push(TraceStep {
            iteration: k,
            call,
            feedback: fb.clone(),
        });
        feedback = Some(fb);
    }
    Ok(Phase2Outcome { graph: g, trace })
}
