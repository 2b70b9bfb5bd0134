// SPDX-License-Identifier: Apache-2.0

//! The decision loop: a policy picks one tool call per iteration and the
//! orchestrator checks and applies it.

mod call;
mod greedy;
mod prompt;
mod remote;
mod run;

pub use call::{Phase, ToolCall};
pub use greedy::{CriticalPathRefinePolicy, GreedyBackbonePolicy, GreedyPolicy, ScriptedPolicy};
pub use prompt::{
    build_phase1_prompt, build_phase2_prompt, tool_schemas, SYSTEM_PROMPT, SYSTEM_PROMPT_VERSION,
};
pub use remote::{RemoteConfig, RemoteLlmPolicy};
pub(crate) use run::{backbone_state, regroup_feedback};
pub use run::{
    run_phase1, run_phase2, DecisionContext, LoopConfig, OptimizationTrace, Phase1Outcome,
    Phase2Outcome, PhaseState, TraceStep,
};

use crate::error::Result;

pub trait Policy {
    fn name(&self) -> &str;

    /// Chooses the next call. An error aborts the run.
    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        (**self).decide(ctx)
    }
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        (**self).decide(ctx)
    }
}
