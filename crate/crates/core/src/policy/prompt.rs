// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use serde_json::{json, Value};

use super::call::Phase;
use super::run::{DecisionContext, PhaseState};

pub const SYSTEM_PROMPT: &str = include_str!("../../assets/system_prompt.txt");

/// Bumped whenever the system prompt or the prompt layout changes.
pub const SYSTEM_PROMPT_VERSION: &str = "1";

fn node_arg(description: &str) -> Value {
    json!({
        "type": "string",
        "pattern": r"^\(\d+,\d+\)(#\d+)?$",
        "description": description,
    })
}

fn function(name: &str, description: &str, properties: Value, required: &[&str]) -> Value {
    json!({
        "type": "function",
        "function": {
            "name": name,
            "description": description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": required,
                "additionalProperties": false,
            }
        }
    })
}

fn finish(name: &str, description: &str) -> Value {
    function(
        name,
        description,
        json!({"reason": {"type": "string"}}),
        &[],
    )
}

/// Function-calling schemas for the tools of `phase`.
pub fn tool_schemas(phase: Phase) -> Value {
    match phase {
        Phase::Backbone => json!([
            function(
                "regroup",
                "Combine sibling subtrees a and b first. (a, b) must be a listed candidate.",
                json!({
                    "a": node_arg("upper subtree root"),
                    "b": node_arg("lower subtree root, b.msb = a.lsb - 1"),
                }),
                &["a", "b"],
            ),
            finish("finish_1", "Accept the current backbone."),
        ]),
        Phase::Refine => json!([
            function(
                "level_opt",
                "Rebuild the fan-in cone of target at minimum level.",
                json!({"target": node_arg("node to rebuild")}),
                &["target"],
            ),
            function(
                "fanout_opt",
                "Move consumer, a non-trivial-fanout consumer of target, to another split.",
                json!({
                    "target": node_arg("overloaded driver"),
                    "consumer": node_arg("consumer that uses target as lower parent"),
                }),
                &["target", "consumer"],
            ),
            function(
                "node_clone",
                "Duplicate target and split its consumers between the copies.",
                json!({"target": node_arg("node to duplicate")}),
                &["target"],
            ),
            finish("finish_2", "Accept the current adder."),
        ]),
    }
}

fn tool_names(phase: Phase) -> String {
    tool_schemas(phase)
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|t| t["function"]["name"].as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn header(out: &mut String, ctx: &DecisionContext) {
    let _ = writeln!(out, "## Task");
    let _ = writeln!(
        out,
        "{}-bit adder, phase {}, iteration {} of {}. Target delay {:.4} ns.",
        ctx.width, ctx.phase, ctx.iteration, ctx.max_iterations, ctx.target
    );
    let m = &ctx.model;
    let _ = writeln!(
        out,
        "Delay model: k={} b={} d={} lambda={} beta={}.",
        m.k, m.b, m.d, m.lambda, m.beta
    );
    let _ = writeln!(out, "\n## Input arrival times");
    let times: Vec<String> = ctx
        .profile
        .times()
        .iter()
        .enumerate()
        .map(|(i, t)| format!("i{i}={t:.4}"))
        .collect();
    let _ = writeln!(out, "{}", times.join(" "));
}

fn footer(out: &mut String, ctx: &DecisionContext) {
    let _ = writeln!(out, "\n## Feedback");
    let _ = writeln!(out, "{}", ctx.feedback.as_deref().unwrap_or("none"));
    let _ = writeln!(out, "\n## Tools");
    let _ = writeln!(out, "{}", tool_names(ctx.phase));
}

/// User message for a phase 1 decision.
pub fn build_phase1_prompt(ctx: &DecisionContext) -> String {
    let mut out = String::new();
    header(&mut out, ctx);
    if let PhaseState::Backbone {
        candidates,
        cost,
        timed,
        backbone,
    } = &ctx.state
    {
        let _ = writeln!(out, "\n## Current backbone");
        let _ = writeln!(out, "{timed}");
        let _ = writeln!(out, "Level {}, cost {:.4} ns.", backbone.level(), cost);
        let _ = writeln!(out, "\n## Regroup candidates");
        if candidates.is_empty() {
            let _ = writeln!(out, "none");
        }
        for c in candidates {
            let _ = writeln!(out, "- a={} b={}", c.a, c.b);
        }
    }
    footer(&mut out, ctx);
    out
}

/// User message for a phase 2 decision.
pub fn build_phase2_prompt(ctx: &DecisionContext) -> String {
    let mut out = String::new();
    header(&mut out, ctx);
    if let PhaseState::Graph {
        graph,
        report,
        epr,
        critical_text,
        ..
    } = &ctx.state
    {
        let _ = writeln!(out, "\n## Metrics");
        let _ = writeln!(
            out,
            "delay {:.4} ns, slack {:.4} ns, size {}, level {}, max fanout {}",
            report.delay,
            report.slack(ctx.target),
            graph.size(),
            graph.depth(),
            graph.max_fanout()
        );
        let _ = writeln!(out, "\n## EPR");
        let _ = write!(out, "{epr}");
        if !epr.ends_with('\n') {
            out.push('\n');
        }
        let _ = writeln!(out, "\n## Critical path");
        let _ = write!(out, "{critical_text}");
        if !critical_text.ends_with('\n') {
            out.push('\n');
        }
    }
    footer(&mut out, ctx);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::Backbone;
    use crate::error::Result;
    use crate::graph::NodeId;
    use crate::policy::{run_phase1, run_phase2, LoopConfig, Policy, ToolCall};
    use crate::timing::ArrivalProfile;

    /// Records the prompt it is shown, then finishes.
    struct Capture(Vec<String>);

    impl Policy for Capture {
        fn name(&self) -> &str {
            "capture"
        }

        fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
            Ok(match ctx.phase {
                Phase::Backbone => {
                    self.0.push(build_phase1_prompt(ctx));
                    ToolCall::finish1()
                }
                Phase::Refine => {
                    self.0.push(build_phase2_prompt(ctx));
                    ToolCall::finish2()
                }
            })
        }
    }

    #[test]
    fn schemas_cover_each_phase() {
        let one = tool_schemas(Phase::Backbone);
        let two = tool_schemas(Phase::Refine);
        assert_eq!(one.as_array().unwrap().len(), 2);
        assert_eq!(two.as_array().unwrap().len(), 4);
        assert_eq!(
            tool_names(Phase::Refine),
            "level_opt, fanout_opt, node_clone, finish_2"
        );
        assert_eq!(
            one[0]["function"]["parameters"]["required"],
            json!(["a", "b"])
        );
    }

    #[test]
    fn phase1_prompt_sections() {
        let mut c = Capture(Vec::new());
        let p = ArrivalProfile::uniform(4, 0.0);
        run_phase1(4, &p, &LoopConfig::new(0.0, 3), &mut c).unwrap();
        let text = &c.0[0];
        for s in [
            "## Task",
            "## Input arrival times",
            "## Current backbone",
            "## Regroup candidates",
            "## Feedback",
            "## Tools",
        ] {
            assert!(text.contains(s), "missing {s}");
        }
        assert!(text.contains("- a=(3,3) b=(2,2)"));
        assert!(text.contains("regroup, finish_1"));
        // Deterministic.
        let mut again = Capture(Vec::new());
        run_phase1(4, &p, &LoopConfig::new(0.0, 3), &mut again).unwrap();
        assert_eq!(c.0, again.0);
    }

    #[test]
    fn phase2_prompt_sections() {
        let mut c = Capture(Vec::new());
        let g = Backbone::balanced(4).unwrap().complete().graph;
        run_phase2(
            &g,
            &ArrivalProfile::uniform(4, 0.0),
            &LoopConfig::new(0.0, 3),
            &mut c,
        )
        .unwrap();
        let text = &c.0[0];
        for s in ["## Metrics", "## EPR", "## Critical path", "## Tools"] {
            assert!(text.contains(s), "missing {s}");
        }
        assert!(text.contains(&NodeId::new(3, 0).to_string()));
        assert!(SYSTEM_PROMPT.contains("regroup"));
    }
}
