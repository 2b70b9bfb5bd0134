// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::backbone::Backbone;
use crate::error::{Error, Result};
use crate::esat::RegroupTrace;
use crate::policy::{
    backbone_state, build_phase1_prompt, regroup_feedback, DecisionContext, Phase, ToolCall,
    SYSTEM_PROMPT, SYSTEM_PROMPT_VERSION,
};
use crate::timing::{backbone_cost, ArrivalProfile, DelayModel};

/// Empty reasoning slot, left for external filling.
pub const THINK_PLACEHOLDER: &str = "<think></think>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// The decision prompt shown before the call.
    pub state: String,
    pub think: String,
    pub call: ToolCall,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub width: usize,
    pub prompt_version: String,
    pub arrivals: Vec<f64>,
    pub model: DelayModel,
    /// Final backbone in S-expression form.
    pub backbone: String,
    pub level: usize,
    pub cost: f64,
    pub think_filled: bool,
}

/// One multi-turn tool-calling record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub system: String,
    pub turns: Vec<Turn>,
    pub metadata: SampleMetadata,
}

impl TrainingSample {
    /// Replays the recorded calls from the serial backbone. The last turn
    /// must be `finish_1` and no earlier turn may be.
    pub fn replay(&self) -> Result<Backbone> {
        let mut b = Backbone::serial(self.metadata.width)?;
        let last = self.turns.len().saturating_sub(1);
        for (i, t) in self.turns.iter().enumerate() {
            let fail = |reason: String| Error::TraceReplay {
                step: i + 1,
                reason,
            };
            match &t.call {
                ToolCall::Regroup { a, b: low } if i < last => {
                    b = b.regroup(*a, *low).map_err(|e| fail(e.to_string()))?;
                }
                ToolCall::Finish1 { .. } if i == last => {}
                other => return Err(fail(format!("unexpected {other} at turn {}", i + 1))),
            }
        }
        if self.turns.is_empty() {
            return Err(Error::TraceReplay {
                step: 0,
                reason: "sample has no turns".into(),
            });
        }
        Ok(b)
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn sample(
    trace: &RegroupTrace,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<TrainingSample> {
    profile.ensure_width(trace.width)?;
    let target = trace.replay()?;
    let goal = backbone_cost(&target, profile, model)?;
    let steps = trace.len() + 1;
    let mut cur = Backbone::serial(trace.width)?;
    let mut turns = Vec::with_capacity(steps);
    let mut feedback = None;

    let calls = trace
        .steps
        .iter()
        .map(|&(a, b)| ToolCall::Regroup { a, b })
        .chain([ToolCall::Finish1 {
            reason: Some("backbone accepted".into()),
        }]);
    for (i, call) in calls.enumerate() {
        let ctx = DecisionContext {
            phase: Phase::Backbone,
            iteration: i + 1,
            max_iterations: steps,
            attempt: 0,
            width: trace.width,
            profile: profile.clone(),
            model: *model,
            target: goal,
            state: backbone_state(&cur, profile, model)?,
            feedback: feedback.take(),
        };
        let state = build_phase1_prompt(&ctx);
        let fb = match &call {
            ToolCall::Regroup { a, b } => {
                cur = cur.regroup(*a, *b)?;
                regroup_feedback(&cur, profile, model)?
            }
            _ => format!(
                "Backbone accepted at level {} with cost {:.4} ns.",
                cur.level(),
                backbone_cost(&cur, profile, model)?
            ),
        };
        turns.push(Turn {
            state,
            think: THINK_PLACEHOLDER.into(),
            call,
            feedback: fb.clone(),
        });
        feedback = Some(fb);
    }
    Ok(TrainingSample {
        system: SYSTEM_PROMPT.into(),
        turns,
        metadata: SampleMetadata {
            width: trace.width,
            prompt_version: SYSTEM_PROMPT_VERSION.into(),
            arrivals: profile.times().to_vec(),
            model: *model,
            backbone: crate::esat::BackboneExpr::from_backbone(&cur).to_string(),
            level: cur.level(),
            cost: goal,
            think_filled: false,
        },
    })
}

/// Turns regroup traces into training records. Traces that fail to replay
/// are skipped and reported in the returned diagnostics.
pub fn synthesize_samples(
    traces: &[RegroupTrace],
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> (Vec<TrainingSample>, Vec<String>) {
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        match sample(t, profile, model) {
            Ok(s) => out.push(s),
            Err(e) => diagnostics.push(format!("trace {i} skipped: {e}")),
        }
    }
    (out, diagnostics)
}

/// One JSON object per line.
pub fn emit_jsonl(samples: &[TrainingSample]) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_json_line()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TrainingSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esat::derive_trace;
    use crate::graph::NodeId;

    fn profile(n: usize) -> ArrivalProfile {
        ArrivalProfile::uniform(n, 0.0)
    }

    #[test]
    fn single_step_four_bit() {
        let t = RegroupTrace {
            width: 4,
            steps: vec![(NodeId::input(3), NodeId::input(2))],
        };
        let (s, diag) = synthesize_samples(&[t], &profile(4), &DelayModel::default());
        assert!(diag.is_empty());
        assert_eq!(s.len(), 1);
        let turns = &s[0].turns;
        assert_eq!(turns.len(), 2);
        assert_eq!(turns[0].call.name(), "regroup");
        assert!(turns[0].feedback.contains("(3,2)"));
        assert!(matches!(turns[1].call, ToolCall::Finish1 { .. }));
        assert!(turns.iter().all(|t| t.think == THINK_PLACEHOLDER));
        assert_eq!(s[0].replay().unwrap(), Backbone::balanced(4).unwrap());
        // The second prompt carries the first call's feedback.
        assert!(turns[1].state.contains(&turns[0].feedback));
    }

    #[test]
    fn empty_trace_is_one_finish() {
        let (s, _) =
            synthesize_samples(&[RegroupTrace::new(5)], &profile(5), &DelayModel::default());
        assert_eq!(s[0].turns.len(), 1);
        assert_eq!(s[0].replay().unwrap(), Backbone::serial(5).unwrap());
    }

    #[test]
    fn bad_trace_is_skipped() {
        let bad = RegroupTrace {
            width: 4,
            steps: vec![(NodeId::input(3), NodeId::input(1))],
        };
        let good = derive_trace(&Backbone::balanced(4).unwrap()).unwrap();
        let (s, diag) = synthesize_samples(&[bad, good], &profile(4), &DelayModel::default());
        assert_eq!(s.len(), 1);
        assert_eq!(diag.len(), 1);
        assert!(diag[0].starts_with("trace 0 skipped"));
    }

    #[test]
    fn jsonl_round_trip() {
        let traces: Vec<_> = [Backbone::balanced(8).unwrap(), Backbone::serial(8).unwrap()]
            .iter()
            .map(|b| derive_trace(b).unwrap())
            .collect();
        let (s, _) = synthesize_samples(
            &traces,
            &ArrivalProfile::random(8, 0.1, 3),
            &DelayModel::default(),
        );
        let text = emit_jsonl(&s).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_jsonl(&text).unwrap(), s);
        assert!(matches!(
            parse_jsonl("{\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn replay_rejects_misplaced_finish() {
        let (mut s, _) = synthesize_samples(
            &[derive_trace(&Backbone::balanced(4).unwrap()).unwrap()],
            &profile(4),
            &DelayModel::default(),
        );
        s[0].turns.swap(0, 1);
        assert!(s[0].replay().is_err());
    }
}
