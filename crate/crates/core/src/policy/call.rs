// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::refine::{RefineAction, RefineKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "1")]
    Backbone,
    #[serde(rename = "2")]
    Refine,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Backbone => f.write_str("1"),
            Phase::Refine => f.write_str("2"),
        }
    }
}

/// The tool vocabulary. Serializes as `{"name": ..., "arguments": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", content = "arguments", rename_all = "snake_case")]
pub enum ToolCall {
    Regroup {
        a: NodeId,
        b: NodeId,
    },
    #[serde(rename = "finish_1")]
    Finish1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    LevelOpt {
        target: NodeId,
    },
    FanoutOpt {
        target: NodeId,
        consumer: NodeId,
    },
    NodeClone {
        target: NodeId,
    },
    #[serde(rename = "finish_2")]
    Finish2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

impl ToolCall {
    pub fn finish1() -> Self {
        ToolCall::Finish1 { reason: None }
    }

    pub fn finish2() -> Self {
        ToolCall::Finish2 { reason: None }
    }

    pub fn finish(phase: Phase, reason: Option<String>) -> Self {
        match phase {
            Phase::Backbone => ToolCall::Finish1 { reason },
            Phase::Refine => ToolCall::Finish2 { reason },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ToolCall::Regroup { .. } => "regroup",
            ToolCall::Finish1 { .. } => "finish_1",
            ToolCall::LevelOpt { .. } => "level_opt",
            ToolCall::FanoutOpt { .. } => "fanout_opt",
            ToolCall::NodeClone { .. } => "node_clone",
            ToolCall::Finish2 { .. } => "finish_2",
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            ToolCall::Regroup { .. } | ToolCall::Finish1 { .. } => Phase::Backbone,
            _ => Phase::Refine,
        }
    }

    pub fn is_finish(&self) -> bool {
        matches!(self, ToolCall::Finish1 { .. } | ToolCall::Finish2 { .. })
    }

    /// The refinement edit this call requests, if any.
    pub fn refine_action(&self) -> Option<RefineAction> {
        let (kind, target, consumer) = match *self {
            ToolCall::LevelOpt { target } => (RefineKind::LevelOpt, target, None),
            ToolCall::FanoutOpt { target, consumer } => {
                (RefineKind::FanoutOpt, target, Some(consumer))
            }
            ToolCall::NodeClone { target } => (RefineKind::NodeClone, target, None),
            _ => return None,
        };
        Some(RefineAction {
            kind,
            target,
            consumer,
        })
    }

    /// The JSON arguments object alone.
    pub fn arguments(&self) -> Value {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.get("arguments").cloned())
            .unwrap_or_else(|| json!({}))
    }

    /// Builds a call from a function name and its JSON arguments.
    pub fn from_function(name: &str, arguments: &Value) -> Result<Self> {
        let args = if arguments.is_null() {
            json!({})
        } else {
            arguments.clone()
        };
        serde_json::from_value(json!({ "name": name, "arguments": args }))
            .map_err(|e| Error::Policy(format!("cannot interpret call to {name:?}: {e}")))
    }
}

impl fmt::Display for ToolCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToolCall::Regroup { a, b } => {
                write!(f, "regroup {} {} {} {}", a.msb, a.lsb, b.msb, b.lsb)
            }
            ToolCall::LevelOpt { target } => write!(f, "level_opt {target}"),
            ToolCall::FanoutOpt { target, consumer } => {
                write!(f, "fanout_opt {target} {consumer}")
            }
            ToolCall::NodeClone { target } => write!(f, "node_clone {target}"),
            ToolCall::Finish1 { .. } | ToolCall::Finish2 { .. } => f.write_str(self.name()),
        }
    }
}

impl FromStr for ToolCall {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::Syntax(m);
        let mut parts = s.split_whitespace();
        let name = parts.next().ok_or_else(|| bad("empty tool call".into()))?;
        let rest: Vec<&str> = parts.collect();
        let node = |t: &str| t.parse::<NodeId>().map_err(bad);
        let arity = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(bad(format!(
                    "{name} takes {n} argument(s), got {}",
                    rest.len()
                )))
            }
        };
        match name {
            "regroup" => {
                arity(4)?;
                let n: Vec<usize> = rest
                    .iter()
                    .map(|t| t.parse().map_err(|e| bad(format!("bad index {t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                Ok(ToolCall::Regroup {
                    a: NodeId::new(n[0], n[1]),
                    b: NodeId::new(n[2], n[3]),
                })
            }
            "finish_1" => arity(0).map(|_| ToolCall::finish1()),
            "finish_2" => arity(0).map(|_| ToolCall::finish2()),
            "level_opt" => {
                arity(1)?;
                Ok(ToolCall::LevelOpt {
                    target: node(rest[0])?,
                })
            }
            "node_clone" => {
                arity(1)?;
                Ok(ToolCall::NodeClone {
                    target: node(rest[0])?,
                })
            }
            "fanout_opt" => {
                arity(2)?;
                Ok(ToolCall::FanoutOpt {
                    target: node(rest[0])?,
                    consumer: node(rest[1])?,
                })
            }
            other => Err(bad(format!("unknown tool {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<ToolCall> {
        vec![
            ToolCall::Regroup {
                a: NodeId::new(7, 6),
                b: NodeId::new(5, 4),
            },
            ToolCall::finish1(),
            ToolCall::LevelOpt {
                target: NodeId::new(3, 0),
            },
            ToolCall::FanoutOpt {
                target: NodeId::new(1, 0),
                consumer: NodeId::new(3, 0),
            },
            ToolCall::NodeClone {
                target: NodeId::new(3, 0).with_instance(1),
            },
            ToolCall::finish2(),
        ]
    }

    #[test]
    fn text_forms() {
        let text: Vec<String> = all().iter().map(ToString::to_string).collect();
        assert_eq!(
            text,
            [
                "regroup 7 6 5 4",
                "finish_1",
                "level_opt (3,0)",
                "fanout_opt (1,0) (3,0)",
                "node_clone (3,0)#1",
                "finish_2"
            ]
        );
        for (c, t) in all().iter().zip(&text) {
            assert_eq!(&t.parse::<ToolCall>().unwrap(), c);
        }
        assert!("merge (1,0)".parse::<ToolCall>().is_err());
        assert!("regroup 1 2".parse::<ToolCall>().is_err());
    }

    #[test]
    fn json_forms() {
        let c = &all()[0];
        let v = serde_json::to_value(c).unwrap();
        assert_eq!(
            v,
            json!({"name": "regroup", "arguments": {"a": "(7,6)", "b": "(5,4)"}})
        );
        for c in all() {
            let back = ToolCall::from_function(c.name(), &c.arguments()).unwrap();
            assert_eq!(back, c);
        }
        assert_eq!(
            ToolCall::from_function("finish_1", &Value::Null).unwrap(),
            ToolCall::finish1()
        );
        assert!(ToolCall::from_function("merge", &json!({})).is_err());
        assert!(ToolCall::from_function("level_opt", &json!({"target": "3,0"})).is_err());
    }

    #[test]
    fn phases() {
        let phases: Vec<Phase> = all().iter().map(ToolCall::phase).collect();
        use Phase::*;
        assert_eq!(phases, [Backbone, Backbone, Refine, Refine, Refine, Refine]);
    }
}
