// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::call::{Phase, ToolCall};
use super::prompt::{build_phase1_prompt, build_phase2_prompt, tool_schemas, SYSTEM_PROMPT};
use super::run::DecisionContext;
use super::Policy;
use crate::error::{Error, Result};

/// Where to reach an OpenAI-compatible chat-completions server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset means no auth header.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Requests per decision before giving up on malformed replies.
    pub attempts: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "prefix-policy".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
            attempts: 3,
        }
    }
}

/// A policy backed by a chat model with tool calling.
pub struct RemoteLlmPolicy {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteLlmPolicy {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post(&self, body: &Value) -> Result<Value> {
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| {
            Error::Policy(format!("request to {} failed: {e}", self.config.endpoint))
        })?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Policy(format!("cannot read response: {e}")))?;
        if !status.is_success() {
            return Err(Error::Policy(format!("server returned {status}: {text}")));
        }
        Ok(serde_json::from_str(&text)?)
    }
}

/// Pulls the first tool call out of a chat-completions reply.
fn parse_reply(reply: &Value, phase: Phase) -> std::result::Result<ToolCall, String> {
    let message = &reply["choices"][0]["message"];
    let Some(f) = message["tool_calls"][0]["function"].as_object() else {
        return Err("the reply contains no tool call".into());
    };
    let name = f.get("name").and_then(Value::as_str).unwrap_or_default();
    // Arguments normally arrive as a JSON string, but accept an object too.
    let args = match f.get("arguments") {
        Some(Value::String(s)) if s.trim().is_empty() => json!({}),
        Some(Value::String(s)) => {
            serde_json::from_str(s).map_err(|e| format!("arguments are not valid JSON: {e}"))?
        }
        Some(v) => v.clone(),
        None => json!({}),
    };
    let call = ToolCall::from_function(name, &args).map_err(|e| e.to_string())?;
    if call.phase() != phase {
        return Err(format!("{name} is not available in phase {phase}"));
    }
    Ok(call)
}

impl Policy for RemoteLlmPolicy {
    fn name(&self) -> &str {
        "remote"
    }

    fn decide(&mut self, ctx: &DecisionContext) -> Result<ToolCall> {
        let prompt = match ctx.phase {
            Phase::Backbone => build_phase1_prompt(ctx),
            Phase::Refine => build_phase2_prompt(ctx),
        };
        let mut messages = vec![
            json!({"role": "system", "content": SYSTEM_PROMPT}),
            json!({"role": "user", "content": prompt}),
        ];
        let mut last = String::new();
        for _ in 0..self.config.attempts.max(1) {
            let body = json!({
                "model": self.config.model,
                "messages": messages,
                "tools": tool_schemas(ctx.phase),
                "tool_choice": "required",
                "temperature": 0,
            });
            let reply = self.post(&body)?;
            match parse_reply(&reply, ctx.phase) {
                Ok(call) => return Ok(call),
                Err(reason) => {
                    let content = reply["choices"][0]["message"]["content"]
                        .as_str()
                        .unwrap_or_default()
                        .to_owned();
                    messages.push(json!({"role": "assistant", "content": content}));
                    messages.push(json!({
                        "role": "user",
                        "content": format!(
                            "{reason}. Respond with exactly one call to one of the listed tools."
                        ),
                    }));
                    last = reason;
                }
            }
        }
        Err(Error::Policy(format!("no usable tool call: {last}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::policy::{run_phase1, LoopConfig};
    use crate::timing::ArrivalProfile;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    fn reply(name: &str, args: &str) -> String {
        json!({
            "choices": [{"message": {
                "role": "assistant",
                "content": null,
                "tool_calls": [{"type": "function", "function": {"name": name, "arguments": args}}]
            }}]
        })
        .to_string()
    }

    /// Serves `replies` in order, one per connection, and forwards each request body.
    fn serve(replies: Vec<String>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for body in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let l = line.to_ascii_lowercase();
                    if let Some(v) = l.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut req = vec![0; len];
                reader.read_exact(&mut req).unwrap();
                tx.send(String::from_utf8(req).unwrap()).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                )
                .unwrap();
            }
        });
        (url, rx)
    }

    fn policy(url: String) -> RemoteLlmPolicy {
        RemoteLlmPolicy::new(RemoteConfig {
            endpoint: url,
            api_key_env: "PREFIXSYN_TEST_UNSET_KEY".into(),
            timeout_secs: 10,
            ..RemoteConfig::default()
        })
    }

    #[test]
    fn corrects_unknown_and_illegal_calls() {
        let (url, rx) = serve(vec![
            reply("merge", "{}"),
            reply("level_opt", r#"{"target":"(3,0)"}"#),
            reply("regroup", r#"{"a":"(3,3)","b":"(2,2)"}"#),
            reply("finish_1", ""),
        ]);
        let mut p = policy(url);
        let out = run_phase1(
            4,
            &ArrivalProfile::uniform(4, 0.0),
            &LoopConfig::new(0.0, 5),
            &mut p,
        )
        .unwrap();
        assert_eq!(
            out.trace.steps[0].call,
            ToolCall::Regroup {
                a: NodeId::input(3),
                b: NodeId::input(2)
            }
        );
        assert_eq!(out.trace.finish, Some(ToolCall::finish1()));

        let first: Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(first["messages"][0]["role"], "system");
        assert_eq!(first["tools"].as_array().unwrap().len(), 2);
        let second = rx.recv().unwrap();
        assert!(second.contains("unknown variant") || second.contains("cannot interpret"));
        let third = rx.recv().unwrap();
        assert!(third.contains("not available in phase 1"));
    }

    #[test]
    fn gives_up_after_attempts() {
        let (url, _rx) = serve(vec![reply("merge", "{}"); 3]);
        let mut p = policy(url);
        let err = run_phase1(
            4,
            &ArrivalProfile::uniform(4, 0.0),
            &LoopConfig::new(0.0, 5),
            &mut p,
        )
        .unwrap_err();
        assert!(matches!(err, Error::PolicyAbort { .. }), "{err}");
    }

    #[test]
    fn parse_reply_shapes() {
        let r: Value =
            serde_json::from_str(&reply("node_clone", r#"{"target":"(3,0)#1"}"#)).unwrap();
        assert_eq!(
            parse_reply(&r, Phase::Refine).unwrap(),
            ToolCall::NodeClone {
                target: NodeId::new(3, 0).with_instance(1)
            }
        );
        assert!(parse_reply(&json!({"choices": []}), Phase::Refine).is_err());
        assert!(parse_reply(&r, Phase::Backbone).is_err());
    }
}
