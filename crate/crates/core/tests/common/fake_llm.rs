//! A stand-in model that answers each prompt kind from its content.

use std::sync::Mutex;

use heurex_core::llm::{CompletionParams, CompletionTransport, PromptMessage, Role, TransportError};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    Evaluate,
    Rephrase,
    Reflect,
    Label,
}

pub fn kind_of(messages: &[PromptMessage]) -> PromptKind {
    let system = &messages[0].content;
    if system.starts_with("You turn heuristic evaluation") {
        PromptKind::Rephrase
    } else if system.contains("reviewing your own") {
        PromptKind::Reflect
    } else if system.starts_with("You name groups") {
        PromptKind::Label
    } else {
        PromptKind::Evaluate
    }
}

/// Replies to evaluation prompts with `rounds[i]` on the i-th evaluation
/// (repeating the last), and derives rephrase, reflection and label replies.
pub struct FakeLlm {
    rounds: Vec<String>,
    drop_fix: bool,
    calls: Mutex<Vec<Vec<PromptMessage>>>,
}

impl FakeLlm {
    pub fn new(rounds: Vec<Value>) -> FakeLlm {
        FakeLlm { rounds: rounds.iter().map(Value::to_string).collect(), drop_fix: false, calls: Mutex::default() }
    }

    /// Rephrase replies leave out the "fix" part.
    pub fn without_fix(mut self) -> FakeLlm {
        self.drop_fix = true;
        self
    }

    pub fn calls(&self) -> Vec<Vec<PromptMessage>> {
        self.calls.lock().unwrap().clone()
    }

    pub fn calls_of(&self, kind: PromptKind) -> Vec<Vec<PromptMessage>> {
        self.calls().into_iter().filter(|c| kind_of(c) == kind).collect()
    }
}

impl CompletionTransport for FakeLlm {
    fn complete(&self, messages: &[PromptMessage], _: &CompletionParams) -> Result<String, TransportError> {
        let mut calls = self.calls.lock().unwrap();
        calls.push(messages.to_vec());
        let user = &messages.last().unwrap().content;
        Ok(match kind_of(messages) {
            PromptKind::Evaluate => {
                let i = calls.iter().filter(|c| kind_of(c) == PromptKind::Evaluate).count() - 1;
                self.rounds[i.min(self.rounds.len() - 1)].clone()
            }
            PromptKind::Rephrase => {
                let items: Vec<Value> = serde_json::from_str(user.trim_start_matches("Violations:").trim()).unwrap();
                let out: Vec<Value> = items
                    .iter()
                    .map(|v| {
                        let mut o = json!({
                            "standard": format!("{} sets the expectation here.", v["guideline"].as_str().unwrap()),
                            "gap": v["explanation"],
                            "fix": "Adjust the cited elements.",
                        });
                        if self.drop_fix {
                            o.as_object_mut().unwrap().remove("fix");
                        }
                        o
                    })
                    .collect();
                Value::Array(out).to_string()
            }
            PromptKind::Reflect => {
                assert_eq!(messages[1].role, Role::Assistant);
                let first = messages[1].content.lines().next().unwrap_or_default();
                format!("I should have checked the design before reporting {}.", first.len())
            }
            PromptKind::Label => {
                let mut labels = serde_json::Map::new();
                for block in user.trim_start_matches("Groups:").split("\n\n").filter(|b| !b.trim().is_empty()) {
                    let v: Value = serde_json::from_str(block.trim()).unwrap();
                    let id = v["id"].as_str().unwrap().to_string();
                    labels.insert(id.clone(), Value::String(format!("{} group", id.replace('-', " "))));
                }
                Value::Object(labels).to_string()
            }
        })
    }
}
