use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{CompletionParams, PromptMessage, TransportError};

/// Sends one chat completion request and returns the text of the reply.
pub trait CompletionTransport: Send + Sync {
    fn complete(&self, messages: &[PromptMessage], params: &CompletionParams) -> Result<String, TransportError>;
}

impl<T: CompletionTransport + ?Sized> CompletionTransport for &T {
    fn complete(&self, messages: &[PromptMessage], params: &CompletionParams) -> Result<String, TransportError> {
        (**self).complete(messages, params)
    }
}

impl<T: CompletionTransport + ?Sized> CompletionTransport for Box<T> {
    fn complete(&self, messages: &[PromptMessage], params: &CompletionParams) -> Result<String, TransportError> {
        (**self).complete(messages, params)
    }
}

impl<T: CompletionTransport + ?Sized> CompletionTransport for std::sync::Arc<T> {
    fn complete(&self, messages: &[PromptMessage], params: &CompletionParams) -> Result<String, TransportError> {
        (**self).complete(messages, params)
    }
}

/// Hex SHA-256 of the compact JSON encoding of `messages`. Keys scripted responses.
pub fn prompt_hash(messages: &[PromptMessage]) -> String {
    let encoded = serde_json::to_vec(messages).expect("prompt messages always serialize");
    hex::encode(Sha256::digest(&encoded))
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    responses: BTreeMap<String, String>,
}

/// Replays recorded responses keyed by prompt hash. Unknown prompts fail with
/// [`TransportError::NoScript`]. Every request is recorded.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    responses: BTreeMap<String, String>,
    calls: Mutex<Vec<Vec<PromptMessage>>>,
}

impl ScriptedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads `{"responses": {"<hash>": "<text>", ...}}`.
    pub fn from_json(text: &str) -> Result<Self, TransportError> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| TransportError::Config(format!("bad script file: {e}")))?;
        Ok(ScriptedTransport { responses: file.responses, calls: Mutex::default() })
    }

    pub fn to_json(&self) -> String {
        let file = ScriptFile { responses: self.responses.clone() };
        serde_json::to_string_pretty(&file).expect("script serializes")
    }

    pub fn insert(&mut self, messages: &[PromptMessage], response: impl Into<String>) {
        self.responses.insert(prompt_hash(messages), response.into());
    }

    pub fn insert_hash(&mut self, hash: impl Into<String>, response: impl Into<String>) {
        self.responses.insert(hash.into(), response.into());
    }

    pub fn with(mut self, messages: &[PromptMessage], response: impl Into<String>) -> Self {
        self.insert(messages, response);
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn calls(&self) -> Vec<Vec<PromptMessage>> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl CompletionTransport for ScriptedTransport {
    fn complete(&self, messages: &[PromptMessage], _params: &CompletionParams) -> Result<String, TransportError> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).push(messages.to_vec());
        let hash = prompt_hash(messages);
        self.responses.get(&hash).cloned().ok_or(TransportError::NoScript(hash))
    }
}

/// Serves responses in order regardless of the prompt, and records each
/// prompt with the response it got. Used to build scripted fixtures.
#[derive(Debug, Default)]
pub struct SequenceTransport {
    queue: Mutex<VecDeque<String>>,
    log: Mutex<Vec<(Vec<PromptMessage>, String)>>,
}

impl SequenceTransport {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SequenceTransport { queue: Mutex::new(responses.into_iter().map(Into::into).collect()), log: Mutex::default() }
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn log(&self) -> Vec<(Vec<PromptMessage>, String)> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// A scripted transport answering every prompt seen so far the same way.
    pub fn to_scripted(&self) -> ScriptedTransport {
        let mut scripted = ScriptedTransport::new();
        for (messages, response) in self.log() {
            scripted.insert(&messages, response);
        }
        scripted
    }
}

impl CompletionTransport for SequenceTransport {
    fn complete(&self, messages: &[PromptMessage], _params: &CompletionParams) -> Result<String, TransportError> {
        let next = self.queue.lock().unwrap_or_else(|e| e.into_inner()).pop_front();
        match next {
            Some(response) => {
                self.log.lock().unwrap_or_else(|e| e.into_inner()).push((messages.to_vec(), response.clone()));
                Ok(response)
            }
            None => Err(TransportError::NoScript(prompt_hash(messages))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpTransportConfig {
    pub endpoint: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl HttpTransportConfig {
    pub const DEFAULT_ENDPOINT: &'static str = "https://api.openai.com/v1/chat/completions";

    /// Reads `HEUREX_API_KEY` (required) and `HEUREX_ENDPOINT`.
    pub fn from_env() -> Result<Self, TransportError> {
        let api_key = std::env::var("HEUREX_API_KEY")
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| TransportError::Config("HEUREX_API_KEY is not set".into()))?;
        let endpoint = std::env::var("HEUREX_ENDPOINT").unwrap_or_else(|_| Self::DEFAULT_ENDPOINT.to_string());
        Ok(HttpTransportConfig { endpoint, api_key, timeout: Duration::from_secs(120) })
    }
}

/// Calls an OpenAI-compatible chat completions endpoint.
pub struct HttpTransport {
    config: HttpTransportConfig,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: HttpTransportConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { config, agent }
    }

    pub fn from_env() -> Result<Self, TransportError> {
        HttpTransportConfig::from_env().map(Self::new)
    }
}

/// Request body for a chat completions call.
pub(crate) fn request_body(messages: &[PromptMessage], params: &CompletionParams) -> Value {
    let mut body = json!({
        "model": params.model,
        "temperature": params.temperature,
        "messages": messages,
    });
    if let Some(max) = params.max_output_tokens {
        body["max_tokens"] = json!(max);
    }
    body
}

/// Pulls `choices[0].message.content` out of a chat completions reply.
pub(crate) fn response_text(body: &Value) -> Result<String, TransportError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| TransportError::BadResponse("missing choices[0].message.content".into()))
}

impl CompletionTransport for HttpTransport {
    fn complete(&self, messages: &[PromptMessage], params: &CompletionParams) -> Result<String, TransportError> {
        params.validate()?;
        let result = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", format!("Bearer {}", self.config.api_key))
            .send_json(request_body(messages, params));
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(TransportError::Timeout),
            Err(e) => return Err(TransportError::Network(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Network(other.to_string()),
        })?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Http { status, body: text });
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| TransportError::BadResponse(e.to_string()))?;
        response_text(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_hit_and_miss() {
        let prompt = [PromptMessage::system("s"), PromptMessage::user("u")];
        let t = ScriptedTransport::new().with(&prompt, "[]");
        let params = CompletionParams::default();
        assert_eq!(t.complete(&prompt, &params).unwrap(), "[]");
        let other = [PromptMessage::user("x")];
        assert_eq!(t.complete(&other, &params), Err(TransportError::NoScript(prompt_hash(&other))));
        assert_eq!(t.call_count(), 2);
        let reloaded = ScriptedTransport::from_json(&t.to_json()).unwrap();
        assert_eq!(reloaded.complete(&prompt, &params).unwrap(), "[]");
    }

    #[test]
    fn hash_depends_on_role_and_order() {
        let a = [PromptMessage::system("x"), PromptMessage::user("y")];
        let b = [PromptMessage::user("x"), PromptMessage::user("y")];
        let c = [PromptMessage::user("y"), PromptMessage::system("x")];
        assert_ne!(prompt_hash(&a), prompt_hash(&b));
        assert_ne!(prompt_hash(&a), prompt_hash(&c));
        assert_eq!(prompt_hash(&a).len(), 64);
    }

    #[test]
    fn sequence_records() {
        let t = SequenceTransport::new(["one", "two"]);
        let p = CompletionParams::default();
        assert_eq!(t.complete(&[PromptMessage::user("a")], &p).unwrap(), "one");
        assert_eq!(t.complete(&[PromptMessage::user("b")], &p).unwrap(), "two");
        assert!(t.complete(&[PromptMessage::user("c")], &p).is_err());
        let scripted = t.to_scripted();
        assert_eq!(scripted.complete(&[PromptMessage::user("b")], &p).unwrap(), "two");
    }

    #[test]
    fn chat_body_shape() {
        let params = CompletionParams { max_output_tokens: Some(500), ..CompletionParams::with_model("m") };
        let body = request_body(&[PromptMessage::user("hi")], &params);
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["max_tokens"], 500);
        assert_eq!(body["messages"][0]["role"], "user");
        let reply = json!({"choices": [{"message": {"role": "assistant", "content": "[]"}}]});
        assert_eq!(response_text(&reply).unwrap(), "[]");
        assert!(response_text(&json!({})).is_err());
    }
}
