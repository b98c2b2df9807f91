//! Chat-model providers.
//!
//! Every model call in the harness goes through [`ChatProvider`]. Two
//! implementations ship: [`HttpProvider`] speaks the chat-completions JSON
//! protocol with retries and a concurrency limiter, and [`ScriptedProvider`]
//! answers from an in-process script for offline, byte-reproducible runs.

mod http;
mod scripted;

use std::fmt;

use async_trait::async_trait;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use http::{HttpProvider, ProviderConfig, ENV_API_KEY, ENV_BASE_URL};
pub use scripted::{DefaultReply, Matcher, Reply, ScriptEntry, ScriptedProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContentPart {
    Text(String),
    /// Base64 payload with its media type, e.g. `image/jpeg`.
    ImageData { media_type: String, base64: String },
}

impl ContentPart {
    pub fn image_from_bytes(media_type: impl Into<String>, bytes: &[u8]) -> Self {
        ContentPart::ImageData {
            media_type: media_type.into(),
            base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self::text(Role::System, text)
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::text(Role::User, text)
    }

    pub fn text(role: Role, text: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: vec![ContentPart::Text(text.into())],
        }
    }

    pub fn with_part(mut self, part: ContentPart) -> Self {
        self.content.push(part);
        self
    }

    /// Concatenation of all text parts.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        for part in &self.content {
            if let ContentPart::Text(t) = part {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(t);
            }
        }
        out
    }

    pub fn has_image(&self) -> bool {
        self.content
            .iter()
            .any(|p| matches!(p, ContentPart::ImageData { .. }))
    }
}

/// Why a request is being made. Never sent on the wire; used for routing in
/// scripted runs and for request-log audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallPurpose {
    Lesson,
    QuizGenerate,
    QuizRegenerate,
    WeakProbe,
    StudentQuestion,
    TeacherAnswer,
    StudentSummary,
    StudentQuiz,
    TeacherQuiz,
    Other,
}

impl CallPurpose {
    /// Calls made on behalf of the student, which must never see the context document.
    pub fn is_student_role(self) -> bool {
        matches!(
            self,
            CallPurpose::StudentQuestion | CallPurpose::StudentSummary | CallPurpose::StudentQuiz
        )
    }

    pub fn is_dialogue_generation(self) -> bool {
        matches!(
            self,
            CallPurpose::StudentQuestion | CallPurpose::TeacherAnswer | CallPurpose::StudentSummary
        )
    }
}

impl fmt::Display for CallPurpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("purpose serializes");
        f.write_str(v.as_str().unwrap_or("other"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<i64>,
    pub purpose: CallPurpose,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        ChatRequest {
            model_id: model_id.into(),
            messages,
            temperature: 0.0,
            max_tokens: 256,
            seed: None,
            purpose: CallPurpose::Other,
        }
    }

    pub fn sampling(mut self, temperature: f64, max_tokens: u32) -> Self {
        self.temperature = temperature;
        self.max_tokens = max_tokens;
        self
    }

    pub fn seed(mut self, seed: Option<i64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn purpose(mut self, purpose: CallPurpose) -> Self {
        self.purpose = purpose;
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if !(0.0..=2.0).contains(&self.temperature) || self.temperature.is_nan() {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if self.messages.is_empty() {
            return Err(ProviderError::InvalidRequest("no messages".into()));
        }
        if self.messages.iter().any(|m| m.content.is_empty()) {
            return Err(ProviderError::InvalidRequest("message with empty content".into()));
        }
        Ok(())
    }

    pub fn has_image(&self) -> bool {
        self.messages.iter().any(ChatMessage::has_image)
    }

    /// All text in the request, messages separated by newlines.
    pub fn full_text(&self) -> String {
        self.messages
            .iter()
            .map(ChatMessage::text_content)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn system_text(&self) -> String {
        self.messages
            .iter()
            .filter(|m| m.role == Role::System)
            .map(ChatMessage::text_content)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn last_user_text(&self) -> String {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(ChatMessage::text_content)
            .unwrap_or_default()
    }

    /// The chat-completions request body.
    pub fn wire_body(&self) -> Value {
        let messages: Vec<Value> = self.messages.iter().map(wire_message).collect();
        let mut body = json!({
            "model": self.model_id,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        });
        if let Some(seed) = self.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    pub fn wire_string(&self) -> String {
        serde_json::to_string(&self.wire_body()).expect("request body serializes")
    }
}

fn wire_message(m: &ChatMessage) -> Value {
    let content = if m.has_image() {
        Value::Array(
            m.content
                .iter()
                .map(|p| match p {
                    ContentPart::Text(t) => json!({"type": "text", "text": t}),
                    ContentPart::ImageData { media_type, base64 } => json!({
                        "type": "image_url",
                        "image_url": {"url": format!("data:{media_type};base64,{base64}")}
                    }),
                })
                .collect(),
        )
    } else {
        Value::String(m.text_content())
    };
    json!({"role": m.role.as_str(), "content": content})
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Usage,
    /// Number of HTTP attempts made (1 for scripted replies).
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("API error {status}: {body}")]
    Api { status: u16, body: String },
    #[error("content error: {0}")]
    Content(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("scripted provider exhausted at request {0}")]
    ScriptExhausted(usize),
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

#[async_trait]
impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    async fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).chat(req).await
    }
}

/// Pull the first choice's message text out of a chat-completions response.
pub fn parse_completion(body: &Value) -> Result<(String, Usage), ProviderError> {
    let content = body
        .pointer("/choices/0/message/content")
        .ok_or_else(|| ProviderError::Content("response has no choices[0].message.content".into()))?;
    let text = match content {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join(""),
        Value::Null => String::new(),
        other => return Err(ProviderError::Content(format!("unexpected content {other}"))),
    };
    if text.is_empty() {
        return Err(ProviderError::Content("empty completion".into()));
    }
    let usage = Usage {
        prompt_tokens: body
            .pointer("/usage/prompt_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
        completion_tokens: body
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
    };
    Ok((text, usage))
}
