use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;

use super::{CallPurpose, ChatProvider, ChatRequest, ChatResponse, ProviderError, Usage};

/// Selects which requests a script entry answers.
#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    Any,
    /// Substring of the request's full text.
    Contains(String),
    Purpose(CallPurpose),
    Model(String),
    All(Vec<Matcher>),
}

impl Matcher {
    pub fn matches(&self, req: &ChatRequest) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Contains(s) => req.full_text().contains(s.as_str()),
            Matcher::Purpose(p) => req.purpose == *p,
            Matcher::Model(m) => req.model_id == *m,
            Matcher::All(ms) => ms.iter().all(|m| m.matches(req)),
        }
    }
}

type ReplyFn = dyn Fn(&ChatRequest) -> String + Send + Sync;

#[derive(Clone)]
pub enum Reply {
    Text(String),
    /// Computed from the request. Must be a pure function for reproducible runs.
    Dynamic(Arc<ReplyFn>),
}

impl Reply {
    pub fn text(s: impl Into<String>) -> Self {
        Reply::Text(s.into())
    }

    pub fn dynamic(f: impl Fn(&ChatRequest) -> String + Send + Sync + 'static) -> Self {
        Reply::Dynamic(Arc::new(f))
    }

    fn render(&self, req: &ChatRequest) -> String {
        match self {
            Reply::Text(s) => s.clone(),
            Reply::Dynamic(f) => f(req),
        }
    }
}

impl fmt::Debug for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reply::Text(s) => f.debug_tuple("Text").field(s).finish(),
            Reply::Dynamic(_) => f.write_str("Dynamic(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScriptEntry {
    pub matcher: Matcher,
    pub reply: Reply,
    /// Persistent entries answer any number of requests; others are used once.
    pub persistent: bool,
}

impl ScriptEntry {
    pub fn once(matcher: Matcher, reply: Reply) -> Self {
        ScriptEntry { matcher, reply, persistent: false }
    }

    pub fn always(matcher: Matcher, reply: Reply) -> Self {
        ScriptEntry { matcher, reply, persistent: true }
    }
}

/// What to answer when no entry matches.
#[derive(Debug, Clone, Default)]
pub enum DefaultReply {
    #[default]
    None,
    Fixed(Reply),
    /// Repeat the most recent reply.
    RepeatLast,
}

struct ScriptState {
    entries: Vec<(ScriptEntry, bool)>,
    last: Option<String>,
    log: Vec<ChatRequest>,
}

/// Deterministic in-process stand-in for a chat model.
///
/// Entries are scanned in order; the first unconsumed entry whose matcher
/// accepts the request answers it. Every request is appended to a log.
/// Runs that issue requests concurrently stay reproducible only when the
/// answering entries are persistent and their replies depend on the request alone.
pub struct ScriptedProvider {
    state: Mutex<ScriptState>,
    default: DefaultReply,
    /// `None` accepts image parts for every model.
    vision_models: Option<BTreeSet<String>>,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>, default: DefaultReply) -> Self {
        ScriptedProvider {
            state: Mutex::new(ScriptState {
                entries: entries.into_iter().map(|e| (e, false)).collect(),
                last: None,
                log: Vec::new(),
            }),
            default,
            vision_models: None,
        }
    }

    /// Answer every request with the same text.
    pub fn constant(reply: impl Into<String>) -> Self {
        Self::new(vec![], DefaultReply::Fixed(Reply::text(reply)))
    }

    pub fn with_vision_models(mut self, models: impl IntoIterator<Item = String>) -> Self {
        self.vision_models = Some(models.into_iter().collect());
        self
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.state.lock().unwrap().log.clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.lock().unwrap().log.len()
    }

    pub fn clear_log(&self) {
        self.state.lock().unwrap().log.clear();
    }
}

#[async_trait]
impl ChatProvider for ScriptedProvider {
    async fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        req.validate()?;
        if req.has_image() {
            if let Some(vision) = &self.vision_models {
                if !vision.contains(&req.model_id) {
                    return Err(ProviderError::Content(format!(
                        "model {} is not declared vision-capable",
                        req.model_id
                    )));
                }
            }
        }
        let mut state = self.state.lock().unwrap();
        state.log.push(req.clone());
        let index = state.log.len();
        let hit = state
            .entries
            .iter_mut()
            .find(|(e, used)| !*used && e.matcher.matches(req));
        let text = match hit {
            Some((entry, used)) => {
                if !entry.persistent {
                    *used = true;
                }
                entry.reply.render(req)
            }
            None => match &self.default {
                DefaultReply::Fixed(r) => r.render(req),
                DefaultReply::RepeatLast => state
                    .last
                    .clone()
                    .ok_or(ProviderError::ScriptExhausted(index))?,
                DefaultReply::None => return Err(ProviderError::ScriptExhausted(index)),
            },
        };
        state.last = Some(text.clone());
        drop(state);
        if text.is_empty() {
            return Err(ProviderError::Content("empty completion".into()));
        }
        let usage = Usage {
            prompt_tokens: req.full_text().split_whitespace().count() as u64,
            completion_tokens: text.split_whitespace().count() as u64,
        };
        Ok(ChatResponse { text, usage, attempts: 1 })
    }
}

#[cfg(test)]
mod tests {
    use super::super::ChatMessage;
    use super::*;

    fn ask(text: &str) -> ChatRequest {
        ChatRequest::new("m", vec![ChatMessage::user(text)])
    }

    async fn reply(p: &ScriptedProvider, text: &str) -> Result<String, ProviderError> {
        p.chat(&ask(text)).await.map(|r| r.text)
    }

    #[tokio::test]
    async fn queued_reply_is_returned() {
        let p = ScriptedProvider::new(
            vec![ScriptEntry::once(Matcher::Any, Reply::text("Paris"))],
            DefaultReply::None,
        );
        assert_eq!(reply(&p, "capital of France?").await.unwrap(), "Paris");
    }

    #[tokio::test]
    async fn repeat_last_default() {
        let p = ScriptedProvider::new(
            vec![ScriptEntry::once(Matcher::Any, Reply::text("A"))],
            DefaultReply::RepeatLast,
        );
        assert_eq!(reply(&p, "1").await.unwrap(), "A");
        assert_eq!(reply(&p, "2").await.unwrap(), "A");
        assert_eq!(p.request_count(), 2);
    }

    #[tokio::test]
    async fn substring_routing() {
        let p = ScriptedProvider::new(
            vec![
                ScriptEntry::always(Matcher::Contains("quiz".into()), Reply::text("B")),
                ScriptEntry::always(Matcher::Any, Reply::text("C")),
            ],
            DefaultReply::None,
        );
        let asked = ["take the quiz", "hello", "quiz again", "bye", "a quiz"];
        let got: Vec<String> = {
            let mut v = Vec::new();
            for a in asked {
                v.push(reply(&p, a).await.unwrap());
            }
            v
        };
        assert_eq!(got, ["B", "C", "B", "C", "B"]);
    }

    #[tokio::test]
    async fn empty_script_is_exhausted() {
        let p = ScriptedProvider::new(vec![], DefaultReply::None);
        assert!(matches!(reply(&p, "x").await, Err(ProviderError::ScriptExhausted(1))));
        let p = ScriptedProvider::new(vec![], DefaultReply::RepeatLast);
        assert!(matches!(reply(&p, "x").await, Err(ProviderError::ScriptExhausted(1))));
    }

    #[tokio::test]
    async fn once_entries_are_consumed_in_order() {
        let p = ScriptedProvider::new(
            vec![
                ScriptEntry::once(Matcher::Any, Reply::text("first")),
                ScriptEntry::once(Matcher::Any, Reply::text("second")),
            ],
            DefaultReply::None,
        );
        assert_eq!(reply(&p, "a").await.unwrap(), "first");
        assert_eq!(reply(&p, "b").await.unwrap(), "second");
        assert!(reply(&p, "c").await.is_err());
    }

    #[tokio::test]
    async fn dynamic_reply_and_log() {
        let p = ScriptedProvider::new(
            vec![ScriptEntry::always(Matcher::Any, Reply::dynamic(|r| r.last_user_text().to_uppercase()))],
            DefaultReply::None,
        );
        assert_eq!(reply(&p, "echo").await.unwrap(), "ECHO");
        assert_eq!(p.requests()[0].last_user_text(), "echo");
    }

    #[tokio::test]
    async fn non_vision_models_reject_images() {
        let p = ScriptedProvider::constant("ok").with_vision_models(["vlm".to_string()]);
        let msg = ChatMessage::user("see").with_part(super::super::ContentPart::image_from_bytes("image/png", b"x"));
        let req = ChatRequest::new("text-only", vec![msg.clone()]);
        assert!(matches!(p.chat(&req).await, Err(ProviderError::Content(_))));
        assert_eq!(p.request_count(), 0);
        let req = ChatRequest::new("vlm", vec![msg]);
        assert!(p.chat(&req).await.is_ok());
    }
}
