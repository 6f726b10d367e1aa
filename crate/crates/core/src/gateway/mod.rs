//! Chat interface to a multimodal model.
//!
//! Every model call in the pipeline goes through [`Gateway::complete`]. The
//! gateway validates the request, computes its [`request_fingerprint`], and
//! hands it to a [`ChatTransport`]: a live HTTP client, a fixture replayer,
//! a recorder wrapping another transport, or a scripted stand-in.

mod fingerprint;
mod live;
mod replay;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use fingerprint::request_fingerprint;
pub use live::{wire_body, LiveConfig, LiveTransport, RateLimiter, RetryPolicy, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use replay::{fixture_dir_fingerprint, RecordTransport, ReplayTransport};

use crate::error::GatewayError;
use crate::model::ImageData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Text(String),
    Image(ImageData),
}

impl Part {
    pub fn is_image(&self) -> bool {
        matches!(self, Part::Image(_))
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Part::Text(t) => Some(t),
            Part::Image(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self { role: Role::System, parts: vec![Part::Text(text.into())] }
    }

    pub fn user(parts: Vec<Part>) -> Self {
        Self { role: Role::User, parts }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { role: Role::Assistant, parts: vec![Part::Text(text.into())] }
    }

    pub fn image_count(&self) -> usize {
        self.parts.iter().filter(|p| p.is_image()).count()
    }

    /// Concatenated text parts, separated by newlines.
    pub fn text(&self) -> String {
        self.parts.iter().filter_map(Part::as_text).collect::<Vec<_>>().join("\n")
    }

    pub fn violation(&self) -> Option<String> {
        if self.parts.is_empty() {
            return Some(format!("{} message has no parts", self.role.as_str()));
        }
        if self.role == Role::Assistant && self.parts.iter().any(Part::is_image) {
            return Some("assistant message carries an image".to_string());
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        Self { temperature: 0.0, max_tokens: 500 }
    }
}

/// A validated request as seen by a transport.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub messages: &'a [ChatMessage],
    pub settings: &'a DecodeSettings,
    pub fingerprint: &'a str,
}

/// What a transport returns for one request.
#[derive(Debug, Clone)]
pub struct TransportReply {
    pub text: String,
    pub attempts: u32,
}

impl TransportReply {
    pub fn once(text: impl Into<String>) -> Self {
        Self { text: text.into(), attempts: 1 }
    }
}

pub trait ChatTransport: Send + Sync {
    fn id(&self) -> &str;

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError>;
}

/// One completed request/response pair.
#[derive(Debug, Clone)]
pub struct ChatExchange {
    pub messages: Vec<ChatMessage>,
    pub settings: DecodeSettings,
    /// Model output, verbatim.
    pub response_text: String,
    pub transport_id: String,
    pub fingerprint: String,
    pub attempts: u32,
    pub latency: Duration,
}

/// Shared handle over a transport. Cheap to clone; counts every call made
/// through it.
#[derive(Clone)]
pub struct Gateway {
    transport: Arc<dyn ChatTransport>,
    calls: Arc<AtomicUsize>,
}

impl Gateway {
    pub fn new(transport: impl ChatTransport + 'static) -> Self {
        Self::from_arc(Arc::new(transport))
    }

    pub fn from_arc(transport: Arc<dyn ChatTransport>) -> Self {
        Self { transport, calls: Arc::new(AtomicUsize::new(0)) }
    }

    pub fn transport_id(&self) -> &str {
        self.transport.id()
    }

    /// Number of `complete` calls that reached the transport.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, messages: &[ChatMessage], settings: &DecodeSettings) -> Result<ChatExchange, GatewayError> {
        if messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if let Some(v) = messages.iter().find_map(ChatMessage::violation) {
            return Err(GatewayError::InvalidRequest(v));
        }
        if settings.temperature.is_nan() || settings.temperature < 0.0 || settings.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest(format!("bad decode settings {settings:?}")));
        }
        let fingerprint = request_fingerprint(messages, settings);
        self.calls.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let reply = self.transport.send(ChatRequest { messages, settings, fingerprint: &fingerprint })?;
        Ok(ChatExchange {
            messages: messages.to_vec(),
            settings: *settings,
            response_text: reply.text,
            transport_id: self.transport.id().to_string(),
            fingerprint,
            attempts: reply.attempts,
            latency: started.elapsed(),
        })
    }
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("transport", &self.transport.id()).field("calls", &self.calls()).finish()
    }
}

type ScriptFn = dyn Fn(&[ChatMessage], &DecodeSettings) -> Result<String, GatewayError> + Send + Sync;

/// A transport answered by a closure. Useful for generating fixtures and
/// for tests that need a model stand-in.
pub struct ScriptedTransport {
    id: String,
    script: Box<ScriptFn>,
}

impl ScriptedTransport {
    pub fn new<F>(id: impl Into<String>, script: F) -> Self
    where
        F: Fn(&[ChatMessage], &DecodeSettings) -> Result<String, GatewayError> + Send + Sync + 'static,
    {
        Self { id: id.into(), script: Box::new(script) }
    }
}

impl ChatTransport for ScriptedTransport {
    fn id(&self) -> &str {
        &self.id
    }

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError> {
        (self.script)(request.messages, request.settings).map(TransportReply::once)
    }
}
