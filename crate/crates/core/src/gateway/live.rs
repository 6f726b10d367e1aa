//! HTTP transport speaking the chat-completions wire shape.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{ChatMessage, ChatRequest, ChatTransport, Part, TransportReply};
use crate::error::GatewayError;
use crate::imageio;

pub const ENV_ENDPOINT: &str = "IMGTHOUGHT_ENDPOINT";
pub const ENV_API_KEY: &str = "IMGTHOUGHT_API_KEY";
pub const ENV_MODEL: &str = "IMGTHOUGHT_MODEL";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, backoff_base: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, doubling from the base.
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.backoff_base * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub endpoint: String,
    pub api_key: String,
    pub model: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// Admissions per minute; `None` disables limiting.
    pub requests_per_minute: Option<u32>,
}

impl LiveConfig {
    /// Reads endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, GatewayError> {
        let var = |k: &str| {
            std::env::var(k)
                .ok()
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| GatewayError::Config(format!("{k} is not set")))
        };
        Ok(Self {
            endpoint: var(ENV_ENDPOINT)?,
            api_key: var(ENV_API_KEY)?,
            model: var(ENV_MODEL)?,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
            requests_per_minute: None,
        })
    }
}

/// Token bucket admitting `per_minute` requests per minute with a burst of
/// `capacity`.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_sec: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_minute: u32, capacity: u32) -> Self {
        let capacity = capacity.max(1) as f64;
        Self { capacity, per_sec: per_minute.max(1) as f64 / 60.0, state: Mutex::new((capacity, Instant::now())) }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.per_sec).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / self.per_sec)
            };
            thread::sleep(wait);
        }
    }
}

pub struct LiveTransport {
    client: Client,
    config: LiveConfig,
    limiter: Option<RateLimiter>,
}

enum Failure {
    Transient(String),
    Fatal(String),
}

impl LiveTransport {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client =
            Client::builder().timeout(config.timeout).build().map_err(|e| GatewayError::Config(e.to_string()))?;
        let limiter = config.requests_per_minute.map(|rpm| RateLimiter::new(rpm, 1));
        Ok(Self { client, config, limiter })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let resp =
            self.client.post(&self.config.endpoint).bearer_auth(&self.config.api_key).json(body).send().map_err(
                |e| {
                    if e.is_timeout() {
                        Failure::Transient(format!("timeout: {e}"))
                    } else {
                        Failure::Fatal(e.to_string())
                    }
                },
            )?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                Failure::Transient(format!("timeout reading body: {e}"))
            } else {
                Failure::Fatal(e.to_string())
            }
        })?;
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Failure::Transient(format!("HTTP {status}: {text}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(format!("HTTP {status}: {text}")));
        }
        parse_completion(&text).map_err(Failure::Fatal)
    }
}

impl ChatTransport for LiveTransport {
    fn id(&self) -> &str {
        "live"
    }

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError> {
        let body = wire_body(&self.config.model, request);
        let max = self.config.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(TransportReply { text, attempts: attempt }),
                Err(Failure::Transient(_)) if attempt < max => {
                    thread::sleep(self.config.retry.backoff(attempt));
                    attempt += 1;
                }
                Err(Failure::Transient(message)) | Err(Failure::Fatal(message)) => {
                    return Err(GatewayError::Transport { message, attempts: attempt })
                }
            }
        }
    }
}

/// The JSON request body for a chat-completions endpoint. Images travel as
/// PNG data URLs.
pub fn wire_body(model: &str, request: ChatRequest<'_>) -> Value {
    let messages: Vec<Value> = request.messages.iter().map(wire_message).collect();
    json!({
        "model": model,
        "messages": messages,
        "temperature": request.settings.temperature,
        "max_tokens": request.settings.max_tokens,
    })
}

fn wire_message(m: &ChatMessage) -> Value {
    let content: Vec<Value> = m
        .parts
        .iter()
        .map(|p| match p {
            Part::Text(t) => json!({ "type": "text", "text": t }),
            Part::Image(img) => json!({
                "type": "image_url",
                "image_url": { "url": format!("data:image/png;base64,{}", imageio::png_base64(img)) },
            }),
        })
        .collect();
    json!({ "role": m.role.as_str(), "content": content })
}

fn parse_completion(body: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("")),
        _ => Err(format!("response carries no message content: {body}")),
    }
}
