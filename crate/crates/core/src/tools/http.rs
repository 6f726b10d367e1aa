use std::sync::{Condvar, Mutex};
use std::time::Duration;

use reqwest::blocking::Client;
use serde::Deserialize;

use super::protocol::{ToolRequest, ToolResponse};
use super::{Health, ToolClient};
use crate::error::ToolError;

/// Client for a sidecar serving `POST /v1/tool` and `GET /v1/health`.
pub struct HttpToolClient {
    base_url: String,
    client: Client,
    in_flight: InFlight,
}

impl HttpToolClient {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
    pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

    pub fn new(base_url: impl Into<String>) -> Result<Self, ToolError> {
        Self::with_limits(base_url, Self::DEFAULT_TIMEOUT, Self::DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_limits(
        base_url: impl Into<String>,
        timeout: Duration,
        max_in_flight: usize,
    ) -> Result<Self, ToolError> {
        let client = Client::builder().timeout(timeout).build().map_err(|e| ToolError::Connection(e.to_string()))?;
        Ok(Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            client,
            in_flight: InFlight::new(max_in_flight.max(1)),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }
}

fn classify(e: reqwest::Error) -> ToolError {
    if e.is_timeout() {
        ToolError::Timeout(e.to_string())
    } else {
        ToolError::Connection(e.to_string())
    }
}

#[derive(Deserialize)]
struct HealthBody {
    ok: bool,
    #[serde(default)]
    version: String,
}

impl ToolClient for HttpToolClient {
    fn call(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError> {
        let _permit = self.in_flight.acquire();
        let resp = self
            .client
            .post(format!("{}/v1/tool", self.base_url))
            .header("content-type", "application/json")
            .body(req.encode())
            .send()
            .map_err(classify)?;
        let status = resp.status();
        let body = resp.text().map_err(classify)?;
        match ToolResponse::decode(&body, req.action) {
            Err(ToolError::MalformedResponse(m)) if !status.is_success() => {
                Err(ToolError::ToolReported { kind: format!("http_{}", status.as_u16()), message: m })
            }
            other => other,
        }
    }

    fn health(&self) -> Result<Health, ToolError> {
        let resp = self.client.get(format!("{}/v1/health", self.base_url)).send().map_err(classify)?;
        let body = resp.text().map_err(classify)?;
        let h: HealthBody =
            serde_json::from_str(&body).map_err(|e| ToolError::MalformedResponse(format!("health: {e}")))?;
        Ok(Health { ok: h.ok, version: h.version })
    }
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    max: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(max: usize) -> Self {
        Self { max, used: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().expect("in-flight lock poisoned");
        while *used >= self.max {
            used = self.freed.wait(used).expect("in-flight lock poisoned");
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().expect("in-flight lock poisoned");
        *used -= 1;
        self.0.freed.notify_one();
    }
}
