//! Client side of the vision-tool protocol, plus a deterministic stub.

mod http;
pub mod protocol;
mod stub;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use http::HttpToolClient;
pub use protocol::{encode_error, ToolAction, ToolOutput, ToolRequest, ToolResponse};
pub use stub::{stub_wash, StubTool, STUB_DENSE_BOXES, STUB_REFERRING_BOX, STUB_VERSION, STUB_WASH};

use crate::error::ToolError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Health {
    pub ok: bool,
    pub version: String,
}

pub trait ToolClient: Send + Sync {
    fn call(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError>;

    fn health(&self) -> Result<Health, ToolError>;
}

impl<T: ToolClient + ?Sized> ToolClient for std::sync::Arc<T> {
    fn call(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError> {
        (**self).call(req)
    }

    fn health(&self) -> Result<Health, ToolError> {
        (**self).health()
    }
}

/// Wraps a client and counts calls.
#[derive(Debug, Default)]
pub struct CountingTools<T> {
    inner: T,
    calls: AtomicUsize,
}

impl<T> CountingTools<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: ToolClient> ToolClient for CountingTools<T> {
    fn call(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.call(req)
    }

    fn health(&self) -> Result<Health, ToolError> {
        self.inner.health()
    }
}
