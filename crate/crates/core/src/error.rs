use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown action: {0:?}")]
    UnknownAction(String),
    #[error("unknown rationale mode: {0:?}")]
    UnknownMode(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("no recorded response for request {hash}")]
    FixtureMiss { hash: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("fixture store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("could not parse a plan: {0}")]
    Parse(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("tool call timed out: {0}")]
    Timeout(String),
    #[error("tool connection failed: {0}")]
    Connection(String),
    #[error("malformed tool response: {0}")]
    MalformedResponse(String),
    #[error("tool reported {kind}: {message}")]
    ToolReported { kind: String, message: String },
}

impl ToolError {
    /// The wire name of this error kind.
    pub fn kind(&self) -> &str {
        match self {
            ToolError::Timeout(_) => "timeout",
            ToolError::Connection(_) => "connection",
            ToolError::MalformedResponse(_) => "malformed_response",
            ToolError::ToolReported { kind, .. } => kind,
        }
    }
}

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("crop rectangle is empty after rounding: {0}")]
    DegenerateBox(String),
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error(transparent)]
    Tool(#[from] ToolError),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("series inputs disagree: {steps} steps, {outcomes} outcomes, {rationales} rationales")]
    LengthMismatch { steps: usize, outcomes: usize, rationales: usize },
    #[error("series inputs misaligned at position {position}")]
    Misaligned { position: usize },
    #[error("no trace for task {0:?}")]
    NotFound(String),
    #[error("corrupt trace: {0}")]
    Corrupt(String),
    #[error("trace I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("row {row}: {reason}")]
    Format { row: usize, reason: String },
    #[error("result {0:?} has no gold answer")]
    MissingGold(String),
    #[error("image {0} does not carry exactly two questions")]
    UnpairedQuestions(String),
    #[error("judge reply for {item:?} holds no score in [0,1]: {reply:?}")]
    JudgeParse { item: String, reply: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}
