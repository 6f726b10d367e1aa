//! Settings merged from flags, environment and an optional TOML file, in
//! that order of precedence.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use imgthought::bench::BenchmarkKind;
use imgthought::gateway::{
    fixture_dir_fingerprint, ChatTransport, Gateway, LiveConfig, LiveTransport, RecordTransport, ReplayTransport,
    RetryPolicy, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL,
};
use imgthought::model::RationaleMode;
use imgthought::pipeline::PipelineConfig;
use imgthought::tools::{HttpToolClient, StubTool, ToolClient};
use serde::Deserialize;

pub const ENV_TRANSPORT: &str = "IMGTHOUGHT_TRANSPORT";
pub const ENV_FIXTURES: &str = "IMGTHOUGHT_FIXTURES";
pub const ENV_TOOLS: &str = "IMGTHOUGHT_TOOLS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Live,
    Record,
    Replay,
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "live" => Ok(TransportKind::Live),
            "record" => Ok(TransportKind::Record),
            "replay" => Ok(TransportKind::Replay),
            other => Err(format!("unknown transport {other:?} (expected live, record or replay)")),
        }
    }
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub transport: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub mode: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub kind: Option<String>,
    pub max_steps: Option<usize>,
    pub max_images_per_request: Option<usize>,
    pub tools: Option<String>,
    pub requests_per_minute: Option<u32>,
    pub max_attempts: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub timeout_secs: Option<u64>,
    pub pipeline: Option<PipelineConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub transport: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub mode: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub kind: Option<String>,
    pub max_steps: Option<usize>,
    pub tools: Option<String>,
}

#[derive(Debug, Clone)]
pub enum ToolsSpec {
    Stub,
    Url(String),
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub transport: TransportKind,
    pub fixtures: Option<PathBuf>,
    pub mode: RationaleMode,
    pub out: PathBuf,
    pub kind: Option<BenchmarkKind>,
    pub tools: ToolsSpec,
    pub pipeline: PipelineConfig,
    pub live: LiveOverrides,
}

/// Live-transport settings that may come from the config file.
#[derive(Debug, Clone, Default)]
pub struct LiveOverrides {
    pub max_attempts: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub timeout_secs: Option<u64>,
    pub requests_per_minute: Option<u32>,
}

fn env(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.trim().is_empty())
}

impl CliConfig {
    pub fn resolve(flags: &Overrides, file: Option<&Path>) -> Result<Self> {
        let file = match file {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let transport: TransportKind = flags
            .transport
            .clone()
            .or_else(|| env(ENV_TRANSPORT))
            .or(file.transport)
            .as_deref()
            .unwrap_or("live")
            .parse()
            .map_err(|e: String| anyhow!(e))?;
        let fixtures = flags.fixtures.clone().or_else(|| env(ENV_FIXTURES).map(PathBuf::from)).or(file.fixtures);
        let mode: RationaleMode =
            flags.mode.clone().or(file.mode).as_deref().unwrap_or("hybrid").parse().map_err(|e| anyhow!("{e}"))?;
        let kind =
            flags.kind.clone().or(file.kind).map(|k| k.parse::<BenchmarkKind>().map_err(|e| anyhow!(e))).transpose()?;
        let tools = match flags.tools.clone().or_else(|| env(ENV_TOOLS)).or(file.tools).as_deref() {
            None | Some("stub") => ToolsSpec::Stub,
            Some(url) => ToolsSpec::Url(url.to_string()),
        };

        let mut pipeline = file.pipeline.unwrap_or_default();
        if let Some(n) = flags.max_steps.or(file.max_steps) {
            pipeline.max_steps = n;
        }
        if let Some(n) = flags.workers.or(file.workers) {
            pipeline.workers = n;
        }
        if file.max_images_per_request.is_some() {
            pipeline.max_images_per_request = file.max_images_per_request;
        }
        if pipeline.max_steps == 0 {
            bail!("max_steps must be at least 1");
        }
        if pipeline.workers == 0 {
            bail!("workers must be at least 1");
        }

        let live = LiveOverrides {
            max_attempts: file.max_attempts,
            backoff_ms: file.backoff_ms,
            timeout_secs: file.timeout_secs,
            requests_per_minute: file.requests_per_minute,
        };

        Ok(Self {
            transport,
            fixtures,
            mode,
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            kind,
            tools,
            pipeline,
            live,
        })
    }

    pub fn traces_dir(&self) -> PathBuf {
        self.out.join("traces")
    }

    pub fn gateway(&self) -> Result<Gateway> {
        let transport: Arc<dyn ChatTransport> = match self.transport {
            TransportKind::Replay => Arc::new(ReplayTransport::new(self.fixture_dir()?)?),
            TransportKind::Live => Arc::new(LiveTransport::new(self.live_config()?)?),
            TransportKind::Record => {
                let dir = self.fixture_dir()?;
                Arc::new(RecordTransport::new(LiveTransport::new(self.live_config()?)?, dir)?)
            }
        };
        Ok(Gateway::from_arc(transport))
    }

    pub fn tools(&self) -> Result<Arc<dyn ToolClient>> {
        Ok(match &self.tools {
            ToolsSpec::Stub => Arc::new(StubTool),
            ToolsSpec::Url(url) => Arc::new(HttpToolClient::new(url.clone())?),
        })
    }

    /// Model identifier for report metadata: the model name for live and
    /// record runs, the transport id for replay.
    pub fn model_id(&self) -> Option<String> {
        match self.transport {
            TransportKind::Replay => None,
            _ => self.live_config().ok().map(|l| l.model),
        }
    }

    pub fn fixture_fingerprint(&self) -> Option<String> {
        match self.transport {
            TransportKind::Replay => self.fixtures.as_deref().and_then(|d| fixture_dir_fingerprint(d).ok()),
            _ => None,
        }
    }

    fn fixture_dir(&self) -> Result<&Path> {
        self.fixtures.as_deref().ok_or_else(|| {
            anyhow!("{:?} transport needs a fixture directory (--fixtures or {ENV_FIXTURES})", self.transport)
        })
    }

    fn live_config(&self) -> Result<LiveConfig> {
        let mut live = LiveConfig::from_env().map_err(|e| {
            anyhow!("{e}; live and record transports need {ENV_ENDPOINT}, {ENV_API_KEY} and {ENV_MODEL}")
        })?;
        let o = &self.live;
        let default_retry = RetryPolicy::default();
        live.retry = RetryPolicy {
            max_attempts: o.max_attempts.unwrap_or(default_retry.max_attempts),
            backoff_base: o.backoff_ms.map_or(default_retry.backoff_base, Duration::from_millis),
        };
        if let Some(s) = o.timeout_secs {
            live.timeout = Duration::from_secs(s);
        }
        if o.requests_per_minute.is_some() {
            live.requests_per_minute = o.requests_per_minute;
        }
        Ok(live)
    }
}
