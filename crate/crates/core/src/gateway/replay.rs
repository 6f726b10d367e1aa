//! Content-addressed fixture store: `<dir>/<fingerprint>.txt` holds the
//! verbatim response for the request with that fingerprint.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatTransport, TransportReply};
use crate::error::GatewayError;

fn fixture_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}.txt"))
}

/// Answers requests from recorded fixtures only.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(GatewayError::Config(format!("fixture directory {} does not exist", dir.display())));
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl ChatTransport for ReplayTransport {
    fn id(&self) -> &str {
        "replay"
    }

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError> {
        let path = fixture_path(&self.dir, request.fingerprint);
        match fs::read(&path) {
            Ok(bytes) => String::from_utf8(bytes)
                .map(TransportReply::once)
                .map_err(|e| GatewayError::Io { path, source: io::Error::new(io::ErrorKind::InvalidData, e) }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(GatewayError::FixtureMiss { hash: request.fingerprint.to_string() })
            }
            Err(source) => Err(GatewayError::Io { path, source }),
        }
    }
}

/// Forwards to an inner transport and stores every response as a fixture.
pub struct RecordTransport {
    inner: Box<dyn ChatTransport>,
    dir: PathBuf,
}

impl RecordTransport {
    pub fn new(inner: impl ChatTransport + 'static, dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| GatewayError::Io { path: dir.clone(), source })?;
        Ok(Self { inner: Box::new(inner), dir })
    }
}

impl ChatTransport for RecordTransport {
    fn id(&self) -> &str {
        "record"
    }

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError> {
        let reply = self.inner.send(request)?;
        let path = fixture_path(&self.dir, request.fingerprint);
        write_atomic(&path, reply.text.as_bytes()).map_err(|source| GatewayError::Io { path, source })?;
        Ok(reply)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    static SEQ: AtomicU64 = AtomicU64::new(0);
    let seq = SEQ.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp{}-{seq}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Hash over the names and contents of every fixture file in `dir`, in
/// name order. Identifies the recorded model behaviour a run replayed.
pub fn fixture_dir_fingerprint(dir: &Path) -> io::Result<String> {
    let mut names: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for p in names {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        let body = fs::read(&p)?;
        h.update((body.len() as u64).to_le_bytes());
        h.update(&body);
    }
    Ok(hex::encode(h.finalize()))
}
