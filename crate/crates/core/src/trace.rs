//! Rationale series assembly and on-disk traces.
//!
//! A trace lives in `<root>/<task_id>/` as `manifest.json` plus one
//! `step_<index>.png` per step that produced an image. Traces are written
//! into a temporary sibling directory and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::actions::ActionOutcome;
use crate::error::TraceError;
use crate::imageio;
use crate::model::{
    ActionKind, AnswerOption, BBox, FinalAnswer, ImageData, MultimodalRationale, Plan, RationaleMode, RationaleSeries,
    Task,
};

pub const MANIFEST: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

/// What running a step produced: an outcome, or why there is none.
pub type StepOutcome = Result<ActionOutcome, String>;

const EMPTY_RATIONALE: &str = "(the model returned no rationale)";

/// Zips plan steps, their outcomes and their textual rationales.
pub fn assemble_series(
    plan: &Plan,
    outcomes: &[StepOutcome],
    rationales: &[String],
) -> Result<RationaleSeries, TraceError> {
    if plan.steps.len() != outcomes.len() || outcomes.len() != rationales.len() {
        return Err(TraceError::LengthMismatch {
            steps: plan.steps.len(),
            outcomes: outcomes.len(),
            rationales: rationales.len(),
        });
    }
    let mut items = Vec::with_capacity(plan.steps.len());
    for (position, ((step, outcome), text)) in plan.steps.iter().zip(outcomes).zip(rationales).enumerate() {
        let (visual, failure) = match outcome {
            Ok(o) if o.visual.producer != step.action => return Err(TraceError::Misaligned { position }),
            Ok(o) => (Some(o.visual.clone()), None),
            Err(e) => (None, Some(e.clone())),
        };
        let textual = if text.trim().is_empty() { EMPTY_RATIONALE.to_string() } else { text.clone() };
        items.push(MultimodalRationale { step: step.clone(), visual, textual, failure });
    }
    Ok(RationaleSeries { items })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub sha256: String,
}

impl ImageMeta {
    pub fn of(image: &ImageData) -> Self {
        Self { width: image.width(), height: image.height(), channels: image.channels(), sha256: image.content_hash() }
    }
}

/// The task as recorded in a trace; the image is summarized, not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSnapshot {
    pub id: String,
    pub question: String,
    pub options: Vec<AnswerOption>,
    pub gold_answer: Option<String>,
    pub category: Option<String>,
    pub image: ImageMeta,
}

impl TaskSnapshot {
    pub fn of(task: &Task) -> Self {
        Self {
            id: task.id.clone(),
            question: task.question.clone(),
            options: task.options.clone(),
            gold_answer: task.gold_answer.clone(),
            category: task.category.clone(),
            image: ImageMeta::of(&task.image),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: u32,
    pub subgoal: String,
    pub action: ActionKind,
    pub target: Option<String>,
    pub degraded: bool,
    pub caption: Option<String>,
    pub note: Option<String>,
    pub failure: Option<String>,
    pub annotations: Option<Vec<BBox>>,
    pub textual_rationale: String,
    pub visual_file: Option<String>,
    pub visual: Option<ImageMeta>,
}

/// One model call, identified by its request fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    /// `plan`, `rationale:<index>`, `refine` or `zero_shot`.
    pub purpose: String,
    pub fingerprint: String,
    pub transport: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub schema: u32,
    pub task: TaskSnapshot,
    pub mode: RationaleMode,
    pub plan: Option<Plan>,
    pub plan_error: Option<String>,
    pub steps: Vec<StepRecord>,
    pub final_answer: FinalAnswer,
    pub exchanges: Vec<ExchangeRecord>,
    pub tool_versions: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub fixture_fingerprint: Option<String>,
    /// Unix seconds. Ignored when comparing runs.
    pub created_at: u64,
}

impl TraceManifest {
    /// Serialized form with the timestamp zeroed, for run-to-run comparison.
    pub fn comparable_bytes(&self) -> Vec<u8> {
        let mut m = self.clone();
        m.created_at = 0;
        m.to_json().into_bytes()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn step_file(index: u32) -> String {
    format!("step_{index}.png")
}

/// Directory name for a task id; anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn task_dir_name(task_id: &str) -> String {
    let name: String = task_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    match name.as_str() {
        "" | "." | ".." => format!("_{name}"),
        _ if name.starts_with('.') => format!("_{name}"),
        _ => name,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io { path: path.to_path_buf(), source }
}

static SEQ: AtomicU64 = AtomicU64::new(0);

/// Writes a trace, replacing any previous trace for the same task.
pub fn write_trace(
    root: &Path,
    manifest: &TraceManifest,
    images: &BTreeMap<u32, ImageData>,
) -> Result<PathBuf, TraceError> {
    for s in &manifest.steps {
        if s.visual_file.is_some() && !images.contains_key(&s.index) {
            return Err(TraceError::Corrupt(format!("step {} has no image to write", s.index)));
        }
    }
    fs::create_dir_all(root).map_err(io_err(root))?;
    let name = task_dir_name(&manifest.task.id);
    let unique = format!("{}-{}", std::process::id(), SEQ.fetch_add(1, Ordering::Relaxed));
    let tmp = root.join(format!(".tmp-{name}-{unique}"));
    fs::create_dir(&tmp).map_err(io_err(&tmp))?;

    let result = (|| {
        for s in &manifest.steps {
            if let Some(file) = &s.visual_file {
                let path = tmp.join(file);
                fs::write(&path, imageio::encode_png(&images[&s.index])).map_err(io_err(&path))?;
            }
        }
        let path = tmp.join(MANIFEST);
        fs::write(&path, manifest.to_json()).map_err(io_err(&path))
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }

    let dest = root.join(&name);
    if dest.exists() {
        let old = root.join(format!(".old-{name}-{unique}"));
        fs::rename(&dest, &old).map_err(io_err(&dest))?;
        fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
        let _ = fs::remove_dir_all(&old);
    } else {
        fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
    }
    Ok(dest)
}

/// Reads a manifest without its images.
pub fn load_manifest(dir: &Path) -> Result<TraceManifest, TraceError> {
    let path = dir.join(MANIFEST);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            return Err(TraceError::NotFound(id));
        }
        Err(e) => return Err(io_err(&path)(e)),
    };
    serde_json::from_str(&text).map_err(|e| TraceError::Corrupt(format!("{}: {e}", path.display())))
}

/// Loads a trace and every step image it references.
pub fn load_trace(root: &Path, task_id: &str) -> Result<(TraceManifest, BTreeMap<u32, ImageData>), TraceError> {
    let dir = root.join(task_dir_name(task_id));
    if !dir.is_dir() {
        return Err(TraceError::NotFound(task_id.to_string()));
    }
    let manifest = load_manifest(&dir)?;
    let mut images = BTreeMap::new();
    for s in &manifest.steps {
        let Some(file) = &s.visual_file else { continue };
        let path = dir.join(file);
        let bytes = fs::read(&path)
            .map_err(|e| TraceError::Corrupt(format!("step {} image {}: {e}", s.index, path.display())))?;
        let img = imageio::decode(&bytes).map_err(|e| TraceError::Corrupt(format!("step {} image: {e}", s.index)))?;
        images.insert(s.index, img);
    }
    Ok((manifest, images))
}

/// Every trace directory under `root`, sorted by name.
pub fn trace_dirs(root: &Path) -> Result<Vec<PathBuf>, TraceError> {
    let entries = match fs::read_dir(root) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(root)(e)),
    };
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.is_dir()
                && p.join(MANIFEST).is_file()
                && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'))
        })
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// A self-contained HTML page showing each step's image and rationale.
pub fn render_html(manifest: &TraceManifest, images: &BTreeMap<u32, ImageData>) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n");
    h.push_str(&format!("<title>Trace {}</title>\n", escape(&manifest.task.id)));
    h.push_str(
        "<style>body{font-family:sans-serif;max-width:960px;margin:auto}\
         .step{border-top:1px solid #ccc;padding:1em 0}img{max-width:100%}\
         .degraded{color:#a40}pre{white-space:pre-wrap}</style>\n</head><body>\n",
    );
    h.push_str(&format!("<h1>{}</h1>\n", escape(&manifest.task.id)));
    h.push_str(&format!("<p><b>Question:</b> {}</p>\n", escape(&manifest.task.question)));
    if !manifest.task.options.is_empty() {
        h.push_str("<ol type=\"A\">\n");
        for o in &manifest.task.options {
            h.push_str(&format!("<li>{}</li>\n", escape(&o.text)));
        }
        h.push_str("</ol>\n");
    }
    h.push_str(&format!("<p><b>Mode:</b> {}</p>\n", manifest.mode));
    for s in &manifest.steps {
        h.push_str("<div class=\"step\">\n");
        h.push_str(&format!(
            "<h2>Step {}: {}</h2>\n<p><b>Action:</b> {}{}</p>\n",
            s.index,
            escape(&s.subgoal),
            s.action,
            s.target.as_deref().map(|t| format!(" ({})", escape(t))).unwrap_or_default()
        ));
        if s.degraded {
            h.push_str(&format!(
                "<p class=\"degraded\">Degraded: {}</p>\n",
                escape(s.note.as_deref().unwrap_or("tool unavailable"))
            ));
        }
        if let Some(f) = &s.failure {
            h.push_str(&format!("<p class=\"degraded\">Failed: {}</p>\n", escape(f)));
        }
        if let (Some(file), Some(img)) = (&s.visual_file, images.get(&s.index)) {
            h.push_str(&format!(
                "<img data-file=\"{}\" alt=\"{}\" src=\"data:image/png;base64,{}\">\n",
                escape(file),
                escape(s.caption.as_deref().unwrap_or(file)),
                imageio::png_base64(img)
            ));
        }
        h.push_str(&format!("<pre>{}</pre>\n</div>\n", escape(&s.textual_rationale)));
    }
    h.push_str("<div class=\"step\">\n<h2>Answer</h2>\n");
    if let Some(c) = &manifest.final_answer.choice {
        h.push_str(&format!("<p><b>Choice:</b> {}</p>\n", escape(c)));
    }
    if manifest.final_answer.fallback {
        h.push_str("<p class=\"degraded\">Answered without rationales (fallback).</p>\n");
    }
    h.push_str(&format!("<pre>{}</pre>\n</div>\n</body></html>\n", escape(&manifest.final_answer.text)));
    h
}
