//! Whole-pipeline checks: replay determinism and the rationale ablations.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use imgthought::bench::{self, render_report, BenchmarkKind, ReportFormat};
use imgthought::gateway::{ChatMessage, Gateway, Part, ReplayTransport};
use imgthought::model::RationaleMode;
use imgthought::pipeline::{Pipeline, PipelineConfig};
use imgthought::prompts::PromptSet;
use imgthought::tools::{CountingTools, StubTool};
use imgthought::trace::{load_manifest, trace_dirs};

use super::fixtures;

pub const RUNS: usize = 3;
pub const TIME_LIMIT: Duration = Duration::from_secs(10);

/// Every bundled benchmark, run `RUNS` times under replay. Reports must be
/// byte-identical and manifests identical apart from their timestamps.
/// Returns (traces per run, elapsed).
pub fn deterministic_replay(scratch: &Path) -> Result<(usize, Duration), String> {
    let start = Instant::now();
    let mut first: Option<(Vec<String>, Vec<Vec<u8>>)> = None;
    for run in 0..RUNS {
        let traces = scratch.join(format!("run{run}"));
        let reports: Vec<String> = fixtures::KINDS
            .iter()
            .map(|&kind| {
                render_report(&fixtures::run_fixture_bench(kind, RationaleMode::Hybrid, &traces), ReportFormat::Json)
            })
            .collect();
        let dirs = trace_dirs(&traces).map_err(|e| e.to_string())?;
        let manifests = dirs
            .iter()
            .map(|d| load_manifest(d).map(|m| m.comparable_bytes()).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        match &first {
            None => first = Some((reports, manifests)),
            Some((r0, m0)) => {
                if &reports != r0 {
                    return Err(format!("run {run}: reports differ from run 0"));
                }
                if &manifests != m0 {
                    return Err(format!("run {run}: manifests differ from run 0"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let traces = first.map_or(0, |(_, m)| m.len());
    if traces == 0 {
        return Err("no traces written".into());
    }
    if elapsed > TIME_LIMIT {
        return Err(format!("{RUNS} runs took {elapsed:?}"));
    }
    Ok((traces, elapsed))
}

/// The first bundled multiple-choice task, replayed through a recording
/// wrapper so every model request can be inspected.
fn captured_run(mode: RationaleMode) -> Result<(Vec<Vec<ChatMessage>>, usize, usize), String> {
    let kind = BenchmarkKind::MultipleChoice;
    let task = bench::load_tasks(kind, &fixtures::bench_file(kind)).map_err(|e| e.to_string())?.remove(0);
    let replay = ReplayTransport::new(fixtures::model_dir()).map_err(|e| e.to_string())?;
    let (capture, log) = fixtures::Capture::new(replay);
    let gateway = Gateway::new(capture);
    let tools = Arc::new(CountingTools::new(StubTool));
    let pipeline = Pipeline::new(gateway.clone(), tools.clone(), PromptSet::builtin(kind), PipelineConfig::default());
    pipeline.run_task(&task, mode).map_err(|e| e.to_string())?;
    let requests = log.lock().unwrap().clone();
    Ok((requests, gateway.calls(), tools.calls()))
}

fn without_images(messages: &[ChatMessage], keep_last: bool) -> Vec<ChatMessage> {
    messages
        .iter()
        .map(|m| {
            let last = m.parts.len().saturating_sub(1);
            let parts = m
                .parts
                .iter()
                .enumerate()
                .filter(|(i, p)| !matches!(p, Part::Image(_)) || (keep_last && *i == last))
                .map(|(_, p)| p.clone())
                .collect();
            ChatMessage { role: m.role, parts }
        })
        .collect()
}

/// Text-only differs from hybrid only by the step images in the final
/// request; zero-shot is one request with no tool calls.
pub fn ablation() -> Result<(), String> {
    let (hybrid, _, hybrid_tools) = captured_run(RationaleMode::Hybrid)?;
    let (text_only, _, text_tools) = captured_run(RationaleMode::TextOnly)?;
    let (zero, zero_calls, zero_tools) = captured_run(RationaleMode::ZeroShot)?;

    if hybrid.len() != text_only.len() {
        return Err(format!("{} hybrid requests, {} text-only", hybrid.len(), text_only.len()));
    }
    if hybrid_tools != text_tools {
        return Err(format!("tool calls differ: {hybrid_tools} vs {text_tools}"));
    }
    let n = hybrid.len();
    if hybrid[..n - 1] != text_only[..n - 1] {
        return Err("plan or rationale requests differ between modes".into());
    }
    let (h, t) = (&hybrid[n - 1], &text_only[n - 1]);
    let images = |ms: &[ChatMessage]| ms.iter().map(ChatMessage::image_count).sum::<usize>();
    if images(h) != 3 {
        return Err(format!("hybrid answer request carries {} images, want 2 steps + the task image", images(h)));
    }
    if images(t) != 1 {
        return Err(format!("text-only answer request carries {} images, want only the task image", images(t)));
    }
    if without_images(h, true) != *t {
        return Err("text-only answer request is not the hybrid one minus step images".into());
    }
    if (zero.len(), zero_calls, zero_tools) != (1, 1, 0) {
        return Err(format!("zero-shot: {} requests, {zero_calls} gateway calls, {zero_tools} tool calls", zero.len()));
    }
    if images(&zero[0]) != 1 {
        return Err("zero-shot request should carry the task image only".into());
    }
    Ok(())
}
