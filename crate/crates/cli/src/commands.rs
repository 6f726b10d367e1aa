use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use imgthought::bench::{self, BenchOptions, BenchmarkKind, Judge, ReportFormat};
use imgthought::imageio;
use imgthought::model::Task;
use imgthought::pipeline::Pipeline;
use imgthought::prompts::{JudgePrompt, PromptSet};
use imgthought::trace::{self, TraceManifest};

use crate::config::{CliConfig, Overrides};
use crate::{Command, EXIT_FALLBACK};

pub fn dispatch(flags: &Overrides, config: Option<&Path>, command: Command) -> Result<u8> {
    let cfg = CliConfig::resolve(flags, config)?;
    match command {
        Command::Ask { image, question, options } => ask(&cfg, &image, &question, &options),
        Command::Bench { dataset } => run_bench(&cfg, &dataset),
        Command::Trace { task_id, traces, export_html } => {
            show_trace(&cfg, &task_id, traces.as_deref(), export_html.as_deref())
        }
        Command::Stats { traces, format } => stats(&cfg, traces.as_deref(), &format),
    }
}

fn pipeline(cfg: &CliConfig, kind: BenchmarkKind) -> Result<Pipeline> {
    Ok(Pipeline::new(cfg.gateway()?, cfg.tools()?, PromptSet::builtin(kind), cfg.pipeline.clone())
        .with_fixture_fingerprint(cfg.fixture_fingerprint()))
}

fn ask(cfg: &CliConfig, image: &Path, question: &str, options: &[String]) -> Result<u8> {
    let img = imageio::read(image).with_context(|| format!("reading {}", image.display()))?;
    let id = image.file_stem().map_or_else(|| "ask".to_string(), |s| s.to_string_lossy().into_owned());
    let task = Task::new(id, question, img).with_options(options.iter().cloned());
    let kind = cfg.kind.unwrap_or(if task.options.is_empty() {
        BenchmarkKind::OpenEndedJudged
    } else {
        BenchmarkKind::MultipleChoice
    });
    let pipeline = pipeline(cfg, kind)?;
    let (run, path) = pipeline.run_and_write(&task, cfg.mode, &cfg.traces_dir())?;
    let a = &run.answer;
    println!("answer: {}", a.text.trim());
    println!("choice: {}", a.choice.as_deref().unwrap_or("-"));
    println!("fallback: {}", a.fallback);
    println!("trace: {}", path.display());
    Ok(if a.fallback { EXIT_FALLBACK } else { 0 })
}

fn dataset_kind(cfg: &CliConfig, dataset: &Path) -> Result<BenchmarkKind> {
    if let Some(k) = cfg.kind {
        return Ok(k);
    }
    dataset
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| anyhow!("cannot tell the benchmark kind of {}; pass --kind", dataset.display()))
}

fn run_bench(cfg: &CliConfig, dataset: &Path) -> Result<u8> {
    let kind = dataset_kind(cfg, dataset)?;
    let tasks = bench::load_tasks(kind, dataset).with_context(|| format!("loading {}", dataset.display()))?;
    let pipeline = pipeline(cfg, kind)?;
    let judge_prompt = JudgePrompt::builtin();
    let traces = cfg.traces_dir();
    let opts = BenchOptions {
        kind,
        mode: cfg.mode,
        traces: Some(&traces),
        judge: Some(Judge { gateway: &pipeline.gateway, prompt: &judge_prompt }),
    };
    let (_, mut report) = bench::run_benchmark(&pipeline, &tasks, &opts)?;
    if let Some(model) = cfg.model_id() {
        report.metadata.model_id = Some(model);
    }
    for format in ReportFormat::ALL {
        let path = cfg.out.join(format!("report.{}", format.extension()));
        bench::emit_report(&report, format, &path)?;
    }
    println!("{kind} ({}): {} items, aggregate {}", cfg.mode, report.items, report.aggregate);
    println!("fallbacks: {}, failures: {}", report.metadata.fallbacks, report.metadata.failures);
    println!("reports: {}", cfg.out.join("report.{json,csv,md}").display());
    Ok(0)
}

fn traces_root(cfg: &CliConfig, traces: Option<&Path>) -> PathBuf {
    traces.map_or_else(|| cfg.traces_dir(), Path::to_path_buf)
}

fn show_trace(cfg: &CliConfig, task_id: &str, traces: Option<&Path>, html: Option<&Path>) -> Result<u8> {
    let root = traces_root(cfg, traces);
    let (manifest, images) = trace::load_trace(&root, task_id)?;
    let dir = root.join(trace::task_dir_name(task_id));
    print!("{}", step_table(&manifest, &dir));
    if let Some(path) = html {
        std::fs::write(path, trace::render_html(&manifest, &images))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("html: {}", path.display());
    }
    Ok(0)
}

fn step_table(m: &TraceManifest, dir: &Path) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "task: {} ({})", m.task.id, m.mode);
    let _ = writeln!(s, "question: {}", m.task.question);
    if let Some(e) = &m.plan_error {
        let _ = writeln!(s, "plan error: {e}");
    }
    let _ = writeln!(s, "{:<4} {:<26} {:<20} {:<9} image", "step", "action", "target", "status");
    for st in &m.steps {
        let status = if st.failure.is_some() {
            "failed"
        } else if st.degraded {
            "degraded"
        } else {
            "ok"
        };
        let image = st.visual_file.as_ref().map_or_else(|| "-".to_string(), |f| dir.join(f).display().to_string());
        let _ = writeln!(
            s,
            "{:<4} {:<26} {:<20} {:<9} {image}",
            st.index,
            st.action.to_string(),
            st.target.as_deref().unwrap_or("-"),
            status
        );
        let _ = writeln!(s, "     sub-goal: {}", st.subgoal);
        let _ = writeln!(s, "     rationale: {}", excerpt(&st.textual_rationale, 100));
    }
    let a = &m.final_answer;
    let _ = writeln!(s, "answer: {}", a.text.trim());
    if let Some(c) = &a.choice {
        let _ = writeln!(s, "choice: {c}");
    }
    let _ = writeln!(s, "fallback: {}", a.fallback);
    s
}

fn excerpt(text: &str, max: usize) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    match flat.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &flat[..i]),
        None => flat,
    }
}

fn stats(cfg: &CliConfig, traces: Option<&Path>, format: &str) -> Result<u8> {
    let format: ReportFormat = format.parse().map_err(|e: String| anyhow!(e))?;
    let root = traces_root(cfg, traces);
    let (counts, n) = bench::collect_action_stats(&root)?;
    if n == 0 {
        bail!("no traces under {}", root.display());
    }
    print!("{}", bench::render_action_stats(&counts, format));
    Ok(0)
}
