//! Batch runs over a task list.

use std::path::Path;

use crate::error::BenchError;
use crate::gateway::Gateway;
use crate::model::{FinalAnswer, RationaleMode, Task};
use crate::par;
use crate::pipeline::Pipeline;
use crate::prompts::JudgePrompt;
use crate::trace;

use super::score::{score_multiple_choice, score_open_ended_judged, score_yesno_paired, ScoreReport, TaskResult};
use super::BenchmarkKind;

/// The grader for open-ended benchmarks.
#[derive(Clone, Copy)]
pub struct Judge<'a> {
    pub gateway: &'a Gateway,
    pub prompt: &'a JudgePrompt,
}

pub struct BenchOptions<'a> {
    pub kind: BenchmarkKind,
    pub mode: RationaleMode,
    /// Where per-task traces go; `None` skips writing them.
    pub traces: Option<&'a Path>,
    pub judge: Option<Judge<'a>>,
}

/// Runs every task through the pipeline on the configured worker pool,
/// writes traces, and scores the results. A task whose model calls fail is
/// recorded as unanswered; only configuration and trace I/O problems abort.
pub fn run_benchmark(
    pipeline: &Pipeline,
    tasks: &[Task],
    opts: &BenchOptions<'_>,
) -> Result<(Vec<TaskResult>, ScoreReport), BenchError> {
    if opts.kind == BenchmarkKind::OpenEndedJudged && opts.judge.is_none() {
        return Err(BenchError::Config("open-ended benchmarks need a judge".into()));
    }
    let exec = pipeline.config.exec;
    let results = par::with_workers(exec, pipeline.config.workers, || {
        par::map_slice(exec, tasks, |task| run_one(pipeline, task, opts))
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut report = score(opts.kind, &results, opts.judge, pipeline)?;
    report.metadata.mode = Some(opts.mode);
    report.metadata.model_id = Some(pipeline.gateway.transport_id().to_string());
    report.metadata.fixture_fingerprint = pipeline.fixture_fingerprint.clone();
    Ok((results, report))
}

fn run_one(pipeline: &Pipeline, task: &Task, opts: &BenchOptions<'_>) -> Result<TaskResult, BenchError> {
    let mut result = TaskResult {
        task_id: task.id.clone(),
        question: task.question.clone(),
        category: task.category.clone(),
        gold: task.gold_answer.clone(),
        image_hash: task.image.content_hash(),
        answer: FinalAnswer { text: String::new(), choice: None, mode: opts.mode, fallback: false },
        actions: Vec::new(),
        error: None,
    };
    match pipeline.run_task(task, opts.mode) {
        Ok(run) => {
            if let Some(root) = opts.traces {
                trace::write_trace(root, &run.manifest, &run.images)?;
            }
            result.actions = run.plan.iter().flat_map(|p| p.steps.iter().map(|s| s.action)).collect();
            result.answer = run.answer;
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    Ok(result)
}

/// Dispatches to the scorer for `kind`.
pub fn score(
    kind: BenchmarkKind,
    results: &[TaskResult],
    judge: Option<Judge<'_>>,
    pipeline: &Pipeline,
) -> Result<ScoreReport, BenchError> {
    match kind {
        BenchmarkKind::MultipleChoice => score_multiple_choice(results),
        BenchmarkKind::YesNoPaired => score_yesno_paired(results),
        BenchmarkKind::OpenEndedJudged => {
            let judge = judge.ok_or_else(|| BenchError::Config("no judge configured".into()))?;
            score_open_ended_judged(results, judge.gateway, judge.prompt, &pipeline.config.decode, pipeline.config.exec)
                .map(|(r, _)| r)
        }
    }
}
