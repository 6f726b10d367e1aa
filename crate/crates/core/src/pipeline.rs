//! One question end to end: plan, act, explain, answer.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{self, ActionConfig};
use crate::error::GatewayError;
use crate::gateway::{ChatExchange, DecodeSettings, Gateway};
use crate::model::{FinalAnswer, ImageData, Plan, RationaleMode, RationaleSeries, Task};
use crate::par::Exec;
use crate::planner::{self, DEFAULT_MAX_STEPS};
use crate::prompts::PromptSet;
use crate::refiner;
use crate::tools::ToolClient;
use crate::trace::{
    self, assemble_series, step_file, ExchangeRecord, ImageMeta, StepOutcome, StepRecord, TaskSnapshot, TraceManifest,
    SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_steps: usize,
    pub decode: DecodeSettings,
    pub actions: ActionConfig,
    /// Cap on image parts in the answering request, original included.
    pub max_images_per_request: Option<usize>,
    /// Concurrent tasks in a benchmark run.
    pub workers: usize,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            decode: DecodeSettings::default(),
            actions: ActionConfig::default(),
            max_images_per_request: None,
            workers: 4,
            exec: Exec::default(),
        }
    }
}

/// Everything one task run produced.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub plan: Option<Plan>,
    pub series: RationaleSeries,
    pub answer: FinalAnswer,
    pub manifest: TraceManifest,
    /// Step images by step index.
    pub images: BTreeMap<u32, ImageData>,
}

pub struct Pipeline {
    pub gateway: Gateway,
    pub tools: Arc<dyn ToolClient>,
    pub prompts: PromptSet,
    pub config: PipelineConfig,
    pub tool_versions: BTreeMap<String, String>,
    pub fixture_fingerprint: Option<String>,
}

impl Pipeline {
    /// Builds a pipeline, asking the tool client for its version once.
    pub fn new(gateway: Gateway, tools: Arc<dyn ToolClient>, prompts: PromptSet, config: PipelineConfig) -> Self {
        let version = match tools.health() {
            Ok(h) => h.version,
            Err(e) => format!("unavailable ({})", e.kind()),
        };
        let tool_versions = BTreeMap::from([("vision_tool".to_string(), version)]);
        Self { gateway, tools, prompts, config, tool_versions, fixture_fingerprint: None }
    }

    pub fn with_fixture_fingerprint(mut self, fp: Option<String>) -> Self {
        self.fixture_fingerprint = fp;
        self
    }

    fn action_config(&self) -> ActionConfig {
        ActionConfig { exec: self.config.exec, ..self.config.actions.clone() }
    }

    /// Runs one task. Plans that cannot be parsed fall back to a zero-shot
    /// answer with `fallback` set; model transport errors are returned.
    pub fn run_task(&self, task: &Task, mode: RationaleMode) -> Result<TaskRun, GatewayError> {
        let settings = &self.config.decode;
        let mut log = Vec::new();

        if mode == RationaleMode::ZeroShot {
            let (answer, ex) = self.zero_shot(task, mode)?;
            log.push(record("zero_shot", &ex));
            return Ok(self.finish(task, mode, None, None, Vec::new(), RationaleSeries::default(), answer, log));
        }

        let messages = planner::build_plan_prompt(task, &self.prompts.plan, self.config.max_steps);
        let ex = self.gateway.complete(&messages, settings)?;
        log.push(record("plan", &ex));
        let plan = match planner::parse_plan(&ex.response_text, self.config.max_steps) {
            Ok(plan) => plan,
            Err(e) => {
                let (mut answer, ex) = self.zero_shot(task, mode)?;
                answer.fallback = true;
                log.push(record("zero_shot", &ex));
                let series = RationaleSeries::default();
                return Ok(self.finish(task, mode, None, Some(e.to_string()), Vec::new(), series, answer, log));
            }
        };

        let config = self.action_config();
        let mut outcomes: Vec<StepOutcome> = Vec::with_capacity(plan.steps.len());
        let mut rationales = Vec::with_capacity(plan.steps.len());
        for step in &plan.steps {
            let outcome = actions::execute(step, &task.image, self.tools.as_ref(), &config).map_err(|e| e.to_string());
            let (visual, failure) = match &outcome {
                Ok(o) => (Some(&o.visual), None),
                Err(e) => (None, Some(e.as_str())),
            };
            let ex = planner::generate_textual_rationale(
                &self.gateway,
                task,
                step,
                visual,
                failure,
                &self.prompts.rationale_system,
                settings,
            )?;
            log.push(record(&format!("rationale:{}", step.index), &ex));
            rationales.push(ex.response_text);
            outcomes.push(outcome);
        }
        let series =
            assemble_series(&plan, &outcomes, &rationales).expect("outcomes and rationales are built step by step");

        let messages = refiner::build_refine_prompt(
            task,
            &series,
            mode,
            &self.prompts.refine_system,
            self.config.max_images_per_request,
        );
        let (mut answer, ex) = refiner::answer(&self.gateway, task, &messages, mode, settings)?;
        log.push(record("refine", &ex));
        answer.fallback = !series.is_empty() && series.items.iter().all(|i| i.visual.is_none());
        Ok(self.finish(task, mode, Some(plan), None, outcomes, series, answer, log))
    }

    fn zero_shot(&self, task: &Task, mode: RationaleMode) -> Result<(FinalAnswer, ChatExchange), GatewayError> {
        let messages = refiner::build_zero_shot_prompt(task, &self.prompts.zero_shot_system);
        refiner::answer(&self.gateway, task, &messages, mode, &self.config.decode)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        task: &Task,
        mode: RationaleMode,
        plan: Option<Plan>,
        plan_error: Option<String>,
        outcomes: Vec<StepOutcome>,
        series: RationaleSeries,
        answer: FinalAnswer,
        exchanges: Vec<ExchangeRecord>,
    ) -> TaskRun {
        let mut images = BTreeMap::new();
        let steps = series
            .items
            .iter()
            .zip(&outcomes)
            .map(|(item, outcome)| {
                let ok = outcome.as_ref().ok();
                if let Some(v) = &item.visual {
                    images.insert(item.step.index, v.image.clone());
                }
                StepRecord {
                    index: item.step.index,
                    subgoal: item.step.subgoal.clone(),
                    action: item.step.action,
                    target: item.step.target.clone(),
                    degraded: ok.is_some_and(|o| o.degraded),
                    caption: item.visual.as_ref().map(|v| v.caption.clone()),
                    note: ok.and_then(|o| o.note.clone()),
                    failure: item.failure.clone(),
                    annotations: item.visual.as_ref().and_then(|v| v.annotations.clone()),
                    textual_rationale: item.textual.clone(),
                    visual_file: item.visual.as_ref().map(|_| step_file(item.step.index)),
                    visual: item.visual.as_ref().map(|v| ImageMeta::of(&v.image)),
                }
            })
            .collect();
        let manifest = TraceManifest {
            schema: SCHEMA_VERSION,
            task: TaskSnapshot::of(task),
            mode,
            plan: plan.clone(),
            plan_error,
            steps,
            final_answer: answer.clone(),
            exchanges,
            tool_versions: self.tool_versions.clone(),
            config: self.config_snapshot(),
            fixture_fingerprint: self.fixture_fingerprint.clone(),
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        TaskRun { plan, series, answer, manifest, images }
    }

    fn config_snapshot(&self) -> serde_json::Value {
        let prompts = serde_json::to_vec(&self.prompts).expect("prompts serialize");
        serde_json::json!({
            "pipeline": self.config,
            "prompts_sha256": hex::encode(Sha256::digest(prompts)),
            "model_transport": self.gateway.transport_id(),
        })
    }

    /// Runs a task and writes its trace under `root`.
    pub fn run_and_write(
        &self,
        task: &Task,
        mode: RationaleMode,
        root: &std::path::Path,
    ) -> Result<(TaskRun, std::path::PathBuf), crate::error::BenchError> {
        let run = self.run_task(task, mode)?;
        let path = trace::write_trace(root, &run.manifest, &run.images)?;
        Ok((run, path))
    }
}

fn record(purpose: &str, ex: &ChatExchange) -> ExchangeRecord {
    ExchangeRecord {
        purpose: purpose.to_string(),
        fingerprint: ex.fingerprint.clone(),
        transport: ex.transport_id.clone(),
        attempts: ex.attempts,
    }
}
