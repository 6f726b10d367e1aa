//! Locations of the bundled fixtures and helpers around them.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use imgthought::bench::{self, BenchOptions, BenchmarkKind, Judge, ScoreReport};
use imgthought::error::GatewayError;
use imgthought::gateway::{
    fixture_dir_fingerprint, ChatMessage, ChatRequest, ChatTransport, DecodeSettings, Gateway, ReplayTransport,
    ScriptedTransport, TransportReply,
};
use imgthought::model::{ImageData, RationaleMode, Task};
use imgthought::pipeline::{Pipeline, PipelineConfig};
use imgthought::prompts::{JudgePrompt, PromptSet};
use imgthought::tools::{StubTool, ToolClient};

/// The core crate's `fixtures/` directory, from either crate's tests.
pub fn root() -> PathBuf {
    let here = Path::new(env!("CARGO_MANIFEST_DIR"));
    let own = here.join("fixtures");
    if own.join("model").is_dir() {
        own
    } else {
        here.join("../core/fixtures")
    }
}

pub fn model_dir() -> PathBuf {
    root().join("model")
}

pub fn bench_file(kind: BenchmarkKind) -> PathBuf {
    root().join("bench").join(format!("{}.tsv", kind.as_str()))
}

pub const KINDS: [BenchmarkKind; 3] =
    [BenchmarkKind::MultipleChoice, BenchmarkKind::YesNoPaired, BenchmarkKind::OpenEndedJudged];

pub fn replay_gateway() -> Gateway {
    Gateway::new(ReplayTransport::new(model_dir()).expect("fixture directory exists"))
}

pub fn replay_pipeline(kind: BenchmarkKind, tools: Arc<dyn ToolClient>) -> Pipeline {
    Pipeline::new(replay_gateway(), tools, PromptSet::builtin(kind), PipelineConfig::default())
        .with_fixture_fingerprint(fixture_dir_fingerprint(&model_dir()).ok())
}

/// Runs one bundled benchmark under replay with the stub tool, writing
/// traces under `traces`.
pub fn run_fixture_bench(kind: BenchmarkKind, mode: RationaleMode, traces: &Path) -> ScoreReport {
    let pipeline = replay_pipeline(kind, Arc::new(StubTool));
    let tasks = bench::load_tasks(kind, &bench_file(kind)).expect("fixture dataset loads");
    let judge_prompt = JudgePrompt::builtin();
    let opts = BenchOptions {
        kind,
        mode,
        traces: Some(traces),
        judge: Some(Judge { gateway: &pipeline.gateway, prompt: &judge_prompt }),
    };
    bench::run_benchmark(&pipeline, &tasks, &opts).expect("fixture benchmark runs").1
}

/// A model stand-in for tests that need a full run without fixtures: the
/// plan request gets `plan`, the answer request gets `Answer: A`, and each
/// rationale request gets a sentence naming its sub-goal.
pub fn scripted_model(kind: BenchmarkKind, plan: &str) -> ScriptedTransport {
    let prompts = PromptSet::builtin(kind);
    let plan_system = prompts.plan.system_text(PipelineConfig::default().max_steps);
    let plan = plan.to_string();
    ScriptedTransport::new("scripted", move |messages: &[ChatMessage], _: &DecodeSettings| {
        let system = messages[0].text();
        let user = messages.last().map(ChatMessage::text).unwrap_or_default();
        Ok(if system == plan_system {
            plan.clone()
        } else if system == prompts.rationale_system {
            let goal = user.lines().find(|l| l.starts_with("Sub-goal")).unwrap_or("the step");
            format!("The view for {goal} looks as expected.")
        } else {
            "The first option fits.\nAnswer: A".to_string()
        })
    })
}

pub const TWO_STEP_PLAN: &str = "```json\n[{\"subgoal\": \"find the square\", \"action\": \"object detection\", \"target\": \"square\"},\n {\"subgoal\": \"split into quadrants\", \"action\": \"spatial ruler\"}]\n```";

/// Records every request that passes through it.
pub struct Capture<T> {
    inner: T,
    pub log: Arc<Mutex<Vec<Vec<ChatMessage>>>>,
}

impl<T> Capture<T> {
    pub fn new(inner: T) -> (Self, Arc<Mutex<Vec<Vec<ChatMessage>>>>) {
        let log = Arc::new(Mutex::new(Vec::new()));
        (Self { inner, log: log.clone() }, log)
    }
}

impl<T: ChatTransport> ChatTransport for Capture<T> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn send(&self, request: ChatRequest<'_>) -> Result<TransportReply, GatewayError> {
        self.log.lock().unwrap().push(request.messages.to_vec());
        self.inner.send(request)
    }
}

pub fn quadrant_task() -> Task {
    let mut image = ImageData::filled(32, 24, [240, 240, 240]);
    for y in 14..20 {
        for x in 4..10 {
            image.set_rgb(x, y, [200, 20, 20]);
        }
    }
    Task::new("quadrant", "Which quadrant holds the red square?", image).with_options([
        "bottom-left",
        "top-left",
        "top-right",
        "bottom-right",
    ])
}
