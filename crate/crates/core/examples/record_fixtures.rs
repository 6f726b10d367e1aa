//! Regenerates the bundled fixture benchmark under `fixtures/`.
//!
//! Writes the three benchmark TSVs, the `ask` scene image, and the model
//! replies for every request the pipeline makes over them (all three
//! rationale modes, plus judge calls). Replies come from a scripted
//! stand-in model and are stored through the record transport, so the
//! replay transport answers the same runs byte for byte.
//!
//! Run with `cargo run -p imgthought-core --example record_fixtures`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use imgthought::bench::{self, BenchOptions, BenchmarkKind, Judge};
use imgthought::error::GatewayError;
use imgthought::gateway::{ChatMessage, DecodeSettings, Gateway, Part, RecordTransport, ScriptedTransport};
use imgthought::imageio;
use imgthought::model::{ImageData, RationaleMode, Task};
use imgthought::pipeline::{Pipeline, PipelineConfig};
use imgthought::prompts::{JudgePrompt, PromptSet};
use imgthought::tools::StubTool;

struct Scenario {
    question: &'static str,
    plan: &'static str,
    hybrid: &'static str,
    text_only: &'static str,
    zero_shot: &'static str,
    observations: &'static [&'static str],
}

const SCENARIOS: &[Scenario] = &[
    Scenario {
        question: "Where is the red car located in the image?",
        plan: "The car has to be found first, then placed in a quadrant.\n```json\n[\n  {\"subgoal\": \"locate the red car\", \"action\": \"object detection\", \"target\": \"red car\"},\n  {\"subgoal\": \"determine which quadrant the car falls in\", \"action\": \"spatial ruler\"}\n]\n```\n",
        hybrid: "The detection box and the quadrant axes both put the red car in Q1.\nAnswer: A",
        text_only: "Both rationales point to the upper left.\nAnswer: A",
        zero_shot: "The car appears near the top of the picture. Answer: B",
        observations: &["a box around a red shape", "the red shape sits in Q1"],
    },
    Scenario {
        question: "What color is the largest vehicle?",
        plan: "```json\n{\"steps\": [\n  {\"subgoal\": \"find all vehicles\", \"action\": \"dense_object_detection\"},\n  {\"subgoal\": \"zoom in on the largest vehicle\", \"action\": \"zoom_in\", \"target\": \"largest vehicle\"},\n  {\"subgoal\": \"compare brightness of the vehicles\", \"action\": \"grayscale\"}\n]}\n```",
        hybrid: "The zoomed crop shows a long yellow body.\nAnswer: B",
        text_only: "The rationales mention a bright vehicle, probably red.\nAnswer: A",
        zero_shot: "It looks red. Answer: A",
        observations: &["two boxed objects", "a long yellow body", "the largest vehicle is the brightest"],
    },
    Scenario {
        question: "Is there a bus in this image? Please answer yes or no.",
        plan: "```json\n[{\"subgoal\": \"look for a bus\", \"action\": \"referring_object_detection\", \"target\": \"bus\"}]\n```",
        hybrid: "Yes, a bus is visible in the boxed region.",
        text_only: "Yes.",
        zero_shot: "Yes",
        observations: &["a yellow bus inside the box"],
    },
    Scenario {
        question: "Is there a bicycle in this image? Please answer yes or no.",
        plan: "Plan:\n1. segment any bicycle | segmentation | bicycle\n2. check the outlines for wheels | edge detection | none\n",
        hybrid: "No, there is no bicycle.",
        text_only: "No.",
        zero_shot: "Yes, I think so.",
        observations: &["the washed region holds only road", "no round outlines"],
    },
    Scenario {
        question: "What objects are on the table?",
        plan: "```json\n[\n  {\"subgoal\": \"find the objects on the table\", \"action\": \"dense object detection\"},\n  {\"subgoal\": \"trace the object outlines\", \"action\": \"edge_detection\"}\n]\n```",
        hybrid: "There is a cup and a book on the table.",
        text_only: "A cup.",
        zero_shot: "Some items.",
        observations: &["two objects on a brown surface", "a round outline and a rectangular outline"],
    },
    Scenario {
        question: "How many squares are to the left of the vertical line?",
        plan: "```json\n[\n  {\"subgoal\": \"split the image at the centre\", \"action\": \"spatial_ruler\"},\n  {\"subgoal\": \"count squares in the left half\", \"action\": \"zoom_in\", \"target\": \"left half\", \"params\": {\"x0\": 0.0, \"y0\": 0.0, \"x1\": 0.5, \"y1\": 1.0}}\n]\n```",
        hybrid: "2",
        text_only: "3",
        zero_shot: "3",
        observations: &["the axes split the image into quadrants", "two squares in the left half"],
    },
    Scenario {
        question: "Which quadrant contains the red square?",
        plan: "```json\n[\n  {\"subgoal\": \"draw the quadrant axes\", \"action\": \"spatial ruler\"},\n  {\"subgoal\": \"locate the red square\", \"action\": \"object detection\", \"target\": \"red square\"}\n]\n```",
        hybrid: "The red square lies below and right of both axes.\nAnswer: C",
        text_only: "Answer: C",
        zero_shot: "Answer: A",
        observations: &["the axes split the image", "a box around a red square in Q3"],
    },
    Scenario {
        question: "Describe the mood of this picture.",
        plan: "I would simply look at the picture carefully and describe what I feel.",
        hybrid: "",
        text_only: "",
        zero_shot: "The scene feels calm and orderly.",
        observations: &[],
    },
];

fn scenario_for(text: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| text.contains(&format!("Question: {}", s.question)))
}

fn user_text(messages: &[ChatMessage]) -> String {
    messages.iter().skip(1).map(ChatMessage::text).collect::<Vec<_>>().join("\n")
}

fn normalized(s: &str) -> String {
    s.to_lowercase().chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect::<String>().trim().to_string()
}

fn field<'a>(text: &'a str, label: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(label)).unwrap_or("").trim()
}

/// The scripted stand-in for a multimodal model.
fn fixture_model(messages: &[ChatMessage], _settings: &DecodeSettings) -> Result<String, GatewayError> {
    let system = messages[0].text();
    let user = user_text(messages);

    if system.starts_with("You grade answers") {
        let gold = normalized(field(&user, "Ground truth:"));
        let pred = normalized(field(&user, "Prediction:"));
        let score = if pred == gold {
            "1.0"
        } else if !gold.is_empty() && pred.contains(&gold) {
            "0.5"
        } else {
            "0.0"
        };
        return Ok(score.to_string());
    }

    let s =
        scenario_for(&user).ok_or_else(|| GatewayError::InvalidRequest(format!("no scenario for request: {user}")))?;
    if system.contains("Decompose the question") {
        return Ok(s.plan.to_string());
    }
    if system.starts_with("You are examining one step") {
        let n: usize = user
            .lines()
            .find_map(|l| l.strip_prefix("Sub-goal "))
            .and_then(|l| l.split(':').next())
            .and_then(|n| n.parse().ok())
            .unwrap_or(1);
        let image = messages[1].parts.iter().find_map(|p| match p {
            Part::Image(i) => Some(i.content_hash()),
            _ => None,
        });
        let seen = s.observations.get(n - 1).copied().unwrap_or("nothing specific");
        return Ok(format!(
            "The processed view for sub-goal {n} shows {seen}. [view {}]",
            &image.unwrap_or_default()[..8]
        ));
    }
    if system.contains("series of reasoning steps") {
        let images = messages[1].image_count();
        return Ok(if images > 1 { s.hybrid } else { s.text_only }.to_string());
    }
    Ok(s.zero_shot.to_string())
}

fn rect(img: &mut ImageData, x0: u32, y0: u32, x1: u32, y1: u32, rgb: [u8; 3]) {
    for y in y0..y1 {
        for x in x0..x1 {
            img.set_rgb(x, y, rgb);
        }
    }
}

fn street() -> ImageData {
    let mut img = ImageData::filled(96, 64, [128, 128, 128]);
    rect(&mut img, 0, 40, 96, 64, [60, 60, 60]);
    rect(&mut img, 8, 8, 28, 20, [220, 30, 30]);
    rect(&mut img, 52, 36, 90, 56, [240, 200, 20]);
    img
}

fn parking() -> ImageData {
    let mut img = ImageData::filled(80, 80, [90, 110, 90]);
    rect(&mut img, 6, 6, 30, 20, [200, 40, 40]);
    rect(&mut img, 20, 34, 74, 58, [245, 210, 30]);
    rect(&mut img, 60, 8, 74, 20, [40, 160, 60]);
    img
}

fn road() -> ImageData {
    let mut img = ImageData::filled(72, 48, [150, 190, 230]);
    rect(&mut img, 0, 30, 72, 48, [70, 70, 70]);
    rect(&mut img, 18, 14, 54, 34, [240, 200, 20]);
    rect(&mut img, 22, 18, 30, 24, [180, 220, 240]);
    img
}

fn table() -> ImageData {
    let mut img = ImageData::filled(64, 64, [235, 235, 225]);
    rect(&mut img, 0, 36, 64, 64, [120, 80, 40]);
    rect(&mut img, 10, 22, 22, 36, [250, 250, 250]);
    rect(&mut img, 34, 28, 56, 36, [30, 60, 160]);
    img
}

fn squares() -> ImageData {
    let mut img = ImageData::filled(64, 48, [255, 255, 255]);
    rect(&mut img, 31, 0, 33, 48, [0, 0, 0]);
    rect(&mut img, 6, 6, 16, 16, [40, 40, 200]);
    rect(&mut img, 12, 28, 22, 38, [40, 40, 200]);
    rect(&mut img, 44, 18, 54, 28, [40, 40, 200]);
    img
}

fn ask_scene() -> ImageData {
    let mut img = ImageData::filled(60, 60, [245, 245, 245]);
    rect(&mut img, 38, 38, 52, 52, [210, 20, 20]);
    rect(&mut img, 6, 8, 18, 20, [20, 20, 210]);
    img
}

fn task(id: &str, q: usize, image: ImageData, category: &str, gold: &str) -> Task {
    let mut t = Task::new(id, SCENARIOS[q].question, image);
    t.category = Some(category.to_string());
    t.gold_answer = Some(gold.to_string());
    t
}

fn datasets() -> Vec<(BenchmarkKind, Vec<Task>)> {
    vec![
        (
            BenchmarkKind::MultipleChoice,
            vec![
                task("mc-1", 0, street(), "object localization", "A").with_options([
                    "top-left",
                    "top-right",
                    "bottom-left",
                    "bottom-right",
                ]),
                task("mc-2", 1, parking(), "attribute recognition", "B")
                    .with_options(["red", "yellow", "green", "blue"]),
            ],
        ),
        (
            BenchmarkKind::YesNoPaired,
            vec![task("yn-1", 2, road(), "existence", "Yes"), task("yn-2", 3, road(), "existence", "No")],
        ),
        (
            BenchmarkKind::OpenEndedJudged,
            vec![
                task("oe-1", 4, table(), "Recognition", "a cup and a book"),
                task("oe-2", 5, squares(), "Spatial Awareness,Math", "2"),
            ],
        ),
    ]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let model_dir = root.join("model");
    let bench_dir = root.join("bench");
    let ask_dir = root.join("ask");
    if model_dir.exists() {
        fs::remove_dir_all(&model_dir)?;
    }
    for d in [&model_dir, &bench_dir, &ask_dir] {
        fs::create_dir_all(d)?;
    }

    let scripted = ScriptedTransport::new("fixture-model", fixture_model);
    let gateway = Gateway::new(RecordTransport::new(scripted, &model_dir)?);
    let judge_prompt = JudgePrompt::builtin();
    let config = PipelineConfig::default();
    let traces = tempfile::tempdir()?;

    for (kind, tasks) in datasets() {
        let path = bench_dir.join(format!("{kind}.tsv"));
        bench::write_tasks(kind, &tasks, fs::File::create(&path)?)?;
        let tasks = bench::load_tasks(kind, &path)?;
        let pipeline = Pipeline::new(gateway.clone(), Arc::new(StubTool), PromptSet::builtin(kind), config.clone());
        for mode in [RationaleMode::Hybrid, RationaleMode::TextOnly, RationaleMode::ZeroShot] {
            let opts = BenchOptions {
                kind,
                mode,
                traces: Some(traces.path()),
                judge: Some(Judge { gateway: &gateway, prompt: &judge_prompt }),
            };
            let (_, report) = bench::run_benchmark(&pipeline, &tasks, &opts)?;
            println!("{kind} {mode}: aggregate {} failures {}", report.aggregate, report.metadata.failures);
            assert_eq!(report.metadata.failures, 0);
        }
    }

    let scene = ask_dir.join("scene.png");
    fs::write(&scene, imageio::encode_png(&ask_scene()))?;
    let image = imageio::read(&scene)?;
    let ask_mc = Task::new("scene", SCENARIOS[6].question, image.clone()).with_options(["Q1", "Q2", "Q3", "Q4"]);
    let ask_open = Task::new("scene", SCENARIOS[7].question, image);
    for (kind, t) in [(BenchmarkKind::MultipleChoice, ask_mc), (BenchmarkKind::OpenEndedJudged, ask_open)] {
        let pipeline = Pipeline::new(gateway.clone(), Arc::new(StubTool), PromptSet::builtin(kind), config.clone());
        let run = pipeline.run_task(&t, RationaleMode::Hybrid)?;
        println!("ask {:?}: {:?} fallback={}", t.question, run.answer.choice, run.answer.fallback);
    }
    println!("{} model calls recorded into {}", gateway.calls(), model_dir.display());
    Ok(())
}
