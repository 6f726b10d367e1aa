//! The planning stage: prompt the model for a sub-goal plan, parse it, and
//! write a textual rationale for each processed image.
//!
//! Plans are read from the first fenced JSON block holding a list of step
//! objects (`subgoal`, `action`, optional `target`, `index`, `params`). When
//! no such block yields a step, numbered prose lines of the form
//! `N. <subgoal> | <action> | <target>` are accepted instead.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, PlanError};
use crate::gateway::{ChatExchange, ChatMessage, DecodeSettings, Gateway, Part};
use crate::model::{alias_action, Plan, PlanStep, Scalar, Task, VisualRationale};
use crate::prompts::{question_block, PlanPromptTemplate};

pub const DEFAULT_MAX_STEPS: usize = 6;

/// System message with the template, then the question and the image.
pub fn build_plan_prompt(task: &Task, template: &PlanPromptTemplate, max_steps: usize) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(template.system_text(max_steps)),
        ChatMessage::user(vec![Part::Text(question_block(task)), Part::Image(task.image.clone())]),
    ]
}

/// Asks the model for a plan and parses it.
pub fn request_plan(
    gateway: &Gateway,
    task: &Task,
    template: &PlanPromptTemplate,
    settings: &DecodeSettings,
    max_steps: usize,
) -> Result<(Plan, ChatExchange), PlanError> {
    let messages = build_plan_prompt(task, template, max_steps);
    let exchange = gateway.complete(&messages, settings)?;
    let plan = parse_plan(&exchange.response_text, max_steps)?;
    Ok((plan, exchange))
}

#[derive(Debug, Deserialize)]
struct RawStep {
    #[serde(default)]
    index: Option<u32>,
    subgoal: String,
    action: String,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Scalar>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPlan {
    List(Vec<RawStep>),
    Steps { steps: Vec<RawStep> },
    Plan { plan: Vec<RawStep> },
}

impl RawPlan {
    fn into_steps(self) -> Vec<RawStep> {
        match self {
            RawPlan::List(s) | RawPlan::Steps { steps: s } | RawPlan::Plan { plan: s } => s,
        }
    }
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*[ \t]*\r?\n(.*?)```").unwrap())
}

fn prose_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*(?:[-*]\s+)?(?:\*\*)?(?:step\s*)?(\d+)\s*(?:\*\*)?\s*[.):]\s*(?:\*\*)?\s*(.+?)\s*$")
            .unwrap()
    })
}

/// Parses model output into a plan of at most `max_steps` steps.
pub fn parse_plan(model_text: &str, max_steps: usize) -> Result<Plan, PlanError> {
    let mut warnings = Vec::new();
    let mut steps = structured_steps(model_text, &mut warnings);
    if steps.is_empty() {
        steps = prose_steps(model_text, &mut warnings);
    }
    if steps.is_empty() {
        let mut reason = "no valid plan steps found".to_string();
        if !warnings.is_empty() {
            reason.push_str(&format!(" ({})", warnings.join("; ")));
        }
        return Err(PlanError::Parse(reason));
    }
    if steps.windows(2).any(|w| w[1].index <= w[0].index) || steps[0].index == 0 {
        warnings.push("step indices were not strictly increasing; renumbered".to_string());
        for (i, s) in steps.iter_mut().enumerate() {
            s.index = i as u32 + 1;
        }
    }
    if steps.len() > max_steps {
        warnings.push(format!("plan had {} steps; kept the first {max_steps}", steps.len()));
        steps.truncate(max_steps);
    }
    Ok(Plan { steps, raw_model_text: model_text.to_string(), warnings })
}

fn structured_steps(text: &str, warnings: &mut Vec<String>) -> Vec<PlanStep> {
    let mut candidates: Vec<&str> =
        fence_re().captures_iter(text).map(|c| c.get(1).map_or("", |m| m.as_str())).collect();
    let trimmed = text.trim();
    if candidates.is_empty() && (trimmed.starts_with('[') || trimmed.starts_with('{')) {
        candidates.push(trimmed);
    }
    for block in candidates {
        let Ok(raw) = serde_json::from_str::<RawPlan>(block) else {
            continue;
        };
        let mut steps = Vec::new();
        for (pos, r) in raw.into_steps().into_iter().enumerate() {
            let index = r.index.unwrap_or(pos as u32 + 1);
            match resolve(index, r.subgoal, &r.action, r.target, r.params) {
                Ok(step) => steps.push(step),
                Err(w) => warnings.push(format!("block entry {}: {w}", pos + 1)),
            }
        }
        if !steps.is_empty() {
            return steps;
        }
    }
    Vec::new()
}

fn prose_steps(text: &str, warnings: &mut Vec<String>) -> Vec<PlanStep> {
    let mut steps = Vec::new();
    for line in text.lines() {
        let Some(c) = prose_re().captures(line) else {
            continue;
        };
        let rest = c[2].trim_end_matches("**");
        let fields: Vec<&str> = rest.split('|').map(clean_field).collect();
        if fields.len() < 2 {
            continue;
        }
        let index: u32 = c[1].parse().unwrap_or(0);
        let subgoal = strip_label(fields[0], &["sub-goal", "subgoal", "goal"]).to_string();
        let action = strip_label(fields[1], &["action", "operation", "tool"]);
        let target = fields
            .get(2)
            .map(|t| strip_label(t, &["target", "object"]))
            .filter(|t| !t.is_empty() && !matches!(t.to_lowercase().as_str(), "none" | "-" | "n/a"))
            .map(str::to_string);
        match resolve(index, subgoal, action, target, BTreeMap::new()) {
            Ok(step) => steps.push(step),
            Err(w) => warnings.push(format!("line {:?}: {w}", line.trim())),
        }
    }
    steps
}

fn clean_field(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '*' || c == '`' || c == '"').trim()
}

fn strip_label<'a>(field: &'a str, labels: &[&str]) -> &'a str {
    let lower = field.to_lowercase();
    for label in labels {
        if lower.starts_with(label) {
            let rest = &field[label.len()..];
            if let Some(r) = rest.trim_start().strip_prefix(':') {
                return clean_field(r);
            }
        }
    }
    field
}

fn resolve(
    index: u32,
    subgoal: String,
    action: &str,
    target: Option<String>,
    params: BTreeMap<String, Scalar>,
) -> Result<PlanStep, String> {
    let action = alias_action(action).map_err(|e| e.to_string())?;
    let step = PlanStep { index, subgoal, action, target, params };
    if step.subgoal.trim().is_empty() {
        return Err("empty sub-goal".to_string());
    }
    if action.requires_target() && step.target_phrase().is_none() {
        return Err(format!("{action} needs a target"));
    }
    Ok(step)
}

#[derive(Serialize)]
struct RenderStep<'a> {
    index: u32,
    subgoal: &'a str,
    action: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<&'a str>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    params: &'a BTreeMap<String, Scalar>,
}

/// Renders steps in the fenced format that [`parse_plan`] reads first.
pub fn render_plan(steps: &[PlanStep]) -> String {
    let rows: Vec<RenderStep> = steps
        .iter()
        .map(|s| RenderStep {
            index: s.index,
            subgoal: &s.subgoal,
            action: s.action.as_str(),
            target: s.target.as_deref(),
            params: &s.params,
        })
        .collect();
    let json = serde_json::to_string_pretty(&rows).expect("plan rendering is infallible");
    // Backticks only occur inside JSON strings, so escaping them keeps the
    // fence intact without changing the decoded text.
    format!("```json\n{}\n```", json.replace('`', "\\u0060"))
}

/// Asks the model to explain what the step's processed image shows. A step
/// without a visual is explained from the original image plus a note.
pub fn generate_textual_rationale(
    gateway: &Gateway,
    task: &Task,
    step: &PlanStep,
    visual: Option<&VisualRationale>,
    failure: Option<&str>,
    system: &str,
    settings: &DecodeSettings,
) -> Result<ChatExchange, GatewayError> {
    gateway.complete(&rationale_messages(task, step, visual, failure, system), settings)
}

pub fn rationale_messages(
    task: &Task,
    step: &PlanStep,
    visual: Option<&VisualRationale>,
    failure: Option<&str>,
    system: &str,
) -> Vec<ChatMessage> {
    let mut text = format!("Question: {}\nSub-goal {}: {}", task.question, step.index, step.subgoal);
    let image = match visual {
        Some(v) => {
            text.push_str(&format!("\nOperation: {} ({})", step.action, v.caption));
            v.image.clone()
        }
        None => {
            text.push_str(&format!(
                "\nNote: the {} operation failed ({}); the original image is shown instead.",
                step.action,
                failure.unwrap_or("no output")
            ));
            task.image.clone()
        }
    };
    vec![ChatMessage::system(system), ChatMessage::user(vec![Part::Text(text), Part::Image(image)])]
}
