//! Prompt text, loaded from editable TOML assets.
//!
//! Each benchmark kind has one prompt set holding the planning template and
//! the system prompts for rationales, refinement and zero-shot answering.
//! Placeholders use `{name}` and are filled in a single pass.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::bench::BenchmarkKind;
use crate::error::BenchError;
use crate::model::Task;

const MULTIPLE_CHOICE: &str = include_str!("../assets/prompts/multiple_choice.toml");
const YES_NO: &str = include_str!("../assets/prompts/yes_no.toml");
const OPEN_ENDED: &str = include_str!("../assets/prompts/open_ended.toml");
const JUDGE: &str = include_str!("../assets/prompts/judge.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPromptTemplate {
    pub preamble: String,
    pub action_catalog: String,
    pub output_format_instructions: String,
}

impl PlanPromptTemplate {
    /// The planning system prompt: preamble, catalog and format
    /// instructions, separated by blank lines.
    pub fn system_text(&self, max_steps: usize) -> String {
        let format = fill(&self.output_format_instructions, &[("max_steps", &max_steps.to_string())]);
        [self.preamble.trim_end(), self.action_catalog.trim_end(), format.trim_end()].join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub plan: PlanPromptTemplate,
    pub rationale_system: String,
    pub refine_system: String,
    pub zero_shot_system: String,
}

impl PromptSet {
    pub fn builtin(kind: BenchmarkKind) -> Self {
        let text = match kind {
            BenchmarkKind::MultipleChoice => MULTIPLE_CHOICE,
            BenchmarkKind::YesNoPaired => YES_NO,
            BenchmarkKind::OpenEndedJudged => OPEN_ENDED,
        };
        Self::from_toml(text).expect("bundled prompt asset parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(format!("prompt set: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }
}

/// Grading prompt for open-ended answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgePrompt {
    pub version: String,
    pub system: String,
    /// Uses `{question}`, `{gold}` and `{prediction}`.
    pub user: String,
}

impl JudgePrompt {
    pub fn builtin() -> Self {
        Self::from_toml(JUDGE).expect("bundled judge asset parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(format!("judge prompt: {e}")))
    }

    pub fn render(&self, question: &str, gold: &str, prediction: &str) -> String {
        fill(&self.user, &[("question", question), ("gold", gold), ("prediction", prediction)])
    }
}

/// Replaces each `{name}` with its value; unknown names are left as is.
/// Substituted text is never rescanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    static PLACEHOLDER: OnceLock<Regex> = OnceLock::new();
    let re = PLACEHOLDER.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").unwrap());
    let map: HashMap<&str, &str> = vars.iter().copied().collect();
    re.replace_all(template, |c: &Captures| match map.get(&c[1]) {
        Some(v) => v.to_string(),
        None => c[0].to_string(),
    })
    .into_owned()
}

/// The question followed by its lettered options, if any.
pub fn question_block(task: &Task) -> String {
    let mut out = format!("Question: {}", task.question);
    if !task.options.is_empty() {
        out.push_str("\nOptions:");
        for o in &task.options {
            out.push_str(&format!("\n{}. {}", o.label, o.text));
        }
    }
    out
}
