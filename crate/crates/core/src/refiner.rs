//! The answering stage: feed the rationale series back with the question
//! and read off the final answer.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::gateway::{ChatExchange, ChatMessage, DecodeSettings, Gateway, Part};
use crate::model::{AnswerOption, FinalAnswer, RationaleMode, RationaleSeries, Task};
use crate::prompts::question_block;

/// Builds the answering request. Each step contributes its sub-goal and
/// textual rationale, then (in hybrid mode) its processed image; the
/// question and original image come last.
///
/// `max_images` caps the image parts in the request, counting the original;
/// the oldest step images are dropped first.
pub fn build_refine_prompt(
    task: &Task,
    series: &RationaleSeries,
    mode: RationaleMode,
    system: &str,
    max_images: Option<usize>,
) -> Vec<ChatMessage> {
    let visuals: Vec<usize> = match mode {
        RationaleMode::Hybrid => {
            series.items.iter().enumerate().filter(|(_, it)| it.visual.is_some()).map(|(i, _)| i).collect()
        }
        _ => Vec::new(),
    };
    let budget = max_images.map_or(usize::MAX, |m| m.saturating_sub(1));
    let skip = visuals.len().saturating_sub(budget);
    let kept = &visuals[skip..];

    let mut parts = Vec::with_capacity(series.len() * 2 + 2);
    for (i, item) in series.items.iter().enumerate() {
        parts.push(Part::Text(format!("Step {}: {}\nRationale: {}", item.step.index, item.step.subgoal, item.textual)));
        if kept.contains(&i) {
            if let Some(v) = &item.visual {
                parts.push(Part::Image(v.image.clone()));
            }
        }
    }
    parts.push(Part::Text(question_block(task)));
    parts.push(Part::Image(task.image.clone()));
    vec![ChatMessage::system(system), ChatMessage::user(parts)]
}

/// The question and image alone, for answering without rationales.
pub fn build_zero_shot_prompt(task: &Task, system: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(system),
        ChatMessage::user(vec![Part::Text(question_block(task)), Part::Image(task.image.clone())]),
    ]
}

/// Sends `messages` and wraps the reply as the final answer.
pub fn answer(
    gateway: &Gateway,
    task: &Task,
    messages: &[ChatMessage],
    mode: RationaleMode,
    settings: &DecodeSettings,
) -> Result<(FinalAnswer, ChatExchange), GatewayError> {
    let exchange = gateway.complete(messages, settings)?;
    let choice = if task.options.is_empty() { None } else { extract_choice(&exchange.response_text, &task.options) };
    let fa = FinalAnswer { text: exchange.response_text.clone(), choice, mode, fallback: false };
    Ok((fa, exchange))
}

fn answer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\banswer\s*:\s*[*_]*\(?([A-Za-z])\)?").unwrap())
}

/// Picks the option the answer text names, trying in order: an
/// `Answer: <L>` marker, the first standalone option letter, and the
/// option whose full text appears earliest in the answer.
pub fn extract_choice(answer_text: &str, options: &[AnswerOption]) -> Option<String> {
    let is_label = |l: &str| options.iter().any(|o| o.label == l);

    for c in answer_re().captures_iter(answer_text) {
        let m = c.get(1).expect("group 1 always participates");
        let next = answer_text[m.end()..].chars().next();
        if next.is_some_and(char::is_alphanumeric) {
            continue;
        }
        let label = m.as_str().to_uppercase();
        if is_label(&label) {
            return Some(label);
        }
    }

    let chars: Vec<(usize, char)> = answer_text.char_indices().collect();
    for (k, &(i, ch)) in chars.iter().enumerate() {
        if !ch.is_ascii_uppercase() {
            continue;
        }
        let standalone =
            |c: Option<&(usize, char)>| c.is_none_or(|&(_, c)| !c.is_alphanumeric() && c != '\'' && c != '’');
        let prev = if k == 0 { None } else { chars.get(k - 1) };
        if standalone(prev) && standalone(chars.get(k + 1)) {
            let label = &answer_text[i..i + 1];
            if is_label(label) {
                return Some(label.to_string());
            }
        }
    }

    let lower = answer_text.to_lowercase();
    options
        .iter()
        .filter(|o| !o.text.trim().is_empty())
        .filter_map(|o| lower.find(&o.text.trim().to_lowercase()).map(|pos| (pos, o)))
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.text.len().cmp(&a.1.text.len())))
        .map(|(_, o)| o.label.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YesNo {
    Yes,
    No,
    Unknown,
}

/// Reads a yes/no verdict: the leading word decides, otherwise whichever of
/// "yes" and "no" appears alone as a word.
pub fn normalize_yesno(answer_text: &str) -> YesNo {
    let cleaned: String = answer_text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    match words.first() {
        Some(&"yes") => return YesNo::Yes,
        Some(&"no") => return YesNo::No,
        _ => {}
    }
    match (words.contains(&"yes"), words.contains(&"no")) {
        (true, false) => YesNo::Yes,
        (false, true) => YesNo::No,
        _ => YesNo::Unknown,
    }
}
