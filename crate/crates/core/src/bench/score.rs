//! Scorers. Each is a pure function of the results; result order never
//! changes a score.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::gateway::{ChatMessage, DecodeSettings, Gateway, Part};
use crate::model::{ActionKind, FinalAnswer, RationaleMode};
use crate::par::{self, Exec};
use crate::prompts::JudgePrompt;
use crate::refiner::{normalize_yesno, YesNo};

use super::BenchmarkKind;

pub const UNCATEGORIZED: &str = "uncategorized";

/// The six capability categories of judged open-ended benchmarks.
pub const JUDGED_CATEGORIES: [&str; 6] =
    ["Recognition", "OCR", "Knowledge", "Language Generation", "Spatial Awareness", "Math"];

/// The outcome of one task, as the scorers see it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub question: String,
    pub category: Option<String>,
    pub gold: Option<String>,
    /// Content hash of the task image; pairs yes/no questions.
    pub image_hash: String,
    pub answer: FinalAnswer,
    /// Planned actions, in step order.
    pub actions: Vec<ActionKind>,
    /// Set when the task could not be run at all.
    pub error: Option<String>,
}

impl TaskResult {
    pub fn category(&self) -> &str {
        self.category.as_deref().map(str::trim).filter(|c| !c.is_empty()).unwrap_or(UNCATEGORIZED)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub items: usize,
    /// Accuracy in [0,1], acc + acc_plus in [0,200], or a judged score in
    /// [0,100], depending on the benchmark. Absent when `items` is 0.
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc_plus: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub overall: BTreeMap<ActionKind, usize>,
    pub per_category: BTreeMap<String, BTreeMap<ActionKind, usize>>,
}

impl ActionCounts {
    pub fn add(&mut self, category: &str, action: ActionKind) {
        *self.overall.entry(action).or_default() += 1;
        *self.per_category.entry(category.to_string()).or_default().entry(action).or_default() += 1;
    }

    pub fn from_results(results: &[TaskResult]) -> Self {
        let mut c = Self::default();
        for r in results {
            for a in &r.actions {
                c.add(r.category(), *a);
            }
        }
        c
    }

    /// Overall counts, most used first; ties keep the enumeration order.
    pub fn ranked(&self) -> Vec<(ActionKind, usize)> {
        let mut v: Vec<_> = self.overall.iter().map(|(k, n)| (*k, *n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn total(&self) -> usize {
        self.overall.values().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub mode: Option<RationaleMode>,
    pub model_id: Option<String>,
    pub fixture_fingerprint: Option<String>,
    pub judge_version: Option<String>,
    pub fallbacks: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub kind: BenchmarkKind,
    pub categories: BTreeMap<String, CategoryScore>,
    /// Overall accuracy, the sum of category scores, or the mean judged
    /// score, depending on the benchmark.
    pub aggregate: f64,
    pub items: usize,
    pub action_counts: ActionCounts,
    pub metadata: RunMetadata,
}

impl ScoreReport {
    fn new(kind: BenchmarkKind, results: &[TaskResult]) -> Self {
        Self {
            kind,
            categories: BTreeMap::new(),
            aggregate: 0.0,
            items: results.len(),
            action_counts: ActionCounts::from_results(results),
            metadata: RunMetadata {
                fallbacks: results.iter().filter(|r| r.answer.fallback).count(),
                failures: results.iter().filter(|r| r.error.is_some()).count(),
                ..Default::default()
            },
        }
    }
}

fn gold(r: &TaskResult) -> Result<&str, BenchError> {
    r.gold.as_deref().map(str::trim).filter(|g| !g.is_empty()).ok_or_else(|| BenchError::MissingGold(r.task_id.clone()))
}

/// Exact-match accuracy over option letters; unanswered counts as wrong.
pub fn score_multiple_choice(results: &[TaskResult]) -> Result<ScoreReport, BenchError> {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let (mut correct, mut total) = (0, 0);
    for r in results {
        let g = gold(r)?;
        let ok = r.answer.choice.as_deref().is_some_and(|c| c.eq_ignore_ascii_case(g));
        let e = tally.entry(r.category()).or_default();
        e.0 += ok as usize;
        e.1 += 1;
        correct += ok as usize;
        total += 1;
    }
    let mut report = ScoreReport::new(BenchmarkKind::MultipleChoice, results);
    for (cat, (c, t)) in tally {
        report.categories.insert(
            cat.to_string(),
            CategoryScore { items: t, score: Some(c as f64 / t as f64), acc: None, acc_plus: None },
        );
    }
    report.aggregate = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    Ok(report)
}

/// Per category: acc = 100 × correct questions / questions, acc_plus = 100
/// × images with both questions right / images, score = acc + acc_plus.
/// The aggregate is the sum of category scores.
pub fn score_yesno_paired(results: &[TaskResult]) -> Result<ScoreReport, BenchError> {
    let mut groups: BTreeMap<(&str, &str), Vec<bool>> = BTreeMap::new();
    for r in results {
        let g = normalize_yesno(gold(r)?);
        if g == YesNo::Unknown {
            return Err(BenchError::MissingGold(r.task_id.clone()));
        }
        let ok = normalize_yesno(&r.answer.text) == g;
        groups.entry((r.category(), r.image_hash.as_str())).or_default().push(ok);
    }
    let mut tally: BTreeMap<&str, [usize; 4]> = BTreeMap::new();
    for ((cat, image), answers) in &groups {
        if answers.len() != 2 {
            return Err(BenchError::UnpairedQuestions(format!("{cat}/{}", &image[..image.len().min(12)])));
        }
        let t = tally.entry(cat).or_default();
        t[0] += answers.iter().filter(|a| **a).count();
        t[1] += 2;
        t[2] += answers.iter().all(|a| *a) as usize;
        t[3] += 1;
    }
    let mut report = ScoreReport::new(BenchmarkKind::YesNoPaired, results);
    let mut sum = 0.0;
    for (cat, [c, q, both, imgs]) in tally {
        let acc = 100.0 * c as f64 / q as f64;
        let acc_plus = 100.0 * both as f64 / imgs as f64;
        sum += acc + acc_plus;
        report.categories.insert(
            cat.to_string(),
            CategoryScore { items: q, score: Some(acc + acc_plus), acc: Some(acc), acc_plus: Some(acc_plus) },
        );
    }
    report.aggregate = sum;
    Ok(report)
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap())
}

/// The first number in a judge reply, if it lies in [0,1].
pub fn parse_judge_score(reply: &str) -> Option<f64> {
    let v: f64 = number_re().find(reply)?.as_str().parse().ok()?;
    (0.0..=1.0).contains(&v).then_some(v)
}

/// Capability categories of a judged item; several may be given,
/// separated by commas.
pub fn judged_categories(r: &TaskResult) -> Vec<String> {
    let cats: Vec<String> =
        r.category().split(',').map(|c| canonical_category(c.trim())).filter(|c| !c.is_empty()).collect();
    if cats.is_empty() {
        vec![UNCATEGORIZED.to_string()]
    } else {
        cats
    }
}

fn canonical_category(c: &str) -> String {
    let key: String = c.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
    let known = match key.as_str() {
        "rec" | "recognition" => "Recognition",
        "ocr" => "OCR",
        "know" | "knowledge" => "Knowledge",
        "gen" | "languagegeneration" => "Language Generation",
        "spat" | "spatial" | "spatialawareness" => "Spatial Awareness",
        "math" => "Math",
        _ => return c.to_string(),
    };
    known.to_string()
}

/// Mean of `xs` × 100, summed in sorted order so the result does not
/// depend on input order.
fn mean_pct(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.into_iter().sum::<f64>() / n * 100.0
}

/// Scores already-judged items: category score = mean × 100 over its items,
/// aggregate = mean × 100 over all items. The six standard capability
/// categories always appear.
pub fn score_judged(results: &[TaskResult], item_scores: &[f64]) -> ScoreReport {
    assert_eq!(results.len(), item_scores.len());
    let mut by_cat: BTreeMap<String, Vec<f64>> =
        JUDGED_CATEGORIES.iter().map(|c| (c.to_string(), Vec::new())).collect();
    for (r, s) in results.iter().zip(item_scores) {
        for c in judged_categories(r) {
            by_cat.entry(c).or_default().push(*s);
        }
    }
    let mut report = ScoreReport::new(BenchmarkKind::OpenEndedJudged, results);
    for (cat, xs) in by_cat {
        let items = xs.len();
        let score = (items > 0).then(|| mean_pct(xs));
        report.categories.insert(cat, CategoryScore { items, score, acc: None, acc_plus: None });
    }
    report.aggregate = if item_scores.is_empty() { 0.0 } else { mean_pct(item_scores.to_vec()) };
    report
}

/// Judge request for one item.
pub fn judge_messages(prompt: &JudgePrompt, r: &TaskResult, gold: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(prompt.system.clone()),
        ChatMessage::user(vec![Part::Text(prompt.render(&r.question, gold, &r.answer.text))]),
    ]
}

/// Asks the judge to grade every item, then scores them.
pub fn score_open_ended_judged(
    results: &[TaskResult],
    judge: &Gateway,
    prompt: &JudgePrompt,
    settings: &DecodeSettings,
    exec: Exec,
) -> Result<(ScoreReport, Vec<f64>), BenchError> {
    let scores = par::map_slice(exec, results, |r| -> Result<f64, BenchError> {
        let g = gold(r)?;
        if r.error.is_some() {
            return Ok(0.0);
        }
        let ex = judge.complete(&judge_messages(prompt, r, g), settings)?;
        parse_judge_score(&ex.response_text)
            .ok_or_else(|| BenchError::JudgeParse { item: r.task_id.clone(), reply: ex.response_text.clone() })
    });
    let scores = scores.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut report = score_judged(results, &scores);
    report.metadata.judge_version = Some(prompt.version.clone());
    Ok((report, scores))
}
