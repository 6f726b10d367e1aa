//! Report rendering. JSON and CSV keep full precision; Markdown rounds to
//! one decimal and shows accuracies as percentages.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;

use super::score::{ActionCounts, ScoreReport};
use super::BenchmarkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn metric_name(kind: BenchmarkKind) -> &'static str {
    match kind {
        BenchmarkKind::MultipleChoice => "accuracy",
        BenchmarkKind::YesNoPaired => "acc+acc_plus",
        BenchmarkKind::OpenEndedJudged => "judged score",
    }
}

/// Human-scale value: accuracies become percentages.
fn display_value(kind: BenchmarkKind, v: f64) -> f64 {
    match kind {
        BenchmarkKind::MultipleChoice => v * 100.0,
        _ => v,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt1(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into())
}

pub fn render_report(report: &ScoreReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    }
}

fn render_csv(report: &ScoreReport) -> String {
    let paired = report.kind == BenchmarkKind::YesNoPaired;
    let mut s = String::from(if paired { "category,items,score,acc,acc_plus\n" } else { "category,items,score\n" });
    let mut row = |name: &str, items: usize, score: String, extra: Option<(String, String)>| {
        s.push_str(&csv_field(name));
        let _ = write!(s, ",{items},{score}");
        if let Some((a, p)) = extra {
            let _ = write!(s, ",{a},{p}");
        }
        s.push('\n');
    };
    for (cat, c) in &report.categories {
        row(cat, c.items, opt(c.score), paired.then(|| (opt(c.acc), opt(c.acc_plus))));
    }
    row("total", report.items, report.aggregate.to_string(), paired.then(|| (String::new(), String::new())));
    s
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn md_cell(v: &str) -> String {
    v.replace('|', "\\|").replace('\n', " ")
}

fn render_markdown(report: &ScoreReport) -> String {
    let kind = report.kind;
    let paired = kind == BenchmarkKind::YesNoPaired;
    let mut s = format!("## {} ({})\n\n", kind, metric_name(kind));
    if let Some(mode) = report.metadata.mode {
        let _ = writeln!(s, "Mode: {mode}");
    }
    if let Some(model) = &report.metadata.model_id {
        let _ = writeln!(s, "Model: {model}");
    }
    if report.metadata.mode.is_some() || report.metadata.model_id.is_some() {
        s.push('\n');
    }
    if paired {
        s.push_str("| Category | Items | Score | acc | acc+ |\n|---|---:|---:|---:|---:|\n");
    } else {
        s.push_str("| Category | Items | Score |\n|---|---:|---:|\n");
    }
    for (cat, c) in &report.categories {
        let score = opt1(c.score.map(|v| display_value(kind, v)));
        if paired {
            let _ =
                writeln!(s, "| {} | {} | {score} | {} | {} |", md_cell(cat), c.items, opt1(c.acc), opt1(c.acc_plus));
        } else {
            let _ = writeln!(s, "| {} | {} | {score} |", md_cell(cat), c.items);
        }
    }
    let total = format!("{:.1}", display_value(kind, report.aggregate));
    if paired {
        let _ = writeln!(s, "| **Total** | {} | {total} | | |", report.items);
    } else {
        let _ = writeln!(s, "| **Total** | {} | {total} |", report.items);
    }
    if report.action_counts.total() > 0 {
        s.push('\n');
        s.push_str(&render_action_markdown(&report.action_counts));
    }
    s
}

/// Writes `report` to `path` in `format`.
pub fn emit_report(report: &ScoreReport, format: ReportFormat, path: &Path) -> Result<(), BenchError> {
    write_file(path, &render_report(report, format))
}

pub fn parse_json_report(text: &str) -> Result<ScoreReport, BenchError> {
    serde_json::from_str(text).map_err(|e| BenchError::Config(format!("report json: {e}")))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), BenchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| BenchError::Io { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, text).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

fn render_action_markdown(counts: &ActionCounts) -> String {
    let mut s = String::from("### Action usage\n\n| Action | Count |\n|---|---:|\n");
    for (a, n) in counts.ranked() {
        let _ = writeln!(s, "| {a} | {n} |");
    }
    if !counts.per_category.is_empty() {
        s.push_str("\n| Category | Action | Count |\n|---|---|---:|\n");
        for (cat, m) in &counts.per_category {
            let mut v: Vec<_> = m.iter().collect();
            v.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            for (a, n) in v {
                let _ = writeln!(s, "| {} | {a} | {n} |", md_cell(cat));
            }
        }
    }
    s
}

/// Action statistics in any report format. CSV rows are
/// `scope,action,count`, with scope `overall` or the category name.
pub fn render_action_stats(counts: &ActionCounts, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let ranked: Vec<_> =
                counts.ranked().into_iter().map(|(a, n)| serde_json::json!({"action": a, "count": n})).collect();
            let v = serde_json::json!({
                "total": counts.total(),
                "overall": ranked,
                "per_category": counts.per_category,
            });
            let mut s = serde_json::to_string_pretty(&v).expect("stats serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("scope,action,count\n");
            for (a, n) in counts.ranked() {
                let _ = writeln!(s, "overall,{a},{n}");
            }
            for (cat, m) in &counts.per_category {
                for (a, n) in m {
                    let _ = writeln!(s, "{},{a},{n}", csv_field(cat));
                }
            }
            s
        }
        ReportFormat::Markdown => render_action_markdown(counts),
    }
}
