//! Datasets, scorers, the batch runner and report output.

pub mod dataset;
pub mod report;
pub mod runner;
pub mod score;
pub mod stats;

pub use dataset::{load_multiple_choice, load_open_ended, load_tasks, load_yes_no, write_tasks};
pub use report::{emit_report, parse_json_report, render_action_stats, render_report, ReportFormat};
pub use runner::{run_benchmark, BenchOptions, Judge};
pub use score::{
    score_judged, score_multiple_choice, score_open_ended_judged, score_yesno_paired, ActionCounts, CategoryScore,
    RunMetadata, ScoreReport, TaskResult,
};
pub use stats::collect_action_stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Scoring style of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    /// Lettered options, exact-match accuracy.
    MultipleChoice,
    /// Two yes/no questions per image; category score is acc + acc_plus.
    YesNoPaired,
    /// Free-form answers graded by a judge model.
    OpenEndedJudged,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 3] =
        [BenchmarkKind::MultipleChoice, BenchmarkKind::YesNoPaired, BenchmarkKind::OpenEndedJudged];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::MultipleChoice => "multiple_choice",
            BenchmarkKind::YesNoPaired => "yes_no",
            BenchmarkKind::OpenEndedJudged => "open_ended",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "multiple_choice" | "mc" | "mmbench" => Ok(BenchmarkKind::MultipleChoice),
            "yes_no" | "yesno" | "yes_no_paired" | "mme" => Ok(BenchmarkKind::YesNoPaired),
            "open_ended" | "open_ended_judged" | "judged" | "mmvet" => Ok(BenchmarkKind::OpenEndedJudged),
            other => Err(format!("unknown benchmark kind {other:?} (expected multiple_choice, yes_no or open_ended)")),
        }
    }
}
