//! A synthetic trace corpus with known action counts.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use imgthought::bench::BenchmarkKind;
use imgthought::gateway::Gateway;
use imgthought::model::{ActionKind, Plan, PlanStep, RationaleMode};
use imgthought::pipeline::{Pipeline, PipelineConfig};
use imgthought::prompts::PromptSet;
use imgthought::tools::StubTool;
use imgthought::trace::write_trace;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use super::{fixtures, runner};

pub const TASKS: usize = 40;
pub const UNCATEGORIZED: &str = "uncategorized";

/// Expected counts keyed by wire name: overall, and per category.
#[derive(Debug, Default, PartialEq)]
pub struct Tally {
    pub overall: BTreeMap<String, usize>,
    pub per_category: BTreeMap<String, BTreeMap<String, usize>>,
}

fn corpus_spec() -> Vec<(Option<String>, Vec<ActionKind>)> {
    let category = option::of(proptest::sample::select(vec!["existence", "OCR", "spatial, layout", "count"]));
    let actions = vec(proptest::sample::select(ActionKind::ALL.to_vec()), 0..=6);
    let strat = vec((category.prop_map(|c| c.map(str::to_string)), actions), TASKS);
    strat.new_tree(&mut runner(1)).expect("corpus generates").current()
}

/// Writes `TASKS` traces under `root` and returns what their plans contain.
pub fn write_corpus(root: &Path) -> Tally {
    let kind = BenchmarkKind::MultipleChoice;
    let gateway = Gateway::new(fixtures::scripted_model(kind, fixtures::TWO_STEP_PLAN));
    let pipeline = Pipeline::new(gateway, Arc::new(StubTool), PromptSet::builtin(kind), PipelineConfig::default());
    let base = pipeline.run_task(&fixtures::quadrant_task(), RationaleMode::Hybrid).expect("scripted run").manifest;

    let mut tally = Tally::default();
    for (i, (category, actions)) in corpus_spec().into_iter().enumerate() {
        let mut m = base.clone();
        m.task.id = format!("synthetic-{i:03}");
        m.task.category = category.clone();
        m.steps.clear();
        let steps = actions
            .iter()
            .enumerate()
            .map(|(j, &action)| PlanStep {
                index: j as u32 + 1,
                subgoal: format!("step {j}"),
                action,
                target: action.requires_target().then(|| "thing".to_string()),
                params: BTreeMap::new(),
            })
            .collect();
        m.plan = Some(Plan { steps, raw_model_text: String::new(), warnings: Vec::new() });
        write_trace(root, &m, &BTreeMap::new()).expect("synthetic trace writes");

        let cat = category.unwrap_or_else(|| UNCATEGORIZED.to_string());
        for a in actions {
            let name = a.as_str().to_string();
            *tally.overall.entry(name.clone()).or_default() += 1;
            *tally.per_category.entry(cat.clone()).or_default().entry(name).or_default() += 1;
        }
    }
    tally
}

/// Every category's counts summed per action.
pub fn category_sums(per_category: &BTreeMap<String, BTreeMap<String, usize>>) -> BTreeMap<String, usize> {
    let mut sums = BTreeMap::new();
    for counts in per_category.values() {
        for (a, n) in counts {
            *sums.entry(a.clone()).or_default() += n;
        }
    }
    sums
}
