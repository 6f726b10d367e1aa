//! Action usage gathered from stored traces.

use std::path::Path;

use crate::error::TraceError;
use crate::trace;

use super::score::{ActionCounts, UNCATEGORIZED};

/// Tallies planned actions over every trace under `root`. Returns the
/// counts and the number of traces read.
pub fn collect_action_stats(root: &Path) -> Result<(ActionCounts, usize), TraceError> {
    let dirs = trace::trace_dirs(root)?;
    let mut counts = ActionCounts::default();
    for dir in &dirs {
        let m = trace::load_manifest(dir)?;
        let cat = m.task.category.as_deref().map(str::trim).filter(|c| !c.is_empty()).unwrap_or(UNCATEGORIZED);
        for step in m.plan.iter().flat_map(|p| &p.steps) {
            counts.add(cat, step.action);
        }
    }
    Ok((counts, dirs.len()))
}
