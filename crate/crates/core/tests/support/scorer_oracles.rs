//! Hand-computed scorer results. Every expected value is written out as a
//! literal and compared with `==`; the sets are sized so that those values
//! are exact in binary floating point.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use imgthought::bench::score::JUDGED_CATEGORIES;
use imgthought::bench::{score_multiple_choice, score_open_ended_judged, score_yesno_paired, ScoreReport, TaskResult};
use imgthought::error::BenchError;
use imgthought::gateway::{DecodeSettings, Gateway, ScriptedTransport};
use imgthought::model::{FinalAnswer, RationaleMode};
use imgthought::par::Exec;
use imgthought::prompts::JudgePrompt;
use proptest::collection::vec;
use proptest::prelude::*;

use super::{check, ensure, CheckResult};

pub fn result(
    id: &str,
    category: Option<&str>,
    gold: &str,
    text: &str,
    choice: Option<&str>,
    image: &str,
) -> TaskResult {
    TaskResult {
        task_id: id.to_string(),
        question: format!("question {id}"),
        category: category.map(str::to_string),
        gold: Some(gold.to_string()),
        image_hash: image.to_string(),
        answer: FinalAnswer {
            text: text.to_string(),
            choice: choice.map(str::to_string),
            mode: RationaleMode::Hybrid,
            fallback: false,
        },
        actions: Vec::new(),
        error: None,
    }
}

fn mc(id: &str, cat: Option<&str>, gold: &str, choice: Option<&str>) -> TaskResult {
    result(id, cat, gold, choice.unwrap_or(""), choice, id)
}

fn yn(id: &str, cat: &str, image: &str, gold: &str, said: &str) -> TaskResult {
    result(id, Some(cat), gold, said, None, image)
}

type Expected<'a> = &'a [(&'a str, usize, Option<f64>)];

fn compare(name: &str, report: &ScoreReport, aggregate: f64, cats: Expected<'_>) -> Result<(), String> {
    let got: Vec<(&str, usize, Option<f64>)> =
        report.categories.iter().map(|(k, c)| (k.as_str(), c.items, c.score)).collect();
    let mut want = cats.to_vec();
    want.sort_by(|a, b| a.0.cmp(b.0));
    if got != want {
        return Err(format!("{name}: categories {got:?}, want {want:?}"));
    }
    if report.aggregate != aggregate {
        return Err(format!("{name}: aggregate {}, want {aggregate}", report.aggregate));
    }
    Ok(())
}

/// Returns the number of result sets checked.
pub fn multiple_choice_oracles() -> Result<usize, String> {
    let sets: Vec<(&str, Vec<TaskResult>, f64, Expected<'_>)> = vec![
        (
            "all correct",
            vec![
                mc("1", Some("a"), "A", Some("A")),
                mc("2", Some("a"), "B", Some("B")),
                mc("3", Some("a"), "C", Some("C")),
                mc("4", Some("a"), "D", Some("D")),
            ],
            1.0,
            &[("a", 4, Some(1.0))],
        ),
        (
            "two categories",
            vec![
                mc("1", Some("a"), "A", Some("A")),
                mc("2", Some("a"), "B", Some("C")),
                mc("3", Some("b"), "C", Some("C")),
                mc("4", Some("b"), "D", Some("D")),
            ],
            0.75,
            &[("a", 2, Some(0.5)), ("b", 2, Some(1.0))],
        ),
        (
            "nothing answered",
            vec![
                mc("1", Some("a"), "A", None),
                mc("2", Some("a"), "B", None),
                mc("3", Some("c"), "C", None),
                mc("4", Some("c"), "D", None),
            ],
            0.0,
            &[("a", 2, Some(0.0)), ("c", 2, Some(0.0))],
        ),
        (
            "case-insensitive letters",
            vec![
                mc("1", Some("a"), "C", Some("c")),
                mc("2", Some("a"), "b", Some("B")),
                mc("3", Some("a"), "A", Some("D")),
                mc("4", Some("a"), "A", Some("B")),
            ],
            0.5,
            &[("a", 4, Some(0.5))],
        ),
        (
            "uncategorized",
            vec![
                mc("1", None, "A", Some("A")),
                mc("2", Some("  "), "B", Some("A")),
                mc("3", Some(""), "C", Some("C")),
                mc("4", None, "D", None),
                mc("5", Some("x"), "A", Some("A")),
                mc("6", Some("x"), "B", Some("B")),
                mc("7", Some("x"), "C", Some("C")),
                mc("8", Some("x"), "D", Some("D")),
            ],
            0.75,
            &[("uncategorized", 4, Some(0.5)), ("x", 4, Some(1.0))],
        ),
    ];
    let n = sets.len();
    for (name, results, aggregate, cats) in sets {
        compare(name, &score_multiple_choice(&results).map_err(|e| e.to_string())?, aggregate, cats)?;
    }
    let mut missing = mc("9", None, "A", Some("A"));
    missing.gold = None;
    match score_multiple_choice(&[missing]) {
        Err(BenchError::MissingGold(id)) if id == "9" => Ok(n + 1),
        other => Err(format!("missing gold: {other:?}")),
    }
}

/// (category, acc, acc_plus, score)
type PairedRow<'a> = (&'a str, Option<f64>, Option<f64>, Option<f64>);

fn paired_check(name: &str, report: &ScoreReport, rows: &[(&str, f64, f64)], aggregate: f64) -> Result<(), String> {
    let got: Vec<PairedRow> = report.categories.iter().map(|(k, c)| (k.as_str(), c.acc, c.acc_plus, c.score)).collect();
    let want: Vec<PairedRow> = rows.iter().map(|(k, a, p)| (*k, Some(*a), Some(*p), Some(a + p))).collect();
    if got != want {
        return Err(format!("{name}: {got:?}, want {want:?}"));
    }
    for (k, c) in &report.categories {
        let (acc, plus, score) = (c.acc.unwrap(), c.acc_plus.unwrap(), c.score.unwrap());
        if plus > acc || score > 200.0 {
            return Err(format!("{name}/{k}: acc {acc}, acc_plus {plus}, score {score}"));
        }
    }
    if report.aggregate != aggregate {
        return Err(format!("{name}: aggregate {}, want {aggregate}", report.aggregate));
    }
    Ok(())
}

/// (name, results, expected (category, acc, acc_plus) rows, aggregate)
type PairedSet<'a> = (&'a str, Vec<TaskResult>, Vec<(&'a str, f64, f64)>, f64);

/// Returns the number of result sets checked.
pub fn yes_no_oracles() -> Result<usize, String> {
    let sets: Vec<PairedSet> = vec![
        (
            "perfect existence",
            vec![
                yn("1", "existence", "i1", "Yes", "Yes"),
                yn("2", "existence", "i1", "No", "No"),
                yn("3", "existence", "i2", "Yes", "yes, there is one"),
                yn("4", "existence", "i2", "No", "No."),
            ],
            vec![("existence", 100.0, 100.0)],
            200.0,
        ),
        (
            "one miss",
            vec![
                yn("1", "existence", "i1", "Yes", "Yes"),
                yn("2", "existence", "i1", "No", "No"),
                yn("3", "existence", "i2", "Yes", "No"),
                yn("4", "existence", "i2", "No", "No"),
            ],
            vec![("existence", 75.0, 50.0)],
            125.0,
        ),
        (
            "two categories",
            vec![
                yn("1", "count", "i1", "Yes", "No"),
                yn("2", "count", "i1", "No", "Yes"),
                yn("3", "count", "i2", "Yes", "Yes"),
                yn("4", "count", "i2", "No", "Yes"),
                yn("5", "color", "i3", "Yes", "Yes"),
                yn("6", "color", "i3", "No", "no"),
            ],
            vec![("color", 100.0, 100.0), ("count", 25.0, 0.0)],
            225.0,
        ),
        (
            "four images",
            vec![
                yn("1", "position", "i1", "Yes", "Yes"),
                yn("2", "position", "i1", "No", "No"),
                yn("3", "position", "i2", "Yes", "Yes"),
                yn("4", "position", "i2", "No", "No"),
                yn("5", "position", "i3", "Yes", "Yes"),
                yn("6", "position", "i3", "No", "No"),
                yn("7", "position", "i4", "Yes", "Yes"),
                yn("8", "position", "i4", "No", "Yes"),
            ],
            vec![("position", 87.5, 75.0)],
            162.5,
        ),
        (
            "unclear answer is wrong",
            vec![yn("1", "scene", "i1", "Yes", "It is hard to say."), yn("2", "scene", "i1", "No", "No")],
            vec![("scene", 50.0, 0.0)],
            50.0,
        ),
        (
            "same image, different categories",
            vec![
                yn("1", "color", "i1", "Yes", "Yes"),
                yn("2", "color", "i1", "No", "No"),
                yn("3", "existence", "i1", "Yes", "Yes"),
                yn("4", "existence", "i1", "No", "Yes"),
            ],
            vec![("color", 100.0, 100.0), ("existence", 50.0, 0.0)],
            250.0,
        ),
    ];
    let n = sets.len();
    for (name, results, rows, aggregate) in sets {
        let report = score_yesno_paired(&results).map_err(|e| format!("{name}: {e}"))?;
        paired_check(name, &report, &rows, aggregate)?;
    }
    let unpaired = [
        yn("1", "existence", "i1", "Yes", "Yes"),
        yn("2", "existence", "i1", "No", "No"),
        yn("3", "existence", "i1", "No", "No"),
    ];
    match score_yesno_paired(&unpaired) {
        Err(BenchError::UnpairedQuestions(_)) => Ok(n + 1),
        other => Err(format!("three questions on one image: {other:?}")),
    }
}

/// acc_plus never exceeds acc and no category exceeds 200, over random
/// paired result sets.
pub fn yes_no_bounds(cases: u32) -> CheckResult {
    let pair = (0..3usize, any::<bool>(), any::<bool>());
    check(cases, vec(pair, 1..12), |pairs| {
        let cats = ["existence", "count", "color"];
        let mut results = Vec::new();
        for (i, (c, first, second)) in pairs.iter().enumerate() {
            let image = format!("img{i}");
            let said = |right: bool, gold: &str| if right == (gold == "Yes") { "Yes" } else { "No" };
            results.push(yn(&format!("{i}a"), cats[*c], &image, "Yes", said(*first, "Yes")));
            results.push(yn(&format!("{i}b"), cats[*c], &image, "No", said(*second, "No")));
        }
        let report = score_yesno_paired(&results).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let mut sum = 0.0;
        for c in report.categories.values() {
            let (acc, plus, score) = (c.acc.unwrap(), c.acc_plus.unwrap(), c.score.unwrap());
            ensure(plus <= acc && (0.0..=200.0).contains(&score), || format!("acc {acc} acc_plus {plus}"))?;
            sum += score;
        }
        ensure(report.aggregate == sum, || "aggregate is not the category sum".into())
    })
}

/// A judge that replies with whatever follows `score=` in the prediction,
/// counting its calls.
fn echo_judge() -> (Gateway, Arc<Mutex<usize>>) {
    let calls = Arc::new(Mutex::new(0));
    let seen = calls.clone();
    let gateway = Gateway::new(ScriptedTransport::new("judge", move |messages, _| {
        *seen.lock().unwrap() += 1;
        let text = messages.last().unwrap().text();
        let pred = text.lines().find_map(|l| l.strip_prefix("Prediction: ")).unwrap_or("");
        Ok(pred.split("score=").nth(1).unwrap_or("no idea").to_string())
    }));
    (gateway, calls)
}

fn judged(id: &str, cat: &str, reply: &str) -> TaskResult {
    result(id, Some(cat), "gold", &format!("prediction score={reply}"), None, id)
}

fn six_with(extra: &[(&'static str, usize, Option<f64>)]) -> Vec<(&'static str, usize, Option<f64>)> {
    let mut out: BTreeMap<&str, (usize, Option<f64>)> = JUDGED_CATEGORIES.iter().map(|c| (*c, (0, None))).collect();
    for (k, n, s) in extra {
        out.insert(k, (*n, *s));
    }
    out.into_iter().map(|(k, (n, s))| (k, n, s)).collect()
}

/// (name, results, aggregate, expected (category, items, score) rows,
/// judge calls)
type JudgedSet<'a> = (&'a str, Vec<TaskResult>, f64, Vec<(&'a str, usize, Option<f64>)>, usize);

/// Returns the number of result sets checked.
pub fn judged_oracles() -> Result<usize, String> {
    let prompt = JudgePrompt::builtin();
    let settings = DecodeSettings::default();
    let mut errored = judged("k2", "Knowledge", "1");
    errored.error = Some("gateway failed".into());
    let sets: Vec<JudgedSet> = vec![
        (
            "one category",
            vec![judged("r1", "Recognition", "1"), judged("r2", "Recognition", "0.5")],
            75.0,
            six_with(&[("Recognition", 2, Some(75.0))]),
            2,
        ),
        (
            "multi-category item",
            vec![judged("m1", "OCR,Math", "0.25"), judged("m2", "Math", "0")],
            12.5,
            six_with(&[("OCR", 1, Some(25.0)), ("Math", 2, Some(12.5))]),
            2,
        ),
        (
            "errored item scores zero unjudged",
            vec![judged("k1", "Knowledge", "1.0"), errored],
            50.0,
            six_with(&[("Knowledge", 2, Some(50.0))]),
            1,
        ),
        (
            "category aliases",
            vec![
                judged("s1", "spat, math", "0.75"),
                judged("s2", "Spatial Awareness", "0.25"),
                judged("s3", "gen", "1"),
                judged("s4", "rec", "0"),
            ],
            50.0,
            six_with(&[
                ("Spatial Awareness", 2, Some(50.0)),
                ("Math", 1, Some(75.0)),
                ("Language Generation", 1, Some(100.0)),
                ("Recognition", 1, Some(0.0)),
            ]),
            4,
        ),
        (
            "unknown category kept",
            vec![judged("h1", "Humor", "0.5"), judged("h2", "OCR", "0.125")],
            31.25,
            six_with(&[("Humor", 1, Some(50.0)), ("OCR", 1, Some(12.5))]),
            2,
        ),
        (
            "all zero",
            vec![judged("z1", "Math", "0"), judged("z2", "Math", "0.0"), judged("z3", "OCR", "0")],
            0.0,
            six_with(&[("Math", 2, Some(0.0)), ("OCR", 1, Some(0.0))]),
            3,
        ),
    ];
    let n = sets.len();
    for (name, results, aggregate, cats, judge_calls) in sets {
        let (gateway, calls) = echo_judge();
        let (report, _) = score_open_ended_judged(&results, &gateway, &prompt, &settings, Exec::Sequential)
            .map_err(|e| format!("{name}: {e}"))?;
        compare(name, &report, aggregate, &cats)?;
        if *calls.lock().unwrap() != judge_calls {
            return Err(format!("{name}: {} judge calls, want {judge_calls}", calls.lock().unwrap()));
        }
        if report.metadata.judge_version.as_deref() != Some(prompt.version.as_str()) {
            return Err(format!("{name}: judge version not recorded"));
        }
        let mut reversed = results.clone();
        reversed.reverse();
        let (again, _) = score_open_ended_judged(&reversed, &gateway, &prompt, &settings, Exec::Parallel)
            .map_err(|e| format!("{name}: {e}"))?;
        if again.categories != report.categories || again.aggregate != report.aggregate {
            return Err(format!("{name}: result order changed the score"));
        }
    }
    for bad in ["great", "1.5"] {
        let (gateway, _) = echo_judge();
        match score_open_ended_judged(&[judged("b", "OCR", bad)], &gateway, &prompt, &settings, Exec::Sequential) {
            Err(BenchError::JudgeParse { .. }) => {}
            other => return Err(format!("judge reply {bad:?}: {:?}", other.map(|r| r.1))),
        }
    }
    Ok(n + 2)
}
