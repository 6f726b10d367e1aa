//! TSV dataset loaders. Every file has a header row and a base64 `image`
//! column (PNG or JPEG). Malformed rows are rejected, never repaired.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::BenchError;
use crate::imageio;
use crate::model::{validate_task, AnswerOption, Task};
use crate::refiner::{normalize_yesno, YesNo};

use super::BenchmarkKind;

struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
    letters: Vec<(String, usize)>,
}

impl Table {
    fn read(reader: impl Read) -> Result<Self, BenchError> {
        let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(reader);
        let headers = rdr.headers().map_err(|e| BenchError::Format { row: 1, reason: format!("header: {e}") })?.clone();
        let columns: HashMap<String, usize> =
            headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        let mut letters: Vec<(String, usize)> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.len() == 1 && h.chars().all(|c| c.is_ascii_uppercase()))
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        letters.sort();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| BenchError::Format {
                row: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Self { columns, rows, letters })
    }

    fn require(&self, names: &[&str]) -> Result<(), BenchError> {
        for n in names {
            if !self.columns.contains_key(*n) {
                return Err(BenchError::Format { row: 1, reason: format!("missing column {n:?}") });
            }
        }
        Ok(())
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.columns.get(name).and_then(|&i| rec.get(i)).map(str::trim).filter(|s| !s.is_empty())
    }
}

fn base_task(table: &Table, line: usize, rec: &csv::StringRecord) -> Result<Task, BenchError> {
    let fail = |reason: String| BenchError::Format { row: line, reason };
    let id = table.get(rec, "index").ok_or_else(|| fail("empty index".into()))?;
    let question = table.get(rec, "question").ok_or_else(|| fail("empty question".into()))?;
    let b64 = table.get(rec, "image").ok_or_else(|| fail("empty image".into()))?;
    let image = imageio::decode_base64(b64).map_err(|e| fail(format!("image: {e}")))?;
    let mut task = Task::new(id, question, image);
    task.category = table.get(rec, "category").map(str::to_string);
    task.gold_answer = table.get(rec, "answer").map(str::to_string);
    Ok(task)
}

fn check(task: Task, line: usize) -> Result<Task, BenchError> {
    match validate_task(&task).into_iter().next() {
        Some(v) => Err(BenchError::Format { row: line, reason: v }),
        None => Ok(task),
    }
}

/// Columns: index, question, A, B, C, D (blank = absent), answer, category,
/// image.
pub fn read_multiple_choice(reader: impl Read) -> Result<Vec<Task>, BenchError> {
    let table = Table::read(reader)?;
    table.require(&["index", "question", "A", "B", "answer", "image"])?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let mut task = base_task(&table, *line, rec)?;
        task.options = table
            .letters
            .iter()
            .filter_map(|(l, i)| {
                let text = rec.get(*i).map(str::trim).filter(|s| !s.is_empty())?;
                Some(AnswerOption::new(l.clone(), text))
            })
            .collect();
        if task.options.len() < 2 {
            return Err(BenchError::Format { row: *line, reason: "fewer than two options".into() });
        }
        if let Some(g) = &task.gold_answer {
            let g = g.to_uppercase();
            if !task.options.iter().any(|o| o.label == g) {
                return Err(BenchError::Format { row: *line, reason: format!("answer {g:?} is not an option label") });
            }
            task.gold_answer = Some(g);
        }
        out.push(check(task, *line)?);
    }
    Ok(out)
}

/// Columns: index, question, answer (yes/no), category, image. Questions
/// are paired by category and image content.
pub fn read_yes_no(reader: impl Read) -> Result<Vec<Task>, BenchError> {
    let table = Table::read(reader)?;
    table.require(&["index", "question", "answer", "image"])?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let task = base_task(&table, *line, rec)?;
        if let Some(g) = &task.gold_answer {
            if normalize_yesno(g) == YesNo::Unknown {
                return Err(BenchError::Format { row: *line, reason: format!("answer {g:?} is not yes or no") });
            }
        }
        out.push(check(task, *line)?);
    }
    Ok(out)
}

/// Columns: index, question, answer, category (comma-separated
/// capabilities), image.
pub fn read_open_ended(reader: impl Read) -> Result<Vec<Task>, BenchError> {
    let table = Table::read(reader)?;
    table.require(&["index", "question", "answer", "image"])?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        out.push(check(base_task(&table, *line, rec)?, *line)?);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File, BenchError> {
    std::fs::File::open(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

pub fn load_multiple_choice(path: &Path) -> Result<Vec<Task>, BenchError> {
    read_multiple_choice(open(path)?)
}

pub fn load_yes_no(path: &Path) -> Result<Vec<Task>, BenchError> {
    read_yes_no(open(path)?)
}

pub fn load_open_ended(path: &Path) -> Result<Vec<Task>, BenchError> {
    read_open_ended(open(path)?)
}

pub fn load_tasks(kind: BenchmarkKind, path: &Path) -> Result<Vec<Task>, BenchError> {
    match kind {
        BenchmarkKind::MultipleChoice => load_multiple_choice(path),
        BenchmarkKind::YesNoPaired => load_yes_no(path),
        BenchmarkKind::OpenEndedJudged => load_open_ended(path),
    }
}

/// Writes tasks in the loader's format for `kind`.
pub fn write_tasks(kind: BenchmarkKind, tasks: &[Task], w: impl std::io::Write) -> Result<(), BenchError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    let csv_err = |e: csv::Error| BenchError::Config(format!("tsv write: {e}"));
    let mut header = vec!["index", "question"];
    if kind == BenchmarkKind::MultipleChoice {
        header.extend(["A", "B", "C", "D"]);
    }
    header.extend(["answer", "category", "image"]);
    wtr.write_record(&header).map_err(csv_err)?;
    for t in tasks {
        let mut row = vec![t.id.clone(), t.question.clone()];
        if kind == BenchmarkKind::MultipleChoice {
            for l in ["A", "B", "C", "D"] {
                row.push(t.options.iter().find(|o| o.label == l).map(|o| o.text.clone()).unwrap_or_default());
            }
        }
        row.push(t.gold_answer.clone().unwrap_or_default());
        row.push(t.category.clone().unwrap_or_default());
        row.push(imageio::png_base64(&t.image));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| BenchError::Config(format!("tsv write: {e}")))
}
