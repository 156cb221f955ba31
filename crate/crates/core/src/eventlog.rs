//! Event logs: traces of activity names with optional ground-truth labels.
//!
//! Two text encodings are supported. The trace-per-line format
//!
//! ```text
//! c1: t1 t2 t4 t5 t6
//! c2: t1 t3 t4 t5 t6 | anomalous
//! ```
//!
//! and a CSV format with header `case,activity[,label]` holding one event per
//! row, grouped by case in file order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("duplicate case id `{0}`")]
    DuplicateCase(String),
    #[error("invalid split ratios: {0}")]
    BadRatios(String),
    #[error("split `{0}` would receive no traces")]
    EmptySplit(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "normal" => Some(Label::Normal),
            "anomalous" => Some(Label::Anomalous),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<String>,
    pub label: Option<Label>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, events: Vec<String>) -> Self {
        Trace {
            case_id: case_id.into(),
            events,
            label: None,
        }
    }

    /// Convenience constructor from a whitespace-separated activity string.
    pub fn from_str_events(case_id: impl Into<String>, events: &str) -> Self {
        Trace::new(
            case_id,
            events.split_whitespace().map(str::to_string).collect(),
        )
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Ordered multiset of traces; case ids are unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    traces: Vec<Trace>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Result<Self, LogError> {
        let mut seen = HashSet::new();
        for t in &traces {
            if !seen.insert(t.case_id.as_str()) {
                return Err(LogError::DuplicateCase(t.case_id.clone()));
            }
        }
        Ok(EventLog { traces })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<Trace> {
        self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trace> {
        self.traces.iter()
    }

    /// Concatenation; fails on colliding case ids.
    pub fn concat(logs: &[&EventLog]) -> Result<EventLog, LogError> {
        EventLog::new(
            logs.iter()
                .flat_map(|l| l.traces.iter().cloned())
                .collect(),
        )
    }

    pub fn labeled(mut self, label: Label) -> EventLog {
        for t in &mut self.traces {
            t.label = Some(label);
        }
        self
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Trace;
    type IntoIter = std::slice::Iter<'a, Trace>;

    fn into_iter(self) -> Self::IntoIter {
        self.traces.iter()
    }
}

/// Parses either encoding; a first line starting with `case,` selects CSV.
pub fn parse_log(text: &str) -> Result<EventLog, LogError> {
    let first = text.lines().find(|l| !l.trim().is_empty());
    match first {
        Some(l) if l.trim_start().starts_with("case,") => parse_csv(text),
        _ => parse_lines(text),
    }
}

fn parse_lines(text: &str) -> Result<EventLog, LogError> {
    let mut traces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (case, rest) = raw.split_once(':').ok_or_else(|| LogError::Malformed {
            line,
            msg: "expected `<case_id>: <activities>`".into(),
        })?;
        let case = case.trim();
        if case.is_empty() || case.contains(char::is_whitespace) {
            return Err(LogError::Malformed {
                line,
                msg: format!("bad case id `{case}`"),
            });
        }
        let (events, label) = match rest.split_once('|') {
            Some((ev, lab)) => {
                let label = Label::parse(lab.trim()).ok_or_else(|| LogError::Malformed {
                    line,
                    msg: format!("unknown label `{}`", lab.trim()),
                })?;
                (ev, Some(label))
            }
            None => (rest, None),
        };
        traces.push(Trace {
            case_id: case.to_string(),
            events: events.split_whitespace().map(str::to_string).collect(),
            label,
        });
    }
    EventLog::new(traces)
}

fn parse_csv(text: &str) -> Result<EventLog, LogError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().expect("caller checked for a header");
    let with_label = match header.trim() {
        "case,activity" => false,
        "case,activity,label" => true,
        other => {
            return Err(LogError::Malformed {
                line: 1,
                msg: format!("unexpected CSV header `{other}`"),
            })
        }
    };
    let mut order: Vec<Trace> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, raw) in lines {
        let line = i + 1;
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        let expected = if with_label { 3 } else { 2 };
        if fields.len() != expected || fields[0].is_empty() {
            return Err(LogError::Malformed {
                line,
                msg: format!("expected {expected} fields"),
            });
        }
        let slot = *index.entry(fields[0].to_string()).or_insert_with(|| {
            order.push(Trace::new(fields[0], Vec::new()));
            order.len() - 1
        });
        if !fields[1].is_empty() {
            order[slot].events.push(fields[1].to_string());
        }
        if with_label && !fields[2].is_empty() {
            let label = Label::parse(fields[2]).ok_or_else(|| LogError::Malformed {
                line,
                msg: format!("unknown label `{}`", fields[2]),
            })?;
            order[slot].label = Some(label);
        }
    }
    EventLog::new(order)
}

/// Writes the trace-per-line format.
pub fn write_log(log: &EventLog) -> String {
    let mut out = String::new();
    for t in log {
        out.push_str(&t.case_id);
        out.push(':');
        for e in &t.events {
            out.push(' ');
            out.push_str(e);
        }
        if let Some(label) = t.label {
            out.push_str(" | ");
            out.push_str(label.as_str());
        }
        out.push('\n');
    }
    out
}

/// Writes the CSV format. Empty traces are kept as a single row with an
/// empty activity field.
pub fn write_log_csv(log: &EventLog) -> String {
    let with_label = log.iter().any(|t| t.label.is_some());
    let mut out = String::from(if with_label {
        "case,activity,label\n"
    } else {
        "case,activity\n"
    });
    for t in log {
        let label = t.label.map(|l| l.as_str()).unwrap_or("");
        let mut row = |act: &str| {
            out.push_str(&t.case_id);
            out.push(',');
            out.push_str(act);
            if with_label {
                out.push(',');
                out.push_str(label);
            }
            out.push('\n');
        };
        if t.events.is_empty() {
            row("");
        }
        for e in &t.events {
            row(e);
        }
    }
    out
}

/// Keeps, in order, the first whitespace-delimited token of each raw line
/// that is a known activity. Other lines are dropped.
pub fn ingest_raw<S: AsRef<str>>(
    case_id: &str,
    lines: &[S],
    vocabulary: &HashSet<String>,
) -> Trace {
    let events = lines
        .iter()
        .filter_map(|l| {
            l.as_ref()
                .split_whitespace()
                .find(|tok| vocabulary.contains(*tok))
                .map(str::to_string)
        })
        .collect();
    Trace::new(case_id, events)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogStats {
    pub n_traces: usize,
    pub n_variants: usize,
    pub mean_len: f64,
    pub std_len: f64,
}

/// Trace count, distinct event sequences, and population mean/std of trace
/// length.
pub fn stats(log: &EventLog) -> LogStats {
    if log.is_empty() {
        return LogStats {
            n_traces: 0,
            n_variants: 0,
            mean_len: 0.0,
            std_len: 0.0,
        };
    }
    let variants: HashSet<&[String]> = log.iter().map(|t| t.events.as_slice()).collect();
    let n = log.len() as f64;
    let mean = log.iter().map(|t| t.len() as f64).sum::<f64>() / n;
    let var = log
        .iter()
        .map(|t| (t.len() as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    LogStats {
        n_traces: log.len(),
        n_variants: variants.len(),
        mean_len: mean,
        std_len: var.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, LogError> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), LogError> {
        let all = [self.train, self.validation, self.test];
        if all.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(LogError::BadRatios("ratios must be positive".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(LogError::BadRatios(format!("ratios sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Uniform random partition by trace. Validation and test receive
/// `floor(r * n)` traces; training gets the remainder.
pub fn split_log(
    log: &EventLog,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(EventLog, EventLog, EventLog), LogError> {
    ratios.validate()?;
    let n = log.len();
    let n_val = (ratios.validation * n as f64).floor() as usize;
    let n_test = (ratios.test * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    for (name, size) in [("train", n_train), ("validation", n_val), ("test", n_test)] {
        if size == 0 && n > 0 {
            return Err(LogError::EmptySplit(name));
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: &[usize]| EventLog {
        traces: range.iter().map(|&i| log.traces[i].clone()).collect(),
    };
    Ok((
        take(&idx[..n_train]),
        take(&idx[n_train..n_train + n_val]),
        take(&idx[n_train + n_val..]),
    ))
}
