//! Diagnoses matrices: one row of misalignment counters plus fitness per
//! trace, with a fixed column order (sorted labels, `UNKNOWN`, `fitness`).

use std::fmt::Write as _;

use crate::alignment::{AlignError, Aligner, CostScheme, DiagRow, UNKNOWN};
use crate::eventlog::EventLog;
use crate::petri::PetriNet;

pub const FITNESS: &str = "fitness";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DiagError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("header mismatch: {0}")]
    Header(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosesMatrix {
    /// Count columns: sorted labels followed by `UNKNOWN`.
    pub columns: Vec<String>,
    pub rows: Vec<DiagRow>,
    pub model: String,
    pub costs: CostScheme,
}

impl DiagnosesMatrix {
    pub fn new(labels: &[String], model: &str, costs: CostScheme) -> Self {
        let mut columns = labels.to_vec();
        columns.push(UNKNOWN.to_string());
        DiagnosesMatrix {
            columns,
            rows: Vec::new(),
            model: model.to_string(),
            costs,
        }
    }

    /// Count columns plus fitness.
    pub fn width(&self) -> usize {
        self.columns.len() + 1
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// All column names in file order, excluding `case`.
    pub fn header(&self) -> Vec<String> {
        let mut h = self.columns.clone();
        h.push(FITNESS.to_string());
        h
    }

    /// Row as a dense feature vector (counts then fitness).
    pub fn features(row: &DiagRow) -> Vec<f64> {
        let mut v: Vec<f64> = row.counts.iter().map(|&c| c as f64).collect();
        v.push(row.fitness);
        v
    }

    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(Self::features).collect()
    }

    /// Rows restricted to the given case ids, in the given order.
    pub fn select(&self, cases: &[&str]) -> DiagnosesMatrix {
        let rows = cases
            .iter()
            .filter_map(|c| self.rows.iter().find(|r| r.case_id == *c).cloned())
            .collect();
        DiagnosesMatrix {
            rows,
            ..self.clone_empty()
        }
    }

    pub fn clone_empty(&self) -> DiagnosesMatrix {
        DiagnosesMatrix {
            columns: self.columns.clone(),
            rows: Vec::new(),
            model: self.model.clone(),
            costs: self.costs,
        }
    }
}

/// Aligns every trace and assembles rows in log order.
pub fn build_diagnoses(
    net: &PetriNet,
    log: &EventLog,
    costs: CostScheme,
) -> Result<DiagnosesMatrix, AlignError> {
    let aligner = Aligner::new(net, costs)?;
    diagnoses_with(&aligner, log)
}

pub fn diagnoses_with(aligner: &Aligner<'_>, log: &EventLog) -> Result<DiagnosesMatrix, AlignError> {
    let mut d = DiagnosesMatrix::new(aligner.labels(), aligner.net().name(), aligner.costs());
    d.rows = aligner
        .diagnose_log(log)?
        .into_iter()
        .map(|(_, row)| row)
        .collect();
    Ok(d)
}

/// CSV with a provenance comment, a header row and six-decimal fitness.
pub fn write_diagnoses(d: &DiagnosesMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "# model={} costs={}", d.model, d.costs).unwrap();
    out.push_str("case");
    for c in d.header() {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
    for r in &d.rows {
        out.push_str(&r.case_id);
        for c in &r.counts {
            write!(out, ",{c}").unwrap();
        }
        writeln!(out, ",{:.6}", r.fitness).unwrap();
    }
    out
}

pub fn read_diagnoses(text: &str) -> Result<DiagnosesMatrix, DiagError> {
    let mut model = String::from("model");
    let mut costs = CostScheme::default();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let bad = |msg: String| DiagError::Malformed { line, msg };
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('#') {
            if header.is_none() {
                for kv in comment.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("model", v)) => model = v.to_string(),
                        Some(("costs", v)) => {
                            costs = v.parse().map_err(|e: AlignError| bad(e.to_string()))?
                        }
                        _ => {}
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        let Some(h) = &header else {
            if fields.first() != Some(&"case") {
                return Err(DiagError::Header("first column must be `case`".into()));
            }
            if fields.len() < 3
                || fields.last() != Some(&FITNESS)
                || fields[fields.len() - 2] != UNKNOWN
            {
                return Err(DiagError::Header(format!(
                    "expected `case,<labels>,{UNKNOWN},{FITNESS}`"
                )));
            }
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != h.len() {
            return Err(bad(format!(
                "{} fields, header has {}",
                fields.len(),
                h.len()
            )));
        }
        let counts = fields[1..fields.len() - 1]
            .iter()
            .map(|f| f.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("bad count: {e}")))?;
        let fitness: f64 = fields[fields.len() - 1]
            .parse()
            .map_err(|e| bad(format!("bad fitness: {e}")))?;
        if !(0.0..=1.0).contains(&fitness) {
            return Err(bad(format!("fitness {fitness} outside [0, 1]")));
        }
        rows.push(DiagRow {
            case_id: fields[0].to_string(),
            counts,
            fitness,
        });
    }
    let header = header.ok_or_else(|| DiagError::Header("missing header row".into()))?;
    Ok(DiagnosesMatrix {
        columns: header[1..header.len() - 1].to_vec(),
        rows,
        model,
        costs,
    })
}
