//! One-class detectors over diagnoses rows, each with a threshold
//! calibrated on validation scores.

pub mod autoencoder;
pub mod dbscan;
mod io;

use std::fmt;
use std::str::FromStr;

use crate::alignment::DiagRow;
use crate::diagnoses::DiagnosesMatrix;
pub use autoencoder::{gradient_check, gradient_check_with_step, Autoencoder};
pub use dbscan::Dbscan;
pub use io::{load_detector, save_detector, FORMAT_HEADER};

pub const DEFAULT_QUANTILE: f64 = 95.0;
pub const MIN_TRAIN_ROWS: usize = 5;
/// Normalised inputs are clamped to this range before reaching a model.
pub const CLAMP: (f64, f64) = (-0.5, 1.5);

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("need at least {MIN_TRAIN_ROWS} training rows, got {0}")]
    TooFewRows(usize),
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("column mismatch: detector has {expected} columns, input has {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("column names differ from those the detector was trained on")]
    ColumnNames,
    #[error("quantile {0} outside [0, 100]")]
    BadQuantile(f64),
    #[error("autoencoder diverged (loss {0}); lower the learning rate")]
    Diverged(f64),
    #[error("no core points at eps {0}; use a larger eps")]
    NoCorePoints(f64),
    #[error("non-finite threshold")]
    NonFiniteThreshold,
    #[error("unknown detector kind `{0}`")]
    UnknownKind(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported detector format `{0}`")]
    Version(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Ft,
    Dbscan,
    Ae,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Ft, DetectorKind::Dbscan, DetectorKind::Ae];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Ft => "ft",
            DetectorKind::Dbscan => "dbscan",
            DetectorKind::Ae => "ae",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ft" => Ok(DetectorKind::Ft),
            "dbscan" => Ok(DetectorKind::Dbscan),
            "ae" => Ok(DetectorKind::Ae),
            _ => Err(DetectError::UnknownKind(s.to_string())),
        }
    }
}

/// Per-column min-max scaling. A constant column gets range 1, so its
/// training value maps to 0 and any other value keeps its raw offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl Normalizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let range = min
            .iter()
            .zip(&max)
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        Normalizer { min, range }
    }

    pub fn identity(d: usize) -> Self {
        Normalizer {
            min: vec![0.0; d],
            range: vec![1.0; d],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| ((v - lo) / r).clamp(CLAMP.0, CLAMP.1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ft,
    Dbscan(Dbscan),
    Ae(Autoencoder),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub quantile: f64,
    /// `None` picks the k-distance percentile radius.
    pub eps: Option<f64>,
    pub min_pts: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            quantile: DEFAULT_QUANTILE,
            eps: None,
            min_pts: dbscan::DEFAULT_MIN_PTS,
            epochs: autoencoder::DEFAULT_EPOCHS,
            learning_rate: autoencoder::DEFAULT_LEARNING_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub kind: DetectorKind,
    /// Count columns of the diagnoses matrix (fitness excluded).
    pub columns: Vec<String>,
    pub model_id: String,
    pub seed: u64,
    pub quantile: f64,
    pub threshold: f64,
    pub normalizer: Normalizer,
    pub model: Model,
}

/// Linear-interpolation percentile, `q` in `[0, 100]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = q / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

pub fn train(
    kind: DetectorKind,
    train_d: &DiagnosesMatrix,
    val_d: &DiagnosesMatrix,
    params: &TrainParams,
    seed: u64,
) -> Result<Detector, DetectError> {
    if train_d.columns != val_d.columns {
        return Err(DetectError::ColumnNames);
    }
    if train_d.len() < MIN_TRAIN_ROWS {
        return Err(DetectError::TooFewRows(train_d.len()));
    }
    if val_d.is_empty() {
        return Err(DetectError::EmptyValidation);
    }
    if !(0.0..=100.0).contains(&params.quantile) {
        return Err(DetectError::BadQuantile(params.quantile));
    }
    let raw = train_d.feature_rows();
    let (normalizer, model) = match kind {
        DetectorKind::Ft => (Normalizer::identity(train_d.width()), Model::Ft),
        DetectorKind::Dbscan => {
            let norm = Normalizer::fit(&raw);
            let rows: Vec<Vec<f64>> = raw.iter().map(|r| norm.apply(r)).collect();
            let eps = params.eps.unwrap_or_else(|| {
                percentile(
                    &dbscan::k_distances(&rows, params.min_pts),
                    dbscan::DEFAULT_EPS_PERCENTILE,
                )
            });
            let m = Dbscan::fit(&rows, eps, params.min_pts).ok_or(DetectError::NoCorePoints(eps))?;
            (norm, Model::Dbscan(m))
        }
        DetectorKind::Ae => {
            let norm = Normalizer::fit(&raw);
            let rows: Vec<Vec<f64>> = raw.iter().map(|r| norm.apply(r)).collect();
            let mut ae = Autoencoder::new(&autoencoder::default_shape(train_d.width()), seed);
            ae.fit(&rows, params.epochs, params.learning_rate)
                .map_err(DetectError::Diverged)?;
            (norm, Model::Ae(ae))
        }
    };
    let mut det = Detector {
        kind,
        columns: train_d.columns.clone(),
        model_id: train_d.model.clone(),
        seed,
        quantile: params.quantile,
        threshold: 0.0,
        normalizer,
        model,
    };
    let val_scores = det.score_matrix(val_d)?;
    det.threshold = percentile(&val_scores, params.quantile);
    if !det.threshold.is_finite() {
        return Err(DetectError::NonFiniteThreshold);
    }
    Ok(det)
}

impl Detector {
    /// Score of a dense row laid out as counts then fitness.
    pub fn score_features(&self, x: &[f64]) -> Result<f64, DetectError> {
        let expected = self.columns.len() + 1;
        if x.len() != expected {
            return Err(DetectError::ColumnMismatch {
                expected,
                got: x.len(),
            });
        }
        Ok(match &self.model {
            Model::Ft => 1.0 - x[x.len() - 1],
            Model::Dbscan(m) => m.score(&self.normalizer.apply(x)),
            Model::Ae(ae) => ae.row_error(&self.normalizer.apply(x)),
        })
    }

    pub fn score(&self, row: &DiagRow) -> Result<f64, DetectError> {
        self.score_features(&DiagnosesMatrix::features(row))
    }

    /// `true` for anomalous: strictly above the threshold.
    pub fn classify(&self, row: &DiagRow) -> Result<bool, DetectError> {
        Ok(self.is_anomalous(self.score(row)?))
    }

    pub fn is_anomalous(&self, score: f64) -> bool {
        score > self.threshold
    }

    pub fn score_matrix(&self, d: &DiagnosesMatrix) -> Result<Vec<f64>, DetectError> {
        if d.columns != self.columns {
            return Err(DetectError::ColumnNames);
        }
        d.rows.iter().map(|r| self.score(r)).collect()
    }
}
