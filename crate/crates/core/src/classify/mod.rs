//! Six-class activity recognition: dataset I/O, Haar wavelet features,
//! a CART decision tree, Gaussian naive Bayes and a single-layer LSTM.
//!
//! The tree and naive Bayes consume [`dwt_features`]; the LSTM reads the raw
//! `T x F` series.

mod dataset;
pub mod dwt;
pub mod gnb;
pub mod lstm;
mod model_io;
pub mod tree;

use std::fmt;
use std::io;
use std::str::FromStr;

use thiserror::Error;

pub use dataset::{load_dataset, parse_dataset, write_dataset};
pub use dwt::{dwt_features, feature_matrix, haar_dwt, HaarDecomposition};
pub use gnb::{predict_gnb, train_gnb, GnbModel};
pub use model_io::{sniff as sniff_model, ModelKind};
pub use lstm::{lstm_predict, lstm_train, LstmModel, TrainConfig, TrainReport};
pub use tree::{predict_tree, train_tree, Decision, TreeModel, TreeParams};

pub const NUM_CLASSES: usize = 6;
/// Shortest accepted series.
pub const MIN_TIME_STEPS: usize = 8;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("line {line}: unknown activity label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: expected {expected} channels, found {found}")]
    InconsistentF { line: usize, expected: usize, found: usize },
    #[error("series of {len} steps is too short (need {need})")]
    TooShort { len: usize, need: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("input has {found} dimensions, model expects {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid sample: {0}")]
    BadSample(String),
    #[error("bad model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Activity classes. The declaration order is the class index used by
/// confusion matrices and the LSTM output slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Activity {
    LieDown,
    PickUp,
    Run,
    Sit,
    StandUp,
    Walk,
}

impl Activity {
    pub const ALL: [Activity; NUM_CLASSES] =
        [Activity::LieDown, Activity::PickUp, Activity::Run, Activity::Sit, Activity::StandUp, Activity::Walk];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Activity::LieDown => "lie_down",
            Activity::PickUp => "pick_up",
            Activity::Run => "run",
            Activity::Sit => "sit",
            Activity::StandUp => "stand_up",
            Activity::Walk => "walk",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| s.to_string())
    }
}

/// One labeled window: `series[t][f]`, `T >= 8` steps of `F >= 1` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySample {
    pub label: Activity,
    series: Vec<Vec<f64>>,
}

impl ActivitySample {
    pub fn new(label: Activity, series: Vec<Vec<f64>>) -> Result<Self, ClassifyError> {
        if series.len() < MIN_TIME_STEPS {
            return Err(ClassifyError::TooShort { len: series.len(), need: MIN_TIME_STEPS });
        }
        let f = series[0].len();
        if f == 0 {
            return Err(ClassifyError::BadSample("zero channels".into()));
        }
        if series.iter().any(|row| row.len() != f) {
            return Err(ClassifyError::BadSample("ragged channel count".into()));
        }
        if series.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ClassifyError::BadSample("non-finite value".into()));
        }
        Ok(Self { label, series })
    }

    pub fn series(&self) -> &[Vec<f64>] {
        &self.series
    }

    pub fn time_steps(&self) -> usize {
        self.series.len()
    }

    pub fn channels(&self) -> usize {
        self.series[0].len()
    }

    /// One channel as a time series.
    pub fn channel(&self, f: usize) -> Vec<f64> {
        self.series.iter().map(|row| row[f]).collect()
    }
}

/// Accuracy and confusion matrix (`rows = true`, `columns = predicted`).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl Evaluation {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Activity, Activity)>) -> Result<Self, ClassifyError> {
        let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
        let mut total = 0usize;
        for (truth, pred) in pairs {
            confusion[truth.index()][pred.index()] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(ClassifyError::EmptyDataset);
        }
        let correct: usize = (0..NUM_CLASSES).map(|i| confusion[i][i]).sum();
        Ok(Self { accuracy: correct as f64 / total as f64, confusion })
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy {:.4}", self.accuracy)?;
        write!(f, "{:>9}", "")?;
        for a in Activity::ALL {
            write!(f, "{:>9}", a.name())?;
        }
        for a in Activity::ALL {
            writeln!(f)?;
            write!(f, "{:>9}", a.name())?;
            for n in self.confusion[a.index()] {
                write!(f, "{n:>9}")?;
            }
        }
        Ok(())
    }
}

/// Runs `predict` over every test sample.
pub fn evaluate<F>(mut predict: F, test: &[ActivitySample]) -> Result<Evaluation, ClassifyError>
where
    F: FnMut(&ActivitySample) -> Activity,
{
    Evaluation::from_pairs(test.iter().map(|s| (s.label, predict(s))))
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
