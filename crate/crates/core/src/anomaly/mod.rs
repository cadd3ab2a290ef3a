//! Shape-library anomaly detection.
//!
//! A series is cut into overlapping segments, each tapered to zero at both
//! ends by a half-sine window. K-means over the tapered segments yields a
//! library of typical shapes. To score a series, every segment is replaced by
//! its nearest shape and the shapes are overlap-added back together; samples
//! the library cannot rebuild carry a large reconstruction error.

pub mod kmeans;

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub use kmeans::{KMeansFit, KMeansOptions};

#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("series of {len} samples is shorter than the segment length {need}")]
    TooShort { len: usize, need: usize },
    #[error("{have} segments cannot form {k} clusters")]
    TooFewSegments { have: usize, k: usize },
    #[error("need at least 2 error samples to calibrate (got {0})")]
    TooFew(usize),
    #[error("invalid segment config: {0}")]
    BadConfig(String),
    #[error("bad library file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    pub segment_len: usize,
    pub stride: usize,
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { segment_len: 64, stride: 32, k: 8, max_iters: 100, tol: 1e-6, seed: 0 }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), AnomalyError> {
        let bad = |m: String| Err(AnomalyError::BadConfig(m));
        if self.segment_len < 4 {
            return bad(format!("segment length {} < 4", self.segment_len));
        }
        if self.stride < 2 || self.stride > self.segment_len {
            return bad(format!("stride {} outside 2..={}", self.stride, self.segment_len));
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        Ok(())
    }
}

/// Half-sine taper `sin(pi * n / (L - 1))` with exact zeros at both ends.
pub fn window(len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| {
            // mirror so the last tap is sin(0) rather than sin(pi)
            let m = n.min(len - 1 - n) as f64;
            (std::f64::consts::PI * m / denom).sin()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub offset: usize,
    pub values: Vec<f64>,
}

/// Windowed segments starting at `0, S, 2S, ...` while they fit.
pub fn segment_and_window(series: &[f64], cfg: &SegmentConfig) -> Result<Vec<Segment>, AnomalyError> {
    cfg.validate()?;
    let l = cfg.segment_len;
    if series.len() < l {
        return Err(AnomalyError::TooShort { len: series.len(), need: l });
    }
    let w = window(l);
    Ok((0..=(series.len() - l))
        .step_by(cfg.stride)
        .map(|offset| Segment {
            offset,
            values: series[offset..offset + l].iter().zip(&w).map(|(x, wi)| x * wi).collect(),
        })
        .collect())
}

/// Learned shapes plus the training error statistics used for thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeLibrary {
    pub config: SegmentConfig,
    pub centroids: Vec<Vec<f64>>,
    pub error_mean: f64,
    pub error_std: f64,
}

/// Clusters windowed segments into a library. Error statistics are left at
/// zero; [`ShapeLibrary::train`] fills them in.
pub fn kmeans_fit(segments: &[Segment], cfg: &SegmentConfig) -> Result<ShapeLibrary, AnomalyError> {
    Ok(kmeans_fit_traced(segments, cfg, false)?.0)
}

/// Like [`kmeans_fit`], also returning the clustering run itself.
pub fn kmeans_fit_traced(
    segments: &[Segment],
    cfg: &SegmentConfig,
    trace: bool,
) -> Result<(ShapeLibrary, KMeansFit), AnomalyError> {
    cfg.validate()?;
    if segments.len() < cfg.k {
        return Err(AnomalyError::TooFewSegments { have: segments.len(), k: cfg.k });
    }
    let points: Vec<Vec<f64>> = segments.iter().map(|s| s.values.clone()).collect();
    let opts = KMeansOptions { k: cfg.k, max_iters: cfg.max_iters, tol: cfg.tol, seed: cfg.seed };
    let fit = kmeans::fit(&points, &opts, trace);
    let lib = ShapeLibrary { config: cfg.clone(), centroids: fit.centroids.clone(), error_mean: 0.0, error_std: 0.0 };
    Ok((lib, fit))
}

impl ShapeLibrary {
    /// Segments, clusters and calibrates on a motion-free training series.
    pub fn train(series: &[f64], cfg: &SegmentConfig) -> Result<Self, AnomalyError> {
        let segments = segment_and_window(series, cfg)?;
        let mut lib = kmeans_fit(&segments, cfg)?;
        let errors = error_series(series, &lib)?;
        let train: Vec<f64> = errors.values.iter().zip(&errors.valid).filter(|(_, &v)| v).map(|(e, _)| *e).collect();
        let cal = calibrate_threshold(&train, 0.0)?;
        lib.error_mean = cal.mean;
        lib.error_std = cal.std;
        Ok(lib)
    }

    pub fn segment_len(&self) -> usize {
        self.config.segment_len
    }

    pub fn threshold(&self, c: f64) -> f64 {
        self.error_mean + c * self.error_std
    }
}

/// Overlap-add reconstruction. `valid[t]` is false where the summed window
/// is below 1e-6; those samples copy the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

pub fn reconstruct(series: &[f64], lib: &ShapeLibrary) -> Result<Reconstruction, AnomalyError> {
    let segments = segment_and_window(series, &lib.config)?;
    let w = window(lib.config.segment_len);
    let mut acc = vec![0.0; series.len()];
    let mut wsum = vec![0.0; series.len()];
    for seg in &segments {
        let (j, _) = kmeans::nearest(&seg.values, &lib.centroids);
        for (n, (c, wn)) in lib.centroids[j].iter().zip(&w).enumerate() {
            acc[seg.offset + n] += c;
            wsum[seg.offset + n] += wn;
        }
    }
    let valid: Vec<bool> = wsum.iter().map(|&s| s >= 1e-6).collect();
    let values = series
        .iter()
        .zip(acc.iter().zip(&wsum))
        .zip(&valid)
        .map(|((&x, (&a, &s)), &ok)| if ok { a / s } else { x })
        .collect();
    Ok(Reconstruction { values, valid })
}

/// Smoothed squared reconstruction error with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Squared error, averaged over a centered `L`-sample window of valid
/// samples. Invalid samples report 0.
pub fn error_series(series: &[f64], lib: &ShapeLibrary) -> Result<ErrorSeries, AnomalyError> {
    let recon = reconstruct(series, lib)?;
    let raw: Vec<f64> = series
        .iter()
        .zip(&recon.values)
        .zip(&recon.valid)
        .map(|((x, r), &ok)| if ok { (x - r) * (x - r) } else { 0.0 })
        .collect();
    let n = raw.len();
    let mut sum = vec![0.0; n + 1];
    let mut cnt = vec![0usize; n + 1];
    for i in 0..n {
        sum[i + 1] = sum[i] + raw[i];
        cnt[i + 1] = cnt[i] + usize::from(recon.valid[i]);
    }
    let half = lib.config.segment_len / 2;
    let values = (0..n)
        .map(|t| {
            if !recon.valid[t] {
                return 0.0;
            }
            let lo = t.saturating_sub(half);
            let hi = (t + lib.config.segment_len - half).min(n);
            (sum[hi] - sum[lo]) / (cnt[hi] - cnt[lo]) as f64
        })
        .collect();
    Ok(ErrorSeries { values, valid: recon.valid })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub mean: f64,
    pub std: f64,
}

/// `threshold = mean + c * std` (population std) of the training error.
pub fn calibrate_threshold(train_error: &[f64], c: f64) -> Result<Calibration, AnomalyError> {
    if train_error.len() < 2 {
        return Err(AnomalyError::TooFew(train_error.len()));
    }
    let (mean, var) = crate::dsp::mean_variance(train_error);
    let std = var.sqrt();
    Ok(Calibration { threshold: mean + c * std, mean, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    pub error_series: Vec<f64>,
    pub valid: Vec<bool>,
    pub threshold: f64,
    /// Inclusive `[start, end]` sample ranges, sorted and disjoint.
    pub intervals: Vec<(usize, usize)>,
}

impl AnomalyReport {
    pub fn is_above(&self, t: usize) -> bool {
        self.valid[t] && self.error_series[t] > self.threshold
    }

    /// Fraction of samples flagged.
    pub fn coverage(&self) -> f64 {
        let flagged: usize = self.intervals.iter().map(|(a, b)| b - a + 1).sum();
        flagged as f64 / self.error_series.len().max(1) as f64
    }

    /// Writes `sample_idx,error,above_threshold` rows.
    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "sample_idx,error,above_threshold")?;
        for (i, e) in self.error_series.iter().enumerate() {
            writeln!(w, "{i},{e},{}", u8::from(self.is_above(i)))?;
        }
        w.flush()
    }
}

/// Maximal runs of `true`, as inclusive index ranges.
pub fn runs(flags: impl IntoIterator<Item = bool>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut len = 0;
    for (i, f) in flags.into_iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
        len = i + 1;
    }
    if let Some(s) = start {
        out.push((s, len - 1));
    }
    out
}

pub fn detect_anomalies(series: &[f64], lib: &ShapeLibrary, c: f64) -> Result<AnomalyReport, AnomalyError> {
    let errors = error_series(series, lib)?;
    let threshold = lib.threshold(c);
    let intervals = runs(errors.values.iter().zip(&errors.valid).map(|(&e, &ok)| ok && e > threshold));
    Ok(AnomalyReport { error_series: errors.values, valid: errors.valid, threshold, intervals })
}

/// Area under the ROC curve of `scores` against binary `labels`
/// (Mann-Whitney statistic, ties counted half). NaN if a class is absent.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len());
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // average 1-based rank of the tie group
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg;
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return f64::NAN;
    }
    (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

const LIBRARY_MAGIC: &[u8; 4] = b"CSLB";
const LIBRARY_VERSION: u32 = 1;

impl ShapeLibrary {
    /// Flat little-endian file: magic, version, `L, S, k` as u64, error mean
    /// and std as f64, then `k * L` centroid values as f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(LIBRARY_MAGIC);
        out.extend_from_slice(&LIBRARY_VERSION.to_le_bytes());
        for v in [self.config.segment_len, self.config.stride, self.centroids.len()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.error_mean.to_le_bytes());
        out.extend_from_slice(&self.error_std.to_le_bytes());
        for c in &self.centroids {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AnomalyError> {
        let fmt = |m: &str| AnomalyError::Format(m.into());
        if bytes.len() < 48 || &bytes[..4] != LIBRARY_MAGIC {
            return Err(fmt("missing magic"));
        }
        let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != LIBRARY_VERSION {
            return Err(AnomalyError::Format(format!("unsupported version {version}")));
        }
        let l = u64::from_le_bytes(word(8)) as usize;
        let s = u64::from_le_bytes(word(16)) as usize;
        let k = u64::from_le_bytes(word(24)) as usize;
        let error_mean = f64::from_le_bytes(word(32));
        let error_std = f64::from_le_bytes(word(40));
        let want = k.checked_mul(l).and_then(|n| n.checked_mul(8)).and_then(|n| n.checked_add(48));
        if want != Some(bytes.len()) {
            return Err(fmt("size does not match header"));
        }
        let centroids = (0..k)
            .map(|j| (0..l).map(|n| f64::from_le_bytes(word(48 + 8 * (j * l + n)))).collect())
            .collect();
        let config = SegmentConfig { segment_len: l, stride: s, k, ..SegmentConfig::default() };
        config.validate()?;
        Ok(Self { config, centroids, error_mean, error_std })
    }

    pub fn save(&self, path: &Path) -> Result<(), AnomalyError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AnomalyError> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
