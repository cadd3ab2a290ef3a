//! Amplitude signal path: RSSI/AGC rescaling, subcarrier amplitude in dB,
//! five-point smoothing and sliding-window variance.

use std::collections::VecDeque;

use thiserror::Error;

use crate::wire::{CsiHeader, CsiMatrix, CsiPacket, SUBCARRIERS};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DspError {
    #[error("all RSSI fields are zero; packet cannot be scaled")]
    InvalidScale,
    #[error("CSI matrix carries zero power")]
    ZeroPower,
    #[error("variance window must be at least 2 (got {0})")]
    BadWindow(usize),
    #[error("subcarrier {0} out of range")]
    BadSubcarrier(usize),
}

/// One processed measurement: the row that is stored and plotted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRecord {
    pub packet_id: u64,
    pub timestamp_us: u64,
    pub amplitude_db: f64,
    pub amplitude_smoothed: f64,
    /// Population variance of `amplitude_db` over the trailing window (dB²).
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DspConfig {
    pub variance_window: usize,
    pub smoothing_window: usize,
    pub subcarrier: usize,
    pub db_floor: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self { variance_window: 20, smoothing_window: 5, subcarrier: 0, db_floor: -100.0 }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.variance_window < 2 {
            return Err(DspError::BadWindow(self.variance_window));
        }
        if self.smoothing_window < 1 {
            return Err(DspError::BadWindow(self.smoothing_window));
        }
        if self.subcarrier >= SUBCARRIERS {
            return Err(DspError::BadSubcarrier(self.subcarrier));
        }
        Ok(())
    }
}

/// Total received power in dBm from the per-chain RSSI, less the fixed
/// 44 dB offset and the AGC gain.
pub fn total_rss_dbm(header: &CsiHeader) -> Result<f64, DspError> {
    let linear: f64 = header
        .rssi()
        .iter()
        .filter(|&&r| r != 0)
        .map(|&r| 10f64.powf(f64::from(r) / 10.0))
        .sum();
    if linear == 0.0 {
        return Err(DspError::InvalidScale);
    }
    Ok(10.0 * linear.log10() - 44.0 - f64::from(header.agc))
}

/// Sum of squared magnitudes over every entry of every subcarrier.
pub fn csi_power(matrix: &CsiMatrix) -> f64 {
    matrix.entries().iter().map(|e| f64::from(e.re).powi(2) + f64::from(e.im).powi(2)).sum()
}

/// Linear power factor that maps raw CSI into absolute units.
///
/// Multiply raw entries by `scale.sqrt()`.
pub fn compute_scale(header: &CsiHeader, matrix: &CsiMatrix) -> Result<f64, DspError> {
    let rss = total_rss_dbm(header)?;
    let pwr = csi_power(matrix);
    if pwr == 0.0 {
        return Err(DspError::ZeroPower);
    }
    Ok(10f64.powf(rss / 10.0) / (pwr / SUBCARRIERS as f64))
}

/// Frobenius norm of the scaled subcarrier slice, in dB, floored at `db_floor`.
pub fn amplitude_db(packet: &CsiPacket, cfg: &DspConfig) -> Result<f64, DspError> {
    if cfg.subcarrier >= SUBCARRIERS {
        return Err(DspError::BadSubcarrier(cfg.subcarrier));
    }
    let scale = compute_scale(&packet.header, &packet.matrix)?;
    let raw_pwr: f64 = packet
        .matrix
        .subcarrier_entries(cfg.subcarrier)
        .iter()
        .map(|e| f64::from(e.re).powi(2) + f64::from(e.im).powi(2))
        .sum();
    let norm = (scale * raw_pwr).sqrt();
    if norm <= 10f64.powf(cfg.db_floor / 20.0) {
        return Ok(cfg.db_floor);
    }
    Ok(20.0 * norm.log10())
}

/// Causal moving average; warms up with the mean of the available prefix.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buf: VecDeque<f64>,
}

impl MovingAverage {
    /// # Panics
    /// If `window` is zero.
    pub fn new(window: usize) -> Self {
        assert!(window >= 1);
        Self { window, buf: VecDeque::with_capacity(window) }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(x);
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

/// Population variance over the trailing `window` samples.
///
/// Recomputed two-pass over the window on every push; windows are short.
#[derive(Debug, Clone)]
pub struct WindowedVariance {
    window: usize,
    buf: VecDeque<f64>,
}

impl WindowedVariance {
    pub fn new(window: usize) -> Result<Self, DspError> {
        if window < 2 {
            return Err(DspError::BadWindow(window));
        }
        Ok(Self { window, buf: VecDeque::with_capacity(window) })
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(x);
        let (a, b) = self.buf.as_slices();
        mean_variance(a.iter().chain(b)).1
    }
}

/// Two-pass population mean and variance. Values are shifted by the first
/// element, so a constant input yields exactly its value and variance 0.
pub fn mean_variance<'a, I>(xs: I) -> (f64, f64)
where
    I: IntoIterator<Item = &'a f64>,
    I::IntoIter: Clone,
{
    let it = xs.into_iter();
    let Some(&shift) = it.clone().next() else {
        return (f64::NAN, f64::NAN);
    };
    let (sum, n) = it.clone().fold((0.0, 0usize), |(s, n), x| (s + (x - shift), n + 1));
    let d = sum / n as f64;
    let var = it.map(|x| (x - shift - d) * (x - shift - d)).sum::<f64>() / n as f64;
    (shift + d, var)
}

/// Five-point causal moving average of a whole sequence.
pub fn moving_average(stream: &[f64]) -> Vec<f64> {
    moving_average_with(stream, 5)
}

pub fn moving_average_with(stream: &[f64], window: usize) -> Vec<f64> {
    let mut ma = MovingAverage::new(window);
    stream.iter().map(|&x| ma.push(x)).collect()
}

pub fn windowed_variance(stream: &[f64], window: usize) -> Result<Vec<f64>, DspError> {
    let mut wv = WindowedVariance::new(window)?;
    Ok(stream.iter().map(|&x| wv.push(x)).collect())
}

/// Turns a packet stream into [`AmplitudeRecord`]s.
///
/// Assigns packet ids from 1 and extends the 32-bit header tick to 64 bits
/// across wraparound.
#[derive(Debug, Clone)]
pub struct AmplitudeTracker {
    cfg: DspConfig,
    next_id: u64,
    smoother: MovingAverage,
    variance: WindowedVariance,
    last_tick: Option<u32>,
    epoch: u64,
}

impl AmplitudeTracker {
    pub fn new(cfg: DspConfig) -> Result<Self, DspError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            next_id: 1,
            smoother: MovingAverage::new(cfg.smoothing_window),
            variance: WindowedVariance::new(cfg.variance_window)?,
            last_tick: None,
            epoch: 0,
        })
    }

    /// Continues numbering from `id` instead of 1.
    pub fn with_first_id(mut self, id: u64) -> Self {
        self.next_id = id;
        self
    }

    pub fn config(&self) -> &DspConfig {
        &self.cfg
    }

    /// Unscalable packets are rejected without consuming an id.
    pub fn process(&mut self, packet: &CsiPacket) -> Result<AmplitudeRecord, DspError> {
        let amplitude = amplitude_db(packet, &self.cfg)?;
        let tick = packet.header.timestamp;
        if self.last_tick.is_some_and(|last| tick < last) {
            self.epoch += 1 << 32;
        }
        self.last_tick = Some(tick);
        let rec = AmplitudeRecord {
            packet_id: self.next_id,
            timestamp_us: self.epoch + u64::from(tick),
            amplitude_db: amplitude,
            amplitude_smoothed: self.smoother.push(amplitude),
            variance: self.variance.push(amplitude),
        };
        self.next_id += 1;
        Ok(rec)
    }
}

/// Median of a slice (mean of the middle pair for even lengths). NaN on empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Motion threshold on windowed variance: `factor` times the median of a
/// motion-free calibration stretch.
pub fn motion_threshold(calibration_variance: &[f64], factor: f64) -> f64 {
    factor * median(calibration_variance)
}
