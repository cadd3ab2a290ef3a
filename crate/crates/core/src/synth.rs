//! Seeded synthetic CSI channel.
//!
//! A static complex channel `H` is drawn once per seed. Each packet carries
//! `H * (1 + m(t))` plus per-component Gaussian noise, where `m(t)` is a
//! sinusoidal modulation active only while a [`MotionEvent`] covers `t`.
//! Every entry gets its own modulation phase, so motion changes how power
//! is spread across subcarriers and antennas, not just the overall level.
//!
//! Also hosts two smaller generators used by the learning components: a
//! labeled six-class oscillation dataset and a periodic amplitude trace with
//! injected transients.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::classify::{Activity, ActivitySample};
use crate::wire::{CsiHeader, CsiMatrix, CsiPacket, MAX_ANTENNAS, SUBCARRIERS};

/// Largest allowed static magnitude, leaving room for modulation before
/// the int8 clamp.
pub const MAX_BASE_AMP: f64 = 90.0;

const RSSI: u8 = 30;
const NOISE_DBM: i8 = -90;
const RATE_CODE: u16 = 0x1c;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("motion event [{t_start}, {t_end}] s lies outside the {duration} s stream or is empty")]
    EventOutOfRange { t_start: f64, t_end: f64, duration: f64 },
    #[error("invalid channel config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub ntx: u8,
    pub nrx: u8,
    /// Uniform range for static entry magnitudes, in raw int8 units.
    pub base_amp_range: (f64, f64),
    /// Standard deviation of the noise added to each real and imaginary part.
    pub noise_sigma: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { ntx: 3, nrx: 3, base_amp_range: (20.0, 60.0), noise_sigma: 1.0, rate_hz: 100.0, seed: 0 }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::BadConfig(m.into()));
        if !(1..=MAX_ANTENNAS).contains(&self.ntx) || !(1..=MAX_ANTENNAS).contains(&self.nrx) {
            return bad("antenna counts must be 1..=3");
        }
        let (lo, hi) = self.base_amp_range;
        if !(0.0..=MAX_BASE_AMP).contains(&lo) || !(lo..=MAX_BASE_AMP).contains(&hi) {
            return bad("base_amp_range must satisfy 0 <= lo <= hi <= 90");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and >= 0");
        }
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return bad("rate_hz must be positive");
        }
        Ok(())
    }

    fn entry_count(&self) -> usize {
        SUBCARRIERS * self.ntx as usize * self.nrx as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub depth: f64,
    pub doppler_hz: f64,
}

impl MotionEvent {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self { t_start, t_end, depth: 0.5, doppler_hz: 2.0 }
    }

    /// Half-open: `[t_start, t_end)`.
    pub fn covers(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end
    }
}

/// Time-invariant channel, entries in wire order.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticChannel {
    pub ntx: u8,
    pub nrx: u8,
    pub entries: Vec<Complex<f64>>,
}

pub fn gen_baseline(cfg: &ChannelConfig) -> Result<StaticChannel, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.base_amp_range;
    let entries = (0..cfg.entry_count())
        .map(|_| {
            let mag = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let phase = rng.gen_range(0.0..2.0 * PI);
            Complex::from_polar(mag, phase)
        })
        .collect();
    Ok(StaticChannel { ntx: cfg.ntx, nrx: cfg.nrx, entries })
}

/// A generated packet with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPacket {
    pub packet: CsiPacket,
    pub t: f64,
    pub in_motion: bool,
}

/// Lazily generates the packet stream described by [`gen_stream`].
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    channel: StaticChannel,
    phases: Vec<f64>,
    events: Vec<MotionEvent>,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    rate_hz: f64,
    index: u64,
    count: u64,
}

impl StreamGenerator {
    pub fn new(cfg: &ChannelConfig, duration_s: f64, events: &[MotionEvent]) -> Result<Self, SynthError> {
        let channel = gen_baseline(cfg)?;
        if !(duration_s >= 0.0 && duration_s.is_finite()) {
            return Err(SynthError::BadConfig("duration must be finite and >= 0".into()));
        }
        for e in events {
            let ok = e.t_start >= 0.0 && e.t_start < e.t_end && e.t_end <= duration_s && e.depth >= 0.0;
            if !ok {
                return Err(SynthError::EventOutOfRange { t_start: e.t_start, t_end: e.t_end, duration: duration_s });
            }
        }
        let mut phase_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        phase_rng.set_stream(1);
        let phases = (0..channel.entries.len()).map(|_| phase_rng.gen_range(0.0..2.0 * PI)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(2);
        let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).expect("valid sigma"));
        Ok(Self {
            channel,
            phases,
            events: events.to_vec(),
            noise,
            rng,
            rate_hz: cfg.rate_hz,
            index: 0,
            count: (duration_s * cfg.rate_hz).round() as u64,
        })
    }

    pub fn channel(&self) -> &StaticChannel {
        &self.channel
    }

    fn packet_at(&mut self, i: u64) -> LabeledPacket {
        let t = i as f64 / self.rate_hz;
        let active: Vec<&MotionEvent> = self.events.iter().filter(|e| e.covers(t)).collect();
        let entries = self
            .channel
            .entries
            .iter()
            .zip(&self.phases)
            .map(|(h, &phi)| {
                let m: f64 = active.iter().map(|e| e.depth * (2.0 * PI * e.doppler_hz * t + phi).sin()).sum();
                let mut v = h * (1.0 + m);
                if let Some(noise) = &self.noise {
                    v.re += noise.sample(&mut self.rng);
                    v.im += noise.sample(&mut self.rng);
                }
                Complex::new(quantize(v.re), quantize(v.im))
            })
            .collect();
        let matrix = CsiMatrix::from_entries(self.channel.ntx, self.channel.nrx, entries).expect("layout from config");
        let header = CsiHeader {
            timestamp: ((i as f64 * 1e6 / self.rate_hz).round() as u64 & 0xFFFF_FFFF) as u32,
            bfee_count: (i & 0xFFFF) as u16,
            rssi_a: RSSI,
            rssi_b: RSSI,
            rssi_c: RSSI,
            noise: NOISE_DBM,
            agc: 0,
            antenna_sel: 0,
            rate: RATE_CODE,
            ..CsiHeader::default()
        };
        LabeledPacket { packet: CsiPacket::new(header, matrix), t, in_motion: !active.is_empty() }
    }
}

fn quantize(x: f64) -> i8 {
    x.round().clamp(-127.0, 127.0) as i8
}

impl Iterator for StreamGenerator {
    type Item = LabeledPacket;

    fn next(&mut self) -> Option<LabeledPacket> {
        if self.index >= self.count {
            return None;
        }
        let p = self.packet_at(self.index);
        self.index += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.index) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for StreamGenerator {}

/// `round(duration_s * rate_hz)` packets at exact `1 / rate_hz` spacing.
pub fn gen_stream(cfg: &ChannelConfig, duration_s: f64, events: &[MotionEvent]) -> Result<Vec<LabeledPacket>, SynthError> {
    Ok(StreamGenerator::new(cfg, duration_s, events)?.collect())
}

/// Writes the `timestamp_us,in_motion` sidecar for a generated stream.
pub fn write_labels(path: &Path, packets: &[LabeledPacket]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "timestamp_us,in_motion")?;
    for p in packets {
        writeln!(w, "{},{}", p.packet.header.timestamp, u8::from(p.in_motion))?;
    }
    w.flush()
}

/// Reads a label sidecar back as `(timestamp_us, in_motion)` pairs.
pub fn read_labels(path: &Path) -> io::Result<Vec<(u64, bool)>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |n: usize| io::Error::new(io::ErrorKind::InvalidData, format!("bad label line {n}"));
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(n, line)| {
            let (ts, flag) = line.split_once(',').ok_or_else(|| bad(n + 1))?;
            let ts = ts.parse().map_err(|_| bad(n + 1))?;
            match flag {
                "0" => Ok((ts, false)),
                "1" => Ok((ts, true)),
                _ => Err(bad(n + 1)),
            }
        })
        .collect()
}

/// Oscillation frequency (cycles per sample) that identifies each class in
/// [`gen_activity_dataset`], indexed like [`Activity::ALL`].
pub const ACTIVITY_FREQUENCIES: [f64; 6] = [0.02, 0.045, 0.08, 0.13, 0.2, 0.3];

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityConfig {
    pub per_class: usize,
    pub time_steps: usize,
    pub channels: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        Self { per_class: 50, time_steps: 64, channels: 1, noise_sigma: 0.15, seed: 0 }
    }
}

/// Six-class set where each class oscillates at its own frequency with
/// random phase, amplitude in [0.8, 1.2], ±3% frequency jitter and additive
/// noise. Samples are interleaved by class.
pub fn gen_activity_dataset(cfg: &ActivityConfig) -> Vec<ActivitySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("finite sigma");
    let mut out = Vec::with_capacity(6 * cfg.per_class);
    for _ in 0..cfg.per_class {
        for (class, &freq) in Activity::ALL.iter().zip(&ACTIVITY_FREQUENCIES) {
            let f = freq * rng.gen_range(0.97..1.03);
            let channel_params: Vec<(f64, f64)> =
                (0..cfg.channels).map(|_| (rng.gen_range(0.8..1.2), rng.gen_range(0.0..2.0 * PI))).collect();
            let series = (0..cfg.time_steps)
                .map(|t| {
                    channel_params
                        .iter()
                        .map(|&(amp, phase)| amp * (2.0 * PI * f * t as f64 + phase).sin() + noise.sample(&mut rng))
                        .collect()
                })
                .collect();
            out.push(ActivitySample::new(*class, series).expect("generated shape is valid"));
        }
    }
    out
}

/// Periodic amplitude trace with labeled transient bursts.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub len: usize,
    /// Baseline period in samples.
    pub period: f64,
    pub amplitude: f64,
    pub noise_sigma: f64,
    /// `(start, length)` of each transient, in samples.
    pub transients: Vec<(usize, usize)>,
    pub transient_amplitude: f64,
    pub transient_period: f64,
    pub seed: u64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            len: 4096,
            period: 64.0,
            amplitude: 1.0,
            noise_sigma: 0.05,
            transients: Vec::new(),
            transient_amplitude: 1.0,
            transient_period: 23.0,
            seed: 0,
        }
    }
}

/// Returns the trace and a per-sample "inside a transient" label.
pub fn gen_periodic_trace(cfg: &TraceConfig) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("finite sigma");
    let mut labels = vec![false; cfg.len];
    for &(start, len) in &cfg.transients {
        for l in labels.iter_mut().skip(start).take(len) {
            *l = true;
        }
    }
    let series = (0..cfg.len)
        .map(|i| {
            let t = i as f64;
            let mut x = cfg.amplitude * (2.0 * PI * t / cfg.period).sin() + noise.sample(&mut rng);
            if labels[i] {
                x += cfg.transient_amplitude * (2.0 * PI * t / cfg.transient_period).sin();
            }
            x
        })
        .collect();
    (series, labels)
}
