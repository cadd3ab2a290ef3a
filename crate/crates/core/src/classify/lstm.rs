//! Single-layer LSTM classifier trained with backpropagation through time.
//!
//! ```text
//! z_t = W x_t + U h_{t-1} + b          gates in order i, f, o, g
//! c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
//! p   = softmax(Wd (mask * h_T) + bd)
//! ```
//!
//! `mask` is inverted dropout during training and all ones otherwise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model_io::{Reader, Writer, LSTM_MAGIC};
use super::{argmax, Activity, ActivitySample, ClassifyError, NUM_CLASSES};

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.5;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub seed: u64,
    /// `W (4H x F)`, `U (4H x H)`, `b (4H)`, `Wd (6 x H)`, `bd (6)`, row-major.
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    f: usize,
    h: usize,
}

impl Layout {
    fn w(&self) -> usize {
        0
    }
    fn u(&self) -> usize {
        4 * self.h * self.f
    }
    fn b(&self) -> usize {
        self.u() + 4 * self.h * self.h
    }
    fn wd(&self) -> usize {
        self.b() + 4 * self.h
    }
    fn bd(&self) -> usize {
        self.wd() + NUM_CLASSES * self.h
    }
    fn len(&self) -> usize {
        self.bd() + NUM_CLASSES
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = logits.map(|l| (l - max).exp());
    let z: f64 = p.iter().sum();
    for v in &mut p {
        *v /= z;
    }
    p
}

struct Step {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, `4H`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmModel {
    /// Xavier-uniform weights, zero biases except the forget gate at +1.
    pub fn new(input_dim: usize, hidden: usize, dropout: f64, seed: u64) -> Result<Self, ClassifyError> {
        if input_dim == 0 || hidden == 0 {
            return Err(ClassifyError::BadSample("input and hidden sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(ClassifyError::BadSample(format!("dropout {dropout} outside [0, 1)")));
        }
        let lay = Layout { f: input_dim, h: hidden };
        let mut params = vec![0.0; lay.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in slice {
                *p = rng.gen_range(-a..a);
            }
        };
        let (f, h) = (input_dim, hidden);
        fill(&mut params[lay.w()..lay.u()], f, h);
        fill(&mut params[lay.u()..lay.b()], h, h);
        fill(&mut params[lay.wd()..lay.bd()], h, NUM_CLASSES);
        for p in &mut params[lay.b() + h..lay.b() + 2 * h] {
            *p = 1.0;
        }
        Ok(Self { input_dim, hidden, dropout, seed, params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> Layout {
        Layout { f: self.input_dim, h: self.hidden }
    }

    fn check(&self, s: &ActivitySample) -> Result<(), ClassifyError> {
        if s.channels() != self.input_dim {
            return Err(ClassifyError::DimMismatch { expected: self.input_dim, found: s.channels() });
        }
        Ok(())
    }

    fn run(&self, series: &[Vec<f64>], steps: Option<&mut Vec<Step>>) -> Vec<f64> {
        let lay = self.layout();
        let (f, h) = (lay.f, lay.h);
        let p = &self.params;
        let (w, u, b) = (&p[lay.w()..lay.u()], &p[lay.u()..lay.b()], &p[lay.b()..lay.wd()]);
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        let mut record = steps;
        for x in series {
            for r in 0..4 * h {
                let wr = &w[r * f..(r + 1) * f];
                let ur = &u[r * h..(r + 1) * h];
                let mut acc = b[r];
                acc += wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                acc += ur.iter().zip(&hs).map(|(a, b)| a * b).sum::<f64>();
                z[r] = acc;
            }
            for r in 0..3 * h {
                z[r] = sigmoid(z[r]);
            }
            for r in 3 * h..4 * h {
                z[r] = z[r].tanh();
            }
            let c_prev = cs.clone();
            let mut tanh_c = vec![0.0; h];
            for k in 0..h {
                cs[k] = z[h + k] * c_prev[k] + z[k] * z[3 * h + k];
                tanh_c[k] = cs[k].tanh();
            }
            let h_prev = std::mem::replace(&mut hs, (0..h).map(|k| z[2 * h + k] * tanh_c[k]).collect());
            if let Some(steps) = record.as_deref_mut() {
                steps.push(Step { h_prev, c_prev, gates: z.clone(), tanh_c });
            }
        }
        hs
    }

    fn logits(&self, hidden: &[f64]) -> [f64; NUM_CLASSES] {
        let lay = self.layout();
        let wd = &self.params[lay.wd()..lay.bd()];
        let bd = &self.params[lay.bd()..];
        std::array::from_fn(|c| bd[c] + wd[c * lay.h..(c + 1) * lay.h].iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Class probabilities with dropout disabled.
    pub fn probabilities(&self, sample: &ActivitySample) -> Result<[f64; NUM_CLASSES], ClassifyError> {
        self.check(sample)?;
        Ok(softmax(&self.logits(&self.run(sample.series(), None))))
    }

    pub fn predict(&self, sample: &ActivitySample) -> Result<Activity, ClassifyError> {
        Ok(Activity::ALL[argmax(&self.probabilities(sample)?)])
    }

    /// Mean cross-entropy over `samples`, dropout disabled.
    pub fn loss(&self, samples: &[ActivitySample]) -> Result<f64, ClassifyError> {
        for s in samples {
            self.check(s)?;
        }
        let seqs: Vec<(&[Vec<f64>], Activity)> = samples.iter().map(|s| (s.series(), s.label)).collect();
        self.sequence_loss(&seqs)
    }

    /// Mean cross-entropy and its exact gradient over `batch`, dropout
    /// disabled.
    pub fn loss_and_gradient(&self, batch: &[ActivitySample]) -> Result<(f64, Vec<f64>), ClassifyError> {
        for s in batch {
            self.check(s)?;
        }
        let seqs: Vec<(&[Vec<f64>], Activity)> = batch.iter().map(|s| (s.series(), s.label)).collect();
        self.sequence_loss_and_gradient(&seqs)
    }

    fn check_seqs(&self, seqs: &[(&[Vec<f64>], Activity)]) -> Result<(), ClassifyError> {
        if seqs.is_empty() {
            return Err(ClassifyError::EmptyDataset);
        }
        for (series, _) in seqs {
            if let Some(row) = series.iter().find(|r| r.len() != self.input_dim) {
                return Err(ClassifyError::DimMismatch { expected: self.input_dim, found: row.len() });
            }
        }
        Ok(())
    }

    /// [`loss`](Self::loss) on bare sequences of any length.
    pub fn sequence_loss(&self, seqs: &[(&[Vec<f64>], Activity)]) -> Result<f64, ClassifyError> {
        self.check_seqs(seqs)?;
        let mut total = 0.0;
        for (series, label) in seqs {
            let p = softmax(&self.logits(&self.run(series, None)));
            total -= p[label.index()].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / seqs.len() as f64)
    }

    /// [`loss_and_gradient`](Self::loss_and_gradient) on bare sequences of
    /// any length.
    pub fn sequence_loss_and_gradient(
        &self,
        seqs: &[(&[Vec<f64>], Activity)],
    ) -> Result<(f64, Vec<f64>), ClassifyError> {
        self.check_seqs(seqs)?;
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate(seqs, &mut grad, None);
        Ok((loss, grad))
    }

    /// Adds the batch-mean gradient into `grad` and returns the mean loss.
    fn accumulate(&self, batch: &[(&[Vec<f64>], Activity)], grad: &mut [f64], mut rng: Option<&mut ChaCha8Rng>) -> f64 {
        let lay = self.layout();
        let (f, h) = (lay.f, lay.h);
        let n = batch.len() as f64;
        let keep = 1.0 - self.dropout;
        let mut loss = 0.0;
        let mut steps = Vec::new();
        for &(series, label) in batch {
            steps.clear();
            let h_last = self.run(series, Some(&mut steps));
            let mask: Vec<f64> = match rng.as_deref_mut() {
                Some(r) if self.dropout > 0.0 => {
                    (0..h).map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
                }
                _ => vec![1.0; h],
            };
            let dropped: Vec<f64> = h_last.iter().zip(&mask).map(|(a, m)| a * m).collect();
            let p = softmax(&self.logits(&dropped));
            let y = label.index();
            loss -= p[y].max(f64::MIN_POSITIVE).ln();

            let mut dlogits = p;
            dlogits[y] -= 1.0;
            for d in &mut dlogits {
                *d /= n;
            }
            let wd = &self.params[lay.wd()..lay.bd()];
            let mut dh = vec![0.0; h];
            for c in 0..NUM_CLASSES {
                grad[lay.bd() + c] += dlogits[c];
                for k in 0..h {
                    grad[lay.wd() + c * h + k] += dlogits[c] * dropped[k];
                    dh[k] += wd[c * h + k] * dlogits[c] * mask[k];
                }
            }

            let u = &self.params[lay.u()..lay.b()];
            let mut dc = vec![0.0; h];
            let mut dz = vec![0.0; 4 * h];
            for (t, st) in steps.iter().enumerate().rev() {
                let x = &series[t];
                let g = &st.gates;
                for k in 0..h {
                    let (gi, gf, go, gg) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                    let tc = st.tanh_c[k];
                    dc[k] += dh[k] * go * (1.0 - tc * tc);
                    dz[k] = dc[k] * gg * gi * (1.0 - gi);
                    dz[h + k] = dc[k] * st.c_prev[k] * gf * (1.0 - gf);
                    dz[2 * h + k] = dh[k] * tc * go * (1.0 - go);
                    dz[3 * h + k] = dc[k] * gi * (1.0 - gg * gg);
                    dc[k] *= gf;
                }
                dh.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..4 * h {
                    let d = dz[r];
                    grad[lay.b() + r] += d;
                    let gw = &mut grad[lay.w() + r * f..lay.w() + (r + 1) * f];
                    for (gk, xk) in gw.iter_mut().zip(x) {
                        *gk += d * xk;
                    }
                    let ur = &u[r * h..(r + 1) * h];
                    let gu = &mut grad[lay.u() + r * h..lay.u() + (r + 1) * h];
                    for k in 0..h {
                        gu[k] += d * st.h_prev[k];
                        dh[k] += ur[k] * d;
                    }
                }
            }
        }
        loss / n
    }

    /// Magic `CSLM`, version, F, H, dropout, seed, parameter count, then
    /// parameters in layout order.
    pub fn to_bytes(&self) -> Vec<u8> {
        Writer::new(LSTM_MAGIC)
            .u64(self.input_dim as u64)
            .u64(self.hidden as u64)
            .f64(self.dropout)
            .u64(self.seed)
            .u64(self.params.len() as u64)
            .f64s(&self.params)
            .finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut r = Reader::new(bytes, LSTM_MAGIC)?;
        let input_dim = r.usize(1 << 20)?;
        let hidden = r.usize(1 << 16)?;
        let dropout = r.f64()?;
        let seed = r.u64()?;
        let count = r.usize(bytes.len() / 8)?;
        let expected = Layout { f: input_dim, h: hidden }.len();
        if count != expected || input_dim == 0 || hidden == 0 {
            return Err(ClassifyError::Format(format!("parameter count {count}, expected {expected}")));
        }
        let params = r.f64s(count)?;
        r.finish()?;
        Ok(Self { input_dim, hidden, dropout, seed, params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    /// Global gradient-norm clip.
    pub clip: f64,
    /// Shuffling and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, lr: 1e-3, batch: 16, clip: 5.0, seed: 0 }
    }
}

/// Training-set loss (dropout off) before training and after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Mini-batch Adam. Samples are bucketed by series length so each batch
/// has a single `T`; bucket contents and batch order are reshuffled every
/// epoch from `config.seed`.
pub fn lstm_train(
    data: &[ActivitySample],
    mut model: LstmModel,
    config: &TrainConfig,
) -> Result<(LstmModel, TrainReport), ClassifyError> {
    let f = data.first().ok_or(ClassifyError::EmptyDataset)?.channels();
    if let Some((i, s)) = data.iter().enumerate().find(|(_, s)| s.channels() != f) {
        return Err(ClassifyError::InconsistentF { line: i + 1, expected: f, found: s.channels() });
    }
    if f != model.input_dim {
        return Err(ClassifyError::DimMismatch { expected: model.input_dim, found: f });
    }
    if config.batch == 0 || !config.lr.is_finite() || config.lr < 0.0 {
        return Err(ClassifyError::BadSample("batch must be positive and lr finite and non-negative".into()));
    }

    let mut buckets: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, s) in data.iter().enumerate() {
        match buckets.iter_mut().find(|(t, _)| *t == s.time_steps()) {
            Some((_, v)) => v.push(i),
            None => buckets.push((s.time_steps(), vec![i])),
        }
    }
    buckets.sort_by_key(|(t, _)| *t);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = model.params.len();
    let mut adam = Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 };
    let mut grad = vec![0.0; n];
    let initial_loss = model.loss(data)?;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut batches: Vec<Vec<usize>> = Vec::new();
        for (_, idx) in &mut buckets {
            idx.shuffle(&mut rng);
            batches.extend(idx.chunks(config.batch).map(<[usize]>::to_vec));
        }
        batches.shuffle(&mut rng);
        for b in &batches {
            let batch: Vec<(&[Vec<f64>], Activity)> = b.iter().map(|&i| (data[i].series(), data[i].label)).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate(&batch, &mut grad, Some(&mut rng));
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > config.clip {
                let s = config.clip / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            adam.step(&mut model.params, &grad, config.lr);
        }
        epoch_losses.push(model.loss(data)?);
    }
    Ok((model, TrainReport { initial_loss, epoch_losses }))
}

/// Six class probabilities in class-index order.
pub fn lstm_predict(model: &LstmModel, sample: &ActivitySample) -> Result<[f64; NUM_CLASSES], ClassifyError> {
    model.probabilities(sample)
}
