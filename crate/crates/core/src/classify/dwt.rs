//! Orthonormal Haar wavelet decomposition and the per-level summary
//! features fed to the tree and naive Bayes classifiers.
//!
//! Feature layout per channel, `3J + 3` values:
//! for each detail level `j = 1..=J`: `ln(1 + energy)`, mean `|d|`, std `d`;
//! then for the final approximation: mean, std, `ln(1 + energy)`.
//! Channels are concatenated in order.

use std::f64::consts::SQRT_2;

use super::{Activity, ActivitySample, ClassifyError};

/// Feature layout version written into model files.
pub const FEATURE_LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
}

impl HaarDecomposition {
    pub fn energy(&self) -> f64 {
        self.details.iter().flatten().chain(&self.approx).map(|c| c * c).sum()
    }
}

/// `J` levels of pairwise `(a + b)/sqrt(2)`, `(a - b)/sqrt(2)`. An odd
/// trailing sample passes to the next level's approximation unchanged.
pub fn haar_dwt(signal: &[f64], levels: usize) -> Result<HaarDecomposition, ClassifyError> {
    if levels == 0 {
        return Err(ClassifyError::BadSample("at least one DWT level required".into()));
    }
    let need = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
    if signal.len() < need {
        return Err(ClassifyError::TooShort { len: signal.len(), need });
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let mut next = Vec::with_capacity(approx.len().div_ceil(2));
        let mut detail = Vec::with_capacity(approx.len() / 2);
        for pair in approx.chunks(2) {
            match *pair {
                [a, b] => {
                    next.push((a + b) / SQRT_2);
                    detail.push((a - b) / SQRT_2);
                }
                [tail] => next.push(tail),
                _ => unreachable!(),
            }
        }
        details.push(detail);
        approx = next;
    }
    Ok(HaarDecomposition { details, approx })
}

/// `min(4, floor(log2 T))`.
pub fn default_levels(time_steps: usize) -> usize {
    (usize::BITS - 1 - time_steps.max(1).leading_zeros()).min(4) as usize
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn energy(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

fn channel_features(signal: &[f64], levels: usize, out: &mut Vec<f64>) -> Result<(), ClassifyError> {
    let dec = haar_dwt(signal, levels)?;
    for d in &dec.details {
        let (_, std) = mean_std(d);
        let mean_abs = d.iter().map(|x| x.abs()).sum::<f64>() / d.len() as f64;
        out.extend([energy(d).ln_1p(), mean_abs, std]);
    }
    let (mean, std) = mean_std(&dec.approx);
    out.extend([mean, std, energy(&dec.approx).ln_1p()]);
    Ok(())
}

/// Feature vector of length `(3J + 3) * F`.
pub fn dwt_features(sample: &ActivitySample, levels: usize) -> Result<Vec<f64>, ClassifyError> {
    let mut out = Vec::with_capacity((3 * levels + 3) * sample.channels());
    for f in 0..sample.channels() {
        channel_features(&sample.channel(f), levels, &mut out)?;
    }
    Ok(out)
}

/// Features for a whole dataset. `levels` defaults to the value for the
/// shortest series so every vector has the same length.
pub fn feature_matrix(
    samples: &[ActivitySample],
    levels: Option<usize>,
) -> Result<(Vec<(Vec<f64>, Activity)>, usize), ClassifyError> {
    let shortest = samples.iter().map(ActivitySample::time_steps).min().ok_or(ClassifyError::EmptyDataset)?;
    let levels = levels.unwrap_or_else(|| default_levels(shortest));
    let rows = samples
        .iter()
        .map(|s| Ok((dwt_features(s, levels)?, s.label)))
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    Ok((rows, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_oracle_first_level() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let dec = haar_dwt(&x, 1).unwrap();
        // (a - b)/sqrt(2) for pairs (1,2), (3,4), ...
        let want = -1.0 / 2f64.sqrt();
        assert_eq!(dec.details[0], vec![want; 4]);
        let approx: Vec<f64> = [3.0, 7.0, 11.0, 15.0].iter().map(|s| s / 2f64.sqrt()).collect();
        for (a, b) in dec.approx.iter().zip(approx) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_series_has_no_detail_energy() {
        let s = ActivitySample::new(Activity::Sit, vec![vec![3.5]; 32]).unwrap();
        let f = dwt_features(&s, 4).unwrap();
        assert_eq!(f.len(), 15);
        for j in 0..4 {
            assert_eq!(&f[3 * j..3 * j + 3], &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn odd_tail_carries_forward() {
        let dec = haar_dwt(&[1.0, 1.0, 5.0], 1).unwrap();
        assert_eq!(dec.details, vec![vec![0.0]]);
        assert_eq!(dec.approx, vec![2.0 / 2f64.sqrt(), 5.0]);
    }

    #[test]
    fn too_short_and_default_levels() {
        assert!(matches!(haar_dwt(&[0.0; 15], 4), Err(ClassifyError::TooShort { len: 15, need: 16 })));
        assert_eq!(default_levels(8), 3);
        assert_eq!(default_levels(15), 3);
        assert_eq!(default_levels(64), 4);
    }

    #[test]
    fn multichannel_concatenates() {
        let series: Vec<Vec<f64>> = (0..16).map(|t| vec![t as f64, -(t as f64)]).collect();
        let s = ActivitySample::new(Activity::Run, series).unwrap();
        let f = dwt_features(&s, 2).unwrap();
        assert_eq!(f.len(), 18);
        let single = ActivitySample::new(Activity::Run, (0..16).map(|t| vec![t as f64]).collect()).unwrap();
        assert_eq!(&f[..9], dwt_features(&single, 2).unwrap().as_slice());
    }

    proptest! {
        #[test]
        fn parseval(x in prop::collection::vec(-100.0f64..100.0, 16..300), levels in 1usize..=4) {
            let dec = haar_dwt(&x, levels).unwrap();
            let e: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((dec.energy() - e).abs() <= 1e-9 * e.max(1e-300));
        }
    }
}
