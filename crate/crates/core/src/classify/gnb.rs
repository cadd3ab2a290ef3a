//! Gaussian naive Bayes.

use std::f64::consts::PI;

use super::model_io::{Reader, Writer, GNB_MAGIC};
use super::{argmax, Activity, ClassifyError, NUM_CLASSES};

/// Per-class priors and per-feature Gaussian moments. Classes absent from
/// training have prior 0 and never win.
#[derive(Debug, Clone, PartialEq)]
pub struct GnbModel {
    pub n_features: usize,
    pub priors: [f64; NUM_CLASSES],
    /// `means[class][feature]`
    pub means: Vec<Vec<f64>>,
    /// Population variance plus `epsilon`.
    pub variances: Vec<Vec<f64>>,
    pub epsilon: f64,
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = xs.clone().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    let mean = sum / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

pub fn train_gnb(data: &[(Vec<f64>, Activity)]) -> Result<GnbModel, ClassifyError> {
    let n_features = data.first().ok_or(ClassifyError::EmptyDataset)?.0.len();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != n_features) {
        return Err(ClassifyError::DimMismatch { expected: n_features, found: x.len() });
    }
    let max_var = (0..n_features)
        .map(|f| mean_var(data.iter().map(move |(x, _)| x[f])).1)
        .fold(0.0, f64::max);
    let epsilon = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };

    let mut priors = [0.0; NUM_CLASSES];
    let mut means = vec![vec![0.0; n_features]; NUM_CLASSES];
    let mut variances = vec![vec![epsilon; n_features]; NUM_CLASSES];
    for a in Activity::ALL {
        let rows: Vec<&[f64]> = data.iter().filter(|(_, y)| *y == a).map(|(x, _)| x.as_slice()).collect();
        if rows.is_empty() {
            continue;
        }
        priors[a.index()] = rows.len() as f64 / data.len() as f64;
        for f in 0..n_features {
            let (m, v) = mean_var(rows.iter().map(|x| x[f]));
            means[a.index()][f] = m;
            variances[a.index()][f] = v + epsilon;
        }
    }
    Ok(GnbModel { n_features, priors, means, variances, epsilon })
}

/// Predicted label and normalized posteriors in class-index order.
pub fn predict_gnb(model: &GnbModel, x: &[f64]) -> Result<(Activity, [f64; NUM_CLASSES]), ClassifyError> {
    if x.len() != model.n_features {
        return Err(ClassifyError::DimMismatch { expected: model.n_features, found: x.len() });
    }
    let mut log_post = [f64::NEG_INFINITY; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if model.priors[c] == 0.0 {
            continue;
        }
        let ll: f64 = x
            .iter()
            .zip(&model.means[c])
            .zip(&model.variances[c])
            .map(|((&xf, &m), &v)| -0.5 * ((2.0 * PI * v).ln() + (xf - m) * (xf - m) / v))
            .sum();
        log_post[c] = model.priors[c].ln() + ll;
    }
    let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut post = [0.0; NUM_CLASSES];
    if max.is_finite() {
        let z: f64 = log_post.iter().map(|l| (l - max).exp()).sum();
        for (p, l) in post.iter_mut().zip(&log_post) {
            *p = (l - max).exp() / z;
        }
    } else {
        // every present class underflowed: fall back to the priors
        post = model.priors;
    }
    Ok((Activity::ALL[argmax(&post)], post))
}

impl GnbModel {
    pub fn predict(&self, x: &[f64]) -> Result<Activity, ClassifyError> {
        Ok(predict_gnb(self, x)?.0)
    }

    /// Magic `CSNB`, version, `n_features`, epsilon, 6 priors, then means
    /// and variances, each class-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(GNB_MAGIC);
        w.u64(self.n_features as u64).f64(self.epsilon).f64s(&self.priors);
        for m in &self.means {
            w.f64s(m);
        }
        for v in &self.variances {
            w.f64s(v);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut r = Reader::new(bytes, GNB_MAGIC)?;
        let n_features = r.usize(bytes.len() / 8)?;
        let epsilon = r.f64()?;
        let priors: [f64; NUM_CLASSES] = r.f64s(NUM_CLASSES)?.try_into().expect("six priors");
        let means = (0..NUM_CLASSES).map(|_| r.f64s(n_features)).collect::<Result<Vec<_>, _>>()?;
        let variances = (0..NUM_CLASSES).map(|_| r.f64s(n_features)).collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        if variances.iter().flatten().any(|v| !(*v > 0.0)) {
            return Err(ClassifyError::Format("non-positive variance".into()));
        }
        Ok(Self { n_features, priors, means, variances, epsilon })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use Activity::{LieDown as A, PickUp as B};

    fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
    }

    #[test]
    fn one_sample_per_class_gives_uniform_priors() {
        let data = vec![(vec![0.0], A), (vec![1.0], Activity::Sit), (vec![2.0], Activity::Walk)];
        let m = train_gnb(&data).unwrap();
        for c in [A, Activity::Sit, Activity::Walk] {
            assert_eq!(m.priors[c.index()], 1.0 / 3.0);
        }
        assert_eq!(m.priors[B.index()], 0.0);
        assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_feature_gets_epsilon() {
        let data = vec![(vec![0.0, 1.0], A), (vec![0.0, 3.0], A), (vec![5.0, 2.0], B)];
        let m = train_gnb(&data).unwrap();
        assert_eq!(m.means[A.index()][0], 0.0);
        assert_eq!(m.variances[A.index()][0], m.epsilon);
        assert!(m.epsilon > 0.0);
    }

    #[test]
    fn nearer_mean_wins() {
        let data = vec![(vec![-1.2], A), (vec![-0.8], A), (vec![0.8], B), (vec![1.2], B)];
        let m = train_gnb(&data).unwrap();
        let (label, post) = predict_gnb(&m, &[0.9]).unwrap();
        assert_eq!(label, B);
        assert!(post[B.index()] > post[A.index()]);
    }

    #[test]
    fn hand_computed_posteriors() {
        let data = vec![
            (vec![0.0, 1.0], A),
            (vec![2.0, 3.0], A),
            (vec![4.0, 0.0], A),
            (vec![5.0, 5.0], B),
            (vec![7.0, 9.0], B),
        ];
        let m = train_gnb(&data).unwrap();
        let eps = m.epsilon;
        // class A: means (2, 4/3), population variances (8/3, 14/9); class B: (6, 7), (1, 4)
        let x = [3.0, 2.5];
        let la = 0.6 * normal_pdf(x[0], 2.0, 8.0 / 3.0 + eps) * normal_pdf(x[1], 4.0 / 3.0, 14.0 / 9.0 + eps);
        let lb = 0.4 * normal_pdf(x[0], 6.0, 1.0 + eps) * normal_pdf(x[1], 7.0, 4.0 + eps);
        let (_, post) = predict_gnb(&m, &x).unwrap();
        assert!((post[A.index()] - la / (la + lb)).abs() < 1e-9);
        assert!((post[B.index()] - lb / (la + lb)).abs() < 1e-9);
        // total variances: feature 0 -> 5.84, feature 1 -> 10.24
        assert!((eps - 1e-9 * 10.24).abs() < 1e-20);
    }

    #[test]
    fn moments_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<_> = (0..200)
            .map(|i| ((0..4).map(|_| rng.gen_range(-10.0..10.0)).collect::<Vec<f64>>(), Activity::ALL[i % 6]))
            .collect();
        let m = train_gnb(&data).unwrap();
        for a in Activity::ALL {
            let rows: Vec<_> = data.iter().filter(|(_, y)| *y == a).collect();
            for f in 0..4 {
                let n = rows.len() as f64;
                let mean = rows.iter().map(|(x, _)| x[f]).sum::<f64>() / n;
                let var = rows.iter().map(|(x, _)| (x[f] - mean).powi(2)).sum::<f64>() / n;
                assert!((m.means[a.index()][f] - mean).abs() < 1e-12);
                assert!((m.variances[a.index()][f] - m.epsilon - var).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicating_training_set_keeps_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<_> = (0..60)
            .map(|i| ((0..3).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<f64>>(), Activity::ALL[i % 4]))
            .collect();
        let doubled: Vec<_> = data.iter().chain(&data).cloned().collect();
        let m1 = train_gnb(&data).unwrap();
        let m2 = train_gnb(&doubled).unwrap();
        assert_eq!(m1.priors, m2.priors);
        let pairs = m1.means.iter().flatten().zip(m2.means.iter().flatten());
        for (a, b) in pairs.chain(m1.variances.iter().flatten().zip(m2.variances.iter().flatten())) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn file_round_trip_and_dim_check() {
        let data = vec![(vec![0.0, 1.0], A), (vec![2.0, 3.0], B), (vec![2.5, 3.0], B)];
        let m = train_gnb(&data).unwrap();
        assert_eq!(GnbModel::from_bytes(&m.to_bytes()).unwrap(), m);
        assert!(matches!(predict_gnb(&m, &[1.0]), Err(ClassifyError::DimMismatch { .. })));
        assert!(matches!(train_gnb(&[]), Err(ClassifyError::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn posteriors_normalized(x0 in -1e3f64..1e3, x1 in -1e3f64..1e3) {
            let data = vec![(vec![0.0, 1.0], A), (vec![0.5, 1.5], A), (vec![3.0, -2.0], B), (vec![3.3, -2.5], B)];
            let m = train_gnb(&data).unwrap();
            let (_, post) = predict_gnb(&m, &[x0, x1]).unwrap();
            prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(post.iter().all(|p| *p >= 0.0));
        }
    }
}
