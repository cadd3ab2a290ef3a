//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid and its squared distance; ties go to the
/// lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
    /// Centroids used for each assignment step, when tracing was requested.
    pub centroid_trace: Vec<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Clusters `points` (all the same length, at least `k` of them).
pub fn fit(points: &[Vec<f64>], opts: &KMeansOptions, trace: bool) -> KMeansFit {
    assert!(opts.k >= 1 && points.len() >= opts.k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centroids = plus_plus_init(points, opts.k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut objective = Vec::new();
    let mut centroid_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let dim = points[0].len();

    while iterations < opts.max_iters {
        iterations += 1;
        if trace {
            centroid_trace.push(centroids.clone());
        }
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            assignments[i] = j;
            dists[i] = d;
        }
        objective.push(dists.iter().sum());

        let mut counts = vec![0usize; opts.k];
        for &a in &assignments {
            counts[a] += 1;
        }
        // Empty clusters take over the point farthest from its centroid.
        for j in 0..opts.k {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = j;
                counts[j] = 1;
                dists[i] = 0.0;
            }
        }

        let mut sums = vec![vec![0.0; dim]; opts.k];
        for (p, &a) in points.iter().zip(&assignments) {
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for (j, sum) in sums.into_iter().enumerate() {
            if counts[j] == 0 {
                continue;
            }
            let n = counts[j] as f64;
            let new: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
            shift = shift.max(sq_dist(&new, &centroids[j]).sqrt());
            centroids[j] = new;
        }
        if shift < opts.tol {
            converged = true;
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        assignments[i] = nearest(p, &centroids).0;
    }
    KMeansFit { centroids, assignments, objective, centroid_trace, iterations, converged }
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen_range(0.0..total);
            let mut chosen = d2.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}
