//! CART classification tree with Gini impurity.

use super::model_io::{Reader, Writer, TREE_MAGIC};
use super::{argmax, Activity, ClassifyError, NUM_CLASSES};

type Counts = [usize; NUM_CLASSES];

/// Splits whose impurity decrease differs by less than this are ties.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        label: Activity,
        counts: Counts,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub root: Node,
    pub n_features: usize,
    pub params: TreeParams,
}

/// One step of a prediction's explanation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub feature: usize,
    pub threshold: f64,
    pub went_left: bool,
}

fn gini(counts: &Counts, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn leaf(counts: Counts) -> Node {
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Node::Leaf { label: Activity::ALL[argmax(&as_f)], counts }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(data: &[(Vec<f64>, Activity)], idx: &[usize], n_features: usize, parent: &Counts) -> Option<Split> {
    let n = idx.len();
    let parent_gini = gini(parent, n);
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for feature in 0..n_features {
        order.sort_by(|&a, &b| data[a].0[feature].total_cmp(&data[b].0[feature]));
        let mut left = [0usize; NUM_CLASSES];
        for pos in 0..n - 1 {
            left[data[order[pos]].1.index()] += 1;
            let lo = data[order[pos]].0[feature];
            let hi = data[order[pos + 1]].0[feature];
            if lo == hi {
                continue;
            }
            let mut right = *parent;
            for (r, l) in right.iter_mut().zip(&left) {
                *r -= l;
            }
            let nl = pos + 1;
            let nr = n - nl;
            let weighted = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            let gain = parent_gini - weighted;
            if best.as_ref().map_or(gain > GAIN_EPS, |b| gain > b.gain + GAIN_EPS) {
                best = Some(Split { feature, threshold: lo + (hi - lo) / 2.0, gain });
            }
        }
    }
    best
}

fn grow(data: &[(Vec<f64>, Activity)], idx: Vec<usize>, depth: usize, n_features: usize, params: &TreeParams) -> Node {
    let mut counts = [0usize; NUM_CLASSES];
    for &i in &idx {
        counts[data[i].1.index()] += 1;
    }
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_done = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_done || idx.len() < params.min_samples_split.max(2) {
        return leaf(counts);
    }
    let Some(split) = best_split(data, &idx, n_features, &counts) else {
        return leaf(counts);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| data[i].0[split.feature] <= split.threshold);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(data, l, depth + 1, n_features, params)),
        right: Box::new(grow(data, r, depth + 1, n_features, params)),
    }
}

/// Grows a tree greedily. Among equally good splits the lowest feature
/// index, then the lowest threshold, wins.
pub fn train_tree(data: &[(Vec<f64>, Activity)], params: TreeParams) -> Result<TreeModel, ClassifyError> {
    let n_features = data.first().ok_or(ClassifyError::EmptyDataset)?.0.len();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != n_features) {
        return Err(ClassifyError::DimMismatch { expected: n_features, found: x.len() });
    }
    let root = grow(data, (0..data.len()).collect(), 0, n_features, &params);
    Ok(TreeModel { root, n_features, params })
}

/// Leaf label plus the ordered decisions that led to it.
pub fn predict_tree(model: &TreeModel, x: &[f64]) -> Result<(Activity, Vec<Decision>), ClassifyError> {
    if x.len() != model.n_features {
        return Err(ClassifyError::DimMismatch { expected: model.n_features, found: x.len() });
    }
    let mut path = Vec::new();
    let mut node = &model.root;
    loop {
        match node {
            Node::Leaf { label, .. } => return Ok((*label, path)),
            Node::Split { feature, threshold, left, right } => {
                let went_left = x[*feature] <= *threshold;
                path.push(Decision { feature: *feature, threshold: *threshold, went_left });
                node = if went_left { left } else { right };
            }
        }
    }
}

impl TreeModel {
    pub fn predict(&self, x: &[f64]) -> Result<Activity, ClassifyError> {
        Ok(predict_tree(self, x)?.0)
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    /// Magic `CSDT`, version, then `n_features`, `max_depth` (`u64::MAX` for
    /// unlimited), `min_samples_split`, node count; nodes in preorder as f64
    /// words: split `[0, feature, threshold]`, leaf `[1, class, counts x 6]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        fn nodes(n: &Node, out: &mut Vec<f64>, count: &mut u64) {
            *count += 1;
            match n {
                Node::Split { feature, threshold, left, right } => {
                    out.extend([0.0, *feature as f64, *threshold]);
                    nodes(left, out, count);
                    nodes(right, out, count);
                }
                Node::Leaf { label, counts } => {
                    out.extend([1.0, label.index() as f64]);
                    out.extend(counts.iter().map(|&c| c as f64));
                }
            }
        }
        let mut words = Vec::new();
        let mut count = 0;
        nodes(&self.root, &mut words, &mut count);
        Writer::new(TREE_MAGIC)
            .u64(self.n_features as u64)
            .u64(self.params.max_depth.map_or(u64::MAX, |d| d as u64))
            .u64(self.params.min_samples_split as u64)
            .u64(count)
            .f64s(&words)
            .finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut r = Reader::new(bytes, TREE_MAGIC)?;
        let n_features = r.usize(1 << 20)?;
        let max_depth = match r.u64()? {
            u64::MAX => None,
            d => Some(d as usize),
        };
        let min_samples_split = r.usize(usize::MAX)?;
        let count = r.usize(bytes.len())?;
        let mut remaining = count;
        let root = read_node(&mut r, n_features, &mut remaining)?;
        if remaining != 0 {
            return Err(ClassifyError::Format("node count mismatch".into()));
        }
        r.finish()?;
        Ok(Self { root, n_features, params: TreeParams { max_depth, min_samples_split } })
    }
}

fn read_node(r: &mut Reader<'_>, n_features: usize, remaining: &mut usize) -> Result<Node, ClassifyError> {
    let bad = |m: &str| ClassifyError::Format(m.into());
    *remaining = remaining.checked_sub(1).ok_or_else(|| bad("too many nodes"))?;
    let as_index = |v: f64, limit: usize| -> Result<usize, ClassifyError> {
        if v >= 0.0 && v.fract() == 0.0 && (v as usize) < limit {
            Ok(v as usize)
        } else {
            Err(bad("index out of range"))
        }
    };
    match r.f64()? {
        t if t == 0.0 => {
            let feature = as_index(r.f64()?, n_features)?;
            let threshold = r.f64()?;
            let left = Box::new(read_node(r, n_features, remaining)?);
            let right = Box::new(read_node(r, n_features, remaining)?);
            Ok(Node::Split { feature, threshold, left, right })
        }
        t if t == 1.0 => {
            let label = Activity::ALL[as_index(r.f64()?, NUM_CLASSES)?];
            let mut counts = [0usize; NUM_CLASSES];
            for c in &mut counts {
                *c = as_index(r.f64()?, usize::MAX)?;
            }
            Ok(Node::Leaf { label, counts })
        }
        _ => Err(bad("unknown node tag")),
    }
}
