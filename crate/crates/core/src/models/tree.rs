//! CART classification tree with the Gini criterion.
//!
//! Split search is exact and deterministic: candidate thresholds are the
//! midpoints between consecutive distinct values of a feature, scores are
//! compared as exact rationals, and ties go to the lowest feature index and
//! then the lowest threshold.

use serde::{Deserialize, Serialize};

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::models::features::TrainingSet;
use crate::rng::SplitMix64;

pub const DEFAULT_MAX_DEPTH: usize = 59;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        state: DamageState,
        counts: [u64; 4],
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub max_depth: usize,
    /// Root is `nodes[0]`.
    pub nodes: Vec<TreeNode>,
}

/// Per-node feature subsampling used by the forest.
pub(crate) struct FeatureSampler<'a> {
    pub rng: &'a mut SplitMix64,
    pub max_features: usize,
}

fn counts_of(labels: &[DamageState], idx: &[usize]) -> [u64; 4] {
    let mut c = [0u64; 4];
    for &i in idx {
        c[labels[i] as usize] += 1;
    }
    c
}

fn sum_sq(c: &[u64; 4]) -> u128 {
    c.iter().map(|&v| u128::from(v) * u128::from(v)).sum()
}

/// Split quality `sum_sq(left)/n_left + sum_sq(right)/n_right` held as an
/// exact fraction; larger means lower weighted Gini impurity.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: &[u64; 4], nl: u64, right: &[u64; 4], nr: u64) -> Self {
        let (nl, nr) = (u128::from(nl), u128::from(nr));
        Score {
            num: sum_sq(left) * nr + sum_sq(right) * nl,
            den: nl * nr,
        }
    }

    fn better_than(&self, other: &Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Builder<'a, 'r> {
    data: &'a TrainingSet,
    max_depth: usize,
    sampler: Option<FeatureSampler<'r>>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_, '_> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.n_features();
        match &mut self.sampler {
            Some(s) if s.max_features < d => {
                let mut f = s.rng.sample_indices(d, s.max_features);
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let total = counts_of(&self.data.labels, idx);
        let n = idx.len() as u64;
        let mut best: Option<(Score, usize, f64)> = None;
        let mut order = idx.to_vec();
        for feature in self.candidate_features() {
            let rows = &self.data.rows;
            order.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]).then(a.cmp(&b)));
            let mut left = [0u64; 4];
            for k in 0..order.len() - 1 {
                left[self.data.labels[order[k]] as usize] += 1;
                let (a, b) = (rows[order[k]][feature], rows[order[k + 1]][feature]);
                if a == b {
                    continue;
                }
                let nl = k as u64 + 1;
                let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2], total[3] - left[3]];
                let score = Score::new(&left, nl, &right, n - nl);
                if best.as_ref().is_none_or(|(s, _, _)| score.better_than(s)) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = counts_of(&self.data.labels, idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let slot = self.nodes.len();
        let leaf = TreeNode::Leaf {
            state: DamageState::majority(&counts).expect("node holds at least one row"),
            counts,
        };
        self.nodes.push(leaf);
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return slot;
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.rows[i][feature] <= threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

pub(crate) fn fit_with(data: &TrainingSet, idx: &[usize], max_depth: usize, sampler: Option<FeatureSampler<'_>>) -> DecisionTree {
    let mut b = Builder {
        data,
        max_depth,
        sampler,
        nodes: Vec::new(),
    };
    b.build(idx, 0);
    DecisionTree {
        n_features: data.n_features(),
        max_depth,
        nodes: b.nodes,
    }
}

/// Greedy Gini tree; leaves predict the majority state, ties toward the more
/// severe state.
pub fn fit_decision_tree(data: &TrainingSet, max_depth: usize) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(fit_with(data, &idx, max_depth, None))
}

impl DecisionTree {
    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = &self.nodes[if x[*feature] <= *threshold { *left } else { *right }],
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<DamageState> {
        if x.len() != self.n_features {
            return Err(Error::InvalidArgument(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        match self.leaf_for(x) {
            TreeNode::Leaf { state, .. } => Ok(*state),
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// Longest root-to-leaf path, in splits.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Structural check for deserialised trees.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("tree has no nodes".into()));
        }
        for n in &self.nodes {
            if let TreeNode::Split {
                feature, left, right, threshold,
            } = n
            {
                if *feature >= self.n_features
                    || *left >= self.nodes.len()
                    || *right >= self.nodes.len()
                    || !threshold.is_finite()
                {
                    return Err(Error::ModelFormat("tree split out of range".into()));
                }
            }
        }
        if self.depth() > self.max_depth {
            return Err(Error::ModelFormat("tree deeper than its max_depth".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use DamageState::*;

    fn set(rows: Vec<Vec<f64>>, labels: Vec<DamageState>) -> TrainingSet {
        TrainingSet::new(rows, labels).unwrap()
    }

    #[test]
    fn single_class_is_a_leaf() {
        let t = fit_decision_tree(&set(vec![vec![1.0], vec![2.0]], vec![Light, Light]), 59).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[100.0]).unwrap(), Light);
    }

    #[test]
    fn separable_at_half() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0 + 0.05]).collect();
        let labels: Vec<DamageState> = (0..10).map(|i| if i < 5 { NoDamage } else { Severe }).collect();
        let t = fit_decision_tree(&set(rows.clone(), labels.clone()), 59).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            TreeNode::Split { threshold, .. } => assert!((threshold - 0.5).abs() < 1e-12),
            _ => panic!("expected split"),
        }
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict(r).unwrap(), *l);
        }
    }

    #[test]
    fn xor_needs_zero_gain_split() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let labels = vec![Light, Moderate, Moderate, Light];
        let t = fit_decision_tree(&set(rows.clone(), labels.clone()), 59).unwrap();
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict(r).unwrap(), *l);
        }
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn depth_limit_respected_and_leaf_tie_goes_severe() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let labels = vec![Light, Severe, Light, Severe, Light, Severe, Light, Severe];
        let t = fit_decision_tree(&set(rows, labels), 0).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[3.0]).unwrap(), Severe);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // Both features separate the classes perfectly.
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = fit_decision_tree(&set(rows, vec![NoDamage, Light]), 59).unwrap();
        match &t.nodes[0] {
            TreeNode::Split { feature, .. } => assert_eq!(*feature, 0),
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn wrong_width_and_empty() {
        let t = fit_decision_tree(&set(vec![vec![1.0]], vec![Light]), 3).unwrap();
        assert!(t.predict(&[1.0, 2.0]).is_err());
        assert!(fit_decision_tree(&TrainingSet::default(), 3).is_err());
    }
}
