use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::models::features::TrainingSet;
use crate::models::tree::{fit_with, DecisionTree, FeatureSampler, DEFAULT_MAX_DEPTH};
use crate::rng::{derive_seed, SplitMix64};

pub const DEFAULT_TREES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            max_depth: DEFAULT_MAX_DEPTH,
            max_features: None,
            bootstrap: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
}

fn default_max_features(d: usize) -> usize {
    (d as f64).sqrt().ceil() as usize
}

/// Bagged Gini trees. Tree `t` draws its bootstrap sample and its feature
/// subsets from its own stream `derive_seed(seed, t)`, so trees can be fit
/// in parallel without changing the result.
pub fn fit_random_forest(data: &TrainingSet, params: ForestParams) -> Result<RandomForest> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let d = data.n_features();
    let max_features = params.max_features.unwrap_or_else(|| default_max_features(d)).clamp(1, d);
    let n = data.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = SplitMix64::new(derive_seed(params.seed, t as u64));
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.index(n)).collect()
            } else {
                (0..n).collect()
            };
            let sampler = FeatureSampler {
                rng: &mut rng,
                max_features,
            };
            fit_with(data, &idx, params.max_depth, Some(sampler))
        })
        .collect();
    Ok(RandomForest { params, trees })
}

impl RandomForest {
    pub fn votes(&self, x: &[f64]) -> Result<[u64; 4]> {
        let mut v = [0u64; 4];
        for t in &self.trees {
            v[t.predict(x)? as usize] += 1;
        }
        Ok(v)
    }

    /// Majority vote, ties toward the more severe state.
    pub fn predict(&self, x: &[f64]) -> Result<DamageState> {
        let v = self.votes(x)?;
        Ok(DamageState::majority(&v).expect("forest has trees"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::fit_decision_tree;
    use DamageState::*;

    fn noisy(seed: u64, n: usize) -> TrainingSet {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..5).map(|_| rng.next_f64()).collect();
            let mut s = if x[0] + x[4] > 1.0 { Moderate } else { Light };
            if rng.chance(0.1) {
                s = if s == Light { Moderate } else { Light };
            }
            rows.push(x);
            labels.push(s);
        }
        TrainingSet::new(rows, labels).unwrap()
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let data = noisy(1, 300);
        let forest = fit_random_forest(
            &data,
            ForestParams {
                n_trees: 1,
                max_depth: 59,
                max_features: Some(5),
                bootstrap: false,
                seed: 9,
            },
        )
        .unwrap();
        let tree = fit_decision_tree(&data, 59).unwrap();
        assert_eq!(forest.trees[0], tree);
        let probe = noisy(2, 200);
        for r in &probe.rows {
            assert_eq!(forest.predict(r).unwrap(), tree.predict(r).unwrap());
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let data = noisy(3, 200);
        let p = ForestParams { n_trees: 15, ..ForestParams::new(77) };
        let a = fit_random_forest(&data, p).unwrap();
        let b = fit_random_forest(&data, p).unwrap();
        assert_eq!(a, b);
        let c = fit_random_forest(&data, ForestParams { seed: 78, ..p }).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.trees.len(), 15);
    }

    #[test]
    fn vote_retally_agrees() {
        let data = noisy(4, 200);
        let f = fit_random_forest(&data, ForestParams { n_trees: 11, ..ForestParams::new(1) }).unwrap();
        for r in noisy(5, 50).rows {
            let mut tally = [0u64; 4];
            for t in &f.trees {
                tally[t.predict(&r).unwrap() as usize] += 1;
            }
            let max = *tally.iter().max().unwrap();
            let winner = (0..4).rev().find(|&i| tally[i] == max).unwrap();
            assert_eq!(f.predict(&r).unwrap() as usize, winner);
        }
    }
}
