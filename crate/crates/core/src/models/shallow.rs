use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::io;
use crate::models::bayes::GaussianNb;
use crate::models::features::{FeatureVector, TrainingSet};
use crate::models::forest::RandomForest;
use crate::models::node::{DamageQuery, ModelNode, NodeKind, Stage};
use crate::models::tree::DecisionTree;

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShallowModel {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    NaiveBayes(GaussianNb),
}

impl ShallowModel {
    pub fn name(&self) -> &'static str {
        match self {
            ShallowModel::DecisionTree(_) => "decision_tree",
            ShallowModel::RandomForest(_) => "random_forest",
            ShallowModel::NaiveBayes(_) => "naive_bayes",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<DamageState> {
        match self {
            ShallowModel::DecisionTree(t) => t.predict(x),
            ShallowModel::RandomForest(f) => f.predict(x),
            ShallowModel::NaiveBayes(nb) => nb.predict(x),
        }
    }

    pub fn predict_features(&self, fv: &FeatureVector) -> Result<DamageState> {
        self.predict(&fv.to_array())
    }

    /// Fraction of rows predicted correctly.
    pub fn accuracy(&self, data: &TrainingSet) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("evaluation data"));
        }
        let mut correct = 0usize;
        for (r, l) in data.rows.iter().zip(&data.labels) {
            if self.predict(r)? == *l {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ShallowModel::DecisionTree(t) => t.validate(),
            ShallowModel::RandomForest(f) => {
                if f.trees.len() != f.params.n_trees || f.trees.is_empty() {
                    return Err(Error::ModelFormat("forest tree count differs from n_trees".into()));
                }
                f.trees.iter().try_for_each(DecisionTree::validate)
            }
            ShallowModel::NaiveBayes(nb) => nb.validate(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(
            path,
            &ModelFile {
                version: MODEL_FILE_VERSION,
                model: self.clone(),
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = io::read_json(path)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelFormat(format!(
                "{}: version {} (expected {MODEL_FILE_VERSION})",
                path.display(),
                file.version
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }
}

/// On-disk wrapper of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub model: ShallowModel,
}

/// Damage-state node backed by a fitted shallow model; reads only the
/// query's feature vector.
#[derive(Debug, Clone)]
pub struct ClassifierNode {
    pub model: ShallowModel,
}

impl ClassifierNode {
    pub fn new(model: ShallowModel) -> Self {
        Self { model }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(ShallowModel::load(path)?))
    }
}

impl ModelNode for ClassifierNode {
    fn stage(&self) -> Stage {
        Stage::Damage
    }

    fn kind(&self) -> NodeKind {
        NodeKind::Classifier
    }

    fn assess(&self, query: &DamageQuery<'_>) -> Result<DamageState> {
        self.model.predict_features(query.features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::bayes::fit_naive_bayes;
    use crate::models::forest::{fit_random_forest, ForestParams};
    use crate::models::tree::fit_decision_tree;
    use DamageState::*;

    fn data() -> TrainingSet {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 8) as f64, i as f64 / 40.0, 0.0, 0.0, 0.0]).collect();
        let labels = (0..40).map(|i| if i % 8 < 3 { Light } else { Severe }).collect();
        TrainingSet::new(rows, labels).unwrap()
    }

    #[test]
    fn round_trip_all_kinds() {
        let d = data();
        let dir = tempfile::tempdir().unwrap();
        let models = [
            ShallowModel::DecisionTree(fit_decision_tree(&d, 59).unwrap()),
            ShallowModel::RandomForest(fit_random_forest(&d, ForestParams { n_trees: 7, ..ForestParams::new(3) }).unwrap()),
            ShallowModel::NaiveBayes(fit_naive_bayes(&d, true).unwrap()),
        ];
        for m in models {
            let p = dir.path().join(format!("{}.json", m.name()));
            m.save(&p).unwrap();
            let back = ShallowModel::load(&p).unwrap();
            assert_eq!(back, m);
            for r in &d.rows {
                assert_eq!(back.predict(r).unwrap(), m.predict(r).unwrap());
            }
        }
    }

    #[test]
    fn leaf_only_tree_constant() {
        let d = TrainingSet::new(vec![vec![0.0; 5]], vec![Moderate]).unwrap();
        let m = ShallowModel::DecisionTree(fit_decision_tree(&d, 59).unwrap());
        assert_eq!(m.predict(&[9.0, 1.0, 0.5, 0.5, 0.5]).unwrap(), Moderate);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, r#"{"version":2,"model":{"kind":"naive_bayes","n_features":1,"normalization":null,"classes":[]}}"#).unwrap();
        assert!(matches!(ShallowModel::load(&p), Err(Error::ModelFormat(_))));
        std::fs::write(&p, r#"{"version":1,"model":{"kind":"naive_bayes","n_features":1,"normalization":null,"classes":[]}}"#).unwrap();
        assert!(matches!(ShallowModel::load(&p), Err(Error::ModelFormat(_))));
        std::fs::write(&p, "{").unwrap();
        assert!(matches!(ShallowModel::load(&p), Err(Error::Json { .. })));
    }

    #[test]
    fn wrong_feature_count_is_an_error() {
        let m = ShallowModel::NaiveBayes(fit_naive_bayes(&data(), false).unwrap());
        assert!(m.predict(&[1.0]).is_err());
    }
}
