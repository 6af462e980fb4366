//! Swappable stage nodes and the shallow damage-state classifiers.

mod bayes;
mod external;
mod features;
mod forest;
mod node;
mod oracle;
mod shallow;
mod tree;

pub use bayes::{fit_naive_bayes, ClassGaussian, GaussianNb, MinMax, VARIANCE_FLOOR};
pub use external::ExternalMaskNode;
pub use features::{build_feature_vector, labeled_features, FeatureVector, TrainingSet};
pub use forest::{fit_random_forest, ForestParams, RandomForest, DEFAULT_TREES};
pub use node::{validate_segment_output, DamageQuery, ModelNode, NodeKind, SegmentQuery, Stage};
pub use oracle::{ConstantNode, LabelStore, OracleNode};
pub use shallow::{ClassifierNode, ModelFile, ShallowModel, MODEL_FILE_VERSION};
pub use tree::{fit_decision_tree, DecisionTree, TreeNode, DEFAULT_MAX_DEPTH};
