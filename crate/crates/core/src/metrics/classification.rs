use serde::Serialize;

use crate::classes::DamageState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateMetrics {
    pub state: DamageState,
    pub support: u64,
    pub predicted: u64,
    /// Per-class accuracy, i.e. recall. `None` when the state is absent from
    /// ground truth.
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

/// Damage-state classification scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub samples: u64,
    pub per_class: Vec<StateMetrics>,
    /// Overall fraction of correct predictions.
    pub average_accuracy: f64,
    /// Unweighted mean F1 over states present in ground truth.
    pub macro_f1: f64,
    /// `confusion[gt][pred]`.
    pub confusion: [[u64; 4]; 4],
    pub convention: &'static str,
}

/// Accuracy per class (recall), overall accuracy and macro F1.
pub fn classification_metrics(preds: &[DamageState], gts: &[DamageState]) -> Result<ClassificationReport> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} ground-truth labels",
            preds.len(),
            gts.len()
        )));
    }
    if gts.is_empty() {
        return Err(Error::Empty("classification samples"));
    }
    let mut confusion = [[0u64; 4]; 4];
    for (&p, &g) in preds.iter().zip(gts) {
        confusion[g as usize][p as usize] += 1;
    }
    let correct: u64 = (0..4).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(4);
    let mut f1_sum = 0.0;
    let mut present = 0u32;
    for state in DamageState::ALL {
        let i = state as usize;
        let tp = confusion[i][i];
        let support: u64 = confusion[i].iter().sum();
        let predicted: u64 = (0..4).map(|g| confusion[g][i]).sum();
        let (accuracy, precision, f1) = if support == 0 {
            (None, None, None)
        } else {
            let recall = tp as f64 / support as f64;
            let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            f1_sum += f1;
            present += 1;
            (Some(recall), Some(precision), Some(f1))
        };
        per_class.push(StateMetrics {
            state,
            support,
            predicted,
            accuracy,
            precision,
            f1,
        });
    }
    Ok(ClassificationReport {
        samples: gts.len() as u64,
        per_class,
        average_accuracy: correct as f64 / gts.len() as f64,
        macro_f1: f1_sum / f64::from(present),
        confusion,
        convention: "per-class accuracy is recall; macro F1 averages states present in ground truth; F1=0 when P+R=0",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use DamageState::*;

    #[test]
    fn all_correct() {
        let gts = [NoDamage, Light, Moderate, Severe, Light];
        let r = classification_metrics(&gts, &gts).unwrap();
        assert_eq!(r.average_accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert!(r.per_class.iter().all(|c| c.accuracy == Some(1.0)));
    }

    #[test]
    fn binary_f1_two_thirds() {
        // Light is the positive class: TP=2 FP=1 FN=1 TN=6.
        let mut gts = vec![Light; 3];
        gts.extend(vec![NoDamage; 7]);
        let mut preds = vec![Light, Light, NoDamage, Light];
        preds.extend(vec![NoDamage; 6]);
        let r = classification_metrics(&preds, &gts).unwrap();
        let f1 = r.per_class[Light as usize].f1.unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.average_accuracy - 0.8).abs() < 1e-15);
    }

    #[test]
    fn constant_predictor_on_imbalanced_truth() {
        let mut gts = vec![Moderate; 70];
        gts.extend(vec![Light; 20]);
        gts.extend(vec![Severe; 10]);
        let preds = vec![Moderate; 100];
        let r = classification_metrics(&preds, &gts).unwrap();
        assert!((r.average_accuracy - 0.7).abs() < 1e-15);
        assert!(r.macro_f1 < r.average_accuracy);
        // F1(moderate) = 2*0.7*1/(1.7); others 0; three present classes.
        assert!((r.macro_f1 - (1.4 / 1.7) / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class[NoDamage as usize].f1, None);
    }

    #[test]
    fn errors() {
        assert!(classification_metrics(&[], &[]).is_err());
        assert!(classification_metrics(&[Light], &[Light, Light]).is_err());
    }
}
