use serde::{Deserialize, Serialize};

use crate::classes::CodeTable;
use crate::error::{Error, Result};
use crate::mask::MaskLayer;

/// Pixel tally indexed by `(ground truth, prediction)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelConfusion {
    pub table: CodeTable,
    /// Row-major `classes x classes`, rows are ground truth.
    pub counts: Vec<u64>,
}

impl PixelConfusion {
    pub fn new(table: CodeTable) -> Self {
        let n = table.num_classes();
        Self {
            table,
            counts: vec![0; n * n],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.table.num_classes()
    }

    pub fn get(&self, gt: u8, pred: u8) -> u64 {
        self.counts[gt as usize * self.num_classes() + pred as usize]
    }

    pub fn add(&mut self, gt: u8, pred: u8, n: u64) {
        let k = self.num_classes();
        self.counts[gt as usize * k + pred as usize] += n;
    }

    pub fn accumulate(&mut self, pred: &MaskLayer, gt: &MaskLayer) -> Result<()> {
        pred.ensure_dims(gt.dims(), "prediction vs ground truth")?;
        for (name, m) in [("prediction", pred), ("ground truth", gt)] {
            if m.table() != self.table {
                return Err(Error::InvalidArgument(format!(
                    "{name} uses the {} table, confusion expects {}",
                    m.table().name(),
                    self.table.name()
                )));
            }
        }
        let k = self.num_classes();
        for (&p, &g) in pred.codes().iter().zip(gt.codes()) {
            self.counts[g as usize * k + p as usize] += 1;
        }
        Ok(())
    }

    /// Adds another tally; order of merging never changes the result.
    pub fn merge(&mut self, other: &PixelConfusion) -> Result<()> {
        if other.table != self.table {
            return Err(Error::InvalidArgument("cannot merge confusions of different tables".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn true_positives(&self, class: u8) -> u64 {
        self.get(class, class)
    }

    pub fn gt_count(&self, class: u8) -> u64 {
        (0..self.num_classes() as u8).map(|p| self.get(class, p)).sum()
    }

    pub fn pred_count(&self, class: u8) -> u64 {
        (0..self.num_classes() as u8).map(|g| self.get(g, class)).sum()
    }

    pub fn false_positives(&self, class: u8) -> u64 {
        self.pred_count(class) - self.true_positives(class)
    }

    pub fn false_negatives(&self, class: u8) -> u64 {
        self.gt_count(class) - self.true_positives(class)
    }
}

/// Tallies one prediction/ground-truth pair against `table`.
pub fn accumulate_confusion(pred: &MaskLayer, gt: &MaskLayer, table: CodeTable) -> Result<PixelConfusion> {
    let mut c = PixelConfusion::new(table);
    c.accumulate(pred, gt)?;
    Ok(c)
}

/// TP / (TP + FP + FN). A class absent from both prediction and ground
/// truth scores 1.
pub fn iou(conf: &PixelConfusion, class: u8) -> f64 {
    let tp = conf.true_positives(class);
    let denom = tp + conf.false_positives(class) + conf.false_negatives(class);
    if denom == 0 {
        1.0
    } else {
        tp as f64 / denom as f64
    }
}

/// Per-class recall TP / (TP + FN). When the class is absent from ground
/// truth the score is 1 if it was never predicted and 0 otherwise.
pub fn pixel_accuracy(conf: &PixelConfusion, class: u8) -> f64 {
    let tp = conf.true_positives(class);
    let denom = tp + conf.false_negatives(class);
    if denom == 0 {
        if conf.pred_count(class) == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(codes: &[u8], table: CodeTable) -> MaskLayer {
        MaskLayer::from_codes(codes.len() as u32, 1, table, codes.to_vec()).unwrap()
    }

    #[test]
    fn identical_masks_are_diagonal() {
        let m = layer(&[0, 1, 2, 2, 7], CodeTable::Components);
        let c = accumulate_confusion(&m, &m, CodeTable::Components).unwrap();
        for g in 0..8u8 {
            for p in 0..8u8 {
                if g != p {
                    assert_eq!(c.get(g, p), 0);
                }
            }
        }
        assert_eq!(iou(&c, 2), 1.0);
        assert_eq!(pixel_accuracy(&c, 7), 1.0);
    }

    #[test]
    fn single_off_diagonal_cell() {
        let pred = MaskLayer::filled(10, 10, CodeTable::Components, 1);
        let gt = MaskLayer::filled(10, 10, CodeTable::Components, 2);
        let c = accumulate_confusion(&pred, &gt, CodeTable::Components).unwrap();
        assert_eq!(c.get(2, 1), 100);
        assert_eq!(c.total(), 100);
        assert_eq!(iou(&c, 1), 0.0);
        assert_eq!(iou(&c, 2), 0.0);
    }

    #[test]
    fn one_third_iou_hand_count() {
        // gt: 100 px positive; pred: 50 of those plus 50 others.
        let mut gt = vec![0u8; 300];
        let mut pred = vec![0u8; 300];
        gt[..100].fill(1);
        pred[50..150].fill(1);
        let c = accumulate_confusion(&layer(&pred, CodeTable::Binary), &layer(&gt, CodeTable::Binary), CodeTable::Binary)
            .unwrap();
        assert!((iou(&c, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(pixel_accuracy(&c, 1), 0.5);
    }

    #[test]
    fn absent_class_conventions() {
        let m = layer(&[0, 0, 1], CodeTable::Components);
        let c = accumulate_confusion(&m, &m, CodeTable::Components).unwrap();
        assert_eq!(iou(&c, 5), 1.0);
        assert_eq!(pixel_accuracy(&c, 5), 1.0);
        let pred = layer(&[5, 0, 1], CodeTable::Components);
        let c = accumulate_confusion(&pred, &m, CodeTable::Components).unwrap();
        assert_eq!(iou(&c, 5), 0.0);
        assert_eq!(pixel_accuracy(&c, 5), 0.0);
    }

    #[test]
    fn mismatches_rejected() {
        let a = layer(&[0, 1], CodeTable::Binary);
        let b = layer(&[0, 1, 1], CodeTable::Binary);
        assert!(accumulate_confusion(&a, &b, CodeTable::Binary).is_err());
        assert!(accumulate_confusion(&a, &a, CodeTable::Components).is_err());
    }
}
