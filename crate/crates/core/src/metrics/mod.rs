//! Evaluation arithmetic: pixel confusion tallies, IoU, pixel accuracy and
//! classification scores.
//!
//! Everything is tallied in integers and converted to ratios only when a
//! report is built.

mod classification;
mod confusion;

use serde::Serialize;

pub use classification::{classification_metrics, ClassificationReport, StateMetrics};
pub use confusion::{accumulate_confusion, iou, pixel_accuracy, PixelConfusion};

use crate::error::{Error, Result};

/// Convention recorded in every segmentation report.
pub const MEAN_CONVENTION: &str =
    "means average classes present in ground truth; pixel accuracy is per-class recall TP/(TP+FN)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSegMetrics {
    pub code: u8,
    pub name: String,
    pub gt_pixels: u64,
    pub pred_pixels: u64,
    pub iou: f64,
    pub pixel_accuracy: f64,
    /// Whether the class takes part in the means.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationReport {
    pub per_class: Vec<ClassSegMetrics>,
    /// `None` when no class is present in ground truth.
    pub mean_iou: Option<f64>,
    pub mean_pixel_accuracy: Option<f64>,
    pub convention: &'static str,
    pub confusion: PixelConfusion,
}

impl SegmentationReport {
    pub fn from_confusion(conf: PixelConfusion) -> Self {
        let per_class: Vec<ClassSegMetrics> = (0..conf.num_classes() as u8)
            .map(|c| ClassSegMetrics {
                code: c,
                name: conf.table.class_name(c),
                gt_pixels: conf.gt_count(c),
                pred_pixels: conf.pred_count(c),
                iou: iou(&conf, c),
                pixel_accuracy: pixel_accuracy(&conf, c),
                included: conf.gt_count(c) > 0,
            })
            .collect();
        let included: Vec<&ClassSegMetrics> = per_class.iter().filter(|c| c.included).collect();
        let mean = |f: fn(&ClassSegMetrics) -> f64| {
            (!included.is_empty())
                .then(|| included.iter().map(|c| f(c)).sum::<f64>() / included.len() as f64)
        };
        Self {
            mean_iou: mean(|c| c.iou),
            mean_pixel_accuracy: mean(|c| c.pixel_accuracy),
            per_class,
            convention: MEAN_CONVENTION,
            confusion: conf,
        }
    }

    pub fn class(&self, code: u8) -> Option<&ClassSegMetrics> {
        self.per_class.get(code as usize)
    }

    /// CSV with one row per metric and one column per class plus the mean,
    /// values in percent.
    pub fn to_csv_table(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["metric".to_string()];
        header.extend(self.per_class.iter().map(|c| c.name.clone()));
        header.push("mean".into());
        w.write_record(&header)?;
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let opt = |v: Option<f64>| v.map(pct).unwrap_or_default();
        let mut row = vec!["IoU [%]".to_string()];
        row.extend(self.per_class.iter().map(|c| pct(c.iou)));
        row.push(opt(self.mean_iou));
        w.write_record(&row)?;
        let mut row = vec!["Pixel accuracy [%]".to_string()];
        row.extend(self.per_class.iter().map(|c| pct(c.pixel_accuracy)));
        row.push(opt(self.mean_pixel_accuracy));
        w.write_record(&row)?;
        finish_csv(w)
    }
}

impl ClassificationReport {
    /// Single-row CSV: accuracy per state, average accuracy, average F1, in
    /// percent.
    pub fn to_csv_table(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.per_class.iter().map(|c| format!("{} accuracy", c.state)).collect();
        header.push("average accuracy".into());
        header.push("average f1".into());
        w.write_record(&header)?;
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let mut row: Vec<String> = self
            .per_class
            .iter()
            .map(|c| c.accuracy.map(pct).unwrap_or_default())
            .collect();
        row.push(pct(self.average_accuracy));
        row.push(pct(self.macro_f1));
        w.write_record(&row)?;
        finish_csv(w)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Scores of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricsReport {
    Segmentation(SegmentationReport),
    Classification(ClassificationReport),
}

impl MetricsReport {
    pub fn as_segmentation(&self) -> Option<&SegmentationReport> {
        match self {
            MetricsReport::Segmentation(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_classification(&self) -> Option<&ClassificationReport> {
        match self {
            MetricsReport::Classification(c) => Some(c),
            _ => None,
        }
    }

    /// Mean IoU for segmentation stages, average accuracy for
    /// classification.
    pub fn headline(&self) -> Option<f64> {
        match self {
            MetricsReport::Segmentation(s) => s.mean_iou,
            MetricsReport::Classification(c) => Some(c.average_accuracy),
        }
    }

    pub fn to_csv_table(&self) -> Result<String> {
        match self {
            MetricsReport::Segmentation(s) => s.to_csv_table(),
            MetricsReport::Classification(c) => c.to_csv_table(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::CodeTable;
    use crate::mask::MaskLayer;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_layer(rng: &mut SplitMix64, w: u32, h: u32, table: CodeTable) -> MaskLayer {
        let k = table.num_classes() as u64;
        let codes = (0..w * h).map(|_| rng.below(k) as u8).collect();
        MaskLayer::from_codes(w, h, table, codes).unwrap()
    }

    #[test]
    fn means_over_included_classes() {
        let gt = MaskLayer::from_codes(4, 1, CodeTable::Components, vec![0, 0, 1, 1]).unwrap();
        let pred = MaskLayer::from_codes(4, 1, CodeTable::Components, vec![0, 1, 1, 1]).unwrap();
        let r = SegmentationReport::from_confusion(accumulate_confusion(&pred, &gt, CodeTable::Components).unwrap());
        assert!(r.class(0).unwrap().included && r.class(1).unwrap().included);
        assert!(!r.class(3).unwrap().included);
        let expect = (0.5 + 2.0 / 3.0) / 2.0;
        assert!((r.mean_iou.unwrap() - expect).abs() < 1e-12);
        assert!((r.mean_pixel_accuracy.unwrap() - 0.75).abs() < 1e-12);
        let csv = r.to_csv_table().unwrap();
        assert!(csv.starts_with("metric,background,wall"));
    }

    #[test]
    fn streaming_equals_concatenated() {
        let mut rng = SplitMix64::new(5);
        let pairs: Vec<(MaskLayer, MaskLayer)> = (0..8)
            .map(|_| (random_layer(&mut rng, 9, 7, CodeTable::Damage), random_layer(&mut rng, 9, 7, CodeTable::Damage)))
            .collect();
        let mut streamed = PixelConfusion::new(CodeTable::Damage);
        for (p, g) in &pairs {
            streamed.accumulate(p, g).unwrap();
        }
        let pcat: Vec<u8> = pairs.iter().flat_map(|(p, _)| p.codes().to_vec()).collect();
        let gcat: Vec<u8> = pairs.iter().flat_map(|(_, g)| g.codes().to_vec()).collect();
        let big = accumulate_confusion(
            &MaskLayer::from_codes(9, 56, CodeTable::Damage, pcat).unwrap(),
            &MaskLayer::from_codes(9, 56, CodeTable::Damage, gcat).unwrap(),
            CodeTable::Damage,
        )
        .unwrap();
        assert_eq!(streamed, big);
        assert_eq!(SegmentationReport::from_confusion(streamed), SegmentationReport::from_confusion(big));
    }

    proptest! {
        #[test]
        fn merge_is_order_free_and_iou_bounded(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = SplitMix64::new(seed);
            let parts: Vec<PixelConfusion> = (0..n).map(|_| {
                let p = random_layer(&mut rng, 6, 5, CodeTable::Components);
                let g = random_layer(&mut rng, 6, 5, CodeTable::Components);
                accumulate_confusion(&p, &g, CodeTable::Components).unwrap()
            }).collect();
            let mut fwd = PixelConfusion::new(CodeTable::Components);
            for p in &parts { fwd.merge(p).unwrap(); }
            let mut rev = PixelConfusion::new(CodeTable::Components);
            for p in parts.iter().rev() { rev.merge(p).unwrap(); }
            prop_assert_eq!(&fwd, &rev);
            prop_assert_eq!(fwd.total(), 30 * n as u64);
            for c in 0..8u8 {
                let i = iou(&fwd, c);
                prop_assert!((0.0..=1.0).contains(&i));
                if fwd.gt_count(c) > 0 {
                    prop_assert!(i <= pixel_accuracy(&fwd, c));
                }
            }
        }
    }
}
