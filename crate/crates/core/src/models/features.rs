//! Five-element component descriptor `{E_t, E_sr, C_r, R_r, S_r} -> E_s`.

use serde::{Deserialize, Serialize};

use crate::classes::{DamageState, DefectClass};
use crate::error::{Error, Result};
use crate::geometry::{component_instances, ComponentInstance};
use crate::manifest::{DefectMasks, ImageRecord, Layer};

/// Component descriptor used by the shallow damage-state classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Component class code as a real number.
    pub element_type: f64,
    /// Component pixels / image pixels.
    pub element_size_ratio: f64,
    /// Crack pixels inside the component / component pixels.
    pub crack_ratio: f64,
    /// Exposed-rebar pixels inside the component / component pixels.
    pub rebar_ratio: f64,
    /// Spalling pixels inside the component / component pixels.
    pub spalling_ratio: f64,
}

impl FeatureVector {
    pub const LEN: usize = 5;
    pub const NAMES: [&'static str; 5] = ["E_t", "E_sr", "C_r", "R_r", "S_r"];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.element_type,
            self.element_size_ratio,
            self.crack_ratio,
            self.rebar_ratio,
            self.spalling_ratio,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            element_type: a[0],
            element_size_ratio: a[1],
            crack_ratio: a[2],
            rebar_ratio: a[3],
            spalling_ratio: a[4],
        }
    }

    pub fn defect_ratio(&self, defect: DefectClass) -> f64 {
        match defect {
            DefectClass::Cracking => self.crack_ratio,
            DefectClass::Spalling => self.spalling_ratio,
            DefectClass::ExposedRebar => self.rebar_ratio,
        }
    }
}

/// Computes the descriptor of one instance. Missing defect layers count as
/// zero defect pixels.
pub fn build_feature_vector(instance: &ComponentInstance, image_area: u64, defects: &DefectMasks) -> FeatureVector {
    let size = instance.len() as f64;
    let ratio = |d: DefectClass| match defects.get(d) {
        Some(layer) if !instance.is_empty() => instance.count_positive(layer) as f64 / size,
        _ => 0.0,
    };
    FeatureVector {
        element_type: f64::from(instance.code),
        element_size_ratio: size / image_area.max(1) as f64,
        crack_ratio: ratio(DefectClass::Cracking),
        rebar_ratio: ratio(DefectClass::ExposedRebar),
        spalling_ratio: ratio(DefectClass::Spalling),
    }
}

/// Rows of equal-length real features with damage-state labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<DamageState>,
}

impl TrainingSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<DamageState>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows for {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(first) = rows.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidArgument("rows have no features".into()));
            }
            if rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidArgument("rows differ in length".into()));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature value".into()));
            }
        }
        Ok(Self { rows, labels })
    }

    pub fn from_features(items: &[(FeatureVector, DamageState)]) -> Self {
        Self {
            rows: items.iter().map(|(f, _)| f.to_array().to_vec()).collect(),
            labels: items.iter().map(|(_, s)| *s).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Ground-truth descriptors of every component instance of a record: the
/// label is the pixel-majority damage state over the instance.
pub fn labeled_features(record: &ImageRecord, min_pixels: usize) -> Result<Vec<(FeatureVector, DamageState)>> {
    let components = record.require(Layer::Components)?;
    let damage = record.require(Layer::Damage)?;
    let area = record.area();
    Ok(component_instances(components, min_pixels)
        .iter()
        .map(|inst| {
            let hist = inst.histogram(damage);
            let counts = [hist[0], hist[1], hist[2], hist[3]];
            let state = DamageState::majority(&counts).expect("instances are never empty");
            (build_feature_vector(inst, area, &record.defect_masks), state)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::CodeTable;
    use crate::geometry::connected_components;
    use crate::mask::MaskLayer;

    fn single_instance(w: u32, h: u32, pixels: &[(u32, u32)], code: u8) -> (MaskLayer, ComponentInstance) {
        let mut m = MaskLayer::new(w, h, CodeTable::Components);
        for &(x, y) in pixels {
            m.set(x, y, code);
        }
        let inst = connected_components(&m, code).remove(0);
        (m, inst)
    }

    #[test]
    fn hundred_pixel_instance_quarter_cracked() {
        let px: Vec<(u32, u32)> = (0..10).flat_map(|y| (0..10).map(move |x| (x, y))).collect();
        let (_, inst) = single_instance(100, 100, &px, 1);
        let mut crack = MaskLayer::new(100, 100, CodeTable::Binary);
        for &(x, y) in &px[..25] {
            crack.set(x, y, 1);
        }
        crack.set(50, 50, 1); // outside the instance
        let mut defects = DefectMasks::default();
        defects.set(DefectClass::Cracking, Some(crack));
        let fv = build_feature_vector(&inst, 10_000, &defects);
        assert_eq!(fv.element_size_ratio, 0.01);
        assert_eq!(fv.crack_ratio, 0.25);
        assert_eq!(fv.rebar_ratio, 0.0);
        assert_eq!(fv.spalling_ratio, 0.0);
        assert_eq!(fv.element_type, 1.0);
    }

    #[test]
    fn no_defect_layers_means_zero_ratios() {
        let (_, inst) = single_instance(8, 8, &[(1, 1), (2, 2)], 3);
        let fv = build_feature_vector(&inst, 64, &DefectMasks::default());
        assert_eq!((fv.crack_ratio, fv.rebar_ratio, fv.spalling_ratio), (0.0, 0.0, 0.0));
        assert_eq!(fv.element_type, 3.0);
    }

    #[test]
    fn array_order_follows_descriptor() {
        let fv = FeatureVector::from_array([3.0, 0.0245, 5.90e-5, 3.94e-5, 9.60e-3]);
        assert_eq!(fv.element_type, 3.0);
        assert_eq!(fv.crack_ratio, 5.90e-5);
        assert_eq!(fv.rebar_ratio, 3.94e-5);
        assert_eq!(fv.spalling_ratio, 9.60e-3);
        assert_eq!(fv.to_array(), [3.0, 0.0245, 5.90e-5, 3.94e-5, 9.60e-3]);
    }

    #[test]
    fn training_set_validation() {
        assert!(TrainingSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![DamageState::Light; 2]).is_err());
        assert!(TrainingSet::new(vec![vec![f64::NAN]], vec![DamageState::Light]).is_err());
        assert!(TrainingSet::new(vec![vec![1.0]], vec![]).is_err());
    }
}
