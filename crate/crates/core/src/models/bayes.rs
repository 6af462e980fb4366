use serde::{Deserialize, Serialize};

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::models::features::TrainingSet;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-feature min-max bounds fitted on training data. Constant features
/// map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.max[j] - self.min[j];
                if span > 0.0 {
                    (v - self.min[j]) / span
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub state: DamageState,
    pub prior: f64,
    pub mean: Vec<f64>,
    /// Population variance, floored at [`VARIANCE_FLOOR`].
    pub var: Vec<f64>,
}

impl ClassGaussian {
    fn log_joint(&self, x: &[f64]) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.prior.ln()
            + x.iter()
                .zip(self.mean.iter().zip(&self.var))
                .map(|(&v, (&m, &s2))| -0.5 * (ln_2pi + s2.ln() + (v - m) * (v - m) / s2))
                .sum::<f64>()
    }
}

/// Gaussian naive Bayes over the classes seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub n_features: usize,
    pub normalization: Option<MinMax>,
    /// In severity order; only classes with training samples appear.
    pub classes: Vec<ClassGaussian>,
}

pub fn fit_naive_bayes(data: &TrainingSet, normalized: bool) -> Result<GaussianNb> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let d = data.n_features();
    let normalization = normalized.then(|| MinMax::fit(&data.rows));
    let rows: Vec<Vec<f64>> = match &normalization {
        Some(n) => data.rows.iter().map(|r| n.apply(r)).collect(),
        None => data.rows.clone(),
    };
    let n = data.len() as f64;
    let mut classes = Vec::new();
    for state in DamageState::ALL {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(&data.labels)
            .filter(|(_, &l)| l == state)
            .map(|(r, _)| r)
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| members.iter().map(|r| r[j]).sum::<f64>() / k).collect();
        let var: Vec<f64> = (0..d)
            .map(|j| {
                let v = members.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / k;
                v.max(VARIANCE_FLOOR)
            })
            .collect();
        classes.push(ClassGaussian {
            state,
            prior: k / n,
            mean,
            var,
        });
    }
    Ok(GaussianNb {
        n_features: d,
        normalization,
        classes,
    })
}

impl GaussianNb {
    fn prepare(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::InvalidArgument(format!(
                "naive Bayes expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(match &self.normalization {
            Some(n) => n.apply(x),
            None => x.to_vec(),
        })
    }

    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<(DamageState, f64)>> {
        let x = self.prepare(x)?;
        Ok(self.classes.iter().map(|c| (c.state, c.log_joint(&x))).collect())
    }

    /// Normalised posterior per trained class.
    pub fn posteriors(&self, x: &[f64]) -> Result<Vec<(DamageState, f64)>> {
        let lj = self.log_joint(x)?;
        let max = lj.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = lj.iter().map(|(_, v)| (v - max).exp()).sum();
        Ok(lj.into_iter().map(|(s, v)| (s, (v - max).exp() / z)).collect())
    }

    /// Argmax of the posterior; exact ties go to the more severe state.
    pub fn predict(&self, x: &[f64]) -> Result<DamageState> {
        let lj = self.log_joint(x)?;
        let mut best = lj[0];
        for &(s, v) in &lj[1..] {
            if v >= best.1 {
                best = (s, v);
            }
        }
        Ok(best.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::ModelFormat("naive Bayes has no classes".into()));
        }
        for c in &self.classes {
            if c.mean.len() != self.n_features
                || c.var.len() != self.n_features
                || c.var.iter().any(|&v| v.is_nan() || v < VARIANCE_FLOOR)
                || !(c.prior > 0.0 && c.prior <= 1.0)
            {
                return Err(Error::ModelFormat(format!("bad Gaussian for class {}", c.state)));
            }
        }
        if !self.classes.windows(2).all(|w| w[0].state < w[1].state) {
            return Err(Error::ModelFormat("naive Bayes classes out of order".into()));
        }
        if let Some(n) = &self.normalization {
            if n.min.len() != self.n_features || n.max.len() != self.n_features {
                return Err(Error::ModelFormat("normalization bounds have wrong length".into()));
            }
        }
        Ok(())
    }
}
