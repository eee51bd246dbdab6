use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::BoundingBox;

/// Number of points on the threshold grid `0.00, 0.01, ..., 1.00`.
pub const GRID_POINTS: usize = 101;

pub fn iou(a: BoundingBox, b: BoundingBox) -> f64 {
    let ix = a.right().min(b.right()).saturating_sub(a.x.max(b.x));
    let iy = a.bottom().min(b.bottom()).saturating_sub(a.y.max(b.y));
    let inter = (ix * iy) as f64;
    let union = (a.area() + b.area()) as f64 - inter;
    inter / union
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub success_rate: Vec<f64>,
    pub auc: f64,
}

pub fn threshold_grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|i| i as f64 / 100.0).collect()
}

/// Fraction of pairs with IoU strictly above each grid threshold, and its mean.
pub fn success_curve(ious: &[f64]) -> Result<SuccessCurve> {
    if ious.is_empty() {
        return Err(Error::Argument("success curve of an empty result set".into()));
    }
    if let Some(bad) = ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Argument(format!("IoU {bad} is outside [0, 1]")));
    }
    let thresholds = threshold_grid();
    let counts: Vec<usize> = thresholds
        .iter()
        .map(|&t| ious.iter().filter(|&&v| v > t).count())
        .collect();
    let n = ious.len() as f64;
    let success_rate = counts.iter().map(|&c| c as f64 / n).collect();
    let auc = counts.iter().sum::<usize>() as f64 / (n * GRID_POINTS as f64);
    Ok(SuccessCurve {
        thresholds,
        success_rate,
        auc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCategory {
    AllFail,
    AllSucceed,
    Similar,
    Discriminative,
}

impl PairCategory {
    /// First matching rule wins: all below 0.1, all above 0.8, spread at
    /// most 0.1, otherwise discriminative.
    pub fn classify(row: &[f64]) -> Self {
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi < 0.1 {
            PairCategory::AllFail
        } else if lo > 0.8 {
            PairCategory::AllSucceed
        } else if hi - lo <= 0.1 + 1e-12 {
            PairCategory::Similar
        } else {
            PairCategory::Discriminative
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub all_fail: usize,
    pub all_succeed: usize,
    pub similar: usize,
    pub discriminative: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.all_fail + self.all_succeed + self.similar + self.discriminative
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledPair {
    pub id: String,
    pub category: PairCategory,
    pub ious: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminabilityReport {
    pub methods: Vec<String>,
    pub counts: CategoryCounts,
    pub pairs: Vec<LabeledPair>,
}

/// Labels each pair from its IoU under every method (`rows[pair][method]`).
pub fn discriminability_report(methods: &[String], ids: &[String], rows: &[Vec<f64>]) -> Result<DiscriminabilityReport> {
    if methods.len() < 2 {
        return Err(Error::Argument(format!(
            "discriminability needs at least 2 methods, got {}",
            methods.len()
        )));
    }
    if ids.len() != rows.len() {
        return Err(Error::Dimension(format!("{} ids for {} rows", ids.len(), rows.len())));
    }
    let mut counts = CategoryCounts::default();
    let mut pairs = Vec::with_capacity(rows.len());
    for (id, row) in ids.iter().zip(rows) {
        if row.len() != methods.len() {
            return Err(Error::Dimension(format!(
                "pair {id} has {} IoUs for {} methods",
                row.len(),
                methods.len()
            )));
        }
        let category = PairCategory::classify(row);
        match category {
            PairCategory::AllFail => counts.all_fail += 1,
            PairCategory::AllSucceed => counts.all_succeed += 1,
            PairCategory::Similar => counts.similar += 1,
            PairCategory::Discriminative => counts.discriminative += 1,
        }
        pairs.push(LabeledPair {
            id: id.clone(),
            category,
            ious: row.clone(),
        });
    }
    Ok(DiscriminabilityReport {
        methods: methods.to_vec(),
        counts,
        pairs,
    })
}
