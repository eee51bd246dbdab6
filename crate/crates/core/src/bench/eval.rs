use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::manifest::PairManifest;
use super::metrics::{iou, success_curve, SuccessCurve};
use crate::error::{Error, Result};
use crate::pipeline::{locate, PipelineConfig};
use crate::tensor::{decode_image, BoundingBox};
use crate::vgg::WeightBundle;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub id: String,
    /// `None` when the pair failed.
    pub predicted_box: Option<BoundingBox>,
    pub iou: f64,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub records: Vec<EvalRecord>,
    pub curve: SuccessCurve,
}

impl Evaluation {
    pub fn failures(&self) -> impl Iterator<Item = &EvalRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

fn evaluate_pair(pair: &PairManifest, config: &PipelineConfig, bundle: Option<&WeightBundle>) -> EvalRecord {
    let start = Instant::now();
    let outcome = (|| {
        let template = decode_image(&pair.template_image)?;
        let search = if pair.search_image == pair.template_image {
            template.clone()
        } else {
            decode_image(&pair.search_image)?
        };
        locate(&template, &search, pair.template_box, config, bundle)
    })();
    let wall_time = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => EvalRecord {
            id: pair.id.clone(),
            predicted_box: Some(o.predicted),
            iou: iou(o.predicted, pair.gt_box),
            wall_time,
            error: None,
        },
        Err(e) => EvalRecord {
            id: pair.id.clone(),
            predicted_box: None,
            iou: 0.0,
            wall_time,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every pair through the pipeline. Per-pair failures score IoU 0 and
/// keep their message; records come back in manifest order.
pub fn evaluate_dataset(
    pairs: &[PairManifest],
    config: &PipelineConfig,
    bundle: Option<&WeightBundle>,
    options: EvalOptions,
) -> Result<Evaluation> {
    if pairs.is_empty() {
        return Err(Error::Argument("the manifest has no pairs".into()));
    }
    if config.needs_bundle() && bundle.is_none() {
        return Err(Error::Argument("deep features need a weight bundle".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", options.workers)))?;
    let records: Vec<EvalRecord> =
        pool.install(|| pairs.par_iter().map(|p| evaluate_pair(p, config, bundle)).collect());
    let ious: Vec<f64> = records.iter().map(|r| r.iou).collect();
    let curve = success_curve(&ious)?;
    Ok(Evaluation { records, curve })
}
