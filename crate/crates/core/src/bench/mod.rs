//! Benchmark harness: pair manifests, IoU and success-curve metrics,
//! dataset evaluation, result files, and PCA feature visualization.

mod eval;
mod manifest;
mod metrics;
mod report;
pub mod synth;
mod visualize;

pub use eval::{evaluate_dataset, EvalOptions, EvalRecord, Evaluation};
pub use manifest::{load_gt_boxes, load_manifest, pair_from_gt_file, write_manifest, PairManifest};
pub use metrics::{
    discriminability_report, iou, success_curve, threshold_grid, CategoryCounts, DiscriminabilityReport,
    LabeledPair, PairCategory, SuccessCurve, GRID_POINTS,
};
pub use report::{
    discriminability_from_csvs, read_results_csv, success_curve_svg, write_curve_svg, write_json,
    write_results_csv, CSV_HEADER,
};
pub use visualize::{pca_rgb, visualize_pca_rgb};
