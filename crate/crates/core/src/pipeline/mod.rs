//! The staged inspection workflow: background removal, component
//! segmentation, per-component defect segmentation and damage assessment.

mod config;
mod evaluate;
mod overlay;
mod run;

pub use config::{PipelineConfig, PipelineParams};
pub use evaluate::{evaluate_pipeline, EvaluationSummary};
pub use overlay::{render_overlay, CLASS_COLORS, DEFECT_OUTLINE, STATE_COLORS};
pub use run::{run_batch, run_pipeline, write_report, BatchFailure, BatchItem, InstanceReport, StructureReport};
