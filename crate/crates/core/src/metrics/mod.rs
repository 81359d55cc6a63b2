//! Evaluation suites: surface-normal angular error, semantic mean IoU and
//! boundary precision/recall.

mod boundary;
pub mod io;
mod normals;
mod seg;

pub use boundary::{
    boundary_metrics, match_boundaries, BoundaryImage, BoundaryMetrics, DEFAULT_TOLERANCE, THRESHOLDS,
};
pub use normals::{median, normal_metrics, NormalMetrics, NORMAL_THRESHOLDS_DEG};
pub use seg::{mean_iou, ClassIou, SegMetrics};
