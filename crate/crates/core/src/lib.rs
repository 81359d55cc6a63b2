//! Synthetic indoor-scene dataset engine.
//!
//! Scenes are repaired for physically based rendering, sampled for camera
//! viewpoints, rendered with raster or path-traced backends, converted to
//! per-pixel ground truth, curated against a reference corpus and evaluated
//! with normal, segmentation and boundary metrics.
//!
//! Geometry, acceleration and metric code is generic over the scalar type
//! (see [`Float`]); the scene pipeline itself runs in `f64`, exposed through
//! the aliases below.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvh;
pub mod camera;
pub mod curation;
pub mod error;
pub mod fixtures;
pub mod float;
pub mod geom;
pub mod groundtruth;
pub mod metrics;
pub mod path;
pub mod pipeline;
pub mod raster;
pub mod repair;
pub mod scene;
pub mod seed;

pub use error::{Error, Result};
pub use float::Float;

/// Scalar used by the scene pipeline.
pub type Real = f64;
pub type Vec3 = geom::Vector3<Real>;
pub type Vec3f = geom::Vector3<f32>;
pub type Ray = geom::Ray<Real>;
pub type Aabb = geom::Aabb<Real>;
pub type Affine = geom::Affine3<Real>;
pub type SceneBvh = bvh::Bvh<Real>;
pub type SceneBvhF32 = bvh::Bvh<f32>;
