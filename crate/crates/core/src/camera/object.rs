use rand::Rng;

use super::{icosphere_points, Camera};
use crate::error::{Error, Result};
use crate::{seed, Aabb, Real};

/// Object-centric viewpoint sampling parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ObjectViewParams {
    pub subdivision: u32,
    /// Camera distance range as multiples of the bounding-box diagonal.
    pub distance_range: [Real; 2],
    pub cameras_per_object: usize,
    pub hfov_deg: Real,
    pub image_size: [u32; 2],
    pub seed: u64,
}

impl Default for ObjectViewParams {
    fn default() -> Self {
        Self {
            subdivision: 2,
            distance_range: [1.5, 4.5],
            cameras_per_object: 20,
            hfov_deg: 60.0,
            image_size: [320, 240],
            seed: 0,
        }
    }
}

impl ObjectViewParams {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.distance_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("distance range {lo}..{hi} must be positive and ordered")));
        }
        Ok(())
    }
}

/// Cameras placed at random icosphere vertices around the box center, at a
/// random distance of `distance_range × diagonal`, each looking at the center.
pub fn sample_object_cameras(bbox: &Aabb, params: &ObjectViewParams) -> Result<Vec<Camera>> {
    params.validate()?;
    let diag = bbox.diagonal();
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(Error::InvalidArgument("object bounding box is degenerate".into()));
    }
    let center = bbox.center();
    let points = icosphere_points(params.subdivision);
    let mut rng = seed::rng(seed::derive(&["object-cameras".into(), params.seed.into()]));
    let [lo, hi] = params.distance_range;
    (0..params.cameras_per_object)
        .map(|_| {
            let dir = points[rng.random_range(0..points.len())];
            let dist = rng.random_range(lo..=hi) * diag;
            Camera::look_at(
                center + dir * dist,
                center,
                params.hfov_deg.to_radians(),
                params.image_size[0],
                params.image_size[1],
            )
        })
        .collect()
}
