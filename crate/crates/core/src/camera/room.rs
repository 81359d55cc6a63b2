use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;

use super::Camera;
use crate::error::{Error, Result};
use crate::geom::point_in_polygon;
use crate::scene::{AccelScene, Room, Scene};
use crate::{seed, Real, Vec3};

/// Per-pixel instance ids, row-major; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBuffer {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u32>,
}

/// Anything that can produce an item buffer for a camera.
pub trait ItemBufferRenderer: Sync {
    fn item_buffer(&self, camera: &Camera) -> IdBuffer;
}

/// In-room camera sampling parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CameraParams {
    pub grid_resolution: Real,
    pub sectors: u32,
    pub height_range: [Real; 2],
    pub tilt_deg: Real,
    pub clearance: Real,
    pub min_objects: usize,
    pub min_coverage: Real,
    pub hfov_deg: Real,
    pub probe_size: [u32; 2],
    pub seed: u64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            grid_resolution: 0.25,
            sectors: 6,
            height_range: [1.5, 1.6],
            tilt_deg: 11.0,
            clearance: 0.10,
            min_objects: 3,
            min_coverage: 0.01,
            hfov_deg: 60.0,
            probe_size: [320, 240],
            seed: 0,
        }
    }
}

impl CameraParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_resolution > 0.0) {
            return Err(Error::InvalidConfig("grid resolution must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(Error::InvalidConfig("min coverage must lie in [0, 1]".into()));
        }
        if self.sectors == 0 {
            return Err(Error::InvalidConfig("sector count must be >= 1".into()));
        }
        if !(self.height_range[0] <= self.height_range[1]) || self.clearance < 0.0 {
            return Err(Error::InvalidConfig("height range must be ordered and clearance >= 0".into()));
        }
        Ok(())
    }
}

/// Pixel coverage of one item buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Pixel fraction per visible instance id (background excluded).
    pub fractions: BTreeMap<u32, Real>,
    /// Summed fraction over object instances (not wall, floor or ceiling).
    pub object_fraction: Real,
    pub visible_objects: usize,
    /// Object instance ids, ascending.
    pub objects: Vec<u32>,
}

impl CoverageReport {
    /// Number of objects each covering at least `min_coverage` of the pixels.
    pub fn objects_at_least(&self, min_coverage: Real) -> usize {
        self.objects.iter().filter(|id| self.fractions[id] >= min_coverage).count()
    }

    pub fn qualifies(&self, min_objects: usize, min_coverage: Real) -> bool {
        self.objects_at_least(min_coverage) >= min_objects
    }
}

pub fn coverage_report(buffer: &IdBuffer, scene: &Scene) -> Result<CoverageReport> {
    let total = buffer.ids.len();
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &id in &buffer.ids {
        if id != 0 {
            *counts.entry(id).or_default() += 1;
        }
    }
    let categories: HashMap<u32, u32> = scene.nodes.iter().map(|n| (n.id, n.category)).collect();
    let mut fractions = BTreeMap::new();
    let mut objects = Vec::new();
    let mut object_fraction = 0.0;
    for (&id, &count) in &counts {
        let cat = *categories.get(&id).ok_or(Error::UnknownInstance(id))?;
        let f = count as Real / total.max(1) as Real;
        fractions.insert(id, f);
        if !scene.categories.is_structural(cat) {
            objects.push(id);
            object_fraction += f;
        }
    }
    Ok(CoverageReport {
        fractions,
        object_fraction,
        visible_objects: objects.len(),
        objects,
    })
}

/// The winning camera of one yaw sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorCamera {
    pub sector: u32,
    pub camera: Camera,
    pub object_fraction: Real,
    pub candidate_index: usize,
}

struct Candidate {
    camera: Camera,
}

/// Picks at most one camera per yaw sector of `room`.
///
/// Each sector scores one random viewpoint per floor grid cell (cells whose
/// point falls outside the floor polygon, or within `clearance` of any
/// geometry, are dropped). Among candidates whose item buffer shows at least
/// `min_objects` objects at `min_coverage` each, the one with the largest
/// object coverage wins; ties go to the earliest candidate.
pub fn sample_room_cameras(
    accel: &AccelScene,
    room: &Room,
    params: &CameraParams,
    renderer: &dyn ItemBufferRenderer,
) -> Result<Vec<SectorCamera>> {
    params.validate()?;
    if room.floor.len() < 3 {
        return Ok(Vec::new());
    }
    let scene = accel.scene();
    let mut rng = seed::rng(seed::derive(&[
        "room-cameras".into(),
        scene.id.as_str().into(),
        room.id.as_str().into(),
        params.seed.into(),
    ]));
    let (mut min_x, mut min_z) = (Real::INFINITY, Real::INFINITY);
    let (mut max_x, mut max_z) = (Real::NEG_INFINITY, Real::NEG_INFINITY);
    for p in &room.floor {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_z = min_z.min(p[1]);
        max_z = max_z.max(p[1]);
    }
    let res = params.grid_resolution;
    let nx = ((max_x - min_x) / res).ceil().max(1.0) as usize;
    let nz = ((max_z - min_z) / res).ceil().max(1.0) as usize;
    let sector_width = 2.0 * std::f64::consts::PI / params.sectors as Real;
    let pitch = params.tilt_deg.to_radians();
    let hfov = params.hfov_deg.to_radians();
    let [w, h] = params.probe_size;

    let mut out = Vec::new();
    for sector in 0..params.sectors {
        let mut candidates = Vec::new();
        for iz in 0..nz {
            for ix in 0..nx {
                // Draw every variate up front so the stream does not depend on rejections.
                let (ux, uz): (Real, Real) = (rng.random(), rng.random());
                let uyaw: Real = rng.random();
                let uh: Real = rng.random();
                let x = min_x + (ix as Real + ux) * res;
                let z = min_z + (iz as Real + uz) * res;
                if !point_in_polygon([x, z], &room.floor) {
                    continue;
                }
                let height = params.height_range[0] + uh * (params.height_range[1] - params.height_range[0]);
                let position = Vec3::new(x, room.floor_y + height, z);
                if accel.bvh().any_within(position, params.clearance) {
                    continue;
                }
                let yaw = (sector as Real + uyaw) * sector_width;
                candidates.push(Candidate {
                    camera: Camera::new(position, yaw, pitch, hfov, w, h)?,
                });
            }
        }
        let reports: Vec<Result<CoverageReport>> = candidates
            .par_iter()
            .map(|c| coverage_report(&renderer.item_buffer(&c.camera), scene))
            .collect();
        let mut best: Option<(usize, Real)> = None;
        for (i, r) in reports.into_iter().enumerate() {
            let r = r?;
            if !r.qualifies(params.min_objects, params.min_coverage) {
                continue;
            }
            if best.map_or(true, |(_, s)| r.object_fraction > s) {
                best = Some((i, r.object_fraction));
            }
        }
        if let Some((i, score)) = best {
            out.push(SectorCamera {
                sector,
                camera: candidates[i].camera,
                object_fraction: score,
                candidate_index: i,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Affine3;
    use crate::scene::{Material, TriMesh};

    fn scene_with(categories: &[&str]) -> Scene {
        let mut s = Scene::empty("cov");
        let m = s.add_material(Material::diffuse("m", Vec3::splat(0.5)));
        let mesh = s.add_mesh(TriMesh::new(
            "t",
            vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            m,
        ));
        for c in categories {
            s.add_node(c, mesh, Affine3::identity());
        }
        s
    }

    #[test]
    fn all_background_has_no_objects() {
        let s = scene_with(&["chair"]);
        let r = coverage_report(&IdBuffer { width: 4, height: 4, ids: vec![0; 16] }, &s).unwrap();
        assert_eq!(r.visible_objects, 0);
        assert!(r.fractions.is_empty());
        assert_eq!(r.object_fraction, 0.0);
    }

    #[test]
    fn fifty_pixels_of_ten_thousand() {
        let s = scene_with(&["chair"]);
        let mut ids = vec![0; 100 * 100];
        ids[..50].fill(1);
        let r = coverage_report(&IdBuffer { width: 100, height: 100, ids }, &s).unwrap();
        assert_eq!(r.fractions[&1], 0.005);
        assert_eq!(r.visible_objects, 1);
    }

    #[test]
    fn walls_are_not_objects() {
        let s = scene_with(&["wall", "chair"]);
        let mut ids = vec![1; 64];
        ids[32..].fill(2);
        let r = coverage_report(&IdBuffer { width: 8, height: 8, ids }, &s).unwrap();
        assert_eq!(r.visible_objects, 1);
        assert_eq!(r.objects, vec![2]);
        assert_eq!(r.object_fraction, 0.5);
    }

    #[test]
    fn unknown_id_is_named() {
        let s = scene_with(&["chair"]);
        let err = coverage_report(&IdBuffer { width: 1, height: 1, ids: vec![9] }, &s).unwrap_err();
        assert!(matches!(err, Error::UnknownInstance(9)));
    }

    #[test]
    fn empty_floor_yields_no_cameras() {
        struct Never;
        impl ItemBufferRenderer for Never {
            fn item_buffer(&self, _: &Camera) -> IdBuffer {
                unreachable!()
            }
        }
        let s = scene_with(&["chair"]);
        let room = Room {
            id: "r".into(),
            floor_y: 0.0,
            floor: vec![],
            ceiling_height: 2.5,
            walls: vec![],
            nodes: vec![],
        };
        let acc = AccelScene::new(s);
        assert!(sample_room_cameras(&acc, &room, &CameraParams::default(), &Never).unwrap().is_empty());
    }
}
