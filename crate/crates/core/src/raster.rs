//! Ray-cast visibility buffers and the two non-physical shading modes:
//! a directional headlight rig and fitted local point/spot lights.

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, IdBuffer, ItemBufferRenderer};
use crate::error::{Error, Result};
use crate::geom::triangle_area;
use crate::scene::{AccelScene, Scene, SceneNode};
use crate::{Real, Vec3};

/// One primary sample per pixel center. Row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct VisBuffers {
    pub width: u32,
    pub height: u32,
    pub instance: Vec<u32>,
    pub category: Vec<u32>,
    /// Distance along the camera view axis, meters; `+inf` on background.
    pub depth: Vec<Real>,
    /// Camera-space unit normals (z toward the viewer); zero on background.
    pub normal: Vec<Vec3>,
    /// Linear surface albedo at the hit; zero on background.
    pub albedo: Vec<Vec3>,
    /// World-space hit points; zero on background.
    pub position: Vec<Vec3>,
}

impl VisBuffers {
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_background(&self, i: usize) -> bool {
        self.instance[i] == 0
    }

    pub fn id_buffer(&self) -> IdBuffer {
        IdBuffer {
            width: self.width,
            height: self.height,
            ids: self.instance.clone(),
        }
    }
}

struct PixelVis {
    instance: u32,
    category: u32,
    depth: Real,
    normal: Vec3,
    albedo: Vec3,
    position: Vec3,
}

const BACKGROUND: PixelVis = PixelVis {
    instance: 0,
    category: 0,
    depth: Real::INFINITY,
    normal: Vec3 { x: 0.0, y: 0.0, z: 0.0 },
    albedo: Vec3 { x: 0.0, y: 0.0, z: 0.0 },
    position: Vec3 { x: 0.0, y: 0.0, z: 0.0 },
};

/// Casts one ray through each pixel center. Transparent (window) surfaces
/// are hits here: they carry labels even though light passes through them.
pub fn render_visibility(accel: &AccelScene, camera: &Camera) -> VisBuffers {
    let (w, h) = (camera.width, camera.height);
    let forward = camera.forward();
    let pixels: Vec<PixelVis> = (0..w as usize * h as usize)
        .into_par_iter()
        .map(|i| {
            let ray = camera.pixel_center_ray(i as u32 % w, i as u32 / w);
            match accel.intersect_with(&ray, false) {
                Ok(Some(hit)) => PixelVis {
                    instance: hit.instance,
                    category: hit.category,
                    depth: hit.distance * ray.dir.dot(forward),
                    normal: camera.to_camera_space(hit.normal).normalized(),
                    albedo: accel.albedo(&hit),
                    position: hit.position,
                },
                _ => BACKGROUND,
            }
        })
        .collect();
    VisBuffers {
        width: w,
        height: h,
        instance: pixels.iter().map(|p| p.instance).collect(),
        category: pixels.iter().map(|p| p.category).collect(),
        depth: pixels.iter().map(|p| p.depth).collect(),
        normal: pixels.iter().map(|p| p.normal).collect(),
        albedo: pixels.iter().map(|p| p.albedo).collect(),
        position: pixels.iter().map(|p| p.position).collect(),
    }
}

impl ItemBufferRenderer for AccelScene {
    fn item_buffer(&self, camera: &Camera) -> IdBuffer {
        let w = camera.width;
        let ids = (0..camera.pixel_count())
            .into_par_iter()
            .map(|i| {
                let ray = camera.pixel_center_ray(i as u32 % w, i as u32 / w);
                match self.intersect_with(&ray, false) {
                    Ok(Some(hit)) => hit.instance,
                    _ => 0,
                }
            })
            .collect();
        IdBuffer {
            width: w,
            height: camera.height,
            ids,
        }
    }
}

/// `round(clamp(v, 0, 1) * 255)` per channel.
pub fn quantize(v: Vec3) -> [u8; 3] {
    let q = |c: Real| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
    [q(v.x), q(v.y), q(v.z)]
}

fn shade(vis: &VisBuffers, radiance: impl Fn(usize) -> Vec3 + Sync) -> RgbImage {
    let data: Vec<u8> = (0..vis.pixel_count())
        .into_par_iter()
        .flat_map_iter(|i| {
            if vis.is_background(i) {
                [0u8; 3]
            } else {
                quantize(vis.albedo[i].mul_elem(radiance(i)))
            }
        })
        .collect();
    RgbImage::from_raw(vis.width, vis.height, data).expect("buffer size matches image size")
}

fn check_size(camera: &Camera, vis: &VisBuffers) -> Result<()> {
    if camera.width != vis.width || camera.height != vis.height {
        return Err(Error::ResolutionMismatch(format!(
            "camera is {}x{}, buffers are {}x{}",
            camera.width, camera.height, vis.width, vis.height
        )));
    }
    Ok(())
}

/// Headlight plus two fill lights plus ambient. Directions point toward the light.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectionalRig {
    pub headlight: Real,
    pub fill_directions: [[Real; 3]; 2],
    pub fill_weights: [Real; 2],
    pub ambient: Real,
}

impl Default for DirectionalRig {
    fn default() -> Self {
        let n = |v: [Real; 3]| -> [Real; 3] { Vec3::from(v).normalized().into() };
        Self {
            headlight: 0.7,
            fill_directions: [n([1.0, 0.5, 1.0]), n([-1.0, 0.5, -0.8])],
            fill_weights: [0.25, 0.25],
            ambient: 0.3,
        }
    }
}

impl DirectionalRig {
    pub fn validate(&self) -> Result<()> {
        for d in self.fill_directions {
            if (Vec3::from(d).length() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!("fill direction {d:?} is not unit length")));
            }
        }
        if self.headlight < 0.0 || self.ambient < 0.0 || self.fill_weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidConfig("light weights must be >= 0".into()));
        }
        Ok(())
    }
}

/// `albedo · (ambient + Σ w·max(0, n·l))` with the headlight shining along
/// the view direction. No shadows.
pub fn shade_directional(camera: &Camera, vis: &VisBuffers, rig: &DirectionalRig) -> Result<RgbImage> {
    rig.validate()?;
    check_size(camera, vis)?;
    let head = -camera.forward();
    let fills = rig.fill_directions.map(Vec3::from);
    Ok(shade(vis, |i| {
        let n = camera.from_camera_space(vis.normal[i]);
        let mut e = rig.ambient + rig.headlight * n.dot(head).max(0.0);
        for (l, w) in fills.iter().zip(rig.fill_weights) {
            e += w * n.dot(*l).max(0.0);
        }
        Vec3::splat(e)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LightKind {
    Point,
    Spot { axis: Vec3, half_angle: Real },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLight {
    #[serde(flatten)]
    pub kind: LightKind,
    pub position: Vec3,
    /// Radiant intensity per channel, W·sr⁻¹.
    pub intensity: Vec3,
}

impl LocalLight {
    pub fn validate(&self) -> Result<()> {
        if self.intensity.x < 0.0 || self.intensity.y < 0.0 || self.intensity.z < 0.0 || !self.intensity.is_finite() {
            return Err(Error::InvalidArgument("light intensity must be finite and >= 0".into()));
        }
        if let LightKind::Spot { axis, half_angle } = self.kind {
            if !(half_angle > 0.0 && half_angle <= std::f64::consts::FRAC_PI_2) {
                return Err(Error::InvalidArgument(format!("spot half-angle {half_angle} outside (0, pi/2]")));
            }
            if (axis.length() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument("spot axis must be unit length".into()));
            }
        }
        Ok(())
    }

    /// Irradiance-like contribution `I·max(0, n·ω)/d²` at point `p` with normal `n`.
    pub fn contribution(&self, p: Vec3, n: Vec3) -> Vec3 {
        let to_light = self.position - p;
        let d2 = to_light.length_squared();
        if !(d2 > 0.0) {
            return Vec3::zero();
        }
        let w = to_light / d2.sqrt();
        if let LightKind::Spot { axis, half_angle } = self.kind {
            if (-w).dot(axis) < half_angle.cos() {
                return Vec3::zero();
            }
        }
        self.intensity * (n.dot(w).max(0.0) / d2)
    }
}

pub const SPOT_HALF_ANGLE_DEG: Real = 60.0;
pub const SPOT_AGREEMENT_DEG: Real = 30.0;

struct Candidate {
    light: LocalLight,
    power: Real,
}

/// Approximates a node's emissive face groups by point or spot lights.
///
/// Each group emits `π·Le·A` watts. A group whose triangle normals all lie
/// within 30° of their area-weighted mean becomes a spot light along that
/// mean with intensity `P/π`; otherwise it is an isotropic point light of
/// intensity `P/4π`. Lights sit at the group's area-weighted centroid and
/// the `max_lights` most powerful ones are returned.
pub fn fit_local_lights(node: &SceneNode, scene: &Scene, max_lights: usize) -> Vec<LocalLight> {
    if !node.emitter {
        return Vec::new();
    }
    let mesh = &scene.meshes[node.mesh];
    let xf = node.transform;
    let mut candidates = Vec::new();
    for g in &mesh.groups {
        let le = scene.materials[g.material].emission;
        if g.count == 0 || le.max_component() <= 0.0 {
            continue;
        }
        let mut area = 0.0;
        let mut centroid = Vec3::zero();
        let mut normal_sum = Vec3::zero();
        let mut normals = Vec::with_capacity(g.count as usize);
        for t in g.first..g.first + g.count {
            let tri = mesh.triangle_positions(t as usize).map(|p| xf.point(p));
            let a = triangle_area(&tri);
            if !(a > 0.0) {
                continue;
            }
            let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
            area += a;
            centroid += (tri[0] + tri[1] + tri[2]) * (a / 3.0);
            normal_sum += n * a;
            normals.push(n);
        }
        if !(area > 0.0) {
            continue;
        }
        let position = centroid / area;
        let flux = le * (std::f64::consts::PI * area);
        let axis = normal_sum.normalized();
        let agree = SPOT_AGREEMENT_DEG.to_radians().cos();
        let is_spot = axis.length() > 0.0 && normals.iter().all(|n| n.dot(axis) >= agree);
        let light = if is_spot {
            LocalLight {
                kind: LightKind::Spot {
                    axis,
                    half_angle: SPOT_HALF_ANGLE_DEG.to_radians(),
                },
                position,
                intensity: flux / std::f64::consts::PI,
            }
        } else {
            LocalLight {
                kind: LightKind::Point,
                position,
                intensity: flux / (4.0 * std::f64::consts::PI),
            }
        };
        candidates.push(Candidate {
            light,
            power: (flux.x + flux.y + flux.z) / 3.0,
        });
    }
    // Stable sort keeps face-group order among equal powers.
    candidates.sort_by(|a, b| b.power.total_cmp(&a.power));
    candidates.truncate(max_lights);
    candidates.into_iter().map(|c| c.light).collect()
}

/// Fitted lights of every emitter node, strongest first per node.
pub fn scene_local_lights(scene: &Scene, max_lights_per_node: usize) -> Vec<LocalLight> {
    scene
        .nodes
        .iter()
        .flat_map(|n| fit_local_lights(n, scene, max_lights_per_node))
        .collect()
}

pub const LOCAL_AMBIENT: Real = 0.15;

/// `albedo · (ambient + Σ f_l)` without occlusion.
pub fn shade_local(camera: &Camera, vis: &VisBuffers, lights: &[LocalLight], ambient: Real) -> Result<RgbImage> {
    check_size(camera, vis)?;
    for l in lights {
        l.validate()?;
    }
    Ok(shade(vis, |i| {
        let n = camera.from_camera_space(vis.normal[i]);
        let p = vis.position[i];
        lights
            .iter()
            .fold(Vec3::splat(ambient), |acc, l| acc + l.contribution(p, n))
    }))
}
