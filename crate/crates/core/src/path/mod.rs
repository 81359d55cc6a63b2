//! Unidirectional path tracer with next-event estimation toward area
//! emitters and the environment map, combined by multiple importance
//! sampling (power heuristic). Lambertian surfaces only; α = 0 surfaces are
//! passed through.

mod bench;
mod env;
mod hdr;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bench::{bench_to_csv, integrator_benchmark, write_bench_csv, BenchRow};
pub use env::{luminance, EnvSample, EnvironmentMap};
pub use hdr::{read_f32_grid, tonemap, write_f32_grid, HdrImage, F32_GRID_MAGIC};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geom::Ray;
use crate::scene::{spawn_point, AccelScene, Hit};
use crate::{seed, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LightingMode {
    /// Environment light only; scene emission is ignored.
    OutdoorOnly,
    /// Area emitters plus the environment.
    IndoorOutdoor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub spp: u32,
    pub max_depth: u32,
    pub rr_start: u32,
    pub mode: LightingMode,
    pub env_map: Option<PathBuf>,
    pub exposure: Real,
    pub gamma: Real,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            spp: 256,
            max_depth: 8,
            rr_start: 4,
            mode: LightingMode::IndoorOutdoor,
            env_map: None,
            exposure: 0.0,
            gamma: 2.2,
            seed: 0,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 {
            return Err(Error::InvalidConfig("spp must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max depth must be >= 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be > 0".into()));
        }
        Ok(())
    }
}

/// Output of [`render_path`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathRender {
    pub image: HdrImage,
    /// Per-pixel, per-channel sample variance divided by spp (variance of the mean).
    pub variance: Vec<Vec3>,
    /// Instance id of the first non-transparent surface along each center ray.
    pub primary_instance: Vec<u32>,
    /// Samples that came out non-finite and were replaced by 0.
    pub nan_samples: u64,
}

fn power_heuristic(a: Real, b: Real) -> Real {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 == 0.0 {
        0.0
    } else {
        a2 / (a2 + b2)
    }
}

struct Tracer<'a> {
    accel: &'a AccelScene,
    env: &'a EnvironmentMap,
    cfg: &'a PathConfig,
    use_emitters: bool,
}

impl Tracer<'_> {
    /// Solid-angle density with which emitter NEE picks the point `hit`, reached along `dir`.
    fn emitter_pdf(&self, hit: &Hit, dir: Vec3) -> Real {
        let cos = hit.normal.dot(dir).abs();
        if cos <= 0.0 {
            return 0.0;
        }
        self.accel.emitter_pdf_area(hit.prim) * hit.distance * hit.distance / cos
    }

    fn radiance(&self, primary: Ray<Real>, rng: &mut ChaCha8Rng) -> Vec3 {
        let mut l = Vec3::zero();
        let mut beta = Vec3::splat(1.0);
        let mut ray = primary;
        let mut bsdf_pdf = 0.0;
        let mut depth = 0u32;
        loop {
            let hit = match self.accel.intersect_with(&ray, true) {
                Ok(Some(h)) => h,
                Ok(None) => {
                    let le = self.env.radiance(ray.dir);
                    let w = if depth == 0 { 1.0 } else { power_heuristic(bsdf_pdf, self.env.pdf(ray.dir)) };
                    l += beta.mul_elem(le) * w;
                    break;
                }
                Err(_) => break,
            };
            if self.use_emitters {
                let le = self.accel.emitted(&hit);
                if le.max_component() > 0.0 {
                    let w = if depth == 0 { 1.0 } else { power_heuristic(bsdf_pdf, self.emitter_pdf(&hit, ray.dir)) };
                    l += beta.mul_elem(le) * w;
                }
            }
            depth += 1;
            if depth > self.cfg.max_depth {
                break;
            }
            let material = &self.accel.scene().materials[hit.material];
            if !hit.front_face && !material.two_sided {
                // Back of a one-sided surface absorbs.
                break;
            }
            // Shading frame on the side the ray arrived from.
            let n = if hit.normal.dot(ray.dir) < 0.0 { hit.normal } else { -hit.normal };
            let albedo = self.accel.albedo(&hit);
            if albedo.max_component() <= 0.0 {
                break;
            }
            let f = albedo / std::f64::consts::PI;
            let x = spawn_point(hit.position, n);

            let u_sel: Real = rng.random();
            let (u1, u2): (Real, Real) = (rng.random(), rng.random());
            if self.use_emitters {
                if let Some(s) = self.accel.sample_emitter(u_sel, u1, u2) {
                    let to = s.position - x;
                    let d2 = to.length_squared();
                    let wi = to / d2.sqrt();
                    let cos_x = n.dot(wi);
                    let cos_l = -s.normal.dot(wi);
                    let cos_l = if s.two_sided { cos_l.abs() } else { cos_l };
                    if cos_x > 0.0 && cos_l > 0.0 && !self.accel.occluded(x, s.position) {
                        let p_light = s.pdf_area * d2 / cos_l;
                        let w = power_heuristic(p_light, cos_x / std::f64::consts::PI);
                        l += beta.mul_elem(f).mul_elem(s.emission) * (cos_x * w / p_light);
                    }
                }
            }
            let (v1, v2): (Real, Real) = (rng.random(), rng.random());
            if let Some(s) = self.env.sample(v1, v2) {
                let cos_x = n.dot(s.dir);
                if cos_x > 0.0 && !self.accel.occluded_dir(x, s.dir) {
                    let w = power_heuristic(s.pdf, cos_x / std::f64::consts::PI);
                    l += beta.mul_elem(f).mul_elem(s.radiance) * (cos_x * w / s.pdf);
                }
            }

            // Cosine-weighted continuation: f·cos/pdf = albedo.
            let (b1, b2): (Real, Real) = (rng.random(), rng.random());
            let r = b1.sqrt();
            let phi = 2.0 * std::f64::consts::PI * b2;
            let (t, b) = n.orthonormal_basis();
            let local_z = (1.0 - b1).max(0.0).sqrt();
            let wi = (t * (r * phi.cos()) + b * (r * phi.sin()) + n * local_z).normalized();
            bsdf_pdf = n.dot(wi).max(0.0) / std::f64::consts::PI;
            if !(bsdf_pdf > 0.0) {
                break;
            }
            beta = beta.mul_elem(albedo);
            if depth >= self.cfg.rr_start {
                let q = beta.max_component().min(0.95);
                if rng.random::<Real>() >= q {
                    break;
                }
                beta = beta / q;
            }
            ray = Ray::new(x, wi);
        }
        l
    }
}

/// Renders one HDR image with `cfg.spp` samples through each pixel center.
/// Sample `s` of pixel `(x, y)` draws from its own stream seeded by
/// `(cfg.seed, x, y, s)`, so the result does not depend on thread count and
/// a render with fewer samples is a prefix of one with more.
pub fn render_path(
    accel: &AccelScene,
    camera: &Camera,
    cfg: &PathConfig,
    env: Option<&EnvironmentMap>,
) -> Result<PathRender> {
    cfg.validate()?;
    camera.validate()?;
    let env = env.ok_or_else(|| Error::InvalidConfig("path tracing requires an environment map".into()))?;
    let use_emitters = cfg.mode == LightingMode::IndoorOutdoor;
    let nan = AtomicU64::new(0);
    let w = camera.width;
    let results: Vec<(Vec3, Vec3, u32)> = (0..camera.pixel_count())
        .into_par_iter()
        .map(|i| {
            let tracer = Tracer {
                accel,
                env,
                cfg,
                use_emitters,
            };
            let (x, y) = (i as u32 % w, i as u32 / w);
            let ray = camera.pixel_center_ray(x, y);
            let primary = match accel.intersect_with(&ray, true) {
                Ok(Some(h)) => h.instance,
                _ => 0,
            };
            let mut mean = Vec3::zero();
            let mut m2 = Vec3::zero();
            for s in 0..cfg.spp {
                let mut rng = seed::rng(seed::pixel_sample_seed(cfg.seed, x, y, s));
                let mut v = tracer.radiance(ray, &mut rng);
                if !v.is_finite() {
                    nan.fetch_add(1, Ordering::Relaxed);
                    v = Vec3::zero();
                }
                let k = (s + 1) as Real;
                let delta = v - mean;
                mean += delta / k;
                m2 += delta.mul_elem(v - mean);
            }
            let n = cfg.spp as Real;
            let var = if cfg.spp > 1 { m2 / ((n - 1.0) * n) } else { Vec3::zero() };
            (mean, var, primary)
        })
        .collect();
    Ok(PathRender {
        image: HdrImage {
            width: w,
            height: camera.height,
            pixels: results.iter().map(|r| r.0).collect(),
        },
        variance: results.iter().map(|r| r.1).collect(),
        primary_instance: results.iter().map(|r| r.2).collect(),
        nan_samples: nan.into_inner(),
    })
}
