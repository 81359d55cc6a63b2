//! Ray queries against a scene: nearest hit, shadow segments, emitter sampling.

use super::Scene;
use crate::bvh::{Bvh, PrimRef};
use crate::error::{Error, Result};
use crate::geom::{triangle_area, Ray};
use crate::{Real, Vec3};

/// Minimum hit distance, meters. Only guards against re-hitting the surface
/// a ray starts on; secondary rays start at [`spawn_point`].
pub const SELF_INTERSECTION_EPS: Real = 1e-7;

/// Distance secondary rays start above the surface they leave, meters.
pub const SPAWN_OFFSET: Real = 1e-5;

/// Origin for a ray leaving `position` on the side `normal` points to.
///
/// Offsetting along the normal instead of skipping the first stretch of the
/// ray keeps surfaces that meet at a seam from being stepped over.
pub fn spawn_point(position: Vec3, normal: Vec3) -> Vec3 {
    position + normal * SPAWN_OFFSET
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: Real,
    pub position: Vec3,
    /// Unit geometric normal; faces the ray origin when the material is two-sided.
    pub normal: Vec3,
    /// Whether the ray struck the side the winding order calls front.
    pub front_face: bool,
    pub instance: u32,
    pub category: u32,
    pub material: usize,
    pub uv: [Real; 2],
    pub node_index: usize,
    pub triangle: u32,
    /// Index into the BVH triangle array.
    pub prim: usize,
}

/// A point sampled on an emissive triangle.
#[derive(Debug, Clone, Copy)]
pub struct EmitterSample {
    pub position: Vec3,
    /// Unit geometric normal (front side).
    pub normal: Vec3,
    pub emission: Vec3,
    pub two_sided: bool,
    /// Density with respect to area over the whole emitter set.
    pub pdf_area: Real,
    pub prim: usize,
}

#[derive(Debug, Clone)]
struct EmissiveTri {
    prim: usize,
    area: Real,
}

/// Builds the hierarchy over every scene triangle in world space.
pub fn build_bvh(scene: &Scene) -> Bvh<Real> {
    let mut tris = Vec::with_capacity(scene.triangle_count());
    let mut refs = Vec::with_capacity(tris.capacity());
    for (ni, node) in scene.nodes.iter().enumerate() {
        for (ti, tri) in scene.node_world_triangles(node).enumerate() {
            tris.push(tri);
            refs.push(PrimRef {
                node: ni as u32,
                triangle: ti as u32,
            });
        }
    }
    Bvh::build(tris, refs)
}

/// An immutable scene with its acceleration structure and emitter table.
#[derive(Debug, Clone)]
pub struct AccelScene {
    scene: Scene,
    bvh: Bvh<Real>,
    prim_material: Vec<u32>,
    prim_transparent: Vec<bool>,
    emitters: Vec<EmissiveTri>,
    /// Cumulative power fractions over `emitters`.
    emitter_cdf: Vec<Real>,
    prim_emitter_pdf: Vec<Real>,
}

impl AccelScene {
    pub fn new(scene: Scene) -> Self {
        let bvh = build_bvh(&scene);
        let mut prim_material = Vec::with_capacity(bvh.len());
        for r in bvh.refs() {
            let node = &scene.nodes[r.node as usize];
            let mesh = &scene.meshes[node.mesh];
            let g = mesh.group_of(r.triangle as usize).expect("validated face groups");
            prim_material.push(mesh.groups[g].material as u32);
        }
        let prim_transparent: Vec<bool> = prim_material
            .iter()
            .map(|&m| scene.materials[m as usize].is_transparent())
            .collect();

        let mut emitters = Vec::new();
        let mut powers = Vec::new();
        for (prim, &m) in prim_material.iter().enumerate() {
            let mat = &scene.materials[m as usize];
            if !mat.is_emissive() {
                continue;
            }
            let area = triangle_area(bvh.triangle(prim));
            if area <= 0.0 {
                continue;
            }
            let e = mat.emission;
            powers.push((e.x + e.y + e.z) / 3.0 * area);
            emitters.push(EmissiveTri { prim, area });
        }
        let total: Real = powers.iter().sum();
        let mut emitter_cdf = Vec::with_capacity(powers.len());
        let mut acc = 0.0;
        for p in &powers {
            acc += p / total;
            emitter_cdf.push(acc);
        }
        if let Some(last) = emitter_cdf.last_mut() {
            *last = 1.0;
        }
        let mut prim_emitter_pdf = vec![0.0; bvh.len()];
        for (e, p) in emitters.iter().zip(&powers) {
            prim_emitter_pdf[e.prim] = p / total / e.area;
        }
        Self {
            scene,
            bvh,
            prim_material,
            prim_transparent,
            emitters,
            emitter_cdf,
            prim_emitter_pdf,
        }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn bvh(&self) -> &Bvh<Real> {
        &self.bvh
    }

    pub fn into_scene(self) -> Scene {
        self.scene
    }

    pub fn has_emitters(&self) -> bool {
        !self.emitters.is_empty()
    }

    pub fn prim_material(&self, prim: usize) -> usize {
        self.prim_material[prim] as usize
    }

    /// Nearest hit with distance in `(ε, ray.t_max)`, transparent surfaces included.
    pub fn intersect(&self, ray: &Ray<Real>) -> Result<Option<Hit>> {
        self.intersect_with(ray, false)
    }

    /// Nearest hit; `skip_transparent` lets rays pass through α = 0 surfaces.
    pub fn intersect_with(&self, ray: &Ray<Real>, skip_transparent: bool) -> Result<Option<Hit>> {
        let len = ray.dir.length();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidArgument("ray direction must be nonzero and finite".into()));
        }
        let dir = ray.dir / len;
        let unit = Ray {
            origin: ray.origin,
            dir,
            t_max: ray.t_max,
        };
        let found = if skip_transparent {
            self.bvh
                .closest_hit(&unit, SELF_INTERSECTION_EPS, |p| !self.prim_transparent[p])
        } else {
            self.bvh.closest_hit(&unit, SELF_INTERSECTION_EPS, |_| true)
        };
        Ok(found.map(|(prim, th)| self.make_hit(&unit, prim, th.t, th.u, th.v)))
    }

    fn make_hit(&self, ray: &Ray<Real>, prim: usize, t: Real, u: Real, v: Real) -> Hit {
        let r = self.bvh.prim_ref(prim);
        let node = &self.scene.nodes[r.node as usize];
        let mesh = &self.scene.meshes[node.mesh];
        let tri = self.bvh.triangle(prim);
        let mut normal = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
        let front_face = normal.dot(ray.dir) <= 0.0;
        let material = self.prim_material[prim] as usize;
        if self.scene.materials[material].two_sided && !front_face {
            normal = -normal;
        }
        let idx = mesh.triangles[r.triangle as usize];
        let w = 1.0 - u - v;
        let uv_of = |i: u32| mesh.uvs[i as usize];
        let (a, b, c) = (uv_of(idx[0]), uv_of(idx[1]), uv_of(idx[2]));
        Hit {
            distance: t,
            position: ray.at(t),
            normal,
            front_face,
            instance: node.id,
            category: node.category,
            material,
            uv: [w * a[0] + u * b[0] + v * c[0], w * a[1] + u * b[1] + v * c[1]],
            node_index: r.node as usize,
            triangle: r.triangle,
            prim,
        }
    }

    /// True iff an opaque surface crosses the open segment `(a + εd, b − εd)`.
    /// Fully transparent (α = 0) surfaces never occlude.
    pub fn occluded(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let len = d.length();
        if !(len > 2.0 * SELF_INTERSECTION_EPS) {
            return false;
        }
        let ray = Ray::new(a, d / len).with_t_max(len - SELF_INTERSECTION_EPS);
        self.bvh
            .any_hit(&ray, SELF_INTERSECTION_EPS, |p| !self.prim_transparent[p])
    }

    /// True iff an opaque surface lies along the unit direction `dir` from `origin`.
    pub fn occluded_dir(&self, origin: Vec3, dir: Vec3) -> bool {
        let ray = Ray::new(origin, dir);
        self.bvh
            .any_hit(&ray, SELF_INTERSECTION_EPS, |p| !self.prim_transparent[p])
    }

    /// Surface reflectance at a hit (material color times texture).
    pub fn albedo(&self, hit: &Hit) -> Vec3 {
        let m = &self.scene.materials[hit.material];
        match m.texture.as_ref().and_then(|t| self.scene.textures.get(t)) {
            Some(tex) => m.diffuse.mul_elem(tex.sample(hit.uv)),
            None => m.diffuse,
        }
    }

    /// Radiance leaving the hit toward the ray origin by emission.
    pub fn emitted(&self, hit: &Hit) -> Vec3 {
        let m = &self.scene.materials[hit.material];
        if hit.front_face || m.two_sided {
            m.emission
        } else {
            Vec3::zero()
        }
    }

    /// Samples a point on the emitters with probability proportional to power.
    pub fn sample_emitter(&self, u_select: Real, u1: Real, u2: Real) -> Option<EmitterSample> {
        if self.emitters.is_empty() {
            return None;
        }
        let i = self.emitter_cdf.partition_point(|&c| c <= u_select).min(self.emitters.len() - 1);
        let e = &self.emitters[i];
        let tri = self.bvh.triangle(e.prim);
        let su = u1.sqrt();
        let (b0, b1) = (1.0 - su, u2 * su);
        let position = tri[0] * b0 + tri[1] * b1 + tri[2] * (1.0 - b0 - b1);
        let normal = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
        let mat = &self.scene.materials[self.prim_material[e.prim] as usize];
        Some(EmitterSample {
            position,
            normal,
            emission: mat.emission,
            two_sided: mat.two_sided,
            pdf_area: self.prim_emitter_pdf[e.prim],
            prim: e.prim,
        })
    }

    /// Area density with which [`sample_emitter`](Self::sample_emitter) picks points on `prim`.
    pub fn emitter_pdf_area(&self, prim: usize) -> Real {
        self.prim_emitter_pdf[prim]
    }
}
