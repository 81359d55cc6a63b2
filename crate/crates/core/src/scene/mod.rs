//! Scene data model: rooms, instanced meshes, materials and categories.
//!
//! World frame is right-handed, y-up, in meters. Instance id 0 and category
//! id 0 are reserved for "no hit" in every per-pixel buffer.

mod accel;
mod io;

use std::collections::{BTreeMap, HashMap, HashSet};

pub use accel::{build_bvh, spawn_point, AccelScene, EmitterSample, Hit, SELF_INTERSECTION_EPS, SPAWN_OFFSET};
pub use io::{load_scene, parse_scene, save_scene, scene_to_json, LoadReport};

use crate::error::{Error, Result};
use crate::geom::{polygon_is_simple, Affine3};
use crate::{Aabb, Real, Vec3};

pub const FORMAT_VERSION: u32 = 1;
pub const UNKNOWN_CATEGORY: &str = "unknown";
/// Largest id representable in the 16-bit ground-truth channels.
pub const MAX_ID: u32 = u16::MAX as u32;

pub const WALL: &str = "wall";
pub const FLOOR: &str = "floor";
pub const CEILING: &str = "ceiling";
pub const WINDOW: &str = "window";

/// Category names; category id = index + 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryTable {
    names: Vec<String>,
}

impl CategoryTable {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut t = Self::default();
        for n in names {
            t.ensure(&n.into());
        }
        t.ensure(UNKNOWN_CATEGORY);
        t
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32 + 1)
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        if id == 0 {
            return None;
        }
        self.names.get(id as usize - 1).map(String::as_str)
    }

    /// Returns the id for `name`, appending it when absent.
    pub fn ensure(&mut self, name: &str) -> u32 {
        match self.id_of(name) {
            Some(id) => id,
            None => {
                self.names.push(name.to_string());
                self.names.len() as u32
            }
        }
    }

    pub fn unknown(&self) -> u32 {
        self.id_of(UNKNOWN_CATEGORY).expect("unknown category is always present")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Wall, floor and ceiling are layout, not objects.
    pub fn is_structural(&self, id: u32) -> bool {
        matches!(self.name(id), Some(WALL | FLOOR | CEILING))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    /// Linear RGB reflectance in `[0, 1]`.
    pub diffuse: Vec3,
    pub texture: Option<String>,
    /// 1 is opaque, 0 fully transparent.
    pub alpha: Real,
    /// Emitted radiance, W·sr⁻¹·m⁻² per channel.
    pub emission: Vec3,
    pub two_sided: bool,
}

impl Material {
    pub fn diffuse(name: impl Into<String>, rgb: Vec3) -> Self {
        Self {
            name: name.into(),
            diffuse: rgb,
            texture: None,
            alpha: 1.0,
            emission: Vec3::zero(),
            two_sided: false,
        }
    }

    pub fn is_emissive(&self) -> bool {
        self.emission.max_component() > 0.0
    }

    pub fn is_transparent(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Contiguous run of triangles sharing a material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceGroup {
    pub material: usize,
    pub first: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub name: String,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub uvs: Vec<[Real; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub groups: Vec<FaceGroup>,
}

impl TriMesh {
    /// Builds a mesh with one face group and area-weighted vertex normals.
    pub fn new(name: impl Into<String>, positions: Vec<Vec3>, triangles: Vec<[u32; 3]>, material: usize) -> Self {
        let count = triangles.len() as u32;
        let mut m = Self {
            name: name.into(),
            normals: Vec::new(),
            uvs: vec![[0.0, 0.0]; positions.len()],
            positions,
            triangles,
            groups: vec![FaceGroup {
                material,
                first: 0,
                count,
            }],
        };
        m.normals = m.vertex_normals();
        m
    }

    pub fn group_of(&self, triangle: usize) -> Option<usize> {
        let t = triangle as u32;
        self.groups.iter().position(|g| t >= g.first && t < g.first + g.count)
    }

    pub fn triangle_positions(&self, triangle: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[triangle];
        [self.positions[a as usize], self.positions[b as usize], self.positions[c as usize]]
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.positions.iter().copied())
    }

    /// Area-weighted vertex normals; isolated vertices get +y.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zero(); self.positions.len()];
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.positions[i as usize]);
            let n = (b - a).cross(c - a);
            for &i in tri {
                acc[i as usize] += n;
            }
        }
        acc.into_iter()
            .map(|n| {
                if n.length() > 0.0 {
                    n.normalized()
                } else {
                    Vec3::new(0.0, 1.0, 0.0)
                }
            })
            .collect()
    }

    /// Appends another mesh (whose group materials are already resolved) as new face groups.
    pub fn append(&mut self, other: &TriMesh) {
        let base_v = self.positions.len() as u32;
        let base_t = self.triangles.len() as u32;
        self.positions.extend_from_slice(&other.positions);
        self.normals.extend_from_slice(&other.normals);
        self.uvs.extend_from_slice(&other.uvs);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base_v)));
        self.groups.extend(other.groups.iter().map(|g| FaceGroup {
            first: g.first + base_t,
            ..*g
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneNode {
    pub id: u32,
    pub category: u32,
    pub mesh: usize,
    pub transform: Affine3<Real>,
    pub emitter: bool,
}

/// Wall layout: a polyline in the `(x, z)` plane extruded upward from the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct WallRun {
    pub points: Vec<[Real; 2]>,
    pub height: Real,
    pub closed: bool,
}

impl WallRun {
    pub fn segments(&self) -> impl Iterator<Item = ([Real; 2], [Real; 2])> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub id: String,
    pub floor_y: Real,
    /// Floor polygon in `(x, z)`.
    pub floor: Vec<[Real; 2]>,
    pub ceiling_height: Real,
    pub walls: Vec<WallRun>,
    pub nodes: Vec<u32>,
}

/// Linear RGB texture sampled with wrapping nearest lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<[f32; 3]>,
}

impl Texture {
    pub fn sample(&self, uv: [Real; 2]) -> Vec3 {
        let wrap = |v: Real, n: u32| -> u32 {
            let f = v - v.floor();
            ((f * n as Real) as u32).min(n - 1)
        };
        let x = wrap(uv[0], self.width);
        // v grows upward in texture space.
        let y = self.height - 1 - wrap(uv[1], self.height);
        let t = self.texels[(y * self.width + x) as usize];
        Vec3::new(t[0] as Real, t[1] as Real, t[2] as Real)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub id: String,
    pub rooms: Vec<Room>,
    pub nodes: Vec<SceneNode>,
    pub meshes: Vec<TriMesh>,
    pub materials: Vec<Material>,
    pub categories: CategoryTable,
    pub textures: BTreeMap<String, Texture>,
}

impl Scene {
    pub fn empty(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            categories: CategoryTable::new(Vec::<String>::new()),
            ..Self::default()
        }
    }

    pub fn node_index_by_id(&self) -> HashMap<u32, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    pub fn node(&self, id: u32) -> Option<&SceneNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn next_instance_id(&self) -> u32 {
        self.nodes.iter().map(|n| n.id).max().unwrap_or(0) + 1
    }

    pub fn category_name(&self, node: &SceneNode) -> &str {
        self.categories.name(node.category).unwrap_or(UNKNOWN_CATEGORY)
    }

    pub fn triangle_count(&self) -> usize {
        self.nodes.iter().map(|n| self.meshes[n.mesh].triangles.len()).sum()
    }

    pub fn material_by_name(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.name == name)
    }

    pub fn add_material(&mut self, m: Material) -> usize {
        self.materials.push(m);
        self.materials.len() - 1
    }

    pub fn add_mesh(&mut self, m: TriMesh) -> usize {
        self.meshes.push(m);
        self.meshes.len() - 1
    }

    /// Adds a node with a fresh instance id and returns that id.
    pub fn add_node(&mut self, category: &str, mesh: usize, transform: Affine3<Real>) -> u32 {
        let id = self.next_instance_id();
        let category = self.categories.ensure(category);
        self.nodes.push(SceneNode {
            id,
            category,
            mesh,
            transform,
            emitter: false,
        });
        id
    }

    pub fn node_world_triangles(&self, node: &SceneNode) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        let mesh = &self.meshes[node.mesh];
        let xf = node.transform;
        (0..mesh.triangles.len()).map(move |t| mesh.triangle_positions(t).map(|p| xf.point(p)))
    }

    pub fn node_world_bounds(&self, node: &SceneNode) -> Aabb {
        let mesh = &self.meshes[node.mesh];
        Aabb::from_points(mesh.positions.iter().map(|&p| node.transform.point(p)))
    }

    pub fn node_has_emission(&self, node: &SceneNode) -> bool {
        self.meshes[node.mesh]
            .groups
            .iter()
            .any(|g| g.count > 0 && self.materials[g.material].is_emissive())
    }

    pub fn nodes_in_category(&self, name: &str) -> Vec<u32> {
        match self.categories.id_of(name) {
            Some(cat) => self.nodes.iter().filter(|n| n.category == cat).map(|n| n.id).collect(),
            None => Vec::new(),
        }
    }

    /// Checks every documented scene invariant.
    pub fn validate(&self) -> Result<()> {
        if self.categories.id_of(UNKNOWN_CATEGORY).is_none() {
            return Err(Error::InvalidScene("category table lacks \"unknown\"".into()));
        }
        if self.categories.len() as u32 > MAX_ID {
            return Err(Error::InvalidScene("more than 65535 categories".into()));
        }
        for m in &self.materials {
            if !(0.0..=1.0).contains(&m.alpha) {
                return Err(Error::InvalidScene(format!("material {}: alpha {} outside [0,1]", m.name, m.alpha)));
            }
            if !m.emission.is_finite() || m.emission.x < 0.0 || m.emission.y < 0.0 || m.emission.z < 0.0 {
                return Err(Error::InvalidScene(format!("material {}: emission must be finite and >= 0", m.name)));
            }
            if let Some(t) = &m.texture {
                if !self.textures.contains_key(t) {
                    return Err(Error::DanglingReference {
                        entity: format!("material {}", m.name),
                        reference: format!("texture {t}"),
                    });
                }
            }
        }
        for mesh in &self.meshes {
            let nv = mesh.positions.len();
            if mesh.normals.len() != nv || mesh.uvs.len() != nv {
                return Err(Error::InvalidScene(format!("mesh {}: attribute counts differ", mesh.name)));
            }
            if let Some(t) = mesh.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= nv)) {
                return Err(Error::DanglingReference {
                    entity: format!("mesh {}", mesh.name),
                    reference: format!("triangle {t:?} indexes past {nv} vertices"),
                });
            }
            if let Some(n) = mesh.normals.iter().find(|n| (n.length() - 1.0).abs() > 1e-4) {
                return Err(Error::InvalidScene(format!("mesh {}: normal {n:?} is not unit", mesh.name)));
            }
            let mut covered = 0u32;
            for g in &mesh.groups {
                if g.material >= self.materials.len() {
                    return Err(Error::DanglingReference {
                        entity: format!("mesh {}", mesh.name),
                        reference: format!("material #{}", g.material),
                    });
                }
                if g.first != covered {
                    return Err(Error::InvalidScene(format!("mesh {}: face groups are not contiguous", mesh.name)));
                }
                covered += g.count;
            }
            if covered as usize != mesh.triangles.len() {
                return Err(Error::InvalidScene(format!(
                    "mesh {}: face groups cover {covered} of {} triangles",
                    mesh.name,
                    mesh.triangles.len()
                )));
            }
        }
        let mut ids = HashSet::new();
        for node in &self.nodes {
            if node.id == 0 || node.id > MAX_ID {
                return Err(Error::InvalidScene(format!("instance id {} outside 1..=65535", node.id)));
            }
            if !ids.insert(node.id) {
                return Err(Error::InvalidScene(format!("duplicate instance id {}", node.id)));
            }
            if node.mesh >= self.meshes.len() {
                return Err(Error::DanglingReference {
                    entity: format!("node {}", node.id),
                    reference: format!("mesh #{}", node.mesh),
                });
            }
            if self.categories.name(node.category).is_none() {
                return Err(Error::DanglingReference {
                    entity: format!("node {}", node.id),
                    reference: format!("category #{}", node.category),
                });
            }
            if node.transform.inverse().is_none() {
                return Err(Error::NonInvertibleTransform { node: node.id });
            }
            if node.emitter && !self.node_has_emission(node) {
                return Err(Error::InvalidScene(format!("node {} is flagged emitter without emission", node.id)));
            }
        }
        for room in &self.rooms {
            if !(room.ceiling_height > 0.0) {
                return Err(Error::InvalidScene(format!("room {}: ceiling height must be > 0", room.id)));
            }
            if !room.floor.is_empty() && !polygon_is_simple(&room.floor) {
                return Err(Error::InvalidScene(format!("room {}: floor polygon is not simple", room.id)));
            }
            if let Some(id) = room.nodes.iter().find(|id| !ids.contains(id)) {
                return Err(Error::DanglingReference {
                    entity: format!("room {}", room.id),
                    reference: format!("node {id}"),
                });
            }
        }
        Ok(())
    }
}
