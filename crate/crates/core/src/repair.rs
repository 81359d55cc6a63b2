//! Scene repairs that make raw layouts render-ready: solid walls, see-through
//! windows, bulb emitters, category removal and two-sided materials.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::icosphere;
use crate::error::{Error, Result};
use crate::geom::point_in_polygon;
use crate::scene::{FaceGroup, Material, Room, Scene, SceneNode, TriMesh, WallRun, WALL, WINDOW};
use crate::{Affine, Real, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepairConfig {
    pub wall_thickness: Real,
    pub removed_categories: BTreeSet<String>,
    /// Bulb radius as a fraction of the fixture's bounding-box diagonal.
    pub bulb_radius_fraction: Real,
    pub bulb_radius_min: Real,
    pub bulb_radius_max: Real,
    /// Bulb center offset from the bounding-box centroid, meters, per category.
    pub bulb_anchors: BTreeMap<String, [Real; 3]>,
    pub wall_color: [Real; 3],
    pub bulb_emission: [Real; 3],
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            wall_thickness: 0.10,
            removed_categories: ["person", "plant"].into_iter().map(String::from).collect(),
            bulb_radius_fraction: 0.05,
            bulb_radius_min: 0.02,
            bulb_radius_max: 0.10,
            bulb_anchors: BTreeMap::new(),
            wall_color: [1.0; 3],
            bulb_emission: [30.0; 3],
        }
    }
}

impl RepairConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wall_thickness > 0.0 && self.wall_thickness.is_finite()) {
            return Err(Error::InvalidConfig(format!("wall thickness {} must be > 0", self.wall_thickness)));
        }
        if !(self.bulb_radius_min > 0.0 && self.bulb_radius_min <= self.bulb_radius_max) {
            return Err(Error::InvalidConfig(format!(
                "bulb radius bounds [{}, {}] must be positive and ordered",
                self.bulb_radius_min, self.bulb_radius_max
            )));
        }
        if !(self.bulb_radius_fraction > 0.0) {
            return Err(Error::InvalidConfig("bulb radius fraction must be > 0".into()));
        }
        if self.bulb_emission.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidConfig("bulb emission must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn bulb_radius(&self, diagonal: Real) -> Real {
        (self.bulb_radius_fraction * diagonal).clamp(self.bulb_radius_min, self.bulb_radius_max)
    }
}

pub const WALL_MATERIAL: &str = "wall-default";
pub const BULB_MATERIAL: &str = "bulb-emitter";

/// Replaces the wall nodes of every room that has wall polylines with one
/// node of closed prisms, `wall_thickness` deep, extruded away from the room
/// interior. At convex corners each prism runs past the corner by the
/// thickness so neighbouring prisms overlap, and vertically each prism runs
/// the thickness past floor and ceiling.
pub fn thicken_walls(mut scene: Scene, cfg: &RepairConfig) -> Result<Scene> {
    cfg.validate()?;
    let t = cfg.wall_thickness;
    let wall_cat = scene.categories.id_of(WALL);
    for ri in 0..scene.rooms.len() {
        if scene.rooms[ri].walls.is_empty() {
            continue;
        }
        let room = scene.rooms[ri].clone();
        let removed: Vec<SceneNode> = scene
            .nodes
            .iter()
            .filter(|n| Some(n.category) == wall_cat && room.nodes.contains(&n.id))
            .cloned()
            .collect();
        let removed_ids: HashSet<u32> = removed.iter().map(|n| n.id).collect();

        let material = match removed.first().and_then(|n| scene.meshes[n.mesh].groups.first()) {
            Some(g) if scene.materials[g.material].texture.is_some() => g.material,
            _ => match scene.material_by_name(WALL_MATERIAL) {
                Some(m) => m,
                None => scene.add_material(Material::diffuse(WALL_MATERIAL, Vec3::from(cfg.wall_color))),
            },
        };

        let mut mesh = TriMesh {
            name: format!("{}-walls", room.id),
            positions: Vec::new(),
            normals: Vec::new(),
            uvs: Vec::new(),
            triangles: Vec::new(),
            groups: Vec::new(),
        };
        for run in &room.walls {
            for prism in wall_prisms(&room, run, t) {
                push_box(&mut mesh, &prism);
            }
        }
        mesh.groups.push(FaceGroup {
            material,
            first: 0,
            count: mesh.triangles.len() as u32,
        });

        let id = removed.iter().map(|n| n.id).min().unwrap_or_else(|| scene.next_instance_id());
        scene.nodes.retain(|n| !removed_ids.contains(&n.id));
        let mesh_index = scene.add_mesh(mesh);
        let category = scene.categories.ensure(WALL);
        scene.nodes.push(SceneNode {
            id,
            category,
            mesh: mesh_index,
            transform: Affine::identity(),
            emitter: false,
        });
        let room = &mut scene.rooms[ri];
        room.nodes.retain(|n| !removed_ids.contains(n));
        room.nodes.push(id);
    }
    scene.nodes.sort_by_key(|n| n.id);
    scene.validate()?;
    Ok(scene)
}

/// Eight corners of a wall prism: bottom quad then top quad.
type Prism = [Vec3; 8];

fn wall_prisms(room: &Room, run: &WallRun, t: Real) -> Vec<Prism> {
    let outline: &[[Real; 2]] = if room.floor.len() >= 3 {
        &room.floor
    } else if run.closed {
        &run.points
    } else {
        &[]
    };
    let inside = |p: [Real; 2]| outline.len() >= 3 && point_in_polygon(p, outline);
    // Prisms also reach `t` below the floor and above the ceiling so the
    // floor and ceiling edges end inside solid wall instead of on a seam.
    let (y0, y1) = (room.floor_y - t, room.floor_y + run.height + t);
    let n = run.points.len();
    let mut out = Vec::new();
    for (i, (a, b)) in run.segments().enumerate() {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if !(len > 0.0) {
            continue;
        }
        let d = [d[0] / len, d[1] / len];
        let left = [-d[1], d[0]];
        let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
        let probe = [mid[0] + left[0] * t * 0.5, mid[1] + left[1] * t * 0.5];
        let out_n = if inside(probe) { [-left[0], -left[1]] } else { left };
        let has_prev = run.closed || i > 0;
        let has_next = run.closed || i + 2 < n;
        // A corner is convex when the wall line continued past it leaves the room.
        let convex = |v: [Real; 2], s: Real| !inside([v[0] + s * d[0] * t * 0.5, v[1] + s * d[1] * t * 0.5]);
        let e0 = if has_prev && convex(a, -1.0) { t } else { 0.0 };
        let e1 = if has_next && convex(b, 1.0) { t } else { 0.0 };
        let p0 = [a[0] - d[0] * e0, a[1] - d[1] * e0];
        let p1 = [b[0] + d[0] * e1, b[1] + d[1] * e1];
        let p2 = [p1[0] + out_n[0] * t, p1[1] + out_n[1] * t];
        let p3 = [p0[0] + out_n[0] * t, p0[1] + out_n[1] * t];
        let quad = [p0, p1, p2, p3];
        let mut prism = [Vec3::zero(); 8];
        for (k, q) in quad.iter().enumerate() {
            prism[k] = Vec3::new(q[0], y0, q[1]);
            prism[k + 4] = Vec3::new(q[0], y1, q[1]);
        }
        out.push(prism);
    }
    out
}

/// Appends the six faces of a convex hexahedron with outward winding and
/// per-face vertices so normals stay flat.
fn push_box(mesh: &mut TriMesh, c: &Prism) {
    const FACES: [[usize; 4]; 6] = [[0, 1, 2, 3], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]];
    let centroid = c.iter().fold(Vec3::zero(), |s, &p| s + p) / 8.0;
    for f in FACES {
        let q = f.map(|i| c[i]);
        let mut n = (q[1] - q[0]).cross(q[2] - q[0]).normalized();
        let face_center = (q[0] + q[1] + q[2] + q[3]) / 4.0;
        let flip = n.dot(face_center - centroid) < 0.0;
        if flip {
            n = -n;
        }
        let base = mesh.positions.len() as u32;
        mesh.positions.extend_from_slice(&q);
        mesh.normals.extend_from_slice(&[n; 4]);
        mesh.uvs.extend_from_slice(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let (t0, t1) = if flip {
            ([base, base + 2, base + 1], [base, base + 3, base + 2])
        } else {
            ([base, base + 1, base + 2], [base, base + 2, base + 3])
        };
        mesh.triangles.push(t0);
        mesh.triangles.push(t1);
    }
}

/// Sets α = 0 on every material used by a window node.
pub fn make_windows_transparent(mut scene: Scene) -> Scene {
    let Some(cat) = scene.categories.id_of(WINDOW) else {
        return scene;
    };
    let used: BTreeSet<usize> = scene
        .nodes
        .iter()
        .filter(|n| n.category == cat)
        .flat_map(|n| scene.meshes[n.mesh].groups.iter().map(|g| g.material))
        .collect();
    for m in used {
        scene.materials[m].alpha = 0.0;
    }
    scene
}

/// Drops every node whose category is in `categories`; other ids are kept.
pub fn remove_categories<S: AsRef<str>>(mut scene: Scene, categories: &[S]) -> Scene {
    let ids: HashSet<u32> = categories
        .iter()
        .filter_map(|c| scene.categories.id_of(c.as_ref()))
        .collect();
    if ids.is_empty() {
        return scene;
    }
    let gone: HashSet<u32> = scene.nodes.iter().filter(|n| ids.contains(&n.category)).map(|n| n.id).collect();
    scene.nodes.retain(|n| !gone.contains(&n.id));
    for room in &mut scene.rooms {
        room.nodes.retain(|n| !gone.contains(n));
    }
    scene
}

pub fn set_two_sided(mut scene: Scene) -> Scene {
    for m in &mut scene.materials {
        m.two_sided = true;
    }
    scene
}

/// What an annotated lighting appliance emits from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EmitterLabel {
    /// Indices into the node mesh's face groups.
    Groups(Vec<usize>),
    Auto(AutoBulb),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoBulb {
    #[serde(rename = "auto-bulb")]
    AutoBulb,
}

pub const EMITTER_LABELS_VERSION: u32 = 1;

/// Emitter annotation file, keyed by instance id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterLabels {
    pub format_version: u32,
    pub nodes: BTreeMap<u32, EmitterLabel>,
}

impl EmitterLabels {
    pub fn new() -> Self {
        Self {
            format_version: EMITTER_LABELS_VERSION,
            nodes: BTreeMap::new(),
        }
    }

    pub fn auto_bulb(mut self, id: u32) -> Self {
        self.nodes.insert(id, EmitterLabel::Auto(AutoBulb::AutoBulb));
        self
    }

    pub fn groups(mut self, id: u32, groups: Vec<usize>) -> Self {
        self.nodes.insert(id, EmitterLabel::Groups(groups));
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let labels: Self = serde_json::from_str(text).map_err(|e| Error::parse("emitter labels", e))?;
        if labels.format_version != EMITTER_LABELS_VERSION {
            return Err(Error::parse(
                "emitter labels",
                format!("unsupported format_version {}", labels.format_version),
            ));
        }
        Ok(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse("emitter labels", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Turns annotated appliances into area emitters. Labeled face groups get
/// an emissive copy of their material; `auto-bulb` nodes get an icosphere
/// bulb appended to their mesh. Returns the scene and any warnings.
pub fn insert_bulbs(mut scene: Scene, cfg: &RepairConfig, labels: &EmitterLabels) -> Result<(Scene, Vec<String>)> {
    cfg.validate()?;
    let emission = Vec3::from(cfg.bulb_emission);
    let mut warnings = Vec::new();
    let index = scene.node_index_by_id();
    for (&id, label) in &labels.nodes {
        let Some(&ni) = index.get(&id) else {
            return Err(Error::UnknownInstance(id));
        };
        let node = scene.nodes[ni].clone();
        let mut mesh = scene.meshes[node.mesh].clone();
        match label {
            EmitterLabel::Groups(groups) => {
                for &g in groups {
                    let Some(group) = mesh.groups.get(g).copied() else {
                        return Err(Error::DanglingReference {
                            entity: format!("emitter label for node {id}"),
                            reference: format!("face group {g} of mesh {}", mesh.name),
                        });
                    };
                    let base = scene.materials[group.material].clone();
                    let name = format!("{}+emit", base.name);
                    let m = match scene.material_by_name(&name) {
                        Some(m) if scene.materials[m].emission == emission => m,
                        _ => scene.add_material(Material {
                            name,
                            emission,
                            ..base
                        }),
                    };
                    mesh.groups[g].material = m;
                }
            }
            EmitterLabel::Auto(_) => {
                let bounds = scene.node_world_bounds(&node);
                if bounds.is_empty() {
                    let w = format!("node {id}: empty bounding box, bulb skipped");
                    log::warn!("{w}");
                    warnings.push(w);
                    continue;
                }
                let Some(inverse) = node.transform.inverse() else {
                    return Err(Error::NonInvertibleTransform { node: id });
                };
                let category = scene.category_name(&node).to_string();
                let offset = cfg.bulb_anchors.get(&category).copied().map(Vec3::from).unwrap_or_default();
                let center = bounds.center() + offset;
                let radius = cfg.bulb_radius(bounds.diagonal());
                let (verts, tris) = icosphere(2);
                let local: Vec<Vec3> = verts.iter().map(|&v| inverse.point(center + v * radius)).collect();
                let material = match scene.material_by_name(BULB_MATERIAL) {
                    Some(m) if scene.materials[m].emission == emission => m,
                    _ => scene.add_material(Material {
                        emission,
                        ..Material::diffuse(BULB_MATERIAL, Vec3::splat(1.0))
                    }),
                };
                mesh.append(&TriMesh::new("bulb", local, tris, material));
            }
        }
        mesh.name = format!("{}#{id}", mesh.name);
        let mi = scene.add_mesh(mesh);
        let n = &mut scene.nodes[ni];
        n.mesh = mi;
        n.emitter = true;
    }
    scene.validate()?;
    Ok((scene, warnings))
}

/// The full repair chain in pipeline order.
pub fn repair_scene(scene: Scene, cfg: &RepairConfig, labels: &EmitterLabels) -> Result<(Scene, Vec<String>)> {
    cfg.validate()?;
    let removed: Vec<&String> = cfg.removed_categories.iter().collect();
    let scene = remove_categories(scene, &removed);
    let scene = thicken_walls(scene, cfg)?;
    let scene = make_windows_transparent(scene);
    let (scene, warnings) = insert_bulbs(scene, cfg, labels)?;
    Ok((set_two_sided(scene), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_mesh(scene: &mut Scene, name: &str, half: Vec3, material: usize) -> usize {
        let mut m = TriMesh {
            name: name.into(),
            positions: vec![],
            normals: vec![],
            uvs: vec![],
            triangles: vec![],
            groups: vec![],
        };
        let mut c = [Vec3::zero(); 8];
        for (i, p) in c.iter_mut().enumerate() {
            let sx = if i % 4 == 1 || i % 4 == 2 { 1.0 } else { -1.0 };
            let sz = if i % 4 >= 2 { 1.0 } else { -1.0 };
            let sy = if i >= 4 { 1.0 } else { -1.0 };
            *p = Vec3::new(sx * half.x, sy * half.y, sz * half.z);
        }
        push_box(&mut m, &c);
        m.groups.push(FaceGroup {
            material,
            first: 0,
            count: 12,
        });
        scene.add_mesh(m)
    }

    fn one_wall_scene(len: Real, h: Real) -> Scene {
        let mut s = Scene::empty("w");
        s.rooms.push(Room {
            id: "r".into(),
            floor_y: 0.0,
            floor: vec![],
            ceiling_height: h,
            walls: vec![WallRun {
                points: vec![[0.0, 0.0], [len, 0.0]],
                height: h,
                closed: false,
            }],
            nodes: vec![],
        });
        s
    }

    /// Signed volume by the divergence theorem.
    fn mesh_volume(m: &TriMesh) -> Real {
        m.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| m.positions[i as usize]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn single_wall_prism_volume() {
        let s = thicken_walls(one_wall_scene(4.0, 2.5), &RepairConfig::default()).unwrap();
        let wall = s.node(s.rooms[0].nodes[0]).unwrap();
        // 4 m long, 0.1 m deep, 2.5 m tall plus 0.1 m past floor and ceiling.
        assert!((mesh_volume(&s.meshes[wall.mesh]) - 4.0 * 0.1 * 2.7).abs() < 1e-9);
    }

    #[test]
    fn zero_thickness_is_config_error() {
        let cfg = RepairConfig {
            wall_thickness: 0.0,
            ..Default::default()
        };
        assert!(matches!(thicken_walls(one_wall_scene(4.0, 2.5), &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn walls_extrude_outward_of_square_room() {
        let mut s = Scene::empty("sq");
        let floor = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]];
        s.rooms.push(Room {
            id: "r".into(),
            floor_y: 0.0,
            floor: floor.clone(),
            ceiling_height: 2.5,
            walls: vec![WallRun {
                points: floor,
                height: 2.5,
                closed: true,
            }],
            nodes: vec![],
        });
        let s = thicken_walls(s, &RepairConfig::default()).unwrap();
        let m = &s.meshes[s.nodes[0].mesh];
        let b = m.bounds();
        assert!((b.min.x + 0.1).abs() < 1e-12 && (b.max.x - 3.1).abs() < 1e-12);
        assert!((b.min.z + 0.1).abs() < 1e-12 && (b.max.z - 3.1).abs() < 1e-12);
        assert!((b.min.y + 0.1).abs() < 1e-12 && (b.max.y - 2.6).abs() < 1e-12);
        // Four prisms, each extended at both ends and vertically: (3 + 0.2) * 0.1 * (2.5 + 0.2).
        assert!((mesh_volume(m) - 4.0 * 3.2 * 0.1 * 2.7).abs() < 1e-9);
        for n in &m.normals {
            assert!((n.length() - 1.0).abs() < 1e-12);
        }
    }

    fn furnished() -> Scene {
        let mut s = Scene::empty("f");
        let glass = s.add_material(Material::diffuse("glass", Vec3::splat(0.9)));
        let wood = s.add_material(Material::diffuse("wood", Vec3::splat(0.4)));
        let shade = s.add_material(Material::diffuse("shade", Vec3::splat(0.8)));
        let win = box_mesh(&mut s, "win", Vec3::new(0.5, 0.5, 0.01), glass);
        let chair = box_mesh(&mut s, "chair", Vec3::new(0.3, 0.45, 0.3), wood);
        let lamp = box_mesh(&mut s, "lamp", Vec3::new(0.2, 0.4, 0.2), shade);
        s.add_node("window", win, Affine::identity());
        s.add_node("window", win, Affine::translation(Vec3::new(2.0, 0.0, 0.0)));
        s.add_node("chair", chair, Affine::identity());
        s.add_node("person", chair, Affine::identity());
        s.add_node("plant", chair, Affine::identity());
        s.add_node("lamp", lamp, Affine::translation(Vec3::new(1.0, 0.4, 1.0)));
        s
    }

    #[test]
    fn windows_become_transparent_and_only_them() {
        let s = make_windows_transparent(furnished());
        assert_eq!(s.materials[0].alpha, 0.0);
        assert_eq!(s.materials[1].alpha, 1.0);
        assert_eq!(s.materials[2].alpha, 1.0);
        assert_eq!(make_windows_transparent(s.clone()), s);
        let bare = Scene::empty("none");
        assert_eq!(make_windows_transparent(bare.clone()), bare);
    }

    #[test]
    fn removal_keeps_other_ids() {
        let s = furnished();
        let before: Vec<u32> = s.nodes.iter().map(|n| n.id).collect();
        let r = remove_categories(s.clone(), &["person", "plant"]);
        assert_eq!(r.nodes.len(), before.len() - 2);
        assert_eq!(r.nodes.iter().map(|n| n.id).collect::<Vec<_>>(), vec![1, 2, 3, 6]);
        assert_eq!(remove_categories(s.clone(), &[] as &[&str]), s);
        assert_eq!(remove_categories(s.clone(), &["sofa"]), s);
    }

    #[test]
    fn removal_and_two_sided_commute() {
        let s = furnished();
        let a = set_two_sided(remove_categories(s.clone(), &["person"]));
        let b = remove_categories(set_two_sided(s), &["person"]);
        assert_eq!(a, b);
        assert!(a.materials.iter().all(|m| m.two_sided));
        assert_eq!(set_two_sided(a.clone()), a);
    }

    #[test]
    fn auto_bulb_radius_and_position() {
        let s = furnished();
        let lamp = s.node(6).unwrap().clone();
        let bounds = s.node_world_bounds(&lamp);
        let (r, w) = insert_bulbs(s, &RepairConfig::default(), &EmitterLabels::new().auto_bulb(6)).unwrap();
        assert!(w.is_empty());
        let node = r.node(6).unwrap();
        assert!(node.emitter);
        let mesh = &r.meshes[node.mesh];
        let bulb = mesh.groups.last().unwrap();
        assert_eq!(r.materials[bulb.material].emission, Vec3::splat(30.0));
        let want = RepairConfig::default().bulb_radius(bounds.diagonal());
        for t in bulb.first..bulb.first + bulb.count {
            for p in mesh.triangle_positions(t as usize) {
                let d = (node.transform.point(p) - bounds.center()).length();
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bulb_radius_rule() {
        let c = RepairConfig::default();
        assert!((c.bulb_radius(1.0) - 0.05).abs() < 1e-15);
        assert_eq!(c.bulb_radius(3.0), 0.10);
        assert_eq!(c.bulb_radius(0.1), 0.02);
    }

    #[test]
    fn labeled_group_turns_emissive_without_new_geometry() {
        let s = furnished();
        let tris = s.meshes[s.node(6).unwrap().mesh].triangles.len();
        let (r, _) = insert_bulbs(s, &RepairConfig::default(), &EmitterLabels::new().groups(6, vec![0])).unwrap();
        let node = r.node(6).unwrap();
        let mesh = &r.meshes[node.mesh];
        assert_eq!(mesh.triangles.len(), tris);
        assert!(r.materials[mesh.groups[0].material].is_emissive());
        // The shared material is not modified for other users.
        assert!(!r.materials[2].is_emissive());
    }

    #[test]
    fn empty_appliance_is_skipped_with_warning() {
        let mut s = Scene::empty("e");
        let m = s.add_material(Material::diffuse("m", Vec3::splat(0.5)));
        let mesh = s.add_mesh(TriMesh::new("nothing", vec![], vec![], m));
        s.add_node("lamp", mesh, Affine::identity());
        let (r, w) = insert_bulbs(s.clone(), &RepairConfig::default(), &EmitterLabels::new().auto_bulb(1)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(r, s);
    }

    #[test]
    fn labels_file_round_trip() {
        let text = r#"{"format_version": 1, "nodes": {"12": [0, 2], "13": "auto-bulb"}}"#;
        let l = EmitterLabels::parse(text).unwrap();
        assert_eq!(l, EmitterLabels::new().groups(12, vec![0, 2]).auto_bulb(13));
        assert!(EmitterLabels::parse(r#"{"format_version": 2, "nodes": {}}"#).is_err());
        assert!(EmitterLabels::parse(r#"{"format_version": 1, "nodes": {"1": "sun"}}"#).is_err());
    }
}
