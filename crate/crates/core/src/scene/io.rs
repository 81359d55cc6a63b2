//! JSON scene files. The schema is documented in `docs/scene-format.md`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CategoryTable, FaceGroup, Material, Room, Scene, SceneNode, Texture, TriMesh, WallRun, FORMAT_VERSION,
    UNKNOWN_CATEGORY,
};
use crate::error::{Error, Result};
use crate::geom::Affine3;
use crate::{Real, Vec3};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    format_version: u32,
    id: String,
    categories: Vec<String>,
    materials: Vec<MaterialFile>,
    meshes: Vec<MeshFile>,
    nodes: Vec<NodeFile>,
    #[serde(default)]
    rooms: Vec<RoomFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    name: String,
    diffuse: [Real; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    texture: Option<String>,
    #[serde(default = "one")]
    alpha: Real,
    #[serde(default)]
    emission: [Real; 3],
    #[serde(default)]
    two_sided: bool,
}

fn one() -> Real {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    name: String,
    positions: Vec<[Real; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normals: Option<Vec<[Real; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uvs: Option<Vec<[Real; 2]>>,
    triangles: Vec<[u32; 3]>,
    groups: Vec<GroupFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    material: String,
    first: u32,
    count: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    id: u32,
    category: String,
    mesh: String,
    #[serde(default = "identity16")]
    transform: [Real; 16],
    #[serde(default)]
    emitter: bool,
}

fn identity16() -> [Real; 16] {
    Affine3::<Real>::identity().to_row_major()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomFile {
    id: String,
    floor_y: Real,
    floor: Vec<[Real; 2]>,
    ceiling_height: Real,
    #[serde(default)]
    walls: Vec<WallFile>,
    #[serde(default)]
    nodes: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallFile {
    points: Vec<[Real; 2]>,
    height: Real,
    #[serde(default)]
    closed: bool,
}

/// A loaded scene plus non-fatal findings (e.g. unknown categories).
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub scene: Scene,
    pub warnings: Vec<String>,
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scene(&text, base).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

/// Parses scene JSON; texture references resolve relative to `base_dir`.
pub fn parse_scene(text: &str, base_dir: &Path) -> Result<LoadReport> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::parse("scene", e))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::parse(
            "scene",
            format!("unsupported format_version {} (expected {FORMAT_VERSION})", file.format_version),
        ));
    }
    let mut warnings = Vec::new();
    let categories = CategoryTable::new(file.categories.iter().cloned());

    let mut material_ids = HashMap::new();
    let mut materials = Vec::with_capacity(file.materials.len());
    let mut textures = BTreeMap::new();
    for m in file.materials {
        if material_ids.insert(m.name.clone(), materials.len()).is_some() {
            return Err(Error::parse("scene", format!("duplicate material name {:?}", m.name)));
        }
        if let Some(t) = &m.texture {
            if !textures.contains_key(t) {
                let tex = load_texture(&base_dir.join(t)).map_err(|_| Error::DanglingReference {
                    entity: format!("material {}", m.name),
                    reference: format!("texture {t}"),
                })?;
                textures.insert(t.clone(), tex);
            }
        }
        materials.push(Material {
            name: m.name,
            diffuse: m.diffuse.into(),
            texture: m.texture,
            alpha: m.alpha,
            emission: m.emission.into(),
            two_sided: m.two_sided,
        });
    }

    let mut mesh_ids = HashMap::new();
    let mut meshes = Vec::with_capacity(file.meshes.len());
    for m in file.meshes {
        if mesh_ids.insert(m.name.clone(), meshes.len()).is_some() {
            return Err(Error::parse("scene", format!("duplicate mesh name {:?}", m.name)));
        }
        meshes.push(convert_mesh(m, &material_ids)?);
    }

    let mut nodes = Vec::with_capacity(file.nodes.len());
    for n in file.nodes {
        let mesh = *mesh_ids.get(&n.mesh).ok_or_else(|| Error::DanglingReference {
            entity: format!("node {}", n.id),
            reference: format!("mesh {:?}", n.mesh),
        })?;
        let category = match categories.id_of(&n.category) {
            Some(c) => c,
            None => {
                warnings.push(format!(
                    "node {}: category {:?} not in table; using {UNKNOWN_CATEGORY:?}",
                    n.id, n.category
                ));
                categories.unknown()
            }
        };
        let transform = Affine3::from_row_major(&n.transform).ok_or_else(|| {
            Error::parse("scene", format!("node {}: transform last row must be [0, 0, 0, 1]", n.id))
        })?;
        if transform.inverse().is_none() {
            return Err(Error::NonInvertibleTransform { node: n.id });
        }
        nodes.push(SceneNode {
            id: n.id,
            category,
            mesh,
            transform,
            emitter: n.emitter,
        });
    }

    let rooms = file
        .rooms
        .into_iter()
        .map(|r| Room {
            id: r.id,
            floor_y: r.floor_y,
            floor: r.floor,
            ceiling_height: r.ceiling_height,
            walls: r
                .walls
                .into_iter()
                .map(|w| WallRun {
                    points: w.points,
                    height: w.height,
                    closed: w.closed,
                })
                .collect(),
            nodes: r.nodes,
        })
        .collect();

    let scene = Scene {
        id: file.id,
        rooms,
        nodes,
        meshes,
        materials,
        categories,
        textures,
    };
    scene.validate()?;
    Ok(LoadReport { scene, warnings })
}

fn convert_mesh(m: MeshFile, material_ids: &HashMap<String, usize>) -> Result<TriMesh> {
    let nv = m.positions.len();
    if let Some(t) = m.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= nv)) {
        return Err(Error::DanglingReference {
            entity: format!("mesh {}", m.name),
            reference: format!("triangle {t:?} indexes past {nv} vertices"),
        });
    }
    let mut groups = Vec::with_capacity(m.groups.len());
    for g in &m.groups {
        let material = *material_ids.get(&g.material).ok_or_else(|| Error::DanglingReference {
            entity: format!("mesh {}", m.name),
            reference: format!("material {:?}", g.material),
        })?;
        groups.push(FaceGroup {
            material,
            first: g.first,
            count: g.count,
        });
    }
    let positions: Vec<Vec3> = m.positions.into_iter().map(Vec3::from).collect();
    let uvs = m.uvs.unwrap_or_else(|| vec![[0.0, 0.0]; nv]);
    let mut mesh = TriMesh {
        name: m.name,
        positions,
        normals: Vec::new(),
        uvs,
        triangles: m.triangles,
        groups,
    };
    mesh.normals = match m.normals {
        Some(ns) => {
            let mut out = Vec::with_capacity(ns.len());
            for n in ns {
                let n = Vec3::from(n);
                if !(n.length() > 0.0) {
                    return Err(Error::InvalidScene(format!("mesh {}: zero-length normal", mesh.name)));
                }
                out.push(n.normalized());
            }
            out
        }
        None => mesh.vertex_normals(),
    };
    Ok(mesh)
}

fn load_texture(path: &Path) -> Result<Texture> {
    let img = image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8();
    let to_linear = |c: u8| ((c as f32) / 255.0).powf(2.2);
    Ok(Texture {
        width: img.width(),
        height: img.height(),
        texels: img.pixels().map(|p| [to_linear(p[0]), to_linear(p[1]), to_linear(p[2])]).collect(),
    })
}

pub fn scene_to_json(scene: &Scene) -> String {
    let file = SceneFile {
        format_version: FORMAT_VERSION,
        id: scene.id.clone(),
        categories: scene.categories.names().to_vec(),
        materials: scene
            .materials
            .iter()
            .map(|m| MaterialFile {
                name: m.name.clone(),
                diffuse: m.diffuse.into(),
                texture: m.texture.clone(),
                alpha: m.alpha,
                emission: m.emission.into(),
                two_sided: m.two_sided,
            })
            .collect(),
        meshes: scene
            .meshes
            .iter()
            .map(|m| MeshFile {
                name: m.name.clone(),
                positions: m.positions.iter().map(|&p| p.into()).collect(),
                normals: Some(m.normals.iter().map(|&n| n.into()).collect()),
                uvs: Some(m.uvs.clone()),
                triangles: m.triangles.clone(),
                groups: m
                    .groups
                    .iter()
                    .map(|g| GroupFile {
                        material: scene.materials[g.material].name.clone(),
                        first: g.first,
                        count: g.count,
                    })
                    .collect(),
            })
            .collect(),
        nodes: scene
            .nodes
            .iter()
            .map(|n| NodeFile {
                id: n.id,
                category: scene.category_name(n).to_string(),
                mesh: scene.meshes[n.mesh].name.clone(),
                transform: n.transform.to_row_major(),
                emitter: n.emitter,
            })
            .collect(),
        rooms: scene
            .rooms
            .iter()
            .map(|r| RoomFile {
                id: r.id.clone(),
                floor_y: r.floor_y,
                floor: r.floor.clone(),
                ceiling_height: r.ceiling_height,
                walls: r
                    .walls
                    .iter()
                    .map(|w| WallFile {
                        points: w.points.clone(),
                        height: w.height,
                        closed: w.closed,
                    })
                    .collect(),
                nodes: r.nodes.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("scene serializes")
}

/// Writes the scene as JSON. Texture files are referenced, not copied.
pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, scene_to_json(scene)).map_err(|e| Error::io(path, e))
}
