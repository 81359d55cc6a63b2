//! Small programmatic scenes used by tests, the acceptance suite and the
//! bundled example data.

use crate::camera::{icosphere, Camera};
use crate::pipeline::PipelineConfig;
use crate::scene::{save_scene, Material, Room, Scene, TriMesh, WallRun, CEILING, FLOOR, WALL, WINDOW};
use crate::{Affine, Real, Vec3};

/// Quad `a b c d` (counter-clockwise seen from the front) as two triangles.
pub fn quad_mesh(name: &str, corners: [Vec3; 4], material: usize) -> TriMesh {
    TriMesh::new(name, corners.to_vec(), vec![[0, 1, 2], [0, 2, 3]], material)
}

/// Axis-aligned box centered at the origin with outward-facing triangles.
pub fn box_mesh(name: &str, half: Vec3, material: usize) -> TriMesh {
    let (x, y, z) = (half.x, half.y, half.z);
    let v = |sx: Real, sy: Real, sz: Real| Vec3::new(sx * x, sy * y, sz * z);
    let faces = [
        [v(1., -1., -1.), v(1., 1., -1.), v(1., 1., 1.), v(1., -1., 1.)],
        [v(-1., -1., 1.), v(-1., 1., 1.), v(-1., 1., -1.), v(-1., -1., -1.)],
        [v(-1., 1., -1.), v(-1., 1., 1.), v(1., 1., 1.), v(1., 1., -1.)],
        [v(-1., -1., 1.), v(-1., -1., -1.), v(1., -1., -1.), v(1., -1., 1.)],
        [v(1., -1., 1.), v(1., 1., 1.), v(-1., 1., 1.), v(-1., -1., 1.)],
        [v(-1., -1., -1.), v(-1., 1., -1.), v(1., 1., -1.), v(1., -1., -1.)],
    ];
    let mut positions = Vec::with_capacity(24);
    let mut tris = Vec::with_capacity(12);
    for f in faces {
        let b = positions.len() as u32;
        positions.extend_from_slice(&f);
        tris.push([b, b + 1, b + 2]);
        tris.push([b, b + 2, b + 3]);
    }
    TriMesh::new(name, positions, tris, material)
}

pub fn sphere_mesh(name: &str, radius: Real, subdiv: u32, material: usize) -> TriMesh {
    let (v, f) = icosphere(subdiv);
    TriMesh::new(name, v.into_iter().map(|p| p * radius).collect(), f, material)
}

/// Axis-aligned room footprint pieces; the union must equal `floor`.
pub struct RoomSpec<'a> {
    pub id: &'a str,
    pub floor: Vec<[Real; 2]>,
    /// Rectangles `[x0, z0, x1, z1]` tiling the floor polygon.
    pub tiles: Vec<[Real; 4]>,
    pub height: Real,
    /// Each raw wall quad is shortened by this much at both ends.
    pub wall_gap: Real,
}

/// Adds floor, ceiling and one raw single-surface wall quad per floor edge.
/// Returns the room index.
pub fn add_room(scene: &mut Scene, spec: RoomSpec<'_>) -> usize {
    let floor_mat = material(scene, "floor-oak", Vec3::new(0.55, 0.42, 0.3));
    let ceil_mat = material(scene, "ceiling-plaster", Vec3::splat(0.85));
    let wall_mat = material(scene, "wall-paint", Vec3::new(0.75, 0.72, 0.68));
    let h = spec.height;
    let mut nodes = Vec::new();
    for (k, t) in spec.tiles.iter().enumerate() {
        let [x0, z0, x1, z1] = *t;
        let f = scene.add_mesh(quad_mesh(
            &format!("{}-floor{k}", spec.id),
            [Vec3::new(x0, 0.0, z0), Vec3::new(x0, 0.0, z1), Vec3::new(x1, 0.0, z1), Vec3::new(x1, 0.0, z0)],
            floor_mat,
        ));
        nodes.push(scene.add_node(FLOOR, f, Affine::identity()));
        let c = scene.add_mesh(quad_mesh(
            &format!("{}-ceiling{k}", spec.id),
            [Vec3::new(x0, h, z0), Vec3::new(x1, h, z0), Vec3::new(x1, h, z1), Vec3::new(x0, h, z1)],
            ceil_mat,
        ));
        nodes.push(scene.add_node(CEILING, c, Affine::identity()));
    }
    let ccw = crate::geom::polygon_signed_area(&spec.floor) > 0.0;
    let n = spec.floor.len();
    for i in 0..n {
        let (a, b) = (spec.floor[i], spec.floor[(i + 1) % n]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let u = [d[0] / len, d[1] / len];
        let g = spec.wall_gap;
        let a = [a[0] + u[0] * g, a[1] + u[1] * g];
        let b = [b[0] - u[0] * g, b[1] - u[1] * g];
        let p = |q: [Real; 2], y: Real| Vec3::new(q[0], y, q[1]);
        // Winding chosen so the front face looks into the room.
        let corners = if ccw {
            [p(a, 0.0), p(b, 0.0), p(b, h), p(a, h)]
        } else {
            [p(a, 0.0), p(a, h), p(b, h), p(b, 0.0)]
        };
        let m = scene.add_mesh(quad_mesh(&format!("{}-wall{i}", spec.id), corners, wall_mat));
        nodes.push(scene.add_node(WALL, m, Affine::identity()));
    }
    scene.rooms.push(Room {
        id: spec.id.to_string(),
        floor_y: 0.0,
        floor: spec.floor.clone(),
        ceiling_height: h,
        walls: vec![WallRun {
            points: spec.floor,
            height: h,
            closed: true,
        }],
        nodes,
    });
    scene.rooms.len() - 1
}

fn material(scene: &mut Scene, name: &str, rgb: Vec3) -> usize {
    match scene.material_by_name(name) {
        Some(m) => m,
        None => scene.add_material(Material::diffuse(name, rgb)),
    }
}

fn shared_mesh(scene: &mut Scene, mesh: TriMesh) -> usize {
    match scene.meshes.iter().position(|m| m.name == mesh.name) {
        Some(i) => i,
        None => scene.add_mesh(mesh),
    }
}

fn rect(id: &str, x0: Real, z0: Real, x1: Real, z1: Real) -> RoomSpec<'_> {
    RoomSpec {
        id,
        floor: vec![[x0, z0], [x1, z0], [x1, z1], [x0, z1]],
        tiles: vec![[x0, z0, x1, z1]],
        height: 2.6,
        wall_gap: 0.0,
    }
}

fn add_object(scene: &mut Scene, room: usize, category: &str, mesh: usize, at: Vec3, yaw: Real) -> u32 {
    let xf = Affine::translation(at).then_after(&Affine::rotation_y(yaw));
    let id = scene.add_node(category, mesh, xf);
    scene.rooms[room].nodes.push(id);
    id
}

/// Boxes of alternating size lined up along every wall of an axis-aligned
/// room, centered 0.9–1.4 m high, so any viewing direction sees several.
fn line_walls(scene: &mut Scene, room: usize, x0: Real, z0: Real, x1: Real, z1: Real) {
    let wood = material(scene, "walnut", Vec3::new(0.45, 0.3, 0.2));
    let cloth = material(scene, "cloth-blue", Vec3::new(0.2, 0.3, 0.6));
    let small = shared_mesh(scene, box_mesh("box-small", Vec3::new(0.16, 0.16, 0.12), wood));
    let large = shared_mesh(scene, box_mesh("box-large", Vec3::new(0.22, 0.2, 0.12), cloth));
    let inset = 0.25;
    let spacing = 0.55;
    let mut k = 0usize;
    let mut run = |scene: &mut Scene, from: [Real; 2], to: [Real; 2], yaw: Real| {
        let len = ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
        let count = ((len - 0.6) / spacing).floor().max(0.0) as usize + 1;
        let start = (len - (count - 1) as Real * spacing) * 0.5;
        for i in 0..count {
            let s = (start + i as Real * spacing) / len;
            let p = [from[0] + (to[0] - from[0]) * s, from[1] + (to[1] - from[1]) * s];
            let (mesh, cat, y) = if k % 2 == 0 { (small, "cabinet", 1.0) } else { (large, "picture", 1.3) };
            k += 1;
            add_object(scene, room, cat, mesh, Vec3::new(p[0], y, p[1]), yaw);
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    run(scene, [x0 + inset, z0 + 0.14], [x1 - inset, z0 + 0.14], 0.0);
    run(scene, [x1 - 0.14, z0 + inset], [x1 - 0.14, z1 - inset], half_pi);
    run(scene, [x1 - inset, z1 - 0.14], [x0 + inset, z1 - 0.14], 0.0);
    run(scene, [x0 + 0.14, z1 - inset], [x0 + 0.14, z0 + inset], half_pi);
}

fn add_table(scene: &mut Scene, room: usize, at: [Real; 2]) -> u32 {
    let wood = material(scene, "walnut", Vec3::new(0.45, 0.3, 0.2));
    let m = shared_mesh(scene, box_mesh("table", Vec3::new(0.4, 0.37, 0.3), wood));
    add_object(scene, room, "table", m, Vec3::new(at[0], 0.37, at[1]), 0.0)
}

/// 3.2 × 3.0 m room with objects lining every wall and a table.
pub fn ring_room() -> Scene {
    let mut s = Scene::empty("ring-room");
    let r = add_room(&mut s, rect("main", 0.0, 0.0, 3.2, 3.0));
    line_walls(&mut s, r, 0.0, 0.0, 3.2, 3.0);
    add_table(&mut s, r, [1.6, 1.5]);
    s
}

/// Two side-by-side rooms sharing no walls.
pub fn two_rooms() -> Scene {
    let mut s = Scene::empty("two-rooms");
    let a = add_room(&mut s, rect("west", 0.0, 0.0, 3.0, 3.0));
    line_walls(&mut s, a, 0.0, 0.0, 3.0, 3.0);
    let b = add_room(&mut s, rect("east", 3.4, 0.0, 6.2, 2.8));
    line_walls(&mut s, b, 3.4, 0.0, 6.2, 2.8);
    s
}

/// L-shaped room (3 × 3 minus a 1.4 × 1.4 corner) with objects along the long walls.
pub fn l_room() -> Scene {
    let mut s = Scene::empty("l-room");
    let r = add_room(
        &mut s,
        RoomSpec {
            id: "ell",
            floor: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 1.6], [1.6, 1.6], [1.6, 3.0], [0.0, 3.0]],
            tiles: vec![[0.0, 0.0, 3.0, 1.6], [0.0, 1.6, 1.6, 3.0]],
            height: 2.6,
            wall_gap: 0.0,
        },
    );
    let wood = material(&mut s, "walnut", Vec3::new(0.45, 0.3, 0.2));
    let cloth = material(&mut s, "cloth-blue", Vec3::new(0.2, 0.3, 0.6));
    let small = s.add_mesh(box_mesh("box-small", Vec3::new(0.16, 0.16, 0.12), wood));
    let large = s.add_mesh(box_mesh("box-large", Vec3::new(0.22, 0.2, 0.12), cloth));
    let half_pi = std::f64::consts::FRAC_PI_2;
    let spots = [
        ([0.5, 0.14], 0.0),
        ([1.2, 0.14], 0.0),
        ([1.9, 0.14], 0.0),
        ([2.6, 0.14], 0.0),
        ([2.86, 0.5], half_pi),
        ([2.86, 1.15], half_pi),
        ([2.4, 1.46], 0.0),
        ([1.74, 2.0], half_pi),
        ([1.74, 2.6], half_pi),
        ([1.1, 2.86], 0.0),
        ([0.4, 2.86], 0.0),
        ([0.14, 2.3], half_pi),
        ([0.14, 1.6], half_pi),
        ([0.14, 0.9], half_pi),
    ];
    for (i, (p, yaw)) in spots.into_iter().enumerate() {
        let (mesh, cat, y) = if i % 2 == 0 { (small, "cabinet", 1.0) } else { (large, "picture", 1.3) };
        add_object(&mut s, r, cat, mesh, Vec3::new(p[0], y, p[1]), yaw);
    }
    s
}

/// 4 × 3 m studio with wall objects, a table, a lamp, two windows, a person and a plant.
pub fn studio() -> Scene {
    let mut s = Scene::empty("studio");
    let r = add_room(&mut s, rect("studio", 0.0, 0.0, 4.0, 3.0));
    line_walls(&mut s, r, 0.0, 0.0, 4.0, 3.0);
    add_table(&mut s, r, [2.0, 1.5]);
    let glass = material(&mut s, "glass", Vec3::splat(0.9));
    let pane = s.add_mesh(box_mesh("pane", Vec3::new(0.4, 0.35, 0.005), glass));
    add_object(&mut s, r, WINDOW, pane, Vec3::new(1.2, 2.15, 0.01), 0.0);
    add_object(&mut s, r, WINDOW, pane, Vec3::new(2.8, 2.15, 0.01), 0.0);
    let shade = material(&mut s, "lampshade", Vec3::splat(0.9));
    let lamp = s.add_mesh(shade_mesh("lamp", 0.12, 0.1, shade));
    add_object(&mut s, r, "lamp", lamp, Vec3::new(2.0, 1.05, 1.5), 0.0);
    let skin = material(&mut s, "skin", Vec3::new(0.8, 0.6, 0.5));
    let person = s.add_mesh(box_mesh("person", Vec3::new(0.2, 0.85, 0.15), skin));
    add_object(&mut s, r, "person", person, Vec3::new(3.3, 0.85, 2.3), 0.0);
    let leaf = material(&mut s, "leaf", Vec3::new(0.2, 0.5, 0.2));
    let plant = s.add_mesh(box_mesh("plant", Vec3::new(0.15, 0.4, 0.15), leaf));
    add_object(&mut s, r, "plant", plant, Vec3::new(0.5, 0.4, 2.5), 0.0);
    s
}

/// A furnished-looking room with nothing in it: samplers must yield no cameras.
pub fn empty_room() -> Scene {
    let mut s = Scene::empty("empty-room");
    add_room(&mut s, rect("bare", 0.0, 0.0, 3.0, 3.0));
    s
}

/// The camera-sampler fixture set.
pub fn camera_fixtures() -> Vec<Scene> {
    vec![ring_room(), two_rooms(), l_room(), studio(), empty_room()]
}

/// Closed 3 × 3 × 2.5 m room whose raw wall quads stop `gap` short of
/// every corner, with no windows, doors or emitters.
pub fn leaky_room(gap: Real) -> Scene {
    let mut s = Scene::empty("leaky-room");
    add_room(
        &mut s,
        RoomSpec {
            id: "box",
            floor: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]],
            tiles: vec![[0.0, 0.0, 3.0, 3.0]],
            height: 2.5,
            wall_gap: gap,
        },
    );
    s
}

/// A camera inside [`leaky_room`] looking into a corner.
pub fn leaky_room_camera(width: u32, height: u32) -> Camera {
    Camera::look_at(
        Vec3::new(1.5, 1.4, 1.5),
        Vec3::new(3.0, 1.0, 3.0),
        80f64.to_radians(),
        width,
        height,
    )
    .expect("valid camera")
}

/// Open square lampshade: four side walls, no top or bottom.
pub fn shade_mesh(name: &str, half_width: Real, half_height: Real, material: usize) -> TriMesh {
    let (w, h) = (half_width, half_height);
    let mut positions = Vec::new();
    let mut tris = Vec::new();
    let corners = [[-w, -w], [w, -w], [w, w], [-w, w]];
    for i in 0..4 {
        let [a, b] = [corners[i], corners[(i + 1) % 4]];
        let base = positions.len() as u32;
        positions.extend([
            Vec3::new(a[0], -h, a[1]),
            Vec3::new(b[0], -h, b[1]),
            Vec3::new(b[0], h, b[1]),
            Vec3::new(a[0], h, a[1]),
        ]);
        tris.push([base, base + 1, base + 2]);
        tris.push([base, base + 2, base + 3]);
    }
    TriMesh::new(name, positions, tris, material)
}

/// Unit-radius Lambertian icosphere at the origin.
pub fn furnace_sphere(albedo: Real) -> Scene {
    let mut s = Scene::empty("furnace");
    let m = s.add_material(Material::diffuse("grey", Vec3::splat(albedo)));
    let mesh = s.add_mesh(sphere_mesh("sphere", 1.0, 3, m));
    s.add_node("ball", mesh, Affine::identity());
    s
}

pub fn furnace_camera(width: u32, height: u32) -> Camera {
    Camera::look_at(Vec3::new(0.0, 0.0, -3.5), Vec3::zero(), 45f64.to_radians(), width, height).expect("valid camera")
}

/// Large floor (y = 0) of the given albedo and a tiny black spherical
/// emitter of `radius` and radiance `le` at height `d` above the origin.
pub fn direct_light_scene(albedo: Real, radius: Real, le: Real, d: Real) -> Scene {
    let mut s = Scene::empty("direct-light");
    let floor = s.add_material(Material::diffuse("floor", Vec3::splat(albedo)));
    let h = 50.0;
    let f = s.add_mesh(quad_mesh(
        "floor",
        [Vec3::new(-h, 0.0, -h), Vec3::new(-h, 0.0, h), Vec3::new(h, 0.0, h), Vec3::new(h, 0.0, -h)],
        floor,
    ));
    s.add_node(FLOOR, f, Affine::identity());
    let bulb = s.add_material(Material {
        emission: Vec3::splat(le),
        ..Material::diffuse("bulb", Vec3::zero())
    });
    let b = s.add_mesh(sphere_mesh("bulb", radius, 2, bulb));
    let id = s.add_node("lamp", b, Affine::translation(Vec3::new(0.0, d, 0.0)));
    s.nodes.iter_mut().find(|n| n.id == id).expect("just added").emitter = true;
    s
}

/// Camera looking down at the floor point under the bulb from the side.
pub fn direct_light_camera(width: u32, height: u32) -> Camera {
    Camera::look_at(Vec3::new(0.0, 2.0, -2.0), Vec3::zero(), 4f64.to_radians(), width, height).expect("valid camera")
}


/// Writes `scenes` as `<dir>/scenes/<key>.json` and returns a pipeline
/// config over them sized for tests: tiny images, few samples, coarse
/// camera grid, output in `<dir>/out`.
pub fn pipeline_fixture(dir: &std::path::Path, scenes: &[(&str, Scene)]) -> crate::Result<PipelineConfig> {
    let mut paths = Vec::new();
    for (key, scene) in scenes {
        let p = dir.join("scenes").join(format!("{key}.json"));
        save_scene(scene, &p)?;
        paths.push(p);
    }
    let mut cfg = PipelineConfig {
        seed: 7,
        workers: 2,
        output: dir.join("out"),
        scenes: paths,
        ..PipelineConfig::default()
    };
    cfg.render.width = 32;
    cfg.render.height = 24;
    cfg.cameras.grid_resolution = 0.5;
    cfg.cameras.probe_size = [40, 30];
    cfg.path.spp = 2;
    cfg.path.max_depth = 3;
    cfg.path.rr_start = 2;
    Ok(cfg)
}
