use std::collections::HashMap;

use crate::Vec3;

/// Unit icosphere: the icosahedron subdivided `subdiv` times (each triangle
/// split in four) with vertices projected onto the sphere.
/// Vertex count is `10 * 4^subdiv + 2`.
pub fn icosphere(subdiv: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(|v| Vec3::from(v).normalized())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdiv {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = ((verts[a as usize] + verts[b as usize]) * 0.5).normalized();
                verts.push(m);
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

pub fn icosphere_points(subdiv: u32) -> Vec<Vec3> {
    icosphere(subdiv).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_closed_form() {
        for s in 0..4u32 {
            let (v, f) = icosphere(s);
            assert_eq!(v.len(), 10 * 4usize.pow(s) + 2);
            assert_eq!(f.len(), 20 * 4usize.pow(s));
        }
        assert_eq!(icosphere_points(0).len(), 12);
        assert_eq!(icosphere_points(2).len(), 162);
    }

    #[test]
    fn points_are_unit_and_distinct() {
        let pts = icosphere_points(2);
        for p in &pts {
            assert!((p.length() - 1.0).abs() < 1e-9);
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!((pts[i] - pts[j]).length() > 1e-3);
            }
        }
    }

    #[test]
    fn faces_wind_outward() {
        let (v, f) = icosphere(1);
        for [a, b, c] in f {
            let (a, b, c) = (v[a as usize], v[b as usize], v[c as usize]);
            assert!((b - a).cross(c - a).dot(a + b + c) > 0.0);
        }
    }
}
