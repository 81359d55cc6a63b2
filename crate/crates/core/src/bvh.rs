//! Bounding volume hierarchy over world-space triangles.
//!
//! Built top-down with a binned surface-area heuristic and stored as a flat
//! array with the root at index 0. Leaves reference a contiguous range of the
//! (reordered) triangle array; every triangle lives in exactly one leaf.

use crate::float::Float;
use crate::geom::{closest_point_on_triangle, intersect_triangle, Aabb, Ray, TriangleHit, Vector3};

const MAX_LEAF: usize = 4;
const BINS: usize = 16;

/// Where a BVH triangle came from: scene node index and triangle index in that node's mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimRef {
    pub node: u32,
    pub triangle: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Leaf { first: u32, count: u32 },
    Interior { left: u32, right: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode<T> {
    pub bounds: Aabb<T>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bvh<T> {
    nodes: Vec<BvhNode<T>>,
    triangles: Vec<[Vector3<T>; 3]>,
    refs: Vec<PrimRef>,
}

struct BuildPrim<T> {
    bounds: Aabb<T>,
    centroid: Vector3<T>,
    index: usize,
}

impl<T: Float> Bvh<T> {
    /// Builds over `triangles`, keeping `refs[i]` attached to `triangles[i]`.
    pub fn build(triangles: Vec<[Vector3<T>; 3]>, refs: Vec<PrimRef>) -> Self {
        assert_eq!(triangles.len(), refs.len(), "one ref per triangle");
        if triangles.is_empty() {
            return Self {
                nodes: Vec::new(),
                triangles,
                refs,
            };
        }
        let mut prims: Vec<BuildPrim<T>> = triangles
            .iter()
            .enumerate()
            .map(|(index, t)| {
                let bounds = Aabb::from_points(t.iter().copied());
                BuildPrim {
                    bounds,
                    centroid: bounds.center(),
                    index,
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len());
        let len = prims.len();
        build_recursive(&mut nodes, &mut prims, 0, len);
        let order: Vec<usize> = prims.iter().map(|p| p.index).collect();
        Self {
            nodes,
            triangles: order.iter().map(|&i| triangles[i]).collect(),
            refs: order.iter().map(|&i| refs[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn nodes(&self) -> &[BvhNode<T>] {
        &self.nodes
    }

    pub fn triangle(&self, prim: usize) -> &[Vector3<T>; 3] {
        &self.triangles[prim]
    }

    pub fn triangles(&self) -> &[[Vector3<T>; 3]] {
        &self.triangles
    }

    pub fn prim_ref(&self, prim: usize) -> PrimRef {
        self.refs[prim]
    }

    pub fn refs(&self) -> &[PrimRef] {
        &self.refs
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes.first().map(|n| n.bounds).unwrap_or_default()
    }

    /// Nearest accepted triangle with `t in (t_min, ray.t_max)`.
    pub fn closest_hit(
        &self,
        ray: &Ray<T>,
        t_min: T,
        accept: impl Fn(usize) -> bool,
    ) -> Option<(usize, TriangleHit<T>)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vector3::new(T::one() / ray.dir.x, T::one() / ray.dir.y, T::one() / ray.dir.z);
        let mut best: Option<(usize, TriangleHit<T>)> = None;
        let mut t_best = ray.t_max;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.hit(ray.origin, inv_dir, t_min, t_best).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for prim in first as usize..(first + count) as usize {
                        if let Some(h) = intersect_triangle(ray.origin, ray.dir, &self.triangles[prim], t_min, t_best) {
                            if accept(prim) {
                                t_best = h.t;
                                best = Some((prim, h));
                            }
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    // Visit the nearer child first.
                    let tl = self.nodes[left as usize].bounds.hit(ray.origin, inv_dir, t_min, t_best);
                    let tr = self.nodes[right as usize].bounds.hit(ray.origin, inv_dir, t_min, t_best);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            let (near, far) = if a <= b { (left, right) } else { (right, left) };
                            stack.push(far);
                            stack.push(near);
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    /// True when any accepted triangle is hit with `t in (t_min, ray.t_max)`.
    pub fn any_hit(&self, ray: &Ray<T>, t_min: T, accept: impl Fn(usize) -> bool) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv_dir = Vector3::new(T::one() / ray.dir.x, T::one() / ray.dir.y, T::one() / ray.dir.z);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.hit(ray.origin, inv_dir, t_min, ray.t_max).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for prim in first as usize..(first + count) as usize {
                        if accept(prim)
                            && intersect_triangle(ray.origin, ray.dir, &self.triangles[prim], t_min, ray.t_max)
                                .is_some()
                        {
                            return true;
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        false
    }

    /// True when some triangle lies strictly closer than `radius` to `p`.
    pub fn any_within(&self, p: Vector3<T>, radius: T) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let r2 = radius * radius;
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.distance_squared(p) >= r2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for prim in first as usize..(first + count) as usize {
                        let q = closest_point_on_triangle(p, &self.triangles[prim]);
                        if (q - p).length_squared() < r2 {
                            return true;
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        false
    }

    /// Distance from `p` to the nearest triangle (infinite when empty).
    pub fn nearest_distance(&self, p: Vector3<T>) -> T {
        let mut best2 = T::infinity();
        if self.nodes.is_empty() {
            return best2;
        }
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.distance_squared(p) >= best2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for prim in first as usize..(first + count) as usize {
                        let q = closest_point_on_triangle(p, &self.triangles[prim]);
                        best2 = best2.min((q - p).length_squared());
                    }
                }
                NodeKind::Interior { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        best2.sqrt()
    }

    /// Checks structural invariants: parents contain children, leaves bound
    /// their triangles, and every triangle is referenced by exactly one leaf.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return if self.triangles.is_empty() {
                Ok(())
            } else {
                Err("triangles without nodes".into())
            };
        }
        let mut seen = vec![0u32; self.triangles.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for prim in first..first + count {
                        let prim = prim as usize;
                        let tb = Aabb::from_points(self.triangles[prim].iter().copied());
                        if !node.bounds.contains_box(&tb) {
                            return Err(format!("leaf {i} does not bound triangle {prim}"));
                        }
                        seen[prim] += 1;
                    }
                }
                NodeKind::Interior { left, right } => {
                    for c in [left, right] {
                        if !node.bounds.contains_box(&self.nodes[c as usize].bounds) {
                            return Err(format!("node {i} does not contain child {c}"));
                        }
                    }
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            Some(p) => Err(format!("triangle {p} referenced {} times", seen[p])),
            None => Ok(()),
        }
    }
}

fn build_recursive<T: Float>(
    nodes: &mut Vec<BvhNode<T>>,
    prims: &mut [BuildPrim<T>],
    offset: usize,
    len: usize,
) -> u32 {
    let slice = &mut prims[offset..offset + len];
    let bounds = slice.iter().fold(Aabb::empty(), |b, p| b.union(p.bounds));
    let index = nodes.len() as u32;
    nodes.push(BvhNode {
        bounds,
        kind: NodeKind::Leaf {
            first: offset as u32,
            count: len as u32,
        },
    });
    if len <= MAX_LEAF {
        return index;
    }
    let centroid_bounds = Aabb::from_points(slice.iter().map(|p| p.centroid));
    let axis = centroid_bounds.largest_axis();
    let lo = centroid_bounds.min[axis];
    let extent = centroid_bounds.max[axis] - lo;

    let mid = if extent <= T::zero() {
        // All centroids coincide; split by count.
        len / 2
    } else {
        let bins_t = T::lit(BINS as f64);
        let bin_of = |c: T| -> usize {
            let b = ((c - lo) / extent * bins_t).to_usize().unwrap_or(0);
            b.min(BINS - 1)
        };
        let mut counts = [0usize; BINS];
        let mut boxes = [Aabb::<T>::empty(); BINS];
        for p in slice.iter() {
            let b = bin_of(p.centroid[axis]);
            counts[b] += 1;
            boxes[b] = boxes[b].union(p.bounds);
        }
        let mut best_cost = T::infinity();
        let mut best_split = 0;
        for split in 1..BINS {
            let (mut bl, mut br) = (Aabb::empty(), Aabb::empty());
            let (mut nl, mut nr) = (0usize, 0usize);
            for b in 0..split {
                bl = bl.union(boxes[b]);
                nl += counts[b];
            }
            for b in split..BINS {
                br = br.union(boxes[b]);
                nr += counts[b];
            }
            if nl == 0 || nr == 0 {
                continue;
            }
            let cost = bl.surface_area() * T::lit(nl as f64) + br.surface_area() * T::lit(nr as f64);
            if cost < best_cost {
                best_cost = cost;
                best_split = split;
            }
        }
        if best_split == 0 {
            len / 2
        } else {
            let mut i = 0;
            for j in 0..len {
                if bin_of(slice[j].centroid[axis]) < best_split {
                    slice.swap(i, j);
                    i += 1;
                }
            }
            i
        }
    };
    let mid = if mid == 0 || mid == len {
        slice.sort_by(|a, b| {
            a.centroid[axis]
                .partial_cmp(&b.centroid[axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        len / 2
    } else {
        mid
    };
    let left = build_recursive(nodes, prims, offset, mid);
    let right = build_recursive(nodes, prims, offset + mid, len - mid);
    nodes[index as usize].kind = NodeKind::Interior { left, right };
    index
}
