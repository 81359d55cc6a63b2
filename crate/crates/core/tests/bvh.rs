use pbrgen_core::bvh::{Bvh, PrimRef};
use pbrgen_core::geom::{intersect_triangle, Ray, Vector3};
use pbrgen_core::Float;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn soup<T: Float>(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[Vector3<T>; 3]>, Vec<PrimRef>) {
    let mut v = || T::lit(rng.random_range(-5.0..5.0));
    let mut tris = Vec::with_capacity(n);
    for _ in 0..n {
        let c = Vector3::new(v(), v(), v());
        let s = T::lit(0.6);
        let mut jitter = || Vector3::new(v() * s / T::lit(5.0), v() * s / T::lit(5.0), v() * s / T::lit(5.0));
        tris.push([c + jitter(), c + jitter(), c + jitter()]);
    }
    let refs = (0..n as u32).map(|i| PrimRef { node: 0, triangle: i }).collect();
    (tris, refs)
}

fn brute<T: Float>(tris: &[[Vector3<T>; 3]], ray: &Ray<T>, t_min: T) -> Option<T> {
    tris.iter()
        .filter_map(|t| intersect_triangle(ray.origin, ray.dir, t, t_min, ray.t_max))
        .map(|h| h.t)
        .fold(None, |a: Option<T>, t| Some(a.map_or(t, |a| a.min(t))))
}

fn random_ray<T: Float>(rng: &mut ChaCha8Rng) -> Ray<T> {
    let mut v = |r: f64| T::lit(rng.random_range(-r..r));
    let o = Vector3::new(v(7.0), v(7.0), v(7.0));
    let d = Vector3::new(v(1.0), v(1.0), v(1.0)).normalized();
    Ray::new(o, d)
}

fn agree<T: Float>(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tris, refs) = soup::<T>(&mut rng, 600);
    let bvh = Bvh::build(tris.clone(), refs);
    bvh.validate().unwrap();
    let mut hits = 0;
    for _ in 0..10_000 {
        let ray = random_ray::<T>(&mut rng);
        let t_min = T::lit(1e-4);
        let got = bvh.closest_hit(&ray, t_min, |_| true).map(|(_, h)| h.t);
        let want = brute(bvh.triangles(), &ray, t_min);
        assert_eq!(got, want, "ray {ray:?}");
        assert_eq!(bvh.any_hit(&ray, t_min, |_| true), want.is_some());
        hits += want.is_some() as usize;
    }
    assert!(hits > 500, "rays should hit often enough to test something ({hits})");
}

#[test]
fn closest_hit_matches_brute_force_f64() {
    agree::<f64>(1);
}

#[test]
fn closest_hit_matches_brute_force_f32() {
    agree::<f32>(2);
}

/// Distance from `p` to a triangle by clamped projection onto the plane and edges.
fn point_triangle_distance(p: Vector3<f64>, t: &[Vector3<f64>; 3]) -> f64 {
    let n = (t[1] - t[0]).cross(t[2] - t[0]);
    let mut best = f64::INFINITY;
    if n.length() > 0.0 {
        let n = n.normalized();
        let q = p - n * (p - t[0]).dot(n);
        let inside = (0..3).all(|i| (t[(i + 1) % 3] - t[i]).cross(q - t[i]).dot(n) >= 0.0);
        if inside {
            best = (p - q).length();
        }
    }
    for i in 0..3 {
        let (a, b) = (t[i], t[(i + 1) % 3]);
        let ab = b - a;
        let s = if ab.length_squared() > 0.0 { ((p - a).dot(ab) / ab.length_squared()).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min((p - (a + ab * s)).length());
    }
    best
}

#[test]
fn nearest_distance_and_any_within_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (tris, refs) = soup::<f64>(&mut rng, 300);
    let bvh = Bvh::build(tris, refs);
    for _ in 0..2_000 {
        let p = Vector3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let want = bvh.triangles().iter().map(|t| point_triangle_distance(p, t)).fold(f64::INFINITY, f64::min);
        let got = bvh.nearest_distance(p);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        let r: f64 = rng.random_range(0.0..1.0);
        if (want - r).abs() > 1e-9 {
            assert_eq!(bvh.any_within(p, r), want < r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_triangle_in_exactly_one_leaf(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (tris, refs) = soup::<f64>(&mut rng, n);
        let bvh = Bvh::build(tris, refs);
        prop_assert!(bvh.validate().is_ok());
        let mut seen: Vec<u32> = bvh.refs().iter().map(|r| r.triangle).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n as u32).collect::<Vec<_>>());
    }
}
