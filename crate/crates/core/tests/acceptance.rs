//! Acceptance suite. Runs every criterion in order, prints one
//! `criterion NN PASS|FAIL` line each, then fails if any criterion failed.
//!
//! Run with `cargo test -p pbrgen-core --test acceptance -- --nocapture`
//! to see timings next to the verdict lines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use image::{Luma, Rgb, RgbImage};
use pbrgen_core::camera::{coverage_report, icosphere_points, sample_room_cameras, Camera, CameraParams, ItemBufferRenderer};
use pbrgen_core::curation::{
    color_histogram, depth_histogram, select, CandidateHistograms, ReferenceCorpus, DEFAULT_TAU,
};
use pbrgen_core::fixtures;
use pbrgen_core::geom::Vector3;
use pbrgen_core::groundtruth::{decode_normal, extract_boundaries, read_bundle, Gray16Image};
use pbrgen_core::metrics::{boundary_metrics, mean_iou, normal_metrics, BoundaryImage};
use pbrgen_core::path::{integrator_benchmark, render_path, EnvironmentMap, LightingMode, PathConfig};
use pbrgen_core::pipeline::{Manifest, Pipeline, PipelineConfig};
use pbrgen_core::raster::render_visibility;
use pbrgen_core::repair::{repair_scene, EmitterLabels, RepairConfig};
use pbrgen_core::scene::AccelScene;
use pbrgen_core::{Real, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const C1_MIN_OBJECTS: usize = 3;
const C1_MIN_COVERAGE: Real = 0.01;
const C1_MAX_PER_ROOM: usize = 6;
const C1_CLEARANCE: Real = 0.10;
const C1_BUDGET_S: f64 = 60.0;
// Criterion 3
const C3_BAND: (Real, Real) = (0.49, 0.51);
const C3_SPP: u32 = 256;
const C3_SIZE: u32 = 64;
const C3_BUDGET_S: f64 = 120.0;
const C3_WHITE_TOL: Real = 0.01;
// Criterion 4
const C4_SPP: u32 = 1024;
const C4_SIGMAS: Real = 3.0;
// Criterion 5
const C5_BLACK: Real = 1e-6;
// Criterion 6
const C6_TAUS: [Real; 5] = [0.0, 0.5, 0.70, 0.9, 1.0];
// Criterion 7
const C7_TOL: f64 = 1e-9;
const C7_INSTANCES: usize = 100;
// Criterion 8
const C8_NORMAL_DEG: Real = 0.5;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn c1_camera_sampler() -> Outcome {
    let params = CameraParams {
        min_objects: C1_MIN_OBJECTS,
        min_coverage: C1_MIN_COVERAGE,
        sectors: C1_MAX_PER_ROOM as u32,
        clearance: C1_CLEARANCE,
        probe_size: [80, 60],
        seed: 1,
        ..CameraParams::default()
    };
    let start = Instant::now();
    let mut total = 0;
    let mut per_scene = Vec::new();
    for scene in fixtures::camera_fixtures() {
        let id = scene.id.clone();
        let accel = AccelScene::new(scene);
        let mut n = 0;
        for room in &accel.scene().rooms {
            let cams = sample_room_cameras(&accel, room, &params, &accel).map_err(|e| e.to_string())?;
            ensure!(cams.len() <= C1_MAX_PER_ROOM, "{id}/{}: {} cameras", room.id, cams.len());
            let sectors: BTreeSet<u32> = cams.iter().map(|c| c.sector).collect();
            ensure!(sectors.len() == cams.len(), "{id}/{}: two cameras share a sector", room.id);
            for c in &cams {
                let buf = accel.item_buffer(&c.camera);
                let rep = coverage_report(&buf, accel.scene()).map_err(|e| e.to_string())?;
                ensure!(
                    rep.objects_at_least(C1_MIN_COVERAGE) >= C1_MIN_OBJECTS,
                    "{id}/{} sector {}: only {} objects at >= 1%",
                    room.id,
                    c.sector,
                    rep.objects_at_least(C1_MIN_COVERAGE)
                );
                let clearance = accel.bvh().nearest_distance(c.camera.position);
                ensure!(clearance >= C1_CLEARANCE, "{id}: camera {:.3} m from geometry", clearance);
            }
            n += cams.len();
        }
        per_scene.push(format!("{id}={n}"));
        total += n;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(total > 0, "no cameras at all");
    ensure!(secs < C1_BUDGET_S, "took {secs:.1} s");
    Ok(format!("{total} cameras ({}) in {secs:.1} s", per_scene.join(", ")))
}

fn c2_icosphere() -> Outcome {
    for s in 0..=3u32 {
        let pts = icosphere_points(s);
        let want = 10 * 4usize.pow(s) + 2;
        ensure!(pts.len() == want, "subdivision {s}: {} points, want {want}", pts.len());
        ensure!(pts.iter().all(|p| (p.length() - 1.0).abs() < 1e-12), "subdivision {s}: non-unit point");
    }
    ensure!(icosphere_points(2).len() == 162, "subdivision 2 is not 162");
    Ok("10*4^s+2 for s = 0..3, 162 at s = 2".into())
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn furnace_mean(albedo: Real, spp: u32) -> Result<(Real, Real, f64), String> {
    let accel = AccelScene::new(fixtures::furnace_sphere(albedo));
    let cam = fixtures::furnace_camera(C3_SIZE, C3_SIZE);
    let env = EnvironmentMap::constant(Vec3::splat(1.0)).unwrap();
    let cfg = PathConfig {
        spp,
        seed: 3,
        ..PathConfig::default()
    };
    let start = Instant::now();
    let r = single_thread(|| render_path(&accel, &cam, &cfg, Some(&env))).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (mut sphere, mut ns, mut bg, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for (p, &id) in r.image.pixels.iter().zip(&r.primary_instance) {
        let v = (p.x + p.y + p.z) / 3.0;
        if id != 0 {
            sphere += v;
            ns += 1;
        } else {
            bg += v;
            nb += 1;
        }
    }
    Ok((sphere / ns as Real, bg / nb as Real, secs))
}

fn c3_furnace() -> Outcome {
    let (m, _, secs) = furnace_mean(0.5, C3_SPP)?;
    ensure!(m >= C3_BAND.0 && m <= C3_BAND.1, "albedo 0.5 sphere mean {m:.5}");
    ensure!(secs < C3_BUDGET_S, "single-threaded render took {secs:.1} s");
    let (w, bg, _) = furnace_mean(1.0, 64)?;
    ensure!(((w - bg) / bg).abs() <= C3_WHITE_TOL, "white furnace {w:.5} vs background {bg:.5}");
    Ok(format!("grey {m:.5} in {secs:.1} s single-threaded; white {w:.5} vs background {bg:.5}"))
}

/// Irradiance at `x` (normal `n`) from a unit-radiance planar polygon, by
/// Lambert's contour integral.
fn polygon_irradiance(x: Vec3, n: Vec3, poly: &[Vec3]) -> Real {
    let mut sum = 0.0;
    for i in 0..poly.len() {
        let a = (poly[i] - x).normalized();
        let b = (poly[(i + 1) % poly.len()] - x).normalized();
        let c = a.cross(b);
        if c.length() == 0.0 {
            continue;
        }
        let theta = a.dot(b).clamp(-1.0, 1.0).acos();
        sum += theta * c.normalized().dot(n);
    }
    0.5 * sum.abs()
}

fn c4_direct_light() -> Outcome {
    let (albedo, radius, le, d) = (0.8, 0.02, 1000.0, 1.0);
    let scene = fixtures::direct_light_scene(albedo, radius, le, d);
    let accel = AccelScene::new(scene);
    let (w, h) = (32u32, 32u32);
    let cam = fixtures::direct_light_camera(w, h);
    let env = EnvironmentMap::constant(Vec3::zero()).unwrap();
    let cfg = PathConfig {
        spp: C4_SPP,
        seed: 11,
        ..PathConfig::default()
    };
    let r = render_path(&accel, &cam, &cfg, Some(&env)).map_err(|e| e.to_string())?;
    let lamp = accel.scene().nodes.iter().find(|n| n.emitter).unwrap();
    let tris: Vec<[Vec3; 3]> = accel.scene().node_world_triangles(lamp).collect();
    let center = Vec3::new(0.0, d, 0.0);
    let up = Vec3::new(0.0, 1.0, 0.0);

    let (mut mc, mut var, mut point, mut exact, mut smooth, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0usize);
    for y in h / 4..3 * h / 4 {
        for x in w / 4..3 * w / 4 {
            let i = (y * w + x) as usize;
            let ray = cam.pixel_center_ray(x, y);
            let t = -ray.origin.y / ray.dir.y;
            let p = ray.origin + ray.dir * t;
            let to = center - p;
            let dist2 = to.length_squared();
            let wdir = (p - center).normalized();
            let cos = to.normalized().dot(up);
            // Exact radiant intensity of the faceted emitter toward p.
            let intensity: Real = tris
                .iter()
                .map(|t| {
                    let c = (t[1] - t[0]).cross(t[2] - t[0]);
                    0.5 * c.length() * c.normalized().dot(wdir).max(0.0)
                })
                .sum::<Real>()
                * le;
            point += albedo / std::f64::consts::PI * intensity * cos / dist2;
            smooth += albedo / std::f64::consts::PI * le * std::f64::consts::PI * radius * radius * cos / dist2;
            let e: Real = tris
                .iter()
                .filter(|t| (t[1] - t[0]).cross(t[2] - t[0]).dot(p - t[0]) > 0.0)
                .map(|t| polygon_irradiance(p, up, t))
                .sum();
            exact += albedo / std::f64::consts::PI * le * e;
            mc += r.image.pixels[i].x;
            var += r.variance[i].x;
            n += 1;
        }
    }
    let nf = n as Real;
    let (mc, point, exact, smooth) = (mc / nf, point / nf, exact / nf, smooth / nf);
    let sigma = var.sqrt() / nf;
    ensure!(
        (mc - point).abs() <= C4_SIGMAS * sigma,
        "MC {mc:.6} vs point-light {point:.6}: {:.2} sigma (sigma {sigma:.2e})",
        (mc - point).abs() / sigma
    );
    ensure!(
        (mc - exact).abs() <= C4_SIGMAS * sigma,
        "MC {mc:.6} vs exact polygon oracle {exact:.6}: {:.2} sigma",
        (mc - exact).abs() / sigma
    );
    ensure!(((mc - smooth) / smooth).abs() < 0.03, "MC {mc:.6} vs smooth-sphere formula {smooth:.6}");
    Ok(format!(
        "MC {mc:.6} ± {sigma:.1e}, point-light {point:.6} ({:.2} sigma), exact {exact:.6}, smooth sphere {smooth:.6}",
        (mc - point).abs() / sigma
    ))
}

fn leak_max(scene: pbrgen_core::scene::Scene) -> Result<Real, String> {
    let accel = AccelScene::new(scene);
    let cam = fixtures::leaky_room_camera(32, 24);
    let env = EnvironmentMap::constant(Vec3::splat(1.0)).unwrap();
    let cfg = PathConfig {
        spp: 64,
        seed: 5,
        ..PathConfig::default()
    };
    let r = render_path(&accel, &cam, &cfg, Some(&env)).map_err(|e| e.to_string())?;
    Ok(r.image.max_component())
}

fn c5_light_tightness() -> Outcome {
    let gap = 0.02;
    let raw = leak_max(fixtures::leaky_room(gap))?;
    let (repaired, _) = repair_scene(fixtures::leaky_room(gap), &RepairConfig::default(), &EmitterLabels::new())
        .map_err(|e| e.to_string())?;
    ensure!(!repaired.nodes.iter().any(|n| n.emitter), "repaired fixture gained emitters");
    let tight = leak_max(repaired)?;
    ensure!(tight < C5_BLACK, "thickened room leaks: max pixel {tight:e}");
    ensure!(raw > 0.0, "zero-thickness room did not leak (max {raw:e})");
    Ok(format!("zero-thickness max {raw:.4}, thickened max {tight:e}"))
}

/// Brute-force histograms with a different formulation: bins by integer
/// division of scaled values.
fn oracle_color(img: &RgbImage) -> Vec<f64> {
    let mut h = vec![0.0; 512];
    for p in img.pixels() {
        let b = |c: u8| (c as usize * 8) / 256;
        h[b(p[0]) * 64 + b(p[1]) * 8 + b(p[2])] += 1.0;
    }
    let n = (img.width() * img.height()) as f64;
    h.iter().map(|v| v / n).collect()
}

fn oracle_depth(img: &Gray16Image) -> Option<Vec<f64>> {
    let mut h = vec![0.0; 64];
    let mut n = 0.0;
    for &mm in img.as_raw() {
        if mm == 0 {
            continue;
        }
        // 10 m over 64 bins = 156.25 mm per bin
        let bin = ((mm as f64) / 156.25).floor().min(63.0) as usize;
        h[bin] += 1.0;
        n += 1.0;
    }
    (n > 0.0).then(|| h.iter().map(|v| v / n).collect())
}

fn oracle_intersection(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += if a[i] < b[i] { a[i] } else { b[i] };
    }
    s
}

fn random_view(rng: &mut ChaCha8Rng, palette: &[[u8; 3]], depths: &[u16]) -> (RgbImage, Gray16Image) {
    let (w, h) = (24, 16);
    let mut c = RgbImage::new(w, h);
    let mut d = Gray16Image::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let base = palette[rng.random_range(0..palette.len())];
            let jitter = |v: u8, r: &mut ChaCha8Rng| v.saturating_add(r.random_range(0..24));
            c.put_pixel(x, y, Rgb([jitter(base[0], rng), jitter(base[1], rng), jitter(base[2], rng)]));
            let dd = depths[rng.random_range(0..depths.len())];
            let v = if rng.random_bool(0.05) { 0 } else { dd.saturating_add(rng.random_range(0..300)) };
            d.put_pixel(x, y, Luma([v]));
        }
    }
    (c, d)
}

fn c6_curation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let palettes: Vec<Vec<[u8; 3]>> = (0..4)
        .map(|_| (0..3).map(|_| [rng.random(), rng.random(), rng.random()]).collect())
        .collect();
    let depth_sets: Vec<Vec<u16>> = (0..4)
        .map(|_| (0..3).map(|_| rng.random_range(500..9000)).collect())
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ref_views = Vec::new();
    for i in 0..20 {
        let k = i % 4;
        let (c, d) = random_view(&mut rng, &palettes[k], &depth_sets[k]);
        c.save(dir.path().join(format!("ref{i:02}.color.png"))).unwrap();
        d.save(dir.path().join(format!("ref{i:02}.depth.png"))).unwrap();
        ref_views.push((c, d));
    }
    let cache = dir.path().join("cache");
    let corpus = ReferenceCorpus::load(dir.path(), Some(&cache)).map_err(|e| e.to_string())?;
    let cached = ReferenceCorpus::load(dir.path(), Some(&cache)).map_err(|e| e.to_string())?;
    ensure!(corpus == cached && corpus.len() == 20, "cache round trip changed the corpus");

    let mut cands = Vec::new();
    let mut views = Vec::new();
    for i in 0..50 {
        // In-distribution views, cross-paired views, unrelated views and one all-invalid depth.
        let (k, j) = (i % 4, (i / 4) % 4);
        let (c, mut d) = if i < 30 {
            random_view(&mut rng, &palettes[k], &depth_sets[j])
        } else {
            let pal: Vec<[u8; 3]> = (0..3).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let dep: Vec<u16> = (0..3).map(|_| rng.random_range(500..9000)).collect();
            random_view(&mut rng, &pal, &dep)
        };
        if i == 49 {
            d = Gray16Image::new(d.width(), d.height());
        }
        cands.push(CandidateHistograms {
            color: color_histogram(&c).unwrap(),
            depth: depth_histogram(&d),
        });
        views.push((c, d));
    }

    let oracle_refs: Vec<(Vec<f64>, Vec<f64>)> =
        ref_views.iter().map(|(c, d)| (oracle_color(c), oracle_depth(d).unwrap())).collect();
    let mut kept_counts = Vec::new();
    let mut prev: Option<BTreeSet<usize>> = None;
    for tau in C6_TAUS {
        let got = select(&cands, &corpus, tau).map_err(|e| e.to_string())?;
        let got: BTreeSet<usize> = got.iter().enumerate().filter(|(_, s)| s.kept).map(|(i, _)| i).collect();
        let mut want = BTreeSet::new();
        for (i, (c, d)) in views.iter().enumerate() {
            let Some(od) = oracle_depth(d) else { continue };
            let oc = oracle_color(c);
            let best_c = oracle_refs.iter().map(|r| oracle_intersection(&oc, &r.0)).fold(0.0, f64::max);
            let best_d = oracle_refs.iter().map(|r| oracle_intersection(&od, &r.1)).fold(0.0, f64::max);
            if best_c > tau && best_d > tau {
                want.insert(i);
            }
        }
        ensure!(got == want, "tau {tau}: kept {got:?}, brute force {want:?}");
        if let Some(p) = &prev {
            ensure!(got.is_subset(p), "tau {tau}: kept set grew");
        }
        kept_counts.push(format!("{tau}:{}", got.len()));
        prev = Some(got);
    }

    // Exactly (0.70, 0.70) must be rejected.
    let mut c = RgbImage::new(10, 1);
    let mut d = Gray16Image::from_pixel(10, 1, Luma([2000]));
    for x in 7..10 {
        c.put_pixel(x, 0, Rgb([255, 255, 255]));
        d.put_pixel(x, 0, Luma([5000]));
    }
    let edge_ref = ReferenceCorpus::from_histograms(vec![pbrgen_core::curation::ReferenceEntry {
        name: "black-2m".into(),
        color: color_histogram(&RgbImage::new(4, 4)).unwrap(),
        depth: depth_histogram(&Gray16Image::from_pixel(4, 4, Luma([2000]))),
    }]);
    let s = select(
        &[CandidateHistograms {
            color: color_histogram(&c).unwrap(),
            depth: depth_histogram(&d),
        }],
        &edge_ref,
        DEFAULT_TAU,
    )
    .map_err(|e| e.to_string())?;
    ensure!(s[0].color == 0.70 && s[0].depth == 0.70, "edge scores {:?}", (s[0].color, s[0].depth));
    ensure!(!s[0].kept, "(0.70, 0.70) was kept");
    Ok(format!("kept per tau {}; (0.70, 0.70) rejected", kept_counts.join(" ")))
}

fn oracle_normals(p: &[Vec3], g: &[Vec3], valid: &[bool]) -> [f64; 5] {
    let mut e = Vec::new();
    for i in 0..p.len() {
        if valid[i] {
            let c = p[i].dot(g[i]) / (p[i].length() * g[i].length());
            e.push(c.clamp(-1.0, 1.0).acos() * 180.0 / std::f64::consts::PI);
        }
    }
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let pct = |t: f64| 100.0 * e.iter().filter(|&&x| x < t).count() as f64 / n;
    let (a, b, c) = (pct(11.25), pct(22.5), pct(30.0));
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = e.len();
    let median = if m % 2 == 1 { e[m / 2] } else { 0.5 * (e[m / 2 - 1] + e[m / 2]) };
    [mean, median, a, b, c]
}

fn oracle_miou(p: &[u32], g: &[u32], k: usize) -> f64 {
    let mut conf = vec![vec![0u64; k]; k];
    for i in 0..p.len() {
        conf[g[i] as usize][p[i] as usize] += 1;
    }
    let mut ious = Vec::new();
    for c in 0..k {
        let gt_total: u64 = conf[c].iter().sum();
        if gt_total == 0 {
            continue;
        }
        let pred_total: u64 = (0..k).map(|r| conf[r][c]).sum();
        let inter = conf[c][c];
        ious.push(inter as f64 / (gt_total + pred_total - inter) as f64);
    }
    ious.iter().sum::<f64>() / ious.len() as f64
}

/// Greedy matching by repeated global minimum over all free pairs.
fn oracle_match(w: usize, pred: &[bool], gt: &[bool], r: f64) -> usize {
    let pos = |i: usize| ((i % w) as f64, (i / w) as f64);
    let ps: Vec<usize> = (0..pred.len()).filter(|&i| pred[i]).collect();
    let gs: Vec<usize> = (0..gt.len()).filter(|&i| gt[i]).collect();
    let mut pu = vec![false; ps.len()];
    let mut gu = vec![false; gs.len()];
    let mut m = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &pi) in ps.iter().enumerate() {
            if pu[a] {
                continue;
            }
            for (b, &gi) in gs.iter().enumerate() {
                if gu[b] {
                    continue;
                }
                let (px, py) = pos(pi);
                let (gx, gy) = pos(gi);
                let d = ((px - gx).powi(2) + (py - gy).powi(2)).sqrt();
                if d <= r + 1e-12 && best.is_none_or(|(bd, ba, bb)| (d, pi, gi) < (bd, ps[ba], gs[bb])) {
                    best = Some((d, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        pu[a] = true;
        gu[b] = true;
        m += 1;
    }
    m
}

fn oracle_boundary(imgs: &[BoundaryImage<f64>], tol: f64) -> [f64; 4] {
    let ts: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    let mut agg = vec![(0usize, 0usize, 0usize); ts.len()];
    let f = |p: f64, r: f64| if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    let div = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let mut ois = 0.0;
    for img in imgs {
        let r = tol * ((img.width as f64).powi(2) + (img.height as f64).powi(2)).sqrt();
        let ng = img.gt.iter().filter(|&&g| g).count();
        let mut best = 0.0f64;
        for (k, &t) in ts.iter().enumerate() {
            let pred: Vec<bool> = img.pred.iter().map(|&v| v >= t).collect();
            let np = pred.iter().filter(|&&b| b).count();
            let m = oracle_match(img.width as usize, &pred, &img.gt, r);
            agg[k].0 += m;
            agg[k].1 += np;
            agg[k].2 += ng;
            best = best.max(f(div(m, np), div(m, ng)));
        }
        ois += best;
    }
    ois /= imgs.len() as f64;
    let pr: Vec<(f64, f64)> = agg.iter().map(|&(m, np, ng)| (div(m, np), div(m, ng))).collect();
    let ods = pr.iter().map(|&(p, r)| f(p, r)).fold(0.0, f64::max);
    // Interpolated precision: best precision at any recall >= r.
    let mut rs: Vec<f64> = pr.iter().map(|x| x.1).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup();
    let interp = |r: f64| pr.iter().filter(|x| x.1 >= r).map(|x| x.0).fold(0.0, f64::max);
    let mut ap = 0.0;
    let mut prev = 0.0;
    for &r in &rs {
        ap += (r - prev) * interp(r);
        prev = r;
    }
    let mut r50 = 0.0;
    for (i, &r) in rs.iter().enumerate() {
        let p = interp(r);
        if p >= 0.5 {
            r50 = r;
            if let Some(&r1) = rs.get(i + 1) {
                let p1 = interp(r1);
                if p1 < 0.5 && p > p1 {
                    r50 = r + (r1 - r) * (p - 0.5) / (p - p1);
                }
            }
        }
    }
    [ods, ois, ap, r50]
}

fn c7_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for inst in 0..C7_INSTANCES {
        let (w, h) = (rng.random_range(1..=16usize), rng.random_range(1..=16usize));
        let n = w * h;
        let rv = |r: &mut ChaCha8Rng| {
            Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.05..1.0)).normalized()
        };
        let p: Vec<Vec3> = (0..n).map(|_| rv(&mut rng)).collect();
        let g: Vec<Vec3> = (0..n).map(|_| rv(&mut rng)).collect();
        let mut valid: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
        valid[0] = true;
        let m = normal_metrics(&p, &g, &valid).map_err(|e| e.to_string())?;
        let o = oracle_normals(&p, &g, &valid);
        for (a, b) in [m.mean, m.median, m.within[0], m.within[1], m.within[2]].iter().zip(o) {
            worst = worst.max((a - b).abs());
        }

        let k = rng.random_range(2..=4usize);
        let pl: Vec<u32> = (0..n).map(|_| rng.random_range(0..k as u32)).collect();
        let gl: Vec<u32> = (0..n).map(|_| rng.random_range(0..k as u32)).collect();
        let s = mean_iou(&pl, &gl, &BTreeSet::new()).map_err(|e| e.to_string())?;
        worst = worst.max((s.mean_iou - oracle_miou(&pl, &gl, k)).abs());

        let img = BoundaryImage {
            width: w as u32,
            height: h as u32,
            pred: (0..n)
                .map(|_| if rng.random_bool(0.4) { rng.random_range(0.0..=1.0) } else { 0.0 })
                .collect(),
            gt: (0..n).map(|_| rng.random_bool(0.25)).collect(),
        };
        let tol = [0.0075, 0.05, 0.1][inst % 3];
        let b = boundary_metrics(std::slice::from_ref(&img), tol).map_err(|e| e.to_string())?;
        let ob = oracle_boundary(&[img], tol);
        for ((name, a), o) in ["ODS", "OIS", "AP", "R50"].iter().zip([b.ods, b.ois, b.ap, b.r50]).zip(ob) {
            ensure!((a - o).abs() <= C7_TOL, "instance {inst} ({w}x{h}, tol {tol}): {name} {a} vs oracle {o}");
        }
        ensure!(worst <= C7_TOL, "instance {inst}: deviation {worst:e}");
    }

    let g: Vec<Vec3> = (0..64).map(|i| Vector3::new((i as f64).sin(), 0.3, 1.0).normalized()).collect();
    let id = normal_metrics(&g, &g, &[true; 64]).map_err(|e| e.to_string())?;
    ensure!(
        [id.mean, id.median, id.within[0], id.within[1], id.within[2]] == [0.0, 0.0, 100.0, 100.0, 100.0],
        "identity normals {id:?}"
    );
    let labels: Vec<u32> = (0..64).map(|i| i % 5).collect();
    let miou = mean_iou(&labels, &labels, &BTreeSet::new()).map_err(|e| e.to_string())?.mean_iou;
    ensure!(miou == 1.0, "identity mIoU {miou}");
    let gt: Vec<bool> = (0..256).map(|i| i % 7 == 0).collect();
    let img = BoundaryImage {
        width: 16,
        height: 16,
        pred: gt.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        gt,
    };
    let b = boundary_metrics(&[img], 0.0075).map_err(|e| e.to_string())?;
    ensure!(b.ods == 1.0, "identity ODS {}", b.ods);
    Ok(format!("{C7_INSTANCES} instances, max deviation {worst:.1e}; identities exact"))
}

fn fixture_config(dir: &Path) -> PipelineConfig {
    let scenes: Vec<_> = fixtures::camera_fixtures().into_iter().map(|s| (s.id.clone(), s)).collect();
    let named: Vec<(&str, _)> = scenes.iter().map(|(k, s)| (k.as_str(), s.clone())).collect();
    fixtures::pipeline_fixture(dir, &named).unwrap()
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

struct RunSet {
    _dir: tempfile::TempDir,
    cfgs: Vec<PipelineConfig>,
}

fn pipeline_runs() -> Result<RunSet, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfgs = Vec::new();
    for (name, workers) in [("a", 1), ("b", 1), ("c", 8)] {
        let sub = dir.path().join(name);
        let mut cfg = fixture_config(&sub);
        cfg.workers = workers;
        let reports = Pipeline::new(cfg.clone(), false)
            .and_then(|p| p.full_run())
            .map_err(|e| e.to_string())?;
        if let Some(r) = reports.iter().find(|r| r.is_partial()) {
            return Err(format!("run {name}: {r}"));
        }
        cfgs.push(cfg);
    }
    Ok(RunSet { _dir: dir, cfgs })
}

fn c8_groundtruth(runs: &RunSet) -> Outcome {
    let cfg = &runs.cfgs[0];
    let m = Manifest::read(cfg.output.join("manifest.jsonl")).map_err(|e| e.to_string())?;
    let mut bundles = 0;
    let mut pixels = 0usize;
    let mut worst: Real = 0.0;
    let mut scenes: BTreeMap<String, AccelScene> = BTreeMap::new();
    for e in m.frames() {
        let b = read_bundle(cfg.output.join(e.bundle.as_ref().ok_or("frame without bundle")?)).map_err(|e| e.to_string())?;
        let accel = scenes.entry(e.scene.clone()).or_insert_with(|| {
            let p = cfg.output.join("repaired").join(format!("{}.json", e.scene));
            AccelScene::new(pbrgen_core::scene::load_scene(p).unwrap().scene)
        });
        let (w, h) = b.dimensions();
        let ids = b.instance_ids();
        let bnd = extract_boundaries(w, h, &ids);
        ensure!(
            b.boundary.as_raw().iter().zip(&bnd).all(|(&p, &q)| (p == 255) == q && (p == 0 || p == 255)),
            "{:?}: boundary channel differs from extract_boundaries",
            e.key()
        );
        let vis = render_visibility(accel, &b.camera);
        let nodes = accel.scene().node_index_by_id();
        for i in 0..ids.len() {
            let id = ids[i];
            let sem = b.semantic.as_raw()[i] as u32;
            let depth = b.depth.as_raw()[i];
            let nrm = &b.normal.as_raw()[3 * i..3 * i + 3];
            if id == 0 {
                ensure!(sem == 0 && depth == 0 && nrm == [0, 0, 0], "{:?} px {i}: background carries data", e.key());
                continue;
            }
            let node = &accel.scene().nodes[*nodes.get(&id).ok_or(format!("unknown instance {id}"))?];
            ensure!(sem == node.category, "{:?} px {i}: semantic {sem} vs category {}", e.key(), node.category);
            ensure!(depth >= 1, "{:?} px {i}: zero depth on a hit", e.key());
            let dec = decode_normal([nrm[0], nrm[1], nrm[2]]);
            let err = dec.dot(vis.normal[i]).clamp(-1.0, 1.0).acos().to_degrees();
            worst = worst.max(err);
            ensure!(err < C8_NORMAL_DEG, "{:?} px {i}: normal round trip {err:.3} deg", e.key());
        }
        pixels += ids.len();
        bundles += 1;
    }
    ensure!(bundles > 0, "no bundles generated");
    Ok(format!("{bundles} bundles, {pixels} pixels, worst normal round trip {worst:.3} deg"))
}

fn c9_determinism(runs: &RunSet) -> Outcome {
    let bundles: Vec<_> = runs.cfgs.iter().map(|c| tree_bytes(&c.output.join("bundles"))).collect();
    ensure!(!bundles[0].is_empty(), "no bundle files");
    ensure!(bundles[0] == bundles[1], "two runs with workers = 1 differ");
    ensure!(bundles[0] == bundles[2], "workers = 1 and workers = 8 differ");
    let manifests: Vec<_> = runs
        .cfgs
        .iter()
        .map(|c| Manifest::read(c.output.join("manifest.jsonl")).map(|m| m.canonical()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure!(manifests[0] == manifests[1] && manifests[0] == manifests[2], "manifests differ beyond timestamps");
    let cams: usize = runs.cfgs[0]
        .scenes
        .iter()
        .map(|s| {
            let key = pbrgen_core::pipeline::scene_key(s);
            pbrgen_core::pipeline::read_camera_entries(&runs.cfgs[0].output.join("cameras").join(format!("{key}.json")))
                .map(|v| v.len())
                .unwrap_or(0)
        })
        .sum();
    let frames = manifests[0].iter().filter(|e| e.is_frame()).count();
    ensure!(frames == 4 * cams, "{frames} frames for {cams} cameras");
    Ok(format!("{} bundle files identical across 3 runs; {frames} frames = 4 x {cams} cameras", bundles[0].len()))
}

fn c10_benchmark() -> Outcome {
    let (scene, _) = repair_scene(
        fixtures::studio(),
        &RepairConfig::default(),
        &EmitterLabels::new().auto_bulb(fixtures::studio().nodes_in_category("lamp")[0]),
    )
    .map_err(|e| e.to_string())?;
    let accel = AccelScene::new(scene);
    let cam = Camera::look_at(Vec3::new(0.5, 1.5, 0.5), Vec3::new(3.0, 1.0, 2.5), 60f64.to_radians(), 32, 24)
        .map_err(|e| e.to_string())?;
    let env = EnvironmentMap::constant(Vec3::splat(1.0)).unwrap();
    let mut ratios = Vec::new();
    let mut rows_out = Vec::new();
    for seed in [1u64, 2, 3] {
        let base = PathConfig {
            seed,
            mode: LightingMode::IndoorOutdoor,
            ..PathConfig::default()
        };
        let rows = integrator_benchmark(&accel, &cam, &base, Some(&env), &[16, 64, 256]).map_err(|e| e.to_string())?;
        let v: Vec<Real> = rows.iter().map(|r| r.variance).collect();
        ensure!(v[0] > v[1] && v[1] > v[2], "seed {seed}: variances {v:?} not strictly decreasing");
        ensure!(v[2] == 0.0, "seed {seed}: reference row variance {}", v[2]);
        ratios.push(v[0] / v[1]);
        rows_out.push(format!("{:.2e}/{:.2e}", v[0], v[1]));
    }
    // Prefix estimator: E|X16 - X256|^2 / E|X64 - X256|^2 = (1/16 - 1/256) / (1/64 - 1/256) = 5.
    let mean_ratio = ratios.iter().sum::<Real>() / ratios.len() as Real;
    ensure!((2.5..=10.0).contains(&mean_ratio), "variance ratio 16:64 = {mean_ratio:.2}, expected about 5");
    Ok(format!("16/64 spp variance per seed {}; mean ratio {mean_ratio:.2} (expected 5)", rows_out.join(", ")))
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match r {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    // Written to the real stdout so the verdicts show up without --nocapture.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} {tag} {name} [{secs:.1} s]: {detail}");
    ok
}

#[test]
fn acceptance() {
    let mut ok = true;
    ok &= run(1, "camera sampler contract", c1_camera_sampler);
    ok &= run(2, "icosphere vertex counts", c2_icosphere);
    ok &= run(3, "furnace test", c3_furnace);
    ok &= run(4, "direct illumination oracle", c4_direct_light);
    ok &= run(5, "light tightness", c5_light_tightness);
    ok &= run(6, "curation oracle", c6_curation);
    ok &= run(7, "metric oracles", c7_metrics);
    let runs = pipeline_runs();
    ok &= run(8, "ground-truth consistency", || c8_groundtruth(runs.as_ref().map_err(Clone::clone)?));
    ok &= run(9, "determinism", || c9_determinism(runs.as_ref().map_err(Clone::clone)?));
    ok &= run(10, "variance falls with spp", c10_benchmark);
    assert!(ok, "acceptance criteria failed; see the criterion lines above");
}
