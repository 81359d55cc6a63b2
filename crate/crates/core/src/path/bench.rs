use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use super::{render_path, EnvironmentMap, PathConfig};
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::scene::AccelScene;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub spp: u32,
    pub seconds: f64,
    /// Mean squared per-pixel, per-channel difference to the highest-spp render.
    pub variance: Real,
}

/// Renders the view at each spp in `spp_list` and measures each image's
/// mean squared deviation from the highest-spp render. Because sample
/// streams are indexed per sample, every lower-spp image is a prefix of the
/// reference, so the reference row is exactly 0.
pub fn integrator_benchmark(
    accel: &AccelScene,
    camera: &Camera,
    base: &PathConfig,
    env: Option<&EnvironmentMap>,
    spp_list: &[u32],
) -> Result<Vec<BenchRow>> {
    let Some(&max_spp) = spp_list.iter().max() else {
        return Err(Error::InvalidArgument("empty spp list".into()));
    };
    let mut renders = Vec::with_capacity(spp_list.len());
    for &spp in spp_list {
        let cfg = PathConfig { spp, ..base.clone() };
        let start = Instant::now();
        let r = render_path(accel, camera, &cfg, env)?;
        renders.push((spp, start.elapsed().as_secs_f64(), r.image));
    }
    let reference = &renders
        .iter()
        .find(|(spp, _, _)| *spp == max_spp)
        .expect("max is in list")
        .2;
    Ok(renders
        .iter()
        .map(|(spp, seconds, img)| {
            let sum: Real = img
                .pixels
                .iter()
                .zip(&reference.pixels)
                .map(|(a, b)| {
                    let d = *a - *b;
                    d.dot(d)
                })
                .sum();
            BenchRow {
                spp: *spp,
                seconds: *seconds,
                variance: sum / (3 * img.pixels.len()).max(1) as Real,
            }
        })
        .collect())
}

pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("spp,seconds,variance\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{:e}", r.spp, r.seconds, r.variance);
    }
    s
}

pub fn write_bench_csv(path: impl AsRef<Path>, rows: &[BenchRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bench_to_csv(rows)).map_err(|e| Error::io(path, e))
}
