//! Directory-level evaluation: predictions and ground truth live in two
//! directories with matching `*.png` file names.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::DynamicImage;

use super::{boundary_metrics, mean_iou, normal_metrics, BoundaryImage, BoundaryMetrics, NormalMetrics, SegMetrics};
use crate::error::{Error, Result};
use crate::groundtruth::decode_normal;
use crate::Vec3;

/// `(file name, pred path, gt path)` for every PNG present in both directories.
pub fn paired_files(pred_dir: &Path, gt_dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(gt_dir).map_err(|e| Error::io(gt_dir, e))? {
        let entry = entry.map_err(|e| Error::io(gt_dir, e))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if !name.ends_with(".png") {
            continue;
        }
        let pred = pred_dir.join(&name);
        if pred.is_file() {
            out.push((name, pred, entry.path()));
        } else {
            log::warn!("no prediction for {name}");
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(format!(
            "no paired images between {} and {}",
            pred_dir.display(),
            gt_dir.display()
        )));
    }
    out.sort();
    Ok(out)
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::image(path, e))
}

fn same_size(a: &DynamicImage, b: &DynamicImage, what: &str) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::ResolutionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Integer labels from an 8- or 16-bit gray image.
pub fn load_labels(path: &Path) -> Result<(u32, u32, Vec<u32>)> {
    let img = open(path)?;
    let (w, h) = (img.width(), img.height());
    let v = match img {
        DynamicImage::ImageLuma8(i) => i.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(i) => i.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(Error::image(path, format!("expected gray labels, found {:?}", other.color())));
        }
    };
    Ok((w, h, v))
}

/// Probabilities in `[0, 1]` from an 8- or 16-bit gray image.
pub fn load_probabilities(path: &Path) -> Result<(u32, u32, Vec<f64>)> {
    let img = open(path)?;
    let (w, h) = (img.width(), img.height());
    let v = match img {
        DynamicImage::ImageLuma16(i) => i.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        other => other.into_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
    };
    Ok((w, h, v))
}

#[derive(Debug, Clone)]
pub struct NormalReport {
    pub per_image: Vec<(String, NormalMetrics<f64>)>,
    pub overall: NormalMetrics<f64>,
}

/// Pixels are valid where both images hold a non-black normal; the overall
/// row pools every valid pixel of the dataset.
pub fn evaluate_normals(pred_dir: &Path, gt_dir: &Path) -> Result<NormalReport> {
    let (mut all_p, mut all_g) = (Vec::new(), Vec::new());
    let mut per_image = Vec::new();
    for (name, pp, gp) in paired_files(pred_dir, gt_dir)? {
        let (pi, gi) = (open(&pp)?, open(&gp)?);
        same_size(&pi, &gi, &name)?;
        let dec = |i: DynamicImage| -> Vec<Vec3> { i.into_rgb8().pixels().map(|p| decode_normal(p.0)).collect() };
        let (p, g) = (dec(pi), dec(gi));
        let valid: Vec<bool> = p.iter().zip(&g).map(|(a, b)| *a != Vec3::zero() && *b != Vec3::zero()).collect();
        if valid.iter().any(|&v| v) {
            per_image.push((name, normal_metrics(&p, &g, &valid)?));
        }
        for ((a, b), v) in p.into_iter().zip(g).zip(valid) {
            if v {
                all_p.push(a);
                all_g.push(b);
            }
        }
    }
    let mask = vec![true; all_p.len()];
    let overall = normal_metrics(&all_p, &all_g, &mask)?;
    Ok(NormalReport { per_image, overall })
}

pub fn normals_csv(r: &NormalReport) -> String {
    let mut s = String::from("image,pixels,mean_deg,median_deg,pct_11.25,pct_22.5,pct_30\n");
    let rows = r.per_image.iter().map(|(n, m)| (n.as_str(), m)).chain([("ALL", &r.overall)]);
    for (name, m) in rows {
        let _ = writeln!(
            s,
            "{name},{},{:.6},{:.6},{:.4},{:.4},{:.4}",
            m.pixels, m.mean, m.median, m.within[0], m.within[1], m.within[2]
        );
    }
    s
}

/// Pools all images into one confusion count.
pub fn evaluate_seg(pred_dir: &Path, gt_dir: &Path, ignore: &BTreeSet<u32>) -> Result<SegMetrics> {
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for (name, pp, gp) in paired_files(pred_dir, gt_dir)? {
        let (pw, ph, pv) = load_labels(&pp)?;
        let (gw, gh, gv) = load_labels(&gp)?;
        if (pw, ph) != (gw, gh) {
            return Err(Error::ResolutionMismatch(format!("{name}: {pw}x{ph} vs {gw}x{gh}")));
        }
        p.extend(pv);
        g.extend(gv);
    }
    mean_iou(&p, &g, ignore)
}

pub fn seg_csv(m: &SegMetrics) -> String {
    let mut s = String::from("class,iou,intersection,union,in_gt\n");
    for (c, v) in &m.classes {
        let _ = writeln!(s, "{c},{:.6},{},{},{}", v.iou, v.intersection, v.union, v.in_gt);
    }
    let _ = writeln!(s, "mean,{:.6},,,", m.mean_iou);
    s
}

/// Ground-truth boundaries are the non-zero pixels of the gt image.
pub fn evaluate_boundaries(pred_dir: &Path, gt_dir: &Path, tol: f64) -> Result<BoundaryMetrics> {
    let mut images = Vec::new();
    for (name, pp, gp) in paired_files(pred_dir, gt_dir)? {
        let (w, h, pred) = load_probabilities(&pp)?;
        let gi = open(&gp)?;
        if (gi.width(), gi.height()) != (w, h) {
            return Err(Error::ResolutionMismatch(format!(
                "{name}: {w}x{h} vs {}x{}",
                gi.width(),
                gi.height()
            )));
        }
        let gt = gi.into_luma16().into_raw().into_iter().map(|v| v > 0).collect();
        images.push(BoundaryImage {
            width: w,
            height: h,
            pred,
            gt,
        });
    }
    boundary_metrics(&images, tol)
}

pub fn boundary_csv(m: &BoundaryMetrics) -> String {
    let mut s = String::from("threshold,precision,recall\n");
    for k in 0..m.thresholds.len() {
        let _ = writeln!(s, "{:.2},{:.6},{:.6}", m.thresholds[k], m.precision[k], m.recall[k]);
    }
    s
}
