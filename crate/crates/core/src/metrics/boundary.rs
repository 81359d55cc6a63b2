use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::Float;

/// Match radius as a fraction of the image diagonal.
pub const DEFAULT_TOLERANCE: f64 = 0.0075;

/// Thresholds `k / 100` for `k = 1..=99`; a pixel is predicted when its
/// probability is at least the threshold.
pub const THRESHOLDS: usize = 99;

fn threshold(k: usize) -> f64 {
    (k + 1) as f64 / 100.0
}

/// One prediction / ground-truth pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryImage<T> {
    pub width: u32,
    pub height: u32,
    /// Boundary probabilities in `[0, 1]`.
    pub pred: Vec<T>,
    pub gt: Vec<bool>,
}

impl<T: Float> BoundaryImage<T> {
    fn check(&self) -> Result<()> {
        let n = self.width as usize * self.height as usize;
        if self.pred.len() != n || self.gt.len() != n {
            return Err(Error::ResolutionMismatch(format!(
                "{}x{} image with {} predictions and {} gt pixels",
                self.width,
                self.height,
                self.pred.len(),
                self.gt.len()
            )));
        }
        if let Some(v) = self.pred.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::InvalidArgument(format!("boundary probability {v} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryMetrics {
    pub ods: f64,
    pub ods_threshold: f64,
    pub ois: f64,
    pub ap: f64,
    pub r50: f64,
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

/// Greedy one-to-one matching of predicted to ground-truth pixels: every
/// pair within `radius` pixels is visited by increasing distance (ties in
/// scan order of the prediction, then the ground truth) and accepted when
/// both ends are still free. Returns the number of matched pairs.
pub fn match_boundaries(width: u32, height: u32, pred: &[bool], gt: &[bool], radius: f64) -> usize {
    let (w, h) = (width as i64, height as i64);
    let r2 = radius * radius;
    let r = radius.floor().max(0.0) as i64;
    let mut pairs: Vec<(i64, usize, usize)> = Vec::new();
    for (i, _) in pred.iter().enumerate().filter(|(_, &p)| p) {
        let (x, y) = (i as i64 % w, i as i64 / w);
        for dy in -r..=r {
            let yy = y + dy;
            if yy < 0 || yy >= h {
                continue;
            }
            for dx in -r..=r {
                let xx = x + dx;
                let d2 = dx * dx + dy * dy;
                if xx < 0 || xx >= w || d2 as f64 > r2 {
                    continue;
                }
                let j = (yy * w + xx) as usize;
                if gt[j] {
                    pairs.push((d2, i, j));
                }
            }
        }
    }
    pairs.sort_unstable();
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            matched += 1;
        }
    }
    matched
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// (matched, predicted, gt) per threshold for one image.
fn image_counts<T: Float>(img: &BoundaryImage<T>, tol: f64) -> Vec<(usize, usize, usize)> {
    let diag = ((img.width as f64).powi(2) + (img.height as f64).powi(2)).sqrt();
    let n_gt = img.gt.iter().filter(|&&g| g).count();
    (0..THRESHOLDS)
        .map(|k| {
            let t = T::lit(threshold(k));
            let mask: Vec<bool> = img.pred.iter().map(|&p| p >= t).collect();
            let n_pred = mask.iter().filter(|&&m| m).count();
            let m = match_boundaries(img.width, img.height, &mask, &img.gt, tol * diag);
            (m, n_pred, n_gt)
        })
        .collect()
}

/// Area under the precision/recall curve after making precision
/// non-increasing in recall, and the interpolated recall at precision 0.5.
fn ap_and_r50(precision: &[f64], recall: &[f64]) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = recall.iter().copied().zip(precision.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    for i in (0..pts.len().saturating_sub(1)).rev() {
        pts[i].1 = pts[i].1.max(pts[i + 1].1);
    }
    // Thresholds that tie on recall collapse to their best precision.
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for &(r, p) in &pts {
        ap += (r - prev_r) * p;
        prev_r = r;
    }
    let mut r50 = 0.0;
    for (i, &(r, p)) in pts.iter().enumerate() {
        if p >= 0.5 {
            r50 = r;
            if let Some(&(r1, p1)) = pts.get(i + 1) {
                if p1 < 0.5 && p > p1 {
                    r50 = r + (r1 - r) * (p - 0.5) / (p - p1);
                }
            }
        }
    }
    (ap, r50)
}

/// Dataset-level boundary metrics with match radius `tol` times each image's diagonal.
pub fn boundary_metrics<T: Float>(images: &[BoundaryImage<T>], tol: f64) -> Result<BoundaryMetrics> {
    if images.is_empty() {
        return Err(Error::Empty("no boundary images".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be non-negative")));
    }
    for img in images {
        img.check()?;
    }
    let per_image: Vec<Vec<(usize, usize, usize)>> = images.par_iter().map(|i| image_counts(i, tol)).collect();

    let mut precision = Vec::with_capacity(THRESHOLDS);
    let mut recall = Vec::with_capacity(THRESHOLDS);
    for k in 0..THRESHOLDS {
        let (m, np, ng) = per_image
            .iter()
            .fold((0, 0, 0), |a, c| (a.0 + c[k].0, a.1 + c[k].1, a.2 + c[k].2));
        precision.push(ratio(m, np));
        recall.push(ratio(m, ng));
    }
    let (mut ods, mut ods_k) = (f64::NEG_INFINITY, 0);
    for k in 0..THRESHOLDS {
        let f = f_measure(precision[k], recall[k]);
        if f > ods {
            ods = f;
            ods_k = k;
        }
    }
    let ois = per_image
        .iter()
        .map(|c| {
            c.iter()
                .map(|&(m, np, ng)| f_measure(ratio(m, np), ratio(m, ng)))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / images.len() as f64;
    let (ap, r50) = ap_and_r50(&precision, &recall);
    Ok(BoundaryMetrics {
        ods,
        ods_threshold: threshold(ods_k),
        ois,
        ap,
        r50,
        thresholds: (0..THRESHOLDS).map(threshold).collect(),
        precision,
        recall,
    })
}
