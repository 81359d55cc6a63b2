use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassIou {
    pub iou: f64,
    pub intersection: u64,
    pub union: u64,
    /// False for classes that only occur in the prediction; these do not
    /// enter the mean.
    pub in_gt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegMetrics {
    pub classes: BTreeMap<u32, ClassIou>,
    pub mean_iou: f64,
    pub pixels: u64,
}

/// Mean IoU over the classes present in the ground truth. Pixels whose
/// ground-truth label is in `ignore` are dropped.
pub fn mean_iou(pred: &[u32], gt: &[u32], ignore: &BTreeSet<u32>) -> Result<SegMetrics> {
    if pred.len() != gt.len() {
        return Err(Error::ResolutionMismatch(format!("pred {} vs gt {} pixels", pred.len(), gt.len())));
    }
    // (pred count, gt count, intersection)
    let mut counts: BTreeMap<u32, (u64, u64, u64)> = BTreeMap::new();
    let mut pixels = 0u64;
    for (&p, &g) in pred.iter().zip(gt) {
        if ignore.contains(&g) {
            continue;
        }
        pixels += 1;
        counts.entry(p).or_default().0 += 1;
        let e = counts.entry(g).or_default();
        e.1 += 1;
        if p == g {
            e.2 += 1;
        }
    }
    if pixels == 0 {
        return Err(Error::Empty("no non-ignored pixels".into()));
    }
    let classes: BTreeMap<u32, ClassIou> = counts
        .into_iter()
        .map(|(c, (np, ng, i))| {
            let union = np + ng - i;
            (
                c,
                ClassIou {
                    iou: i as f64 / union as f64,
                    intersection: i,
                    union,
                    in_gt: ng > 0,
                },
            )
        })
        .collect();
    let present: Vec<f64> = classes.values().filter(|c| c.in_gt).map(|c| c.iou).collect();
    let mean_iou = present.iter().sum::<f64>() / present.len() as f64;
    Ok(SegMetrics {
        classes,
        mean_iou,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let none = BTreeSet::new();
        let gt = [1, 1, 2, 2];
        let m = mean_iou(&gt, &gt, &none).unwrap();
        assert_eq!(m.mean_iou, 1.0);
        let m = mean_iou(&[1; 4], &gt, &none).unwrap();
        assert_eq!(m.classes[&1].iou, 0.5);
        assert_eq!(m.classes[&2].iou, 0.0);
        assert_eq!(m.mean_iou, 0.25);
    }

    #[test]
    fn pred_only_class_is_excluded() {
        let m = mean_iou(&[1, 3], &[1, 1], &BTreeSet::new()).unwrap();
        assert!(!m.classes[&3].in_gt);
        assert_eq!(m.mean_iou, 0.5);
    }

    #[test]
    fn ignore_all_is_error() {
        let ig = BTreeSet::from([0]);
        assert!(matches!(mean_iou(&[1, 2], &[0, 0], &ig), Err(Error::Empty(_))));
        assert_eq!(mean_iou(&[5, 2], &[0, 2], &ig).unwrap().mean_iou, 1.0);
    }
}
