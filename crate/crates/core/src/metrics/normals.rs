use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vector3;
use crate::Float;

pub const NORMAL_THRESHOLDS_DEG: [f64; 3] = [11.25, 22.5, 30.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalMetrics<T> {
    pub mean: T,
    pub median: T,
    /// Percent of valid pixels with error strictly below 11.25°, 22.5° and 30°.
    pub within: [T; 3],
    pub pixels: usize,
}

/// Median with the central pair averaged for even counts. Sorts in place.
pub fn median<T: Float>(v: &mut [T]) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    })
}

/// Per-pixel error is `acos(clamp(n̂_p · n̂_g, -1, 1))` in degrees over the
/// pixels where `valid` is set. Both normals are renormalized first; a zero
/// normal on a valid pixel is an error.
pub fn normal_metrics<T: Float>(
    pred: &[Vector3<T>],
    gt: &[Vector3<T>],
    valid: &[bool],
) -> Result<NormalMetrics<T>> {
    if pred.len() != gt.len() || pred.len() != valid.len() {
        return Err(Error::ResolutionMismatch(format!(
            "pred {} / gt {} / mask {} pixels",
            pred.len(),
            gt.len(),
            valid.len()
        )));
    }
    let mut errors = pred
        .par_iter()
        .zip(gt)
        .zip(valid)
        .filter(|(_, &v)| v)
        .map(|((p, g), _)| {
            let (lp, lg) = (p.length(), g.length());
            if !(lp > T::zero() && lg > T::zero()) {
                return Err(Error::InvalidArgument("zero or non-finite normal on a valid pixel".into()));
            }
            let c = (p.dot(*g) / (lp * lg)).max(-T::one()).min(T::one());
            Ok(c.acos().to_degrees())
        })
        .collect::<Result<Vec<T>>>()?;
    if errors.is_empty() {
        return Err(Error::Empty("valid mask selects no pixels".into()));
    }
    let n = errors.len();
    let mean = errors.iter().fold(T::zero(), |a, &e| a + e) / T::from_usize(n).expect("count");
    let within = NORMAL_THRESHOLDS_DEG.map(|t| {
        let t = T::lit(t);
        let k = errors.iter().filter(|&&e| e < t).count();
        T::lit(100.0) * T::from_usize(k).expect("count") / T::from_usize(n).expect("count")
    });
    let median = median(&mut errors).expect("nonempty");
    Ok(NormalMetrics {
        mean,
        median,
        within,
        pixels: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = Vector3<f64>;

    #[test]
    fn identity_and_orthogonal() {
        let n = vec![V::new(0.0, 0.0, 1.0), V::new(0.6, 0.8, 0.0)];
        let m = normal_metrics(&n, &n, &[true, true]).unwrap();
        assert_eq!((m.mean, m.median, m.within), (0.0, 0.0, [100.0; 3]));
        let a = vec![V::new(0.0, 0.0, 1.0); 4];
        let b = vec![V::new(0.0, 1.0, 0.0); 4];
        let m = normal_metrics(&a, &b, &[true; 4]).unwrap();
        assert!((m.mean - 90.0).abs() < 1e-12 && (m.median - 90.0).abs() < 1e-12);
        assert_eq!(m.within, [0.0; 3]);
    }

    #[test]
    fn half_zero_half_twenty() {
        let r = 20f64.to_radians();
        let g = vec![V::new(0.0, 0.0, 1.0); 4];
        let mut p = g.clone();
        p[2] = V::new(r.sin(), 0.0, r.cos());
        p[3] = p[2];
        let m = normal_metrics(&p, &g, &[true; 4]).unwrap();
        assert!((m.mean - 10.0).abs() < 1e-9 && (m.median - 10.0).abs() < 1e-9);
        assert_eq!(m.within, [50.0, 100.0, 100.0]);
    }

    #[test]
    fn empty_mask_is_error() {
        let g = vec![V::new(0.0, 0.0, 1.0); 2];
        assert!(matches!(normal_metrics(&g, &g, &[false; 2]), Err(Error::Empty(_))));
        assert!(normal_metrics(&g, &g[..1], &[true]).is_err());
    }

    #[test]
    fn median_convention() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(&mut [3.0f32, 1.0, 2.0]), Some(2.0));
        assert_eq!(median::<f64>(&mut []), None);
    }
}
