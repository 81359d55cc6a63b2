//! Image selection by histogram intersection against a reference corpus,
//! and per-category pixel statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{DynamicImage, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::groundtruth::{FrameBundle, Gray16Image};
use crate::Real;

pub const COLOR_BINS_PER_CHANNEL: usize = 8;
pub const DEPTH_BINS: usize = 64;
pub const DEPTH_RANGE_M: Real = 10.0;
pub const DEFAULT_TAU: Real = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    #[serde(rename = "color-512")]
    Color512,
    #[serde(rename = "depth-64")]
    Depth64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub layout: Layout,
    pub bins: Vec<Real>,
    /// Set when the input had no usable pixels and the histogram is uniform.
    pub flagged: bool,
}

impl Histogram {
    fn normalized(layout: Layout, counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            let n = counts.len();
            return Self {
                layout,
                bins: vec![1.0 / n as Real; n],
                flagged: true,
            };
        }
        Self {
            layout,
            bins: counts.iter().map(|&c| c as Real / total as Real).collect(),
            flagged: false,
        }
    }
}

/// Joint 8×8×8 RGB histogram, each channel binned by `value / 32`.
pub fn color_histogram(image: &RgbImage) -> Result<Histogram> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::Empty("color image has no pixels".into()));
    }
    let mut counts = vec![0u64; 512];
    for p in image.pixels() {
        let [r, g, b] = p.0.map(|c| (c / 32) as usize);
        counts[r * 64 + g * 8 + b] += 1;
    }
    Ok(Histogram::normalized(Layout::Color512, counts))
}

/// 64 uniform bins over [0, 10] m of a millimeter depth map; 0 is invalid
/// and skipped, depths past 10 m land in the last bin.
pub fn depth_histogram(depth: &Gray16Image) -> Histogram {
    let mut counts = vec![0u64; DEPTH_BINS];
    for &mm in depth.as_raw() {
        if mm == 0 {
            continue;
        }
        let m = mm as Real / 1000.0;
        let bin = ((m / DEPTH_RANGE_M) * DEPTH_BINS as Real).floor() as usize;
        counts[bin.min(DEPTH_BINS - 1)] += 1;
    }
    Histogram::normalized(Layout::Depth64, counts)
}

/// `Σ min(aᵢ, bᵢ)`.
pub fn intersection(a: &Histogram, b: &Histogram) -> Result<Real> {
    if a.layout != b.layout || a.bins.len() != b.bins.len() {
        return Err(Error::LayoutMismatch(format!("{:?}", a.layout), format!("{:?}", b.layout)));
    }
    Ok(a.bins.iter().zip(&b.bins).map(|(x, y)| x.min(*y)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub name: String,
    pub color: Histogram,
    pub depth: Histogram,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceCorpus {
    pub entries: Vec<ReferenceEntry>,
    /// SHA-256 over the corpus file names and bytes.
    pub content_hash: String,
}

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    corpus: ReferenceCorpus,
}

fn read_depth_png(path: &Path) -> Result<Gray16Image> {
    match image::open(path).map_err(|e| Error::image(path, e))? {
        DynamicImage::ImageLuma16(i) => Ok(i),
        other => Err(Error::image(path, format!("expected 16-bit gray depth, found {:?}", other.color()))),
    }
}

impl ReferenceCorpus {
    pub fn from_histograms(entries: Vec<ReferenceEntry>) -> Self {
        Self {
            entries,
            content_hash: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lists `(stem, color path, depth path)` for every `<stem>.color.png`
    /// that has a `<stem>.depth.png` partner, sorted by stem.
    pub fn scan(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf, PathBuf)>> {
        let dir = dir.as_ref();
        let mut out = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().to_string();
            if let Some(stem) = name.strip_suffix(".color.png") {
                let depth = dir.join(format!("{stem}.depth.png"));
                if depth.is_file() {
                    out.push((stem.to_string(), entry.path(), depth));
                } else {
                    log::warn!("reference {stem} has no depth partner; skipped");
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Loads a corpus directory, reusing `<cache_dir>/refs-<hash>.json` when present.
    pub fn load(dir: impl AsRef<Path>, cache_dir: Option<&Path>) -> Result<Self> {
        let files = Self::scan(&dir)?;
        let mut hasher = Sha256::new();
        let mut blobs = Vec::with_capacity(files.len());
        for (stem, c, d) in &files {
            let cb = std::fs::read(c).map_err(|e| Error::io(c, e))?;
            let db = std::fs::read(d).map_err(|e| Error::io(d, e))?;
            for part in [stem.as_bytes(), &cb, &db] {
                hasher.update((part.len() as u64).to_le_bytes());
                hasher.update(part);
            }
            blobs.push((stem.clone(), c.clone(), d.clone()));
        }
        let hash = hex::encode(hasher.finalize());
        let cache_path = cache_dir.map(|d| d.join(format!("refs-{hash}.json")));
        if let Some(p) = &cache_path {
            if let Ok(text) = std::fs::read_to_string(p) {
                match serde_json::from_str::<CacheFile>(&text) {
                    Ok(c) if c.version == CACHE_VERSION && c.corpus.content_hash == hash => return Ok(c.corpus),
                    _ => log::warn!("ignoring stale reference cache {}", p.display()),
                }
            }
        }
        let entries = blobs
            .par_iter()
            .map(|(stem, c, d)| -> Result<ReferenceEntry> {
                let color = image::open(c).map_err(|e| Error::image(c, e))?.into_rgb8();
                Ok(ReferenceEntry {
                    name: stem.clone(),
                    color: color_histogram(&color)?,
                    depth: depth_histogram(&read_depth_png(d)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let corpus = Self {
            entries,
            content_hash: hash,
        };
        if let Some(p) = &cache_path {
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let text = serde_json::to_string(&CacheFile {
                version: CACHE_VERSION,
                corpus: corpus.clone(),
            })
            .map_err(|e| Error::parse("reference cache", e))?;
            std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
        }
        Ok(corpus)
    }
}

/// Histograms of one candidate view.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateHistograms {
    pub color: Histogram,
    pub depth: Histogram,
}

impl CandidateHistograms {
    pub fn of_bundle(b: &FrameBundle) -> Result<Self> {
        Ok(Self {
            color: color_histogram(&b.color)?,
            depth: depth_histogram(&b.depth),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub color: Real,
    pub depth: Real,
    /// Index of the first reference reaching the color maximum.
    pub best_color_ref: usize,
    pub best_depth_ref: usize,
    /// Candidate had no valid depth pixels.
    pub no_depth: bool,
    pub kept: bool,
}

/// Scores one candidate against every reference.
pub fn score(c: &CandidateHistograms, refs: &ReferenceCorpus, tau: Real) -> Result<SelectionScore> {
    if refs.is_empty() {
        return Err(Error::Empty("reference corpus".into()));
    }
    let (mut color, mut best_color_ref) = (Real::NEG_INFINITY, 0);
    let (mut depth, mut best_depth_ref) = (Real::NEG_INFINITY, 0);
    for (i, r) in refs.entries.iter().enumerate() {
        let sc = intersection(&c.color, &r.color)?;
        if sc > color {
            color = sc;
            best_color_ref = i;
        }
        let sd = intersection(&c.depth, &r.depth)?;
        if sd > depth {
            depth = sd;
            best_depth_ref = i;
        }
    }
    let no_depth = c.depth.flagged;
    Ok(SelectionScore {
        color,
        depth,
        best_color_ref,
        best_depth_ref,
        no_depth,
        kept: !no_depth && color > tau && depth > tau,
    })
}

/// Keeps a candidate iff both its best color and best depth intersections
/// exceed `tau` (strictly). Candidates without valid depth are never kept.
pub fn select(candidates: &[CandidateHistograms], refs: &ReferenceCorpus, tau: Real) -> Result<Vec<SelectionScore>> {
    if refs.is_empty() {
        return Err(Error::Empty("reference corpus".into()));
    }
    candidates.par_iter().map(|c| score(c, refs, tau)).collect()
}

/// [`select`] over bundles.
pub fn select_bundles(candidates: &[FrameBundle], refs: &ReferenceCorpus, tau: Real) -> Result<Vec<SelectionScore>> {
    let hists = candidates
        .par_iter()
        .map(CandidateHistograms::of_bundle)
        .collect::<Result<Vec<_>>>()?;
    select(&hists, refs, tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub categories: Vec<String>,
    /// Pixel count per category id; index 0 is background and is not counted.
    pub counts: Vec<u64>,
}

impl ClassStats {
    pub fn total(&self) -> u64 {
        self.counts.iter().skip(1).sum()
    }

    pub fn fraction(&self, id: usize) -> Real {
        let t = self.total();
        if t == 0 || id == 0 {
            0.0
        } else {
            self.counts[id] as Real / t as Real
        }
    }

    pub fn by_name(&self) -> BTreeMap<&str, u64> {
        self.categories
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), self.counts[i + 1]))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("category_id,category,pixels,fraction\n");
        for (i, name) in self.categories.iter().enumerate() {
            let id = i + 1;
            let _ = writeln!(s, "{id},{name},{},{:.9}", self.counts[id], self.fraction(id));
        }
        s
    }
}

/// Counts semantic pixels per category over bundles sharing one category table.
pub fn class_stats(bundles: &[FrameBundle]) -> Result<ClassStats> {
    let first = bundles.first().ok_or_else(|| Error::Empty("bundle list".into()))?;
    let categories = first.categories.clone();
    let mut counts = vec![0u64; categories.len() + 1];
    for b in bundles {
        if b.categories != categories {
            return Err(Error::CategoryMismatch);
        }
        for &s in b.semantic.as_raw() {
            let s = s as usize;
            if s >= counts.len() {
                return Err(Error::InvalidArgument(format!("semantic id {s} outside category table")));
            }
            counts[s] += 1;
        }
    }
    counts[0] = 0;
    Ok(ClassStats { categories, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn color_examples() {
        let black = RgbImage::new(4, 4);
        let h = color_histogram(&black).unwrap();
        assert_eq!(h.bins[0], 1.0);
        let mut half = RgbImage::new(4, 2);
        for x in 0..4 {
            half.put_pixel(x, 1, Rgb([255, 255, 255]));
        }
        let h = color_histogram(&half).unwrap();
        assert_eq!(h.bins[0], 0.5);
        assert_eq!(h.bins[511], 0.5);
        assert!(matches!(color_histogram(&RgbImage::new(0, 3)), Err(Error::Empty(_))));
    }

    #[test]
    fn depth_examples() {
        let two = Gray16Image::from_pixel(3, 3, image::Luma([2000]));
        let h = depth_histogram(&two);
        assert_eq!(h.bins[12], 1.0);
        let none = Gray16Image::new(3, 3);
        let h = depth_histogram(&none);
        assert!(h.flagged && h.bins.iter().all(|&b| b == 1.0 / 64.0));
        let far = Gray16Image::from_pixel(2, 2, image::Luma([12000]));
        assert_eq!(depth_histogram(&far).bins[63], 1.0);
    }

    #[test]
    fn intersection_examples() {
        let h = |v: Vec<Real>| Histogram {
            layout: Layout::Depth64,
            bins: v,
            flagged: false,
        };
        assert_eq!(intersection(&h(vec![0.5, 0.5]), &h(vec![0.25, 0.75])).unwrap(), 0.75);
        assert_eq!(intersection(&h(vec![1.0, 0.0]), &h(vec![0.0, 1.0])).unwrap(), 0.0);
        let c = Histogram {
            layout: Layout::Color512,
            ..h(vec![1.0, 0.0])
        };
        assert!(matches!(intersection(&c, &h(vec![1.0, 0.0])), Err(Error::LayoutMismatch(..))));
    }

    #[test]
    fn exactly_tau_is_rejected() {
        let h = |a: Real, layout| Histogram {
            layout,
            bins: vec![a, 1.0 - a],
            flagged: false,
        };
        let refs = ReferenceCorpus::from_histograms(vec![ReferenceEntry {
            name: "r".into(),
            color: h(1.0, Layout::Color512),
            depth: h(1.0, Layout::Depth64),
        }]);
        let c = CandidateHistograms {
            color: h(0.70, Layout::Color512),
            depth: h(0.70, Layout::Depth64),
        };
        let s = score(&c, &refs, 0.70).unwrap();
        assert_eq!((s.color, s.depth), (0.70, 0.70));
        assert!(!s.kept);
        assert!(select(&[c], &ReferenceCorpus::default(), 0.7).is_err());
    }
}
