//! Per-view ground-truth channels and the on-disk frame bundle.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, RgbImage};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::raster::VisBuffers;
use crate::scene::MAX_ID;
use crate::{Real, Vec3};

pub type Gray16Image = ImageBuffer<Luma<u16>, Vec<u16>>;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Renderer that produced a bundle's color channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Backend {
    #[serde(rename = "raster-dl")]
    RasterDl,
    #[serde(rename = "raster-il")]
    RasterIl,
    #[serde(rename = "path-ol")]
    PathOl,
    #[serde(rename = "path-ilol")]
    PathIlol,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::RasterDl, Backend::RasterIl, Backend::PathOl, Backend::PathIlol];

    pub fn tag(self) -> &'static str {
        match self {
            Backend::RasterDl => "raster-dl",
            Backend::RasterIl => "raster-il",
            Backend::PathOl => "path-ol",
            Backend::PathIlol => "path-ilol",
        }
    }

    pub fn is_path(self) -> bool {
        matches!(self, Backend::PathOl | Backend::PathIlol)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.tag() == s)
            .ok_or_else(|| Error::UnknownBackend(s.to_string()))
    }
}

/// `c = floor(0.5·(n + 1)·255 + 0.5)` per component; the zero vector encodes to black.
pub fn encode_normal(n: Vec3) -> Result<[u8; 3]> {
    if n == Vec3::zero() {
        return Ok([0; 3]);
    }
    let len = n.length();
    if !((len - 1.0).abs() <= 1e-4) {
        return Err(Error::NonUnitNormal(len));
    }
    let c = |v: Real| ((0.5 * (v + 1.0) * 255.0 + 0.5).floor()).clamp(0.0, 255.0) as u8;
    Ok([c(n.x), c(n.y), c(n.z)])
}

/// Inverse of [`encode_normal`], renormalized; black decodes to zero.
pub fn decode_normal(c: [u8; 3]) -> Vec3 {
    if c == [0; 3] {
        return Vec3::zero();
    }
    let d = |v: u8| v as Real / 255.0 * 2.0 - 1.0;
    Vec3::new(d(c[0]), d(c[1]), d(c[2])).normalized()
}

/// Marks a pixel when its right or lower neighbour holds a different id.
pub fn extract_boundaries(width: u32, height: u32, ids: &[u32]) -> Vec<bool> {
    let (w, h) = (width as usize, height as usize);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let right = x + 1 < w && ids[i + 1] != ids[i];
            let down = y + 1 < h && ids[i + w] != ids[i];
            out[i] = right || down;
        }
    }
    out
}

/// View-axis depth in millimeters; 0 is background, hits clamp to `1..=65535`.
pub fn depth_to_mm(depth: Real) -> u16 {
    if !depth.is_finite() {
        return 0;
    }
    (depth * 1000.0).round().clamp(1.0, 65535.0) as u16
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub color: RgbImage,
    pub depth: Gray16Image,
    pub normal: RgbImage,
    pub semantic: Gray16Image,
    pub instance: Gray16Image,
    pub boundary: GrayImage,
    pub camera: Camera,
    pub camera_id: u32,
    pub backend: Backend,
    pub seed: u64,
    /// Category names by id (index + 1).
    pub categories: Vec<String>,
}

impl FrameBundle {
    /// Assembles ground truth from visibility buffers and a color image.
    pub fn from_vis(
        vis: &VisBuffers,
        color: RgbImage,
        camera: &Camera,
        camera_id: u32,
        backend: Backend,
        seed: u64,
        categories: &[String],
    ) -> Result<Self> {
        if color.dimensions() != (vis.width, vis.height) {
            return Err(Error::ResolutionMismatch(format!(
                "color is {:?}, buffers are {}x{}",
                color.dimensions(),
                vis.width,
                vis.height
            )));
        }
        let (w, h) = (vis.width, vis.height);
        let to16 = |v: u32| -> Result<u16> {
            if v > MAX_ID {
                return Err(Error::InvalidScene(format!("id {v} exceeds 16-bit range")));
            }
            Ok(v as u16)
        };
        let instance: Vec<u16> = vis.instance.iter().map(|&v| to16(v)).collect::<Result<_>>()?;
        let semantic: Vec<u16> = vis.category.iter().map(|&v| to16(v)).collect::<Result<_>>()?;
        let depth: Vec<u16> = vis
            .depth
            .iter()
            .zip(&vis.instance)
            .map(|(&d, &id)| if id == 0 { 0 } else { depth_to_mm(d) })
            .collect();
        let mut normal = Vec::with_capacity(vis.pixel_count() * 3);
        for (n, &id) in vis.normal.iter().zip(&vis.instance) {
            normal.extend_from_slice(&if id == 0 { [0; 3] } else { encode_normal(*n)? });
        }
        let boundary = extract_boundaries(w, h, &vis.instance)
            .into_iter()
            .map(|b| if b { 255 } else { 0 })
            .collect();
        Ok(Self {
            color,
            depth: Gray16Image::from_raw(w, h, depth).expect("sized"),
            normal: RgbImage::from_raw(w, h, normal).expect("sized"),
            semantic: Gray16Image::from_raw(w, h, semantic).expect("sized"),
            instance: Gray16Image::from_raw(w, h, instance).expect("sized"),
            boundary: GrayImage::from_raw(w, h, boundary).expect("sized"),
            camera: *camera,
            camera_id,
            backend,
            seed,
            categories: categories.to_vec(),
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.color.dimensions()
    }

    pub fn instance_ids(&self) -> Vec<u32> {
        self.instance.as_raw().iter().map(|&v| v as u32).collect()
    }

    /// Checks channel consistency; returns a description of the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        let dims = self.dimensions();
        for (name, d) in [
            ("depth", self.depth.dimensions()),
            ("normal", self.normal.dimensions()),
            ("semantic", self.semantic.dimensions()),
            ("instance", self.instance.dimensions()),
            ("boundary", self.boundary.dimensions()),
        ] {
            if d != dims {
                return Err(format!("{name} is {d:?}, color is {dims:?}"));
            }
        }
        let (w, h) = dims;
        let ids = self.instance_ids();
        let want = extract_boundaries(w, h, &ids);
        for (i, (&b, &m)) in want.iter().zip(self.boundary.as_raw()).enumerate() {
            if m != if b { 255 } else { 0 } {
                return Err(format!("boundary differs from instance edges at pixel {i}"));
            }
        }
        for i in 0..ids.len() {
            let sem = self.semantic.as_raw()[i];
            let depth = self.depth.as_raw()[i];
            let n = &self.normal.as_raw()[i * 3..i * 3 + 3];
            if ids[i] == 0 {
                if sem != 0 || depth != 0 || n != [0, 0, 0] {
                    return Err(format!("background pixel {i} carries semantic/depth/normal data"));
                }
            } else {
                if sem == 0 || sem as usize > self.categories.len() {
                    return Err(format!("pixel {i}: semantic id {sem} not in category table"));
                }
                if depth == 0 {
                    return Err(format!("pixel {i}: foreground with zero depth"));
                }
                let len = decode_normal([n[0], n[1], n[2]]).length();
                if (len - 1.0).abs() > 1e-9 {
                    return Err(format!("pixel {i}: foreground normal decodes to length {len}"));
                }
            }
        }
        Ok(())
    }
}

const CHANNELS: [&str; 6] = ["color", "depth", "normal", "semantic", "instance", "boundary"];

fn meta_text(b: &FrameBundle) -> String {
    let mut s = format!(
        "format_version={BUNDLE_FORMAT_VERSION}\nbackend={}\nseed={}\ncamera={}\n",
        b.backend,
        b.seed,
        b.camera.to_record(b.camera_id)
    );
    for (i, c) in b.categories.iter().enumerate() {
        s.push_str(&format!("category={} {c}\n", i + 1));
    }
    s
}

/// Writes the bundle files into `dir`, creating it if needed.
pub fn write_bundle(bundle: &FrameBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if let Err(msg) = bundle.check() {
        return Err(Error::InvalidArgument(format!("inconsistent bundle: {msg}")));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let save = |name: &str, img: DynamicImage| -> Result<()> {
        let p = dir.join(format!("{name}.png"));
        img.save_with_format(&p, image::ImageFormat::Png).map_err(|e| Error::image(&p, e))
    };
    save("color", DynamicImage::ImageRgb8(bundle.color.clone()))?;
    save("depth", DynamicImage::ImageLuma16(bundle.depth.clone()))?;
    save("normal", DynamicImage::ImageRgb8(bundle.normal.clone()))?;
    save("semantic", DynamicImage::ImageLuma16(bundle.semantic.clone()))?;
    save("instance", DynamicImage::ImageLuma16(bundle.instance.clone()))?;
    save("boundary", DynamicImage::ImageLuma8(bundle.boundary.clone()))?;
    let meta = dir.join("meta.txt");
    std::fs::write(&meta, meta_text(bundle)).map_err(|e| Error::io(&meta, e))
}

fn load_png(dir: &Path, name: &str) -> Result<DynamicImage> {
    let p = dir.join(format!("{name}.png"));
    if !p.is_file() {
        return Err(Error::MissingChannel(name.to_string()));
    }
    image::open(&p).map_err(|e| Error::image(&p, e))
}

fn expect_rgb8(dir: &Path, name: &str) -> Result<RgbImage> {
    match load_png(dir, name)? {
        DynamicImage::ImageRgb8(i) => Ok(i),
        other => Err(Error::image(dir.join(name), format!("expected 8-bit RGB, found {:?}", other.color()))),
    }
}

fn expect_gray16(dir: &Path, name: &str) -> Result<Gray16Image> {
    match load_png(dir, name)? {
        DynamicImage::ImageLuma16(i) => Ok(i),
        other => Err(Error::image(dir.join(name), format!("expected 16-bit gray, found {:?}", other.color()))),
    }
}

pub fn read_bundle(dir: impl AsRef<Path>) -> Result<FrameBundle> {
    let dir = dir.as_ref();
    for c in CHANNELS {
        if !dir.join(format!("{c}.png")).is_file() {
            return Err(Error::MissingChannel(c.to_string()));
        }
    }
    let meta_path = dir.join("meta.txt");
    if !meta_path.is_file() {
        return Err(Error::MissingChannel("meta".into()));
    }
    let meta = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut backend = None;
    let mut seed = None;
    let mut camera = None;
    let mut version = None;
    let mut categories = Vec::new();
    for line in meta.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse("bundle meta", format!("bad line {line:?}")))?;
        match k {
            "format_version" => version = Some(v.parse::<u32>().map_err(|e| Error::parse("bundle meta", e))?),
            "backend" => backend = Some(v.parse::<Backend>()?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|e| Error::parse("bundle meta", e))?),
            "camera" => camera = Some(Camera::from_record(v)?),
            "category" => {
                let (id, name) = v
                    .split_once(' ')
                    .ok_or_else(|| Error::parse("bundle meta", format!("bad category line {line:?}")))?;
                let id: usize = id.parse().map_err(|e| Error::parse("bundle meta", e))?;
                if id != categories.len() + 1 {
                    return Err(Error::parse("bundle meta", format!("category ids out of order at {id}")));
                }
                categories.push(name.to_string());
            }
            _ => return Err(Error::parse("bundle meta", format!("unknown key {k:?}"))),
        }
    }
    if version != Some(BUNDLE_FORMAT_VERSION) {
        return Err(Error::parse("bundle meta", format!("unsupported format_version {version:?}")));
    }
    let missing = |k: &str| Error::parse("bundle meta", format!("missing {k}"));
    let (camera_id, camera) = camera.ok_or_else(|| missing("camera"))?;
    let boundary = match load_png(dir, "boundary")? {
        DynamicImage::ImageLuma8(i) => i,
        other => return Err(Error::image(dir.join("boundary"), format!("expected 8-bit gray, found {:?}", other.color()))),
    };
    let bundle = FrameBundle {
        color: expect_rgb8(dir, "color")?,
        depth: expect_gray16(dir, "depth")?,
        normal: expect_rgb8(dir, "normal")?,
        semantic: expect_gray16(dir, "semantic")?,
        instance: expect_gray16(dir, "instance")?,
        boundary,
        camera,
        camera_id,
        backend: backend.ok_or_else(|| missing("backend"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        categories,
    };
    let dims = bundle.dimensions();
    for (name, d) in [
        ("depth", bundle.depth.dimensions()),
        ("normal", bundle.normal.dimensions()),
        ("semantic", bundle.semantic.dimensions()),
        ("instance", bundle.instance.dimensions()),
        ("boundary", bundle.boundary.dimensions()),
    ] {
        if d != dims {
            return Err(Error::ResolutionMismatch(format!("{name} is {d:?}, color is {dims:?}")));
        }
    }
    Ok(bundle)
}
