use std::io::Write;
use std::path::Path;

use image::RgbImage;

use crate::error::{Error, Result};
use crate::{Real, Vec3};

/// Magic line of the float32 grid format. The file is
/// `PBRGEN-F32 1\n<width> <height> 3\n` followed by `width*height*3`
/// little-endian f32 values, row-major from the top row, RGB interleaved.
pub const F32_GRID_MAGIC: &str = "PBRGEN-F32 1";

pub fn write_f32_grid(out: &mut impl Write, width: u32, height: u32, px: &[Vec3]) -> std::io::Result<()> {
    writeln!(out, "{F32_GRID_MAGIC}")?;
    writeln!(out, "{width} {height} 3")?;
    for p in px {
        for c in [p.x, p.y, p.z] {
            out.write_all(&(c as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_f32_grid(bytes: &[u8]) -> std::result::Result<(u32, u32, Vec<Vec3>), String> {
    let mut lines = bytes.splitn(3, |&b| b == b'\n');
    let magic = lines.next().unwrap_or_default();
    if magic != F32_GRID_MAGIC.as_bytes() {
        return Err("missing PBRGEN-F32 header".into());
    }
    let dims = std::str::from_utf8(lines.next().unwrap_or_default()).map_err(|e| e.to_string())?;
    let f: Vec<u32> = dims
        .split_whitespace()
        .map(|s| s.parse::<u32>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    let [w, h, c] = f[..] else {
        return Err(format!("bad dimension line {dims:?}"));
    };
    if c != 3 {
        return Err(format!("expected 3 channels, got {c}"));
    }
    let body = lines.next().unwrap_or_default();
    let n = w as usize * h as usize;
    if body.len() != n * 12 {
        return Err(format!("expected {} data bytes, got {}", n * 12, body.len()));
    }
    let vals: Vec<Real> = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as Real)
        .collect();
    Ok((w, h, vals.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()))
}

/// Linear radiance image, row-major from the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Vec3>,
}

impl HdrImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![Vec3::zero(); width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> Vec3 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn max_component(&self) -> Real {
        self.pixels.iter().map(|p| p.max_component()).fold(0.0, Real::max)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(self.pixels.len() * 12 + 32);
        write_f32_grid(&mut buf, self.width, self.height, &self.pixels).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let (width, height, pixels) = read_f32_grid(&bytes).map_err(|m| Error::parse("hdr image", m))?;
        Ok(Self { width, height, pixels })
    }
}

/// `round(clamp(v · 2^stops, 0, 1)^(1/gamma) · 255)` per channel; non-finite values map to 0.
pub fn tonemap(hdr: &HdrImage, exposure_stops: Real, gamma: Real) -> RgbImage {
    let scale = exposure_stops.exp2();
    let map = |v: Real| -> u8 {
        let v = v * scale;
        if !v.is_finite() {
            return 0;
        }
        (v.clamp(0.0, 1.0).powf(1.0 / gamma) * 255.0).round() as u8
    };
    let data = hdr.pixels.iter().flat_map(|p| [map(p.x), map(p.y), map(p.z)]).collect();
    RgbImage::from_raw(hdr.width, hdr.height, data).expect("buffer size matches image size")
}
