use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::{Real, Vec3};

use super::hdr::{read_f32_grid, write_f32_grid};

/// Equirectangular radiance map. Column `u` spans longitude with `u = 0.5`
/// along +z and increasing toward +x; row 0 is the zenith (+y).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    width: u32,
    height: u32,
    texels: Vec<Vec3>,
    /// Per-row conditional CDFs over columns, `width` entries each.
    conditional: Vec<Real>,
    row_weight: Vec<Real>,
    marginal: Vec<Real>,
    total: Real,
}

pub fn luminance(c: Vec3) -> Real {
    0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z
}

/// A direction sampled from the map.
#[derive(Debug, Clone, Copy)]
pub struct EnvSample {
    pub dir: Vec3,
    pub radiance: Vec3,
    /// Solid-angle density.
    pub pdf: Real,
}

impl EnvironmentMap {
    pub fn new(width: u32, height: u32, texels: Vec<Vec3>) -> Result<Self> {
        if width == 0 || height == 0 || texels.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "environment map {width}x{height} with {} texels",
                texels.len()
            )));
        }
        if let Some(t) = texels.iter().find(|t| !t.is_finite() || t.x < 0.0 || t.y < 0.0 || t.z < 0.0) {
            return Err(Error::InvalidArgument(format!("environment radiance {t:?} must be finite and >= 0")));
        }
        let (w, h) = (width as usize, height as usize);
        let mut conditional = vec![0.0; w * h];
        let mut row_weight = vec![0.0; h];
        for j in 0..h {
            let sin_theta = ((j as Real + 0.5) / h as Real * std::f64::consts::PI).sin();
            let mut acc = 0.0;
            for i in 0..w {
                acc += luminance(texels[j * w + i]).max(0.0) * sin_theta;
                conditional[j * w + i] = acc;
            }
            row_weight[j] = acc;
            if acc > 0.0 {
                for c in &mut conditional[j * w..(j + 1) * w] {
                    *c /= acc;
                }
            }
        }
        let total: Real = row_weight.iter().sum();
        let mut marginal = Vec::with_capacity(h);
        let mut acc = 0.0;
        for r in &row_weight {
            acc += r;
            marginal.push(if total > 0.0 { acc / total } else { 0.0 });
        }
        Ok(Self {
            width,
            height,
            texels,
            conditional,
            row_weight,
            marginal,
            total,
        })
    }

    pub fn constant(radiance: Vec3) -> Result<Self> {
        Self::new(1, 1, vec![radiance])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn texels(&self) -> &[Vec3] {
        &self.texels
    }

    pub fn is_black(&self) -> bool {
        self.total <= 0.0
    }

    pub fn direction_to_uv(dir: Vec3) -> [Real; 2] {
        let d = dir.normalized();
        let phi = d.x.atan2(d.z);
        let u = 0.5 + phi / (2.0 * std::f64::consts::PI);
        let v = d.y.clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
        [u, v]
    }

    pub fn uv_to_direction(uv: [Real; 2]) -> Vec3 {
        let phi = (uv[0] - 0.5) * 2.0 * std::f64::consts::PI;
        let theta = uv[1] * std::f64::consts::PI;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Vec3::new(st * sp, ct, st * cp)
    }

    fn texel(&self, i: i64, j: i64) -> Vec3 {
        let w = self.width as i64;
        let i = i.rem_euclid(w);
        let j = j.clamp(0, self.height as i64 - 1);
        self.texels[(j * w + i) as usize]
    }

    /// Bilinear radiance lookup, wrapping in longitude and clamping at the poles.
    pub fn radiance(&self, dir: Vec3) -> Vec3 {
        let [u, v] = Self::direction_to_uv(dir);
        let x = u * self.width as Real - 0.5;
        let y = v * self.height as Real - 0.5;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (i, j) = (x0 as i64, y0 as i64);
        let top = self.texel(i, j) * (1.0 - fx) + self.texel(i + 1, j) * fx;
        let bottom = self.texel(i, j + 1) * (1.0 - fx) + self.texel(i + 1, j + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Picks a texel by luminance × sinθ, then a uniform point inside it.
    pub fn sample(&self, u1: Real, u2: Real) -> Option<EnvSample> {
        if self.is_black() {
            return None;
        }
        let (w, h) = (self.width as usize, self.height as usize);
        let j = self.marginal.partition_point(|&c| c <= u1).min(h - 1);
        let row = &self.conditional[j * w..(j + 1) * w];
        let i = row.partition_point(|&c| c <= u2).min(w - 1);
        // Reuse the leftover of each variate for the position inside the texel.
        let lo_j = if j == 0 { 0.0 } else { self.marginal[j - 1] };
        let fy = ((u1 - lo_j) / (self.marginal[j] - lo_j)).clamp(0.0, 1.0);
        let lo_i = if i == 0 { 0.0 } else { row[i - 1] };
        let fx = ((u2 - lo_i) / (row[i] - lo_i)).clamp(0.0, 1.0);
        let uv = [(i as Real + fx) / w as Real, (j as Real + fy) / h as Real];
        let dir = Self::uv_to_direction(uv);
        let pdf = self.pdf(dir);
        if !(pdf > 0.0) {
            return None;
        }
        Some(EnvSample {
            dir,
            radiance: self.radiance(dir),
            pdf,
        })
    }

    /// Solid-angle density of [`sample`](Self::sample) producing `dir`.
    pub fn pdf(&self, dir: Vec3) -> Real {
        if self.is_black() {
            return 0.0;
        }
        let [u, v] = Self::direction_to_uv(dir);
        let (w, h) = (self.width as usize, self.height as usize);
        let i = ((u * w as Real) as usize).min(w - 1);
        let j = ((v * h as Real) as usize).min(h - 1);
        let texel_weight = {
            let row = &self.conditional[j * w..(j + 1) * w];
            let lo = if i == 0 { 0.0 } else { row[i - 1] };
            (row[i] - lo) * self.row_weight[j]
        };
        let p_texel = texel_weight / self.total;
        let sin_theta = (v * std::f64::consts::PI).sin();
        if !(sin_theta > 0.0) {
            return 0.0;
        }
        p_texel * (w * h) as Real / (2.0 * std::f64::consts::PI * std::f64::consts::PI * sin_theta)
    }

    /// Loads Radiance `.hdr` or the float32 grid format (by magic bytes).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if head.starts_with(b"#?") {
            let img = image::codecs::hdr::HdrDecoder::new(reader)
                .map_err(|e| Error::image(path, e))
                .and_then(|d| image::DynamicImage::from_decoder(d).map_err(|e| Error::image(path, e)))?
                .into_rgb32f();
            let (w, h) = img.dimensions();
            let texels = img
                .pixels()
                .map(|p| Vec3::new(p.0[0] as Real, p.0[1] as Real, p.0[2] as Real))
                .collect();
            Self::new(w, h, texels)
        } else {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
            let (w, h, data) = read_f32_grid(&bytes).map_err(|m| Error::parse("environment map", m))?;
            Self::new(w, h, data)
        }
    }

    /// Writes the float32 grid format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        write_f32_grid(&mut f, self.width, self.height, &self.texels).map_err(|e| Error::io(path, e))?;
        f.flush().map_err(|e| Error::io(path, e))
    }
}
