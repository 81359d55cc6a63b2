//! Pinhole cameras and the two viewpoint samplers: in-room sector cameras and
//! object-centric icosphere cameras.

mod icosphere;
mod object;
mod room;

use std::fmt::Write as _;
use std::path::Path;

pub use icosphere::{icosphere, icosphere_points};
pub use object::{sample_object_cameras, ObjectViewParams};
pub use room::{coverage_report, sample_room_cameras, CameraParams, CoverageReport, IdBuffer, ItemBufferRenderer, SectorCamera};

use crate::error::{Error, Result};
use crate::{Ray, Real, Vec3};

/// Pinhole camera. Yaw is measured from +z toward +x; positive pitch tilts down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub yaw: Real,
    pub pitch: Real,
    /// Horizontal field of view, radians.
    pub hfov: Real,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(position: Vec3, yaw: Real, pitch: Real, hfov: Real, width: u32, height: u32) -> Result<Self> {
        let c = Self {
            position,
            yaw,
            pitch,
            hfov,
            width,
            height,
        };
        c.validate()?;
        Ok(c)
    }

    /// Camera at `position` whose view axis points at `target`.
    pub fn look_at(position: Vec3, target: Vec3, hfov: Real, width: u32, height: u32) -> Result<Self> {
        let d = (target - position).normalized();
        if d.length() == 0.0 {
            return Err(Error::InvalidArgument("look_at target equals position".into()));
        }
        let pitch = (-d.y).clamp(-1.0, 1.0).asin();
        let yaw = if d.x == 0.0 && d.z == 0.0 { 0.0 } else { d.x.atan2(d.z) };
        Self::new(position, yaw, pitch, hfov, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hfov > 0.0 && self.hfov < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("field of view {} outside (0, pi)", self.hfov)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be positive".into()));
        }
        if !self.position.is_finite() || !self.yaw.is_finite() || !self.pitch.is_finite() {
            return Err(Error::InvalidArgument("camera pose must be finite".into()));
        }
        Ok(())
    }

    pub fn forward(&self) -> Vec3 {
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        Vec3::new(cp * sy, -sp, cp * cy)
    }

    /// Horizontal right vector; depends on yaw only, so it is defined when looking straight down.
    pub fn right(&self) -> Vec3 {
        let (sy, cy) = self.yaw.sin_cos();
        Vec3::new(-cy, 0.0, sy)
    }

    pub fn up(&self) -> Vec3 {
        self.right().cross(self.forward())
    }

    /// Ray through continuous image coordinates (`(0, 0)` is the top-left corner).
    pub fn ray(&self, px: Real, py: Real) -> Ray {
        let tan_x = (self.hfov * 0.5).tan();
        let tan_y = tan_x * self.height as Real / self.width as Real;
        let sx = (2.0 * px / self.width as Real - 1.0) * tan_x;
        let sy = (1.0 - 2.0 * py / self.height as Real) * tan_y;
        let dir = (self.forward() + self.right() * sx + self.up() * sy).normalized();
        Ray::new(self.position, dir)
    }

    pub fn pixel_center_ray(&self, x: u32, y: u32) -> Ray {
        self.ray(x as Real + 0.5, y as Real + 0.5)
    }

    /// World vector to camera space: x right, y up, z toward the viewer.
    pub fn to_camera_space(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.right()), v.dot(self.up()), -v.dot(self.forward()))
    }

    pub fn from_camera_space(&self, v: Vec3) -> Vec3 {
        self.right() * v.x + self.up() * v.y - self.forward() * v.z
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// One-line record: `id x y z yaw pitch hfov w h`.
    pub fn to_record(&self, id: u32) -> String {
        let p = self.position;
        format!(
            "{id} {} {} {} {} {} {} {} {}",
            p.x, p.y, p.z, self.yaw, self.pitch, self.hfov, self.width, self.height
        )
    }

    pub fn from_record(line: &str) -> Result<(u32, Camera)> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 9 {
            return Err(Error::parse("camera record", format!("expected 9 fields, got {}: {line:?}", f.len())));
        }
        let num = |i: usize| -> Result<Real> {
            f[i].parse::<Real>()
                .map_err(|e| Error::parse("camera record", format!("field {i}: {e}")))
        };
        let int = |i: usize| -> Result<u32> {
            f[i].parse::<u32>()
                .map_err(|e| Error::parse("camera record", format!("field {i}: {e}")))
        };
        let cam = Camera::new(Vec3::new(num(1)?, num(2)?, num(3)?), num(4)?, num(5)?, num(6)?, int(7)?, int(8)?)?;
        Ok((int(0)?, cam))
    }
}

pub const CAMERA_FILE_HEADER: &str = "# pbrgen cameras v1: id x y z yaw pitch hfov width height";

pub fn cameras_to_string(cams: &[(u32, Camera)]) -> String {
    let mut s = String::from(CAMERA_FILE_HEADER);
    s.push('\n');
    for (id, c) in cams {
        let _ = writeln!(s, "{}", c.to_record(*id));
    }
    s
}

pub fn parse_cameras(text: &str) -> Result<Vec<(u32, Camera)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(Camera::from_record)
        .collect()
}

pub fn write_cameras(path: impl AsRef<Path>, cams: &[(u32, Camera)]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cameras_to_string(cams)).map_err(|e| Error::io(path, e))
}

pub fn read_cameras(path: impl AsRef<Path>) -> Result<Vec<(u32, Camera)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text)
}
