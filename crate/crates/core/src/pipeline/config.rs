use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraParams, ObjectViewParams};
use crate::error::{Error, Result};
use crate::groundtruth::Backend;
use crate::metrics::DEFAULT_TOLERANCE;
use crate::path::PathConfig;
use crate::raster::{DirectionalRig, LOCAL_AMBIENT};
use crate::repair::RepairConfig;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub width: u32,
    pub height: u32,
    /// Constant sky radiance used when `path.env_map` is unset.
    pub sky: [Real; 3],
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            sky: [1.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterSettings {
    pub rig: DirectionalRig,
    pub max_lights_per_node: usize,
    pub local_ambient: Real,
}

impl Default for RasterSettings {
    fn default() -> Self {
        Self {
            rig: DirectionalRig::default(),
            max_lights_per_node: 4,
            local_ambient: LOCAL_AMBIENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectViewSettings {
    /// Categories whose instances get object-centric cameras; empty disables.
    pub categories: Vec<String>,
    pub params: ObjectViewParams,
}

impl Default for ObjectViewSettings {
    fn default() -> Self {
        Self {
            categories: Vec::new(),
            params: ObjectViewParams {
                cameras_per_object: 4,
                ..ObjectViewParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationSettings {
    /// Directory of `<name>.color.png` / `<name>.depth.png` reference pairs.
    pub references: Option<PathBuf>,
    pub tau: Real,
}

impl Default for CurationSettings {
    fn default() -> Self {
        Self {
            references: None,
            tau: crate::curation::DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSettings {
    pub boundary_tolerance: Real,
    pub ignore_labels: Vec<u32>,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            boundary_tolerance: DEFAULT_TOLERANCE,
            ignore_labels: vec![0],
        }
    }
}

/// Whole-pipeline configuration, read from TOML. Relative paths are
/// resolved against the config file's directory by [`PipelineConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    /// Scene files; each scene is keyed by its file stem.
    pub scenes: Vec<PathBuf>,
    /// Optional directory of `<scene key>.labels.json` emitter labels.
    pub labels_dir: Option<PathBuf>,
    /// Nodes of these categories get an automatic bulb unless labeled.
    pub auto_bulb_categories: Vec<String>,
    pub backends: Vec<Backend>,
    pub render: RenderSettings,
    pub repair: RepairConfig,
    pub cameras: CameraParams,
    pub object_views: ObjectViewSettings,
    pub raster: RasterSettings,
    pub path: PathConfig,
    pub curation: CurationSettings,
    pub metrics: MetricSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            output: PathBuf::from("out"),
            scenes: Vec::new(),
            labels_dir: None,
            auto_bulb_categories: vec!["lamp".into()],
            backends: Backend::ALL.to_vec(),
            render: RenderSettings::default(),
            repair: RepairConfig::default(),
            cameras: CameraParams::default(),
            object_views: ObjectViewSettings::default(),
            raster: RasterSettings::default(),
            path: PathConfig::default(),
            curation: CurationSettings::default(),
            metrics: MetricSettings::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("pipeline config", e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output);
        for s in &mut self.scenes {
            resolve(base, s);
        }
        for p in [&mut self.labels_dir, &mut self.path.env_map, &mut self.curation.references]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        if self.backends.is_empty() {
            return Err(Error::InvalidConfig("no backends selected".into()));
        }
        if self.render.width == 0 || self.render.height == 0 {
            return Err(Error::InvalidConfig("render size must be positive".into()));
        }
        if self.render.sky.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidConfig("sky radiance must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.curation.tau) {
            return Err(Error::InvalidConfig(format!("tau {} outside [0, 1]", self.curation.tau)));
        }
        if !(self.metrics.boundary_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("boundary tolerance must be >= 0".into()));
        }
        let mut keys = std::collections::BTreeSet::new();
        for s in &self.scenes {
            if !keys.insert(scene_key(s)) {
                return Err(Error::InvalidConfig(format!("duplicate scene key {:?}", scene_key(s))));
            }
        }
        let optional = [&self.labels_dir, &self.path.env_map, &self.curation.references];
        for p in self.scenes.iter().chain(optional.into_iter().flatten()) {
            if !p.exists() {
                return Err(Error::InvalidConfig(format!("{} does not exist", p.display())));
            }
        }
        self.repair.validate()?;
        self.cameras.validate()?;
        self.raster.rig.validate()?;
        self.path.validate()?;
        if !self.object_views.categories.is_empty() {
            self.object_views.params.validate()?;
        }
        Ok(())
    }
}

/// Scene key used in output paths, seeds and the manifest: the file stem.
pub fn scene_key(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    name.strip_suffix(".json").unwrap_or(&name).to_string()
}
