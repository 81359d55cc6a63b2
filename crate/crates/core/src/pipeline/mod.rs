//! Stage orchestration: repair → cameras → render → gt → select → stats.
//!
//! Output layout under `output`:
//!
//! ```text
//! repaired/<scene>.json            repaired scene
//! cameras/<scene>.json             sampled cameras
//! renders/<scene>/<cam>/<backend>.png
//! bundles/<scene>/<cam>/<backend>/ ground-truth bundle
//! selection.csv, stats.csv
//! manifest.jsonl
//! cache/                           reference histogram cache
//! ```
//!
//! Every artifact has a `<artifact>.stamp` holding the hashes of its inputs
//! and of the config that produced it. A stage skips work whose stamp
//! matches; a stamp whose config hash differs is an error unless forced.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    scene_key, CurationSettings, MetricSettings, ObjectViewSettings, PipelineConfig, RasterSettings, RenderSettings,
};
pub use manifest::{EntryKey, Manifest, ManifestEntry, Stage, Status, MANIFEST_FORMAT_VERSION};

use crate::camera::{sample_object_cameras, sample_room_cameras, Camera, ObjectViewParams};
use crate::curation::{class_stats, score, CandidateHistograms, ReferenceCorpus};
use crate::error::{Error, Result};
use crate::groundtruth::{read_bundle, write_bundle, Backend, FrameBundle, BUNDLE_FORMAT_VERSION};
use crate::path::{render_path, tonemap, EnvironmentMap, LightingMode, PathConfig};
use crate::raster::{render_visibility, scene_local_lights, shade_directional, shade_local, LocalLight};
use crate::repair::{repair_scene, EmitterLabels};
use crate::scene::{load_scene, save_scene, AccelScene};
use crate::{seed, Vec3};

fn sha(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn json_hash(v: &impl Serialize) -> String {
    sha(&[&serde_json::to_vec(v).expect("config serializes")])
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Stamp {
    input: String,
    config: String,
}

fn stamp_path(artifact: &Path) -> PathBuf {
    PathBuf::from(format!("{}.stamp", artifact.display()))
}

/// True when `artifact` exists and was produced from the same inputs and config.
fn is_fresh(artifact: &Path, want: &Stamp, force: bool, what: &str) -> Result<bool> {
    if !artifact.exists() {
        return Ok(false);
    }
    let Ok(text) = std::fs::read_to_string(stamp_path(artifact)) else {
        return Ok(false);
    };
    let Ok(have) = serde_json::from_str::<Stamp>(&text) else {
        return Ok(false);
    };
    if have.config != want.config {
        if force {
            return Ok(false);
        }
        return Err(Error::ConfigMismatch { what: what.to_string() });
    }
    Ok(have.input == want.input)
}

fn write_stamp(artifact: &Path, stamp: &Stamp) -> Result<()> {
    write_bytes(&stamp_path(artifact), &serde_json::to_vec(stamp).expect("stamp serializes"))
}

/// One sampled camera as stored in `cameras/<scene>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraEntry {
    pub id: u32,
    /// Room id, or `object-<instance>` for object-centric views.
    pub room: String,
    /// Camera record line (see [`Camera::to_record`]).
    pub record: String,
}

impl CameraEntry {
    pub fn camera(&self) -> Result<Camera> {
        Camera::from_record(&self.record).map(|(_, c)| c)
    }
}

pub fn read_camera_entries(path: &Path) -> Result<Vec<CameraEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

/// Outcome of one stage invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    pub performed: usize,
    pub skipped: usize,
    /// Jobs not attempted because an upstream job for them failed.
    pub blocked: Vec<String>,
    /// `(job, error)` for jobs that failed twice.
    pub failures: Vec<(String, String)>,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        Self {
            stage,
            performed: 0,
            skipped: 0,
            blocked: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty() || !self.blocked.is_empty()
    }

    /// Tallies job results. A config mismatch is not a job failure: it
    /// aborts the stage.
    fn absorb(&mut self, results: Vec<(String, Result<Done>)>) -> Result<()> {
        for (job, r) in results {
            match r {
                Ok(Done::Performed) => self.performed += 1,
                Ok(Done::Skipped) => self.skipped += 1,
                Err(e @ Error::ConfigMismatch { .. }) => return Err(e),
                Err(e) => self.failures.push((job, e.to_string())),
            }
        }
        Ok(())
    }
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} performed, {} skipped, {} blocked, {} failed",
            self.stage,
            self.performed,
            self.skipped,
            self.blocked.len(),
            self.failures.len()
        )?;
        for (job, e) in &self.failures {
            write!(f, "\n  failed {job}: {e}")?;
        }
        for job in &self.blocked {
            write!(f, "\n  blocked {job}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Done {
    Performed,
    Skipped,
}

fn with_retry<T>(what: &str, mut f: impl FnMut() -> Result<T>) -> Result<T> {
    match f() {
        Err(Error::ConfigMismatch { what }) => Err(Error::ConfigMismatch { what }),
        Err(e) => {
            log::warn!("{what} failed: {e}; retrying once");
            f()
        }
        ok => ok,
    }
}

/// A frame job: one camera of one scene under one backend.
#[derive(Debug, Clone)]
struct FrameJob {
    scene: String,
    entry: CameraEntry,
    backend: Backend,
}

impl FrameJob {
    fn label(&self) -> String {
        format!("{}/{}/{}", self.scene, self.entry.id, self.backend)
    }

    fn key(&self) -> EntryKey {
        (self.scene.clone(), Some(self.entry.id), Some(self.backend))
    }
}

/// A pipeline bound to one config and output directory.
pub struct Pipeline {
    cfg: PipelineConfig,
    force: bool,
    pool: rayon::ThreadPool,
    manifest: Mutex<Manifest>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Self> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        let manifest = Manifest::open(cfg.output.join("manifest.jsonl"))?;
        Ok(Self {
            cfg,
            force,
            pool,
            manifest: Mutex::new(manifest),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output(&self) -> &Path {
        &self.cfg.output
    }

    fn scene_keys(&self) -> Vec<(String, PathBuf)> {
        self.cfg.scenes.iter().map(|p| (scene_key(p), p.clone())).collect()
    }

    pub fn repaired_path(&self, scene: &str) -> PathBuf {
        self.cfg.output.join("repaired").join(format!("{scene}.json"))
    }

    pub fn cameras_path(&self, scene: &str) -> PathBuf {
        self.cfg.output.join("cameras").join(format!("{scene}.json"))
    }

    pub fn render_path(&self, scene: &str, camera: u32, backend: Backend) -> PathBuf {
        self.cfg
            .output
            .join("renders")
            .join(scene)
            .join(format!("{camera:04}"))
            .join(format!("{backend}.png"))
    }

    pub fn bundle_rel(scene: &str, camera: u32, backend: Backend) -> String {
        format!("bundles/{scene}/{camera:04}/{backend}")
    }

    pub fn job_seed(&self, scene: &str, camera: u32, backend: Backend) -> u64 {
        seed::derive(&["job".into(), self.cfg.seed.into(), scene.into(), camera.into(), backend.tag().into()])
    }

    fn record(&self, e: ManifestEntry) -> Result<()> {
        self.manifest.lock().expect("manifest lock").record(e)
    }

    fn entry(&self, key: &EntryKey) -> Option<ManifestEntry> {
        self.manifest.lock().expect("manifest lock").get(key).cloned()
    }

    fn record_scene(&self, scene: &str, stage: Stage, status: Status, error: Option<String>) -> Result<()> {
        let mut e = ManifestEntry::scene_level(scene, stage, status);
        e.error = error;
        self.record(e)
    }

    fn record_frame(&self, job: &FrameJob, stage: Stage, status: Status, edit: impl FnOnce(&mut ManifestEntry)) -> Result<()> {
        let mut e = self.entry(&job.key()).unwrap_or_else(|| ManifestEntry {
            room: Some(job.entry.room.clone()),
            camera: Some(job.entry.id),
            backend: Some(job.backend),
            ..ManifestEntry::scene_level(&job.scene, stage, status)
        });
        e.stage = stage;
        e.status = status;
        e.room = Some(job.entry.room.clone());
        e.seed = Some(self.job_seed(&job.scene, job.entry.id, job.backend));
        e.error = None;
        e.timestamp = manifest::now();
        edit(&mut e);
        self.record(e)
    }

    /// Upstream check shared by the stages: a missing artifact is blocked
    /// when the manifest recorded a failure for it, and fatal otherwise.
    fn upstream(&self, stage: Stage, artifact: &Path, key: &EntryKey, report: &mut StageReport) -> Result<bool> {
        if artifact.exists() {
            return Ok(true);
        }
        if self.entry(key).is_some_and(|e| e.status == Status::Failed) {
            report.blocked.push(format!("{} ({})", key.0, artifact.display()));
            return Ok(false);
        }
        Err(Error::MissingUpstream {
            stage: stage.to_string(),
            detail: format!("{} not found", artifact.display()),
        })
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageReport> {
        let r = match stage {
            Stage::Repair => self.repair(),
            Stage::Cameras => self.cameras(),
            Stage::Render => self.render(),
            Stage::Gt => self.gt(),
            Stage::Select => self.select(),
            Stage::Stats => self.stats(),
        }?;
        log::info!("{r}");
        Ok(r)
    }

    fn labels_for(&self, scene: &str) -> Result<(EmitterLabels, Vec<u8>)> {
        if let Some(dir) = &self.cfg.labels_dir {
            let p = dir.join(format!("{scene}.labels.json"));
            if p.exists() {
                let bytes = read_bytes(&p)?;
                return Ok((EmitterLabels::load(&p)?, bytes));
            }
        }
        Ok((EmitterLabels::new(), Vec::new()))
    }

    fn repair(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Repair);
        let config_hash = json_hash(&(&self.cfg.repair, &self.cfg.auto_bulb_categories));
        let jobs = self.scene_keys();
        let results = self.pool.install(|| {
            jobs.par_iter()
                .map(|(key, path)| {
                    let r = with_retry(&format!("repair {key}"), || self.repair_one(key, path, &config_hash));
                    let rec = match &r {
                        Err(Error::ConfigMismatch { .. }) => Ok(()),
                        _ => {
                            let status = if r.is_ok() { Status::Complete } else { Status::Failed };
                            self.record_scene(key, Stage::Repair, status, r.as_ref().err().map(|e| e.to_string()))
                        }
                    };
                    (key.clone(), r.and_then(|d| rec.map(|_| d)))
                })
                .collect::<Vec<_>>()
        });
        report.absorb(results)?;
        Ok(report)
    }

    fn repair_one(&self, key: &str, path: &Path, config_hash: &str) -> Result<Done> {
        let (mut labels, label_bytes) = self.labels_for(key)?;
        let stamp = Stamp {
            input: sha(&[&read_bytes(path)?, &label_bytes]),
            config: config_hash.to_string(),
        };
        let out = self.repaired_path(key);
        if is_fresh(&out, &stamp, self.force, &format!("repair of {key}"))? {
            return Ok(Done::Skipped);
        }
        let loaded = load_scene(path)?;
        for w in &loaded.warnings {
            log::warn!("{key}: {w}");
        }
        for cat in &self.cfg.auto_bulb_categories {
            for id in loaded.scene.nodes_in_category(cat) {
                if !labels.nodes.contains_key(&id) {
                    labels = labels.auto_bulb(id);
                }
            }
        }
        let (scene, warnings) = repair_scene(loaded.scene, &self.cfg.repair, &labels)?;
        for w in &warnings {
            log::warn!("{key}: {w}");
        }
        save_scene(&scene, &out)?;
        write_stamp(&out, &stamp)?;
        Ok(Done::Performed)
    }

    fn cameras(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Cameras);
        let config_hash = json_hash(&(&self.cfg.cameras, &self.cfg.object_views, self.cfg.seed));
        let mut results = Vec::new();
        for (key, _) in self.scene_keys() {
            if !self.upstream(Stage::Cameras, &self.repaired_path(&key), &(key.clone(), None, None), &mut report)? {
                continue;
            }
            let r = self
                .pool
                .install(|| with_retry(&format!("cameras {key}"), || self.cameras_one(&key, &config_hash)));
            if let Err(e @ Error::ConfigMismatch { .. }) = r {
                return Err(e);
            }
            let status = if r.is_ok() { Status::Complete } else { Status::Failed };
            self.record_scene(&key, Stage::Cameras, status, r.as_ref().err().map(|e| e.to_string()))?;
            results.push((key, r));
        }
        report.absorb(results)?;
        Ok(report)
    }

    fn cameras_one(&self, key: &str, config_hash: &str) -> Result<Done> {
        let repaired = self.repaired_path(key);
        let stamp = Stamp {
            input: sha(&[&read_bytes(&repaired)?]),
            config: config_hash.to_string(),
        };
        let out = self.cameras_path(key);
        if is_fresh(&out, &stamp, self.force, &format!("cameras of {key}"))? {
            return Ok(Done::Skipped);
        }
        let scene = load_scene(&repaired)?.scene;
        let accel = AccelScene::new(scene);
        let params = crate::camera::CameraParams {
            seed: seed::derive(&["cameras".into(), self.cfg.seed.into(), key.into()]),
            ..self.cfg.cameras.clone()
        };
        let mut entries = Vec::new();
        for room in &accel.scene().rooms {
            for sc in sample_room_cameras(&accel, room, &params, &accel)? {
                let id = entries.len() as u32;
                entries.push(CameraEntry {
                    id,
                    room: room.id.clone(),
                    record: sc.camera.to_record(id),
                });
            }
        }
        for cat in &self.cfg.object_views.categories {
            for node_id in accel.scene().nodes_in_category(cat) {
                let node = accel.scene().node(node_id).expect("listed node");
                let p = ObjectViewParams {
                    seed: seed::derive(&["object-views".into(), self.cfg.seed.into(), key.into(), node_id.into()]),
                    ..self.cfg.object_views.params.clone()
                };
                for cam in sample_object_cameras(&accel.scene().node_world_bounds(node), &p)? {
                    let id = entries.len() as u32;
                    entries.push(CameraEntry {
                        id,
                        room: format!("object-{node_id}"),
                        record: cam.to_record(id),
                    });
                }
            }
        }
        write_bytes(&out, &serde_json::to_vec_pretty(&entries).expect("cameras serialize"))?;
        write_stamp(&out, &stamp)?;
        Ok(Done::Performed)
    }

    fn frame_jobs(&self, stage: Stage, report: &mut StageReport) -> Result<Vec<(String, Vec<FrameJob>)>> {
        let mut out = Vec::new();
        for (key, _) in self.scene_keys() {
            let cams = self.cameras_path(&key);
            if !self.upstream(stage, &cams, &(key.clone(), None, None), report)? {
                continue;
            }
            let mut jobs = Vec::new();
            for entry in read_camera_entries(&cams)? {
                for &backend in &self.cfg.backends {
                    jobs.push(FrameJob {
                        scene: key.clone(),
                        entry: entry.clone(),
                        backend,
                    });
                }
            }
            out.push((key, jobs));
        }
        Ok(out)
    }

    fn sized(&self, c: Camera) -> Camera {
        Camera {
            width: self.cfg.render.width,
            height: self.cfg.render.height,
            ..c
        }
    }

    fn render_config_hash(&self, backend: Backend, env_hash: &str) -> String {
        let common = (backend.tag(), &self.cfg.render, self.cfg.seed);
        if backend.is_path() {
            let path = PathConfig {
                env_map: None,
                ..self.cfg.path.clone()
            };
            json_hash(&(common, path, env_hash))
        } else {
            json_hash(&(common, &self.cfg.raster))
        }
    }

    fn environment(&self) -> Result<(Option<EnvironmentMap>, String)> {
        if !self.cfg.backends.iter().any(|b| b.is_path()) {
            return Ok((None, String::new()));
        }
        match &self.cfg.path.env_map {
            Some(p) => Ok((Some(EnvironmentMap::load(p)?), sha(&[&read_bytes(p)?]))),
            None => {
                let sky = Vec3::from(self.cfg.render.sky);
                Ok((Some(EnvironmentMap::constant(sky)?), json_hash(&self.cfg.render.sky)))
            }
        }
    }

    fn render(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Render);
        let groups = self.frame_jobs(Stage::Render, &mut report)?;
        let (env, env_hash) = self.environment()?;
        for (key, jobs) in groups {
            let repaired = self.repaired_path(&key);
            let loaded = read_bytes(&repaired).and_then(|bytes| {
                let scene = load_scene(&repaired)?.scene;
                Ok((sha(&[&bytes]), AccelScene::new(scene)))
            });
            let (scene_hash, accel) = match loaded {
                Ok(v) => v,
                Err(e) => {
                    self.record_scene(&key, Stage::Render, Status::Failed, Some(e.to_string()))?;
                    report.failures.push((key.clone(), e.to_string()));
                    continue;
                }
            };
            let lights = scene_local_lights(accel.scene(), self.cfg.raster.max_lights_per_node);
            let results = self.pool.install(|| {
                jobs.par_iter()
                    .map(|job| {
                        let r = with_retry(&format!("render {}", job.label()), || {
                            self.render_one(job, &accel, &lights, env.as_ref(), &scene_hash, &env_hash)
                        });
                        let rec = match &r {
                            Ok(Done::Performed) => self.record_frame(job, Stage::Render, Status::Complete, |_| {}),
                            Ok(Done::Skipped) | Err(Error::ConfigMismatch { .. }) => Ok(()),
                            Err(e) => self.record_frame(job, Stage::Render, Status::Failed, |m| {
                                m.error = Some(e.to_string())
                            }),
                        };
                        (job.label(), r.and_then(|d| rec.map(|_| d)))
                    })
                    .collect::<Vec<_>>()
            });
            report.absorb(results)?;
        }
        Ok(report)
    }

    fn render_one(
        &self,
        job: &FrameJob,
        accel: &AccelScene,
        lights: &[LocalLight],
        env: Option<&EnvironmentMap>,
        scene_hash: &str,
        env_hash: &str,
    ) -> Result<Done> {
        let stamp = Stamp {
            input: sha(&[scene_hash.as_bytes(), job.entry.record.as_bytes()]),
            config: self.render_config_hash(job.backend, env_hash),
        };
        let out = self.render_path(&job.scene, job.entry.id, job.backend);
        if is_fresh(&out, &stamp, self.force, &format!("render {}", job.label()))? {
            return Ok(Done::Skipped);
        }
        self.record_frame(job, Stage::Render, Status::Incomplete, |m| {
            m.bundle = None;
            m.color_score = None;
            m.depth_score = None;
            m.kept = None;
        })?;
        let camera = self.sized(job.entry.camera()?);
        let image = render_color(accel, &camera, job.backend, &self.cfg, lights, env, self.job_seed(&job.scene, job.entry.id, job.backend))?;
        if let Some(dir) = out.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        image.save(&out).map_err(|e| Error::image(&out, e))?;
        write_stamp(&out, &stamp)?;
        Ok(Done::Performed)
    }

    fn gt(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Gt);
        let groups = self.frame_jobs(Stage::Gt, &mut report)?;
        let config_hash = json_hash(&(BUNDLE_FORMAT_VERSION, self.cfg.seed, &self.cfg.render));
        for (key, jobs) in groups {
            // Group by camera so the visibility buffers are traced once per view.
            let mut by_camera: BTreeMap<u32, Vec<FrameJob>> = BTreeMap::new();
            for job in jobs {
                if self.upstream(
                    Stage::Gt,
                    &self.render_path(&key, job.entry.id, job.backend),
                    &job.key(),
                    &mut report,
                )? {
                    by_camera.entry(job.entry.id).or_default().push(job);
                }
            }
            if by_camera.is_empty() {
                continue;
            }
            let repaired = self.repaired_path(&key);
            let loaded = read_bytes(&repaired).and_then(|bytes| {
                let scene = load_scene(&repaired)?.scene;
                Ok((sha(&[&bytes]), AccelScene::new(scene)))
            });
            let (scene_hash, accel) = match loaded {
                Ok(v) => v,
                Err(e) => {
                    self.record_scene(&key, Stage::Gt, Status::Failed, Some(e.to_string()))?;
                    report.failures.push((key.clone(), e.to_string()));
                    continue;
                }
            };
            let categories = accel.scene().categories.names().to_vec();
            let results = self.pool.install(|| {
                by_camera
                    .par_iter()
                    .flat_map_iter(|(_, jobs)| {
                        let mut vis = None;
                        jobs.iter()
                            .map(|job| {
                                let r = with_retry(&format!("gt {}", job.label()), || {
                                    self.gt_one(job, &accel, &mut vis, &categories, &scene_hash, &config_hash)
                                });
                                let rec = match &r {
                                    Ok(Done::Performed) => self.record_frame(job, Stage::Gt, Status::Complete, |m| {
                                        m.bundle = Some(Self::bundle_rel(&job.scene, job.entry.id, job.backend));
                                        m.color_score = None;
                                        m.depth_score = None;
                                        m.kept = None;
                                    }),
                                    Ok(Done::Skipped) | Err(Error::ConfigMismatch { .. }) => Ok(()),
                                    Err(e) => self.record_frame(job, Stage::Gt, Status::Failed, |m| {
                                        m.error = Some(e.to_string())
                                    }),
                                };
                                (job.label(), r.and_then(|d| rec.map(|_| d)))
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            });
            report.absorb(results)?;
        }
        Ok(report)
    }

    fn gt_one(
        &self,
        job: &FrameJob,
        accel: &AccelScene,
        vis: &mut Option<crate::raster::VisBuffers>,
        categories: &[String],
        scene_hash: &str,
        config_hash: &str,
    ) -> Result<Done> {
        let color_path = self.render_path(&job.scene, job.entry.id, job.backend);
        let color_bytes = read_bytes(&color_path)?;
        let stamp = Stamp {
            input: sha(&[&color_bytes, scene_hash.as_bytes(), job.entry.record.as_bytes()]),
            config: config_hash.to_string(),
        };
        let out = self.cfg.output.join(Self::bundle_rel(&job.scene, job.entry.id, job.backend));
        if is_fresh(&out, &stamp, self.force, &format!("ground truth {}", job.label()))? {
            return Ok(Done::Skipped);
        }
        let camera = self.sized(job.entry.camera()?);
        let color: RgbImage = image::load_from_memory(&color_bytes)
            .map_err(|e| Error::image(&color_path, e))?
            .into_rgb8();
        let vis = vis.get_or_insert_with(|| render_visibility(accel, &camera));
        let bundle = FrameBundle::from_vis(
            vis,
            color,
            &camera,
            job.entry.id,
            job.backend,
            self.job_seed(&job.scene, job.entry.id, job.backend),
            categories,
        )?;
        write_bundle(&bundle, &out)?;
        write_stamp(&out, &stamp)?;
        Ok(Done::Performed)
    }

    /// Frames whose ground-truth bundle is complete.
    fn bundled_frames(&self) -> Vec<ManifestEntry> {
        let m = self.manifest.lock().expect("manifest lock");
        m.frames()
            .filter(|e| {
                e.status == Status::Complete && e.bundle.is_some() && matches!(e.stage, Stage::Gt | Stage::Select | Stage::Stats)
            })
            .filter(|e| {
                let key = scene_key(Path::new(&e.scene));
                self.cfg.scenes.iter().any(|s| scene_key(s) == key)
                    && e.backend.is_some_and(|b| self.cfg.backends.contains(&b))
            })
            .cloned()
            .collect()
    }

    fn select(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Select);
        let Some(refs_dir) = &self.cfg.curation.references else {
            return Err(Error::InvalidConfig("curation.references is not set".into()));
        };
        let frames = self.bundled_frames();
        if frames.is_empty() {
            return Err(Error::MissingUpstream {
                stage: "select".into(),
                detail: "no ground-truth bundles in the manifest; run gt first".into(),
            });
        }
        let corpus = ReferenceCorpus::load(refs_dir, Some(&self.cfg.output.join("cache")))?;
        let tau = self.cfg.curation.tau;
        let results = self.pool.install(|| {
            frames
                .par_iter()
                .map(|e| {
                    let label = format!("{}/{}/{}", e.scene, e.camera.unwrap_or(0), e.backend.map(|b| b.tag()).unwrap_or(""));
                    let r = with_retry(&format!("select {label}"), || {
                        let dir = self.cfg.output.join(e.bundle.as_deref().expect("bundled"));
                        let b = read_bundle(&dir)?;
                        score(&CandidateHistograms::of_bundle(&b)?, &corpus, tau)
                    });
                    let mut next = e.clone();
                    next.stage = Stage::Select;
                    next.timestamp = manifest::now();
                    let done = match &r {
                        Ok(s) => {
                            next.color_score = Some(s.color);
                            next.depth_score = Some(s.depth);
                            next.kept = Some(s.kept);
                            Done::Performed
                        }
                        Err(err) => {
                            next.status = Status::Failed;
                            next.error = Some(err.to_string());
                            Done::Performed
                        }
                    };
                    let rec = self.record(next);
                    (label, r.and_then(|_| rec.map(|_| done)))
                })
                .collect::<Vec<_>>()
        });
        report.absorb(results)?;
        let m = self.manifest.lock().expect("manifest lock");
        let mut csv = String::from("scene,camera,backend,color_score,depth_score,kept\n");
        for e in m.frames().filter(|e| e.kept.is_some()) {
            csv.push_str(&format!(
                "{},{},{},{:.6},{:.6},{}\n",
                e.scene,
                e.camera.unwrap_or(0),
                e.backend.map(|b| b.tag()).unwrap_or(""),
                e.color_score.unwrap_or(0.0),
                e.depth_score.unwrap_or(0.0),
                e.kept.unwrap_or(false)
            ));
        }
        drop(m);
        write_bytes(&self.cfg.output.join("selection.csv"), csv.as_bytes())?;
        Ok(report)
    }

    fn stats(&self) -> Result<StageReport> {
        let mut report = StageReport::new(Stage::Stats);
        let frames = self.bundled_frames();
        if !frames.iter().any(|e| e.kept.is_some()) {
            return Err(Error::MissingUpstream {
                stage: "stats".into(),
                detail: "no selection results in the manifest; run select first".into(),
            });
        }
        let kept: Vec<&ManifestEntry> = frames.iter().filter(|e| e.kept == Some(true)).collect();
        let bundles = self.pool.install(|| {
            kept.par_iter()
                .map(|e| read_bundle(self.cfg.output.join(e.bundle.as_deref().expect("bundled"))))
                .collect::<Vec<_>>()
        });
        let mut by_table: BTreeMap<Vec<String>, Vec<FrameBundle>> = BTreeMap::new();
        for (e, b) in kept.iter().zip(bundles) {
            match b {
                Ok(b) => {
                    report.performed += 1;
                    by_table.entry(b.categories.clone()).or_default().push(b);
                }
                Err(err) => report.failures.push((e.scene.clone(), err.to_string())),
            }
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for bundles in by_table.values() {
            for (name, n) in class_stats(bundles)?.by_name() {
                *counts.entry(name.to_string()).or_default() += n;
            }
        }
        let total: u64 = counts.values().sum();
        let mut csv = String::from("category,pixels,fraction\n");
        for (name, n) in &counts {
            let f = if total == 0 { 0.0 } else { *n as f64 / total as f64 };
            csv.push_str(&format!("{name},{n},{f:.9}\n"));
        }
        write_bytes(&self.cfg.output.join("stats.csv"), csv.as_bytes())?;
        Ok(report)
    }

    /// Runs every stage in order. Select and stats are skipped when no
    /// reference corpus is configured.
    pub fn full_run(&self) -> Result<Vec<StageReport>> {
        let mut reports = Vec::new();
        for stage in Stage::ALL {
            if matches!(stage, Stage::Select | Stage::Stats) && self.cfg.curation.references.is_none() {
                log::info!("{stage}: skipped, no reference corpus configured");
                continue;
            }
            reports.push(self.run_stage(stage)?);
        }
        Ok(reports)
    }

    /// Replayed manifest state.
    pub fn manifest_snapshot(&self) -> Vec<ManifestEntry> {
        self.manifest.lock().expect("manifest lock").entries().cloned().collect()
    }
}

/// Color image of one view under `backend`.
pub fn render_color(
    accel: &AccelScene,
    camera: &Camera,
    backend: Backend,
    cfg: &PipelineConfig,
    lights: &[LocalLight],
    env: Option<&EnvironmentMap>,
    job_seed: u64,
) -> Result<RgbImage> {
    match backend {
        Backend::RasterDl => shade_directional(camera, &render_visibility(accel, camera), &cfg.raster.rig),
        Backend::RasterIl => shade_local(camera, &render_visibility(accel, camera), lights, cfg.raster.local_ambient),
        Backend::PathOl | Backend::PathIlol => {
            let pc = PathConfig {
                mode: if backend == Backend::PathOl {
                    LightingMode::OutdoorOnly
                } else {
                    LightingMode::IndoorOutdoor
                },
                seed: job_seed,
                ..cfg.path.clone()
            };
            let r = render_path(accel, camera, &pc, env)?;
            if r.nan_samples > 0 {
                log::warn!("{} non-finite samples replaced by 0", r.nan_samples);
            }
            Ok(tonemap(&r.image, pc.exposure, pc.gamma))
        }
    }
}

/// Checks that every kept manifest entry points at a readable bundle.
/// Returns one message per problem.
pub fn verify_manifest(output: &Path) -> Result<Vec<String>> {
    let m = Manifest::read(output.join("manifest.jsonl"))?;
    let mut problems = Vec::new();
    for e in m.frames().filter(|e| e.kept == Some(true)) {
        let Some(rel) = &e.bundle else {
            problems.push(format!("{:?}: kept without a bundle", e.key()));
            continue;
        };
        if let Err(err) = read_bundle(output.join(rel)) {
            problems.push(format!("{rel}: {err}"));
        }
    }
    Ok(problems)
}
