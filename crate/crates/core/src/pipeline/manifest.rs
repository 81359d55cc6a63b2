//! Line-delimited JSON manifest. Each line is a full record for one key;
//! replaying the file keeps the last record per key.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundtruth::Backend;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Repair,
    Cameras,
    Render,
    Gt,
    Select,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Repair,
        Stage::Cameras,
        Stage::Render,
        Stage::Gt,
        Stage::Select,
        Stage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Repair => "repair",
            Stage::Cameras => "cameras",
            Stage::Render => "render",
            Stage::Gt => "gt",
            Stage::Select => "select",
            Stage::Stats => "stats",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Started but not finished; left behind by an interrupted run.
    Incomplete,
    Complete,
    Failed,
}

/// One manifest record. Scene-level records (repair, cameras) leave
/// `camera` and `backend` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub format_version: u32,
    pub scene: String,
    #[serde(default)]
    pub room: Option<String>,
    #[serde(default)]
    pub camera: Option<u32>,
    #[serde(default)]
    pub backend: Option<Backend>,
    pub stage: Stage,
    pub status: Status,
    /// Bundle directory relative to the output root.
    #[serde(default)]
    pub bundle: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub color_score: Option<f64>,
    #[serde(default)]
    pub depth_score: Option<f64>,
    #[serde(default)]
    pub kept: Option<bool>,
    #[serde(default)]
    pub error: Option<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub type EntryKey = (String, Option<u32>, Option<Backend>);

impl ManifestEntry {
    pub fn scene_level(scene: &str, stage: Stage, status: Status) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            scene: scene.to_string(),
            room: None,
            camera: None,
            backend: None,
            stage,
            status,
            bundle: None,
            seed: None,
            color_score: None,
            depth_score: None,
            kept: None,
            error: None,
            timestamp: now(),
        }
    }

    pub fn key(&self) -> EntryKey {
        (self.scene.clone(), self.camera, self.backend)
    }

    pub fn is_frame(&self) -> bool {
        self.camera.is_some() && self.backend.is_some()
    }

    /// Copy with the timestamp zeroed, for comparing runs.
    pub fn without_timestamp(&self) -> Self {
        Self {
            timestamp: 0,
            ..self.clone()
        }
    }
}

pub fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Replayed manifest state plus an optional append handle.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: BTreeMap<EntryKey, ManifestEntry>,
    file: Option<(PathBuf, File)>,
    lines: usize,
}

impl Manifest {
    /// Replays the manifest at `path` (missing file = empty) and opens it for appending.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m = Self::read(path)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        m.file = Some((path.to_path_buf(), f));
        Ok(m)
    }

    /// Read-only replay.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m = Self::default();
        let f = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(m),
            Err(e) => return Err(Error::io(path, e)),
        };
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: ManifestEntry = match serde_json::from_str(&line) {
                Ok(e) => e,
                // A torn final line from an interrupted write is dropped.
                Err(err) if err.is_eof() => {
                    log::warn!("{}:{}: truncated record ignored", path.display(), n + 1);
                    continue;
                }
                Err(err) => return Err(Error::parse(format!("{}:{}", path.display(), n + 1), err)),
            };
            if e.format_version != MANIFEST_FORMAT_VERSION {
                return Err(Error::parse(
                    format!("{}:{}", path.display(), n + 1),
                    format!("unsupported format_version {}", e.format_version),
                ));
            }
            m.lines += 1;
            m.entries.insert(e.key(), e);
        }
        Ok(m)
    }

    /// Appends `entry` (when opened for writing) and applies it.
    pub fn record(&mut self, entry: ManifestEntry) -> Result<()> {
        if let Some((path, f)) = &mut self.file {
            let line = serde_json::to_string(&entry).map_err(|e| Error::parse("manifest entry", e))?;
            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io(path.clone(), e))?;
        }
        self.lines += 1;
        self.entries.insert(entry.key(), entry);
        Ok(())
    }

    pub fn get(&self, key: &EntryKey) -> Option<&ManifestEntry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.values()
    }

    pub fn frames(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.values().filter(|e| e.is_frame())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of records appended over the manifest's lifetime.
    pub fn line_count(&self) -> usize {
        self.lines
    }

    /// Replayed state with timestamps zeroed, ordered by key.
    pub fn canonical(&self) -> Vec<ManifestEntry> {
        self.entries.values().map(ManifestEntry::without_timestamp).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.values().filter(|e| e.status == Status::Failed)
    }
}
