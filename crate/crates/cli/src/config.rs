//! `ingest` configuration file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use cinemeta_core::camera_move::CameraMoveConfig;
use cinemeta_core::semantic::{DayNightConfig, ScaleConfig, SceneObjectConfig};
use cinemeta_core::slate::SlateConfig;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "CINEMETA_SEED";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub profile: PathBuf,
    /// Directory of clip manifests (`*.json`), processed in file-name order.
    pub clips: PathBuf,
    /// Receives `catalog.jsonl`, the export file and `run.log`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub detectors: Option<DetectorConfig>,
    /// Slate template registry.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub gallery: Option<GalleryConfig>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Backend program and arguments; `--serve` is appended.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    #[serde(default)]
    pub fixture_root: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    30.0
}

impl DetectorConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalleryConfig {
    pub path: PathBuf,
    #[serde(default = "default_similarity")]
    pub similarity_threshold: f64,
}

fn default_similarity() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub spatial_factor: usize,
    pub frame_stride: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { spatial_factor: 4, frame_stride: 4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub camera_move: CameraMoveConfig,
    pub slate: SlateConfig,
    pub shot_scale: ScaleConfig,
    pub day_night: DayNightConfig,
    pub scene_objects: SceneObjectConfig,
}

impl PipelineConfig {
    /// Parses a config; relative paths are taken against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = serde_json::from_str(text).context("invalid config")?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.profile);
        resolve(&mut cfg.clips);
        resolve(&mut cfg.output);
        if let Some(t) = &mut cfg.templates {
            resolve(t);
        }
        if let Some(g) = &mut cfg.gallery {
            resolve(&mut g.path);
        }
        if let Some(d) = &mut cfg.detectors {
            if let Some(root) = &mut d.fixture_root {
                resolve(root);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("config {}", path.display()))
    }

    /// Replaces the seed with `value` when it is set.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.workers >= 1, "workers must be at least 1");
        ensure!(self.sampling.spatial_factor >= 1, "sampling.spatial_factor must be at least 1");
        ensure!(self.sampling.frame_stride >= 1, "sampling.frame_stride must be at least 1");
        ensure!(self.thresholds.camera_move.stride >= 1, "thresholds.camera_move.stride must be at least 1");
        ensure!(self.profile.is_file(), "profile {} does not exist", self.profile.display());
        ensure!(self.clips.is_dir(), "clips directory {} does not exist", self.clips.display());
        if let Some(t) = &self.templates {
            ensure!(t.is_dir(), "templates directory {} does not exist", t.display());
        }
        if let Some(g) = &self.gallery {
            ensure!(g.path.is_file(), "gallery {} does not exist", g.path.display());
        }
        if let Some(d) = &self.detectors {
            match (&d.command, &d.fixture_root) {
                (Some(cmd), None) => ensure!(!cmd.is_empty(), "detectors.command is empty"),
                (None, Some(root)) => ensure!(root.is_dir(), "fixture root {} does not exist", root.display()),
                _ => bail!("detectors needs exactly one of command and fixture_root"),
            }
            ensure!(d.timeout_secs > 0.0 && d.timeout_secs.is_finite(), "detectors.timeout_secs must be positive");
        }
        self.thresholds.shot_scale.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("profile.json"), r#"{"selected_labels":["SceneNum"]}"#).unwrap();
        std::fs::create_dir(dir.path().join("clips")).unwrap();
        dir
    }

    #[test]
    fn defaults_and_relative_paths() {
        let dir = setup();
        let cfg = PipelineConfig::parse(r#"{"profile":"profile.json","clips":"clips"}"#, dir.path()).unwrap();
        assert_eq!(cfg.sampling, Sampling { spatial_factor: 4, frame_stride: 4 });
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.output, dir.path().join("out"));
        assert_eq!(cfg.thresholds.slate.min_inliers, 15);
    }

    #[test]
    fn validation_errors() {
        let dir = setup();
        let bad = |text: &str| PipelineConfig::parse(text, dir.path()).is_err();
        assert!(bad(r#"{"profile":"missing.json","clips":"clips"}"#));
        assert!(bad(r#"{"profile":"profile.json","clips":"clips","workers":0}"#));
        assert!(bad(r#"{"profile":"profile.json","clips":"clips","colour":"red"}"#));
        assert!(bad(r#"{"profile":"profile.json","clips":"clips","detectors":{}}"#));
        assert!(bad(r#"{"profile":"profile.json","clips":"clips","thresholds":{"shot_scale":{"face_breaks":[0.3,0.2,0.1,0.05]}}}"#));
    }

    #[test]
    fn seed_override() {
        let dir = setup();
        let mut cfg = PipelineConfig::parse(r#"{"profile":"profile.json","clips":"clips","seed":3}"#, dir.path()).unwrap();
        cfg.apply_seed_override(None).unwrap();
        assert_eq!(cfg.seed, 3);
        cfg.apply_seed_override(Some("42")).unwrap();
        assert_eq!(cfg.seed, 42);
        assert!(cfg.apply_seed_override(Some("x")).is_err());
    }
}
