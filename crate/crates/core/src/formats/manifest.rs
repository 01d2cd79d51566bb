//! Clip manifests: the per-take description of a frame-sequence directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::FormatError;
use crate::imaging::BayerPattern;
use crate::metadata::{nominal_fps_base, BasicMetadata, ClipId, SceneType, Timecode};

#[derive(Debug, Clone, PartialEq)]
pub struct ClipManifest {
    pub clip_id: ClipId,
    pub frames_dir: PathBuf,
    pub frame_pattern: String,
    pub frame_count: u32,
    /// Number substituted for the first frame.
    pub frame_start: u32,
    pub basic: BasicMetadata,
    pub slate_template_id: Option<String>,
    pub slate_scan_frames: Option<u32>,
    /// Frames are single-channel sensor mosaics with this layout.
    pub bayer_pattern: Option<BayerPattern>,
    /// `.cube` applied after demosaic.
    pub lut: Option<PathBuf>,
    pub scene_num: Option<u32>,
    pub shot_num: Option<u32>,
    pub take_num: Option<u32>,
    /// Interior/exterior known from the script.
    pub scene_type: Option<SceneType>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    clip_id: String,
    frames_dir: PathBuf,
    frame_pattern: String,
    frame_count: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    frame_start: u32,
    fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shutter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aperture: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iso: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    focus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timecode_start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slate_template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slate_scan_frames: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bayer_pattern: Option<BayerPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lut: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene_num: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shot_num: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    take_num: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene_type: Option<SceneType>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

const REQUIRED: [&str; 5] = ["clip_id", "frames_dir", "frame_pattern", "frame_count", "fps"];

/// Parses and validates a manifest. Relative paths are kept as written.
pub fn parse_manifest(text: &str) -> Result<ClipManifest, FormatError> {
    let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Json { line: e.line(), message: e.to_string() })?;
    let obj = value.as_object().ok_or_else(|| FormatError::BadType("manifest must be a JSON object".into()))?;
    if let Some(missing) = REQUIRED.iter().find(|k| !obj.contains_key(**k)) {
        return Err(FormatError::MissingKey(missing.to_string()));
    }
    let raw: RawManifest = serde_json::from_value(value).map_err(|e| FormatError::BadType(e.to_string()))?;
    let bad = |e: crate::metadata::MetadataError| FormatError::BadType(e.to_string());
    if raw.frame_count < 1 || raw.frame_count > i64::from(u32::MAX) {
        return Err(FormatError::BadType(format!("frame_count must be at least 1, got {}", raw.frame_count)));
    }
    if raw.slate_scan_frames == Some(0) {
        return Err(FormatError::BadType("slate_scan_frames must be at least 1".into()));
    }
    validate_pattern(&raw.frame_pattern)?;
    let fps_base = nominal_fps_base(raw.fps);
    let mut basic = BasicMetadata::with_fps(raw.fps).map_err(bad)?;
    basic.shutter = raw.shutter;
    basic.aperture = raw.aperture;
    basic.iso = raw.iso;
    basic.focus = raw.focus;
    if let Some(tc) = &raw.timecode_start {
        basic.timecode_start = Timecode::parse(tc, fps_base).map_err(bad)?;
    }
    basic.validate().map_err(bad)?;
    Ok(ClipManifest {
        clip_id: ClipId::new(raw.clip_id).map_err(bad)?,
        frames_dir: raw.frames_dir,
        frame_pattern: raw.frame_pattern,
        frame_count: raw.frame_count as u32,
        frame_start: raw.frame_start,
        basic,
        slate_template_id: raw.slate_template_id,
        slate_scan_frames: raw.slate_scan_frames,
        bayer_pattern: raw.bayer_pattern,
        lut: raw.lut,
        scene_num: raw.scene_num,
        shot_num: raw.shot_num,
        take_num: raw.take_num,
        scene_type: raw.scene_type,
    })
}

impl ClipManifest {
    /// Minimal manifest; optional fields unset.
    pub fn new(
        clip_id: ClipId,
        frames_dir: PathBuf,
        frame_pattern: &str,
        frame_count: u32,
        basic: BasicMetadata,
    ) -> Result<Self, FormatError> {
        if frame_count == 0 {
            return Err(FormatError::BadType("frame_count must be at least 1".into()));
        }
        validate_pattern(frame_pattern)?;
        Ok(Self {
            clip_id,
            frames_dir,
            frame_pattern: frame_pattern.to_string(),
            frame_count,
            frame_start: 0,
            basic,
            slate_template_id: None,
            slate_scan_frames: None,
            bayer_pattern: None,
            lut: None,
            scene_num: None,
            shot_num: None,
            take_num: None,
            scene_type: None,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawManifest {
            clip_id: self.clip_id.to_string(),
            frames_dir: self.frames_dir.clone(),
            frame_pattern: self.frame_pattern.clone(),
            frame_count: i64::from(self.frame_count),
            frame_start: self.frame_start,
            fps: self.basic.fps,
            shutter: self.basic.shutter,
            aperture: self.basic.aperture,
            iso: self.basic.iso,
            focus: self.basic.focus,
            timecode_start: Some(self.basic.timecode_start.to_string()),
            slate_template_id: self.slate_template_id.clone(),
            slate_scan_frames: self.slate_scan_frames,
            bayer_pattern: self.bayer_pattern,
            lut: self.lut.clone(),
            scene_num: self.scene_num,
            shot_num: self.shot_num,
            take_num: self.take_num,
            scene_type: self.scene_type,
        };
        serde_json::to_string_pretty(&raw).expect("manifest serializes")
    }

    /// File name of frame `index` (0-based within the clip).
    pub fn frame_file_name(&self, index: u32) -> String {
        format_frame(&self.frame_pattern, self.frame_start + index)
    }

    /// Frame path, with a relative `frames_dir` resolved against `base`.
    pub fn frame_path(&self, base: &Path, index: u32) -> PathBuf {
        self.resolved_frames_dir(base).join(self.frame_file_name(index))
    }

    pub fn resolved_frames_dir(&self, base: &Path) -> PathBuf {
        if self.frames_dir.is_absolute() {
            self.frames_dir.clone()
        } else {
            base.join(&self.frames_dir)
        }
    }
}

/// A frame pattern holds exactly one `%d`, `%Nd` or `%0Nd`; `%%` is a literal percent.
fn validate_pattern(pattern: &str) -> Result<(), FormatError> {
    let mut conversions = 0;
    let bytes = pattern.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if bytes.get(i + 1) == Some(&b'%') {
                i += 2;
                continue;
            }
            let mut j = i + 1;
            while bytes.get(j).is_some_and(u8::is_ascii_digit) {
                j += 1;
            }
            if bytes.get(j) != Some(&b'd') {
                return Err(FormatError::BadType(format!("unsupported conversion in frame pattern {pattern:?}")));
            }
            conversions += 1;
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if conversions != 1 {
        return Err(FormatError::BadType(format!("frame pattern {pattern:?} needs exactly one %d conversion")));
    }
    Ok(())
}

fn format_frame(pattern: &str, number: u32) -> String {
    let mut out = String::new();
    let mut rest = pattern;
    while let Some(pos) = rest.find('%') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos + 1..];
        if let Some(after) = tail.strip_prefix('%') {
            out.push('%');
            rest = after;
            continue;
        }
        let digits = tail.bytes().take_while(u8::is_ascii_digit).count();
        let spec = &tail[..digits];
        let width: usize = spec.parse().unwrap_or(0);
        if spec.starts_with('0') {
            out.push_str(&format!("{number:0width$}"));
        } else {
            out.push_str(&format!("{number:width$}"));
        }
        rest = &tail[digits + 1..];
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"clip_id":"A001","frames_dir":"frames/A001","frame_pattern":"f_%04d.pgm","frame_count":12,"fps":24}"#;

    #[test]
    fn minimal_manifest() {
        let m = parse_manifest(MINIMAL).unwrap();
        assert_eq!(m.clip_id.as_str(), "A001");
        assert_eq!(m.frame_count, 12);
        assert_eq!(m.basic.fps, 24.0);
        assert_eq!(m.basic.timecode_start.to_string(), "00:00:00:00");
        assert_eq!(m.frame_file_name(3), "f_0003.pgm");
        assert_eq!(m.frame_path(Path::new("/data"), 0), PathBuf::from("/data/frames/A001/f_0000.pgm"));
        assert_eq!(parse_manifest(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_manifest(r#"{"clip_id":"A","frames_dir":"d","frame_pattern":"%d","fps":24}"#),
            Err(FormatError::MissingKey("frame_count".into()))
        );
        assert!(matches!(parse_manifest(&MINIMAL.replace("12", "0")), Err(FormatError::BadType(_))));
        assert!(matches!(parse_manifest(&MINIMAL.replace("\"fps\":24", "\"fps\":\"24\"")), Err(FormatError::BadType(_))));
        assert!(matches!(parse_manifest(&MINIMAL.replace("%04d", "%s")), Err(FormatError::BadType(_))));
        assert!(matches!(parse_manifest(&MINIMAL.replace("f_%04d", "%d_%d")), Err(FormatError::BadType(_))));
        assert!(matches!(parse_manifest("{"), Err(FormatError::Json { .. })));
    }

    #[test]
    fn optional_fields() {
        let text = r#"{"clip_id":"A","frames_dir":"d","frame_pattern":"%d.pgm","frame_count":2,"fps":23.976,
            "frame_start":1,"timecode_start":"01:00:00:00","bayer_pattern":"GRBG","scene_num":11,"scene_type":"Inside","iso":800}"#;
        let m = parse_manifest(text).unwrap();
        assert_eq!(m.frame_file_name(0), "1.pgm");
        assert_eq!(m.basic.timecode_start.fps_base(), 24);
        assert_eq!(m.bayer_pattern, Some(BayerPattern::Grbg));
        assert_eq!(m.scene_type, Some(SceneType::Inside));
        assert_eq!(m.basic.iso, Some(800));
    }

    #[test]
    fn frame_formatting() {
        assert_eq!(format_frame("a%%_%3d.ppm", 7), "a%_  7.ppm");
        assert_eq!(format_frame("%d", 42), "42");
    }
}
