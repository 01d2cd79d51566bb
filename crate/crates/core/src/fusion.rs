//! Merges manifest values, slate readings and annotator outputs into one
//! record per clip, and keeps the JSON-lines catalog.

use std::fmt::Display;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::formats::{parse_catalog, ClipManifest, FormatError};
use crate::metadata::{
    ActorPid, Annotated, CameraMove, Category, ClipId, DayNight, Label, MetadataRecord, Provenance, QueryPredicate, SceneType, ShotType,
};
use crate::profile::UserProfile;
use crate::slate::SlateReading;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("annotations for clip {got} passed with manifest of {expected}")]
    ClipMismatch { expected: String, got: String },
    #[error("clip {0} is already in the catalog")]
    DuplicateClipId(String),
    #[error(transparent)]
    Format(FormatError),
}

impl From<FormatError> for FusionError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::DuplicateClipId(id) => FusionError::DuplicateClipId(id),
            other => FusionError::Format(other),
        }
    }
}

/// Where a candidate came from; breaks ties after provenance and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Slate,
    Annotator,
    Manifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<V> {
    pub value: Annotated<V>,
    pub source: Source,
}

impl<V> Candidate<V> {
    pub fn new(value: Annotated<V>, source: Source) -> Self {
        Self { value, source }
    }
}

/// Outputs of the per-clip annotators.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipAnnotations {
    pub clip_id: ClipId,
    pub camera_move: Option<Annotated<CameraMove>>,
    pub shot_type: Option<Annotated<ShotType>>,
    pub actors: Vec<Annotated<ActorPid>>,
    pub time: Option<Annotated<DayNight>>,
    pub scene_type: Option<Annotated<SceneType>>,
    pub places: Option<Annotated<Category>>,
    pub objects: Vec<Annotated<Category>>,
    /// Audit lines from the annotators (failures, skipped steps).
    pub notes: Vec<String>,
}

impl ClipAnnotations {
    pub fn empty(clip_id: ClipId) -> Self {
        Self {
            clip_id,
            camera_move: None,
            shot_type: None,
            actors: Vec::new(),
            time: None,
            scene_type: None,
            places: None,
            objects: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// Every candidate value per semantic field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub scene_num: Vec<Candidate<u32>>,
    pub shot_num: Vec<Candidate<u32>>,
    pub take_num: Vec<Candidate<u32>>,
    pub camera_move: Vec<Candidate<CameraMove>>,
    pub shot_type: Vec<Candidate<ShotType>>,
    pub actors: Vec<Candidate<ActorPid>>,
    pub time: Vec<Candidate<DayNight>>,
    pub scene_type: Vec<Candidate<SceneType>>,
    pub places: Vec<Candidate<Category>>,
    pub objects: Vec<Candidate<Category>>,
}

/// Slate region names that feed the slate-number fields.
pub const SLATE_FIELDS: [(&str, Label); 3] = [("scene", Label::SceneNum), ("shot", Label::ShotNum), ("take", Label::TakeNum)];

impl CandidateSet {
    /// Gathers candidates; also returns notes for slate numbers that did not
    /// parse as integers.
    pub fn collect(manifest: &ClipManifest, slate: Option<&SlateReading>, annotations: &ClipAnnotations) -> (Self, Vec<String>) {
        let mut set = CandidateSet::default();
        let mut notes = Vec::new();
        if let Some(reading) = slate {
            for (region, label) in SLATE_FIELDS {
                let Some(field) = reading.fields.get(region) else { continue };
                match field.parsed {
                    Some(v) => set
                        .numbers(label)
                        .push(Candidate::new(Annotated::estimated(v, field.confidence, Provenance::SlateOcr), Source::Slate)),
                    None => notes.push(format!("{}={}(slate_ocr,unparsed)", label.json_key(), sanitize(field.raw_text.trim()))),
                }
            }
        }
        set.camera_move.extend(annotations.camera_move.clone().map(Source::annotator));
        set.shot_type.extend(annotations.shot_type.clone().map(Source::annotator));
        set.actors.extend(annotations.actors.iter().cloned().map(Source::annotator));
        set.time.extend(annotations.time.clone().map(Source::annotator));
        set.scene_type.extend(annotations.scene_type.clone().map(Source::annotator));
        set.places.extend(annotations.places.clone().map(Source::annotator));
        set.objects.extend(annotations.objects.iter().cloned().map(Source::annotator));
        set.scene_num.extend(manifest.scene_num.map(Source::manifest));
        set.shot_num.extend(manifest.shot_num.map(Source::manifest));
        set.take_num.extend(manifest.take_num.map(Source::manifest));
        set.scene_type.extend(manifest.scene_type.map(Source::manifest));
        (set, notes)
    }

    fn numbers(&mut self, label: Label) -> &mut Vec<Candidate<u32>> {
        match label {
            Label::SceneNum => &mut self.scene_num,
            Label::ShotNum => &mut self.shot_num,
            _ => &mut self.take_num,
        }
    }
}

impl Source {
    fn annotator<V>(value: Annotated<V>) -> Candidate<V> {
        Candidate::new(value, Source::Annotator)
    }

    fn manifest<V>(value: V) -> Candidate<V> {
        Candidate::new(Annotated::certain(value, Provenance::Manifest), Source::Manifest)
    }
}

/// Semicolons and control characters would break the notes list and the
/// table exports.
fn sanitize(text: &str) -> String {
    text.chars().map(|c| if c == ';' || c.is_control() { ' ' } else { c }).collect()
}

fn describe<V: Display>(label: Label, c: &Candidate<V>) -> String {
    format!("{}={}({},{:.3})", label.json_key(), sanitize(&c.value.value().to_string()), c.value.provenance(), c.value.confidence())
}

/// Orders candidates best-first: precedence rank, then confidence (higher
/// first), then source, then value text.
fn ranked<V: Display + Clone>(candidates: &[Candidate<V>], profile: &UserProfile) -> Vec<Candidate<V>> {
    let mut keyed: Vec<(usize, String, Candidate<V>)> =
        candidates.iter().map(|c| (profile.precedence_rank(c.value.provenance()), c.value.value().to_string(), c.clone())).collect();
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| b.2.value.confidence().total_cmp(&a.2.value.confidence()))
            .then_with(|| a.2.source.cmp(&b.2.source))
            .then_with(|| a.1.cmp(&b.1))
    });
    keyed.into_iter().map(|(_, _, c)| c).collect()
}

fn fuse_scalar<V: Display + Clone>(
    label: Label,
    candidates: &[Candidate<V>],
    profile: &UserProfile,
    notes: &mut Vec<String>,
) -> Option<Annotated<V>> {
    let mut winner = None;
    for c in ranked(candidates, profile) {
        if winner.is_none() && c.value.confidence() >= profile.min_confidence() {
            winner = Some(c.value);
        } else {
            notes.push(describe(label, &c));
        }
    }
    winner
}

/// List fields: one entry per distinct value, each chosen like a scalar.
/// Output is ordered by value text.
fn fuse_list<V: Display + Clone>(
    label: Label,
    candidates: &[Candidate<V>],
    profile: &UserProfile,
    notes: &mut Vec<String>,
) -> Vec<Annotated<V>> {
    let mut groups: std::collections::BTreeMap<String, Vec<Candidate<V>>> = Default::default();
    for c in candidates {
        groups.entry(c.value.value().to_string()).or_default().push(c.clone());
    }
    groups.values().filter_map(|group| fuse_scalar(label, group, profile, notes)).collect()
}

/// Fuses all candidates for one clip. Labels the profile does not select are
/// still filled in; selection only applies at export.
pub fn fuse(
    manifest: &ClipManifest,
    slate: Option<&SlateReading>,
    annotations: &ClipAnnotations,
    profile: &UserProfile,
) -> Result<MetadataRecord, FusionError> {
    if annotations.clip_id != manifest.clip_id {
        return Err(FusionError::ClipMismatch { expected: manifest.clip_id.to_string(), got: annotations.clip_id.to_string() });
    }
    let (set, mut notes) = CandidateSet::collect(manifest, slate, annotations);
    let mut record = fuse_candidates(manifest.clip_id.clone(), manifest, &set, profile, &mut notes);
    for note in annotations.notes.iter().chain(&notes) {
        record.push_note(&sanitize(note));
    }
    Ok(record)
}

/// Deterministic in the candidate multiset of each field. Loser descriptions
/// are appended to `notes` in label order.
pub fn fuse_candidates(
    clip_id: ClipId,
    manifest: &ClipManifest,
    set: &CandidateSet,
    profile: &UserProfile,
    notes: &mut Vec<String>,
) -> MetadataRecord {
    let mut record = MetadataRecord::new(clip_id, manifest.basic.clone());
    let s = &mut record.semantic;
    s.scene_num = fuse_scalar(Label::SceneNum, &set.scene_num, profile, notes);
    s.shot_num = fuse_scalar(Label::ShotNum, &set.shot_num, profile, notes);
    s.take_num = fuse_scalar(Label::TakeNum, &set.take_num, profile, notes);
    s.camera_move = fuse_scalar(Label::CameraMove, &set.camera_move, profile, notes);
    s.shot_type = fuse_scalar(Label::ShotType, &set.shot_type, profile, notes);
    s.actors = fuse_list(Label::ActorPid, &set.actors, profile, notes);
    s.time = fuse_scalar(Label::Time, &set.time, profile, notes);
    s.scene_type = fuse_scalar(Label::SceneType, &set.scene_type, profile, notes);
    s.places = fuse_scalar(Label::Places, &set.places, profile, notes);
    s.objects = fuse_list(Label::ObjectType, &set.objects, profile, notes);
    record
}

/// Appends one record line. The whole file is rewritten to a temporary file
/// in the same directory and renamed over the catalog, so readers never see
/// a partial line.
pub fn catalog_append(path: &Path, record: &MetadataRecord) -> Result<(), FusionError> {
    let existing = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(FormatError::io(path, e).into()),
    };
    if parse_catalog(&existing)?.iter().any(|r| r.clip_id == record.clip_id) {
        return Err(FusionError::DuplicateClipId(record.clip_id.to_string()));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| FusionError::from(FormatError::io(path, e));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(existing.as_bytes()).map_err(io)?;
    if !existing.is_empty() && !existing.ends_with('\n') {
        tmp.write_all(b"\n").map_err(io)?;
    }
    tmp.write_all(record.to_json().as_bytes()).map_err(io)?;
    tmp.write_all(b"\n").map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Clip ids of matching records, in catalog order.
pub fn catalog_query(path: &Path, predicate: &QueryPredicate) -> Result<Vec<ClipId>, FusionError> {
    let records = crate::formats::read_catalog(path)?;
    Ok(records.into_iter().filter(|r| predicate.matches(r)).map(|r| r.clip_id).collect())
}
