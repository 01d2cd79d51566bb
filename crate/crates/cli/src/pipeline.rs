//! `ingest`: manifests in, catalog + export + run log out.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use cinemeta_core::bridge::results::BoxList;
use cinemeta_core::bridge::{DetectorClient, DetectorKind, DetectorPool, FixtureBackend, ProcessBackend};
use cinemeta_core::camera_move::{analyze_clip, classify};
use cinemeta_core::formats::{export, parse_manifest, read_raster, ClipManifest};
use cinemeta_core::fusion::{catalog_append, fuse, ClipAnnotations};
use cinemeta_core::imaging::{apply_lut, demosaic_bilinear, downsample_box, parse_cube, Image, Lut};
use cinemeta_core::metadata::{Annotated, MetadataRecord, Provenance};
use cinemeta_core::profile::{load_profile, UserProfile};
use cinemeta_core::semantic::{
    annotate_scene_objects, classify_day_night, estimate_shot_scale, identify_actors, load_gallery, observe_faces, observe_person_height,
    ActorGallery,
};
use cinemeta_core::slate::{extract_fields, find_slate_frame, load_template, SlateReading, SlateTemplate};

use crate::config::PipelineConfig;

pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const LOG_FILE: &str = "run.log";

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub clips: usize,
    pub catalog: PathBuf,
    pub export: PathBuf,
    pub log: PathBuf,
}

/// A manifest together with the directory its relative paths start from.
#[derive(Debug, Clone)]
pub struct ClipSource {
    pub manifest: ClipManifest,
    pub base: PathBuf,
    pub file: PathBuf,
}

/// Reads every `*.json` manifest in `dir`, in file-name order. Duplicate clip
/// ids and missing frame directories are configuration errors.
pub fn read_manifests(dir: &Path) -> Result<Vec<ClipSource>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("cannot list {}", dir.display()))?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json") && p.is_file());
    files.sort();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(files.len());
    for file in files {
        let text = std::fs::read_to_string(&file).with_context(|| format!("cannot read manifest {}", file.display()))?;
        let manifest = parse_manifest(&text).with_context(|| format!("manifest {}", file.display()))?;
        if !seen.insert(manifest.clip_id.to_string()) {
            bail!("clip {} appears in more than one manifest ({})", manifest.clip_id, file.display());
        }
        let base = file.parent().unwrap_or(Path::new(".")).to_path_buf();
        let frames = manifest.resolved_frames_dir(&base);
        if !frames.is_dir() {
            bail!("clip {}: frames directory {} does not exist", manifest.clip_id, frames.display());
        }
        out.push(ClipSource { manifest, base, file });
    }
    Ok(out)
}

/// Per-clip seed: the first 8 bytes of SHA-256 over the run seed and clip id.
pub fn clip_seed(run_seed: u64, clip_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(clip_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Shared, read-only state of one ingest run.
struct RunContext<'a> {
    cfg: &'a PipelineConfig,
    profile: UserProfile,
    pool: Option<DetectorPool>,
    gallery: Option<ActorGallery>,
    templates: Mutex<HashMap<String, Arc<SlateTemplate>>>,
}

struct ClipOutcome {
    record: MetadataRecord,
    log: Vec<String>,
}

/// Runs the whole ingest and writes the outputs. Errors are configuration or
/// IO failures; annotator failures only leave fields empty.
pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestSummary> {
    let profile_text = std::fs::read_to_string(&cfg.profile).with_context(|| format!("cannot read profile {}", cfg.profile.display()))?;
    let profile = load_profile(&profile_text).with_context(|| format!("profile {}", cfg.profile.display()))?;
    let clips = read_manifests(&cfg.clips)?;
    let gallery = match &cfg.gallery {
        Some(g) => Some(load_gallery(&g.path, g.similarity_threshold)?),
        None => None,
    };
    let pool = cfg.detectors.as_ref().map(|d| {
        let d = d.clone();
        DetectorPool::new(move || -> Result<Box<dyn cinemeta_core::bridge::Detector>, _> {
            match (&d.command, &d.fixture_root) {
                (Some(cmd), _) => Ok(Box::new(ProcessBackend::spawn(&cmd[0], &cmd[1..], d.timeout())?)),
                (None, Some(root)) => Ok(Box::new(FixtureBackend::new(root)?)),
                (None, None) => unreachable!("validated config"),
            }
        })
    });
    let ctx = RunContext { cfg, profile, pool, gallery, templates: Mutex::new(HashMap::new()) };

    let threads = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().context("cannot start worker pool")?;
    let outcomes: Vec<ClipOutcome> = threads.install(|| clips.par_iter().map(|c| process_clip(&ctx, c)).collect::<Result<_>>())?;

    std::fs::create_dir_all(&cfg.output).with_context(|| format!("cannot create {}", cfg.output.display()))?;
    let catalog = cfg.output.join(CATALOG_FILE);
    if catalog.exists() {
        std::fs::remove_file(&catalog).with_context(|| format!("cannot replace {}", catalog.display()))?;
    }
    let mut log = vec![format!("seed {}", cfg.seed), format!("clips {}", clips.len())];
    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        catalog_append(&catalog, &outcome.record)?;
        log.extend(outcome.log.into_iter().map(|l| format!("{} {l}", outcome.record.clip_id)));
        records.push(outcome.record);
    }
    let export_path = cfg.output.join(format!("export.{}", ctx.profile.output_format().extension()));
    let text = export(&records, &ctx.profile)?;
    std::fs::write(&export_path, text).with_context(|| format!("cannot write {}", export_path.display()))?;
    let log_path = cfg.output.join(LOG_FILE);
    let mut log_text = log.join("\n");
    log_text.push('\n');
    std::fs::write(&log_path, log_text).with_context(|| format!("cannot write {}", log_path.display()))?;
    Ok(IngestSummary { clips: records.len(), catalog, export: export_path, log: log_path })
}

/// One loaded frame: the preprocessed full-resolution image and its
/// downsampled analysis copy.
struct Frame {
    full: Image<f64>,
    small: Image<f64>,
}

fn process_clip(ctx: &RunContext<'_>, source: &ClipSource) -> Result<ClipOutcome> {
    let m = &source.manifest;
    let cfg = ctx.cfg;
    let clip = m.clip_id.as_str();
    let seed = clip_seed(cfg.seed, clip);
    let mut log = Vec::new();
    let warn = |log: &mut Vec<String>, msg: String| {
        log::warn!("{clip}: {msg}");
        log.push(format!("warning: {msg}"));
    };

    let count = m.frame_count as usize;
    let analysis: Vec<usize> = (0..count).step_by(cfg.sampling.frame_stride).collect();
    let motion: Vec<usize> = (0..count).step_by(cfg.thresholds.camera_move.stride).collect();
    let scan_limit = m.slate_scan_frames.map_or(cfg.thresholds.slate.scan_frames, |n| n as usize);
    let wanted: BTreeSet<usize> = analysis.iter().chain(&motion).copied().collect();

    let lut = match &m.lut {
        Some(p) => {
            let path = if p.is_relative() { source.base.join(p) } else { p.clone() };
            match std::fs::read_to_string(&path).map_err(anyhow::Error::from).and_then(|t| Ok(parse_cube::<f64>(&t)?)) {
                Ok(l) => Some(l),
                Err(e) => {
                    warn(&mut log, format!("LUT {} not applied: {e}", path.display()));
                    None
                }
            }
        }
        None => None,
    };

    let mut frames: BTreeMap<usize, Frame> = BTreeMap::new();
    for &i in &wanted {
        let path = m.frame_path(&source.base, i as u32);
        match load_frame(&path, m, lut.as_ref(), cfg.sampling.spatial_factor) {
            Ok(f) => {
                frames.insert(i, f);
            }
            Err(e) => warn(&mut log, format!("frame {i} skipped: {e:#}")),
        }
    }
    log.push(format!("frames loaded {}/{}", frames.len(), wanted.len()));

    let mut annotations = ClipAnnotations::empty(m.clip_id.clone());
    let mut client = match &ctx.pool {
        Some(pool) => match pool.checkout() {
            Ok(c) => Some(c),
            Err(e) => {
                warn(&mut log, format!("detector backend unavailable: {e}"));
                None
            }
        },
        None => None,
    };

    // slate
    let mut slate: Option<SlateReading> = None;
    if let Some(template_id) = &m.slate_template_id {
        match template(ctx, template_id) {
            Err(e) => warn(&mut log, format!("slate template {template_id}: {e:#}")),
            Ok(template) => {
                let scan: Vec<(usize, &Image<f64>)> =
                    frames.iter().filter(|(i, _)| analysis.contains(i) && **i < scan_limit).map(|(i, f)| (*i, &f.full)).collect();
                let mut slate_cfg = cfg.thresholds.slate.clone();
                slate_cfg.seed = seed;
                slate_cfg.scan_frames = scan.len();
                let proposals = client.as_deref_mut().map(|c| slate_proposals(c, clip, &scan));
                let images: Vec<Image<f64>> = scan.iter().map(|(_, f)| (*f).clone()).collect();
                match find_slate_frame(&images, &template, &slate_cfg, proposals.as_deref()) {
                    Err(e) => log.push(format!("slate: {e}")),
                    Ok((k, alignment)) => {
                        let (frame_index, frame) = scan[k];
                        log.push(format!("slate: frame {frame_index}, {} of {} matches inliers", alignment.inliers(), alignment.matches));
                        match client.as_deref_mut() {
                            Some(c) => match extract_fields(frame, frame_index, &alignment, &template, c, clip) {
                                Ok(reading) => {
                                    for (name, f) in &reading.fields {
                                        log.push(format!("slate: {name}={:?} conf {:.3}", f.raw_text, f.confidence));
                                    }
                                    slate = Some(reading);
                                }
                                Err(e) => warn(&mut log, format!("slate OCR failed: {e}")),
                            },
                            None => log.push("slate: no OCR backend, fields not read".into()),
                        }
                    }
                }
            }
        }
    }

    // camera move
    let motion_frames: Vec<Image<f64>> = motion.iter().filter_map(|i| frames.get(i)).map(|f| f.small.clone()).collect();
    let mut move_cfg = cfg.thresholds.camera_move.clone();
    move_cfg.seed = seed;
    match analyze_clip(&motion_frames, &move_cfg).and_then(|samples| classify(&samples, &move_cfg)) {
        Ok(decision) => {
            log.push(format!("camera_move: {} conf {:.3}", decision.label, decision.confidence));
            annotations.camera_move = Some(Annotated::estimated(decision.label, decision.confidence, Provenance::Annotator));
        }
        Err(e) => warn(&mut log, format!("camera_move: {e}")),
    }

    // detector-backed annotators
    let sampled: Vec<(u32, &Image<f64>)> = analysis.iter().filter_map(|i| frames.get(i).map(|f| (*i as u32, &f.small))).collect();
    let frame_height = sampled.first().map_or(0, |(_, f)| f.height());
    match client.as_deref_mut() {
        None => log.push("detectors: not configured".into()),
        Some(c) => {
            match annotate_scene_objects(&sampled, Some(&mut *c), clip, &cfg.thresholds.scene_objects) {
                Ok(out) => {
                    annotations.scene_type = out.scene_type;
                    annotations.places = out.places;
                    annotations.objects = out.objects;
                }
                Err(e) => warn(&mut log, format!("scene/objects: {e}")),
            }
            match observe_faces(&sampled, c, clip, ctx.gallery.is_some()) {
                Ok(faces) => {
                    if let Some(g) = &ctx.gallery {
                        annotations.actors = identify_actors(&faces, g);
                    }
                    let person = if faces.is_empty() {
                        observe_person_height(&sampled, c, clip).unwrap_or_else(|e| {
                            warn(&mut log, format!("pose_height: {e}"));
                            None
                        })
                    } else {
                        None
                    };
                    match estimate_shot_scale(&faces, person.as_ref(), frame_height, &cfg.thresholds.shot_scale) {
                        Ok(s) => annotations.shot_type = Some(s),
                        Err(e) => log.push(format!("shot_type: {e}")),
                    }
                }
                Err(e) => warn(&mut log, format!("faces: {e}")),
            }
        }
    }

    // day/night
    let prior = m.scene_type.or_else(|| annotations.scene_type.as_ref().map(|a| *a.value()));
    let day_frames: Vec<&Image<f64>> = sampled.iter().map(|(_, f)| *f).collect();
    match classify_day_night(&day_frames, prior, &cfg.thresholds.day_night) {
        Ok(t) => annotations.time = Some(t),
        Err(e) => warn(&mut log, format!("time: {e}")),
    }

    drop(client);
    let record = fuse(m, slate.as_ref(), &annotations, &ctx.profile)?;
    Ok(ClipOutcome { record, log })
}

fn load_frame(path: &Path, m: &ClipManifest, lut: Option<&Lut<f64>>, factor: usize) -> Result<Frame> {
    let mut image: Image<f64> = read_raster(path)?.to_image();
    if let Some(pattern) = m.bayer_pattern {
        image = demosaic_bilinear(&image, pattern)?;
    }
    if let Some(lut) = lut {
        image = apply_lut(&image.to_rgb(), lut)?;
    }
    let small = downsample_box(&image, factor)?;
    Ok(Frame { full: image, small })
}

fn template(ctx: &RunContext<'_>, id: &str) -> Result<Arc<SlateTemplate>> {
    let Some(dir) = &ctx.cfg.templates else {
        bail!("no template directory configured");
    };
    let mut cache = ctx.templates.lock().expect("template cache");
    if let Some(t) = cache.get(id) {
        return Ok(t.clone());
    }
    let t = Arc::new(load_template(dir, id, &ctx.cfg.thresholds.slate)?);
    cache.insert(id.to_string(), t.clone());
    Ok(t)
}

/// `slate_detect` boxes per scanned frame; frames without an answer are
/// searched whole.
fn slate_proposals(client: &mut DetectorClient, clip: &str, scan: &[(usize, &Image<f64>)]) -> Vec<Option<Vec<[f64; 4]>>> {
    scan.iter()
        .map(|(i, img)| {
            let payload = serde_json::json!({ "image": cinemeta_core::bridge::encode_image(img) });
            match client.call_typed::<BoxList>(DetectorKind::SlateDetect, clip, *i as u32, payload) {
                Ok(Some(boxes)) if !boxes.is_empty() => Some(boxes.into_iter().map(|b| b.bbox).collect()),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("{clip}: slate_detect failed: {e}");
                    None
                }
            }
        })
        .collect()
}
