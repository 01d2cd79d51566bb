//! A small self-contained ingest workspace: three synthetic takes with a
//! slate, canned detector answers, an actor gallery and a truth catalog.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use cinemeta_core::formats::{write_catalog, write_raster, ClipManifest, RasterFile};
use cinemeta_core::imaging::{BayerPattern, Image, Lut, LutKind};
use cinemeta_core::metadata::{
    ActorPid, Annotated, BasicMetadata, CameraMove, ClipId, DayNight, MetadataRecord, Provenance, SceneType, ShotType, Timecode,
};
use cinemeta_core::slate::{save_template, SlateRegion, SlateTemplate, ValueKind};
use cinemeta_core::synth::{camera_clip, random_board_warp, slate_board, warp_onto, ClipSpec};

pub const TEMPLATE_ID: &str = "board";
const FRAMES: usize = 10;
/// Analysis size; files are written at twice this.
const WIDTH: usize = 128;
const HEIGHT: usize = 96;

struct DemoClip {
    id: &'static str,
    motion: CameraMove,
    seed: u64,
    /// Channel gains applied to the grey scene.
    tint: [f64; 3],
    bayer: bool,
    lut: bool,
    slate: [&'static str; 3],
    manifest_scene: Option<u32>,
    scene: (SceneType, &'static str),
    objects: &'static [&'static str],
    /// Face heights (analysis pixels) and the gallery entry each belongs to.
    faces: &'static [(f64, usize)],
    person_height: Option<f64>,
    truth: Truth,
}

struct Truth {
    scene: u32,
    shot: u32,
    take: u32,
    time: DayNight,
    shot_type: ShotType,
    actors: &'static [&'static str],
}

const ACTORS: [(&str, &str, [f64; 4]); 2] = [("p_ana", "Ana Reyes", [1.0, 0.0, 0.0, 0.0]), ("p_ben", "Ben Okafor", [0.0, 0.6, 0.8, 0.0])];

fn clips() -> Vec<DemoClip> {
    vec![
        DemoClip {
            id: "A001C001",
            motion: CameraMove::Pan,
            seed: 11,
            tint: [0.9, 0.85, 0.8],
            bayer: false,
            lut: false,
            slate: ["12", "3", "1"],
            manifest_scene: None,
            scene: (SceneType::Outside, "beach"),
            objects: &["boat"],
            faces: &[(24.0, 0)],
            person_height: None,
            truth: Truth { scene: 12, shot: 3, take: 1, time: DayNight::Day, shot_type: ShotType::Close, actors: &["p_ana"] },
        },
        DemoClip {
            id: "A001C002",
            motion: CameraMove::Static,
            seed: 12,
            tint: [0.8, 0.9, 0.85],
            bayer: true,
            lut: false,
            slate: ["12", "4", "2"],
            manifest_scene: Some(11),
            scene: (SceneType::Inside, "kitchen"),
            objects: &["cup", "table"],
            faces: &[],
            person_height: Some(120.0),
            truth: Truth { scene: 12, shot: 4, take: 2, time: DayNight::Day, shot_type: ShotType::MediumFull, actors: &[] },
        },
        DemoClip {
            id: "A001C003",
            motion: CameraMove::Tilt,
            seed: 13,
            tint: [0.15, 0.2, 0.4],
            bayer: false,
            lut: true,
            slate: ["12A", "5", "3"],
            manifest_scene: Some(12),
            scene: (SceneType::Outside, "street"),
            objects: &["car"],
            faces: &[(8.0, 1), (6.0, 0)],
            person_height: None,
            truth: Truth {
                scene: 12,
                shot: 5,
                take: 3,
                time: DayNight::Night,
                shot_type: ShotType::MediumFull,
                actors: &["p_ana", "p_ben"],
            },
        },
    ]
}

/// Paths of a written workspace.
#[derive(Debug, Clone)]
pub struct DemoWorkspace {
    pub root: PathBuf,
    pub config: PathBuf,
    pub truth: PathBuf,
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn upscale2(img: &Image<f64>) -> Image<f64> {
    Image::from_fn(img.width() * 2, img.height() * 2, img.channels(), |x, y, c| img.at(x / 2, y / 2, c)).expect("positive size")
}

fn tinted(grey: &Image<f64>, tint: [f64; 3]) -> Image<f64> {
    Image::from_fn(grey.width(), grey.height(), 3, |x, y, c| grey.at(x, y, 0) * tint[c]).expect("positive size")
}

fn mosaic(rgb: &Image<f64>, pattern: BayerPattern) -> Image<f64> {
    Image::from_fn(rgb.width(), rgb.height(), 1, |x, y, _| rgb.at(x, y, pattern.color_at(x, y))).expect("positive size")
}

/// Mild per-channel contrast curve as a 9³ cube.
fn demo_lut() -> Lut<f64> {
    let n = 9;
    let mut entries = Vec::with_capacity(n * n * n);
    let curve = |v: f64| v.powf(0.9);
    for b in 0..n {
        for g in 0..n {
            for r in 0..n {
                let s = |i: usize| curve(i as f64 / (n - 1) as f64);
                entries.push([s(r), s(g), s(b)]);
            }
        }
    }
    Lut::new(LutKind::Lut3d, n, entries).expect("valid cube")
}

/// Writes the workspace under `root` and returns the config path.
pub fn write_demo(root: &Path) -> Result<DemoWorkspace> {
    for sub in ["clips", "frames", "templates", "fixtures"] {
        std::fs::create_dir_all(root.join(sub)).with_context(|| format!("cannot create {}", root.join(sub).display()))?;
    }
    let (board, board_regions) = slate_board(99, 112, 80);
    let regions: Vec<SlateRegion> = board_regions
        .into_iter()
        .map(|r| SlateRegion {
            name: r.name,
            rect: [r.rect.0, r.rect.1, r.rect.2, r.rect.3],
            value_kind: if r.integer { ValueKind::Integer } else { ValueKind::Text },
        })
        .collect();
    let template = SlateTemplate::new(TEMPLATE_ID, board.clone(), regions, &Default::default())?;
    save_template(&root.join("templates"), &template)?;
    std::fs::write(root.join("templates/demo.cube"), demo_lut().to_cube())?;

    write_json(
        &root.join("profile.json"),
        &json!({
            "selected_labels": ["SceneNum", "ShotNum", "TakeNum", "CameraMove", "ShotType", "ActorPID", "Time", "SceneType", "Places", "ObjectType", "Notes"],
            "output_format": "ale",
            "column_renames": {"SceneNum": "Scene"}
        }),
    )?;
    let gallery: Vec<_> = ACTORS.iter().map(|(pid, name, e)| json!({"pid": pid, "display_name": name, "embedding": e})).collect();
    write_json(&root.join("gallery.json"), &json!(gallery))?;
    write_json(
        &root.join("config.json"),
        &json!({
            "profile": "profile.json",
            "clips": "clips",
            "output": "out",
            "detectors": {"fixture_root": "fixtures"},
            "templates": "templates",
            "gallery": {"path": "gallery.json", "similarity_threshold": 0.6},
            "sampling": {"spatial_factor": 2, "frame_stride": 3},
            "thresholds": {"camera_move": {"stride": 1}},
            "seed": 7,
            "workers": 1
        }),
    )?;

    let mut truth = Vec::new();
    for clip in clips() {
        write_clip(root, &clip, &board)?;
        truth.push(truth_record(&clip)?);
    }
    let truth_path = root.join("truth.jsonl");
    std::fs::write(&truth_path, write_catalog(&truth)?)?;
    Ok(DemoWorkspace { root: root.to_path_buf(), config: root.join("config.json"), truth: truth_path })
}

fn write_clip(root: &Path, clip: &DemoClip, board: &Image<f64>) -> Result<()> {
    let spec = ClipSpec { width: WIDTH, height: HEIGHT, frames: FRAMES, ..ClipSpec::new(clip.motion, clip.seed) };
    let frames_dir = root.join("frames").join(clip.id);
    std::fs::create_dir_all(&frames_dir)?;
    let pattern = if clip.bayer { "f_%04d.pgm" } else { "f_%04d.ppm" };
    let warp = random_board_warp(clip.seed, board.width(), board.height(), WIDTH * 2, HEIGHT * 2, 6.0);
    for (i, grey) in camera_clip(&spec).iter().enumerate() {
        let mut full = upscale2(grey);
        if i == 0 {
            full = warp_onto(&full, board, &warp);
        }
        let rgb = tinted(&full, clip.tint);
        let (image, name) =
            if clip.bayer { (mosaic(&rgb, BayerPattern::Rggb), format!("f_{i:04}.pgm")) } else { (rgb, format!("f_{i:04}.ppm")) };
        write_raster(&RasterFile::from_image(&image, 255)?, &frames_dir.join(name))?;
    }

    let basic = BasicMetadata {
        fps: 24.0,
        shutter: Some(48.0),
        aperture: Some(2.8),
        iso: Some(800),
        timecode_start: Timecode::parse("01:00:00:00", 24)?,
        focus: None,
    };
    let mut m = ClipManifest::new(ClipId::new(clip.id)?, PathBuf::from(format!("../frames/{}", clip.id)), pattern, FRAMES as u32, basic)?;
    m.slate_template_id = Some(TEMPLATE_ID.into());
    m.bayer_pattern = clip.bayer.then_some(BayerPattern::Rggb);
    m.lut = clip.lut.then(|| PathBuf::from("../templates/demo.cube"));
    m.scene_num = clip.manifest_scene;
    std::fs::write(root.join("clips").join(format!("{}.json", clip.id)), m.to_json() + "\n")?;

    let fx = root.join("fixtures").join(clip.id);
    let put = |kind: &str, key: &str, value: serde_json::Value| -> Result<()> {
        std::fs::create_dir_all(fx.join(kind))?;
        write_json(&fx.join(kind).join(format!("{key}.json")), &value)
    };
    for (region, text) in ["scene", "shot", "take"].iter().zip(clip.slate) {
        put("ocr", region, json!({"text": text, "confidence": 0.95}))?;
    }
    put("ocr", "production", json!({"text": "DEMO", "confidence": 0.9}))?;
    put("slate_detect", "0", json!([{"box": [40.0, 40.0, 176.0, 112.0], "confidence": 0.97}]))?;
    for frame in (0..FRAMES).step_by(3) {
        let key = frame.to_string();
        put("scene_classify", &key, json!({"scene_type": clip.scene.0.as_str(), "place": clip.scene.1, "confidence": 0.8}))?;
        let objects: Vec<_> = clip.objects.iter().map(|c| json!({"category": c, "confidence": 0.7})).collect();
        put("object_detect", &key, json!(objects))?;
        let boxes: Vec<_> = clip
            .faces
            .iter()
            .enumerate()
            .map(|(k, (h, _))| json!({"box": [10.0 + 30.0 * k as f64, 10.0, h * 0.8, h], "confidence": 0.9}))
            .collect();
        put("face_detect", &key, json!(boxes))?;
        for (k, (_, actor)) in clip.faces.iter().enumerate() {
            put("face_embed", &format!("{frame}_{k}"), json!({"embedding": ACTORS[*actor].2}))?;
        }
        if let Some(h) = clip.person_height {
            put("pose_height", &key, json!({"height_px": h, "confidence": 0.8}))?;
        }
    }
    Ok(())
}

fn truth_record(clip: &DemoClip) -> Result<MetadataRecord> {
    let mut r = MetadataRecord::new(ClipId::new(clip.id)?, BasicMetadata::with_fps(24.0)?);
    let t = &clip.truth;
    let s = &mut r.semantic;
    let manual = |v| Annotated::certain(v, Provenance::Manual);
    s.scene_num = Some(manual(t.scene));
    s.shot_num = Some(manual(t.shot));
    s.take_num = Some(manual(t.take));
    s.camera_move = Some(Annotated::certain(clip.motion, Provenance::Manual));
    s.shot_type = Some(Annotated::certain(t.shot_type, Provenance::Manual));
    s.time = Some(Annotated::certain(t.time, Provenance::Manual));
    s.scene_type = Some(Annotated::certain(clip.scene.0, Provenance::Manual));
    for pid in t.actors {
        let name = ACTORS.iter().find(|a| a.0 == *pid).map(|a| a.1.to_string());
        s.actors.push(Annotated::certain(ActorPid::new(*pid, name)?, Provenance::Manual));
    }
    Ok(r)
}
