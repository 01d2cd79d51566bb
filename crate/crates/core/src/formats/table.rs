//! Projection of records onto flat label columns, shared by the ALE and CSV codecs.

use crate::metadata::{ActorPid, Annotated, Category, ClipId, Label, MetadataRecord, Provenance, SemanticFields};

/// Separator inside list-valued cells (actors, objects).
pub const LIST_SEPARATOR: char = ';';

/// Text of `label` for `record`; absent values render as the empty string.
pub fn cell(record: &MetadataRecord, label: Label) -> String {
    let s = &record.semantic;
    fn opt<V: ToString>(a: &Option<Annotated<V>>) -> String {
        a.as_ref().map(|a| a.value().to_string()).unwrap_or_default()
    }
    match label {
        Label::Name => record.clip_id.to_string(),
        Label::SceneNum => opt(&s.scene_num),
        Label::ShotNum => opt(&s.shot_num),
        Label::TakeNum => opt(&s.take_num),
        Label::CameraMove => opt(&s.camera_move),
        Label::ShotType => opt(&s.shot_type),
        Label::Time => opt(&s.time),
        Label::SceneType => opt(&s.scene_type),
        Label::Places => opt(&s.places),
        Label::ActorPid => join(s.actors.iter().map(|a| a.value().pid())),
        Label::ObjectType => join(s.objects.iter().map(|a| a.value().as_str())),
        Label::Notes => record.notes.clone().unwrap_or_default(),
    }
}

fn join<'a>(items: impl Iterator<Item = &'a str>) -> String {
    items.collect::<Vec<_>>().join(&LIST_SEPARATOR.to_string())
}

/// Writes the value of `text` into `record` under `label`.
///
/// Imported values are attributed to [`Provenance::Manual`] at confidence 1:
/// interchange files carry no confidence. A cell that does not parse leaves
/// the field absent and returns the reason, for the caller to note.
pub fn assign(record: &mut MetadataRecord, label: Label, text: &str) -> Result<(), String> {
    let s = &mut record.semantic;
    if text.is_empty() {
        clear(s, label);
        if label == Label::Notes {
            record.notes = None;
        }
        return Ok(());
    }
    fn manual<V>(v: V) -> Annotated<V> {
        Annotated::certain(v, Provenance::Manual)
    }
    fn int(text: &str) -> Result<u32, String> {
        if text.bytes().all(|b| b.is_ascii_digit()) {
            text.parse().map_err(|_| format!("{text:?} out of range"))
        } else {
            Err(format!("{text:?} is not an integer"))
        }
    }
    let result = match label {
        Label::Name => ClipId::new(text).map(|id| record.clip_id = id).map_err(|e| e.to_string()),
        Label::SceneNum => int(text).map(|v| s.scene_num = Some(manual(v))),
        Label::ShotNum => int(text).map(|v| s.shot_num = Some(manual(v))),
        Label::TakeNum => int(text).map(|v| s.take_num = Some(manual(v))),
        Label::CameraMove => text.parse().map(|v| s.camera_move = Some(manual(v))).map_err(|e| e.to_string()),
        Label::ShotType => text.parse().map(|v| s.shot_type = Some(manual(v))).map_err(|e| e.to_string()),
        Label::Time => text.parse().map(|v| s.time = Some(manual(v))).map_err(|e| e.to_string()),
        Label::SceneType => text.parse().map(|v| s.scene_type = Some(manual(v))).map_err(|e| e.to_string()),
        Label::Places => Category::new(text).map(|v| s.places = Some(manual(v))).map_err(|e| e.to_string()),
        Label::ActorPid => text
            .split(LIST_SEPARATOR)
            .map(|p| ActorPid::new(p, None).map(manual))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| s.actors = v)
            .map_err(|e| e.to_string()),
        Label::ObjectType => text
            .split(LIST_SEPARATOR)
            .map(|c| Category::new(c).map(manual))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| s.objects = v)
            .map_err(|e| e.to_string()),
        Label::Notes => {
            record.notes = Some(text.to_string());
            Ok(())
        }
    };
    if result.is_err() {
        clear(&mut record.semantic, label);
    }
    result
}

fn clear(s: &mut SemanticFields, label: Label) {
    match label {
        Label::SceneNum => s.scene_num = None,
        Label::ShotNum => s.shot_num = None,
        Label::TakeNum => s.take_num = None,
        Label::CameraMove => s.camera_move = None,
        Label::ShotType => s.shot_type = None,
        Label::Time => s.time = None,
        Label::SceneType => s.scene_type = None,
        Label::Places => s.places = None,
        Label::ActorPid => s.actors.clear(),
        Label::ObjectType => s.objects.clear(),
        Label::Name | Label::Notes => {}
    }
}

/// Output columns for a label selection: `Name` first, then the selection in order.
pub fn columns(selected: &[Label]) -> Vec<Label> {
    let mut cols = vec![Label::Name];
    cols.extend(selected.iter().copied().filter(|l| *l != Label::Name));
    cols
}

/// The record as a row of cells over `columns`.
pub fn project(record: &MetadataRecord, columns: &[Label]) -> Vec<String> {
    columns.iter().map(|l| cell(record, *l)).collect()
}

/// Copy of `record` with every semantic field outside `selected` cleared
/// (`Notes` cleared unless selected).
pub fn restrict(record: &MetadataRecord, selected: &[Label]) -> MetadataRecord {
    let mut out = record.clone();
    for label in Label::SEMANTIC {
        if !selected.contains(&label) {
            clear(&mut out.semantic, label);
        }
    }
    if !selected.contains(&Label::Notes) {
        out.notes = None;
    }
    out
}
