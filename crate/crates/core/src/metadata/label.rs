use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetadataError;

/// Column / field names used by profiles, exports and query predicates.
///
/// The ten semantic labels follow the cinematography label table; `Name` (the
/// clip id) and `Notes` are the two bookkeeping columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Label {
    Name,
    SceneNum,
    ShotNum,
    TakeNum,
    CameraMove,
    ShotType,
    ActorPid,
    Time,
    SceneType,
    Places,
    ObjectType,
    Notes,
}

impl Label {
    pub const SEMANTIC: [Label; 10] = [
        Label::SceneNum,
        Label::ShotNum,
        Label::TakeNum,
        Label::CameraMove,
        Label::ShotType,
        Label::ActorPid,
        Label::Time,
        Label::SceneType,
        Label::Places,
        Label::ObjectType,
    ];

    pub const ALL: [Label; 12] = [
        Label::Name,
        Label::SceneNum,
        Label::ShotNum,
        Label::TakeNum,
        Label::CameraMove,
        Label::ShotType,
        Label::ActorPid,
        Label::Time,
        Label::SceneType,
        Label::Places,
        Label::ObjectType,
        Label::Notes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Name => "Name",
            Label::SceneNum => "SceneNum",
            Label::ShotNum => "ShotNum",
            Label::TakeNum => "TakeNum",
            Label::CameraMove => "CameraMove",
            Label::ShotType => "ShotType",
            Label::ActorPid => "ActorPID",
            Label::Time => "Time",
            Label::SceneType => "SceneType",
            Label::Places => "Places",
            Label::ObjectType => "ObjectType",
            Label::Notes => "Notes",
        }
    }

    /// Snake-case key of the field in the JSON sidecar.
    pub fn json_key(self) -> &'static str {
        match self {
            Label::Name => "clip_id",
            Label::SceneNum => "scene_num",
            Label::ShotNum => "shot_num",
            Label::TakeNum => "take_num",
            Label::CameraMove => "camera_move",
            Label::ShotType => "shot_type",
            Label::ActorPid => "actor_pid",
            Label::Time => "time",
            Label::SceneType => "scene_type",
            Label::Places => "places",
            Label::ObjectType => "object_type",
            Label::Notes => "notes",
        }
    }

    pub fn is_semantic(self) -> bool {
        !matches!(self, Label::Name | Label::Notes)
    }

    /// Fields holding a list of values rather than a single one.
    pub fn is_list(self) -> bool {
        matches!(self, Label::ActorPid | Label::ObjectType)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = MetadataError;

    /// Accepts the canonical name, the JSON key, and the `PID` / `Actor PID` /
    /// `ShotScale` spellings used in evaluation tables.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let alias = match s {
            "PID" | "Actor PID" | "ActorPid" => Some(Label::ActorPid),
            "ShotScale" => Some(Label::ShotType),
            "notes" => Some(Label::Notes),
            _ => None,
        };
        alias
            .or_else(|| Label::ALL.into_iter().find(|l| l.as_str() == s || l.json_key() == s))
            .ok_or_else(|| MetadataError::InvalidValue { kind: "label", value: s.into() })
    }
}

impl TryFrom<String> for Label {
    type Error = MetadataError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Label> for String {
    fn from(l: Label) -> Self {
        l.as_str().to_string()
    }
}
