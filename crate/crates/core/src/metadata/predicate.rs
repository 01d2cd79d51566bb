//! `Field=Value(,Field=Value)*` conjunctive filters over semantic fields.

use std::fmt;

use thiserror::Error;

use super::{CameraMove, DayNight, Label, MetadataRecord, SceneType, ShotType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("bad value {value:?} for {field}")]
    BadValue { field: String, value: String },
    #[error("malformed clause {0:?}: expected Field=Value")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseValue {
    Int(u32),
    Move(CameraMove),
    Shot(ShotType),
    Time(DayNight),
    Scene(SceneType),
    /// Actor pid, place or object category.
    Text(String),
}

impl fmt::Display for ClauseValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClauseValue::Int(v) => write!(f, "{v}"),
            ClauseValue::Move(v) => write!(f, "{v}"),
            ClauseValue::Shot(v) => write!(f, "{v}"),
            ClauseValue::Time(v) => write!(f, "{v}"),
            ClauseValue::Scene(v) => write!(f, "{v}"),
            ClauseValue::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub label: Label,
    pub value: ClauseValue,
}

impl Clause {
    /// Absent optional fields never match; list fields test membership.
    pub fn matches(&self, record: &MetadataRecord) -> bool {
        let s = &record.semantic;
        match (&self.value, self.label) {
            (ClauseValue::Int(v), Label::SceneNum) => s.scene_num.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Int(v), Label::ShotNum) => s.shot_num.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Int(v), Label::TakeNum) => s.take_num.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Move(v), _) => s.camera_move.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Shot(v), _) => s.shot_type.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Time(v), _) => s.time.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Scene(v), _) => s.scene_type.as_ref().is_some_and(|a| a.value() == v),
            (ClauseValue::Text(v), Label::ActorPid) => s.actors.iter().any(|a| a.value().pid() == v),
            (ClauseValue::Text(v), Label::Places) => s.places.as_ref().is_some_and(|a| a.value().as_str() == v),
            (ClauseValue::Text(v), Label::ObjectType) => s.objects.iter().any(|a| a.value().as_str() == v),
            _ => false,
        }
    }
}

/// Conjunction of clauses; the empty predicate matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryPredicate {
    clauses: Vec<Clause>,
}

impl QueryPredicate {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Self { clauses }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn matches(&self, record: &MetadataRecord) -> bool {
        self.clauses.iter().all(|c| c.matches(record))
    }
}

impl fmt::Display for QueryPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", c.label, c.value)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for QueryPredicate {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_predicate(s)
    }
}

/// Parses `Field=Value(,Field=Value)*`. Blank input yields the empty predicate.
pub fn parse_predicate(text: &str) -> Result<QueryPredicate, PredicateError> {
    if text.trim().is_empty() {
        return Ok(QueryPredicate::default());
    }
    let clauses = text.split(',').map(parse_clause).collect::<Result<Vec<_>, _>>()?;
    Ok(QueryPredicate { clauses })
}

fn parse_clause(raw: &str) -> Result<Clause, PredicateError> {
    let (field, value) = raw.split_once('=').ok_or_else(|| PredicateError::Syntax(raw.to_string()))?;
    let (field, value) = (field.trim(), value.trim());
    let label = field.parse::<Label>().ok().filter(|l| l.is_semantic()).ok_or_else(|| PredicateError::UnknownField(field.to_string()))?;
    let bad = || PredicateError::BadValue { field: field.to_string(), value: value.to_string() };
    let value = match label {
        Label::SceneNum | Label::ShotNum | Label::TakeNum => {
            if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            ClauseValue::Int(value.parse().map_err(|_| bad())?)
        }
        Label::CameraMove => ClauseValue::Move(value.parse().map_err(|_| bad())?),
        Label::ShotType => ClauseValue::Shot(value.parse().map_err(|_| bad())?),
        Label::Time => ClauseValue::Time(value.parse().map_err(|_| bad())?),
        Label::SceneType => ClauseValue::Scene(value.parse().map_err(|_| bad())?),
        Label::ActorPid | Label::Places | Label::ObjectType => {
            if value.is_empty() {
                return Err(bad());
            }
            ClauseValue::Text(value.to_string())
        }
        Label::Name | Label::Notes => unreachable!("filtered above"),
    };
    Ok(Clause { label, value })
}
