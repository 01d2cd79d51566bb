//! Per-label accuracy of a predicted catalog against a truth catalog.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use cinemeta_core::metadata::{Annotated, MetadataRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction and truth catalogs share no clip ids")]
    EmptyIntersection,
}

/// Report labels, in table order.
pub const EVAL_LABELS: [&str; 8] = ["SceneNum", "ShotNum", "TakeNum", "Time", "PID", "ShotScale", "CameraMove", "SceneType"];

/// Scored only on request, by set overlap.
pub const OBJECT_LABEL: &str = "ObjectType";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Count {
    pub correct: u64,
    pub total: u64,
}

impl Count {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += u64::from(correct);
    }

    /// `correct / total` in thousandths, rounded half up, in integers.
    pub fn accuracy_milli(&self) -> u64 {
        (2 * self.correct * 1000 + self.total) / (2 * self.total)
    }

    /// Three-decimal text of the accuracy.
    pub fn accuracy_text(&self) -> String {
        let m = self.accuracy_milli();
        format!("{}.{:03}", m / 1000, m % 1000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    /// Size of the clip-id intersection.
    pub clips: usize,
    /// Labels with at least one truth value, in table order.
    pub counts: Vec<(&'static str, Count)>,
}

fn same<V: PartialEq>(pred: &Option<Annotated<V>>, truth: &Option<Annotated<V>>, count: &mut Count) {
    if let Some(t) = truth {
        count.add(pred.as_ref().is_some_and(|p| p.value() == t.value()));
    }
}

/// Scores the clips present in both catalogs, in truth order. A truth value
/// with no prediction counts as wrong; clips without a truth value for a
/// label do not count towards it.
pub fn evaluate(pred: &[MetadataRecord], truth: &[MetadataRecord], include_objects: bool) -> Result<EvalReport, EvalError> {
    let by_id: HashMap<&str, &MetadataRecord> = pred.iter().map(|r| (r.clip_id.as_str(), r)).collect();
    let mut counts = [Count::default(); 9];
    let mut clips = 0;
    for t in truth {
        let Some(p) = by_id.get(t.clip_id.as_str()) else { continue };
        clips += 1;
        let (p, t) = (&p.semantic, &t.semantic);
        same(&p.scene_num, &t.scene_num, &mut counts[0]);
        same(&p.shot_num, &t.shot_num, &mut counts[1]);
        same(&p.take_num, &t.take_num, &mut counts[2]);
        same(&p.time, &t.time, &mut counts[3]);
        if !t.actors.is_empty() {
            let predicted: BTreeSet<&str> = p.actors.iter().map(|a| a.value().pid()).collect();
            counts[4].add(t.actors.iter().all(|a| predicted.contains(a.value().pid())));
        }
        same(&p.shot_type, &t.shot_type, &mut counts[5]);
        same(&p.camera_move, &t.camera_move, &mut counts[6]);
        same(&p.scene_type, &t.scene_type, &mut counts[7]);
        if include_objects {
            let predicted: BTreeSet<&str> = p.objects.iter().map(|o| o.value().as_str()).collect();
            for o in &t.objects {
                counts[8].add(predicted.contains(o.value().as_str()));
            }
        }
    }
    if clips == 0 {
        return Err(EvalError::EmptyIntersection);
    }
    let labels = EVAL_LABELS.iter().chain(std::iter::once(&OBJECT_LABEL));
    let counts = labels.zip(counts).filter(|(_, c)| c.total > 0).map(|(l, c)| (*l, c)).collect();
    Ok(EvalReport { clips, counts })
}

#[derive(Serialize)]
struct JsonLabel<'a> {
    label: &'a str,
    correct: u64,
    total: u64,
    accuracy: f64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    clips: usize,
    labels: Vec<JsonLabel<'a>>,
}

impl EvalReport {
    pub fn count(&self, label: &str) -> Option<Count> {
        self.counts.iter().find(|(l, _)| *l == label).map(|(_, c)| *c)
    }

    /// Rows of four labels: a tab-led header line, then `Accuracy` and the
    /// three-decimal values.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for row in self.counts.chunks(4) {
            for (label, _) in row {
                out.push('\t');
                out.push_str(label);
            }
            out.push('\n');
            out.push_str("Accuracy");
            for (_, c) in row {
                out.push('\t');
                out.push_str(&c.accuracy_text());
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let report = JsonReport {
            clips: self.clips,
            labels: self
                .counts
                .iter()
                .map(|(label, c)| JsonLabel { label, correct: c.correct, total: c.total, accuracy: c.correct as f64 / c.total as f64 })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cinemeta_core::metadata::{ActorPid, BasicMetadata, CameraMove, ClipId, Provenance};

    fn record(id: usize, scene: Option<u32>) -> MetadataRecord {
        let mut r = MetadataRecord::new(ClipId::new(format!("c{id:03}")).unwrap(), BasicMetadata::with_fps(24.0).unwrap());
        r.semantic.scene_num = scene.map(|s| Annotated::certain(s, Provenance::Manual));
        r
    }

    #[test]
    fn rounding_is_half_up_on_exact_counts() {
        let c = |correct, total| Count { correct, total }.accuracy_text();
        assert_eq!(c(68, 128), "0.531");
        assert_eq!(c(1, 8), "0.125");
        assert_eq!(c(1, 16), "0.063");
        assert_eq!(c(2, 3), "0.667");
        assert_eq!(c(0, 5), "0.000");
        assert_eq!(c(5, 5), "1.000");
        assert_eq!(c(1, 2000), "0.001");
        assert_eq!(c(1, 2001), "0.000");
    }

    #[test]
    fn absent_prediction_is_wrong_and_absent_truth_is_skipped() {
        let truth = vec![record(1, Some(3)), record(2, Some(4)), record(3, None)];
        let pred = vec![record(1, Some(3)), record(2, None), record(3, Some(9))];
        let report = evaluate(&pred, &truth, false).unwrap();
        assert_eq!(report.clips, 3);
        assert_eq!(report.count("SceneNum"), Some(Count { correct: 1, total: 2 }));
        assert_eq!(report.count("Time"), None);
        assert_eq!(report.table(), "\tSceneNum\nAccuracy\t0.500\n");
    }

    #[test]
    fn pid_needs_every_truth_actor() {
        let pid = |p: &str| Annotated::estimated(ActorPid::new(p, None).unwrap(), 0.9, Provenance::Annotator);
        let mut t1 = record(1, None);
        t1.semantic.actors = vec![pid("a")];
        let mut t2 = record(2, None);
        t2.semantic.actors = vec![pid("a"), pid("b")];
        let mut p1 = record(1, None);
        p1.semantic.actors = vec![pid("b"), pid("a")];
        let mut p2 = record(2, None);
        p2.semantic.actors = vec![pid("a")];
        let report = evaluate(&[p1, p2], &[t1, t2], false).unwrap();
        assert_eq!(report.count("PID"), Some(Count { correct: 1, total: 2 }));
    }

    #[test]
    fn disjoint_catalogs() {
        assert_eq!(evaluate(&[record(1, Some(1))], &[record(2, Some(1))], false), Err(EvalError::EmptyIntersection));
    }

    #[test]
    fn layout_wraps_after_four_labels() {
        let mut t = record(1, Some(1));
        t.semantic.shot_num = Some(Annotated::certain(2, Provenance::Manual));
        t.semantic.take_num = Some(Annotated::certain(3, Provenance::Manual));
        t.semantic.camera_move = Some(Annotated::certain(CameraMove::Pan, Provenance::Manual));
        t.semantic.time = Some(Annotated::certain(cinemeta_core::metadata::DayNight::Day, Provenance::Manual));
        let report = evaluate(std::slice::from_ref(&t), std::slice::from_ref(&t), false).unwrap();
        assert_eq!(
            report.table(),
            "\tSceneNum\tShotNum\tTakeNum\tTime\nAccuracy\t1.000\t1.000\t1.000\t1.000\n\tCameraMove\nAccuracy\t1.000\n"
        );
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["clips"], 1);
        assert_eq!(json["labels"][4]["label"], "CameraMove");
    }
}
