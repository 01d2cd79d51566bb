//! Avid Log Exchange: `Heading` / `Column` / `Data` sections, tab-delimited.

use std::fmt::Write as _;

use super::{table, FormatError};
use crate::metadata::{BasicMetadata, ClipId, Label, MetadataRecord};
use crate::profile::UserProfile;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AleDocument {
    pub heading: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl AleDocument {
    pub fn heading_value(&self, key: &str) -> Option<&str> {
        self.heading.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Canonical text: LF endings, one blank line between sections.
    pub fn to_text(&self) -> Result<String, FormatError> {
        let check = |cell: &str, what: &str| {
            if cell.contains(|c: char| c.is_control()) {
                Err(FormatError::CellDelimiter(format!("{what} {cell:?}")))
            } else {
                Ok(())
            }
        };
        let mut out = String::from("Heading\n");
        for (k, v) in &self.heading {
            check(k, "heading key")?;
            check(v, "heading value")?;
            let _ = writeln!(out, "{k}\t{v}");
        }
        out.push_str("\nColumn\n");
        for c in &self.columns {
            check(c, "column")?;
        }
        out.push_str(&self.columns.join("\t"));
        out.push_str("\n\nData\n");
        for row in &self.rows {
            if row.len() != self.columns.len() {
                return Err(FormatError::RowArity { line: 0, expected: self.columns.len(), got: row.len() });
            }
            for cell in row {
                check(cell, "cell")?;
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Heading,
    Column,
    Columns,
    Data,
}

/// Parses ALE text. Blank lines between or inside sections are skipped.
pub fn parse_ale(text: &str) -> Result<AleDocument, FormatError> {
    let mut doc = AleDocument::default();
    let mut section = Section::Start;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if line.contains(|c: char| c.is_control() && c != '\t') {
            return Err(FormatError::ControlChar { line: line_no });
        }
        match (section, line.trim()) {
            (Section::Start, "Heading") => section = Section::Heading,
            (Section::Start, _) => return Err(FormatError::MissingSection("Heading".into())),
            (Section::Heading, "Column") => section = Section::Column,
            (Section::Heading, "Data") => return Err(FormatError::MissingSection("Column".into())),
            (Section::Heading, _) => {
                let (k, v) = line.split_once('\t').ok_or(FormatError::RowArity { line: line_no, expected: 2, got: 1 })?;
                if v.contains('\t') {
                    return Err(FormatError::RowArity { line: line_no, expected: 2, got: line.split('\t').count() });
                }
                doc.heading.push((k.to_string(), v.to_string()));
            }
            (Section::Column, _) => {
                doc.columns = line.split('\t').map(str::to_string).collect();
                section = Section::Columns;
            }
            (Section::Columns, "Data") => section = Section::Data,
            (Section::Columns, _) => return Err(FormatError::MissingSection("Data".into())),
            (Section::Data, _) => {
                let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
                if cells.len() != doc.columns.len() {
                    return Err(FormatError::RowArity { line: line_no, expected: doc.columns.len(), got: cells.len() });
                }
                doc.rows.push(cells);
            }
        }
    }
    match section {
        Section::Start => Err(FormatError::MissingSection("Heading".into())),
        Section::Heading => Err(FormatError::MissingSection("Column".into())),
        Section::Column | Section::Columns => Err(FormatError::MissingSection("Data".into())),
        Section::Data => Ok(doc),
    }
}

/// Projects records through the profile into an ALE document.
pub fn ale_document(records: &[MetadataRecord], profile: &UserProfile) -> AleDocument {
    let columns = profile.columns();
    let mut heading =
        vec![("FIELD_DELIM".to_string(), "TABS".to_string()), ("VIDEO_FORMAT".to_string(), profile.video_format().to_string())];
    if let Some(fps) = profile.fps().or_else(|| records.first().map(|r| r.basic.fps)) {
        heading.push(("FPS".to_string(), fps.to_string()));
    }
    AleDocument {
        heading,
        columns: columns.iter().map(|l| profile.header(*l).to_string()).collect(),
        rows: records.iter().map(|r| table::project(r, &columns)).collect(),
    }
}

/// Renders records as ALE text; absent values are empty cells.
pub fn write_ale(records: &[MetadataRecord], profile: &UserProfile) -> Result<String, FormatError> {
    if profile.selected_labels().is_empty() {
        return Err(FormatError::EmptySelection);
    }
    ale_document(records, profile).to_text()
}

/// Reads an ALE document back into records under the profile's column mapping.
///
/// Columns the profile does not know are kept in `extras` under `ale:<column>`.
/// Cells that fail to parse leave the field absent and add a note.
pub fn records_from_ale(doc: &AleDocument, profile: &UserProfile) -> Result<Vec<MetadataRecord>, FormatError> {
    let labels: Vec<Option<Label>> = doc.columns.iter().map(|c| profile.label_for_header(c)).collect();
    let name_col = labels
        .iter()
        .position(|l| *l == Some(Label::Name))
        .ok_or_else(|| FormatError::HeaderMismatch { expected: "Name".into(), got: doc.columns.join("\t") })?;
    let fps = doc
        .heading_value("FPS")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .or(profile.fps())
        .unwrap_or(super::DEFAULT_IMPORT_FPS);
    let mut out = Vec::with_capacity(doc.rows.len());
    for row in &doc.rows {
        let clip_id = ClipId::new(row[name_col].clone()).map_err(|e| FormatError::BadType(e.to_string()))?;
        let basic = BasicMetadata::with_fps(fps).map_err(|e| FormatError::BadType(e.to_string()))?;
        let mut record = MetadataRecord::new(clip_id, basic);
        let mut problems = Vec::new();
        for (i, cell) in row.iter().enumerate() {
            match labels[i] {
                Some(Label::Name) => {}
                Some(label) => {
                    if let Err(reason) = table::assign(&mut record, label, cell) {
                        problems.push(format!("{label} {reason}"));
                    }
                }
                None => {
                    record.extras.insert(format!("ale:{}", doc.columns[i]), cell.clone().into());
                }
            }
        }
        for p in problems {
            record.push_note(&p);
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{Annotated, Provenance};
    use crate::profile::OutputFormat;

    const SAMPLE: &str = "Heading\nFIELD_DELIM\tTABS\nFPS\t24\n\nColumn\nName\tScene\n\nData\nclip001\t12\n";

    #[test]
    fn parses_three_sections() {
        let doc = parse_ale(SAMPLE).unwrap();
        assert_eq!(doc.heading, vec![("FIELD_DELIM".into(), "TABS".into()), ("FPS".into(), "24".into())]);
        assert_eq!(doc.columns, vec!["Name", "Scene"]);
        assert_eq!(doc.rows, vec![vec!["clip001".to_string(), "12".to_string()]]);
        assert_eq!(doc.to_text().unwrap(), SAMPLE);
    }

    #[test]
    fn missing_sections_and_arity() {
        let no_column = "Heading\nFPS\t24\n\nData\nclip001\t12\n";
        assert_eq!(parse_ale(no_column), Err(FormatError::MissingSection("Column".into())));
        assert_eq!(parse_ale(""), Err(FormatError::MissingSection("Heading".into())));
        assert_eq!(parse_ale("Heading\n\nColumn\nName\n"), Err(FormatError::MissingSection("Data".into())));
        let arity = "Heading\n\nColumn\nName\tScene\n\nData\nclip001\n";
        assert_eq!(parse_ale(arity), Err(FormatError::RowArity { line: 7, expected: 2, got: 1 }));
        let ctrl = "Heading\n\nColumn\nName\n\nData\nclip\u{1}001\n";
        assert_eq!(parse_ale(ctrl), Err(FormatError::ControlChar { line: 7 }));
    }

    #[test]
    fn tolerates_extra_blank_lines_and_crlf() {
        let text = "Heading\r\n\r\nFIELD_DELIM\tTABS\r\n\r\n\r\nColumn\r\nName\r\n\r\n\r\nData\r\n\r\nc1\r\n";
        let doc = parse_ale(text).unwrap();
        assert_eq!(doc.rows, vec![vec!["c1".to_string()]]);
    }

    #[test]
    fn write_selected_scene_number() {
        let profile = UserProfile::new(vec![Label::SceneNum], OutputFormat::Ale).unwrap();
        let mut r = MetadataRecord::new(ClipId::new("clip001").unwrap(), BasicMetadata::with_fps(24.0).unwrap());
        r.semantic.scene_num = Some(Annotated::certain(12, Provenance::SlateOcr));
        let mut absent = r.clone();
        absent.clip_id = ClipId::new("clip002").unwrap();
        absent.semantic.scene_num = None;
        let text = write_ale(&[r, absent], &profile).unwrap();
        assert_eq!(
            text,
            "Heading\nFIELD_DELIM\tTABS\nVIDEO_FORMAT\t1080\nFPS\t24\n\nColumn\nName\tSceneNum\n\nData\nclip001\t12\nclip002\t\n"
        );
        let back = records_from_ale(&parse_ale(&text).unwrap(), &profile).unwrap();
        assert_eq!(back[0].semantic.scene_num.as_ref().map(|a| *a.value()), Some(12));
        assert!(back[1].semantic.scene_num.is_none());
    }

    #[test]
    fn notes_with_tabs_are_refused() {
        let profile = UserProfile::new(vec![Label::Notes], OutputFormat::Ale).unwrap();
        let mut r = MetadataRecord::new(ClipId::new("c1").unwrap(), BasicMetadata::with_fps(24.0).unwrap());
        r.notes = Some("a\tb".into());
        assert!(matches!(write_ale(&[r], &profile), Err(FormatError::CellDelimiter(_))));
    }

    #[test]
    fn unparseable_cell_becomes_note() {
        let profile = UserProfile::new(vec![Label::SceneNum], OutputFormat::Ale).unwrap();
        let doc = parse_ale("Heading\n\nColumn\nName\tSceneNum\tTracks\n\nData\nc1\t12A\tV1\n").unwrap();
        let recs = records_from_ale(&doc, &profile).unwrap();
        assert!(recs[0].semantic.scene_num.is_none());
        assert!(recs[0].notes.as_deref().unwrap().contains("12A"));
        assert_eq!(recs[0].extras["ale:Tracks"], "V1");
    }
}
