//! RFC 4180 CSV with CRLF row terminators, as imported by DaVinci Resolve.

use super::{table, FormatError};
use crate::metadata::{BasicMetadata, ClipId, Label, MetadataRecord};
use crate::profile::UserProfile;

fn needs_quotes(cell: &str) -> bool {
    cell.contains([',', '"', '\r', '\n'])
}

fn push_cell(out: &mut String, cell: &str) {
    if needs_quotes(cell) {
        out.push('"');
        out.push_str(&cell.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(cell);
    }
}

pub fn write_row(out: &mut String, cells: &[String]) {
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_cell(out, cell);
    }
    out.push_str("\r\n");
}

pub fn write_csv(records: &[MetadataRecord], profile: &UserProfile) -> Result<String, FormatError> {
    if profile.selected_labels().is_empty() {
        return Err(FormatError::EmptySelection);
    }
    let columns = profile.columns();
    let mut out = String::new();
    let header: Vec<String> = columns.iter().map(|l| profile.header(*l).to_string()).collect();
    write_row(&mut out, &header);
    for r in records {
        write_row(&mut out, &table::project(r, &columns));
    }
    Ok(out)
}

/// Splits CSV text into rows of cells, each tagged with the line it starts on.
/// Accepts CRLF or bare LF terminators.
pub fn parse_rows(text: &str) -> Result<Vec<(usize, Vec<String>)>, FormatError> {
    let syntax = |line: usize, message: &str| FormatError::CsvSyntax { line, message: message.to_string() };
    let mut rows = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while chars.peek().is_some() {
        let row_line = line;
        let mut cells = Vec::new();
        loop {
            let mut cell = String::new();
            if chars.peek() == Some(&'"') {
                let quote_line = line;
                chars.next();
                loop {
                    match chars.next() {
                        None => return Err(syntax(quote_line, "unbalanced quote")),
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            cell.push('"');
                        }
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            cell.push(c);
                        }
                    }
                }
                match chars.peek() {
                    None | Some(',') | Some('\r') | Some('\n') => {}
                    Some(_) => return Err(syntax(line, "text after closing quote")),
                }
            } else {
                while let Some(&c) = chars.peek() {
                    match c {
                        ',' | '\r' | '\n' => break,
                        '"' => return Err(syntax(line, "quote inside unquoted field")),
                        _ => {
                            cell.push(c);
                            chars.next();
                        }
                    }
                }
            }
            cells.push(cell);
            match chars.next() {
                Some(',') => continue,
                Some('\r') => {
                    if chars.next() != Some('\n') {
                        return Err(syntax(line, "bare carriage return"));
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("cell loops stop only at delimiters"),
            }
        }
        rows.push((row_line, cells));
    }
    Ok(rows)
}

/// Inverse of [`write_csv`] for the profile's columns. Unparseable cells leave
/// the field absent and are recorded in the record's notes.
pub fn parse_csv(text: &str, profile: &UserProfile) -> Result<Vec<MetadataRecord>, FormatError> {
    let rows = parse_rows(text)?;
    let columns = profile.columns();
    let expected: Vec<String> = columns.iter().map(|l| profile.header(*l).to_string()).collect();
    let mut iter = rows.into_iter();
    let header = iter.next().map(|(_, h)| h).unwrap_or_default();
    if header != expected {
        return Err(FormatError::HeaderMismatch { expected: expected.join(","), got: header.join(",") });
    }
    let fps = profile.fps().unwrap_or(super::DEFAULT_IMPORT_FPS);
    let mut out = Vec::new();
    for (line, cells) in iter {
        if cells.len() != columns.len() {
            return Err(FormatError::RowArity { line, expected: columns.len(), got: cells.len() });
        }
        let clip_id = ClipId::new(cells[0].clone()).map_err(|e| FormatError::BadType(format!("line {line}: {e}")))?;
        let basic = BasicMetadata::with_fps(fps).map_err(|e| FormatError::BadType(e.to_string()))?;
        let mut record = MetadataRecord::new(clip_id, basic);
        let mut problems = Vec::new();
        for (label, cell) in columns.iter().zip(&cells).skip(1) {
            if let Err(reason) = table::assign(&mut record, *label, cell) {
                problems.push(format!("{label} {reason}"));
            }
        }
        for p in problems {
            record.push_note(&p);
        }
        debug_assert!(columns[0] == Label::Name);
        out.push(record);
    }
    Ok(out)
}
