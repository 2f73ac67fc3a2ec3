//! Reader and writer for the M2 annotation format.
//!
//! ```text
//! S This are a test .
//! A 1 2|||SVA|||is|||REQUIRED|||-NONE-|||0
//!
//! ```
//!
//! `-NONE-` as a replacement stands for the empty string. `A -1 -1|||noop|||...`
//! declares an annotator with no edits.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::text::{Edit, GoldAnnotation, Sentence};

const FIELD_SEP: &str = "|||";
const EMPTY_REPLACEMENT: &str = "-NONE-";

/// One sentence block: the source tokens and its annotators, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Entry {
    pub source: Sentence,
    pub annotations: Vec<GoldAnnotation>,
}

#[derive(Debug, Error)]
pub enum M2Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> M2Error {
    M2Error::Malformed {
        line,
        message: message.into(),
    }
}

struct Block {
    source: Sentence,
    annotators: BTreeMap<u32, Vec<Edit>>,
}

impl Block {
    fn finish(self) -> M2Entry {
        let annotations = self
            .annotators
            .into_iter()
            .map(|(annotator_id, mut edits)| {
                // Stable: same-offset insertions keep file order.
                edits.sort_by_key(|e| (e.start, e.end));
                GoldAnnotation {
                    annotator_id,
                    edits,
                }
            })
            .collect();
        M2Entry {
            source: self.source,
            annotations,
        }
    }
}

/// Parses an M2 stream. Line numbers in errors are 1-based.
pub fn parse_m2<R: Read>(reader: R) -> Result<Vec<M2Entry>, M2Error> {
    let mut reader = BufReader::new(reader);
    let mut entries = Vec::new();
    let mut current: Option<Block> = None;
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf)
            .map_err(|_| malformed(line_no, "invalid UTF-8"))?
            .trim_end_matches(['\n', '\r']);

        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                entries.push(block.finish());
            }
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("S ")
            .or(if line == "S" { Some("") } else { None })
        {
            if let Some(block) = current.take() {
                entries.push(block.finish());
            }
            current = Some(Block {
                source: Sentence::from_tokenized(rest),
                annotators: BTreeMap::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| malformed(line_no, "annotation line before any sentence line"))?;
            let (annotator, edit) = parse_annotation(rest, line_no, block.source.len())?;
            let edits = block.annotators.entry(annotator).or_default();
            if let Some(edit) = edit {
                edits.push(edit);
            }
        } else {
            return Err(malformed(
                line_no,
                "expected a line starting with 'S ' or 'A '",
            ));
        }
    }
    if let Some(block) = current.take() {
        entries.push(block.finish());
    }
    Ok(entries)
}

pub fn parse_m2_str(text: &str) -> Result<Vec<M2Entry>, M2Error> {
    parse_m2(text.as_bytes())
}

fn parse_annotation(
    rest: &str,
    line: usize,
    sentence_len: usize,
) -> Result<(u32, Option<Edit>), M2Error> {
    let fields: Vec<&str> = rest.split(FIELD_SEP).collect();
    if fields.len() != 6 {
        return Err(malformed(
            line,
            format!("expected 6 '|||'-separated fields, found {}", fields.len()),
        ));
    }
    let annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("invalid annotator id {:?}", fields[5])))?;

    let mut offsets = fields[0].split_whitespace();
    let (start, end) = match (offsets.next(), offsets.next(), offsets.next()) {
        (Some(a), Some(b), None) => (a, b),
        _ => return Err(malformed(line, "expected '<start> <end>' offsets")),
    };
    let start: i64 = start
        .parse()
        .map_err(|_| malformed(line, format!("non-integer start offset {start:?}")))?;
    let end: i64 = end
        .parse()
        .map_err(|_| malformed(line, format!("non-integer end offset {end:?}")))?;

    if start == -1 && end == -1 {
        return Ok((annotator, None));
    }
    if start < 0 || end < 0 {
        return Err(malformed(
            line,
            "negative offsets are only valid as '-1 -1' (noop)",
        ));
    }
    if end < start {
        return Err(malformed(
            line,
            format!("end offset {end} precedes start {start}"),
        ));
    }
    let (start, end) = (start as usize, end as usize);
    if end > sentence_len {
        return Err(malformed(
            line,
            format!("span {start}..{end} exceeds sentence length {sentence_len}"),
        ));
    }
    let replacement = match fields[2].trim() {
        EMPTY_REPLACEMENT => String::new(),
        r => r.split_whitespace().collect::<Vec<_>>().join(" "),
    };
    // A trailing '|' would run into the next separator when written back.
    if replacement.ends_with('|') {
        return Err(malformed(line, "replacement ends with '|'"));
    }
    Ok((
        annotator,
        Some(Edit {
            start,
            end,
            replacement,
            type_label: fields[1].to_owned(),
        }),
    ))
}

/// Writes entries in M2 format. Each block is followed by one blank line.
pub fn write_m2<W: Write>(mut out: W, entries: &[M2Entry]) -> io::Result<()> {
    for entry in entries {
        out.write_all(b"S")?;
        for w in entry.source.words() {
            write!(out, " {w}")?;
        }
        out.write_all(b"\n")?;
        for ann in &entry.annotations {
            if ann.edits.is_empty() {
                writeln!(
                    out,
                    "A -1 -1{FIELD_SEP}noop{FIELD_SEP}{EMPTY_REPLACEMENT}{FIELD_SEP}REQUIRED{FIELD_SEP}-NONE-{FIELD_SEP}{}",
                    ann.annotator_id
                )?;
            }
            for e in &ann.edits {
                let rep = if e.replacement_tokens().is_empty() {
                    EMPTY_REPLACEMENT.to_owned()
                } else {
                    e.replacement_tokens().join(" ")
                };
                writeln!(
                    out,
                    "A {} {}{FIELD_SEP}{}{FIELD_SEP}{rep}{FIELD_SEP}REQUIRED{FIELD_SEP}-NONE-{FIELD_SEP}{}",
                    e.start, e.end, e.type_label, ann.annotator_id
                )?;
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_m2_string(entries: &[M2Entry]) -> String {
    let mut buf = Vec::new();
    write_m2(&mut buf, entries).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("M2 output is UTF-8")
}
