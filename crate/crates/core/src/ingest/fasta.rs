use std::collections::HashSet;

use crate::error::{Error, Result};

const ALPHABET: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

pub fn is_canonical_residue(b: u8) -> bool {
    ALPHABET.contains(&b)
}

/// How the record id is taken from a FASTA header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdRule {
    /// Text after '>' up to the first whitespace.
    #[default]
    FirstToken,
    /// Zero-based field of the '|'-separated header (GISAID exports carry the
    /// EPI accession in one of these fields).
    PipeField(usize),
}

impl IdRule {
    fn extract(self, header: &str) -> String {
        match self {
            IdRule::FirstToken => header.split_whitespace().next().unwrap_or("").to_string(),
            IdRule::PipeField(n) => header.split('|').nth(n).unwrap_or("").trim().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub id: String,
    pub sequence: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidReason {
    /// 1-based offset into the concatenated sequence.
    NonCanonical { offset: usize, residue: char },
    Empty,
    DuplicateId,
    MissingId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidRecord {
    pub id: String,
    /// Line of the header that opened the record.
    pub line: usize,
    pub reason: InvalidReason,
}

impl std::fmt::Display for InvalidRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.reason {
            InvalidReason::NonCanonical { offset, residue } => write!(
                f,
                "record '{}' (line {}): non-canonical residue '{}' at offset {}",
                self.id, self.line, residue, offset
            ),
            InvalidReason::Empty => write!(f, "record '{}' (line {}): empty sequence", self.id, self.line),
            InvalidReason::DuplicateId => {
                write!(f, "record '{}' (line {}): duplicate id", self.id, self.line)
            }
            InvalidReason::MissingId => write!(f, "record at line {}: empty header id", self.line),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FastaParse {
    pub records: Vec<FastaRecord>,
    pub invalid: Vec<InvalidRecord>,
}

/// Parses FASTA text. Records spanning several lines are concatenated,
/// uppercased and stripped of whitespace. Records with any residue outside the
/// 20-letter alphabet are moved to `invalid`.
pub fn parse_fasta(text: &str, rule: IdRule) -> Result<FastaParse> {
    let mut out = FastaParse::default();
    let mut seen = HashSet::new();
    let mut current: Option<(String, usize, String)> = None;

    let mut finish = |entry: Option<(String, usize, String)>, out: &mut FastaParse| {
        let Some((id, line, sequence)) = entry else {
            return;
        };
        let reason = if id.is_empty() {
            Some(InvalidReason::MissingId)
        } else if !seen.insert(id.clone()) {
            Some(InvalidReason::DuplicateId)
        } else if sequence.is_empty() {
            Some(InvalidReason::Empty)
        } else {
            sequence
                .bytes()
                .position(|b| !is_canonical_residue(b))
                .map(|pos| InvalidReason::NonCanonical {
                    offset: pos + 1,
                    residue: sequence[pos..].chars().next().unwrap_or('?'),
                })
        };
        match reason {
            Some(reason) => out.invalid.push(InvalidRecord { id, line, reason }),
            None => out.records.push(FastaRecord { id, sequence }),
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            finish(current.take(), &mut out);
            current = Some((rule.extract(header), line_no, String::new()));
        } else if line.trim().is_empty() || line.starts_with(';') {
            continue;
        } else {
            let Some((_, _, seq)) = current.as_mut() else {
                return Err(Error::Parse {
                    line: line_no,
                    message: "sequence data before any '>' header".into(),
                });
            };
            seq.extend(
                line.chars()
                    .filter(|c| !c.is_whitespace())
                    .flat_map(char::to_uppercase),
            );
        }
    }
    finish(current.take(), &mut out);
    Ok(out)
}

/// Writes records as FASTA with 60-column sequence lines.
pub fn serialize_fasta(records: &[FastaRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push('>');
        out.push_str(&rec.id);
        out.push('\n');
        for chunk in rec.sequence.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).unwrap_or_default());
            out.push('\n');
        }
    }
    out
}
