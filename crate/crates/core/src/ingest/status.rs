use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeverityLabel {
    Mild,
    Severe,
    Inconclusive,
    Unmapped,
}

impl SeverityLabel {
    pub fn is_trainable(self) -> bool {
        matches!(self, SeverityLabel::Mild | SeverityLabel::Severe)
    }

    /// Binary target: Mild is the positive class.
    pub fn binary(self) -> Option<u8> {
        match self {
            SeverityLabel::Mild => Some(1),
            SeverityLabel::Severe => Some(0),
            _ => None,
        }
    }

    pub fn from_binary(label: u8) -> Option<Self> {
        match label {
            1 => Some(SeverityLabel::Mild),
            0 => Some(SeverityLabel::Severe),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLabel::Mild => "Mild",
            SeverityLabel::Severe => "Severe",
            SeverityLabel::Inconclusive => "Inconclusive",
            SeverityLabel::Unmapped => "Unmapped",
        }
    }
}

impl fmt::Display for SeverityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeverityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mild" => Ok(SeverityLabel::Mild),
            "severe" => Ok(SeverityLabel::Severe),
            "inconclusive" => Ok(SeverityLabel::Inconclusive),
            "unmapped" | "" => Ok(SeverityLabel::Unmapped),
            other => Err(Error::invalid(format!("unknown severity label '{other}'"))),
        }
    }
}

/// Clinical status literals and their severity class, exactly as they appear
/// in the curated mapping table. "not hospitalized" is listed twice in the
/// source table; the duplicate is kept here once.
pub const STATUS_TERMS: [(&str, SeverityLabel); 31] = [
    ("not hospitalized", SeverityLabel::Mild),
    ("alive/not hospitalized", SeverityLabel::Mild),
    ("Asymptomatic", SeverityLabel::Mild),
    ("Home", SeverityLabel::Mild),
    ("Not Hospitalized.", SeverityLabel::Mild),
    ("mild symptomatic", SeverityLabel::Mild),
    ("Mild", SeverityLabel::Mild),
    ("Mild symptoms, not-hospitalized", SeverityLabel::Mild),
    ("No clinical signs", SeverityLabel::Mild),
    ("Not hospitalized", SeverityLabel::Mild),
    ("DEAD", SeverityLabel::Severe),
    ("Dead, hospitalized", SeverityLabel::Severe),
    ("Death", SeverityLabel::Severe),
    ("deceased 14/8", SeverityLabel::Severe),
    ("deceased 20/8", SeverityLabel::Severe),
    ("Decease", SeverityLabel::Severe),
    ("Deceased", SeverityLabel::Severe),
    ("Hospitalized (Intensive care unit)", SeverityLabel::Severe),
    ("Hospitalized, Live.", SeverityLabel::Severe),
    ("IC", SeverityLabel::Severe),
    ("Intensive Care", SeverityLabel::Severe),
    ("Intensive Care Unit", SeverityLabel::Severe),
    ("severe symptomatic, required IC", SeverityLabel::Severe),
    ("ALIVE", SeverityLabel::Inconclusive),
    ("Alive, hospitalized", SeverityLabel::Inconclusive),
    ("Emergency Care", SeverityLabel::Inconclusive),
    ("Hospitalized", SeverityLabel::Inconclusive),
    ("Inpatient", SeverityLabel::Inconclusive),
    ("Live", SeverityLabel::Inconclusive),
    ("moderate symptomatic, hospita", SeverityLabel::Inconclusive),
    ("Moderate", SeverityLabel::Inconclusive),
];

/// Lookup key: trimmed, lowercased, internal whitespace runs collapsed to one
/// space. No other normalization is applied.
pub fn status_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn table() -> &'static HashMap<String, SeverityLabel> {
    static TABLE: OnceLock<HashMap<String, SeverityLabel>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = HashMap::new();
        for (term, label) in STATUS_TERMS {
            let previous = map.insert(status_key(term), label);
            debug_assert!(previous.is_none_or(|p| p == label));
        }
        map
    })
}

pub fn normalize_status(status_text: &str) -> SeverityLabel {
    table()
        .get(&status_key(status_text))
        .copied()
        .unwrap_or(SeverityLabel::Unmapped)
}
