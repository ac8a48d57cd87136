use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::SpikeRecord;

/// Field order of the covariate block.
pub const CODEBOOK_FIELDS: [&str; 4] = ["gender", "age", "clade", "lineage"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgeMode {
    /// One category per distinct integer age.
    #[default]
    Exact,
    /// Ten-year bins, e.g. "50-59".
    Decade,
}

impl AgeMode {
    fn category(self, age: i64) -> String {
        match self {
            AgeMode::Exact => age.to_string(),
            AgeMode::Decade => {
                let lo = age.div_euclid(10) * 10;
                format!("{lo}-{}", lo + 9)
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgeMode::Exact => "exact",
            AgeMode::Decade => "decade",
        }
    }
}

impl FromStr for AgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(AgeMode::Exact),
            "decade" => Ok(AgeMode::Decade),
            other => Err(Error::invalid(format!("unknown age mode '{other}'"))),
        }
    }
}

/// Ordered categories per covariate field, fitted once and then frozen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CovariateCodebook {
    pub age_mode: AgeMode,
    fields: [Vec<String>; 4],
}

fn field_values(record: &SpikeRecord, age_mode: AgeMode) -> [String; 4] {
    [
        record.gender.to_string(),
        age_mode.category(record.age),
        record.clade.clone(),
        record.lineage.clone(),
    ]
}

impl CovariateCodebook {
    pub fn fit(records: &[SpikeRecord], age_mode: AgeMode) -> Self {
        let mut sets: [BTreeSet<String>; 4] = Default::default();
        for r in records {
            for (set, value) in sets.iter_mut().zip(field_values(r, age_mode)) {
                set.insert(value);
            }
        }
        CovariateCodebook {
            age_mode,
            fields: sets.map(|s| s.into_iter().collect()),
        }
    }

    pub fn categories(&self, field: &str) -> Option<&[String]> {
        let i = CODEBOOK_FIELDS.iter().position(|f| *f == field)?;
        Some(&self.fields[i])
    }

    pub fn width(&self) -> usize {
        self.fields.iter().map(Vec::len).sum()
    }

    /// Concatenated one-hot blocks; a value absent from the codebook yields an
    /// all-zero block for its field.
    pub fn encode(&self, record: &SpikeRecord) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for (cats, value) in self.fields.iter().zip(field_values(record, self.age_mode)) {
            let hit = cats.binary_search(&value).ok();
            out.extend((0..cats.len()).map(|i| if Some(i) == hit { 1.0 } else { 0.0 }));
        }
        out
    }

    /// `field<TAB>category` rows after an `age_mode` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("age_mode\t{}\nfield\tcategory\n", self.age_mode.as_str());
        for (name, cats) in CODEBOOK_FIELDS.iter().zip(&self.fields) {
            for c in cats {
                let _ = writeln!(out, "{name}\t{c}");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, message: &str| Error::Parse {
            line: line + 1,
            message: message.into(),
        };
        let age_mode = match lines.next() {
            Some((_, l)) if l.starts_with("age_mode\t") => l["age_mode\t".len()..].parse()?,
            Some((i, _)) => return Err(bad(i, "expected age_mode line")),
            None => return Err(bad(0, "empty codebook")),
        };
        match lines.next() {
            Some((_, "field\tcategory")) => {}
            Some((i, _)) => return Err(bad(i, "expected 'field<TAB>category' header")),
            None => return Err(bad(1, "missing header")),
        }
        let mut fields: [Vec<String>; 4] = Default::default();
        for (i, line) in lines {
            let (field, cat) = line
                .split_once('\t')
                .ok_or_else(|| bad(i, "expected two columns"))?;
            let slot = CODEBOOK_FIELDS
                .iter()
                .position(|f| *f == field)
                .ok_or_else(|| bad(i, "unknown field"))?;
            fields[slot].push(cat.to_string());
        }
        for cats in &fields {
            if cats.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format("codebook categories must be sorted and unique".into()));
            }
        }
        Ok(CovariateCodebook { age_mode, fields })
    }
}
