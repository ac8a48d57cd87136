use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::NaiveDate;

use super::fasta::{is_canonical_residue, FastaParse};
use super::metadata::RawMetadataRow;
use super::status::{normalize_status, SeverityLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            other => Err(Error::invalid(format!("unsupported gender value '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRecord {
    pub accession_id: String,
    pub sequence: String,
    pub age: i64,
    pub gender: Gender,
    pub clade: String,
    pub lineage: String,
    pub collection_date: String,
    pub country: Option<String>,
    pub label: SeverityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExclusionReason {
    MissingSequence,
    InvalidSequence,
    MissingMetadataRow,
    InconclusiveStatus,
    UnmappedStatus,
    MissingMetadata,
    UnsupportedGender,
    IncompleteDate,
}

impl ExclusionReason {
    pub const ALL: [ExclusionReason; 8] = [
        ExclusionReason::MissingSequence,
        ExclusionReason::InvalidSequence,
        ExclusionReason::MissingMetadataRow,
        ExclusionReason::InconclusiveStatus,
        ExclusionReason::UnmappedStatus,
        ExclusionReason::MissingMetadata,
        ExclusionReason::UnsupportedGender,
        ExclusionReason::IncompleteDate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::MissingSequence => "missing sequence",
            ExclusionReason::InvalidSequence => "invalid sequence",
            ExclusionReason::MissingMetadataRow => "missing metadata row",
            ExclusionReason::InconclusiveStatus => "inconclusive status",
            ExclusionReason::UnmappedStatus => "unmapped status",
            ExclusionReason::MissingMetadata => "missing metadata",
            ExclusionReason::UnsupportedGender => "unsupported gender value",
            ExclusionReason::IncompleteDate => "incomplete collection date",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionReport {
    pub joined: usize,
    pub retained: usize,
    pub excluded: Vec<(String, ExclusionReason)>,
}

impl ExclusionReport {
    pub fn counts(&self) -> BTreeMap<ExclusionReason, usize> {
        let mut counts: BTreeMap<_, _> = ExclusionReason::ALL.iter().map(|r| (*r, 0)).collect();
        for (_, reason) in &self.excluded {
            *counts.entry(*reason).or_default() += 1;
        }
        counts
    }

    pub fn count(&self, reason: ExclusionReason) -> usize {
        self.excluded.iter().filter(|(_, r)| *r == reason).count()
    }

    /// Summary table: `reason<TAB>count`, with joined/retained totals first.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("reason\tcount\n");
        let _ = writeln!(out, "joined\t{}", self.joined);
        let _ = writeln!(out, "retained\t{}", self.retained);
        for (reason, count) in self.counts() {
            let _ = writeln!(out, "{reason}\t{count}");
        }
        out
    }

    pub fn details_tsv(&self) -> String {
        let mut out = String::from("accession_id\treason\n");
        for (id, reason) in &self.excluded {
            let _ = writeln!(out, "{id}\t{reason}");
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct CohortBuild {
    pub records: Vec<SpikeRecord>,
    pub report: ExclusionReport,
}

fn complete_date(text: &str) -> bool {
    let t = text.trim();
    t.len() == 10 && NaiveDate::parse_from_str(t, "%Y-%m-%d").is_ok()
}

fn screen(row: &RawMetadataRow, sequence: &str) -> std::result::Result<SpikeRecord, ExclusionReason> {
    let label = normalize_status(&row.status_text);
    match label {
        SeverityLabel::Inconclusive => return Err(ExclusionReason::InconclusiveStatus),
        SeverityLabel::Unmapped => return Err(ExclusionReason::UnmappedStatus),
        SeverityLabel::Mild | SeverityLabel::Severe => {}
    }
    let (Some(age), Some(gender), Some(clade), Some(lineage), Some(date)) = (
        row.age,
        row.gender.as_deref(),
        row.clade.as_deref(),
        row.lineage.as_deref(),
        row.collection_date.as_deref(),
    ) else {
        return Err(ExclusionReason::MissingMetadata);
    };
    let gender = gender
        .parse::<Gender>()
        .map_err(|_| ExclusionReason::UnsupportedGender)?;
    if !complete_date(date) {
        return Err(ExclusionReason::IncompleteDate);
    }
    Ok(SpikeRecord {
        accession_id: row.accession_id.clone(),
        sequence: sequence.to_string(),
        age,
        gender,
        clade: clade.to_string(),
        lineage: lineage.to_string(),
        collection_date: date.trim().to_string(),
        country: row.country.clone(),
        label,
    })
}

/// Joins sequences and metadata on accession id and applies the inclusion
/// filters. Every id seen in either input is either retained or counted
/// under exactly one exclusion reason.
pub fn build_cohort(fasta: &FastaParse, metadata: &[RawMetadataRow]) -> CohortBuild {
    let sequences: HashMap<&str, &str> = fasta
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.sequence.as_str()))
        .collect();
    let invalid: HashSet<&str> = fasta
        .invalid
        .iter()
        .filter(|r| !r.id.is_empty() && !sequences.contains_key(r.id.as_str()))
        .map(|r| r.id.as_str())
        .collect();

    let mut build = CohortBuild::default();
    let mut with_metadata = HashSet::new();
    for row in metadata {
        with_metadata.insert(row.accession_id.as_str());
        let outcome = match sequences.get(row.accession_id.as_str()) {
            Some(seq) => screen(row, seq),
            None if invalid.contains(row.accession_id.as_str()) => {
                Err(ExclusionReason::InvalidSequence)
            }
            None => Err(ExclusionReason::MissingSequence),
        };
        match outcome {
            Ok(record) => build.records.push(record),
            Err(reason) => build.report.excluded.push((row.accession_id.clone(), reason)),
        }
    }
    let mut orphan_seen = HashSet::new();
    let orphans = fasta
        .records
        .iter()
        .map(|r| r.id.as_str())
        .chain(fasta.invalid.iter().map(|r| r.id.as_str()))
        .filter(|id| !id.is_empty() && !with_metadata.contains(id));
    for id in orphans {
        if orphan_seen.insert(id) {
            build
                .report
                .excluded
                .push((id.to_string(), ExclusionReason::MissingMetadataRow));
        }
    }
    build.report.retained = build.records.len();
    build.report.joined = build.report.retained + build.report.excluded.len();
    build
}

const COHORT_HEADER: &str =
    "accession_id\tlabel\tage\tgender\tclade\tlineage\tcollection_date\tcountry\tsequence";

pub fn write_cohort(records: &[SpikeRecord]) -> String {
    let mut out = String::from(COHORT_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.accession_id,
            r.label,
            r.age,
            r.gender,
            r.clade,
            r.lineage,
            r.collection_date,
            r.country.as_deref().unwrap_or(""),
            r.sequence
        );
    }
    out
}

/// Reads a cohort table written by [`write_cohort`]. The label column may be
/// empty (records awaiting prediction).
pub fn read_cohort(text: &str) -> Result<Vec<SpikeRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == COHORT_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected cohort header '{COHORT_HEADER}'"),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 9 {
            return Err(bad(format!("expected 9 columns, found {}", cells.len())));
        }
        let sequence = cells[8].trim().to_string();
        if sequence.is_empty() || !sequence.bytes().all(is_canonical_residue) {
            return Err(bad("sequence is empty or non-canonical".into()));
        }
        records.push(SpikeRecord {
            accession_id: cells[0].to_string(),
            label: cells[1].parse().map_err(|e: Error| bad(e.to_string()))?,
            age: cells[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid age '{}'", cells[2])))?,
            gender: cells[3].parse().map_err(|e: Error| bad(e.to_string()))?,
            clade: cells[4].to_string(),
            lineage: cells[5].to_string(),
            collection_date: cells[6].to_string(),
            country: Some(cells[7].to_string()).filter(|c| !c.is_empty()),
            sequence,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortStats {
    pub labels: Vec<(String, usize)>,
    pub genders: Vec<(String, usize)>,
    pub lineages: Vec<(String, usize)>,
    pub clades: Vec<(String, usize)>,
    pub mean_age: f64,
    pub mean_age_by_gender: Vec<(String, f64)>,
}

fn frequency<'a>(values: impl Iterator<Item = &'a str>) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut table: Vec<(String, usize)> =
        counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    table
}

fn mean_age<'a>(records: impl Iterator<Item = &'a SpikeRecord>) -> f64 {
    let (sum, n) = records.fold((0i64, 0usize), |(s, n), r| (s + r.age, n + 1));
    sum as f64 / n as f64
}

pub fn cohort_stats(records: &[SpikeRecord]) -> Result<CohortStats> {
    if records.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let genders = frequency(records.iter().map(|r| r.gender.as_str()));
    let mean_age_by_gender = genders
        .iter()
        .map(|(g, _)| {
            let m = mean_age(records.iter().filter(|r| r.gender.as_str() == g));
            (g.clone(), m)
        })
        .collect();
    Ok(CohortStats {
        labels: frequency(records.iter().map(|r| r.label.as_str())),
        genders,
        lineages: frequency(records.iter().map(|r| r.lineage.as_str())),
        clades: frequency(records.iter().map(|r| r.clade.as_str())),
        mean_age: mean_age(records.iter()),
        mean_age_by_gender,
    })
}

impl CohortStats {
    /// `table<TAB>category<TAB>value`; means to two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("table\tcategory\tvalue\n");
        for (name, table) in [
            ("label", &self.labels),
            ("gender", &self.genders),
            ("lineage", &self.lineages),
            ("clade", &self.clades),
        ] {
            for (k, v) in table {
                let _ = writeln!(out, "{name}\t{k}\t{v}");
            }
        }
        let _ = writeln!(out, "mean_age\toverall\t{:.2}", self.mean_age);
        for (g, m) in &self.mean_age_by_gender {
            let _ = writeln!(out, "mean_age\t{g}\t{m:.2}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_fasta, IdRule};

    fn row(id: &str, status: &str) -> RawMetadataRow {
        RawMetadataRow {
            accession_id: id.into(),
            status_text: status.into(),
            age: Some(50),
            gender: Some("male".into()),
            clade: Some("GR".into()),
            lineage: Some("P.1".into()),
            collection_date: Some("2021-02-03".into()),
            country: Some("Brazil".into()),
        }
    }

    fn fasta(ids: &[&str]) -> FastaParse {
        let text: String = ids.iter().map(|id| format!(">{id}\nMKVLL\n")).collect();
        parse_fasta(&text, IdRule::FirstToken).unwrap()
    }

    fn rec(label: SeverityLabel, age: i64, gender: Gender, lineage: &str) -> SpikeRecord {
        SpikeRecord {
            accession_id: format!("{label}-{age}-{lineage}"),
            sequence: "MK".into(),
            age,
            gender,
            clade: "GR".into(),
            lineage: lineage.into(),
            collection_date: "2021-01-01".into(),
            country: None,
            label,
        }
    }

    #[test]
    fn live_is_inconclusive() {
        let b = build_cohort(&fasta(&["a"]), &[row("a", "Live")]);
        assert!(b.records.is_empty());
        assert_eq!(b.report.excluded, vec![("a".into(), ExclusionReason::InconclusiveStatus)]);
    }

    #[test]
    fn missing_age() {
        let mut r = row("a", "Mild");
        r.age = None;
        let b = build_cohort(&fasta(&["a"]), &[r]);
        assert_eq!(b.report.count(ExclusionReason::MissingMetadata), 1);
    }

    #[test]
    fn complete_mild_record_is_retained() {
        let b = build_cohort(&fasta(&["a"]), &[row("a", "mild")]);
        assert_eq!(b.records.len(), 1);
        assert_eq!(b.records[0].label, SeverityLabel::Mild);
        assert_eq!(b.records[0].sequence, "MKVLL");
    }

    #[test]
    fn each_reason_is_counted_once() {
        let mut partial_date = row("d", "Death");
        partial_date.collection_date = Some("2021-02".into());
        let mut odd_gender = row("g", "Death");
        odd_gender.gender = Some("unknown".into());
        let mut fa = fasta(&["a", "d", "g", "orphan", "u"]);
        fa.invalid.extend(
            parse_fasta(">bad\nMKX\n", IdRule::FirstToken).unwrap().invalid,
        );
        let rows = vec![
            row("a", "Deceased"),
            partial_date,
            odd_gender,
            row("u", "recovering at home"),
            row("bad", "Mild"),
            row("noseq", "Mild"),
        ];
        let b = build_cohort(&fa, &rows);
        let c = b.report.counts();
        assert_eq!(b.records.len(), 1);
        assert_eq!(c[&ExclusionReason::IncompleteDate], 1);
        assert_eq!(c[&ExclusionReason::UnsupportedGender], 1);
        assert_eq!(c[&ExclusionReason::UnmappedStatus], 1);
        assert_eq!(c[&ExclusionReason::InvalidSequence], 1);
        assert_eq!(c[&ExclusionReason::MissingSequence], 1);
        assert_eq!(c[&ExclusionReason::MissingMetadataRow], 1);
        assert_eq!(b.report.joined, 7);
        assert_eq!(b.report.retained + c.values().sum::<usize>(), b.report.joined);
    }

    #[test]
    fn cohort_file_round_trip() {
        let b = build_cohort(&fasta(&["a", "b"]), &[row("a", "Mild"), row("b", "DEAD")]);
        let text = write_cohort(&b.records);
        assert_eq!(read_cohort(&text).unwrap(), b.records);
    }

    #[test]
    fn stats_tables() {
        let records = vec![
            rec(SeverityLabel::Mild, 50, Gender::Male, "P.1"),
            rec(SeverityLabel::Mild, 58, Gender::Female, "P.1"),
            rec(SeverityLabel::Severe, 54, Gender::Female, "P.1"),
        ];
        let s = cohort_stats(&records).unwrap();
        assert_eq!(s.labels, vec![("Mild".into(), 2), ("Severe".into(), 1)]);
        assert_eq!(s.lineages, vec![("P.1".into(), 3)]);
        assert_eq!(s.genders, vec![("female".into(), 2), ("male".into(), 1)]);
        assert_eq!(format!("{:.2}", s.mean_age_by_gender[0].1), "56.00");
        assert_eq!(format!("{:.2}", mean_age(records[..2].iter())), "54.00");
        assert!(s.to_tsv().contains("mean_age\toverall\t54.00\n"));
    }

    #[test]
    fn ties_break_by_name() {
        let records = vec![
            rec(SeverityLabel::Mild, 1, Gender::Male, "B.1"),
            rec(SeverityLabel::Mild, 1, Gender::Male, "A.2"),
        ];
        let s = cohort_stats(&records).unwrap();
        assert_eq!(s.lineages[0].0, "A.2");
    }

    #[test]
    fn empty_cohort_stats() {
        assert!(matches!(cohort_stats(&[]), Err(Error::EmptyCohort)));
    }
}
