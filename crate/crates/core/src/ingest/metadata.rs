use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawMetadataRow {
    pub accession_id: String,
    pub status_text: String,
    pub age: Option<i64>,
    pub gender: Option<String>,
    pub clade: Option<String>,
    pub lineage: Option<String>,
    pub collection_date: Option<String>,
    pub country: Option<String>,
}

/// Accepted header names per field. Headers are compared after trimming,
/// lowercasing and mapping spaces and hyphens to underscores, so
/// "Patient status" and "patient_status" are the same column.
pub const HEADER_ALIASES: [(&str, &[&str]); 8] = [
    ("accession", &["accession_id", "accession", "gisaid_epi_isl", "epi_isl", "id"]),
    ("status", &["patient_status", "status", "clinical_status"]),
    ("age", &["patient_age", "age"]),
    ("gender", &["gender", "sex"]),
    ("clade", &["clade", "gisaid_clade"]),
    ("lineage", &["lineage", "pango_lineage", "pangolin_lineage"]),
    ("date", &["collection_date", "date"]),
    ("country", &["country", "location"]),
];

fn canonical_header(h: &str) -> String {
    h.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

fn parse_age(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    if let Ok(v) = cell.parse::<i64>() {
        return (v >= 0).then_some(v);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 => Some(v as i64),
        _ => None,
    }
}

fn non_empty(cell: Option<&str>) -> Option<String> {
    cell.map(str::trim).filter(|c| !c.is_empty()).map(str::to_string)
}

/// Parses delimited metadata with a header row. Missing or empty cells become
/// `None`; an unparsable age is treated as missing.
pub fn parse_metadata(text: &str, delimiter: u8) -> Result<Vec<RawMetadataRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(canonical_header)
        .collect();

    let mut columns = [None; 8];
    for (slot, (field, aliases)) in columns.iter_mut().zip(HEADER_ALIASES) {
        // Earlier aliases take precedence over later ones.
        *slot = aliases
            .iter()
            .find_map(|alias| headers.iter().position(|h| h == alias));
        if slot.is_none() && field != "country" {
            return Err(Error::MissingColumn(field.to_string()));
        }
    }
    let col = |i: usize| columns[i].expect("mandatory column resolved");

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let accession_id = non_empty(record.get(col(0))).ok_or_else(|| Error::Parse {
            line: idx + 2,
            message: "empty accession id".into(),
        })?;
        if !seen.insert(accession_id.clone()) {
            return Err(Error::DuplicateId(accession_id));
        }
        rows.push(RawMetadataRow {
            status_text: record.get(col(1)).unwrap_or("").to_string(),
            age: record.get(col(2)).and_then(parse_age),
            gender: non_empty(record.get(col(3))),
            clade: non_empty(record.get(col(4))),
            lineage: non_empty(record.get(col(5))),
            collection_date: non_empty(record.get(col(6))),
            country: columns[7].and_then(|c| non_empty(record.get(c))),
            accession_id,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Accession ID\tPatient status\tPatient age\tGender\tClade\tLineage\tCollection date\tCountry";

    #[test]
    fn complete_row() {
        let text = format!("{HEADER}\nEPI_1\tMild\t54\tFemale\tGR\tP.1\t2021-03-04\tBrazil\n");
        let rows = parse_metadata(&text, b'\t').unwrap();
        assert_eq!(
            rows,
            vec![RawMetadataRow {
                accession_id: "EPI_1".into(),
                status_text: "Mild".into(),
                age: Some(54),
                gender: Some("Female".into()),
                clade: Some("GR".into()),
                lineage: Some("P.1".into()),
                collection_date: Some("2021-03-04".into()),
                country: Some("Brazil".into()),
            }]
        );
    }

    #[test]
    fn empty_age_is_absent() {
        let text = format!("{HEADER}\nEPI_1\tMild\t\tFemale\tGR\tP.1\t2021-03-04\tBrazil\n");
        let rows = parse_metadata(&text, b'\t').unwrap();
        assert_eq!(rows[0].age, None);
        let text = format!("{HEADER}\nEPI_1\tMild\tunknown\tFemale\tGR\tP.1\t2021\n");
        let rows = parse_metadata(&text, b'\t').unwrap();
        assert_eq!(rows[0].age, None);
        assert_eq!(rows[0].country, None);
    }

    #[test]
    fn duplicate_accession() {
        let text = format!("{HEADER}\nEPI_1\tMild\t1\tmale\tGR\tP.1\t2021-03-04\tBR\nEPI_1\tDead\t2\tmale\tGR\tP.1\t2021-03-04\tBR\n");
        match parse_metadata(&text, b'\t') {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "EPI_1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let text = "accession_id,status,age,gender,clade,collection_date\n";
        match parse_metadata(text, b',') {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "lineage"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_with_quoted_status() {
        let text = "accession,status,age,sex,clade,pango_lineage,date\nA1,\"Dead, hospitalized\",70,M,GK,AY.99.2,2022-01-01\n";
        let rows = parse_metadata(text, b',').unwrap();
        assert_eq!(rows[0].status_text, "Dead, hospitalized");
        assert_eq!(rows[0].lineage.as_deref(), Some("AY.99.2"));
    }
}
