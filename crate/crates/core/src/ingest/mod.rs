//! Sequence and metadata ingestion.
//!
//! Inputs are local FASTA exports of spike-protein sequences and a delimited
//! metadata table. Records are joined on accession id, free-text clinical
//! status is normalized to a [`SeverityLabel`], and records failing the
//! inclusion filters are counted in an [`ExclusionReport`].

mod cohort;
mod fasta;
mod metadata;
mod status;

pub use cohort::{
    build_cohort, cohort_stats, read_cohort, write_cohort, CohortBuild, CohortStats,
    ExclusionReason, ExclusionReport, Gender, SpikeRecord,
};
pub use fasta::{
    is_canonical_residue, parse_fasta, serialize_fasta, FastaParse, FastaRecord, IdRule,
    InvalidReason, InvalidRecord,
};
pub use metadata::{parse_metadata, RawMetadataRow, HEADER_ALIASES};
pub use status::{normalize_status, status_key, SeverityLabel, STATUS_TERMS};
