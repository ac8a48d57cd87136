use spikesev::dataset::{
    assemble_all, class_counts, decode_matrix, encode_matrix, smote, stratified_split, BlockWeights,
    CovariateCodebook, AgeMode,
};
use spikesev::ingest::{build_cohort, parse_fasta, parse_metadata, read_cohort, write_cohort, ExclusionReason, IdRule};
use spikesev::seqfeatures::{ScalesRegistry, GLOBAL_WIDTH};

const FASTA: &str = "\
>EPI_ISL_1 hCoV-19/Brazil/A/2021
MFVFLVLLPLVSSQCVNLTTRTQLPPAYTNSFTRGVYYPDKVFRSSVLHSTQDLFLPFFSNVTWFHAI
>EPI_ISL_2
MFVFLVLLPLVSSQCVNLTTRTQLPPAYTNSFTRGVYYPDKVFRSSVLHSTQ
>EPI_ISL_3
MFVFLVLLPLVSSQCVNLTTRTQLPPAYTNSFTRGVYYPDKVFRSSVLHSTQDLFLP
>EPI_ISL_4
MFVFLVLLPLVSSQCVNLTTXRTQ
>EPI_ISL_5
MKKLLPLVSSQCVNLTTRTQLPPAYTN
>EPI_ISL_6
MFVFLVLLPLVSSQCVNLTT
>EPI_ISL_7
MFVFLVLLPLVSSQ
";

const METADATA: &str = "\
Accession ID\tPatient status\tPatient age\tGender\tClade\tLineage\tCollection date\tLocation
EPI_ISL_1\tDeceased\t71\tMale\tGR\tP.1\t2021-03-01\tBrazil
EPI_ISL_2\tAsymptomatic\t34\tFemale\tGK\tAY.99.2\t2021-08-11\tBrazil
EPI_ISL_3\tHome\t45\tfemale\tGR\tP.1\t2021-04-02\tChile
EPI_ISL_4\tMild\t22\tMale\tGR\tP.1\t2021-04-02\tChile
EPI_ISL_5\tHospitalized\t60\tMale\tGR\tP.1\t2021-04-02\tChile
EPI_ISL_6\tICU\t60\tMale\tGR\tP.1\t2021-04-02\tChile
EPI_ISL_7\tIntensive care\t50\tunknown\tGR\tP.1\t2021-04\tPeru
EPI_ISL_8\tDead\t80\tMale\tGR\tP.1\t2021-04-05\tPeru
";

#[test]
fn ingest_to_matrix() {
    let fasta = parse_fasta(FASTA, IdRule::FirstToken).unwrap();
    assert_eq!(fasta.invalid.len(), 1);
    let metadata = parse_metadata(METADATA, b'\t').unwrap();
    let build = build_cohort(&fasta, &metadata);

    let ids: Vec<&str> = build.records.iter().map(|r| r.accession_id.as_str()).collect();
    assert_eq!(ids, ["EPI_ISL_1", "EPI_ISL_2", "EPI_ISL_3"]);
    let report = &build.report;
    assert_eq!(report.joined, 8);
    assert_eq!(report.count(ExclusionReason::InvalidSequence), 1);
    assert_eq!(report.count(ExclusionReason::InconclusiveStatus), 1);
    assert_eq!(report.count(ExclusionReason::UnmappedStatus), 1);
    assert_eq!(report.count(ExclusionReason::UnsupportedGender), 1);
    assert_eq!(report.count(ExclusionReason::MissingSequence), 1);
    assert_eq!(report.retained + report.excluded.len(), report.joined);

    let reread = read_cohort(&write_cohort(&build.records)).unwrap();
    assert_eq!(reread, build.records);

    let registry = ScalesRegistry::default();
    let codebook = CovariateCodebook::fit(&build.records, AgeMode::Exact);
    let n_model = 1024;
    let serial = assemble_all(&build.records, &registry, &codebook, n_model, BlockWeights::default(), 1).unwrap();
    let parallel = assemble_all(&build.records, &registry, &codebook, n_model, BlockWeights::default(), 3).unwrap();
    assert_eq!(serial, parallel);
    for a in &serial {
        assert_eq!(a.vector.values.len(), n_model);
        assert_eq!(a.layout.global, 0..GLOBAL_WIDTH);
        assert_eq!(a.layout.covariates.len(), codebook.width());
        assert!(a.vector.values[a.layout.padding.clone()].iter().all(|v| *v == 0.0));
    }
    let labels: Vec<u8> = serial.iter().map(|a| a.vector.label).collect();
    assert_eq!(labels, [0, 1, 1]);

    let vectors: Vec<_> = serial.into_iter().map(|a| a.vector).collect();
    let bytes = encode_matrix(&vectors).unwrap();
    let back = decode_matrix(&bytes).unwrap();
    for (a, b) in vectors.iter().zip(&back) {
        assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn split_then_balance_leaves_test_untouched() {
    let vectors = spikesev::dataset::synthetic::blobs(
        &spikesev::dataset::synthetic::BlobSpec {
            positive_fraction: 0.3,
            ..spikesev::dataset::synthetic::BlobSpec::separable(200, 12)
        },
        4,
    );
    let parts = stratified_split(&vectors, 0.8, 1).unwrap();
    let test_before = parts.test.clone();
    let balanced = smote(&parts.train, 5, 1).unwrap();
    let c = class_counts(&balanced);
    assert_eq!(c[0], c[1]);
    assert_eq!(parts.test, test_before);
    assert!(parts.test.iter().all(|v| !v.id.starts_with("smote-")));
    assert_eq!(&balanced[..parts.train.len()], parts.train.as_slice());
}
