mod common;

use std::path::Path;

use common::{run_ok, spikesev, write_fixture};
use spikesev::dataset::synthetic::{blobs, BlobSpec};
use spikesev::dataset::{
    read_matrix, stratified_split, write_ids, write_matrix, AgeMode, BlockWeights, FeatureSettings,
};
use spikesev::seqfeatures::ScalesRegistry;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.config");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_input_is_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path().join("work");
    let out = spikesev(&["ingest", "--fasta", "/nonexistent.fasta", "--metadata", "/nonexistent.tsv", "--workdir", s(&work)]);
    assert_eq!(out.status.code(), Some(2));
    let out = spikesev(&["featurize", "--workdir", s(&work)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_cohort_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let fasta = tmp.path().join("a.fasta");
    let meta = tmp.path().join("m.tsv");
    std::fs::write(&fasta, ">EPI_1\nMKV\n").unwrap();
    std::fs::write(&meta, "accession_id\tstatus\tage\tgender\tclade\tlineage\tdate\nEPI_1\tHospitalized\t50\tMale\tGR\tP.1\t2021-01-01\n").unwrap();
    let work = tmp.path().join("work");
    let out = run_ok(&["ingest", "--fasta", s(&fasta), "--metadata", s(&meta), "--workdir", s(&work)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let exclusions = std::fs::read_to_string(work.join("exclusions.tsv")).unwrap();
    assert!(exclusions.contains("Inconclusive") || exclusions.contains("inconclusive"), "{exclusions}");
}

#[test]
fn featurize_is_reproducible_and_checks_width() {
    let tmp = tempfile::tempdir().unwrap();
    let (fasta, meta) = write_fixture(tmp.path(), 60, 1);
    let work = tmp.path().join("work");
    let config = write_config(tmp.path(), "n_model = 256\n");
    let base = ["--config", s(&config), "--workdir", s(&work)];
    let mut args = vec!["ingest", "--fasta", s(&fasta), "--metadata", s(&meta)];
    args.extend(base);
    run_ok(&args);
    let cohort = std::fs::read_to_string(work.join("cohort.tsv")).unwrap();
    let records = cohort.lines().count() - 1;
    assert!(records > 0);

    run_ok(&[&["featurize"][..], &base].concat());
    let first = std::fs::read(work.join("features.mat")).unwrap();
    assert_eq!(read_matrix(&work.join("features.mat")).unwrap().len(), records);
    run_ok(&[&["featurize"][..], &base].concat());
    assert_eq!(first, std::fs::read(work.join("features.mat")).unwrap());

    let out = spikesev(&["featurize", "--n-model", "8", "--workdir", s(&work)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gradcheck_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path().join("work");
    run_ok(&["gradcheck", "--workdir", s(&work)]);
    let table = std::fs::read_to_string(work.join("gradcheck.tsv")).unwrap();
    assert!(table.lines().count() > 5);
}

#[test]
fn train_and_evaluate_on_separable_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    let data = blobs(&BlobSpec::separable(300, 128), 3);
    let parts = stratified_split(&data, 0.8, 3).unwrap();
    write_matrix(&parts.train, &work.join("train_balanced.mat")).unwrap();
    write_ids(&parts.train, &work.join("train_balanced.ids")).unwrap();
    write_matrix(&parts.test, &work.join("test.mat")).unwrap();
    write_ids(&parts.test, &work.join("test.ids")).unwrap();
    let settings = FeatureSettings {
        n_model: 128,
        weights: BlockWeights::default(),
        age_mode: AgeMode::default(),
        registry_hash: ScalesRegistry::default().hash().to_string(),
    };
    std::fs::write(work.join("features.settings"), settings.to_text()).unwrap();
    let config = write_config(
        tmp.path(),
        "n_model = 128\narchitecture = conv1d:8:4,maxpool1d:2,dropout:0.1,lstm:8,dense:8:relu,dense:1:sigmoid\nepochs = 15\nbatch_size = 16\nlearning_rate = 0.003\n",
    );
    let base = ["--config", s(&config), "--workdir", s(&work)];
    run_ok(&[&["train"][..], &base].concat());
    assert!(work.join("model.ckpt").exists());
    assert_eq!(std::fs::read_to_string(work.join("epochs.tsv")).unwrap().lines().count(), 16);
    run_ok(&[&["evaluate"][..], &base].concat());
    let report = std::fs::read_to_string(work.join("report.tsv")).unwrap();
    let f1: f64 = report
        .lines()
        .find(|l| l.starts_with("f1\tweighted\t"))
        .and_then(|l| l.rsplit('\t').next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("{report}"));
    assert!(f1 >= 0.95, "{report}");
}

#[test]
fn predict_tolerates_unseen_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let (fasta, meta) = write_fixture(tmp.path(), 80, 4);
    let work = tmp.path().join("work");
    let config = write_config(tmp.path(), "n_model = 256\narchitecture = tiny\nepochs = 2\n");
    let base = ["--config", s(&config), "--workdir", s(&work)];
    run_ok(&[&["ingest", "--fasta", s(&fasta), "--metadata", s(&meta)][..], &base].concat());
    for cmd in ["featurize", "split", "balance", "train"] {
        run_ok(&[&[cmd][..], &base].concat());
    }
    let unseen = tmp.path().join("unseen.tsv");
    std::fs::write(
        &unseen,
        "accession_id\tlabel\tage\tgender\tclade\tlineage\tcollection_date\tcountry\tsequence\n\
         Q1\t\t40\tfemale\tGZZ\tXBB.1.5\t2023-01-01\t\tMKVLLACDEFGHIKLMNPQRSTVWY\n",
    )
    .unwrap();
    run_ok(&[&["predict", "--input", s(&unseen)][..], &base].concat());
    let preds = std::fs::read_to_string(work.join("predictions.tsv")).unwrap();
    let row = preds.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split('\t').collect();
    assert_eq!(fields[0], "Q1");
    let score: f64 = fields[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&score));
}
