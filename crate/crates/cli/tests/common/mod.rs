#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MILD: [&str; 5] = ["Asymptomatic", "Home", "Mild", "not hospitalized", "No clinical signs"];
pub const SEVERE: [&str; 5] = ["Deceased", "DEAD", "Intensive Care Unit", "IC", "Hospitalized (Intensive care unit)"];

/// Writes `n` synthetic FASTA records and a matching metadata table into
/// `dir`; a few rows carry inconclusive or unknown statuses. Returns the two
/// paths.
pub fn write_fixture(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let residues = b"ACDEFGHIKLMNPQRSTVWY";
    let clades = ["GR", "GK", "GRY"];
    let lineages = ["P.1", "AY.99.2", "B.1.1.7", "P.2"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fasta = String::new();
    let mut meta = String::from("Accession ID\tPatient status\tPatient age\tGender\tClade\tLineage\tCollection date\tLocation\n");
    for i in 0..n {
        let len = rng.random_range(40..90);
        let seq: String = (0..len).map(|_| residues[rng.random_range(0..20)] as char).collect();
        fasta.push_str(&format!(">EPI_ISL_{i} hCoV-19/Brazil/{i}/2021\n{seq}\n"));
        let status = match i % 10 {
            0..=5 => SEVERE[rng.random_range(0..SEVERE.len())],
            6..=8 => MILD[rng.random_range(0..MILD.len())],
            _ => ["Hospitalized", "recovering"][rng.random_range(0..2)],
        };
        let gender = ["Male", "Female"][rng.random_range(0..2)];
        meta.push_str(&format!(
            "EPI_ISL_{i}\t{status}\t{}\t{gender}\t{}\t{}\t2021-{:02}-{:02}\tBrazil\n",
            rng.random_range(18..90),
            clades[rng.random_range(0..clades.len())],
            lineages[rng.random_range(0..lineages.len())],
            rng.random_range(1..=12),
            rng.random_range(1..=28),
        ));
    }
    let fasta_path = dir.join("spike.fasta");
    let meta_path = dir.join("metadata.tsv");
    std::fs::write(&fasta_path, fasta).unwrap();
    std::fs::write(&meta_path, meta).unwrap();
    (fasta_path, meta_path)
}

pub fn spikesev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikesev"))
        .args(args)
        .output()
        .expect("spawn spikesev")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = spikesev(args);
    assert!(
        out.status.success(),
        "spikesev {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}
