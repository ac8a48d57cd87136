//! `spikesev`: staged command-line pipeline. Each subcommand reads and writes
//! files inside the work directory, so every intermediate artifact can be
//! inspected or re-run in isolation.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input or I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use spikesev::config::RunConfig;
use spikesev::dataset::{
    assemble_all, class_counts, read_ids, read_matrix, smote, stratified_split, write_ids, write_matrix,
    CovariateCodebook, FeatureSettings, FeatureVector,
};
use spikesev::evaluation::{evaluate, predict_scores};
use spikesev::ingest::{build_cohort, cohort_stats, parse_fasta, parse_metadata, read_cohort, write_cohort, SeverityLabel};
use spikesev::nn::{gradcheck, load_checkpoint, save_checkpoint, Adam, AdamConfig, Checkpoint, Model};
use spikesev::seqfeatures::ScalesRegistry;
use spikesev::training::{random_search, train, Hyperparams, SearchSpace, EPOCH_TSV_HEADER};

#[derive(Parser)]
#[command(name = "spikesev", version, about = "Spike-protein severity classification pipeline")]
struct Cli {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Seed for the split, SMOTE and training stages.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Worker threads for featurization.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Training fraction of the stratified split.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// SMOTE neighbor count.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long = "n-model", global = true)]
    n_model: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join FASTA and metadata, normalize status, filter the cohort.
    Ingest {
        #[arg(long)]
        fasta: Option<PathBuf>,
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Encode the cohort into a feature matrix and fit the covariate codebook.
    Featurize,
    /// Stratified train/test split of the feature matrix.
    Split,
    /// SMOTE-balance the training partition.
    Balance,
    /// Train a model on the balanced training partition.
    Train,
    /// Score the test partition and write the metric report.
    Evaluate,
    /// Score records of a cohort table with a trained checkpoint.
    Predict {
        /// Cohort table (defaults to the work directory's cohort.tsv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Random hyperparameter search scored by cross-validation.
    Search {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Finite-difference gradient checks.
    Gradcheck,
    /// Cohort frequency tables.
    Stats,
}

enum Failure {
    Check(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<spikesev::Error> for Failure {
    fn from(e: spikesev::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(w) = &cli.workdir {
        config.workdir = w.clone();
    }
    if let Some(s) = cli.seed {
        config.set_seed(s);
    }
    if let Some(t) = cli.threshold {
        config.threshold = t;
    }
    if let Some(j) = cli.jobs {
        config.jobs = j;
    }
    if let Some(r) = cli.ratio {
        config.split_ratio = r;
    }
    if let Some(k) = cli.k {
        config.smote_k = k;
    }
    if let Some(e) = cli.epochs {
        config.train.epochs = e;
    }
    if let Some(n) = cli.n_model {
        config.n_model = n;
    }
    match &cli.command {
        Command::Ingest { fasta, metadata } => {
            if let Some(f) = fasta {
                config.fasta = Some(f.clone());
            }
            if let Some(m) = metadata {
                config.metadata = Some(m.clone());
            }
        }
        Command::Search { trials: Some(n) } => config.n_trials = *n,
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

struct Work {
    dir: PathBuf,
}

impl Work {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn read(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    }

    fn read_vectors(&self, stem: &str) -> Result<Vec<FeatureVector>> {
        let mut vectors = read_matrix(&self.path(&format!("{stem}.mat")))?;
        read_ids(&mut vectors, &self.path(&format!("{stem}.ids")))?;
        Ok(vectors)
    }

    fn write_vectors(&self, stem: &str, vectors: &[FeatureVector]) -> Result<()> {
        write_matrix(vectors, &self.path(&format!("{stem}.mat")))?;
        write_ids(vectors, &self.path(&format!("{stem}.ids")))?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let config = resolve(cli)?;
    let work = Work {
        dir: config.workdir.clone(),
    };
    fs::create_dir_all(&work.dir).with_context(|| format!("creating {}", work.dir.display()))?;
    let name = match &cli.command {
        Command::Ingest { .. } => "ingest",
        Command::Featurize => "featurize",
        Command::Split => "split",
        Command::Balance => "balance",
        Command::Train => "train",
        Command::Evaluate => "evaluate",
        Command::Predict { .. } => "predict",
        Command::Search { .. } => "search",
        Command::Gradcheck => "gradcheck",
        Command::Stats => "stats",
    };
    work.write(&format!("{name}.config"), config.to_text())?;
    match &cli.command {
        Command::Ingest { .. } => ingest(&config, &work)?,
        Command::Featurize => featurize(&config, &work)?,
        Command::Split => split(&config, &work)?,
        Command::Balance => balance(&config, &work)?,
        Command::Train => train_cmd(&config, &work)?,
        Command::Evaluate => evaluate_cmd(&config, &work)?,
        Command::Predict { input } => predict(&config, &work, input.as_deref())?,
        Command::Search { .. } => search(&config, &work)?,
        Command::Gradcheck => return gradcheck_cmd(&config, &work),
        Command::Stats => stats(&work)?,
    }
    Ok(())
}

fn ingest(config: &RunConfig, work: &Work) -> Result<()> {
    let (Some(fasta_path), Some(meta_path)) = (&config.fasta, &config.metadata) else {
        bail!("ingest needs both a FASTA file and a metadata file (--fasta, --metadata or config keys)");
    };
    let fasta_text = fs::read_to_string(fasta_path).with_context(|| format!("reading {}", fasta_path.display()))?;
    let meta_text = fs::read_to_string(meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
    let fasta = parse_fasta(&fasta_text, config.id_rule).with_context(|| format!("in {}", fasta_path.display()))?;
    let metadata = parse_metadata(&meta_text, config.delimiter).with_context(|| format!("in {}", meta_path.display()))?;
    let build = build_cohort(&fasta, &metadata);
    work.write("cohort.tsv", write_cohort(&build.records))?;
    work.write("exclusions.tsv", build.report.to_tsv())?;
    work.write("exclusions_detail.tsv", build.report.details_tsv())?;
    if build.records.is_empty() {
        eprintln!("warning: no records passed the inclusion filters");
    }
    println!("retained {} of {} records", build.report.retained, build.report.joined);
    Ok(())
}

fn load_cohort(work: &Work) -> Result<Vec<spikesev::ingest::SpikeRecord>> {
    let text = work.read("cohort.tsv")?;
    read_cohort(&text).context("in cohort.tsv")
}

fn featurize(config: &RunConfig, work: &Work) -> Result<()> {
    let records: Vec<_> = load_cohort(work)?
        .into_iter()
        .filter(|r| r.label.is_trainable())
        .collect();
    if records.is_empty() {
        bail!("cohort.tsv has no labelled records");
    }
    let registry = ScalesRegistry::default();
    let codebook = CovariateCodebook::fit(&records, config.age_mode);
    let assembled = assemble_all(&records, &registry, &codebook, config.n_model, config.weights, config.jobs)?;
    let vectors: Vec<FeatureVector> = assembled.iter().map(|a| a.vector.clone()).collect();
    let truncated = assembled.iter().filter(|a| a.layout.truncated_rows > 0).count();
    work.write_vectors("features", &vectors)?;
    work.write("codebook.tsv", codebook.to_text())?;
    let settings = FeatureSettings {
        n_model: config.n_model,
        weights: config.weights,
        age_mode: config.age_mode,
        registry_hash: registry.hash().to_string(),
    };
    work.write("features.settings", settings.to_text())?;
    if truncated > 0 {
        eprintln!("warning: {truncated} records truncated to fit n_model = {}", config.n_model);
    }
    println!("{} x {} feature matrix", vectors.len(), config.n_model);
    Ok(())
}

fn split(config: &RunConfig, work: &Work) -> Result<()> {
    let vectors = work.read_vectors("features")?;
    let parts = stratified_split(&vectors, config.split_ratio, config.split_seed)?;
    work.write_vectors("train", &parts.train)?;
    work.write_vectors("test", &parts.test)?;
    let (tr, te) = (class_counts(&parts.train), class_counts(&parts.test));
    println!("train {} (severe {}, mild {}); test {} (severe {}, mild {})", parts.train.len(), tr[0], tr[1], parts.test.len(), te[0], te[1]);
    Ok(())
}

fn balance(config: &RunConfig, work: &Work) -> Result<()> {
    let train_set = work.read_vectors("train")?;
    let balanced = smote(&train_set, config.smote_k, config.smote_seed)?;
    work.write_vectors("train_balanced", &balanced)?;
    println!("{} -> {} training rows", train_set.len(), balanced.len());
    Ok(())
}

fn check_width(vectors: &[FeatureVector], n_model: usize, what: &str) -> Result<()> {
    if let Some(v) = vectors.first() {
        if v.values.len() != n_model {
            bail!("{what} has {} columns but n_model is {n_model}", v.values.len());
        }
    }
    Ok(())
}

fn train_cmd(config: &RunConfig, work: &Work) -> Result<()> {
    let data = work.read_vectors("train_balanced")?;
    check_width(&data, config.n_model, "train_balanced.mat")?;
    let settings = FeatureSettings::parse(&work.read("features.settings")?)?;
    let arch = config.model_architecture()?;
    work.write("architecture.tsv", arch.summary()?)?;
    let mut model = Model::<f32>::new(arch, config.train.seed)?;
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.train.learning_rate,
            ..AdamConfig::default()
        },
        model.params(),
    );
    let mut log = format!("{EPOCH_TSV_HEADER}\n");
    let logs = train(&mut model, &mut adam, &data, &config.train, None, |e| {
        eprintln!("epoch {}/{}: loss {:.4} accuracy {:.4}", e.epoch, config.train.epochs, e.train_loss, e.train_accuracy);
        log.push_str(&e.tsv_row());
        log.push('\n');
    })?;
    work.write("epochs.tsv", log)?;
    let ckpt = Checkpoint {
        model,
        adam,
        registry_hash: settings.registry_hash,
    };
    save_checkpoint(&ckpt, &work.path("model.ckpt"))?;
    if let Some(last) = logs.last() {
        println!("final epoch {}: loss {:.6} accuracy {:.6}", last.epoch, last.train_loss, last.train_accuracy);
    }
    Ok(())
}

fn load_model(work: &Work) -> Result<Model<f32>> {
    let registry = ScalesRegistry::default();
    let ckpt = load_checkpoint(&work.path("model.ckpt"), Some(registry.hash())).context("loading model.ckpt")?;
    Ok(ckpt.model)
}

fn evaluate_cmd(config: &RunConfig, work: &Work) -> Result<()> {
    let model = load_model(work)?;
    let test = work.read_vectors("test")?;
    check_width(&test, model.input_length(), "test.mat")?;
    let (report, scores) = evaluate(&model, &test, config.threshold)?;
    work.write("report.tsv", report.to_tsv())?;
    work.write("report.txt", report.to_text())?;
    work.write("confusion.tsv", report.confusion.to_tsv())?;
    let mut rows = String::from("id\tlabel\tscore\n");
    for (v, s) in test.iter().zip(&scores) {
        rows.push_str(&format!("{}\t{}\t{s:.6}\n", v.id, v.label));
    }
    work.write("test_scores.tsv", rows)?;
    print!("{}", report.to_text());
    Ok(())
}

fn predict(config: &RunConfig, work: &Work, input: Option<&Path>) -> Result<()> {
    let model = load_model(work)?;
    let settings = FeatureSettings::parse(&work.read("features.settings")?)?;
    let codebook = CovariateCodebook::parse(&work.read("codebook.tsv")?)?;
    let registry = ScalesRegistry::default();
    if settings.registry_hash != registry.hash() {
        bail!("features were built with scales registry {}, current is {}", settings.registry_hash, registry.hash());
    }
    let records = match input {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_cohort(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => load_cohort(work)?,
    };
    let vectors = records
        .iter()
        .map(|r| {
            r.features_for_prediction(&registry, &codebook, settings.n_model, settings.weights)
                .map(|a| a.vector)
        })
        .collect::<spikesev::Result<Vec<_>>>()?;
    check_width(&vectors, model.input_length(), "prediction input")?;
    let scores = predict_scores(&model, &vectors)?;
    let mut out = String::from("accession_id\tscore\tpredicted\n");
    for (r, s) in records.iter().zip(&scores) {
        let label = SeverityLabel::from_binary(u8::from(*s >= config.threshold)).expect("binary");
        out.push_str(&format!("{}\t{s:.6}\t{label}\n", r.accession_id));
    }
    work.write("predictions.tsv", out)?;
    println!("scored {} records", records.len());
    Ok(())
}

fn search(config: &RunConfig, work: &Work) -> Result<()> {
    let data = work.read_vectors("train")?;
    let space = match &config.search_space {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SearchSpace::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => SearchSpace::default(),
    };
    let fixed = config.include_published.then(Hyperparams::published);
    let outcome = random_search(&space, config.n_trials, &data, &config.cv_config(), fixed)?;
    work.write("trials.tsv", outcome.to_tsv())?;
    match outcome.best() {
        Some(best) => println!("best trial {}: mean weighted F1 {:.4}", best.index, best.mean_f1().unwrap_or(0.0)),
        None => eprintln!("warning: every trial failed"),
    }
    Ok(())
}

fn gradcheck_cmd(config: &RunConfig, work: &Work) -> std::result::Result<(), Failure> {
    let results = gradcheck::run_suite(config.train.seed)?;
    let mut out = String::from("check\tchecked\tmax_rel_error\tpassed\n");
    for r in &results {
        out.push_str(&format!("{}\t{}\t{:.3e}\t{}\n", r.name, r.checked, r.max_rel_error, r.passed()));
    }
    work.write("gradcheck.tsv", &out)?;
    print!("{out}");
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn stats(work: &Work) -> Result<()> {
    let records = load_cohort(work)?;
    let table = cohort_stats(&records)?.to_tsv();
    work.write("stats.tsv", &table)?;
    print!("{table}");
    Ok(())
}
