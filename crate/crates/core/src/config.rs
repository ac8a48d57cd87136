//! Flat `key = value` run configuration. Unknown keys are rejected; `#`
//! starts a comment. [`RunConfig::to_text`] writes every key, so a saved
//! file fully determines a run.

use std::path::PathBuf;

use crate::dataset::{AgeMode, BlockWeights, DEFAULT_N_MODEL, DEFAULT_SMOTE_K};
use crate::error::{Error, Result};
use crate::ingest::IdRule;
use crate::nn::Architecture;
use crate::training::{CvConfig, TrainConfig, DEFAULT_FOLDS};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fasta: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    /// Directory receiving every output file.
    pub workdir: PathBuf,
    pub delimiter: u8,
    pub id_rule: IdRule,
    pub n_model: usize,
    pub weights: BlockWeights,
    pub age_mode: AgeMode,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub smote_k: usize,
    pub smote_seed: u64,
    pub train: TrainConfig,
    /// `reference`, `tiny`, or a comma-separated layer list.
    pub architecture: String,
    pub threshold: f64,
    pub search_space: Option<PathBuf>,
    pub n_trials: usize,
    pub folds: usize,
    pub include_published: bool,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fasta: None,
            metadata: None,
            workdir: PathBuf::from("work"),
            delimiter: b'\t',
            id_rule: IdRule::FirstToken,
            n_model: DEFAULT_N_MODEL,
            weights: BlockWeights::default(),
            age_mode: AgeMode::Exact,
            split_ratio: 0.8,
            split_seed: 42,
            smote_k: DEFAULT_SMOTE_K,
            smote_seed: 42,
            train: TrainConfig {
                seed: 42,
                ..TrainConfig::default()
            },
            architecture: "reference".into(),
            threshold: 0.5,
            search_space: None,
            n_trials: 10,
            folds: DEFAULT_FOLDS,
            include_published: true,
            jobs: 1,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("config '{key}': cannot parse '{value}'")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("config '{key}': expected a boolean, got '{value}'"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn id_rule_text(rule: IdRule) -> String {
    match rule {
        IdRule::FirstToken => "first_token".into(),
        IdRule::PipeField(n) => format!("pipe:{n}"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected 'key = value'".into(),
            })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "fasta" => self.fasta = opt_path(value),
            "metadata" => self.metadata = opt_path(value),
            "workdir" => self.workdir = PathBuf::from(value),
            "delimiter" => {
                self.delimiter = match value {
                    "tab" | "\\t" => b'\t',
                    "comma" | "," => b',',
                    _ => return Err(Error::invalid(format!("delimiter must be 'tab' or 'comma', got '{value}'"))),
                }
            }
            "id_rule" => {
                self.id_rule = match value.strip_prefix("pipe:") {
                    Some(n) => IdRule::PipeField(num(key, n)?),
                    None if value == "first_token" => IdRule::FirstToken,
                    None => return Err(Error::invalid(format!("id_rule must be 'first_token' or 'pipe:N', got '{value}'"))),
                }
            }
            "n_model" => self.n_model = num(key, value)?,
            "weight_sequence" => self.weights.sequence = num(key, value)?,
            "weight_covariates" => self.weights.covariates = num(key, value)?,
            "age_mode" => self.age_mode = value.parse()?,
            "split_ratio" => self.split_ratio = num(key, value)?,
            "split_seed" => self.split_seed = num(key, value)?,
            "smote_k" => self.smote_k = num(key, value)?,
            "smote_seed" => self.smote_seed = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "batch_size" => self.train.batch_size = num(key, value)?,
            "learning_rate" => self.train.learning_rate = num(key, value)?,
            "lambda_l2" => self.train.lambda_l2 = num(key, value)?,
            "train_seed" => self.train.seed = num(key, value)?,
            "shuffle" => self.train.shuffle = flag(key, value)?,
            "architecture" => self.architecture = value.to_string(),
            "threshold" => self.threshold = num(key, value)?,
            "search_space" => self.search_space = opt_path(value),
            "n_trials" => self.n_trials = num(key, value)?,
            "folds" => self.folds = num(key, value)?,
            "include_published" => self.include_published = flag(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Sets the split, SMOTE and training seeds together.
    pub fn set_seed(&mut self, seed: u64) {
        self.split_seed = seed;
        self.smote_seed = seed;
        self.train.seed = seed;
    }

    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let rows: Vec<(&str, String)> = vec![
            ("fasta", path(&self.fasta)),
            ("metadata", path(&self.metadata)),
            ("workdir", self.workdir.display().to_string()),
            ("delimiter", if self.delimiter == b',' { "comma" } else { "tab" }.into()),
            ("id_rule", id_rule_text(self.id_rule)),
            ("n_model", self.n_model.to_string()),
            ("weight_sequence", self.weights.sequence.to_string()),
            ("weight_covariates", self.weights.covariates.to_string()),
            ("age_mode", self.age_mode.as_str().into()),
            ("split_ratio", self.split_ratio.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("smote_k", self.smote_k.to_string()),
            ("smote_seed", self.smote_seed.to_string()),
            ("epochs", self.train.epochs.to_string()),
            ("batch_size", self.train.batch_size.to_string()),
            ("learning_rate", self.train.learning_rate.to_string()),
            ("lambda_l2", self.train.lambda_l2.to_string()),
            ("train_seed", self.train.seed.to_string()),
            ("shuffle", self.train.shuffle.to_string()),
            ("architecture", self.architecture.clone()),
            ("threshold", self.threshold.to_string()),
            ("search_space", path(&self.search_space)),
            ("n_trials", self.n_trials.to_string()),
            ("folds", self.folds.to_string()),
            ("include_published", self.include_published.to_string()),
            ("jobs", self.jobs.to_string()),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::invalid(format!("split_ratio {} outside (0, 1)", self.split_ratio)));
        }
        if self.smote_k == 0 {
            return Err(Error::invalid("smote_k must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be >= 1"));
        }
        Ok(())
    }

    /// The architecture named by `architecture`, at the configured `n_model`.
    pub fn model_architecture(&self) -> Result<Architecture> {
        match self.architecture.as_str() {
            "reference" => Ok(Architecture::reference(self.n_model)),
            "tiny" => Ok(Architecture {
                input_length: self.n_model,
                ..Architecture::gradcheck_tiny()
            }),
            layers => Architecture::parse_layers(self.n_model, layers),
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            smote_k: self.smote_k,
            threshold: self.threshold,
            train: self.train,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.fasta = Some("in/spike.fasta".into());
        c.id_rule = IdRule::PipeField(2);
        c.delimiter = b',';
        c.train.shuffle = false;
        c.architecture = "conv1d:2:4,maxpool1d:2,lstm:3,dense:1:sigmoid".into();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_with_line() {
        match RunConfig::parse("epochs = 3\nepoch = 4\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("epochs = three").is_err());
    }

    #[test]
    fn seed_sets_all_stages() {
        let mut c = RunConfig::default();
        c.set_seed(7);
        assert_eq!((c.split_seed, c.smote_seed, c.train.seed), (7, 7, 7));
    }
}
