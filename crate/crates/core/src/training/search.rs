use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cv::{cross_validate, CvConfig, CvResult};
use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::nn::{Architecture, REFERENCE_DROPOUT};

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Choices(Vec<f64>),
    Range { min: f64, max: f64, log: bool },
}

impl Domain {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Domain::Choices(values) => values[rng.random_range(0..values.len())],
            Domain::Range { min, max, log: false } => {
                if min == max {
                    *min
                } else {
                    rng.random_range(*min..*max)
                }
            }
            Domain::Range { min, max, log: true } => {
                if min == max {
                    *min
                } else {
                    rng.random_range(min.ln()..max.ln()).exp()
                }
            }
        }
    }

    fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if let Some((lo, hi)) = text.split_once("..") {
            let (hi, log) = match hi.trim().strip_suffix("log") {
                Some(h) => (h.trim(), true),
                None => (hi.trim(), false),
            };
            let min: f64 = lo.trim().parse().map_err(|_| format!("bad bound '{lo}'"))?;
            let max: f64 = hi.parse().map_err(|_| format!("bad bound '{hi}'"))?;
            if !(min.is_finite() && max.is_finite() && min <= max) {
                return Err(format!("empty range {min}..{max}"));
            }
            if log && min <= 0.0 {
                return Err("log range needs positive bounds".into());
            }
            return Ok(Domain::Range { min, max, log });
        }
        let values = text
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad choice '{v}'")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err("no valid choices".into());
        }
        Ok(Domain::Choices(values))
    }

    fn to_text(&self) -> String {
        match self {
            Domain::Choices(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            Domain::Range { min, max, log } => {
                format!("{min}..{max}{}", if *log { " log" } else { "" })
            }
        }
    }
}

/// One sampled configuration of the stacked architecture template.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub filters: Vec<usize>,
    pub kernel: usize,
    pub dropout: f64,
    pub lstm_units: usize,
    pub dense: Vec<usize>,
    pub learning_rate: f64,
}

impl Hyperparams {
    /// The reference configuration.
    pub fn published() -> Self {
        Hyperparams {
            filters: vec![128, 64, 64, 24],
            kernel: 4,
            dropout: REFERENCE_DROPOUT,
            lstm_units: 64,
            dense: vec![64, 32, 16],
            learning_rate: 1e-3,
        }
    }

    pub fn architecture(&self, input_length: usize) -> Architecture {
        Architecture::stacked(input_length, &self.filters, self.kernel, self.dropout, self.lstm_units, &self.dense)
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join("/")
}

/// Per-key domains. Keys are `filters_1..filters_n`, `kernel`, `dropout`,
/// `lstm_units`, `dense_1..dense_m` and `learning_rate`; a missing key keeps
/// the reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub domains: BTreeMap<String, Domain>,
}

fn is_known_key(key: &str) -> bool {
    let indexed = |prefix: &str| {
        key.strip_prefix(prefix)
            .and_then(|n| n.parse::<usize>().ok())
            .is_some_and(|n| n >= 1)
    };
    matches!(key, "kernel" | "dropout" | "lstm_units" | "learning_rate") || indexed("filters_") || indexed("dense_")
}

impl Default for SearchSpace {
    /// A neighborhood of the reference configuration.
    fn default() -> Self {
        let text = "\
filters_1 = 64,128,192
filters_2 = 32,64,96
filters_3 = 32,64,96
filters_4 = 16,24,32
kernel = 3,4,5
dropout = 0.1..0.3
lstm_units = 32,64,96
dense_1 = 32,64
dense_2 = 16,32
dense_3 = 8,16
learning_rate = 0.0003..0.003 log
";
        SearchSpace::parse(text).expect("built-in space parses")
    }
}

impl SearchSpace {
    /// `key = a,b,c` (choices) or `key = min..max [log]` (uniform range).
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut domains = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: n + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected 'key = domain'".into()))?;
            let key = key.trim();
            if !is_known_key(key) {
                return Err(err(format!("unknown hyperparameter '{key}'")));
            }
            let domain = Domain::parse(value).map_err(err)?;
            if domains.insert(key.to_string(), domain).is_some() {
                return Err(err(format!("'{key}' given twice")));
            }
        }
        let space = SearchSpace { domains };
        for prefix in ["filters_", "dense_"] {
            let count = space.indexed_count(prefix);
            let present = space.domains.keys().filter(|k| k.starts_with(prefix)).count();
            if present != count {
                return Err(Error::invalid(format!("{prefix}N keys must be numbered 1..{present} without gaps")));
            }
        }
        Ok(space)
    }

    pub fn to_text(&self) -> String {
        self.domains
            .iter()
            .map(|(k, d)| format!("{k} = {}\n", d.to_text()))
            .collect()
    }

    fn indexed_count(&self, prefix: &str) -> usize {
        (1..).take_while(|i| self.domains.contains_key(&format!("{prefix}{i}"))).count()
    }

    /// Draws one configuration; keys are visited in sorted order.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Hyperparams {
        let base = Hyperparams::published();
        let mut drawn: BTreeMap<&str, f64> = BTreeMap::new();
        for (k, d) in &self.domains {
            drawn.insert(k, d.sample(rng));
        }
        let int = |v: f64| v.round().max(1.0) as usize;
        let layers = |prefix: &str, fallback: &[usize]| -> Vec<usize> {
            let n = self.indexed_count(prefix);
            if n == 0 {
                fallback.to_vec()
            } else {
                (1..=n).map(|i| int(drawn[format!("{prefix}{i}").as_str()])).collect()
            }
        };
        Hyperparams {
            filters: layers("filters_", &base.filters),
            kernel: drawn.get("kernel").map_or(base.kernel, |&v| int(v)),
            dropout: drawn.get("dropout").map_or(base.dropout, |&v| v.clamp(0.0, 0.99)),
            lstm_units: drawn.get("lstm_units").map_or(base.lstm_units, |&v| int(v)),
            dense: layers("dense_", &base.dense),
            learning_rate: drawn.get("learning_rate").copied().unwrap_or(base.learning_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Done(CvResult),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    /// Supplied by the caller rather than sampled.
    pub fixed: bool,
    pub params: Hyperparams,
    pub param_count: Option<usize>,
    pub status: TrialStatus,
}

impl Trial {
    pub fn mean_f1(&self) -> Option<f64> {
        match &self.status {
            TrialStatus::Done(cv) => Some(cv.mean_f1),
            TrialStatus::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Ranked: mean F1 descending, then fewer parameters, then trial index;
    /// failed trials last.
    pub trials: Vec<Trial>,
}

impl SearchOutcome {
    pub fn best(&self) -> Option<&Trial> {
        self.trials.first().filter(|t| t.mean_f1().is_some())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "rank\ttrial\tfixed\tstatus\tfilters\tkernel\tdropout\tlstm_units\tdense\tlearning_rate\tparam_count\tmean_f1\tstd_f1\tfold_f1\n",
        );
        for (rank, t) in self.trials.iter().enumerate() {
            let p = &t.params;
            let (status, mean, std, folds) = match &t.status {
                TrialStatus::Done(cv) => (
                    "ok".to_string(),
                    format!("{:.6}", cv.mean_f1),
                    format!("{:.6}", cv.std_f1),
                    cv.fold_f1.iter().map(|f| format!("{f:.6}")).collect::<Vec<_>>().join(","),
                ),
                TrialStatus::Failed(msg) => (format!("failed: {}", msg.replace(['\t', '\n'], " ")), "NA".into(), "NA".into(), "NA".into()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{status}\t{}\t{}\t{:.6}\t{}\t{}\t{:.6e}\t{}\t{mean}\t{std}\t{folds}",
                rank + 1,
                t.index,
                if t.fixed { "yes" } else { "no" },
                join(&p.filters),
                p.kernel,
                p.dropout,
                p.lstm_units,
                join(&p.dense),
                p.learning_rate,
                t.param_count.map_or_else(|| "NA".to_string(), |c| c.to_string()),
            );
        }
        out
    }
}

/// Scores `n_trials` seeded draws from `space` (plus an optional fixed
/// configuration, run as trial 0) by cross-validation. Draws are made up
/// front from `cv.train.seed`, so the trial sequence does not depend on how
/// trials are scheduled. A trial that fails is recorded, not propagated.
pub fn random_search(
    space: &SearchSpace,
    n_trials: usize,
    vectors: &[FeatureVector],
    cv: &CvConfig,
    fixed: Option<Hyperparams>,
) -> Result<SearchOutcome> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    let width = vectors
        .first()
        .map(|v| v.values.len())
        .ok_or_else(|| Error::invalid("no vectors to search over"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cv.train.seed);
    let mut candidates: Vec<(bool, Hyperparams)> = Vec::new();
    if let Some(p) = fixed {
        candidates.push((true, p));
    }
    candidates.extend((0..n_trials).map(|_| (false, space.sample(&mut rng))));

    let mut trials: Vec<Trial> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(index, (is_fixed, params))| {
            let arch = params.architecture(width);
            let param_count = arch.param_count().ok();
            let config = CvConfig {
                train: crate::training::TrainConfig {
                    learning_rate: params.learning_rate,
                    ..cv.train
                },
                ..*cv
            };
            let status = match cross_validate(vectors, &arch, &config) {
                Ok(r) => TrialStatus::Done(r),
                Err(e) => TrialStatus::Failed(e.to_string()),
            };
            Trial {
                index,
                fixed: is_fixed,
                params,
                param_count,
                status,
            }
        })
        .collect();
    trials.sort_by(|a, b| match (a.mean_f1(), b.mean_f1()) {
        (Some(x), Some(y)) => y
            .total_cmp(&x)
            .then(a.param_count.cmp(&b.param_count))
            .then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok(SearchOutcome { trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_choices_and_ranges() {
        let space = SearchSpace::parse("kernel = 3, 5\nlearning_rate = 1e-4..1e-2 log # lr\n\ndropout = 0.1..0.2").unwrap();
        assert_eq!(space.domains["kernel"], Domain::Choices(vec![3.0, 5.0]));
        assert_eq!(space.domains["learning_rate"], Domain::Range { min: 1e-4, max: 1e-2, log: true });
        let again = SearchSpace::parse(&space.to_text()).unwrap();
        assert_eq!(again, space);
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(SearchSpace::parse("units = 3").is_err());
        assert!(SearchSpace::parse("kernel = 5..3").is_err());
        assert!(SearchSpace::parse("kernel = ").is_err());
        assert!(SearchSpace::parse("learning_rate = 0..1 log").is_err());
        assert!(SearchSpace::parse("filters_2 = 4").is_err());
        assert!(matches!(SearchSpace::parse("kernel = 3\nkernel = 4"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sampling_respects_domains_and_seed() {
        let space = SearchSpace::default();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = space.sample(&mut a);
            assert_eq!(p, space.sample(&mut b));
            assert_eq!(p.filters.len(), 4);
            assert!([3, 4, 5].contains(&p.kernel));
            assert!((0.1..0.3).contains(&p.dropout));
            assert!((0.0003..=0.003).contains(&p.learning_rate));
        }
    }

    #[test]
    fn missing_keys_keep_reference_values() {
        let space = SearchSpace::parse("kernel = 7").unwrap();
        let p = space.sample(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p, Hyperparams { kernel: 7, ..Hyperparams::published() });
    }
}
