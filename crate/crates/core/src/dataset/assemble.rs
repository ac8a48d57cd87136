use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;

use super::codebook::{AgeMode, CovariateCodebook};
use super::FeatureVector;
use crate::error::{Error, Result};
use crate::ingest::SpikeRecord;
use crate::seqfeatures::{global_descriptors, residue_encoding, ScalesRegistry, GLOBAL_WIDTH, RESIDUE_WIDTH};

/// Default vector length; a 4-kernel valid convolution over it gives the
/// 16,727-long first feature map of the reference architecture.
pub const DEFAULT_N_MODEL: usize = 16_730;

/// Scalar multipliers for the sequence-derived and covariate blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockWeights {
    pub sequence: f64,
    pub covariates: f64,
}

impl Default for BlockWeights {
    fn default() -> Self {
        BlockWeights {
            sequence: 1.0,
            covariates: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub global: Range<usize>,
    pub residue: Range<usize>,
    pub covariates: Range<usize>,
    pub padding: Range<usize>,
    /// Residue rows dropped from the tail to fit `n_model`.
    pub truncated_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub vector: FeatureVector,
    pub layout: BlockLayout,
}

/// Builds `[global | residue rows | covariates | zero padding]` for a record.
pub fn assemble(
    record: &SpikeRecord,
    registry: &ScalesRegistry,
    codebook: &CovariateCodebook,
    n_model: usize,
    weights: BlockWeights,
) -> Result<Assembled> {
    let label = record
        .label
        .binary()
        .ok_or_else(|| Error::invalid(format!("record {} has no trainable label", record.accession_id)))?;
    assemble_unlabeled(record, registry, codebook, n_model, weights, label)
}

/// As [`assemble`], with the label supplied by the caller (prediction inputs
/// carry no usable label).
pub(crate) fn assemble_unlabeled(
    record: &SpikeRecord,
    registry: &ScalesRegistry,
    codebook: &CovariateCodebook,
    n_model: usize,
    weights: BlockWeights,
    label: u8,
) -> Result<Assembled> {
    let width = codebook.width();
    let required = GLOBAL_WIDTH + width;
    if n_model < required {
        return Err(Error::ModelLengthTooSmall { required, n_model });
    }
    let global = global_descriptors(&record.sequence, registry)?.to_vec();
    let residues = residue_encoding(&record.sequence, registry)?;
    let room = (n_model - required) / RESIDUE_WIDTH;
    let kept = residues.len().min(room);

    let mut values = Vec::with_capacity(n_model);
    values.extend(global.iter().map(|v| (v * weights.sequence) as f32));
    for row in &residues.rows[..kept] {
        values.extend(row.iter().map(|v| (v * weights.sequence) as f32));
    }
    let residue_end = values.len();
    values.extend(codebook.encode(record).iter().map(|v| (v * weights.covariates) as f32));
    let covariate_end = values.len();
    values.resize(n_model, 0.0);

    Ok(Assembled {
        vector: FeatureVector {
            id: record.accession_id.clone(),
            values,
            label,
        },
        layout: BlockLayout {
            global: 0..GLOBAL_WIDTH,
            residue: GLOBAL_WIDTH..residue_end,
            covariates: residue_end..covariate_end,
            padding: covariate_end..n_model,
            truncated_rows: residues.len() - kept,
        },
    })
}

/// Assembles every record; `jobs > 1` featurizes in parallel with output
/// order (and bits) identical to the sequential path.
pub fn assemble_all(
    records: &[SpikeRecord],
    registry: &ScalesRegistry,
    codebook: &CovariateCodebook,
    n_model: usize,
    weights: BlockWeights,
    jobs: usize,
) -> Result<Vec<Assembled>> {
    let one = |r: &SpikeRecord| assemble(r, registry, codebook, n_model, weights);
    if jobs <= 1 {
        return records.iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| records.par_iter().map(one).collect())
}

/// Everything needed to featurize new records the same way as a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSettings {
    pub n_model: usize,
    pub weights: BlockWeights,
    pub age_mode: AgeMode,
    pub registry_hash: String,
}

impl FeatureSettings {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_model\t{}", self.n_model);
        let _ = writeln!(out, "weight_sequence\t{}", self.weights.sequence);
        let _ = writeln!(out, "weight_covariates\t{}", self.weights.covariates);
        let _ = writeln!(out, "age_mode\t{}", self.age_mode.as_str());
        let _ = writeln!(out, "registry_hash\t{}", self.registry_hash);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::Format(format!("bad settings line '{line}'")))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| Error::Format(format!("settings missing '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("settings '{k}' is not a number")))
        };
        Ok(FeatureSettings {
            n_model: get("n_model")?
                .parse()
                .map_err(|_| Error::Format("settings 'n_model' is not an integer".into()))?,
            weights: BlockWeights {
                sequence: num("weight_sequence")?,
                covariates: num("weight_covariates")?,
            },
            age_mode: get("age_mode")?.parse()?,
            registry_hash: get("registry_hash")?,
        })
    }
}

impl SpikeRecord {
    /// Feature vector for prediction; the label slot is set to 0.
    pub fn features_for_prediction(
        &self,
        registry: &ScalesRegistry,
        codebook: &CovariateCodebook,
        n_model: usize,
        weights: BlockWeights,
    ) -> Result<Assembled> {
        assemble_unlabeled(self, registry, codebook, n_model, weights, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Gender, SeverityLabel};

    fn record(seq: &str, label: SeverityLabel) -> SpikeRecord {
        SpikeRecord {
            accession_id: "r".into(),
            sequence: seq.into(),
            age: 40,
            gender: Gender::Female,
            clade: "GR".into(),
            lineage: "P.1".into(),
            collection_date: "2021-01-01".into(),
            country: None,
            label,
        }
    }

    fn setup() -> (ScalesRegistry, CovariateCodebook, SpikeRecord) {
        let r = record("MKVLLSTNQ", SeverityLabel::Mild);
        let cb = CovariateCodebook::fit(std::slice::from_ref(&r), AgeMode::Exact);
        (ScalesRegistry::default(), cb, r)
    }

    #[test]
    fn short_sequence_is_zero_padded() {
        let (reg, cb, r) = setup();
        let a = assemble(&r, &reg, &cb, 400, BlockWeights::default()).unwrap();
        let end = GLOBAL_WIDTH + 10 * 9 + cb.width();
        assert_eq!(a.vector.values.len(), 400);
        assert_eq!(a.layout.padding, end..400);
        assert!(a.vector.values[end..].iter().all(|v| *v == 0.0));
        assert_eq!(a.vector.label, 1);
        assert_eq!(&a.vector.values[a.layout.covariates.clone()], [1.0; 4]);
    }

    #[test]
    fn severe_maps_to_zero() {
        let (reg, cb, _) = setup();
        let r = record("MKV", SeverityLabel::Severe);
        assert_eq!(assemble(&r, &reg, &cb, 100, BlockWeights::default()).unwrap().vector.label, 0);
        let r = record("MKV", SeverityLabel::Inconclusive);
        assert!(assemble(&r, &reg, &cb, 100, BlockWeights::default()).is_err());
    }

    #[test]
    fn block_weights_scale_their_blocks() {
        let (reg, cb, r) = setup();
        let base = assemble(&r, &reg, &cb, 400, BlockWeights::default()).unwrap();
        let doubled = assemble(
            &r,
            &reg,
            &cb,
            400,
            BlockWeights {
                sequence: 2.0,
                covariates: 1.0,
            },
        )
        .unwrap();
        let seq_end = base.layout.residue.end;
        for (i, (a, b)) in base.vector.values.iter().zip(&doubled.vector.values).enumerate() {
            if i < seq_end {
                assert_eq!(*b, 2.0 * a, "index {i}");
            } else {
                assert_eq!(b, a, "index {i}");
            }
        }
    }

    #[test]
    fn truncates_residue_tail() {
        let (reg, cb, r) = setup();
        let n = GLOBAL_WIDTH + cb.width() + 35;
        let a = assemble(&r, &reg, &cb, n, BlockWeights::default()).unwrap();
        assert_eq!(a.layout.truncated_rows, 9 - 3);
        assert_eq!(a.layout.residue.len(), 30);
        assert_eq!(a.vector.values.len(), n);
    }

    #[test]
    fn too_small_model_length() {
        let (reg, cb, r) = setup();
        let err = assemble(&r, &reg, &cb, GLOBAL_WIDTH + cb.width() - 1, BlockWeights::default());
        assert!(matches!(err, Err(Error::ModelLengthTooSmall { .. })));
    }

    #[test]
    fn parallel_matches_sequential() {
        let (reg, cb, r) = setup();
        let records: Vec<_> = (0..20)
            .map(|i| SpikeRecord {
                accession_id: format!("r{i}"),
                sequence: "MKVLLSTNQACDEFGHIKLMNPQRSTVWY"[..10 + i].to_string(),
                ..r.clone()
            })
            .collect();
        let a = assemble_all(&records, &reg, &cb, 600, BlockWeights::default(), 1).unwrap();
        let b = assemble_all(&records, &reg, &cb, 600, BlockWeights::default(), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn settings_round_trip() {
        let s = FeatureSettings {
            n_model: 16_730,
            weights: BlockWeights {
                sequence: 0.5,
                covariates: 1.0,
            },
            age_mode: AgeMode::Decade,
            registry_hash: "abc".into(),
        };
        assert_eq!(FeatureSettings::parse(&s.to_text()).unwrap(), s);
    }
}
