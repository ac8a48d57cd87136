use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Residue alphabet in the fixed order used by every per-residue vector.
pub const RESIDUES: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";

pub fn residue_index(residue: u8) -> Option<usize> {
    RESIDUES.iter().position(|&r| r == residue)
}

const DEFAULT_TABLE: &str = include_str!("../../data/scales.tsv");

/// Bitset over the 20-letter alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ResidueSet(u32);

impl ResidueSet {
    pub fn from_letters(letters: &str) -> Result<Self> {
        let mut bits = 0u32;
        for b in letters.bytes() {
            let idx = residue_index(b)
                .ok_or_else(|| Error::Format(format!("unknown residue '{}' in set", b as char)))?;
            bits |= 1 << idx;
        }
        Ok(ResidueSet(bits))
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 & (1 << index) != 0
    }

    pub fn letters(self) -> String {
        RESIDUES
            .iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, &r)| r as char)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSets {
    pub polar: ResidueSet,
    pub charged: ResidueSet,
    pub aromatic: ResidueSet,
    pub aliphatic: ResidueSet,
    pub hbond_capable: ResidueSet,
    pub helix: ResidueSet,
    pub strand: ResidueSet,
    pub coil: ResidueSet,
    /// Ionizable side chains that carry positive charge when protonated.
    pub basic: ResidueSet,
    /// Ionizable side chains that carry negative charge when deprotonated.
    pub acidic: ResidueSet,
}

const SET_NAMES: [&str; 10] = [
    "polar",
    "charged",
    "aromatic",
    "aliphatic",
    "hbond_capable",
    "helix",
    "strand",
    "coil",
    "basic",
    "acidic",
];

impl ClassSets {
    fn named(&self) -> [(&'static str, ResidueSet); 10] {
        [
            (SET_NAMES[0], self.polar),
            (SET_NAMES[1], self.charged),
            (SET_NAMES[2], self.aromatic),
            (SET_NAMES[3], self.aliphatic),
            (SET_NAMES[4], self.hbond_capable),
            (SET_NAMES[5], self.helix),
            (SET_NAMES[6], self.strand),
            (SET_NAMES[7], self.coil),
            (SET_NAMES[8], self.basic),
            (SET_NAMES[9], self.acidic),
        ]
    }
}

/// Immutable per-residue constant tables. All scale arrays are indexed in
/// [`RESIDUES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalesRegistry {
    pub version: u32,
    pub hydrophobicity: [f64; 20],
    pub polarity: [f64; 20],
    pub isoelectric_point: [f64; 20],
    pub pka_side_chain: [Option<f64>; 20],
    pub pka_n_term: f64,
    pub pka_c_term: f64,
    pub sets: ClassSets,
    hash: String,
}

impl Default for ScalesRegistry {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled scale table is valid")
    }
}

fn min_max_normalize(values: &[f64; 20]) -> [f64; 20] {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.map(|v| (v - min) / (max - min))
}

impl ScalesRegistry {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the sectioned registry table. Blank lines and `#` comments are
    /// ignored; every residue must appear exactly once in `[residues]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut section = "";
        let mut scales: [Option<[f64; 3]>; 20] = [None; 20];
        let mut pka: [Option<f64>; 20] = [None; 20];
        let (mut n_term, mut c_term) = (None, None);
        let mut sets: [Option<ResidueSet>; 10] = [None; 10];

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            if line.starts_with('[') && line.ends_with(']') {
                section = match &line[1..line.len() - 1] {
                    s @ ("residues" | "pka" | "sets") => s,
                    other => return Err(err(format!("unknown section '{other}'"))),
                };
                continue;
            }
            let cells: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("invalid number '{s}'")))
            };
            match (section, cells.as_slice()) {
                ("", ["version", v]) => {
                    version = Some(v.parse().map_err(|_| err(format!("invalid version '{v}'")))?)
                }
                ("residues", ["residue", ..]) => {}
                ("residues", [res, h, p, pi]) => {
                    let i = single_residue(res).ok_or_else(|| err(format!("unknown residue '{res}'")))?;
                    if scales[i].replace([num(h)?, num(p)?, num(pi)?]).is_some() {
                        return Err(err(format!("residue '{res}' listed twice")));
                    }
                }
                ("pka", ["n_term", v]) => n_term = Some(num(v)?),
                ("pka", ["c_term", v]) => c_term = Some(num(v)?),
                ("pka", [res, v]) => {
                    let i = single_residue(res).ok_or_else(|| err(format!("unknown residue '{res}'")))?;
                    pka[i] = Some(num(v)?);
                }
                ("sets", [name, letters]) => {
                    let slot = SET_NAMES
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| err(format!("unknown class set '{name}'")))?;
                    sets[slot] = Some(ResidueSet::from_letters(letters).map_err(|e| err(e.to_string()))?);
                }
                _ => return Err(err(format!("unexpected line '{line}'"))),
            }
        }

        let missing = |what: &str| Error::Format(format!("registry is missing {what}"));
        let mut hydrophobicity = [0.0; 20];
        let mut polarity = [0.0; 20];
        let mut isoelectric_point = [0.0; 20];
        for (i, row) in scales.iter().enumerate() {
            let [h, p, pi] = row.ok_or_else(|| missing(&format!("residue {}", RESIDUES[i] as char)))?;
            hydrophobicity[i] = h;
            polarity[i] = p;
            isoelectric_point[i] = pi;
        }
        let set = |i: usize| sets[i].ok_or_else(|| missing(&format!("class set {}", SET_NAMES[i])));
        let sets = ClassSets {
            polar: set(0)?,
            charged: set(1)?,
            aromatic: set(2)?,
            aliphatic: set(3)?,
            hbond_capable: set(4)?,
            helix: set(5)?,
            strand: set(6)?,
            coil: set(7)?,
            basic: set(8)?,
            acidic: set(9)?,
        };
        if sets.hbond_capable != ResidueSet::from_letters("HNQSTY")? {
            return Err(Error::Format("hbond_capable must be exactly S,T,N,Q,H,Y".into()));
        }
        let ionizable = ResidueSet(sets.basic.0 | sets.acidic.0);
        if sets.basic.0 & sets.acidic.0 != 0 {
            return Err(Error::Format("basic and acidic sets overlap".into()));
        }
        for (i, v) in pka.iter().enumerate() {
            if v.is_some() != ionizable.contains(i) {
                return Err(Error::Format(format!(
                    "pKa for residue {} must be given iff it is basic or acidic",
                    RESIDUES[i] as char
                )));
            }
        }
        for (name, values) in [
            ("hydrophobicity", &hydrophobicity),
            ("polarity", &polarity),
            ("isoelectric_point", &isoelectric_point),
        ] {
            if values.iter().all(|v| *v == values[0]) {
                return Err(Error::Format(format!("scale {name} is constant")));
            }
        }

        let mut registry = ScalesRegistry {
            version: version.ok_or_else(|| missing("version"))?,
            hydrophobicity,
            polarity,
            isoelectric_point,
            pka_side_chain: pka,
            pka_n_term: n_term.ok_or_else(|| missing("n_term pKa"))?,
            pka_c_term: c_term.ok_or_else(|| missing("c_term pKa"))?,
            sets,
            hash: String::new(),
        };
        registry.hash = hex::encode(Sha256::digest(registry.to_table_string().as_bytes()));
        Ok(registry)
    }

    /// Canonical serialization. Re-parsing it yields an identical registry,
    /// and the content hash is taken over this text.
    pub fn to_table_string(&self) -> String {
        let mut out = format!("version\t{}\n\n[residues]\nresidue\thydrophobicity\tpolarity\tisoelectric_point\n", self.version);
        for (i, r) in RESIDUES.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                *r as char, self.hydrophobicity[i], self.polarity[i], self.isoelectric_point[i]
            );
        }
        out.push_str("\n[pka]\n");
        for (i, r) in RESIDUES.iter().enumerate() {
            if let Some(v) = self.pka_side_chain[i] {
                let _ = writeln!(out, "{}\t{}", *r as char, v);
            }
        }
        let _ = writeln!(out, "n_term\t{}\nc_term\t{}", self.pka_n_term, self.pka_c_term);
        out.push_str("\n[sets]\n");
        for (name, set) in self.sets.named() {
            let _ = writeln!(out, "{name}\t{}", set.letters());
        }
        out
    }

    /// Hex SHA-256 of the canonical table.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn hydrophobicity_normalized(&self) -> [f64; 20] {
        min_max_normalize(&self.hydrophobicity)
    }

    pub fn polarity_normalized(&self) -> [f64; 20] {
        min_max_normalize(&self.polarity)
    }

    pub fn isoelectric_point_normalized(&self) -> [f64; 20] {
        min_max_normalize(&self.isoelectric_point)
    }
}

fn single_residue(cell: &str) -> Option<usize> {
    match cell.as_bytes() {
        [b] => residue_index(*b),
        _ => None,
    }
}
