use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::fit::{AlphaEstimate, EstimateFlag};
use super::{EstimatorConfig, PreparedBank};
use crate::channel::ShotBank;
use crate::error::{Error, Result};
use crate::pauli::{gather_bits, PauliString, Region};

const HEADER: &str = "#pauli\talpha_hat\tstderr\tc_hat\tflags\tm_groups\tper_k_means";

/// Eigenvalue estimates keyed by Pauli string.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlphaTable {
    entries: Vec<AlphaEstimate>,
    index: HashMap<PauliString, usize>,
}

impl AlphaTable {
    pub fn new(entries: Vec<AlphaEstimate>) -> Self {
        let mut table = Self::default();
        for e in entries {
            table.insert(e);
        }
        table
    }

    /// Replaces any previous estimate for the same Pauli.
    pub fn insert(&mut self, e: AlphaEstimate) {
        match self.index.get(&e.pauli) {
            Some(&i) => self.entries[i] = e,
            None => {
                self.index.insert(e.pauli, self.entries.len());
                self.entries.push(e);
            }
        }
    }

    pub fn entries(&self) -> &[AlphaEstimate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &PauliString) -> Option<&AlphaEstimate> {
        self.index.get(p).map(|&i| &self.entries[i])
    }

    pub fn alpha(&self, p: &PauliString) -> Result<f64> {
        if p.is_identity() {
            return Ok(1.0);
        }
        self.get(p)
            .map(|e| e.alpha_hat)
            .ok_or_else(|| Error::MissingEigenvalue(p.to_string()))
    }

    /// Entries sorted by Pauli, for deterministic output.
    pub fn sorted(&self) -> Vec<&AlphaEstimate> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        v
    }

    pub fn flagged(&self) -> usize {
        self.entries.iter().filter(|e| e.is_flagged()).count()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for e in self.sorted() {
            let flags = if e.flags.is_empty() {
                "-".to_string()
            } else {
                e.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")
            };
            let c_hat = e.c_hat.map_or("-".to_string(), |c| c.to_string());
            let per_k = if e.per_k_means.is_empty() {
                "-".to_string()
            } else {
                e.per_k_means
                    .iter()
                    .map(|(k, y)| format!("{k}:{y}"))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.pauli, e.alpha_hat, e.stderr, c_hat, flags, e.m_groups, per_k
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut table = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("alpha table line {}: {what}", lineno + 1));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(bad("expected 7 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let flags = if f[4] == "-" {
                Vec::new()
            } else {
                f[4].split(',').map(EstimateFlag::parse).collect::<Result<_>>()?
            };
            let mut per_k_means = BTreeMap::new();
            if f[6] != "-" {
                for item in f[6].split(',') {
                    let (k, y) = item.split_once(':').ok_or_else(|| bad("bad per-k entry"))?;
                    per_k_means.insert(k.parse().map_err(|_| bad("bad k"))?, num(y)?);
                }
            }
            table.insert(AlphaEstimate {
                pauli: f[0].parse()?,
                alpha_hat: num(f[1])?,
                stderr: num(f[2])?,
                c_hat: if f[3] == "-" { None } else { Some(num(f[3])?) },
                flags,
                m_groups: f[5].parse().map_err(|_| bad("bad group count"))?,
                per_k_means,
            });
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tsv(&std::fs::read_to_string(path)?)
    }
}

/// Local index of `p` within the region of its support.
pub(crate) fn local_index(p: &PauliString, region: &Region) -> usize {
    let m = region.len();
    (gather_bits(p.x_mask(), region.mask()) | gather_bits(p.z_mask(), region.mask()) << m) as usize
}

/// Estimates every Pauli from the same bank. Paulis sharing a support share
/// one pass over the shots.
pub fn batch_estimate_prepared(
    paulis: &[PauliString],
    prepared: &PreparedBank,
    config: &EstimatorConfig,
) -> Result<AlphaTable> {
    for p in paulis {
        if p.num_qubits() != prepared.n() {
            return Err(Error::Dimension {
                expected: prepared.n(),
                found: p.num_qubits(),
            });
        }
    }
    let mut supports: Vec<u64> = paulis.iter().map(|p| p.support_mask()).collect();
    supports.sort_unstable();
    supports.dedup();
    let per_support = |mask: &u64| -> Result<Vec<AlphaEstimate>> {
        let region = Region::from_mask(*mask);
        let stats = prepared.region_stats(&region)?;
        Ok(paulis
            .iter()
            .filter(|p| p.support_mask() == *mask)
            .map(|p| AlphaEstimate::from_points(&stats.decay_points(local_index(p, &region)), config.fit))
            .collect())
    };
    #[cfg(feature = "parallel")]
    let estimated: Vec<Vec<AlphaEstimate>> = {
        use rayon::prelude::*;
        supports.par_iter().map(per_support).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let estimated: Vec<Vec<AlphaEstimate>> =
        supports.iter().map(per_support).collect::<Result<_>>()?;

    let by_pauli: HashMap<PauliString, AlphaEstimate> = estimated
        .into_iter()
        .flatten()
        .map(|e| (e.pauli, e))
        .collect();
    Ok(AlphaTable::new(
        paulis
            .iter()
            .map(|p| by_pauli[p].clone())
            .collect(),
    ))
}

/// One estimate per input Pauli, in input order; the identity is exactly 1.
pub fn batch_estimate(
    paulis: &[PauliString],
    bank: &ShotBank,
    config: &EstimatorConfig,
) -> Result<AlphaTable> {
    batch_estimate_prepared(paulis, &PreparedBank::new(bank, config.groups)?, config)
}
