use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::AlphaTable;
use crate::error::{Error, Result};
use crate::pauli::{character_transform, pauli_count, PauliString, Region, ENUMERATION_CAP};

/// `1e-6 * 4^-|A|`.
pub fn default_floor(m: usize) -> f64 {
    1e-6 / pauli_count(m) as f64
}

/// `k` in `{1, 2, 4, ...}` up to
/// `max(2, ceil(2 ln(1/(1-p0)) / (1-alpha_min)))`, and never above `cap`.
pub fn default_k_grid(p0: f64, alpha_min: f64, cap: u32) -> Vec<u32> {
    let raw = 2.0 * (1.0 / (1.0 - p0)).ln() / (1.0 - alpha_min);
    let k_max = if raw.is_finite() {
        (raw.ceil() as u32).max(2)
    } else {
        cap
    };
    let k_max = k_max.min(cap.max(1));
    std::iter::successors(Some(1u32), |k| k.checked_mul(2))
        .take_while(|&k| k <= k_max)
        .collect()
}

/// Estimated marginal over a region, indexed like
/// [`enumerate_paulis`](crate::pauli::enumerate_paulis).
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    region: Region,
    probs: Vec<f64>,
    floor: f64,
}

impl MarginalTable {
    pub fn new(region: Region, probs: Vec<f64>, floor: f64) -> Result<Self> {
        if probs.len() != pauli_count(region.len()) {
            return Err(Error::Dimension {
                expected: pauli_count(region.len()),
                found: probs.len(),
            });
        }
        if let Some(&bad) = probs.iter().find(|p| !(**p >= floor && **p > 0.0)) {
            return Err(Error::NonPositiveMarginal(bad));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("marginal sums to {total}")));
        }
        Ok(Self {
            region,
            probs,
            floor,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Probability of a string over the region's qubits.
    pub fn probability(&self, local: &PauliString) -> Result<f64> {
        if local.num_qubits() != self.region.len() {
            return Err(Error::Dimension {
                expected: self.region.len(),
                found: local.num_qubits(),
            });
        }
        Ok(self.probs[local.index()])
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MarginalFile {
            region: self.region.clone(),
            floor: self.floor,
            probs: self
                .probs
                .iter()
                .enumerate()
                .map(|(i, p)| (PauliString::from_index(self.region.len(), i).to_string(), *p))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MarginalFile = serde_json::from_str(text)?;
        let m = file.region.len();
        if m > ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                size: m,
                cap: ENUMERATION_CAP,
            });
        }
        let mut probs = vec![f64::NAN; pauli_count(m)];
        let lookup: HashMap<String, f64> = file.probs.into_iter().collect();
        for (i, slot) in probs.iter_mut().enumerate() {
            let key = PauliString::from_index(m, i).to_string();
            *slot = *lookup
                .get(&key)
                .ok_or_else(|| Error::Parse(format!("marginal is missing {key}")))?;
        }
        Self::new(file.region, probs, file.floor)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct MarginalFile {
    region: Region,
    floor: f64,
    probs: Vec<(String, f64)>,
}

/// `mu_A(P) = 4^-|A| sum_Q (-1)^(P.Q) alpha_Q` from eigenvalues given in
/// local enumeration order.
pub fn raw_marginal_from_local_alphas(m: usize, mut alphas: Vec<f64>) -> Result<Vec<f64>> {
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    if alphas.len() != pauli_count(m) {
        return Err(Error::Dimension {
            expected: pauli_count(m),
            found: alphas.len(),
        });
    }
    character_transform(&mut alphas, m);
    let scale = 1.0 / pauli_count(m) as f64;
    for a in alphas.iter_mut() {
        *a *= scale;
    }
    Ok(alphas)
}

/// Raises entries below `floor` to it and rescales the rest so the total is
/// 1, repeating until no free entry falls below the floor.
pub fn project_to_floor(raw: &[f64], floor: f64) -> Vec<f64> {
    let len = raw.len();
    if floor * len as f64 >= 1.0 {
        return vec![1.0 / len as f64; len];
    }
    let mut clamped = vec![false; len];
    let mut out = raw.to_vec();
    loop {
        let fixed = clamped.iter().filter(|c| **c).count();
        let free_total: f64 = out
            .iter()
            .zip(&clamped)
            .filter(|(_, c)| !**c)
            .map(|(v, _)| v.max(0.0))
            .sum();
        let target = 1.0 - floor * fixed as f64;
        let mut changed = false;
        for (i, v) in out.iter_mut().enumerate() {
            if clamped[i] {
                *v = floor;
            } else if !(free_total > 0.0) {
                *v = target / (len - fixed) as f64;
            } else {
                *v = v.max(0.0) * target / free_total;
            }
        }
        for (i, v) in out.iter_mut().enumerate() {
            if !clamped[i] && *v < floor {
                clamped[i] = true;
                *v = floor;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Absorb rounding into the largest entry.
    let total: f64 = out.iter().sum();
    if let Some(big) = out
        .iter_mut()
        .max_by(|a, b| a.total_cmp(b))
    {
        *big += 1.0 - total;
    }
    out
}

/// Projected marginal from local eigenvalues.
pub fn marginal_from_local_alphas(
    region: &Region,
    alphas: Vec<f64>,
    floor: f64,
) -> Result<MarginalTable> {
    let raw = raw_marginal_from_local_alphas(region.len(), alphas)?;
    MarginalTable::new(region.clone(), project_to_floor(&raw, floor), floor)
}

/// Inverts the eigenvalues of every Pauli supported in `region`.
pub fn marginal_from_alphas(
    region: &Region,
    n: usize,
    table: &AlphaTable,
    floor: f64,
) -> Result<MarginalTable> {
    region.check_fits(n)?;
    let m = region.len();
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    let alphas = (0..pauli_count(m))
        .map(|i| table.alpha(&PauliString::from_index(m, i).embed(region, n)?))
        .collect::<Result<Vec<_>>>()?;
    marginal_from_local_alphas(region, alphas, floor)
}
