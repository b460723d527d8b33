use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, PoisonError};

use super::fit::AlphaEstimate;
use super::table::AlphaTable;
use super::{EstimatorConfig, PreparedBank};
use crate::error::Result;
use crate::pauli::{pauli_count, PauliString, Region};

/// Estimates eigenvalues on demand, one region at a time, and remembers
/// them. Every estimate depends only on the bank and the Pauli, never on
/// which region asked first.
#[derive(Debug)]
pub struct AlphaEstimator {
    bank: PreparedBank,
    config: EstimatorConfig,
    cache: Mutex<HashMap<PauliString, AlphaEstimate>>,
    visited: Mutex<BTreeSet<Region>>,
}

impl AlphaEstimator {
    pub fn new(bank: PreparedBank, config: EstimatorConfig) -> Self {
        Self {
            bank,
            config,
            cache: Mutex::new(HashMap::new()),
            visited: Mutex::new(BTreeSet::new()),
        }
    }

    /// Seeds the cache, e.g. from a table saved by an earlier run.
    pub fn with_table(self, table: &AlphaTable) -> Self {
        {
            let mut cache = self.cache.lock().unwrap_or_else(PoisonError::into_inner);
            for e in table.entries() {
                cache.insert(e.pauli, e.clone());
            }
        }
        self
    }

    pub fn n(&self) -> usize {
        self.bank.n()
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn bank(&self) -> &PreparedBank {
        &self.bank
    }

    /// `alpha_hat` for every Pauli supported in `region`, in local order.
    pub fn region_alphas(&self, region: &Region) -> Result<Vec<f64>> {
        region.check_fits(self.n())?;
        let n = self.n();
        let m = region.len();
        let paulis: Vec<PauliString> = (0..pauli_count(m))
            .map(|i| PauliString::from_index(m, i).embed(region, n))
            .collect::<Result<_>>()?;
        let missing = {
            let cache = self.cache.lock().unwrap_or_else(PoisonError::into_inner);
            paulis.iter().any(|p| !p.is_identity() && !cache.contains_key(p))
        };
        if missing {
            let stats = self.bank.region_stats(region)?;
            let fresh: Vec<AlphaEstimate> = (0..paulis.len())
                .filter(|&i| !paulis[i].is_identity())
                .map(|i| AlphaEstimate::from_points(&stats.decay_points(i), self.config.fit))
                .collect();
            let mut cache = self.cache.lock().unwrap_or_else(PoisonError::into_inner);
            for e in fresh {
                cache.entry(e.pauli).or_insert(e);
            }
            self.visited
                .lock()
                .unwrap_or_else(PoisonError::into_inner)
                .insert(region.clone());
        }
        let cache = self.cache.lock().unwrap_or_else(PoisonError::into_inner);
        Ok(paulis
            .iter()
            .map(|p| if p.is_identity() { 1.0 } else { cache[p].alpha_hat })
            .collect())
    }

    /// Snapshot of every estimate made so far.
    pub fn table(&self) -> AlphaTable {
        let cache = self.cache.lock().unwrap_or_else(PoisonError::into_inner);
        let mut entries: Vec<AlphaEstimate> = cache.values().cloned().collect();
        entries.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        AlphaTable::new(entries)
    }

    /// Regions whose statistics required a pass over the shots.
    pub fn visited_regions(&self) -> Vec<Region> {
        self.visited
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .iter()
            .cloned()
            .collect()
    }
}
