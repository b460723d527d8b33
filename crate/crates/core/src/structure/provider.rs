use std::collections::HashMap;
use std::sync::{Arc, Mutex, PoisonError};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{default_floor, marginal_from_local_alphas, AlphaEstimator, MarginalTable};
use crate::model::{DenseDistribution, GibbsNoiseModel};
use crate::pauli::{pauli_count, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderMode {
    /// Marginals of the true distribution.
    Exact,
    /// Marginals inverted from estimated eigenvalues.
    Protocol,
}

/// Source of (estimated) marginals on demand. Implementations must be safe
/// to share across threads and return the same table for repeated queries.
pub trait MarginalProvider: Sync {
    fn n(&self) -> usize;
    fn mode(&self) -> ProviderMode;
    fn marginal(&self, region: &Region) -> Result<Arc<MarginalTable>>;
}

#[derive(Debug, Default)]
struct Cache(Mutex<HashMap<Region, Arc<MarginalTable>>>);

impl Cache {
    fn get_or_try(
        &self,
        region: &Region,
        make: impl FnOnce() -> Result<MarginalTable>,
    ) -> Result<Arc<MarginalTable>> {
        if let Some(t) = self.0.lock().unwrap_or_else(PoisonError::into_inner).get(region) {
            return Ok(t.clone());
        }
        let table = Arc::new(make()?);
        Ok(self
            .0
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .entry(region.clone())
            .or_insert(table)
            .clone())
    }

    fn len(&self) -> usize {
        self.0.lock().unwrap_or_else(PoisonError::into_inner).len()
    }
}

/// Exact marginals of a model small enough to tabulate.
#[derive(Debug)]
pub struct ExactProvider {
    dense: Arc<DenseDistribution>,
    cache: Cache,
}

impl ExactProvider {
    pub fn new(model: &GibbsNoiseModel) -> Result<Self> {
        Ok(Self::from_dense(Arc::new(model.dense()?)))
    }

    pub fn from_dense(dense: Arc<DenseDistribution>) -> Self {
        Self {
            dense,
            cache: Cache::default(),
        }
    }

    pub fn dense(&self) -> &DenseDistribution {
        &self.dense
    }
}

impl MarginalProvider for ExactProvider {
    fn n(&self) -> usize {
        self.dense.n()
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::Exact
    }

    fn marginal(&self, region: &Region) -> Result<Arc<MarginalTable>> {
        self.cache.get_or_try(region, || {
            let probs = self.dense.marginal(region)?;
            let floor = probs.iter().copied().fold(f64::INFINITY, f64::min);
            if !(floor > 0.0) {
                return Err(Error::NonPositiveMarginal(floor));
            }
            // Re-sum in a fixed order so the table is normalized to rounding.
            let total: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
            MarginalTable::new(region.clone(), probs, 0.0)
        })
    }
}

/// Marginals from lazily estimated eigenvalues, floored at
/// `floor_scale * 4^-|A|`.
#[derive(Debug)]
pub struct ProtocolProvider {
    estimator: Arc<AlphaEstimator>,
    floor_scale: f64,
    cache: Cache,
}

impl ProtocolProvider {
    pub fn new(estimator: Arc<AlphaEstimator>) -> Self {
        Self::with_floor_scale(estimator, default_floor(0))
    }

    pub fn with_floor_scale(estimator: Arc<AlphaEstimator>, floor_scale: f64) -> Self {
        Self {
            estimator,
            floor_scale,
            cache: Cache::default(),
        }
    }

    pub fn estimator(&self) -> &AlphaEstimator {
        &self.estimator
    }

    pub fn cached_regions(&self) -> usize {
        self.cache.len()
    }
}

impl MarginalProvider for ProtocolProvider {
    fn n(&self) -> usize {
        self.estimator.n()
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::Protocol
    }

    fn marginal(&self, region: &Region) -> Result<Arc<MarginalTable>> {
        self.cache.get_or_try(region, || {
            let alphas = self.estimator.region_alphas(region)?;
            let floor = self.floor_scale / pauli_count(region.len()) as f64;
            marginal_from_local_alphas(region, alphas, floor)
        })
    }
}
