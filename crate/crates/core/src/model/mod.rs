//! Hypergraph Gibbs distributions over Pauli strings: the ground-truth error
//! distribution of a local Pauli channel.

mod constants;
mod generate;
mod gibbs;
mod hypergraph;
mod potential;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use constants::{
    budget_for_threshold, coefficient_budget_ln, compute_constants, structure_budget_ln,
    validate_conditions, ConditionReport, ConditionViolation, ConstantOverrides, ModelConstants,
};
pub use generate::{generate_model, random_canonical_potential, ModelSpec, Topology};
pub use gibbs::{
    DenseDistribution, DenseSampler, ErrorSampler, GibbsNoiseModel, McmcConfig, MetropolisSampler,
};
pub use hypergraph::{Graph, Hypergraph};
pub use potential::{Gauge, PotentialTable};

use crate::error::Result;

/// On-disk form of a model. Learned models add a `provenance` object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub r: usize,
    pub hyperedges: Vec<PotentialTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl ModelFile {
    pub fn from_model(model: &GibbsNoiseModel) -> Self {
        Self {
            n: model.n(),
            r: model.hypergraph().r(),
            hyperedges: model.potentials().to_vec(),
            alpha: None,
            beta: None,
            seed: None,
            provenance: None,
        }
    }

    pub fn to_model(&self) -> Result<GibbsNoiseModel> {
        let edges = self.hyperedges.iter().map(|t| t.hyperedge().clone()).collect();
        GibbsNoiseModel::new(
            Hypergraph::new(self.n, self.r, edges)?,
            self.hyperedges.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    #[test]
    fn model_file_round_trip_is_bit_exact() {
        let m = generate_model(&ModelSpec::cycle(6, 0.1, 0.9), &mut derive(3, &[])).unwrap();
        let mut file = ModelFile::from_model(&m);
        file.alpha = Some(0.1);
        file.beta = Some(0.9);
        file.seed = Some(3);
        let text = file.to_json().unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_model().unwrap(), m);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
