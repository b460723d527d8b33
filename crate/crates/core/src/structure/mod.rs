//! Conditional-independence structure learning from (estimated) marginals.

mod neighborhood;
mod nu;
mod provider;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use neighborhood::{
    all_triples, nu_accuracy_check, neighborhood_learning, neighborhood_learning_with, AccuracyReport,
    Triple,
};
pub use nu::{conditional_probs, nu_from_table, nu_hat, ConditionalProbs};
pub use provider::{ExactProvider, MarginalProvider, ProtocolProvider, ProviderMode};

use crate::error::{Error, Result};
use crate::model::Graph;
use crate::pauli::Region;

/// How one-sided neighbourhood claims become edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetrization {
    /// Edge iff each endpoint lists the other.
    #[default]
    And,
    /// Edge iff either endpoint lists the other.
    Or,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedStructure {
    pub n: usize,
    pub r: usize,
    pub neighborhoods: Vec<Region>,
    pub graph: Graph,
    /// Cliques of `graph` with at most `r` vertices, singletons included.
    pub hyperedge_candidates: Vec<Region>,
    pub tau: f64,
    pub l: u64,
    pub mode: ProviderMode,
    pub symmetrization: Symmetrization,
    pub warnings: Vec<String>,
}

impl LearnedStructure {
    /// Assembles a structure from per-vertex neighbourhoods.
    pub fn from_neighborhoods(
        n: usize,
        r: usize,
        neighborhoods: Vec<Region>,
        symmetrization: Symmetrization,
        tau: f64,
        l: u64,
        mode: ProviderMode,
    ) -> Result<Self> {
        if neighborhoods.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: neighborhoods.len(),
            });
        }
        let mut graph = Graph::empty(n);
        let mut warnings = Vec::new();
        for (u, nb) in neighborhoods.iter().enumerate() {
            nb.check_fits(n)?;
            if nb.contains(u) {
                return Err(Error::RegionOverlap(format!("vertex {u} lists itself")));
            }
            for v in nb.iter().filter(|&v| v > u || !neighborhoods[v].contains(u)) {
                let mutual = neighborhoods[v].contains(u);
                if !mutual {
                    warnings.push(format!("asymmetric: {v} in N({u}) but {u} not in N({v})"));
                }
                if mutual || symmetrization == Symmetrization::Or {
                    graph.add_edge(u, v)?;
                }
            }
        }
        let hyperedge_candidates = graph.cliques(r);
        Ok(Self {
            n,
            r,
            neighborhoods,
            graph,
            hyperedge_candidates,
            tau,
            l,
            mode,
            symmetrization,
            warnings,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StructureFile::from(self))? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: StructureFile = serde_json::from_str(text)?;
        let graph = Graph::from_edges(f.n, &f.edges)?;
        for h in &f.hyperedge_candidates {
            if !graph.is_clique(h) || h.len() > f.r {
                return Err(Error::Parse(format!("candidate {h} is not a clique of size <= r")));
            }
        }
        Ok(Self {
            n: f.n,
            r: f.r,
            neighborhoods: f.neighborhoods,
            graph,
            hyperedge_candidates: f.hyperedge_candidates,
            tau: f.tau,
            l: f.l,
            mode: f.mode,
            symmetrization: f.symmetrization,
            warnings: f.warnings,
        })
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
struct StructureFile {
    n: usize,
    r: usize,
    neighborhoods: Vec<Region>,
    edges: Vec<(usize, usize)>,
    hyperedge_candidates: Vec<Region>,
    tau: f64,
    l: u64,
    mode: ProviderMode,
    symmetrization: Symmetrization,
    warnings: Vec<String>,
}

impl From<&LearnedStructure> for StructureFile {
    fn from(s: &LearnedStructure) -> Self {
        Self {
            n: s.n,
            r: s.r,
            neighborhoods: s.neighborhoods.clone(),
            edges: s.graph.edges(),
            hyperedge_candidates: s.hyperedge_candidates.clone(),
            tau: s.tau,
            l: s.l,
            mode: s.mode,
            symmetrization: s.symmetrization,
            warnings: s.warnings.clone(),
        }
    }
}

/// Runs the neighbourhood search from every vertex and symmetrizes.
pub fn learn_graph(
    provider: &dyn MarginalProvider,
    r: usize,
    l: u64,
    tau: f64,
    symmetrization: Symmetrization,
) -> Result<LearnedStructure> {
    let n = provider.n();
    let per_vertex = |u: usize| neighborhood_learning(u, r, l, tau, provider);
    #[cfg(feature = "parallel")]
    let neighborhoods: Vec<Region> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(per_vertex).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let neighborhoods: Vec<Region> = (0..n).map(per_vertex).collect::<Result<_>>()?;
    LearnedStructure::from_neighborhoods(n, r, neighborhoods, symmetrization, tau, l, provider.mode())
}

#[cfg(test)]
mod tests;
