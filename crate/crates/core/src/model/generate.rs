use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::GibbsNoiseModel;
use super::hypergraph::{Graph, Hypergraph};
use super::potential::{full_support, PotentialTable};
use crate::error::{Error, Result};
use crate::pauli::{pauli_count, Region};
use crate::rng::Stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Topology {
    /// Sliding windows of `r` consecutive qubits.
    Chain,
    /// Sliding windows that wrap around.
    Cycle,
    /// Random `r`-qubit hyperedges, rejecting any that would push a vertex of
    /// the derived graph above `degree`.
    RandomBoundedDegree { degree: usize },
    Explicit { hyperedges: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub topology: Topology,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl ModelSpec {
    pub fn chain(n: usize, alpha: f64, beta: f64) -> Self {
        Self {
            topology: Topology::Chain,
            n,
            r: 2,
            alpha,
            beta,
        }
    }

    pub fn cycle(n: usize, alpha: f64, beta: f64) -> Self {
        Self {
            topology: Topology::Cycle,
            ..Self::chain(n, alpha, beta)
        }
    }
}

fn hyperedges_for(spec: &ModelSpec, rng: &mut Stream) -> Result<Vec<Region>> {
    let (n, r) = (spec.n, spec.r);
    if r == 0 {
        return Err(Error::Config("hyperedge range r must be at least 1".into()));
    }
    match &spec.topology {
        Topology::Chain => {
            if n < r {
                return Err(Error::Config(format!("chain of {n} qubits with range {r}")));
            }
            (0..=n - r).map(|i| Region::new(i..i + r, n)).collect()
        }
        Topology::Cycle => {
            if n <= r {
                return Err(Error::Config(format!("cycle of {n} qubits needs n > r = {r}")));
            }
            (0..n).map(|i| Region::new((i..i + r).map(|q| q % n), n)).collect()
        }
        Topology::RandomBoundedDegree { degree } => {
            if r > n {
                return Err(Error::Config(format!("range {r} exceeds {n} qubits")));
            }
            let mut graph = Graph::empty(n);
            let mut edges: Vec<Region> = Vec::new();
            let vertices: Vec<usize> = (0..n).collect();
            for _ in 0..50 * n {
                let pick: Vec<usize> = vertices.choose_multiple(rng, r).copied().collect();
                let h = Region::new(pick, n)?;
                if edges.contains(&h) {
                    continue;
                }
                let mut trial = graph.clone();
                for &a in h.qubits() {
                    for &b in h.qubits() {
                        trial.add_edge(a, b)?;
                    }
                }
                if trial.max_degree() <= *degree {
                    graph = trial;
                    edges.push(h);
                }
            }
            edges.sort_by(|a, b| a.qubits().cmp(b.qubits()));
            Ok(edges)
        }
        Topology::Explicit { hyperedges } => hyperedges
            .iter()
            .map(|h| Region::new(h.iter().copied(), n))
            .collect(),
    }
}

/// A random canonical-gauge potential with `max |theta| = top`.
pub fn random_canonical_potential(h: Region, top: f64, rng: &mut Stream) -> Result<PotentialTable> {
    let m = h.len();
    let coefficients = (0..pauli_count(m))
        .map(|p| {
            if full_support(p, m) {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let t = PotentialTable::from_coefficients(h, coefficients)?;
    let max = t.max_abs();
    if max == 0.0 {
        return Err(Error::InvalidModel("degenerate random potential".into()));
    }
    Ok(t.scaled(top / max))
}

/// Draws a model in the canonical gauge whose potentials satisfy
/// `alpha <= max |theta^h| <= beta` for every hyperedge.
pub fn generate_model(spec: &ModelSpec, rng: &mut Stream) -> Result<GibbsNoiseModel> {
    if !(spec.alpha > 0.0) || spec.alpha > spec.beta {
        return Err(Error::Config(format!(
            "need 0 < alpha <= beta, got alpha = {}, beta = {}",
            spec.alpha, spec.beta
        )));
    }
    let edges = hyperedges_for(spec, rng)?;
    let potentials = edges
        .iter()
        .map(|h| {
            let top = if spec.beta > spec.alpha {
                rng.random_range(spec.alpha..=spec.beta)
            } else {
                spec.alpha
            };
            random_canonical_potential(h.clone(), top, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    GibbsNoiseModel::new(Hypergraph::new(spec.n, spec.r, edges)?, potentials)
}
