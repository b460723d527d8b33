//! Interaction coefficients from local marginals, reconstruction of the
//! error distribution, and distances between channels.

mod distance;

use serde::{Deserialize, Serialize};

pub use distance::{diamond_distance, tv_distance, DistanceReport};

use crate::error::{Error, Result};
use crate::estimate::MarginalTable;
use crate::model::{Gauge, GibbsNoiseModel, Hypergraph, ModelFile, PotentialTable};
use crate::pauli::{character_transform, pauli_count, scatter_bits, Region, ENUMERATION_CAP};
use crate::structure::{LearnedStructure, MarginalProvider, ProviderMode};

/// A hyperedge together with the region whose marginal determines it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub hyperedge: Region,
    pub enclosure: Region,
}

/// `h` together with every hyperedge that meets it.
pub fn enclosure(h: &Region, hyperedges: &[Region]) -> Result<RegionAssignment> {
    if h.is_empty() {
        return Err(Error::InvalidModel("empty hyperedge".into()));
    }
    let enclosure = hyperedges
        .iter()
        .filter(|o| o.intersects(h))
        .fold(h.clone(), |acc, o| acc.union(o));
    if enclosure.len() > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: enclosure.len(),
            cap: ENUMERATION_CAP,
        });
    }
    Ok(RegionAssignment {
        hyperedge: h.clone(),
        enclosure,
    })
}

/// `theta_hat^h = 4^-|R| sum_P chi_P <chi_P, log mu_R>` over the characters
/// `P` on `h` allowed by `gauge`. The identity character only shifts the
/// log-partition and is always left out.
pub fn estimate_theta(h: &Region, table: &MarginalTable, gauge: Gauge) -> Result<PotentialTable> {
    let outer = table.region();
    if !h.is_subset(outer) || h.is_empty() {
        return Err(Error::RegionOverlap(format!("{h} is not a non-empty subset of {outer}")));
    }
    let big_m = outer.len();
    let m = h.len();
    let mut logs: Vec<f64> = table
        .probs()
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Ok(p.ln())
            } else {
                Err(Error::NonPositiveMarginal(p))
            }
        })
        .collect::<Result<_>>()?;
    character_transform(&mut logs, big_m);
    let positions = h
        .iter()
        .fold(0u64, |acc, q| acc | 1 << outer.position(q).expect("subset"));
    let scale = 1.0 / pauli_count(big_m) as f64;
    let full = (1usize << m) - 1;
    let coefficients = (0..pauli_count(m))
        .map(|p| {
            let (x, z) = (p & full, p >> m);
            let allowed = match gauge {
                Gauge::Canonical => x | z == full,
                Gauge::Full => p != 0,
            };
            if !allowed {
                return 0.0;
            }
            let embedded = scatter_bits(x as u64, positions) | scatter_bits(z as u64, positions) << big_m;
            scale * logs[embedded as usize]
        })
        .collect();
    PotentialTable::from_coefficients(h.clone(), coefficients)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientConfig {
    pub gauge: Gauge,
    /// Potentials with `max |theta_hat| <` this are flagged as spurious.
    pub spurious_threshold: f64,
}

impl CoefficientConfig {
    /// Half the promised minimum interaction strength.
    pub fn for_alpha(alpha: f64) -> Self {
        Self {
            gauge: Gauge::Canonical,
            spurious_threshold: alpha / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedPotential {
    pub assignment: RegionAssignment,
    pub potential: PotentialTable,
    pub spurious: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedModel {
    pub n: usize,
    pub r: usize,
    pub potentials: Vec<LearnedPotential>,
    /// The Gibbs distribution built from every learned potential.
    pub reconstructed: GibbsNoiseModel,
    pub mode: ProviderMode,
    pub config: CoefficientConfig,
}

impl LearnedModel {
    pub fn potential(&self, h: &Region) -> Option<&PotentialTable> {
        self.potentials
            .iter()
            .find(|p| &p.assignment.hyperedge == h)
            .map(|p| &p.potential)
    }

    pub fn spurious(&self) -> Vec<Region> {
        self.potentials
            .iter()
            .filter(|p| p.spurious)
            .map(|p| p.assignment.hyperedge.clone())
            .collect()
    }

    /// `max_h ||theta_hat^h - theta^h||_inf` over the union of both
    /// hyperedge sets, a missing potential counting as zero.
    pub fn max_coefficient_error(&self, truth: &GibbsNoiseModel) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in truth.potentials() {
            let err = match self.potential(t.hyperedge()) {
                Some(hat) => hat.sup_distance(t)?,
                None => t.max_abs(),
            };
            worst = worst.max(err);
        }
        for p in &self.potentials {
            if truth.potential(&p.assignment.hyperedge).is_none() {
                worst = worst.max(p.potential.max_abs());
            }
        }
        Ok(worst)
    }

    /// The reconstructed model in the model-file schema, with `provenance`
    /// describing how it was learned.
    pub fn to_model_file(&self, extra: serde_json::Value) -> ModelFile {
        let mut file = ModelFile::from_model(&self.reconstructed);
        let mut provenance = serde_json::json!({
            "provider": self.mode,
            "gauge": self.config.gauge,
            "spurious_threshold": self.config.spurious_threshold,
            "spurious": self.spurious(),
            "enclosures": self.potentials.iter().map(|p| &p.assignment).collect::<Vec<_>>(),
        });
        if let (Some(obj), serde_json::Value::Object(more)) = (provenance.as_object_mut(), extra) {
            obj.extend(more);
        }
        file.provenance = Some(provenance);
        file
    }
}

/// Estimates a potential for every hyperedge in `hyperedges` from the
/// provider's marginals on their enclosures.
pub fn learn_coefficients(
    n: usize,
    r: usize,
    hyperedges: &[Region],
    provider: &dyn MarginalProvider,
    config: CoefficientConfig,
) -> Result<LearnedModel> {
    if provider.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: provider.n(),
        });
    }
    let one = |h: &Region| -> Result<LearnedPotential> {
        let assignment = enclosure(h, hyperedges)?;
        let table = provider.marginal(&assignment.enclosure)?;
        let potential = estimate_theta(h, &table, config.gauge)?;
        Ok(LearnedPotential {
            spurious: potential.max_abs() < config.spurious_threshold,
            assignment,
            potential,
        })
    };
    #[cfg(feature = "parallel")]
    let potentials: Vec<LearnedPotential> = {
        use rayon::prelude::*;
        hyperedges.par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let potentials: Vec<LearnedPotential> = hyperedges.iter().map(one).collect::<Result<_>>()?;
    let hypergraph = Hypergraph::new(n, r.max(1), hyperedges.to_vec())?;
    let reconstructed =
        GibbsNoiseModel::new(hypergraph, potentials.iter().map(|p| p.potential.clone()).collect())?;
    Ok(LearnedModel {
        n,
        r,
        potentials,
        reconstructed,
        mode: provider.mode(),
        config,
    })
}

/// [`learn_coefficients`] on the hyperedge candidates of a learned structure.
pub fn learn_all_coefficients(
    structure: &LearnedStructure,
    provider: &dyn MarginalProvider,
    config: CoefficientConfig,
) -> Result<LearnedModel> {
    learn_coefficients(
        structure.n,
        structure.r,
        &structure.hyperedge_candidates,
        provider,
        config,
    )
}
