use serde::{Deserialize, Serialize};

use super::enclosure;
use crate::error::{Error, Result};
use crate::model::{GibbsNoiseModel, PotentialTable};
use crate::pauli::{Region, ENUMERATION_CAP};

/// `1/2 sum_i |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub tv: f64,
    /// Twice the total variation distance of the error distributions.
    pub diamond: f64,
    /// Set when the model is too large to tabulate and the figures are the
    /// worst case over local regions instead.
    pub proxy: bool,
}

/// The model's potentials that lie inside `region`, relabelled onto it.
fn restricted(model: &GibbsNoiseModel, region: &Region) -> Result<GibbsNoiseModel> {
    let local = model
        .potentials()
        .iter()
        .filter(|t| t.hyperedge().is_subset(region))
        .map(|t| {
            let h = Region::from_qubits(t.hyperedge().iter().map(|q| region.position(q).expect("subset")))?;
            PotentialTable::new(h, t.values().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    GibbsNoiseModel::from_potentials(region.len(), local)
}

/// Diamond distance between the Pauli channels of two error distributions.
///
/// Above the enumeration cap, reports the worst distance between the two
/// models restricted to the enclosure of each hyperedge of `learned`.
pub fn diamond_distance(truth: &GibbsNoiseModel, learned: &GibbsNoiseModel) -> Result<DistanceReport> {
    if truth.n() != learned.n() {
        return Err(Error::Dimension {
            expected: truth.n(),
            found: learned.n(),
        });
    }
    if truth.n() <= ENUMERATION_CAP {
        let tv = tv_distance(truth.dense()?.probs(), learned.dense()?.probs())?;
        return Ok(DistanceReport {
            tv,
            diamond: 2.0 * tv,
            proxy: false,
        });
    }
    let edges = learned.hypergraph().hyperedges();
    let mut tv: f64 = 0.0;
    for h in edges {
        let region = enclosure(h, edges)?.enclosure;
        let a = restricted(truth, &region)?.dense()?;
        let b = restricted(learned, &region)?.dense()?;
        tv = tv.max(tv_distance(a.probs(), b.probs())?);
    }
    Ok(DistanceReport {
        tv,
        diamond: 2.0 * tv,
        proxy: true,
    })
}
