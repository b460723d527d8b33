use super::provider::MarginalProvider;
use crate::error::{Error, Result};
use crate::estimate::MarginalTable;
use crate::pauli::{gather_bits, pauli_count, PauliString, Region};

/// Joint and product conditionals of `(P_u, P_I)` given `P_S = s`, indexed
/// `r * 4^|I| + g` with `r`, `g` local Pauli indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalProbs {
    pub joint: Vec<f64>,
    pub product: Vec<f64>,
    /// `P(P_S = s)`.
    pub weight: f64,
}

fn low(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

fn check_triple(u: usize, i: &Region, s: &Region) -> Result<Region> {
    let single = Region::from_qubits([u])?;
    if i.contains(u) || s.contains(u) || i.intersects(s) {
        return Err(Error::RegionOverlap(format!("u={u}, I={i}, S={s}")));
    }
    Ok(single.union(i).union(s))
}

/// Joint probabilities laid out as `[s][r][g]`, marginalizing the table onto
/// `{u} | I | S` first when it covers more.
fn joint_layout(table: &MarginalTable, u: usize, i: &Region, s: &Region) -> Result<Vec<f64>> {
    let target = check_triple(u, i, s)?;
    let outer = table.region();
    if !target.is_subset(outer) {
        return Err(Error::Dimension {
            expected: target.len(),
            found: outer.len(),
        });
    }
    let m = outer.len();
    let local_mask = |r: &Region| {
        r.iter()
            .fold(0u64, |acc, q| acc | 1 << outer.position(q).expect("subset"))
    };
    let pu = outer.position(u).expect("subset");
    let (mi, ms) = (local_mask(i), local_mask(s));
    let (wi, ws) = (i.len(), s.len());
    let (gi, gs) = (pauli_count(wi), pauli_count(ws));
    let mut out = vec![0.0; gs * 4 * gi];
    for (idx, p) in table.probs().iter().enumerate() {
        let x = idx as u64 & low(m);
        let z = (idx as u64) >> m;
        let r = ((x >> pu & 1) | (z >> pu & 1) << 1) as usize;
        let g = (gather_bits(x, mi) | gather_bits(z, mi) << wi) as usize;
        let sv = (gather_bits(x, ms) | gather_bits(z, ms) << ws) as usize;
        out[(sv * 4 + r) * gi + g] += p;
    }
    Ok(out)
}

fn conditionals_from_block(block: &[f64], gi: usize) -> ConditionalProbs {
    let weight: f64 = block.iter().sum();
    let mut joint = vec![0.0; block.len()];
    let mut product = vec![0.0; block.len()];
    if weight > 0.0 {
        let pr: Vec<f64> = (0..4)
            .map(|r| block[r * gi..(r + 1) * gi].iter().sum::<f64>() / weight)
            .collect();
        let pg: Vec<f64> = (0..gi)
            .map(|g| (0..4).map(|r| block[r * gi + g]).sum::<f64>() / weight)
            .collect();
        for r in 0..4 {
            for g in 0..gi {
                joint[r * gi + g] = block[r * gi + g] / weight;
                product[r * gi + g] = pr[r] * pg[g];
            }
        }
    }
    ConditionalProbs {
        joint,
        product,
        weight,
    }
}

/// Conditionals of `(P_u, P_I)` given the configuration `s` on `S`.
pub fn conditional_probs(
    table: &MarginalTable,
    u: usize,
    i: &Region,
    s: &Region,
    config: &PauliString,
) -> Result<ConditionalProbs> {
    if config.num_qubits() != s.len() {
        return Err(Error::Dimension {
            expected: s.len(),
            found: config.num_qubits(),
        });
    }
    let layout = joint_layout(table, u, i, s)?;
    let block = 4 * pauli_count(i.len());
    let sv = config.index();
    let cond = conditionals_from_block(&layout[sv * block..(sv + 1) * block], pauli_count(i.len()));
    if !(cond.weight > 0.0) {
        return Err(Error::NonPositiveMarginal(cond.weight));
    }
    Ok(cond)
}

/// `nu_{u,I|S}` of a table covering `{u} | I | S`: the mean of `|Delta|` over
/// uniform `R`, `G`, weighted by the table's own marginal on `S`.
pub fn nu_from_table(table: &MarginalTable, u: usize, i: &Region, s: &Region) -> Result<f64> {
    let layout = joint_layout(table, u, i, s)?;
    let gi = pauli_count(i.len());
    let block = 4 * gi;
    let mut total = 0.0;
    for chunk in layout.chunks_exact(block) {
        let c = conditionals_from_block(chunk, gi);
        let dev: f64 = c
            .joint
            .iter()
            .zip(&c.product)
            .map(|(j, p)| (j - p).abs())
            .sum();
        total += c.weight * dev;
    }
    Ok(total / block as f64)
}

/// `nu_hat_{u,I|S}` from the provider's marginal on `{u} | I | S`.
pub fn nu_hat(u: usize, i: &Region, s: &Region, provider: &dyn MarginalProvider) -> Result<f64> {
    let region = check_triple(u, i, s)?;
    region.check_fits(provider.n())?;
    let table = provider.marginal(&region)?;
    nu_from_table(&table, u, i, s)
}
