//! SPAM-robust eigenvalue estimation from shot banks, and reconstruction of
//! local marginals from eigenvalues.

mod fit;
mod histogram;
mod lazy;
mod marginal;
mod table;

use serde::{Deserialize, Serialize};

pub use fit::{fit_alpha, AlphaEstimate, AlphaFit, EstimateFlag};
pub use histogram::{PreparedBank, RegionStats};
pub use lazy::AlphaEstimator;
pub use marginal::{
    default_floor, default_k_grid, marginal_from_alphas, marginal_from_local_alphas,
    project_to_floor, raw_marginal_from_local_alphas, MarginalTable,
};
pub use table::{batch_estimate, batch_estimate_prepared, AlphaTable};

use crate::channel::{CliffordGroup, ShotBank, ShotRecord};
use crate::error::{Error, Result};
use crate::pauli::{Pauli1, PauliString};

/// `ceil(8 ln(1/delta))` blocks for a failure probability `delta`.
pub fn default_groups(delta: f64) -> usize {
    (8.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize
}

pub const DEFAULT_DELTA: f64 = 0.05;

/// Estimator settings shared by every route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Median-of-means block count.
    pub groups: usize,
    pub fit: AlphaFit,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            groups: default_groups(DEFAULT_DELTA),
            fit: AlphaFit::Decay,
        }
    }
}

fn check_n(p: &PauliString, n: usize) -> Result<()> {
    if p.num_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: p.num_qubits(),
        });
    }
    Ok(())
}

/// `omega_P / 3^w(P)` from the Clifford conjugation table: each non-identity
/// site contributes `<x|C^dagger P C|x><0|C^dagger P C|0>`.
fn omega_unit(p: &PauliString, cliffords: &[u8], outcome: u64) -> i64 {
    let group = CliffordGroup::get();
    let mut value = 1i64;
    let mut support = p.support_mask();
    while support != 0 {
        let q = support.trailing_zeros() as usize;
        support &= support - 1;
        let (image, sign) = group.conjugate(cliffords[q], p.get(q));
        if image != Pauli1::Z {
            return 0;
        }
        let x_sign = if outcome >> q & 1 == 1 { -1 } else { 1 };
        // <x|sZ|x> <0|sZ|0> = s (-1)^x s
        value *= (sign as i64) * x_sign * (sign as i64);
    }
    value
}

fn twirl_sign(p: &PauliString, n: usize, masks: (u64, u64)) -> i64 {
    let q = PauliString::from_masks(n, masks.0, masks.1).expect("masks fit");
    p.symplectic_unchecked(&q) as i64 * -2 + 1
}

/// `omega_P(C, x) = 3^w <x|C^dagger P C|x> <0^n|C^dagger P C|0^n>`.
pub fn omega_value(p: &PauliString, shot: &ShotRecord) -> Result<f64> {
    check_n(p, shot.n())?;
    let unit = omega_unit(p, &shot.clifford_ids, shot.outcome);
    Ok(unit as f64 * 3f64.powi(p.weight() as i32))
}

/// `Omega_k = omega_P(C, x) chi_P(Q_in) chi_P(Q_out)`.
pub fn omega_sample(p: &PauliString, shot: &ShotRecord) -> Result<f64> {
    let w = omega_value(p, shot)?;
    Ok(w * p.character(&shot.q_in)? as f64 * p.character(&shot.q_out)? as f64)
}

/// Contiguous block boundaries: `bounds[b]..bounds[b + 1]` is block `b`.
pub fn block_bounds(len: usize, groups: usize) -> Vec<usize> {
    let g = groups.min(len).max(1);
    (0..=g).map(|b| b * len / g).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Median of the means of `groups` contiguous blocks. With fewer samples
/// than groups every sample is its own block.
pub fn median_of_means(samples: &[f64], groups: usize) -> Result<f64> {
    if samples.is_empty() || groups == 0 {
        return Err(Error::EmptyInput);
    }
    let bounds = block_bounds(samples.len(), groups);
    let mut means: Vec<f64> = bounds
        .windows(2)
        .map(|w| samples[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64)
        .collect();
    Ok(median(&mut means))
}

/// Summary of `Omega_k` over one group of shots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub k: u32,
    pub shots: u64,
    /// Median-of-means estimate of `C_P alpha_P^k`.
    pub mean: f64,
    pub plain_mean: f64,
    /// Empirical variance of `Omega_k`.
    pub variance: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoints {
    pub pauli: PauliString,
    pub m_groups: usize,
    pub points: Vec<DecayPoint>,
}

impl DecayPoints {
    pub fn get(&self, k: u32) -> Option<&DecayPoint> {
        self.points.iter().find(|p| p.k == k)
    }
}

/// Builds a point from block sums of `Omega / 3^w` and the number of shots
/// where `Omega` is non-zero. Both estimation routes go through here, so
/// equal integer inputs give bit-identical points.
pub(crate) fn decay_point_from_sums(
    k: u32,
    weight: usize,
    bounds: &[usize],
    block_sums: &[i64],
    nonzero: u64,
) -> DecayPoint {
    let scale = 3f64.powi(weight as i32);
    let shots = *bounds.last().unwrap_or(&0) as u64;
    let mut means: Vec<f64> = bounds
        .windows(2)
        .zip(block_sums)
        .map(|(w, s)| scale * *s as f64 / (w[1] - w[0]) as f64)
        .collect();
    let total: i64 = block_sums.iter().sum();
    let plain_mean = scale * total as f64 / shots as f64;
    let second = scale * scale * nonzero as f64 / shots as f64;
    let variance = (second - plain_mean * plain_mean).max(0.0);
    let inflation = if means.len() > 1 {
        (std::f64::consts::PI / 2.0).sqrt()
    } else {
        1.0
    };
    let mean = median(&mut means);
    DecayPoint {
        k,
        shots,
        mean,
        plain_mean,
        variance,
        stderr: inflation * (variance / shots as f64).sqrt(),
    }
}

/// `y_k` for every group of the bank, evaluating `Omega_k` shot by shot.
pub fn estimate_decay_points(p: &PauliString, bank: &ShotBank, groups: usize) -> Result<DecayPoints> {
    check_n(p, bank.n())?;
    if groups == 0 {
        return Err(Error::Config("median-of-means needs at least one group".into()));
    }
    let n = bank.n();
    let mut points = Vec::with_capacity(bank.groups().len());
    let mut m_groups = groups;
    for g in bank.groups() {
        let bounds = block_bounds(g.len(), groups);
        m_groups = m_groups.min(bounds.len() - 1);
        let mut nonzero = 0u64;
        let sums: Vec<i64> = bounds
            .windows(2)
            .map(|w| {
                (w[0]..w[1])
                    .map(|j| {
                        let unit = omega_unit(p, g.cliffords(j), g.outcome(j));
                        nonzero += (unit != 0) as u64;
                        unit * twirl_sign(p, n, g.q_in_masks(j)) * twirl_sign(p, n, g.q_out_masks(j))
                    })
                    .sum()
            })
            .collect();
        points.push(decay_point_from_sums(g.k(), p.weight(), &bounds, &sums, nonzero));
    }
    points.sort_by_key(|p| p.k);
    Ok(DecayPoints {
        pauli: *p,
        m_groups,
        points,
    })
}
