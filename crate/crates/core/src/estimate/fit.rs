use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DecayPoints;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// How `alpha` is read off the decay points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaFit {
    /// Exponential fit `y_k = C alpha^k`; insensitive to SPAM.
    #[default]
    Decay,
    /// `alpha = y_k` at the smallest `k`. Unbiased only when `C_P = 1`, i.e.
    /// for noiseless SPAM, but free of the fit's variance.
    FirstPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    /// No decay point cleared the noise floor; `alpha_hat` is the first point.
    IndeterminateDecay,
    /// One decay point cleared the noise floor; `alpha_hat` is the first point.
    InsufficientData,
}

impl EstimateFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateFlag::IndeterminateDecay => "indeterminate-decay",
            EstimateFlag::InsufficientData => "insufficient-data",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "indeterminate-decay" => Ok(EstimateFlag::IndeterminateDecay),
            "insufficient-data" => Ok(EstimateFlag::InsufficientData),
            _ => Err(Error::Parse(format!("unknown estimate flag {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub pauli: PauliString,
    pub alpha_hat: f64,
    pub per_k_means: BTreeMap<u32, f64>,
    pub stderr: f64,
    pub m_groups: usize,
    /// Fitted intercept `C_P`, a SPAM diagnostic.
    pub c_hat: Option<f64>,
    pub flags: Vec<EstimateFlag>,
}

impl AlphaEstimate {
    pub fn identity(pauli: PauliString, ks: &[u32], m_groups: usize) -> Self {
        Self {
            pauli,
            alpha_hat: 1.0,
            per_k_means: ks.iter().map(|&k| (k, 1.0)).collect(),
            stderr: 0.0,
            m_groups,
            c_hat: Some(1.0),
            flags: Vec::new(),
        }
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    /// Estimate according to `mode`, falling back to the first decay point
    /// (flagged) when the exponential fit is impossible.
    pub fn from_points(points: &DecayPoints, mode: AlphaFit) -> Self {
        let per_k_means = points.points.iter().map(|p| (p.k, p.mean)).collect();
        let first = points.points.first();
        let fallback = |flags: Vec<EstimateFlag>| Self {
            pauli: points.pauli,
            alpha_hat: first.map_or(0.0, |p| p.mean.clamp(-1.0, 1.0)),
            per_k_means: points.points.iter().map(|p| (p.k, p.mean)).collect(),
            stderr: first.map_or(f64::INFINITY, |p| p.stderr),
            m_groups: points.m_groups,
            c_hat: None,
            flags,
        };
        if points.pauli.is_identity() {
            let ks: Vec<u32> = points.points.iter().map(|p| p.k).collect();
            return Self::identity(points.pauli, &ks, points.m_groups);
        }
        match mode {
            AlphaFit::FirstPoint => fallback(Vec::new()),
            AlphaFit::Decay => match fit_alpha(points) {
                Ok(mut est) => {
                    est.per_k_means = per_k_means;
                    est
                }
                Err(Error::IndeterminateDecay) => fallback(vec![EstimateFlag::IndeterminateDecay]),
                Err(_) => fallback(vec![EstimateFlag::InsufficientData]),
            },
        }
    }
}

/// Fits `y_k = C alpha^k` by weighted least squares of `log|y_k|` on `k`.
///
/// Points with `|y_k| < 3 * 3^(w/2) sqrt(m_groups) / sqrt(N_k)` are dropped.
/// Each remaining point is weighted by the inverse small-noise variance of
/// its log, `y_k^2 / se_k^2`. The sign of `alpha` is the majority sign of
/// `y_k' / y_k` over pairs with odd gap `k' - k`; even gaps say nothing about
/// it.
pub fn fit_alpha(points: &DecayPoints) -> Result<AlphaEstimate> {
    let w = points.pauli.weight() as f64;
    let usable: Vec<_> = points
        .points
        .iter()
        .filter(|p| {
            let floor = if p.shots == 0 {
                0.0
            } else {
                3.0 * 3f64.powf(w / 2.0) * (points.m_groups as f64).sqrt() / (p.shots as f64).sqrt()
            };
            p.mean != 0.0 && p.mean.abs() >= floor
        })
        .collect();
    match usable.len() {
        0 => return Err(Error::IndeterminateDecay),
        1 => return Err(Error::InsufficientData),
        _ => {}
    }

    let exact = usable.iter().any(|p| p.stderr == 0.0);
    let (mut sw, mut swk, mut swkk, mut swy, mut swky) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &usable {
        let weight = if exact {
            p.mean * p.mean
        } else {
            (p.mean / p.stderr).powi(2)
        };
        let k = p.k as f64;
        let y = p.mean.abs().ln();
        sw += weight;
        swk += weight * k;
        swkk += weight * k * k;
        swy += weight * y;
        swky += weight * k * y;
    }
    let det = sw * swkk - swk * swk;
    if !(det > 0.0) {
        return Err(Error::InsufficientData);
    }
    let slope = (sw * swky - swk * swy) / det;
    let intercept = (swkk * swy - swk * swky) / det;

    let mut votes = 0i64;
    for (i, a) in usable.iter().enumerate() {
        if let Some(b) = usable.get(i + 1) {
            if (b.k - a.k) % 2 == 1 {
                votes += if (b.mean > 0.0) == (a.mean > 0.0) { 1 } else { -1 };
            }
        }
    }
    let sign = if votes < 0 { -1.0 } else { 1.0 };
    let magnitude = slope.exp();
    let alpha_hat = (sign * magnitude).clamp(-1.0, 1.0);
    let stderr = if exact {
        0.0
    } else {
        magnitude * (sw / det).sqrt()
    };
    // sign(y_k) = sign(C) sign(alpha)^k
    let first = usable[0];
    let alpha_sign_k = if sign < 0.0 && first.k % 2 == 1 { -1.0 } else { 1.0 };
    let c_sign = first.mean.signum() * alpha_sign_k;
    Ok(AlphaEstimate {
        pauli: points.pauli,
        alpha_hat,
        per_k_means: points.points.iter().map(|p| (p.k, p.mean)).collect(),
        stderr,
        m_groups: points.m_groups,
        c_hat: Some(c_sign * intercept.exp()),
        flags: Vec::new(),
    })
}
