use serde::{Deserialize, Serialize};

use super::gibbs::GibbsNoiseModel;
use crate::pauli::Region;

/// Threshold and budget constants of the greedy structure learner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// `sup_u` of the summed max-entries of the potentials touching `u`.
    pub gamma: f64,
    /// `exp(-2 gamma) / 4`, a floor on single-site conditional probabilities.
    pub eta: f64,
    /// Threshold on `nu` for adding a region to a neighbourhood.
    pub tau: f64,
    /// Cap on the size of a grown neighbourhood.
    pub l: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    pub tau: Option<f64>,
    pub l: Option<u64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `L = ceil(8 ln 4 / tau^2)`, saturating.
pub fn budget_for_threshold(tau: f64) -> u64 {
    let l = (8.0 / (tau * tau) * 4f64.ln()).ceil();
    if l.is_finite() && l < u64::MAX as f64 {
        (l as u64).max(1)
    } else {
        u64::MAX
    }
}

/// Evaluates `gamma`, `eta`, `tau` and `L` for a model.
///
/// The threshold formula contains two symbols without a binding; they are
/// instantiated as `delta = 4 eta` (the conditional-probability floor) and
/// `d = 2`. A zero `gamma` would make the threshold infinite; since `nu`
/// never exceeds 1 the threshold is capped there.
pub fn compute_constants(
    model: &GibbsNoiseModel,
    alpha: f64,
    _beta: f64,
    overrides: ConstantOverrides,
) -> ModelConstants {
    let hg = model.hypergraph();
    let n = model.n();
    let gamma = (0..n)
        .map(|u| {
            model
                .potentials()
                .iter()
                .filter(|t| t.hyperedge().contains(u))
                .map(|t| t.max_abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let eta = 0.25 * (-2.0 * gamma).exp();
    let r = hg.r().max(1);
    let d_max = hg.derived_graph().max_degree();
    let delta = 4.0 * eta;
    let d = 2.0;
    let numerator = 2.0 * alpha * alpha * delta.powf(r as f64 + d - 1.0);
    let denominator = (r as f64).powi(2 * r as i32)
        * 4f64.powi(r as i32 + 1)
        * binomial(d_max, r - 1).max(1.0)
        * gamma
        * (2.0 * gamma).exp();
    let formula = if denominator > 0.0 {
        (numerator / denominator).min(1.0)
    } else {
        1.0
    };
    let mut tau = overrides.tau.unwrap_or(formula);
    if !(tau > 0.0) {
        tau = f64::MIN_POSITIVE;
    }
    let l = overrides.l.unwrap_or_else(|| budget_for_threshold(tau)).max(1);
    ModelConstants { gamma, eta, tau, l }
}

/// Natural log of the structure-learning shot budget, up to its unspecified
/// leading constant:
/// `log(1/(1-p0)) 4^(3r+5L) / (C_spam tau eta^L)^2 log(n^(r+L)/delta)`.
pub fn structure_budget_ln(
    constants: &ModelConstants,
    n: usize,
    r: usize,
    p0: f64,
    c_spam: f64,
    delta: f64,
) -> f64 {
    let l = constants.l.min(n as u64) as f64;
    let r = r as f64;
    let k_factor = (1.0 / (1.0 - p0)).ln().max(1.0);
    k_factor.ln() + (3.0 * r + 5.0 * l) * 4f64.ln()
        - 2.0 * (c_spam.ln() + constants.tau.ln() + l * constants.eta.ln())
        + ((r + l) * (n as f64).ln() - delta.ln()).max(1.0).ln()
}

/// Natural log of the coefficient-learning budget for precision `epsilon`:
/// `log(1/(1-p0)) e^(beta r D^(r+1)) 4^(6 r D^(r+1)) / (eps C_spam)^2 log(n^(r D^(r+1))/delta)`.
#[allow(clippy::too_many_arguments)]
pub fn coefficient_budget_ln(
    n: usize,
    r: usize,
    max_degree: usize,
    beta: f64,
    epsilon: f64,
    p0: f64,
    c_spam: f64,
    delta: f64,
) -> f64 {
    let size = r as f64 * (max_degree.max(1) as f64).powi(r as i32 + 1);
    let k_factor = (1.0 / (1.0 - p0)).ln().max(1.0);
    k_factor.ln() + beta * size + 6.0 * size * 4f64.ln()
        - 2.0 * (epsilon.ln() + c_spam.ln())
        + (size * (n as f64).ln() - delta.ln()).max(1.0).ln()
}

/// A failed regularity check on the potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConditionViolation {
    /// A graph edge not covered by any hyperedge with a non-zero tensor.
    UncoveredEdge { a: usize, b: usize },
    /// A maximal hyperedge whose potential never reaches `alpha`.
    WeakMaximalHyperedge { hyperedge: Region, max_abs: f64 },
    /// A potential entry above `beta` in absolute value.
    PotentialTooLarge { hyperedge: Region, max_abs: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub violations: Vec<ConditionViolation>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_conditions(model: &GibbsNoiseModel, alpha: f64, beta: f64) -> ConditionReport {
    let hg = model.hypergraph();
    let mut violations = Vec::new();
    let tol = 1e-12;
    for (a, b) in hg.derived_graph().edges() {
        let covered = model.potentials().iter().any(|t| {
            t.hyperedge().contains(a) && t.hyperedge().contains(b) && t.max_abs() > 0.0
        });
        if !covered {
            violations.push(ConditionViolation::UncoveredEdge { a, b });
        }
    }
    for t in model.potentials() {
        let max_abs = t.max_abs();
        if hg.is_maximal(t.hyperedge()) && max_abs < alpha - tol {
            violations.push(ConditionViolation::WeakMaximalHyperedge {
                hyperedge: t.hyperedge().clone(),
                max_abs,
            });
        }
        if max_abs > beta + tol {
            violations.push(ConditionViolation::PotentialTooLarge {
                hyperedge: t.hyperedge().clone(),
                max_abs,
            });
        }
    }
    ConditionReport { violations }
}
