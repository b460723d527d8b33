use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::nu::nu_hat;
use super::provider::MarginalProvider;
use crate::error::{Error, Result};
use crate::pauli::Region;
use crate::rng::Stream;

/// Subsets of `pool` with between `min` and `max` elements, in `Region` order.
pub(crate) fn subsets(pool: &[usize], min: usize, max: usize) -> Vec<Region> {
    fn go(pool: &[usize], start: usize, cur: &mut Vec<usize>, min: usize, max: usize, out: &mut Vec<Region>) {
        if cur.len() >= min {
            out.push(Region::from_qubits(cur.iter().copied()).expect("distinct qubits"));
        }
        if cur.len() == max {
            return;
        }
        for j in start..pool.len() {
            cur.push(pool[j]);
            go(pool, j + 1, cur, min, max, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, 0, &mut Vec::new(), min, max, &mut out);
    out.sort();
    out
}

/// Greedy grow-then-prune neighbourhood search driven by an arbitrary score
/// `nu(I, S)`.
///
/// Grow: while `|S| <= l`, add the candidate `I` (all subsets of the free
/// qubits with `1..=r-1` elements) with the largest score above `tau`, ties
/// going to the smallest region. Prune: against a snapshot of `S`, drop each
/// `i` whose score `nu({i}, S - i)` is below `tau`.
pub fn neighborhood_learning_with<F>(
    u: usize,
    n: usize,
    r: usize,
    l: u64,
    tau: f64,
    mut nu: F,
) -> Result<Region>
where
    F: FnMut(&Region, &Region) -> Result<f64>,
{
    if u >= n {
        return Err(Error::OutOfRange { index: u, n });
    }
    if l == 0 || !(tau > 0.0) {
        return Err(Error::Config(format!("need L >= 1 and tau > 0, got L={l}, tau={tau}")));
    }
    let mut s = Region::empty();
    while (s.len() as u64) <= l {
        let pool: Vec<usize> = (0..n).filter(|&q| q != u && !s.contains(q)).collect();
        let mut best: Option<(f64, Region)> = None;
        for cand in subsets(&pool, 1, r.saturating_sub(1)) {
            let v = nu(&cand, &s)?;
            if v > tau && best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, cand));
            }
        }
        match best {
            Some((_, i)) => s = s.union(&i),
            None => break,
        }
    }
    let snapshot = s.clone();
    for i in snapshot.iter() {
        let single = Region::from_qubits([i])?;
        if nu(&single, &snapshot.difference(&single))? < tau {
            s = s.difference(&single);
        }
    }
    Ok(s)
}

/// Estimated neighbourhood of `u` from provider marginals.
pub fn neighborhood_learning(
    u: usize,
    r: usize,
    l: u64,
    tau: f64,
    provider: &dyn MarginalProvider,
) -> Result<Region> {
    neighborhood_learning_with(u, provider.n(), r, l, tau, |i, s| nu_hat(u, i, s, provider))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub u: usize,
    pub i: Region,
    pub s: Region,
    pub nu: f64,
    pub nu_hat: f64,
}

impl Triple {
    pub fn deviation(&self) -> f64 {
        (self.nu - self.nu_hat).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub ell: usize,
    pub epsilon: f64,
    pub checked: usize,
    pub max_deviation: f64,
    /// The triple attaining `max_deviation`.
    pub worst: Option<Triple>,
    pub violations: Vec<Triple>,
}

impl AccuracyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every `(u, I, S)` with `|I| <= r - 1` and `|S| <= ell`.
pub fn all_triples(n: usize, r: usize, ell: usize) -> Vec<(usize, Region, Region)> {
    let mut out = Vec::new();
    for u in 0..n {
        let others: Vec<usize> = (0..n).filter(|&q| q != u).collect();
        for i in subsets(&others, 1, r.saturating_sub(1)) {
            let rest: Vec<usize> = others.iter().copied().filter(|&q| !i.contains(q)).collect();
            for s in subsets(&rest, 0, ell) {
                out.push((u, i.clone(), s));
            }
        }
    }
    out
}

/// Compares `nu_hat` from `provider` against `nu` from `exact` on every triple
/// with `|I| <= r - 1` and `|S| <= ell`, or on `sample` of them drawn with
/// replacement from `rng`.
pub fn nu_accuracy_check(
    provider: &dyn MarginalProvider,
    exact: &dyn MarginalProvider,
    r: usize,
    ell: usize,
    epsilon: f64,
    sample: Option<(usize, &mut Stream)>,
) -> Result<AccuracyReport> {
    if provider.n() != exact.n() {
        return Err(Error::Dimension {
            expected: exact.n(),
            found: provider.n(),
        });
    }
    let all = all_triples(exact.n(), r, ell);
    let triples: Vec<&(usize, Region, Region)> = match sample {
        Some((count, rng)) => (0..count).filter_map(|_| all.choose(rng)).collect(),
        None => all.iter().collect(),
    };
    let mut report = AccuracyReport {
        ell,
        epsilon,
        checked: triples.len(),
        max_deviation: 0.0,
        worst: None,
        violations: Vec::new(),
    };
    for (u, i, s) in triples {
        let t = Triple {
            u: *u,
            i: i.clone(),
            s: s.clone(),
            nu: nu_hat(*u, i, s, exact)?,
            nu_hat: nu_hat(*u, i, s, provider)?,
        };
        let d = t.deviation();
        if d > epsilon {
            report.violations.push(t.clone());
        }
        if report.worst.is_none() || d > report.max_deviation {
            report.max_deviation = d;
            report.worst = Some(t);
        }
    }
    Ok(report)
}
