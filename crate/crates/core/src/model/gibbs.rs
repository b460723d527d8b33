use std::sync::{Arc, OnceLock};

use rand::Rng;

use super::hypergraph::Hypergraph;
use super::potential::PotentialTable;
use crate::error::{Error, Result};
use crate::pauli::{gather_bits, pauli_count, PauliString, Region, ENUMERATION_CAP};
use crate::rng::Stream;

/// A full-support Gibbs distribution over Pauli strings,
/// `mu(P) = exp(sum_h theta^h(P_h) - C)`.
#[derive(Clone, Debug)]
pub struct GibbsNoiseModel {
    hypergraph: Hypergraph,
    potentials: Vec<PotentialTable>,
    log_partition: OnceLock<f64>,
}

impl PartialEq for GibbsNoiseModel {
    fn eq(&self, other: &Self) -> bool {
        self.hypergraph == other.hypergraph && self.potentials == other.potentials
    }
}

impl GibbsNoiseModel {
    /// One potential per hyperedge, in hyperedge order.
    pub fn new(hypergraph: Hypergraph, potentials: Vec<PotentialTable>) -> Result<Self> {
        if potentials.len() != hypergraph.hyperedges().len() {
            return Err(Error::InvalidModel(format!(
                "{} hyperedges but {} potentials",
                hypergraph.hyperedges().len(),
                potentials.len()
            )));
        }
        for (h, t) in hypergraph.hyperedges().iter().zip(&potentials) {
            if h != t.hyperedge() {
                return Err(Error::InvalidModel(format!(
                    "potential on {} listed for hyperedge {h}",
                    t.hyperedge()
                )));
            }
        }
        Ok(Self {
            hypergraph,
            potentials,
            log_partition: OnceLock::new(),
        })
    }

    /// Builds the model from `(hyperedge, potential)` pairs, inferring `r`.
    pub fn from_potentials(n: usize, potentials: Vec<PotentialTable>) -> Result<Self> {
        let r = potentials.iter().map(|t| t.hyperedge().len()).max().unwrap_or(1);
        let edges = potentials.iter().map(|t| t.hyperedge().clone()).collect();
        Self::new(Hypergraph::new(n, r, edges)?, potentials)
    }

    pub fn uniform(n: usize) -> Self {
        Self::new(Hypergraph::empty(n), Vec::new()).expect("empty model is valid")
    }

    /// Independent qubits with per-qubit error probabilities `(I, X, Z, Y)` in
    /// enumeration order. Every probability must be positive.
    pub fn product(n: usize, local: [f64; 4]) -> Result<Self> {
        if local.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidModel("product model needs full support".into()));
        }
        let logs: Vec<f64> = local.iter().map(|p| p.ln()).collect();
        let potentials = (0..n)
            .map(|q| {
                PotentialTable::new(Region::from_qubits([q])?, logs.clone())
                    .map(|t| t.zero_sum_projected())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_potentials(n, potentials)
    }

    /// Independent depolarizing noise, `mu_i(I) = 1 - p`, `p/3` otherwise.
    pub fn product_depolarizing(n: usize, p: f64) -> Result<Self> {
        Self::product(n, [1.0 - p, p / 3.0, p / 3.0, p / 3.0])
    }

    pub fn n(&self) -> usize {
        self.hypergraph.n()
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraph
    }

    pub fn potentials(&self) -> &[PotentialTable] {
        &self.potentials
    }

    pub fn potential(&self, h: &Region) -> Option<&PotentialTable> {
        self.potentials.iter().find(|t| t.hyperedge() == h)
    }

    /// Multiplies every potential by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.hypergraph.clone(),
            self.potentials.iter().map(|t| t.scaled(factor)).collect(),
        )
        .expect("scaling keeps the structure")
    }

    pub fn zero_sum_projected(&self) -> Self {
        Self::new(
            self.hypergraph.clone(),
            self.potentials.iter().map(|t| t.zero_sum_projected()).collect(),
        )
        .expect("projection keeps the structure")
    }

    /// `sum_h theta^h(P_h)`.
    pub fn log_density_unnormalized(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: p.num_qubits(),
            });
        }
        Ok(self
            .potentials
            .iter()
            .map(|t| t.value_at(p.restrict_unchecked(t.hyperedge()).index()))
            .sum())
    }

    /// `C`, computed by exhaustive summation and cached.
    pub fn partition(&self) -> Result<f64> {
        if let Some(&c) = self.log_partition.get() {
            return Ok(c);
        }
        let c = self.dense()?.log_partition();
        Ok(*self.log_partition.get_or_init(|| c))
    }

    /// `mu(P)`; requires the partition function.
    pub fn probability(&self, p: &PauliString) -> Result<f64> {
        Ok((self.log_density_unnormalized(p)? - self.partition()?).exp())
    }

    /// The full probability table, in enumeration order.
    pub fn dense(&self) -> Result<DenseDistribution> {
        let n = self.n();
        if n > ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                size: n,
                cap: ENUMERATION_CAP,
            });
        }
        let len = pauli_count(n);
        let mut logw = vec![0.0f64; len];
        let low = (1u64 << n) - 1;
        for t in &self.potentials {
            let mask = t.hyperedge().mask();
            let m = t.hyperedge().len();
            for (idx, lw) in logw.iter_mut().enumerate() {
                let x = idx as u64 & low;
                let z = idx as u64 >> n;
                let local = gather_bits(x, mask) | gather_bits(z, mask) << m;
                *lw += t.value_at(local as usize);
            }
        }
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logw.iter().map(|l| (l - max).exp()).sum();
        let log_partition = max + sum.ln();
        let _ = self.log_partition.set(log_partition);
        let probs = logw.iter().map(|l| (l - log_partition).exp()).collect();
        Ok(DenseDistribution {
            n,
            probs,
            log_partition,
        })
    }

    /// `mu_A`, by exhaustive summation.
    pub fn exact_marginal(&self, region: &Region) -> Result<Vec<f64>> {
        self.dense()?.marginal(region)
    }

    /// A sampler for `P ~ mu`: exact below the enumeration cap, Metropolis
    /// above it (in which case `mcmc` must be supplied).
    pub fn sampler(self: &Arc<Self>, mcmc: Option<McmcConfig>) -> Result<ErrorSampler> {
        if self.n() <= ENUMERATION_CAP {
            Ok(ErrorSampler::Exact(Arc::new(self.dense()?.into_sampler())))
        } else {
            let config = mcmc.ok_or(Error::UnconfiguredMcmc)?;
            Ok(ErrorSampler::Metropolis(MetropolisSampler::new(self.clone(), config)))
        }
    }
}

/// An explicit probability table over all `4^n` Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDistribution {
    n: usize,
    probs: Vec<f64>,
    log_partition: f64,
}

impl DenseDistribution {
    pub fn from_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n > ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                size: n,
                cap: ENUMERATION_CAP,
            });
        }
        if probs.len() != pauli_count(n) {
            return Err(Error::Dimension {
                expected: pauli_count(n),
                found: probs.len(),
            });
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidModel("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            n,
            probs,
            log_partition: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probability(&self, p: &PauliString) -> f64 {
        self.probs[p.index()]
    }

    pub fn marginal(&self, region: &Region) -> Result<Vec<f64>> {
        region.check_fits(self.n)?;
        let m = region.len();
        let mask = region.mask();
        let low = (1u64 << self.n) - 1;
        let mut out = vec![0.0; pauli_count(m)];
        for (idx, p) in self.probs.iter().enumerate() {
            let x = idx as u64 & low;
            let z = idx as u64 >> self.n;
            let local = gather_bits(x, mask) | gather_bits(z, mask) << m;
            out[local as usize] += p;
        }
        Ok(out)
    }

    /// `alpha_Q = sum_P (-1)^(P.Q) mu(P)`.
    pub fn eigenvalue(&self, q: &PauliString) -> Result<f64> {
        if q.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: q.num_qubits(),
            });
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let e = PauliString::from_index(self.n, i);
                if e.symplectic_unchecked(q) == 0 {
                    *p
                } else {
                    -*p
                }
            })
            .sum())
    }

    pub fn into_sampler(self) -> DenseSampler {
        let mut acc = 0.0;
        let cdf = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        DenseSampler { n: self.n, cdf }
    }
}

/// Inverse-CDF sampling from a dense table.
#[derive(Clone, Debug)]
pub struct DenseSampler {
    n: usize,
    cdf: Vec<f64>,
}

impl DenseSampler {
    pub fn sample(&self, rng: &mut Stream) -> PauliString {
        let total = *self.cdf.last().expect("non-empty table");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        PauliString::from_index(self.n, idx)
    }
}

/// Burn-in and thinning, both measured in full sweeps over the qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct McmcConfig {
    pub burn_in_sweeps: usize,
    pub thinning_sweeps: usize,
}

impl McmcConfig {
    pub fn for_qubits(n: usize) -> Self {
        Self {
            burn_in_sweeps: 100 * n,
            thinning_sweeps: 10,
        }
    }
}

/// Single-site Metropolis chain with uniform proposals over `{I, X, Z, Y}`.
#[derive(Clone, Debug)]
pub struct MetropolisSampler {
    model: Arc<GibbsNoiseModel>,
    config: McmcConfig,
    incidence: Vec<Vec<usize>>,
}

impl MetropolisSampler {
    pub fn new(model: Arc<GibbsNoiseModel>, config: McmcConfig) -> Self {
        let incidence = (0..model.n())
            .map(|u| model.hypergraph().incident(u).map(|(i, _)| i).collect())
            .collect();
        Self {
            model,
            config,
            incidence,
        }
    }

    fn local_energy(&self, state: &PauliString, q: usize) -> f64 {
        self.incidence[q]
            .iter()
            .map(|&i| {
                let t = &self.model.potentials[i];
                t.value_at(state.restrict_unchecked(t.hyperedge()).index())
            })
            .sum()
    }

    fn sweep(&self, state: &mut PauliString, rng: &mut Stream) {
        let n = self.model.n();
        for q in 0..n {
            let proposal = rng.random_range(0..4u64);
            let bit = 1u64 << q;
            let mut next = PauliString::from_masks(
                n,
                (state.x_mask() & !bit) | ((proposal & 1) << q),
                (state.z_mask() & !bit) | ((proposal >> 1) << q),
            )
            .expect("same width");
            if next == *state {
                continue;
            }
            let delta = self.local_energy(&next, q) - self.local_energy(state, q);
            if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
                std::mem::swap(state, &mut next);
            }
        }
    }

    /// Runs a fresh chain from the identity through burn-in and returns its
    /// final configuration.
    pub fn sample(&self, rng: &mut Stream) -> PauliString {
        let mut state = PauliString::identity(self.model.n());
        for _ in 0..self.config.burn_in_sweeps.max(1) {
            self.sweep(&mut state, rng);
        }
        state
    }

    /// One chain: burn-in once, then `count` draws separated by thinning.
    pub fn sample_chain(&self, count: usize, rng: &mut Stream) -> Vec<PauliString> {
        let mut state = self.sample(rng);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                for _ in 0..self.config.thinning_sweeps.max(1) {
                    self.sweep(&mut state, rng);
                }
            }
            out.push(state);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum ErrorSampler {
    Exact(Arc<DenseSampler>),
    Metropolis(MetropolisSampler),
}

impl ErrorSampler {
    pub fn sample(&self, rng: &mut Stream) -> PauliString {
        match self {
            ErrorSampler::Exact(s) => s.sample(rng),
            ErrorSampler::Metropolis(s) => s.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    fn reg(q: &[usize]) -> Region {
        Region::from_qubits(q.iter().copied()).unwrap()
    }

    #[test]
    fn uniform_model() {
        let m = GibbsNoiseModel::uniform(3);
        let p: PauliString = "XYZ".parse().unwrap();
        assert_eq!(m.log_density_unnormalized(&p).unwrap(), 0.0);
        assert!((m.partition().unwrap() - 3.0 * 4f64.ln()).abs() < 1e-12);
        let marg = m.exact_marginal(&reg(&[0, 2])).unwrap();
        assert!(marg.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn single_site_lookup_and_partition() {
        let t = 0.7;
        let table = PotentialTable::new(reg(&[0]), vec![0.0, 0.0, t, 0.0]).unwrap();
        let m = GibbsNoiseModel::from_potentials(2, vec![table.clone()]).unwrap();
        let p: PauliString = "ZI".parse().unwrap();
        assert_eq!(m.log_density_unnormalized(&p).unwrap(), t);

        // One qubit with a rebalanced potential: four exponentials.
        let zs = table.zero_sum_projected();
        let m1 = GibbsNoiseModel::from_potentials(1, vec![zs.clone()]).unwrap();
        let oracle = zs.values().iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((m1.partition().unwrap() - oracle).abs() < 1e-14);
        // Shifting theta changes C but not mu.
        let shifted = GibbsNoiseModel::from_potentials(1, vec![table]).unwrap();
        let a = m1.dense().unwrap();
        let b = shifted.dense().unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_errors() {
        let m = GibbsNoiseModel::uniform(2);
        let p: PauliString = "XYZ".parse().unwrap();
        assert!(matches!(m.log_density_unnormalized(&p), Err(Error::Dimension { .. })));
        assert!(matches!(
            GibbsNoiseModel::uniform(13).partition(),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let m = Arc::new(GibbsNoiseModel::uniform(2));
        let s = m.sampler(None).unwrap();
        let mut rng = derive(11, &[]);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[s.sample(&mut rng).get(0).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = Arc::new(GibbsNoiseModel::product_depolarizing(3, 0.2).unwrap());
        let s = m.sampler(None).unwrap();
        let a: Vec<_> = {
            let mut r = derive(5, &[1]);
            (0..50).map(|_| s.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = derive(5, &[1]);
            (0..50).map(|_| s.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn unconfigured_mcmc_is_an_error() {
        let m = Arc::new(GibbsNoiseModel::uniform(13));
        assert!(matches!(m.sampler(None), Err(Error::UnconfiguredMcmc)));
        assert!(m.sampler(Some(McmcConfig::for_qubits(13))).is_ok());
    }
}
