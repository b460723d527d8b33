//! The Pauli channel under study, SPAM noise, and a per-shot simulator of
//! the randomized twirled circuits used to probe it.

mod clifford;
mod shots;
mod spam;

use std::sync::Arc;

pub use clifford::{
    adjoint, as_signed_pauli, matmul, pauli_matrix, CliffordGroup, Mat2, CLIFFORD_ORDERING,
    GROUP_SIZE,
};
pub use shots::{
    batch_simulate, batch_simulate_serial, shot_stream, simulate_shot, BankHeader, ScheduleEntry,
    ShotBank, ShotGroup, ShotRecord,
};
pub use spam::{LocalPauliChannel, SpamModel};

use crate::error::{Error, Result};
use crate::model::{DenseDistribution, ErrorSampler, GibbsNoiseModel, McmcConfig};
use crate::pauli::{PauliString, ENUMERATION_CAP};
use crate::rng::Stream;

/// A Pauli channel `rho -> sum_P mu(P) P rho P`.
#[derive(Clone, Debug)]
pub struct PauliChannel {
    n: usize,
    model: Option<Arc<GibbsNoiseModel>>,
    dense: Option<Arc<DenseDistribution>>,
    sampler: ErrorSampler,
}

impl PauliChannel {
    /// Below the enumeration cap the error table is built once and shared by
    /// the sampler and the exact eigenvalue oracle.
    pub fn from_model(model: GibbsNoiseModel, mcmc: Option<McmcConfig>) -> Result<Self> {
        let n = model.n();
        let model = Arc::new(model);
        if n <= ENUMERATION_CAP {
            let dense = model.dense()?;
            let sampler = ErrorSampler::Exact(Arc::new(dense.clone().into_sampler()));
            Ok(Self {
                n,
                model: Some(model),
                dense: Some(Arc::new(dense)),
                sampler,
            })
        } else {
            let sampler = model.sampler(mcmc)?;
            Ok(Self {
                n,
                model: Some(model),
                dense: None,
                sampler,
            })
        }
    }

    pub fn from_table(dense: DenseDistribution) -> Self {
        let sampler = ErrorSampler::Exact(Arc::new(dense.clone().into_sampler()));
        Self {
            n: dense.n(),
            model: None,
            dense: Some(Arc::new(dense)),
            sampler,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> Option<&GibbsNoiseModel> {
        self.model.as_deref()
    }

    pub fn dense(&self) -> Option<&DenseDistribution> {
        self.dense.as_deref()
    }

    /// Probability that no error occurs, when the table is available.
    pub fn p0(&self) -> Option<f64> {
        self.dense
            .as_ref()
            .map(|d| d.probability(&PauliString::identity(self.n)))
    }

    /// Exact eigenvalue `alpha_Q`; the ground truth, not an estimate.
    pub fn eigenvalue(&self, q: &PauliString) -> Result<f64> {
        match &self.dense {
            Some(d) => d.eigenvalue(q),
            None => Err(Error::CapExceeded {
                size: self.n,
                cap: ENUMERATION_CAP,
            }),
        }
    }

    pub fn sample_error(&self, rng: &mut Stream) -> PauliString {
        self.sampler.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{enumerate_local, pauli_count};
    use crate::rng::derive;

    /// The error table of two successive channels.
    fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for (i, pa) in a.iter().enumerate() {
            for (j, pb) in b.iter().enumerate() {
                out[i ^ j] += pa * pb;
            }
        }
        out
    }

    #[test]
    fn identity_eigenvalue_is_one() {
        let m = GibbsNoiseModel::product_depolarizing(3, 0.2).unwrap();
        let ch = PauliChannel::from_model(m, None).unwrap();
        assert!((ch.eigenvalue(&PauliString::identity(3)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_eigenvalues() {
        let p = 0.3;
        let ch = PauliChannel::from_model(GibbsNoiseModel::product_depolarizing(1, p).unwrap(), None)
            .unwrap();
        // Four-term signed sum: (1-p) + p/3 - p/3 - p/3.
        let oracle = (1.0 - p) + p / 3.0 - 2.0 * p / 3.0;
        for text in ["X", "Y", "Z"] {
            let a = ch.eigenvalue(&text.parse().unwrap()).unwrap();
            assert!((a - oracle).abs() < 1e-14);
            assert!((a - (1.0 - 4.0 * p / 3.0)).abs() < 1e-14);
        }
        assert!((ch.p0().unwrap() - (1.0 - p)).abs() < 1e-14);
    }

    #[test]
    fn composition_multiplies_eigenvalues() {
        let m = crate::model::generate_model(
            &crate::model::ModelSpec::chain(2, 0.3, 0.7),
            &mut derive(11, &[]),
        )
        .unwrap();
        let ch = PauliChannel::from_model(m, None).unwrap();
        let mu = ch.dense().unwrap().probs().to_vec();
        let cubed = convolve(&convolve(&mu, &mu), &mu);
        let composed = PauliChannel::from_table(DenseDistribution::from_probs(2, cubed).unwrap());
        for q in enumerate_local(2).unwrap() {
            let a = ch.eigenvalue(&q).unwrap();
            let a3 = composed.eigenvalue(&q).unwrap();
            assert!((a3 - a.powi(3)).abs() < 1e-13, "{q}: {a3} vs {}", a.powi(3));
            assert!(a.abs() <= 1.0 + 1e-15);
        }
        assert_eq!(mu.len(), pauli_count(2));
    }

    #[test]
    fn eigenbasis_probability_is_three_to_minus_weight() {
        // A uniformly random local Clifford diagonalizes a fixed non-identity
        // single-qubit Pauli with probability 1/3, so the joint event over a
        // weight-w string has probability 3^-w.
        let group = CliffordGroup::get();
        let p: PauliString = "XZI".parse().unwrap();
        let n_draws = 300_000;
        let mut rng = derive(3, &[]);
        let mut hits = 0u64;
        for _ in 0..n_draws {
            let ok = (0..3).all(|q| {
                use rand::Rng;
                let c: u8 = rng.random_range(0..24);
                let op = p.get(q);
                op == crate::pauli::Pauli1::I || group.diagonalized(c) == op
            });
            hits += ok as u64;
        }
        let freq = hits as f64 / n_draws as f64;
        let expected = 1.0 / 9.0;
        let sigma = (expected * (1.0 - expected) / n_draws as f64).sqrt();
        assert!((freq - expected).abs() < 3.0 * sigma, "{freq}");
    }

    #[test]
    fn large_models_need_mcmc_and_lack_eigenvalues() {
        let m = GibbsNoiseModel::product_depolarizing(14, 0.1).unwrap();
        assert!(matches!(
            PauliChannel::from_model(m.clone(), None),
            Err(Error::UnconfiguredMcmc)
        ));
        let ch = PauliChannel::from_model(m, Some(McmcConfig::for_qubits(14))).unwrap();
        assert!(ch.dense().is_none());
        assert!(ch.p0().is_none());
        assert!(matches!(
            ch.eigenvalue(&PauliString::identity(14)),
            Err(Error::CapExceeded { .. })
        ));
        let e = ch.sample_error(&mut derive(1, &[]));
        assert_eq!(e.num_qubits(), 14);
    }
}
