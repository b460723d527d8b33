use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli1, PauliString};
use crate::rng::Stream;

/// A single-qubit Pauli channel given by its error probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPauliChannel {
    pub i: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LocalPauliChannel {
    pub fn identity() -> Self {
        Self {
            i: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn new(i: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let ok = [i, x, y, z].iter().all(|p| p.is_finite() && *p >= 0.0)
            && ((i + x + y + z) - 1.0).abs() < 1e-9;
        if !ok {
            return Err(Error::Config(format!(
                "invalid Pauli channel probabilities ({i}, {x}, {y}, {z})"
            )));
        }
        Ok(Self { i, x, y, z })
    }

    /// Depolarizing channel of strength `q`: `rho -> (1-q) rho + q I/2`,
    /// whose non-identity fidelities are all `1 - q`.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("depolarizing strength {q} outside [0, 1]")));
        }
        Self::new(1.0 - 0.75 * q, q / 4.0, q / 4.0, q / 4.0)
    }

    pub fn probability(&self, p: Pauli1) -> f64 {
        match p {
            Pauli1::I => self.i,
            Pauli1::X => self.x,
            Pauli1::Y => self.y,
            Pauli1::Z => self.z,
        }
    }

    /// `tr(Phi*(P) P) / 2`.
    pub fn fidelity(&self, p: Pauli1) -> f64 {
        Pauli1::ALL
            .iter()
            .map(|&e| {
                let s = if p.symplectic(e) == 0 { 1.0 } else { -1.0 };
                s * self.probability(e)
            })
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.i == 1.0
    }

    /// Draws an error. Consumes no randomness for the identity channel.
    pub fn sample(&self, rng: &mut Stream) -> Pauli1 {
        if self.is_identity() {
            return Pauli1::I;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for p in [Pauli1::I, Pauli1::X, Pauli1::Y] {
            acc += self.probability(p);
            if u < acc {
                return p;
            }
        }
        Pauli1::Z
    }
}

/// State-preparation and measurement noise as products of local Pauli
/// channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamModel {
    pub prep: Vec<LocalPauliChannel>,
    pub meas: Vec<LocalPauliChannel>,
}

impl SpamModel {
    pub fn new(prep: Vec<LocalPauliChannel>, meas: Vec<LocalPauliChannel>) -> Result<Self> {
        if prep.len() != meas.len() {
            return Err(Error::Dimension {
                expected: prep.len(),
                found: meas.len(),
            });
        }
        Ok(Self { prep, meas })
    }

    pub fn noiseless(n: usize) -> Self {
        Self {
            prep: vec![LocalPauliChannel::identity(); n],
            meas: vec![LocalPauliChannel::identity(); n],
        }
    }

    pub fn depolarizing(n: usize, q_prep: f64, q_meas: f64) -> Result<Self> {
        Ok(Self {
            prep: vec![LocalPauliChannel::depolarizing(q_prep)?; n],
            meas: vec![LocalPauliChannel::depolarizing(q_meas)?; n],
        })
    }

    pub fn n(&self) -> usize {
        self.prep.len()
    }

    /// `C_P`, the product of per-qubit fidelities on both sides.
    pub fn attenuation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: p.num_qubits(),
            });
        }
        Ok(p.ops()
            .enumerate()
            .map(|(q, op)| self.prep[q].fidelity(op) * self.meas[q].fidelity(op))
            .product())
    }
}
