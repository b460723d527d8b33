use std::collections::HashMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::{character_transform, pauli_count, PauliString, Region, ENUMERATION_CAP};

/// Which characters a potential on `h` may contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Only characters `chi_P` with `P` non-identity on every site of `h`.
    /// Decompositions in this gauge are unique.
    #[default]
    Canonical,
    /// Every character on `h`, the identity included.
    Full,
}

/// Is the local index `p` (on `m` qubits) non-identity on every site?
#[inline]
pub(crate) fn full_support(p: usize, m: usize) -> bool {
    let lm = (1usize << m) - 1;
    (p & lm) | (p >> m) == lm
}

/// The clique potential `theta^h`: one value per Pauli string on `h`, in
/// enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTable {
    hyperedge: Region,
    values: Vec<f64>,
}

impl PotentialTable {
    pub fn new(hyperedge: Region, values: Vec<f64>) -> Result<Self> {
        if hyperedge.len() > ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                size: hyperedge.len(),
                cap: ENUMERATION_CAP,
            });
        }
        if values.len() != pauli_count(hyperedge.len()) {
            return Err(Error::InvalidModel(format!(
                "potential on {hyperedge} needs {} entries, got {}",
                pauli_count(hyperedge.len()),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite potential {v}")));
        }
        Ok(Self { hyperedge, values })
    }

    pub fn zeros(hyperedge: Region) -> Self {
        let len = pauli_count(hyperedge.len());
        Self {
            hyperedge,
            values: vec![0.0; len],
        }
    }

    /// Builds `theta(Q) = sum_P c_P chi_P(Q)` from character coefficients.
    pub fn from_coefficients(hyperedge: Region, mut coefficients: Vec<f64>) -> Result<Self> {
        let m = hyperedge.len();
        if coefficients.len() != pauli_count(m) {
            return Err(Error::InvalidModel("coefficient count mismatch".into()));
        }
        character_transform(&mut coefficients, m);
        Self::new(hyperedge, coefficients)
    }

    pub fn hyperedge(&self) -> &Region {
        &self.hyperedge
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `theta(Q)` for `Q` given on the hyperedge's qubits.
    pub fn value(&self, q: &PauliString) -> Result<f64> {
        if q.num_qubits() != self.hyperedge.len() {
            return Err(Error::Dimension {
                expected: self.hyperedge.len(),
                found: q.num_qubits(),
            });
        }
        Ok(self.values[q.index()])
    }

    pub fn value_at(&self, local_index: usize) -> f64 {
        self.values[local_index]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Character coefficients `c_P = 4^-m sum_Q chi_P(Q) theta(Q)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let m = self.hyperedge.len();
        let mut c = self.values.clone();
        character_transform(&mut c, m);
        let scale = 1.0 / pauli_count(m) as f64;
        c.iter_mut().for_each(|v| *v *= scale);
        c
    }

    /// Subtracts the mean so that the entries sum to zero.
    pub fn zero_sum_projected(&self) -> Self {
        let mean = self.sum() / self.values.len() as f64;
        Self {
            hyperedge: self.hyperedge.clone(),
            values: self.values.iter().map(|v| v - mean).collect(),
        }
    }

    /// Drops every character that is the identity on some site of `h`.
    pub fn canonical_projected(&self) -> Self {
        let m = self.hyperedge.len();
        let mut c = self.coefficients();
        for (p, v) in c.iter_mut().enumerate() {
            if !full_support(p, m) {
                *v = 0.0;
            }
        }
        character_transform(&mut c, m);
        Self {
            hyperedge: self.hyperedge.clone(),
            values: c,
        }
    }

    /// Largest coefficient on a character outside the canonical gauge.
    pub fn gauge_violation(&self) -> f64 {
        let m = self.hyperedge.len();
        self.coefficients()
            .iter()
            .enumerate()
            .filter(|(p, _)| !full_support(*p, m))
            .fold(0.0, |a, (_, v)| a.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            hyperedge: self.hyperedge.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `max_Q |self(Q) - other(Q)|`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.hyperedge != other.hyperedge {
            return Err(Error::InvalidModel(format!(
                "comparing potentials on {} and {}",
                self.hyperedge, other.hyperedge
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs())))
    }
}

/// Potential values keyed by Pauli text form, written in enumeration order.
pub(crate) struct ValuesByText<'a>(pub &'a PotentialTable);

impl Serialize for ValuesByText<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.0.hyperedge.len();
        let mut map = serializer.serialize_map(Some(self.0.values.len()))?;
        for (i, v) in self.0.values.iter().enumerate() {
            map.serialize_entry(&PauliString::from_index(m, i).to_string(), v)?;
        }
        map.end()
    }
}

pub(crate) fn values_from_text(
    hyperedge: Region,
    entries: HashMap<String, f64>,
) -> Result<PotentialTable> {
    let m = hyperedge.len();
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    let mut values = vec![f64::NAN; pauli_count(m)];
    for (key, v) in entries {
        let p: PauliString = key.parse()?;
        if p.num_qubits() != m {
            return Err(Error::Parse(format!("potential key {key} does not match {hyperedge}")));
        }
        values[p.index()] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse(format!("potential on {hyperedge} is missing entries")));
    }
    PotentialTable::new(hyperedge, values)
}

#[derive(Serialize)]
pub(crate) struct PotentialEntryOut<'a> {
    pub qubits: &'a Region,
    pub potentials: ValuesByText<'a>,
}

#[derive(Deserialize)]
pub(crate) struct PotentialEntryIn {
    pub qubits: Region,
    pub potentials: HashMap<String, f64>,
}

impl PotentialEntryIn {
    pub fn into_table(self) -> Result<PotentialTable> {
        values_from_text(self.qubits, self.potentials)
    }
}

impl<'a> From<&'a PotentialTable> for PotentialEntryOut<'a> {
    fn from(t: &'a PotentialTable) -> Self {
        Self {
            qubits: &t.hyperedge,
            potentials: ValuesByText(t),
        }
    }
}

impl Serialize for PotentialTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialEntryOut::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PotentialTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        PotentialEntryIn::deserialize(deserializer)?
            .into_table()
            .map_err(serde::de::Error::custom)
    }
}
