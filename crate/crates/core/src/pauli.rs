//! Pauli strings modulo phase and the character theory of `(Z2 x Z2)^n`.
//!
//! A Pauli string on `n` qubits is a pair of bit masks. Qubit `i` carries
//! `I` when both bits are clear, `X` for `(x, z) = (1, 0)`, `Z` for `(0, 1)`
//! and `Y` for `(1, 1)`. Products are mask XORs; phases are never tracked.
//!
//! Every enumeration in the crate uses the same order: the local index of a
//! string on `m` qubits is `x | (z << m)`, so a single qubit enumerates as
//! `I, X, Z, Y` and the identity is always first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest region for which full `4^m` tables are built.
pub const ENUMERATION_CAP: usize = 12;

/// Hard limit imposed by the 64-bit mask representation.
pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli, discriminant equal to its local index `x | z << 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli1 {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl Pauli1 {
    pub const ALL: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Z, Pauli1::Y];

    pub fn from_bits(x: bool, z: bool) -> Self {
        Self::from_index(x as usize | (z as usize) << 1)
    }

    pub fn from_index(idx: usize) -> Self {
        Self::ALL[idx & 3]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn x(self) -> bool {
        self as u8 & 1 == 1
    }

    pub fn z(self) -> bool {
        self as u8 & 2 == 2
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Z => 'Z',
            Pauli1::Y => 'Y',
        }
    }

    /// 1 when the two single-qubit Paulis anticommute.
    pub fn symplectic(self, other: Pauli1) -> u8 {
        ((self.x() & other.z()) ^ (self.z() & other.x())) as u8
    }
}

/// Collects the bits of `word` selected by `mask` into the low bits of the
/// result, preserving their order.
#[inline]
pub fn gather_bits(word: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut bit = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if word & low != 0 {
            out |= 1 << bit;
        }
        bit += 1;
        mask &= mask - 1;
    }
    out
}

/// Inverse of [`gather_bits`]: spreads the low bits of `bits` over `mask`.
#[inline]
pub fn scatter_bits(bits: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut bit = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if bits >> bit & 1 == 1 {
            out |= low;
        }
        bit += 1;
        mask &= mask - 1;
    }
    out
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// An `n`-qubit Pauli operator modulo phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self { n, x: 0, z: 0 }
    }

    pub fn from_masks(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let high = !low_mask(n);
        if (x | z) & high != 0 {
            let index = 63 - ((x | z) & high).leading_zeros() as usize;
            return Err(Error::OutOfRange { index, n });
        }
        Ok(Self { n, x, z })
    }

    /// A single non-trivial Pauli on qubit `q`.
    pub fn single(n: usize, q: usize, p: Pauli1) -> Result<Self> {
        if q >= n {
            return Err(Error::OutOfRange { index: q, n });
        }
        Self::from_masks(n, (p.x() as u64) << q, (p.z() as u64) << q)
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(n: usize, index: usize) -> Self {
        debug_assert!(n <= 32);
        let m = low_mask(n);
        Self {
            n,
            x: index as u64 & m,
            z: (index as u64 >> n) & m,
        }
    }

    pub fn from_ops(ops: &[Pauli1]) -> Self {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, p) in ops.iter().enumerate() {
            x |= (p.x() as u64) << q;
            z |= (p.z() as u64) << q;
        }
        Self { n: ops.len(), x, z }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Qubits carrying a non-identity factor.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn ops(&self) -> impl Iterator<Item = Pauli1> + '_ {
        (0..self.n).map(|q| self.get(q))
    }

    /// Position in the canonical enumeration of all strings on `n` qubits.
    pub fn index(&self) -> usize {
        debug_assert!(self.n <= 32);
        (self.x | self.z << self.n) as usize
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// `0` when the strings commute, `1` when they anticommute.
    pub fn symplectic_product(&self, other: &Self) -> Result<u8> {
        self.check_same(other)?;
        Ok(self.symplectic_unchecked(other))
    }

    #[inline]
    pub(crate) fn symplectic_unchecked(&self, other: &Self) -> u8 {
        (((self.x & other.z) ^ (self.z & other.x)).count_ones() & 1) as u8
    }

    /// `chi_self(other) = (-1)^(self . other)`.
    pub fn character(&self, other: &Self) -> Result<i8> {
        Ok(1 - 2 * self.symplectic_product(other)? as i8)
    }

    /// Product modulo phase.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        })
    }

    /// The sub-string on `region`, in the region's (ascending) qubit order.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        region.check_fits(self.n)?;
        Ok(self.restrict_unchecked(region))
    }

    #[inline]
    pub(crate) fn restrict_unchecked(&self, region: &Region) -> Self {
        Self {
            n: region.len(),
            x: gather_bits(self.x, region.mask),
            z: gather_bits(self.z, region.mask),
        }
    }

    /// Places a string defined on `region` into `n` qubits, identity elsewhere.
    pub fn embed(&self, region: &Region, n: usize) -> Result<Self> {
        if self.n != region.len() {
            return Err(Error::Dimension {
                expected: region.len(),
                found: self.n,
            });
        }
        region.check_fits(n)?;
        Ok(Self {
            n,
            x: scatter_bits(self.x, region.mask),
            z: scatter_bits(self.z, region.mask),
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by qubit count, then by enumeration index.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.z, self.x).cmp(&(other.n, other.z, other.x))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.ops().map(Pauli1::symbol).collect();
        f.write_str(&s)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| match c {
                'I' | 'i' => Ok(Pauli1::I),
                'X' | 'x' => Ok(Pauli1::X),
                'Y' | 'y' => Ok(Pauli1::Y),
                'Z' | 'z' => Ok(Pauli1::Z),
                other => Err(Error::Parse(format!("invalid Pauli symbol {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if ops.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits(ops.len()));
        }
        Ok(Self::from_ops(&ops))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of qubit indices, kept sorted and free of duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Region {
    qubits: Vec<usize>,
    mask: u64,
}

impl Region {
    /// Builds a region over `n` qubits. Duplicates are rejected.
    pub fn new(qubits: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let region = Self::from_qubits(qubits)?;
        region.check_fits(n)?;
        Ok(region)
    }

    /// A region with no upper bound check beyond the 64-qubit limit.
    pub fn from_qubits(qubits: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut qubits: Vec<usize> = qubits.into_iter().collect();
        qubits.sort_unstable();
        let before = qubits.len();
        qubits.dedup();
        if qubits.len() != before {
            return Err(Error::Parse("duplicate qubit index in region".into()));
        }
        if let Some(&q) = qubits.last() {
            if q >= MAX_QUBITS {
                return Err(Error::OutOfRange {
                    index: q,
                    n: MAX_QUBITS,
                });
            }
        }
        let mask = qubits.iter().fold(0u64, |m, &q| m | 1 << q);
        Ok(Self { qubits, mask })
    }

    pub fn from_mask(mask: u64) -> Self {
        let qubits = (0..64).filter(|q| mask >> q & 1 == 1).collect();
        Self { qubits, mask }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(n: usize) -> Self {
        Self::from_mask(low_mask(n))
    }

    pub fn check_fits(&self, n: usize) -> Result<()> {
        match self.qubits.last() {
            Some(&q) if q >= n => Err(Error::OutOfRange { index: q, n }),
            _ => Ok(()),
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        q < 64 && self.mask >> q & 1 == 1
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.mask & other.mask != 0
    }

    pub fn union(&self, other: &Region) -> Region {
        Self::from_mask(self.mask | other.mask)
    }

    pub fn difference(&self, other: &Region) -> Region {
        Self::from_mask(self.mask & !other.mask)
    }

    /// Position of qubit `q` inside the region.
    pub fn position(&self, q: usize) -> Option<usize> {
        self.qubits.binary_search(&q).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.iter().copied()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, q) in self.qubits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.qubits.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let qubits = Vec::<usize>::deserialize(deserializer)?;
        Region::from_qubits(qubits).map_err(serde::de::Error::custom)
    }
}

/// Number of Pauli strings on `m` qubits.
pub fn pauli_count(m: usize) -> usize {
    1usize << (2 * m)
}

/// All `4^|A|` strings over the region's qubits (as `|A|`-qubit strings), in
/// canonical order with the identity first.
pub fn enumerate_paulis(region: &Region) -> Result<Vec<PauliString>> {
    enumerate_local(region.len())
}

pub fn enumerate_local(m: usize) -> Result<Vec<PauliString>> {
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    Ok((0..pauli_count(m))
        .map(|idx| PauliString::from_index(m, idx))
        .collect())
}

/// `chi_P(Q)` for local indices on `m` qubits.
#[inline]
pub fn character_index(m: usize, p: usize, q: usize) -> f64 {
    let lm = low_mask(m) as usize;
    let (px, pz) = (p & lm, p >> m);
    let (qx, qz) = (q & lm, q >> m);
    if ((px & qz) ^ (pz & qx)).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Walsh transform over `(Z2 x Z2)^m` in place:
/// `out[p] = sum_q chi_p(q) * values[q]`. Runs in `O(m 4^m)`.
pub fn character_transform(values: &mut [f64], m: usize) {
    assert_eq!(values.len(), pauli_count(m));
    // Local characters of one qubit in index order I, X, Z, Y.
    const CHI: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let mut buf = [0.0f64; 4];
    for q in 0..m {
        let xs = 1usize << q;
        let zs = 1usize << (q + m);
        for base in 0..values.len() {
            if base & (xs | zs) != 0 {
                continue;
            }
            let slots = [base, base | xs, base | zs, base | xs | zs];
            for (p, row) in CHI.iter().enumerate() {
                buf[p] = row
                    .iter()
                    .zip(slots.iter())
                    .map(|(c, &s)| c * values[s])
                    .sum();
            }
            for (p, &s) in slots.iter().enumerate() {
                values[s] = buf[p];
            }
        }
    }
}
