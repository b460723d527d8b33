use crate::channel::{CliffordGroup, ShotBank};
use crate::error::{Error, Result};
use crate::pauli::{pauli_count, PauliString, Region, ENUMERATION_CAP};

use super::{block_bounds, decay_point_from_sums, DecayPoints};

/// Six outcomes per qubit: which Pauli `D` the Clifford diagonalizes
/// (X, Z or Y) and the sign bit `x xor (D . (Q_in Q_out))`.
const CODES: usize = 6;

/// Largest region the histogram route accepts; `6^m` bins per block.
pub const HISTOGRAM_CAP: usize = 9;

#[derive(Clone, Debug)]
struct PreparedGroup {
    k: u32,
    bounds: Vec<usize>,
    /// `n` codes per shot.
    codes: Vec<u8>,
}

/// A shot bank reduced to per-qubit codes. For any Pauli `P`, `Omega_P` of a
/// shot is `3^w` times the product over the support of `+-1` when `P`
/// matches the diagonalized Pauli on every site, and zero otherwise, so the
/// codes are all the estimator needs.
#[derive(Clone, Debug)]
pub struct PreparedBank {
    n: usize,
    m_groups: usize,
    groups: Vec<PreparedGroup>,
}

impl PreparedBank {
    pub fn new(bank: &ShotBank, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::Config("median-of-means needs at least one group".into()));
        }
        let n = bank.n();
        let clifford = CliffordGroup::get();
        let mut m_groups = groups;
        let prepared = bank
            .groups()
            .iter()
            .map(|g| {
                let bounds = block_bounds(g.len(), groups);
                m_groups = m_groups.min(bounds.len() - 1);
                let mut codes = Vec::with_capacity(g.len() * n);
                for j in 0..g.len() {
                    let (ix, iz) = g.q_in_masks(j);
                    let (ox, oz) = g.q_out_masks(j);
                    let (tx, tz) = (ix ^ ox, iz ^ oz);
                    let x = g.outcome(j);
                    for (q, &c) in g.cliffords(j).iter().enumerate() {
                        let d = clifford.diagonalized(c);
                        let anti = (d.x() && tz >> q & 1 == 1) ^ (d.z() && tx >> q & 1 == 1);
                        let s = (x >> q & 1 == 1) ^ anti;
                        codes.push(2 * (d.index() as u8 - 1) + s as u8);
                    }
                }
                PreparedGroup {
                    k: g.k(),
                    bounds,
                    codes,
                }
            })
            .collect();
        Ok(Self {
            n,
            m_groups,
            groups: prepared,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_groups(&self) -> usize {
        self.m_groups
    }

    pub fn ks(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.k).collect()
    }

    pub fn shots(&self) -> u64 {
        self.groups.iter().map(|g| *g.bounds.last().unwrap() as u64).sum()
    }

    /// Block sums of `Omega / 3^w` for every Pauli supported in `region`,
    /// from one pass over the shots.
    pub fn region_stats(&self, region: &Region) -> Result<RegionStats> {
        region.check_fits(self.n)?;
        let m = region.len();
        if m > HISTOGRAM_CAP.min(ENUMERATION_CAP) {
            return Err(Error::CapExceeded {
                size: m,
                cap: HISTOGRAM_CAP,
            });
        }
        let qubits = region.qubits();
        let bins = CODES.pow(m as u32);
        let perm = digit_to_local(m);
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let n = self.n;
                let block = |w: &[usize]| -> Vec<i64> {
                    let mut hist = vec![0i64; bins];
                    for j in w[0]..w[1] {
                        let row = &g.codes[j * n..(j + 1) * n];
                        let mut idx = 0usize;
                        for &q in qubits.iter().rev() {
                            idx = idx * CODES + row[q] as usize;
                        }
                        hist[idx] += 1;
                    }
                    hist
                };
                #[cfg(feature = "parallel")]
                let hists: Vec<Vec<i64>> = {
                    use rayon::prelude::*;
                    g.bounds.par_windows(2).map(block).collect()
                };
                #[cfg(not(feature = "parallel"))]
                let hists: Vec<Vec<i64>> = g.bounds.windows(2).map(block).collect();

                let mut total = vec![0i64; bins];
                for h in &hists {
                    for (t, c) in total.iter_mut().zip(h) {
                        *t += c;
                    }
                }
                let block_sums = hists
                    .into_iter()
                    .map(|h| permute(&mode_transform(h, m, true), &perm))
                    .collect();
                let nonzero = permute(&mode_transform(total, m, false), &perm)
                    .into_iter()
                    .map(|c| c as u64)
                    .collect();
                GroupStats {
                    k: g.k,
                    bounds: g.bounds.clone(),
                    block_sums,
                    nonzero,
                }
            })
            .collect();
        Ok(RegionStats {
            n: self.n,
            region: region.clone(),
            m_groups: self.m_groups,
            groups,
        })
    }
}

/// Per-axis transform from the six codes to the four Paulis. The identity
/// row sums every code; a Pauli row takes `(+1) - (-1)` over its own
/// diagonalized outcomes when `signed`, their total otherwise. The result is
/// indexed by base-4 digits in `I, X, Z, Y` order.
fn mode_transform(mut data: Vec<i64>, m: usize, signed: bool) -> Vec<i64> {
    let mut radices = vec![CODES; m];
    for a in 0..m {
        let inner: usize = radices[..a].iter().product();
        let outer: usize = radices[a + 1..].iter().product();
        let mut next = vec![0i64; inner * 4 * outer];
        for o in 0..outer {
            for i in 0..inner {
                let src = |d: usize| data[i + inner * (d + CODES * o)];
                let dst = |p: usize| i + inner * (p + 4 * o);
                next[dst(0)] = (0..CODES).map(src).sum();
                for p in 1..4 {
                    let (plus, minus) = (src(2 * (p - 1)), src(2 * (p - 1) + 1));
                    next[dst(p)] = if signed { plus - minus } else { plus + minus };
                }
            }
        }
        radices[a] = 4;
        data = next;
    }
    data
}

/// Maps base-4 digit indices to local enumeration indices `x | z << m`.
fn digit_to_local(m: usize) -> Vec<usize> {
    (0..pauli_count(m))
        .map(|d| {
            (0..m).fold(0usize, |acc, i| {
                let digit = d >> (2 * i) & 3;
                acc | (digit & 1) << i | (digit >> 1) << (m + i)
            })
        })
        .collect()
}

fn permute(values: &[i64], perm: &[usize]) -> Vec<i64> {
    let mut out = vec![0i64; values.len()];
    for (d, v) in values.iter().enumerate() {
        out[perm[d]] = *v;
    }
    out
}

#[derive(Clone, Debug)]
struct GroupStats {
    k: u32,
    bounds: Vec<usize>,
    /// `[block][local index]`.
    block_sums: Vec<Vec<i64>>,
    nonzero: Vec<u64>,
}

/// Integer shot statistics for all Paulis supported in one region.
#[derive(Clone, Debug)]
pub struct RegionStats {
    n: usize,
    region: Region,
    m_groups: usize,
    groups: Vec<GroupStats>,
}

impl RegionStats {
    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Decay points of the Pauli with local index `local` on the region.
    pub fn decay_points(&self, local: usize) -> DecayPoints {
        let m = self.region.len();
        let p = PauliString::from_index(m, local)
            .embed(&self.region, self.n)
            .expect("region fits");
        let mut points: Vec<_> = self
            .groups
            .iter()
            .map(|g| {
                let sums: Vec<i64> = g.block_sums.iter().map(|b| b[local]).collect();
                decay_point_from_sums(g.k, p.weight(), &g.bounds, &sums, g.nonzero[local])
            })
            .collect();
        points.sort_by_key(|p| p.k);
        DecayPoints {
            pauli: p,
            m_groups: self.m_groups,
            points,
        }
    }
}
