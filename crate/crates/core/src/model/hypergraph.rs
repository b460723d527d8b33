use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Region, MAX_QUBITS};

/// Hyperedges over `n` vertices, each of size at most `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    n: usize,
    r: usize,
    hyperedges: Vec<Region>,
}

impl Hypergraph {
    pub fn new(n: usize, r: usize, hyperedges: Vec<Region>) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        for (i, h) in hyperedges.iter().enumerate() {
            if h.is_empty() {
                return Err(Error::InvalidModel("empty hyperedge".into()));
            }
            if h.len() > r {
                return Err(Error::InvalidModel(format!(
                    "hyperedge {h} has {} vertices, range is {r}",
                    h.len()
                )));
            }
            h.check_fits(n)?;
            if hyperedges[..i].contains(h) {
                return Err(Error::InvalidModel(format!("duplicate hyperedge {h}")));
            }
        }
        Ok(Self { n, r, hyperedges })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            r: 1,
            hyperedges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn hyperedges(&self) -> &[Region] {
        &self.hyperedges
    }

    /// A hyperedge is maximal when no strictly larger hyperedge contains it.
    pub fn is_maximal(&self, h: &Region) -> bool {
        !self
            .hyperedges
            .iter()
            .any(|o| o.len() > h.len() && h.is_subset(o))
    }

    /// Hyperedges containing vertex `u`.
    pub fn incident(&self, u: usize) -> impl Iterator<Item = (usize, &Region)> {
        self.hyperedges
            .iter()
            .enumerate()
            .filter(move |(_, h)| h.contains(u))
    }

    /// Replaces every hyperedge by a clique.
    pub fn derived_graph(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for h in &self.hyperedges {
            for &a in h.qubits() {
                for &b in h.qubits() {
                    if a != b {
                        g.adjacency[a] |= 1 << b;
                    }
                }
            }
        }
        g
    }
}

/// Simple undirected graph on at most 64 vertices, stored as adjacency masks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![0; n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        for v in [a, b] {
            if v >= self.n {
                return Err(Error::OutOfRange { index: v, n: self.n });
            }
        }
        if a != b {
            self.adjacency[a] |= 1 << b;
            self.adjacency[b] |= 1 << a;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a] >> b & 1 == 1
    }

    pub fn neighbor_mask(&self, u: usize) -> u64 {
        self.adjacency[u]
    }

    /// `Gamma(u)`.
    pub fn neighbors(&self, u: usize) -> Region {
        Region::from_mask(self.adjacency[u])
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].count_ones() as usize
    }

    /// `D`, the maximum degree.
    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_clique(&self, region: &Region) -> bool {
        region
            .iter()
            .all(|a| region.mask() & !(1 << a) & !self.adjacency[a] == 0)
    }

    /// All cliques with between 1 and `max_size` vertices, ordered by size and
    /// then lexicographically.
    pub fn cliques(&self, max_size: usize) -> Vec<Region> {
        let mut out = Vec::new();
        fn extend(g: &Graph, current: u64, candidates: u64, max: usize, out: &mut Vec<u64>) {
            if current != 0 {
                out.push(current);
            }
            if current.count_ones() as usize == max {
                return;
            }
            let mut rest = candidates;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                // Only extend with higher vertices to avoid duplicates.
                let higher = if v == 63 { 0 } else { !((1u64 << (v + 1)) - 1) };
                extend(g, current | 1 << v, rest & g.adjacency[v] & higher, max, out);
            }
        }
        if max_size > 0 {
            let all = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
            let mut masks = Vec::new();
            extend(self, 0, all, max_size, &mut masks);
            out = masks.into_iter().map(Region::from_mask).collect();
        }
        out.sort_by(|a, b| (a.len(), a.qubits()).cmp(&(b.len(), b.qubits())));
        out
    }

    /// Is `a` disconnected from `b` once the vertices in `separator` are removed?
    pub fn separates(&self, separator: &Region, a: &Region, b: &Region) -> bool {
        let blocked = separator.mask();
        let mut seen = a.mask() & !blocked;
        let mut frontier = seen;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = self.adjacency[v] & !blocked & !seen;
            seen |= next;
            frontier |= next;
        }
        seen & b.mask() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(q: &[usize]) -> Region {
        Region::from_qubits(q.iter().copied()).unwrap()
    }

    #[test]
    fn triangle_and_chain() {
        let tri = Hypergraph::new(3, 3, vec![reg(&[0, 1, 2])]).unwrap();
        let g = tri.derived_graph();
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.max_degree(), 2);

        let chain = Hypergraph::new(4, 2, vec![reg(&[0, 1]), reg(&[1, 2]), reg(&[2, 3])]).unwrap();
        let g = chain.derived_graph();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.neighbors(1), reg(&[0, 2]));
    }

    #[test]
    fn hypergraph_validation() {
        assert!(Hypergraph::new(3, 2, vec![reg(&[0, 1, 2])]).is_err());
        assert!(Hypergraph::new(3, 2, vec![reg(&[0, 1]), reg(&[0, 1])]).is_err());
        assert!(Hypergraph::new(2, 2, vec![reg(&[0, 2])]).is_err());
        assert!(Hypergraph::new(2, 2, vec![Region::empty()]).is_err());
    }

    #[test]
    fn cliques_of_triangle_plus_tail() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let c2: Vec<String> = g.cliques(2).iter().map(|r| r.to_string()).collect();
        assert_eq!(
            c2,
            ["{0}", "{1}", "{2}", "{3}", "{0,1}", "{0,2}", "{1,2}", "{2,3}"]
        );
        let c3 = g.cliques(3);
        assert_eq!(c3.last().unwrap(), &reg(&[0, 1, 2]));
        assert_eq!(c3.len(), 9);
        assert!(c3.iter().all(|c| g.is_clique(c)));
    }

    #[test]
    fn separation() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(g.separates(&reg(&[1]), &reg(&[0]), &reg(&[2, 3])));
        assert!(!g.separates(&reg(&[3]), &reg(&[0]), &reg(&[2])));
        assert!(g.separates(&Region::empty(), &reg(&[0]), &Region::empty()));
    }
}
