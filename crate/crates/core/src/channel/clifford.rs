//! The 24-element single-qubit Clifford group, modulo global phase.
//!
//! Elements are generated breadth-first from the identity by left
//! multiplication with `S` then `H`, and deduplicated by their signed action
//! on `X` and `Z`. The resulting order is part of the shot-bank format and is
//! identified by [`CLIFFORD_ORDERING`].

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::pauli::Pauli1;

pub const CLIFFORD_ORDERING: &str = "sh-bfs-v1";
pub const GROUP_SIZE: usize = 24;

pub type Mat2 = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(p: Pauli1) -> Mat2 {
    match p {
        Pauli1::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        Pauli1::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Pauli1::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        Pauli1::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            out[r][col] = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Writes a Hermitian Pauli-proportional matrix as `sign * P`.
pub fn as_signed_pauli(m: &Mat2) -> Option<(Pauli1, i8)> {
    for p in Pauli1::ALL {
        let pm = pauli_matrix(p);
        // tr(P M) / 2
        let overlap = (0..2)
            .map(|r| (0..2).map(|k| pm[r][k] * m[k][r]).sum::<Complex64>())
            .sum::<Complex64>()
            * 0.5;
        if (overlap.re.abs() - 1.0).abs() < 1e-9 && overlap.im.abs() < 1e-9 {
            return Some((p, if overlap.re > 0.0 { 1 } else { -1 }));
        }
    }
    None
}

/// Precomputed group data.
#[derive(Debug)]
pub struct CliffordGroup {
    unitaries: Vec<Mat2>,
    /// `C^dagger P C` for each element and each Pauli, with its sign.
    conjugation: Vec<[(Pauli1, i8); 4]>,
    /// The Pauli `D` with `C^dagger D C = +-Z`.
    diagonalized: Vec<Pauli1>,
    /// `|<1| C^dagger E C |0>|^2` for each element and error `E`.
    flip_probability: Vec<[f64; 4]>,
}

impl CliffordGroup {
    fn build() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s_gate: Mat2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]];
        let h_gate: Mat2 = [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]];
        let action = |u: &Mat2| -> [(Pauli1, i8); 2] {
            let ud = adjoint(u);
            [Pauli1::X, Pauli1::Z].map(|p| {
                as_signed_pauli(&matmul(&ud, &matmul(&pauli_matrix(p), u)))
                    .expect("Clifford conjugation maps Paulis to Paulis")
            })
        };
        let mut unitaries = vec![pauli_matrix(Pauli1::I)];
        let mut seen = vec![action(&unitaries[0])];
        let mut head = 0;
        while head < unitaries.len() {
            let current = unitaries[head];
            head += 1;
            for g in [&s_gate, &h_gate] {
                let next = matmul(g, &current);
                let sig = action(&next);
                if !seen.contains(&sig) {
                    seen.push(sig);
                    unitaries.push(next);
                }
            }
        }
        assert_eq!(unitaries.len(), GROUP_SIZE);

        let conjugation: Vec<[(Pauli1, i8); 4]> = unitaries
            .iter()
            .map(|u| {
                let ud = adjoint(u);
                Pauli1::ALL.map(|p| {
                    as_signed_pauli(&matmul(&ud, &matmul(&pauli_matrix(p), u)))
                        .expect("Clifford conjugation maps Paulis to Paulis")
                })
            })
            .collect();
        let diagonalized = conjugation
            .iter()
            .map(|row| {
                Pauli1::ALL[1..]
                    .iter()
                    .copied()
                    .find(|p| row[p.index()].0 == Pauli1::Z)
                    .expect("exactly one Pauli maps onto Z")
            })
            .collect();
        let flip_probability = unitaries
            .iter()
            .map(|u| {
                let ud = adjoint(u);
                Pauli1::ALL.map(|e| {
                    let m = matmul(&ud, &matmul(&pauli_matrix(e), u));
                    // Column 0 is the image of |0>.
                    let p1 = m[1][0].norm_sqr();
                    let p0 = m[0][0].norm_sqr();
                    p1 / (p0 + p1)
                })
            })
            .collect();
        Self {
            unitaries,
            conjugation,
            diagonalized,
            flip_probability,
        }
    }

    pub fn get() -> &'static CliffordGroup {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(Self::build)
    }

    pub fn unitary(&self, id: u8) -> &Mat2 {
        &self.unitaries[id as usize]
    }

    /// `C^dagger P C` as a signed Pauli.
    pub fn conjugate(&self, id: u8, p: Pauli1) -> (Pauli1, i8) {
        self.conjugation[id as usize][p.index()]
    }

    pub fn diagonalized(&self, id: u8) -> Pauli1 {
        self.diagonalized[id as usize]
    }

    /// Probability of reading 1 after `C^dagger E C` acts on `|0>`.
    pub fn flip_probability(&self, id: u8, e: Pauli1) -> f64 {
        self.flip_probability[id as usize][e.index()]
    }
}
