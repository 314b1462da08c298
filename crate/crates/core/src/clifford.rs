//! The 24-element single-qubit Clifford group.
//!
//! Representatives are enumerated once by breadth-first products of the
//! `H` and `S` generators, deduplicated up to global phase and normalised so
//! that the first non-negligible entry (row-major) is real and positive.
//! Composition and inversion go through 24×24 lookup tables built from the
//! matrix products, so no phase bookkeeping happens at runtime.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, equal_up_to_phase, mat2, CMatrix, ONE, ZERO};

pub const GROUP_ORDER: usize = 24;

const PHASE_TOL: f64 = 1e-10;

/// A single-qubit Clifford, identified by its stable index in `0..24`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clifford(u8);

struct Table {
    unitaries: Vec<CMatrix>,
    compose: [[u8; GROUP_ORDER]; GROUP_ORDER],
    inverse: [u8; GROUP_ORDER],
}

fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    mat2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
}

fn phase_gate() -> CMatrix {
    mat2(ONE, ZERO, ZERO, c(0.0, 1.0))
}

fn normalise_phase(u: &CMatrix) -> CMatrix {
    // nalgebra iterates column-major; the transpose scans `u` row-major.
    let pivot = u
        .transpose()
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-6)
        .expect("unitary has a non-zero entry");
    let phase = pivot.conj() / pivot.norm();
    u * phase
}

fn find(unitaries: &[CMatrix], u: &CMatrix) -> Option<usize> {
    unitaries.iter().position(|v| equal_up_to_phase(v, u, PHASE_TOL))
}

fn build_table() -> Table {
    let generators = [hadamard(), phase_gate()];
    let mut unitaries = vec![CMatrix::identity(2, 2)];
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        for g in &generators {
            let next = normalise_phase(&(g * &unitaries[k]));
            if find(&unitaries, &next).is_none() {
                unitaries.push(next);
                queue.push_back(unitaries.len() - 1);
            }
        }
    }
    assert_eq!(unitaries.len(), GROUP_ORDER, "H and S generate 24 Cliffords");

    let mut compose = [[0u8; GROUP_ORDER]; GROUP_ORDER];
    let mut inverse = [0u8; GROUP_ORDER];
    for a in 0..GROUP_ORDER {
        for b in 0..GROUP_ORDER {
            // `a` is applied first, so the product is B·A.
            let product = &unitaries[b] * &unitaries[a];
            let k = find(&unitaries, &product).expect("group is closed");
            compose[a][b] = k as u8;
            if k == 0 {
                inverse[a] = b as u8;
            }
        }
    }
    Table {
        unitaries,
        compose,
        inverse,
    }
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

impl Clifford {
    pub fn identity() -> Self {
        Clifford(0)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < GROUP_ORDER).then_some(Clifford(index as u8))
    }

    /// Looks up the element whose representative equals `u` up to phase.
    pub fn from_unitary(u: &CMatrix) -> Option<Self> {
        if u.shape() != (2, 2) {
            return None;
        }
        find(&table().unitaries, u).map(|k| Clifford(k as u8))
    }

    pub fn all() -> impl Iterator<Item = Clifford> {
        (0..GROUP_ORDER as u8).map(Clifford)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The canonical 2×2 representative.
    pub fn unitary(self) -> &'static CMatrix {
        &table().unitaries[self.index()]
    }

    /// The element equal to applying `self` and then `next`.
    pub fn then(self, next: Clifford) -> Clifford {
        compose(self, next)
    }

    pub fn inverse(self) -> Clifford {
        inverse(self)
    }
}

impl fmt::Display for Clifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// Composition with `a` applied first: the representative of `b·a`.
pub fn compose(a: Clifford, b: Clifford) -> Clifford {
    Clifford(table().compose[a.index()][b.index()])
}

pub fn inverse(a: Clifford) -> Clifford {
    Clifford(table().inverse[a.index()])
}

/// The single element undoing `seq` applied in order; identity for an empty sequence.
pub fn inverse_of_sequence(seq: &[Clifford]) -> Clifford {
    seq.iter()
        .fold(Clifford::identity(), |acc, &g| compose(acc, g))
        .inverse()
}

/// Uniform draw over the 24 elements.
pub fn random_clifford<R: Rng + ?Sized>(rng: &mut R) -> Clifford {
    Clifford(rng.random_range(0..GROUP_ORDER as u8))
}
