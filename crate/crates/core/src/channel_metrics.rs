//! Choi states, effective control channels, fidelities and Pauli transfer
//! matrices.
//!
//! The Choi state of a channel `E` on dimension `d` is
//! `σ = (1/d) Σ_jk |j⟩⟨k| ⊗ E(|j⟩⟨k|)`, with the reference copy first, so
//! that `Tr σ = 1`. Two-qubit indices follow the `ancilla ⊗ control` order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, hermitian_eigenvalues, hermiticity_error, kron, paulis, trace, CMatrix, ZERO};
use crate::simulator::{KrausChannel, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiState {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: matrix.nrows(),
            });
        }
        let choi = ChoiState { dim, matrix };
        choi.check_invariants()?;
        Ok(choi)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm = hermiticity_error(&self.matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::Structure(format!("Choi state not Hermitian (error {herm:.2e})")));
        }
        let tr = trace(&self.matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Structure(format!("Choi state trace {tr} is not 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::Structure(format!("Choi state has eigenvalue {min:.2e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&e| e > tol).count()
    }

    fn entry(&self, j_in: usize, i_out: usize, k_in: usize, l_out: usize) -> num_complex::Complex64 {
        self.matrix[(j_in * self.dim + i_out, k_in * self.dim + l_out)]
    }

    /// Real part, row-major, with a header of `input:output` basis labels.
    pub fn to_csv(&self) -> String {
        let width = self.dim.trailing_zeros() as usize;
        let labels: Vec<String> = (0..self.dim * self.dim)
            .map(|k| format!("{:0w$b}:{:0w$b}", k / self.dim, k % self.dim, w = width.max(1)))
            .collect();
        let mut out = format!("row,{}\n", labels.join(","));
        for (r, label) in labels.iter().enumerate() {
            let row: Vec<String> = (0..labels.len()).map(|col| self.matrix[(r, col)].re.to_string()).collect();
            out.push_str(&format!("{label},{}\n", row.join(",")));
        }
        out
    }
}

pub fn choi_of_channel(channel: &KrausChannel) -> ChoiState {
    let d = channel.dim();
    let mut sigma = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            let mut unit = CMatrix::zeros(d, d);
            unit[(j, k)] = c(1.0, 0.0);
            let image = channel.apply_matrix(&unit);
            let mut outer = CMatrix::zeros(d, d);
            outer[(j, k)] = c(1.0 / d as f64, 0.0);
            sigma += kron(&outer, &image);
        }
    }
    let choi = ChoiState { dim: d, matrix: sigma };
    debug_assert!(choi.check_invariants().is_ok(), "{:?}", choi.check_invariants());
    choi
}

pub fn choi_of_unitary(u: &CMatrix) -> Result<ChoiState> {
    Ok(choi_of_channel(&KrausChannel::new(vec![u.clone()])?))
}

/// How the ancilla enters the two-qubit channel when reducing it to a
/// control-only channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaInput {
    /// The ancilla starts in its ground state.
    #[default]
    Ground,
    /// Both ancilla copies are traced out, i.e. the ancilla enters maximally
    /// mixed.
    MaximallyMixed,
}

/// Reduces a two-qubit Choi state to the Choi state of the control channel
/// `ρ_c ↦ Tr_a E(ρ_a ⊗ ρ_c)`, with `ρ_a` fixed by `input`.
pub fn effective_control_channel(choi: &ChoiState, input: AncillaInput) -> Result<ChoiState> {
    if choi.dim != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: choi.dim,
        });
    }
    let idx = |a: usize, q: usize| 2 * a + q;
    let mut out = CMatrix::zeros(4, 4);
    for cj in 0..2 {
        for ck in 0..2 {
            for ci in 0..2 {
                for cl in 0..2 {
                    let mut acc = ZERO;
                    for b in 0..2 {
                        match input {
                            AncillaInput::Ground => {
                                acc += choi.entry(idx(0, cj), idx(b, ci), idx(0, ck), idx(b, cl)) * 2.0;
                            }
                            AncillaInput::MaximallyMixed => {
                                for a in 0..2 {
                                    acc += choi.entry(idx(a, cj), idx(b, ci), idx(a, ck), idx(b, cl));
                                }
                            }
                        }
                    }
                    out[(cj * 2 + ci, ck * 2 + cl)] = acc;
                }
            }
        }
    }
    ChoiState::new(2, out)
}

/// `F_pro = ⟨Φ|σ|Φ⟩` for the maximally entangled `|Φ⟩`.
pub fn process_fidelity(choi: &ChoiState) -> f64 {
    let d = choi.dim;
    let mut acc = ZERO;
    for j in 0..d {
        for k in 0..d {
            acc += choi.entry(j, j, k, k);
        }
    }
    acc.re / d as f64
}

/// `(d·F_pro + 1)/(d + 1)`.
pub fn avg_gate_fidelity(choi: &ChoiState) -> f64 {
    let d = choi.dim as f64;
    (d * process_fidelity(choi) + 1.0) / (d + 1.0)
}

/// `1 - F` for the Z-phase error `exp(-iφZ)`: `(1 - cos 2φ)/3`.
pub fn infidelity_stark(phi: f64) -> f64 {
    (1.0 - (2.0 * phi).cos()) / 3.0
}

/// `1 - F` for dephasing with probability `p_m`: `p_m/3`.
pub fn infidelity_cross_measurement(p_m: f64) -> f64 {
    p_m / 3.0
}

/// The phase `φ ∈ [0, π/2]` whose Z-phase error has infidelity `eps`.
pub fn stark_phase_from_infidelity(eps: f64) -> Result<f64> {
    if !(0.0..=2.0 / 3.0).contains(&eps) {
        return Err(Error::parameter("eps", format!("{eps} is not a Z-phase infidelity")));
    }
    Ok(0.5 * (1.0 - 3.0 * eps).acos())
}

/// `1 - F` of the control channel left by a two-qubit channel.
pub fn effective_control_infidelity(channel: &KrausChannel, input: AncillaInput) -> Result<f64> {
    let eff = effective_control_channel(&choi_of_channel(channel), input)?;
    Ok(1.0 - avg_gate_fidelity(&eff))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTransferMatrix {
    pub n_qubits: usize,
    /// Row-major `4ⁿ × 4ⁿ`.
    pub entries: Vec<f64>,
}

/// Largest tolerated imaginary part of a PTM entry.
pub const PTM_IMAG_TOL: f64 = 1e-10;

/// Pauli strings in lexicographic order over `I, X, Y, Z`, outer qubit first.
pub fn pauli_labels(n_qubits: usize) -> Vec<String> {
    let letters = ['I', 'X', 'Y', 'Z'];
    (0..4usize.pow(n_qubits as u32))
        .map(|k| {
            (0..n_qubits)
                .rev()
                .map(|q| letters[(k >> (2 * q)) & 3])
                .collect()
        })
        .collect()
}

fn pauli_basis(n_qubits: usize) -> Vec<CMatrix> {
    let single = paulis();
    let mut basis = vec![linalg::identity(1)];
    for _ in 0..n_qubits {
        basis = basis
            .iter()
            .flat_map(|b| single.iter().map(move |p| kron(b, p)))
            .collect();
    }
    basis
}

fn qubits_of(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        other => Err(Error::Dimension { expected: 4, got: other }),
    }
}

impl PauliTransferMatrix {
    pub fn size(&self) -> usize {
        4usize.pow(self.n_qubits as u32)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size() + col]
    }

    /// Entry by Pauli labels, e.g. `("IY", "IX")`.
    pub fn element(&self, row: &str, col: &str) -> Option<f64> {
        let labels = pauli_labels(self.n_qubits);
        let r = labels.iter().position(|l| l == row)?;
        let c = labels.iter().position(|l| l == col)?;
        Some(self.get(r, c))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size(), self.size(), &self.entries)
    }

    pub fn to_csv(&self) -> String {
        let labels = pauli_labels(self.n_qubits);
        let mut out = format!("row,{}\n", labels.join(","));
        for (r, label) in labels.iter().enumerate() {
            let row: Vec<String> = (0..labels.len()).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&format!("{label},{}\n", row.join(",")));
        }
        out
    }

    fn from_fn(n_qubits: usize, mut f: impl FnMut(usize, usize) -> num_complex::Complex64) -> Result<Self> {
        let size = 4usize.pow(n_qubits as u32);
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let z = f(i, j);
                if z.im.abs() > PTM_IMAG_TOL {
                    return Err(Error::Computation(format!(
                        "PTM entry ({i}, {j}) has imaginary part {:.2e}",
                        z.im
                    )));
                }
                entries.push(z.re);
            }
        }
        Ok(PauliTransferMatrix { n_qubits, entries })
    }
}

/// `R_ij = (1/d) Tr[P_i E(P_j)]`.
pub fn ptm_of_channel(channel: &KrausChannel) -> Result<PauliTransferMatrix> {
    let n = qubits_of(channel.dim())?;
    let basis = pauli_basis(n);
    let d = channel.dim() as f64;
    let images: Vec<CMatrix> = basis.iter().map(|p| channel.apply_matrix(p)).collect();
    PauliTransferMatrix::from_fn(n, |i, j| trace(&(&basis[i] * &images[j])) / d)
}

/// The same matrix read off the Choi state: `R_ij = Tr[σ (P_jᵀ ⊗ P_i)]`.
pub fn ptm_from_choi(choi: &ChoiState) -> Result<PauliTransferMatrix> {
    let n = qubits_of(choi.dim)?;
    let basis = pauli_basis(n);
    PauliTransferMatrix::from_fn(n, |i, j| {
        let observable = kron(&basis[j].transpose(), &basis[i]);
        trace(&(choi.matrix() * observable))
    })
}

/// Zeroes every entry with `|R| ≤ √(6·ε)`. Entries where `ideal` is non-zero
/// are always kept.
pub fn threshold_ptm(
    ptm: &PauliTransferMatrix,
    eps_irb: f64,
    ideal: Option<&PauliTransferMatrix>,
) -> Result<PauliTransferMatrix> {
    if !(eps_irb >= 0.0 && eps_irb.is_finite()) {
        return Err(Error::parameter("eps_irb", format!("{eps_irb} must be non-negative")));
    }
    if let Some(ideal) = ideal {
        if ideal.n_qubits != ptm.n_qubits {
            return Err(Error::Dimension {
                expected: ptm.size(),
                got: ideal.size(),
            });
        }
    }
    let threshold = (6.0 * eps_irb).sqrt();
    let entries = ptm
        .entries
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let keep = r.abs() > threshold || ideal.is_some_and(|m| m.entries[k].abs() > 1e-12);
            if keep {
                r
            } else {
                0.0
            }
        })
        .collect();
    Ok(PauliTransferMatrix {
        n_qubits: ptm.n_qubits,
        entries,
    })
}
