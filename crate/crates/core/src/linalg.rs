//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Builds a 2×2 matrix from row-major entries.
pub fn mat2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

pub fn pauli_x() -> CMatrix {
    mat2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> CMatrix {
    mat2(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> CMatrix {
    mat2(ONE, ZERO, ZERO, -ONE)
}

/// Single-qubit Paulis in the order I, X, Y, Z.
pub fn paulis() -> [CMatrix; 4] {
    [identity(2), pauli_x(), pauli_y(), pauli_z()]
}

/// |k⟩⟨k| on a qubit.
pub fn projector(k: usize) -> CMatrix {
    let mut p = CMatrix::zeros(2, 2);
    p[(k, k)] = ONE;
    p
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Largest deviation from Hermiticity, `max |A - A†|`.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|U†U - I|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `|Tr(A†B)| / d`, equal to one iff the unitaries agree up to global phase.
pub fn phase_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}

/// Whether two unitaries coincide up to a global phase.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && (1.0 - phase_overlap(a, b)).abs() < tol
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// `exp(-i H t)` for Hermitian `H`, via the eigendecomposition of `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut phases = CMatrix::zeros(n, n);
    for k in 0..n {
        phases[(k, k)] = (-I * eig.eigenvalues[k] * t).exp();
    }
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Embeds a single-qubit operator on the control (`I_a ⊗ op`).
pub fn on_control(op: &CMatrix) -> CMatrix {
    kron(&identity(2), op)
}

/// Embeds a single-qubit operator on the ancilla (`op ⊗ I_c`).
pub fn on_ancilla(op: &CMatrix) -> CMatrix {
    kron(op, &identity(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_z() {
        let u = expm_hermitian(&pauli_z(), 0.3);
        assert!((u[(0, 0)] - (-I * 0.3).exp()).norm() < 1e-14);
        assert!((u[(1, 1)] - (I * 0.3).exp()).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_matches_series_for_x() {
        // exp(-i t X) = cos t I - i sin t X
        let t = 0.77_f64;
        let u = expm_hermitian(&pauli_x(), t);
        let expected = identity(2) * c(t.cos(), 0.0) - pauli_x() * (I * t.sin());
        assert!(frobenius_distance(&u, &expected) < 1e-13);
    }

    #[test]
    fn phase_equality_ignores_global_phase() {
        let x = pauli_x();
        let phased = &x * c(0.6, 0.8);
        assert!(equal_up_to_phase(&x, &phased, 1e-12));
        assert!(!equal_up_to_phase(&x, &pauli_z(), 1e-12));
    }

    #[test]
    fn embedding_order_is_ancilla_outer() {
        // X on the ancilla maps |00> to |10>, i.e. basis index 2.
        let xa = on_ancilla(&pauli_x());
        assert_eq!(xa[(2, 0)], ONE);
        let xc = on_control(&pauli_x());
        assert_eq!(xc[(1, 0)], ONE);
    }
}
