//! Ground-state survival of a repeatedly measured qubit that flips with
//! probability `p` per measurement.

/// Probability of observing the ground state after `n` rounds, in the closed
/// form
///
/// `[(1-p)^(n+2) - p^(n+2-w) (1-p)^w] / (1-2p)`, `w = n mod 2`.
///
/// This is the geometric sum `Σ_k p^(2k) (1-p)^(n-2k)` evaluated exactly
/// (see [`pgs_brute_force`]). At `p = 1/2` the expression is 0/0 and the
/// limit `(⌊n/2⌋ + 1) / 2^n` is returned.
pub fn pgs_closed_form(p: f64, n: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p}");
    let q = 1.0 - p;
    let denom = 1.0 - 2.0 * p;
    if denom.abs() < 1e-9 {
        return pgs_brute_force(p, n);
    }
    let w = (n % 2) as i32;
    let n = n as i32;
    (q.powi(n + 2) - p.powi(n + 2 - w) * q.powi(w)) / denom
}

/// Term-by-term sum `Σ_{k=0}^{⌊n/2⌋} p^(2k) (1-p)^(n-2k)`, smallest terms
/// first.
pub fn pgs_brute_force(p: f64, n: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p}");
    let q = 1.0 - p;
    let mut terms: Vec<f64> = (0..=n / 2)
        .map(|k| p.powi(2 * k as i32) * q.powi((n - 2 * k) as i32))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Probability that `n` independent flips of probability `p` occur an even
/// number of times: `(1 + (1-2p)^n) / 2`.
pub fn even_flip_probability(p: f64, n: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p}");
    0.5 * (1.0 + (1.0 - 2.0 * p).powi(n as i32))
}
