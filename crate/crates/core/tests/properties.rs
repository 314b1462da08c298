use std::f64::consts::PI;

use mcmrb::channel_metrics::{ptm_of_channel, threshold_ptm};
use mcmrb::clifford::{compose, inverse, inverse_of_sequence, random_clifford, Clifford, GROUP_ORDER};
use mcmrb::linalg::{frobenius_distance, on_control, CMatrix};
use mcmrb::noise::{build_noise_model, stark_unitary, DeviceParams, Scenario};
use mcmrb::simulator::{
    apply_kraus, apply_operation, apply_unitary, mid_measure_ancilla, DensityMatrix, InitState, KrausChannel,
    Target,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Distance from `u` to the identity up to a global phase.
fn phase_distance_to_identity(u: &CMatrix) -> f64 {
    let phase = u[(0, 0)] / u[(0, 0)].norm();
    frobenius_distance(&(u * phase.conj()), &CMatrix::identity(2, 2))
}

#[test]
fn group_is_closed_with_inverses() {
    let all: Vec<Clifford> = Clifford::all().collect();
    assert_eq!(all.len(), GROUP_ORDER);
    for &a in &all {
        assert_eq!(compose(a, inverse(a)), Clifford::identity());
        assert_eq!(compose(inverse(a), a), Clifford::identity());
        for &b in &all {
            let ab = compose(a, b);
            let product = b.unitary() * a.unitary();
            let found = Clifford::from_unitary(&product).expect("product stays in the group");
            assert_eq!(found, ab);
        }
    }
}

#[test]
fn random_sequences_invert_to_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..1000 {
        let n = 1 + trial % 150;
        let seq: Vec<Clifford> = (0..n).map(|_| random_clifford(&mut rng)).collect();
        let mut u = CMatrix::identity(2, 2);
        for c in seq.iter().chain([&inverse_of_sequence(&seq)]) {
            u = c.unitary() * u;
        }
        assert!(phase_distance_to_identity(&u) < 1e-10, "trial {trial}");
    }
}

#[test]
fn invariants_hold_after_every_operation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scenarios = [
        Scenario::NonQnd { eta: 0.2 },
        Scenario::Stark { phi: 0.3 },
        Scenario::CrossMeasurement { p_m: 0.4 },
        Scenario::Collision { delta: 2.0, coupling: 1.0 },
        Scenario::ZzRelaxation { nu: 0.5, ancilla_t1: 1.0 },
    ];
    for scenario in scenarios {
        let model = build_noise_model(scenario, &DeviceParams::default()).unwrap();
        let gate = model.gate_channel().unwrap().unwrap();
        let mut dm = DensityMatrix::pair(InitState::Excited, InitState::Ground);
        for _ in 0..40 {
            dm = apply_unitary(&dm, random_clifford(&mut rng).unitary(), Target::Control).unwrap();
            dm.check_invariants().unwrap();
            dm = apply_kraus(&dm, &gate, Target::Control).unwrap();
            dm.check_invariants().unwrap();
            dm = apply_operation(&dm, &model.pre_measure, Target::All).unwrap();
            dm.check_invariants().unwrap();
            dm = mid_measure_ancilla(&dm).unwrap();
            dm.check_invariants().unwrap();
            dm = apply_operation(&dm, &model.post_measure, Target::All).unwrap();
            dm.check_invariants().unwrap();
        }
    }
}

#[test]
fn stark_ptm_rotation() {
    for k in 0..50 {
        let theta = -PI + 2.0 * PI * k as f64 / 49.0;
        let channel = KrausChannel::new(vec![on_control(&stark_unitary(theta))]).unwrap();
        let ptm = ptm_of_channel(&channel).unwrap();
        assert!((ptm.element("IY", "IX").unwrap() - (2.0 * theta).sin()).abs() < 1e-10);
        assert!((ptm.element("IX", "IY").unwrap() + (2.0 * theta).sin()).abs() < 1e-10);
    }
}

/// The rotation entries `±sin 2θ` sit just below `√(6ε) = 2 sin θ` when `ε`
/// is the exact infidelity, so the cut keeps them only for a slightly
/// smaller `ε`.
#[test]
fn thresholded_stark_rotation_block() {
    let theta: f64 = 0.05;
    let exact = (1.0 - (2.0 * theta).cos()) / 3.0;
    let ptm = ptm_of_channel(&KrausChannel::new(vec![on_control(&stark_unitary(theta))]).unwrap()).unwrap();
    let identity = ptm_of_channel(&KrausChannel::identity(4)).unwrap();
    let labels = mcmrb::channel_metrics::pauli_labels(2);
    for (eps, keep_rotation) in [(0.8 * exact, true), (exact, false)] {
        let cut = threshold_ptm(&ptm, eps, Some(&identity)).unwrap();
        for (i, row) in labels.iter().enumerate() {
            for (j, col) in labels.iter().enumerate() {
                let v = cut.get(i, j);
                let (r, c) = (row.as_bytes(), col.as_bytes());
                let rotation = r[0] == c[0] && matches!((r[1], c[1]), (b'X', b'Y') | (b'Y', b'X'));
                if i == j {
                    assert!(v.abs() > 0.9);
                } else if rotation && keep_rotation {
                    assert!((v.abs() - (2.0 * theta).sin()).abs() < 1e-12, "{row}{col}");
                } else {
                    assert_eq!(v, 0.0, "{row}{col}");
                }
            }
        }
    }
}
