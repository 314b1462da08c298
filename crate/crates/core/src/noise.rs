//! Error channels and per-scenario noise models.
//!
//! Units: times in microseconds, frequencies as angular frequencies in
//! rad/μs, phases in radians. A frequency quoted as `f` kHz corresponds to
//! `2π · f · 1e-3` rad/μs (see [`angular_from_khz`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, expm_hermitian, kron, mat2, pauli_x, pauli_y, pauli_z, projector, CMatrix, ONE, ZERO};
use crate::simulator::{KrausChannel, Operation, Qubit};
use crate::{Error, Result};

/// Representative device values used by every scenario unless overridden.
pub const DEFAULT_GATE_DEPOL: f64 = 1e-3;
pub const DEFAULT_CONTROL_T1_US: f64 = 345.0;
pub const DEFAULT_CONTROL_T2_US: f64 = 280.0;
pub const DEFAULT_MEASURE_US: f64 = 0.71;

pub fn angular_from_khz(khz: f64) -> f64 {
    2.0 * PI * khz * 1e-3
}

pub fn angular_from_mhz(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::parameter(name, format!("{p} is not a probability")))
    }
}

fn check_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(name, format!("{x} is not finite")))
    }
}

/// `ρ → (1-η)ρ + η I/2`.
pub fn depolarizing(eta: f64) -> Result<KrausChannel> {
    check_probability("eta", eta)?;
    let k0 = linalg::identity(2) * c((1.0 - 0.75 * eta).sqrt(), 0.0);
    let s = c((0.25 * eta).sqrt(), 0.0);
    KrausChannel::new(vec![k0, pauli_x() * s, pauli_y() * s, pauli_z() * s])
}

/// Relaxation and dephasing times of a qubit, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub t1: f64,
    pub t2: f64,
}

impl Relaxation {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t1.is_finite()) {
            return Err(Error::parameter("t1", format!("{t1} must be positive")));
        }
        if !(t2 > 0.0 && t2.is_finite()) {
            return Err(Error::parameter("t2", format!("{t2} must be positive")));
        }
        if t2 > 2.0 * t1 {
            return Err(Error::parameter("t2", format!("T2 = {t2} exceeds 2·T1 = {}", 2.0 * t1)));
        }
        Ok(Relaxation { t1, t2 })
    }

    pub fn for_duration(self, duration: f64) -> Result<DampingParams> {
        DampingParams::new(self.t1, self.t2, duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingParams {
    pub t1: f64,
    pub t2: f64,
    pub duration: f64,
}

impl DampingParams {
    pub fn new(t1: f64, t2: f64, duration: f64) -> Result<Self> {
        Relaxation::new(t1, t2)?;
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::parameter("duration", format!("{duration} must be non-negative")));
        }
        Ok(DampingParams { t1, t2, duration })
    }

    /// Relaxation probability `1 - exp(-t/T1)`.
    pub fn gamma(&self) -> f64 {
        -(-self.duration / self.t1).exp_m1()
    }

    /// Off-diagonal decay factor `exp(-t/T2)`.
    pub fn coherence(&self) -> f64 {
        (-self.duration / self.t2).exp()
    }

    /// Pure-dephasing rate `1/T2 - 1/(2 T1)`.
    pub fn dephasing_rate(&self) -> f64 {
        1.0 / self.t2 - 0.5 / self.t1
    }
}

/// Combined amplitude and phase damping with Kraus operators
/// `diag(1, √(1-γ-λ))`, `√γ |0⟩⟨1|` and `√λ |1⟩⟨1|`, where
/// `√(1-γ-λ) = exp(-t/T2)`, equivalently `λ = e^{-t/T1}(1 - e^{-2t/Tφ})`.
pub fn amplitude_phase_damping(params: &DampingParams) -> Result<KrausChannel> {
    let params = DampingParams::new(params.t1, params.t2, params.duration)?;
    let gamma = params.gamma();
    let keep = params.coherence();
    // e^{-t/T1} - e^{-2t/T2} ≥ 0 because T2 ≤ 2 T1
    let lambda = ((-params.duration / params.t1).exp() - keep * keep).max(0.0);
    let k0 = mat2(ONE, ZERO, ZERO, c(keep, 0.0));
    let k1 = mat2(ZERO, c(gamma.sqrt(), 0.0), ZERO, ZERO);
    let k2 = mat2(ZERO, ZERO, ZERO, c(lambda.sqrt(), 0.0));
    KrausChannel::new(vec![k0, k1, k2])
}

/// `exp(-i φ Z) = diag(e^{-iφ}, e^{iφ})`.
pub fn stark_unitary(phi: f64) -> CMatrix {
    mat2(c(0.0, -phi).exp(), ZERO, ZERO, c(0.0, phi).exp())
}

/// Completely dephases the qubit with probability `p_m`.
pub fn cross_measurement(p_m: f64) -> Result<KrausChannel> {
    check_probability("p_m", p_m)?;
    let s = c(p_m.sqrt(), 0.0);
    KrausChannel::new(vec![
        projector(0) * s,
        projector(1) * s,
        linalg::identity(2) * c((1.0 - p_m).sqrt(), 0.0),
    ])
}

/// `Δ/2 σ_z^a + J (σ_-^a σ_+^c + σ_+^a σ_-^c)` on `ancilla ⊗ control`.
pub fn collision_hamiltonian(delta: f64, coupling: f64) -> CMatrix {
    // σ_- = |0⟩⟨1| lowers the excitation.
    let lower = mat2(ZERO, ONE, ZERO, ZERO);
    let raise = lower.adjoint();
    let exchange = kron(&lower, &raise) + kron(&raise, &lower);
    linalg::on_ancilla(&pauli_z()) * c(delta / 2.0, 0.0) + exchange * c(coupling, 0.0)
}

/// `exp(-i H_col t_m)`; `delta` and `coupling` in rad/μs.
pub fn collision_unitary(delta: f64, coupling: f64, t_m: f64) -> CMatrix {
    expm_hermitian(&collision_hamiltonian(delta, coupling), t_m)
}

/// `ν |e⟩⟨e|_a ⊗ σ_z^c`.
pub fn zz_hamiltonian(nu: f64) -> CMatrix {
    kron(&projector(1), &pauli_z()) * c(nu, 0.0)
}

/// `exp(-i H_ZZ t_m)`: identity when the ancilla is in the ground state,
/// `diag(e^{-iνt}, e^{iνt})` on the control when it is excited.
pub fn zz_unitary(nu: f64, t_m: f64) -> CMatrix {
    let mut u = linalg::identity(4);
    u[(2, 2)] = c(0.0, -nu * t_m).exp();
    u[(3, 3)] = c(0.0, nu * t_m).exp();
    u
}

/// Noise attached to every gate and mid-circuit measurement of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub label: String,
    /// Depolarizing probability applied after every control Clifford.
    pub gate_depol_eta: f64,
    /// Two-qubit operation applied right before each ancilla measurement.
    pub pre_measure: Operation,
    /// Two-qubit operation applied right after each ancilla measurement.
    pub post_measure: Operation,
    /// Replace with `false` to turn the measurement itself into an identity.
    pub measurement_dephasing: bool,
    /// Damping applied to delays on each qubit, scaled by the delay duration.
    pub idle_control: Option<Relaxation>,
    pub idle_ancilla: Option<Relaxation>,
    /// Probability that state preparation flips each qubit.
    pub prep_flip: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            label: "noiseless".into(),
            gate_depol_eta: 0.0,
            pre_measure: Operation::Identity,
            post_measure: Operation::Identity,
            measurement_dephasing: true,
            idle_control: None,
            idle_ancilla: None,
            prep_flip: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("gate_depol_eta", self.gate_depol_eta)?;
        check_probability("prep_flip", self.prep_flip)?;
        for op in [&self.pre_measure, &self.post_measure] {
            match op {
                Operation::Identity => {}
                Operation::Unitary(u) => {
                    Operation::unitary(u.clone())?;
                    if u.nrows() != 4 {
                        return Err(Error::Dimension { expected: 4, got: u.nrows() });
                    }
                }
                Operation::Kraus(k) => {
                    KrausChannel::new(k.operators().to_vec())?;
                    if k.dim() != 4 {
                        return Err(Error::Dimension { expected: 4, got: k.dim() });
                    }
                }
            }
        }
        Ok(())
    }

    /// The post-gate depolarizing channel, or `None` when `η = 0`.
    pub fn gate_channel(&self) -> Result<Option<KrausChannel>> {
        if self.gate_depol_eta == 0.0 {
            return Ok(None);
        }
        depolarizing(self.gate_depol_eta).map(Some)
    }

    /// One full mid-circuit measurement step on the register: `E_pre`, the
    /// ancilla measurement, then `E_post`.
    pub fn measurement_step_channel(&self) -> Result<KrausChannel> {
        let measure = if self.measurement_dephasing {
            KrausChannel::new(vec![
                kron(&projector(0), &linalg::identity(2)),
                kron(&projector(1), &linalg::identity(2)),
            ])?
        } else {
            KrausChannel::identity(4)
        };
        self.pre_measure.to_kraus(4).then(&measure)?.then(&self.post_measure.to_kraus(4))
    }

    /// The single-qubit idle channel for a delay on `qubit`, if any.
    pub fn idle_channel(&self, qubit: Qubit, duration: f64) -> Result<Option<KrausChannel>> {
        let relax = match qubit {
            Qubit::Control => self.idle_control,
            Qubit::Ancilla => self.idle_ancilla,
        };
        relax
            .map(|r| amplitude_phase_damping(&r.for_duration(duration)?))
            .transpose()
    }
}

/// The simulated error mechanisms and their parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    None,
    /// Ancilla depolarized with probability `eta` after each measurement.
    NonQnd { eta: f64 },
    /// Control Z-phase `exp(-iφZ)` before each measurement.
    Stark { phi: f64 },
    /// Control fully dephased with probability `p_m` before each measurement.
    CrossMeasurement { p_m: f64 },
    /// Exchange coupling to a Stark-shifted ancilla, in rad/μs.
    Collision { delta: f64, coupling: f64 },
    /// Conditional phase `ν` (rad/μs) plus ancilla relaxation with
    /// `T2 = T1/3`.
    ZzRelaxation { nu: f64, ancilla_t1: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::NonQnd { .. } => "non_qnd",
            Scenario::Stark { .. } => "stark",
            Scenario::CrossMeasurement { .. } => "cross_measurement",
            Scenario::Collision { .. } => "collision",
            Scenario::ZzRelaxation { .. } => "zz_relaxation",
        }
    }

    /// Analytic average gate infidelity of the control error added per
    /// measurement, where one is known in closed form.
    pub fn control_infidelity(&self) -> Option<f64> {
        use crate::channel_metrics::{infidelity_cross_measurement, infidelity_stark};
        match *self {
            Scenario::None | Scenario::NonQnd { .. } => Some(0.0),
            Scenario::Stark { phi } => Some(infidelity_stark(phi)),
            Scenario::CrossMeasurement { p_m } => Some(infidelity_cross_measurement(p_m)),
            Scenario::Collision { .. } | Scenario::ZzRelaxation { .. } => None,
        }
    }
}

/// Device parameters shared by all scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub gate_depol_eta: f64,
    /// Control relaxation during measurements and delays; `None` switches it
    /// off.
    pub control: Option<Relaxation>,
    pub t_m: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            gate_depol_eta: DEFAULT_GATE_DEPOL,
            control: Some(Relaxation {
                t1: DEFAULT_CONTROL_T1_US,
                t2: DEFAULT_CONTROL_T2_US,
            }),
            t_m: DEFAULT_MEASURE_US,
        }
    }
}

/// Assembles `(E_pre, E_post)` for a scenario:
///
/// | scenario | pre | post |
/// |---|---|---|
/// | none | identity | identity |
/// | non-QND | control damping | ancilla depolarizing |
/// | Stark | control Z-phase | control damping |
/// | cross-measurement | control dephasing | control damping |
/// | collision | collision unitary | control damping |
/// | ZZ | ZZ unitary | ancilla and control damping |
///
/// Control damping lasts `t_m`. Delays damp the control with the same
/// `T1`/`T2` (and the ancilla too in the ZZ scenario) so that `delay-rb`
/// references the idle decoherence of `mcm-rb`.
pub fn build_noise_model(scenario: Scenario, device: &DeviceParams) -> Result<NoiseModel> {
    check_probability("gate_depol_eta", device.gate_depol_eta)?;
    let control = device.control.map(|r| Relaxation::new(r.t1, r.t2)).transpose()?;
    if !(device.t_m > 0.0 && device.t_m.is_finite()) {
        return Err(Error::parameter("t_m", "measurement duration must be positive"));
    }
    let control_damping = || -> Result<Operation> {
        match control {
            Some(r) => Ok(Operation::Kraus(
                amplitude_phase_damping(&r.for_duration(device.t_m)?)?.embed(Qubit::Control),
            )),
            None => Ok(Operation::Identity),
        }
    };

    let mut model = NoiseModel {
        label: scenario.name().to_string(),
        gate_depol_eta: device.gate_depol_eta,
        pre_measure: Operation::Identity,
        post_measure: Operation::Identity,
        measurement_dephasing: true,
        idle_control: control,
        idle_ancilla: None,
        prep_flip: 0.0,
    };
    match scenario {
        Scenario::None => model.idle_control = None,
        Scenario::NonQnd { eta } => {
            model.pre_measure = control_damping()?;
            model.post_measure = Operation::Kraus(depolarizing(eta)?.embed(Qubit::Ancilla));
        }
        Scenario::Stark { phi } => {
            check_finite("phi", phi)?;
            model.pre_measure = Operation::Unitary(linalg::on_control(&stark_unitary(phi)));
            model.post_measure = control_damping()?;
        }
        Scenario::CrossMeasurement { p_m } => {
            model.pre_measure = Operation::Kraus(cross_measurement(p_m)?.embed(Qubit::Control));
            model.post_measure = control_damping()?;
        }
        Scenario::Collision { delta, coupling } => {
            check_finite("delta", delta)?;
            check_finite("coupling", coupling)?;
            model.pre_measure = Operation::Unitary(collision_unitary(delta, coupling, device.t_m));
            model.post_measure = control_damping()?;
        }
        Scenario::ZzRelaxation { nu, ancilla_t1 } => {
            check_finite("nu", nu)?;
            let ancilla = Relaxation::new(ancilla_t1, ancilla_t1 / 3.0)?;
            model.pre_measure = Operation::Unitary(zz_unitary(nu, device.t_m));
            let ancilla_damping = amplitude_phase_damping(&ancilla.for_duration(device.t_m)?)?;
            let post = match control {
                Some(r) => KrausChannel::tensor(&ancilla_damping, &amplitude_phase_damping(&r.for_duration(device.t_m)?)?),
                None => ancilla_damping.embed(Qubit::Ancilla),
            };
            model.post_measure = Operation::Kraus(post);
            model.idle_ancilla = Some(ancilla);
        }
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_distance, unitarity_error};
    use crate::simulator::{apply_kraus, DensityMatrix, InitState, Target};

    fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
        (a * b - b * a).norm()
    }

    #[test]
    fn depolarizing_limits() {
        let id = depolarizing(0.0).unwrap();
        let rho = DensityMatrix::single_qubit(InitState::Excited);
        let out = apply_kraus(&rho, &id, Target::All).unwrap();
        assert!(frobenius_distance(out.matrix(), rho.matrix()) < 1e-15);
        assert!(depolarizing(1.2).is_err());
        assert!(depolarizing(-0.1).is_err());
    }

    #[test]
    fn depolarizing_two_percent_on_ground() {
        let out = apply_kraus(
            &DensityMatrix::single_qubit(InitState::Ground),
            &depolarizing(0.02).unwrap(),
            Target::All,
        )
        .unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.99).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.01).abs() < 1e-15);
    }

    #[test]
    fn damping_zero_duration_is_identity() {
        let ch = amplitude_phase_damping(&DampingParams::new(345.0, 280.0, 0.0).unwrap()).unwrap();
        let rho = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = apply_kraus(&rho, &ch, Target::All).unwrap();
        assert!(frobenius_distance(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn damping_closed_form_decay() {
        let params = DampingParams::new(345.0, 280.0, 0.71).unwrap();
        let ch = amplitude_phase_damping(&params).unwrap();
        let excited = apply_kraus(&DensityMatrix::single_qubit(InitState::Excited), &ch, Target::All).unwrap();
        let pop = excited.matrix()[(1, 1)].re;
        assert!((pop - (-0.71_f64 / 345.0).exp()).abs() < 1e-15);
        assert!((pop - 0.997944).abs() < 1e-6);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        let out = apply_kraus(&plus, &ch, Target::All).unwrap();
        let factor = out.matrix()[(0, 1)].norm() / 0.5;
        assert!((factor - (-0.71_f64 / 280.0).exp()).abs() < 1e-14);
        assert!((factor - 0.997467).abs() < 1e-6);
        // ground state is the fixed point
        let g = apply_kraus(&DensityMatrix::single_qubit(InitState::Ground), &ch, Target::All).unwrap();
        assert!((g.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn damping_rejects_unphysical_t2() {
        assert!(DampingParams::new(10.0, 25.0, 1.0).is_err());
        assert!(DampingParams::new(0.0, 1.0, 1.0).is_err());
        assert!(DampingParams::new(10.0, 20.0, -1.0).is_err());
        assert!(DampingParams::new(10.0, 20.0, 1.0).is_ok());
    }

    #[test]
    fn damping_is_a_semigroup() {
        for (t1, t2) in [(345.0, 280.0), (10.0, 10.0 / 3.0), (5.0, 10.0)] {
            let a = amplitude_phase_damping(&DampingParams::new(t1, t2, 0.3).unwrap()).unwrap();
            let b = amplitude_phase_damping(&DampingParams::new(t1, t2, 1.1).unwrap()).unwrap();
            let ab = amplitude_phase_damping(&DampingParams::new(t1, t2, 1.4).unwrap()).unwrap();
            let rho = DensityMatrix::pure(&[c(0.6, 0.0), c(0.48, 0.64)]).unwrap();
            let seq = apply_kraus(&apply_kraus(&rho, &a, Target::All).unwrap(), &b, Target::All).unwrap();
            let once = apply_kraus(&rho, &ab, Target::All).unwrap();
            assert!(frobenius_distance(seq.matrix(), once.matrix()) < 1e-10);
        }
    }

    #[test]
    fn stark_unitary_cases() {
        assert!(frobenius_distance(&stark_unitary(0.0), &linalg::identity(2)) < 1e-15);
        let u = stark_unitary(PI / 2.0);
        assert!((u[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(linalg::equal_up_to_phase(&u, &pauli_z(), 1e-12));
        assert!(frobenius_distance(&stark_unitary(0.4), &expm_hermitian(&pauli_z(), 0.4)) < 1e-14);
    }

    #[test]
    fn cross_measurement_limits() {
        let zero = cross_measurement(0.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        let out = apply_kraus(&plus, &zero, Target::All).unwrap();
        assert!(frobenius_distance(out.matrix(), plus.matrix()) < 1e-15);
        let full = apply_kraus(&plus, &cross_measurement(1.0).unwrap(), Target::All).unwrap();
        assert!(full.matrix()[(0, 1)].norm() < 1e-15);
        assert!(cross_measurement(1.5).is_err());
    }

    #[test]
    fn collision_without_coupling_is_diagonal() {
        let u = collision_unitary(3.0, 0.0, 0.71);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(u[(i, j)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn resonant_collision_swaps_excitation() {
        // Δ = 0, J t = π/2: |a=0,c=1⟩ (index 1) ↔ |a=1,c=0⟩ (index 2), off-diagonal -i sin(Jt).
        let j = 2.0;
        let u = collision_unitary(0.0, j, PI / (2.0 * j));
        assert!((u[(2, 1)].norm() - 1.0).abs() < 1e-12);
        assert!((u[(2, 1)] - c(0.0, -1.0)).norm() < 1e-12);
        assert!(u[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn collision_conserves_excitations() {
        let excitations = [0usize, 1, 1, 2];
        for (delta, coupling) in [(20.0, 1.0), (2.0, 1.0), (0.5, 3.0)] {
            let u = collision_unitary(delta, coupling, 0.71);
            assert!(unitarity_error(&u) < 1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    if excitations[i] != excitations[j] {
                        assert!(u[(i, j)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zz_unitary_structure() {
        let nu = angular_from_khz(50.0);
        let u = zz_unitary(nu, 0.71);
        assert!(frobenius_distance(&u, &expm_hermitian(&zz_hamiltonian(nu), 0.71)) < 1e-14);
        // ground-ancilla block is the identity
        assert_eq!(u[(0, 0)], ONE);
        assert_eq!(u[(1, 1)], ONE);
        assert!(frobenius_distance(&zz_unitary(0.0, 0.71), &linalg::identity(4)) < 1e-15);
        let za = linalg::on_ancilla(&pauli_z());
        let zc = linalg::on_control(&pauli_z());
        assert!(commutator_norm(&u, &za) < 1e-12 && commutator_norm(&u, &zc) < 1e-12);
        // conditional control phase 2νt ≈ 0.446 rad
        let relative = (u[(3, 3)] / u[(2, 2)]).arg();
        assert!((relative - 2.0 * nu * 0.71).abs() < 1e-12);
        assert!((relative - 0.446).abs() < 1e-3);
    }

    #[test]
    fn scenario_none_keeps_gate_depolarization() {
        let m = build_noise_model(Scenario::None, &DeviceParams::default()).unwrap();
        assert_eq!(m.gate_depol_eta, 1e-3);
        assert_eq!(m.pre_measure, Operation::Identity);
        assert_eq!(m.post_measure, Operation::Identity);
        assert!(m.idle_control.is_none());
    }

    #[test]
    fn non_qnd_post_channel_acts_on_ancilla() {
        let m = build_noise_model(Scenario::NonQnd { eta: 0.02 }, &DeviceParams::default()).unwrap();
        let out = crate::simulator::apply_operation(&DensityMatrix::ground_pair(), &m.post_measure, Target::All).unwrap();
        let pa = crate::simulator::ground_state_probability(&out, Qubit::Ancilla);
        let pc = crate::simulator::ground_state_probability(&out, Qubit::Control);
        assert!((pa - 0.99).abs() < 1e-15);
        assert!((pc - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zz_scenario_uses_t1_over_three() {
        let m = build_noise_model(
            Scenario::ZzRelaxation { nu: angular_from_khz(50.0), ancilla_t1: 10.0 },
            &DeviceParams::default(),
        )
        .unwrap();
        let r = m.idle_ancilla.unwrap();
        assert!((r.t2 - 10.0 / 3.0).abs() < 1e-15);
        match &m.post_measure {
            Operation::Kraus(k) => assert_eq!(k.operators().len(), 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_scenario_parameters() {
        let dev = DeviceParams::default();
        assert!(build_noise_model(Scenario::NonQnd { eta: 2.0 }, &dev).is_err());
        assert!(build_noise_model(Scenario::CrossMeasurement { p_m: -0.1 }, &dev).is_err());
        assert!(build_noise_model(Scenario::ZzRelaxation { nu: 0.3, ancilla_t1: 0.0 }, &dev).is_err());
        assert!(build_noise_model(Scenario::Stark { phi: f64::NAN }, &dev).is_err());
    }

    #[test]
    fn all_channels_complete_and_unitaries_unitary() {
        let dev = DeviceParams::default();
        for s in [
            Scenario::None,
            Scenario::NonQnd { eta: 0.2 },
            Scenario::Stark { phi: 0.1 },
            Scenario::CrossMeasurement { p_m: 0.05 },
            Scenario::Collision { delta: 40.0, coupling: 2.0 },
            Scenario::ZzRelaxation { nu: 0.3, ancilla_t1: 1.0 },
        ] {
            build_noise_model(s, &dev).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn measurement_step_isolates_scenario_error() {
        use crate::channel_metrics::{effective_control_infidelity, infidelity_stark, AncillaInput};
        let device = DeviceParams {
            control: None,
            ..DeviceParams::default()
        };
        let phi = 0.07;
        let step = build_noise_model(Scenario::Stark { phi }, &device)
            .unwrap()
            .measurement_step_channel()
            .unwrap();
        let eps = effective_control_infidelity(&step, AncillaInput::Ground).unwrap();
        assert!((eps - infidelity_stark(phi)).abs() < 1e-12);

        let with_damping = build_noise_model(Scenario::Stark { phi }, &DeviceParams::default())
            .unwrap()
            .measurement_step_channel()
            .unwrap();
        assert!(effective_control_infidelity(&with_damping, AncillaInput::Ground).unwrap() > eps);

        let none = build_noise_model(Scenario::None, &device).unwrap();
        assert_eq!(none.idle_control, None);
        let eps = effective_control_infidelity(&none.measurement_step_channel().unwrap(), AncillaInput::Ground).unwrap();
        assert!(eps.abs() < 1e-12);
    }
}
