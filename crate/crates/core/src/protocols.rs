//! Circuit generation for the three suite protocols and the suite runner.
//!
//! * `mcm-rb`: random Cliffords on the control, each followed by an ancilla
//!   measurement, closed by the inverting Clifford.
//! * `delay-rb`: the same Clifford sequence with every measurement replaced
//!   by an idle of equal length on both qubits.
//! * `mcm-rep`: the measurements of `mcm-rb` with every gate replaced by an
//!   idle of equal length.
//!
//! All three protocols therefore take `N·(t_g + t_m) + t_g` at length `N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::DecayCurve;
use crate::clifford::{inverse_of_sequence, random_clifford, Clifford};
use crate::noise::{NoiseModel, DEFAULT_MEASURE_US};
use crate::simulator::{
    ground_state_probability, run_circuit, sample_shots, Circuit, CircuitOp, InitState, Qubit,
};
use crate::{Error, Result};

pub const DEFAULT_LENGTHS: [usize; 15] = [1, 2, 4, 6, 8, 12, 16, 24, 32, 48, 64, 90, 110, 130, 150];
pub const DEFAULT_GATE_US: f64 = 0.035;
pub const DEFAULT_SEED: u64 = 0x6d63_6d72_6221;
pub const SIMULATION_SEQUENCES: usize = 60;
pub const EXPERIMENT_SEQUENCES: usize = 40;
pub const DEFAULT_LENGTH_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    McmRb,
    DelayRb,
    McmRep,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::McmRb, Protocol::DelayRb, Protocol::McmRep];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::McmRb => "mcm_rb",
            Protocol::DelayRb => "delay_rb",
            Protocol::McmRep => "mcm_rep",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        Protocol::ALL.into_iter().find(|p| p.as_str() == s)
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Gate and measurement durations in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub t_g: f64,
    pub t_m: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            t_g: DEFAULT_GATE_US,
            t_m: DEFAULT_MEASURE_US,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub lengths: Vec<usize>,
    pub num_sequences: usize,
    /// Shots per circuit; 0 reports exact probabilities.
    pub shots: u64,
    pub timing: Timing,
    pub control_init: InitState,
    pub ancilla_init: InitState,
    pub seed: u64,
    pub length_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            lengths: DEFAULT_LENGTHS.to_vec(),
            num_sequences: SIMULATION_SEQUENCES,
            shots: 0,
            timing: Timing::default(),
            control_init: InitState::Ground,
            ancilla_init: InitState::Ground,
            seed: DEFAULT_SEED,
            length_cap: DEFAULT_LENGTH_CAP,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::parameter("lengths", "no sequence lengths given"));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter("lengths", "lengths must be strictly increasing"));
        }
        if let Some(&max) = self.lengths.last() {
            if max > self.length_cap {
                return Err(Error::parameter(
                    "lengths",
                    format!("length {max} exceeds the cap {}", self.length_cap),
                ));
            }
        }
        if self.num_sequences == 0 {
            return Err(Error::parameter("num_sequences", "at least one sequence is required"));
        }
        for (name, t) in [("t_g", self.timing.t_g), ("t_m", self.timing.t_m)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::parameter(name, format!("{t} must be a positive duration")));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_33b4_9bb1_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of `parts`, used to give every task its own stream.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of the Clifford sequence `(length, seq_index)`; shared by `mcm-rb`
/// and `delay-rb` so that the two form matched pairs.
pub fn sequence_seed(seed: u64, length: usize, seq_index: usize) -> u64 {
    derive_seed(&[seed, length as u64, seq_index as u64])
}

fn shot_seed(seed: u64, protocol: Protocol, length: usize, seq_index: usize, qubit: Qubit) -> u64 {
    derive_seed(&[seed, protocol.tag(), length as u64, seq_index as u64, qubit as u64 + 1])
}

pub fn random_sequence<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Clifford> {
    (0..n).map(|_| random_clifford(rng)).collect()
}

fn terminated(mut ops: Vec<CircuitOp>, seq: &[Clifford], timing: Timing) -> Vec<CircuitOp> {
    ops.push(CircuitOp::ControlGate {
        clifford: inverse_of_sequence(seq),
        duration: timing.t_g,
    });
    ops.push(CircuitOp::TerminalMeasureAll);
    ops
}

pub fn mcm_rb_circuit(seq: &[Clifford], timing: Timing) -> Circuit {
    let mut ops = Vec::with_capacity(2 * seq.len() + 2);
    for &clifford in seq {
        ops.push(CircuitOp::ControlGate { clifford, duration: timing.t_g });
        ops.push(CircuitOp::AncillaMidMeasure { duration: timing.t_m });
    }
    Circuit::new(terminated(ops, seq, timing))
}

pub fn delay_rb_circuit(seq: &[Clifford], timing: Timing) -> Circuit {
    let mut ops = Vec::with_capacity(3 * seq.len() + 2);
    for &clifford in seq {
        ops.push(CircuitOp::ControlGate { clifford, duration: timing.t_g });
        ops.push(CircuitOp::ControlDelay { duration: timing.t_m });
        ops.push(CircuitOp::AncillaDelay { duration: timing.t_m });
    }
    Circuit::new(terminated(ops, seq, timing))
}

pub fn generate_mcm_rb<R: rand::Rng + ?Sized>(n: usize, timing: Timing, rng: &mut R) -> Circuit {
    mcm_rb_circuit(&random_sequence(n, rng), timing)
}

/// Draws the same Cliffords as [`generate_mcm_rb`] from the same stream state.
pub fn generate_delay_rb<R: rand::Rng + ?Sized>(n: usize, timing: Timing, rng: &mut R) -> Circuit {
    delay_rb_circuit(&random_sequence(n, rng), timing)
}

/// `N` measurements, each preceded by a paired idle of `t_g`, plus the idle
/// standing in for the final inverse gate.
pub fn generate_mcm_rep(n: usize, timing: Timing) -> Circuit {
    let idle = [
        CircuitOp::ControlDelay { duration: timing.t_g },
        CircuitOp::AncillaDelay { duration: timing.t_g },
    ];
    let mut ops = Vec::with_capacity(3 * n + 3);
    for _ in 0..n {
        ops.extend_from_slice(&idle);
        ops.push(CircuitOp::AncillaMidMeasure { duration: timing.t_m });
    }
    ops.extend_from_slice(&idle);
    ops.push(CircuitOp::TerminalMeasureAll);
    Circuit::new(ops)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledCurve {
    pub protocol: Protocol,
    pub qubit: Qubit,
    pub curve: DecayCurve,
}

/// Decay curves of all three protocols for both qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteData {
    pub curves: Vec<LabeledCurve>,
}

impl SuiteData {
    pub fn curve(&self, protocol: Protocol, qubit: Qubit) -> Option<&DecayCurve> {
        self.curves
            .iter()
            .find(|c| c.protocol == protocol && c.qubit == qubit)
            .map(|c| &c.curve)
    }
}

struct Task {
    protocol: Protocol,
    length_index: usize,
    seq_index: usize,
}

fn run_task(task: &Task, config: &SuiteConfig, noise: &NoiseModel) -> Result<[f64; 2]> {
    let length = config.lengths[task.length_index];
    let circuit = match task.protocol {
        Protocol::McmRep => generate_mcm_rep(length, config.timing),
        rb => {
            let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(config.seed, length, task.seq_index));
            let seq = random_sequence(length, &mut rng);
            if rb == Protocol::McmRb {
                mcm_rb_circuit(&seq, config.timing)
            } else {
                delay_rb_circuit(&seq, config.timing)
            }
        }
    }
    .with_init(config.control_init, config.ancilla_init);
    let state = run_circuit(&circuit, noise)?;
    let mut out = [0.0; 2];
    for (slot, qubit) in out.iter_mut().zip([Qubit::Control, Qubit::Ancilla]) {
        let p = ground_state_probability(&state, qubit);
        *slot = if config.shots == 0 {
            p
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(
                config.seed,
                task.protocol,
                length,
                task.seq_index,
                qubit,
            ));
            sample_shots(p, config.shots, &mut rng)
        };
    }
    Ok(out)
}

/// Simulates every protocol, length and sequence. Tasks run on the current
/// rayon pool; results do not depend on the number of threads.
pub fn run_suite(config: &SuiteConfig, noise: &NoiseModel) -> Result<SuiteData> {
    config.validate()?;
    noise.validate()?;
    let mut tasks = Vec::new();
    for protocol in Protocol::ALL {
        let repeats = if protocol == Protocol::McmRep { 1 } else { config.num_sequences };
        for length_index in 0..config.lengths.len() {
            for seq_index in 0..repeats {
                tasks.push(Task { protocol, length_index, seq_index });
            }
        }
    }
    let results: Vec<[f64; 2]> = tasks
        .par_iter()
        .map(|t| run_task(t, config, noise))
        .collect::<Result<_>>()?;

    let mut curves = Vec::with_capacity(6);
    let mut offset = 0;
    for protocol in Protocol::ALL {
        let repeats = if protocol == Protocol::McmRep { 1 } else { config.num_sequences };
        let block = &results[offset..offset + repeats * config.lengths.len()];
        offset += block.len();
        for (q, qubit) in [Qubit::Control, Qubit::Ancilla].into_iter().enumerate() {
            let samples: Vec<Vec<f64>> = block.chunks(repeats).map(|c| c.iter().map(|r| r[q]).collect()).collect();
            let curve = if protocol == Protocol::McmRep {
                DecayCurve::with_shot_noise(config.lengths.clone(), samples, config.shots)?
            } else {
                DecayCurve::from_samples(config.lengths.clone(), samples)?
            };
            curves.push(LabeledCurve { protocol, qubit, curve });
        }
    }
    Ok(SuiteData { curves })
}

/// Independent control/ancilla pairs benchmarked side by side; pairs do not
/// interact.
pub fn run_groups(groups: &[(SuiteConfig, NoiseModel)]) -> Result<Vec<SuiteData>> {
    groups.iter().map(|(config, noise)| run_suite(config, noise)).collect()
}
