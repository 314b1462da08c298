//! Exact density-matrix evolution of a control/ancilla qubit pair.
//!
//! Mid-circuit measurements are modelled as a completely dephasing channel on
//! the ancilla (outcomes are discarded, so this is exact in the ensemble
//! average). Shot noise only enters at the terminal readout, through
//! [`sample_shots`].

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::clifford::Clifford;
use crate::linalg::{self, hermiticity_error, kron, on_ancilla, on_control, projector, CMatrix};
use crate::noise::NoiseModel;
use crate::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed negative eigenvalue drift over long circuits.
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qubit {
    Control,
    Ancilla,
}

impl Qubit {
    pub fn as_str(self) -> &'static str {
        match self {
            Qubit::Control => "control",
            Qubit::Ancilla => "ancilla",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitState {
    #[default]
    Ground,
    Excited,
}

impl InitState {
    fn index(self) -> usize {
        match self {
            InitState::Ground => 0,
            InitState::Excited => 1,
        }
    }
}

/// Which part of the state an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Control,
    Ancilla,
    /// The whole register; the operator dimension must equal the state's.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let dm = DensityMatrix { data };
        if dm.dim() != 2 && dm.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: dm.dim(),
            });
        }
        dm.check_invariants()?;
        Ok(dm)
    }

    pub fn single_qubit(state: InitState) -> Self {
        DensityMatrix {
            data: projector(state.index()),
        }
    }

    /// Product state `|a⟩⟨a| ⊗ |c⟩⟨c|`.
    pub fn pair(control: InitState, ancilla: InitState) -> Self {
        DensityMatrix {
            data: kron(&projector(ancilla.index()), &projector(control.index())),
        }
    }

    pub fn ground_pair() -> Self {
        Self::pair(InitState::Ground, InitState::Ground)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            data: linalg::identity(dim) / linalg::c(dim as f64, 0.0),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalised state vector of length 2 or 4.
    pub fn pure(psi: &[num_complex::Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm = hermiticity_error(&self.data);
        if herm > HERMITIAN_TOL {
            return Err(Error::Structure(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.data.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Structure(format!("density matrix trace {tr}")));
        }
        // Cholesky of ρ + tol·I succeeds iff the smallest eigenvalue exceeds
        // -tol. The real embedding [[Re, -Im], [Im, Re]] has the same spectrum
        // (doubled) and a real factorisation rejects negative pivots.
        let n = self.dim();
        let shifted = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = self.data[(i % n, j % n)];
            let v = match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            };
            v + if i == j { POSITIVITY_TOL } else { 0.0 }
        });
        if Cholesky::new(shifted).is_none() {
            let min = linalg::hermitian_eigenvalues(&self.data)[0];
            return Err(Error::Structure(format!("density matrix not positive (min eigenvalue {min:e})")));
        }
        Ok(())
    }

    /// Reduced state of one qubit of a two-qubit register.
    pub fn marginal(&self, qubit: Qubit) -> Result<DensityMatrix> {
        if self.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: self.dim(),
            });
        }
        let mut out = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[(i, j)] += match qubit {
                        Qubit::Control => self.data[(2 * k + i, 2 * k + j)],
                        Qubit::Ancilla => self.data[(2 * i + k, 2 * j + k)],
                    };
                }
            }
        }
        Ok(DensityMatrix { data: out })
    }

    fn symmetrize(&mut self) {
        let adj = self.data.adjoint();
        self.data = (&self.data + adj) * linalg::c(0.5, 0.0);
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants() {
            panic!("density matrix invariant violated: {e}");
        }
    }
}

/// A completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    /// Rejects operator sets that are empty, non-square, mixed-dimension or
    /// not trace preserving.
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::Structure("Kraus channel needs at least one operator".into()))?;
        let dim = first.nrows();
        for k in &operators {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: k.nrows().max(k.ncols()),
                });
            }
        }
        let sum = operators
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let err = (sum - linalg::identity(dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > COMPLETENESS_TOL {
            return Err(Error::Structure(format!(
                "Kraus operators are not trace preserving (deviation {err:e})"
            )));
        }
        Ok(KrausChannel { operators })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            operators: vec![linalg::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// `Σ K ρ K†` on a raw matrix of matching dimension.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        self.operators
            .iter()
            .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }

    /// Lifts a single-qubit channel onto one qubit of the pair.
    pub fn embed(&self, qubit: Qubit) -> KrausChannel {
        let operators = self
            .operators
            .iter()
            .map(|k| match qubit {
                Qubit::Control => on_control(k),
                Qubit::Ancilla => on_ancilla(k),
            })
            .collect();
        KrausChannel { operators }
    }

    /// `ancilla ⊗ control` product channel.
    pub fn tensor(ancilla: &KrausChannel, control: &KrausChannel) -> KrausChannel {
        let mut operators = Vec::with_capacity(ancilla.operators.len() * control.operators.len());
        for a in &ancilla.operators {
            for c in &control.operators {
                operators.push(kron(a, c));
            }
        }
        KrausChannel { operators }
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn then(&self, next: &KrausChannel) -> Result<KrausChannel> {
        if self.dim() != next.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: next.dim(),
            });
        }
        let mut operators = Vec::with_capacity(self.operators.len() * next.operators.len());
        for b in &next.operators {
            for a in &self.operators {
                operators.push(b * a);
            }
        }
        Ok(KrausChannel { operators })
    }
}

/// A noise operation: a unitary, a Kraus channel, or nothing.
#[derive(Clone, Debug, PartialEq)]
pub enum Operation {
    Identity,
    Unitary(CMatrix),
    Kraus(KrausChannel),
}

impl Operation {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let err = linalg::unitarity_error(&u);
        if err > UNITARITY_TOL {
            return Err(Error::Structure(format!("operator is not unitary (deviation {err:e})")));
        }
        Ok(Operation::Unitary(u))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Operation::Identity => None,
            Operation::Unitary(u) => Some(u.nrows()),
            Operation::Kraus(k) => Some(k.dim()),
        }
    }

    /// Action on a raw matrix of matching dimension.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        match self {
            Operation::Identity => rho.clone(),
            Operation::Unitary(u) => u * rho * u.adjoint(),
            Operation::Kraus(k) => k.apply_matrix(rho),
        }
    }

    /// Lifts a single-qubit operation onto one qubit of the pair.
    pub fn embed(&self, qubit: Qubit) -> Operation {
        match self {
            Operation::Identity => Operation::Identity,
            Operation::Unitary(u) => Operation::Unitary(match qubit {
                Qubit::Control => on_control(u),
                Qubit::Ancilla => on_ancilla(u),
            }),
            Operation::Kraus(k) => Operation::Kraus(k.embed(qubit)),
        }
    }

    /// The operation as a Kraus channel of the given dimension.
    pub fn to_kraus(&self, dim: usize) -> KrausChannel {
        match self {
            Operation::Identity => KrausChannel::identity(dim),
            Operation::Unitary(u) => KrausChannel {
                operators: vec![u.clone()],
            },
            Operation::Kraus(k) => k.clone(),
        }
    }
}

impl From<KrausChannel> for Operation {
    fn from(k: KrausChannel) -> Self {
        Operation::Kraus(k)
    }
}

fn lift(op: &CMatrix, dm_dim: usize, target: Target) -> Result<CMatrix> {
    match (target, dm_dim, op.nrows()) {
        (Target::All, d, n) if d == n => Ok(op.clone()),
        (Target::Control, 4, 2) => Ok(on_control(op)),
        (Target::Ancilla, 4, 2) => Ok(on_ancilla(op)),
        (Target::All, d, n) => Err(Error::Dimension { expected: d, got: n }),
        (_, d, n) => Err(Error::Dimension {
            expected: if d == 4 { 2 } else { 4 },
            got: if d == 4 { n } else { d },
        }),
    }
}

/// `ρ → U ρ U†` with `U` embedded on `target`.
pub fn apply_unitary(dm: &DensityMatrix, u: &CMatrix, target: Target) -> Result<DensityMatrix> {
    if u.nrows() != u.ncols() {
        return Err(Error::Dimension {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    let full = lift(u, dm.dim(), target)?;
    let mut out = DensityMatrix {
        data: &full * &dm.data * full.adjoint(),
    };
    out.symmetrize();
    out.debug_check();
    Ok(out)
}

/// `ρ → Σ K ρ K†` with each `K` embedded on `target`.
pub fn apply_kraus(dm: &DensityMatrix, ch: &KrausChannel, target: Target) -> Result<DensityMatrix> {
    let mut data = CMatrix::zeros(dm.dim(), dm.dim());
    for k in &ch.operators {
        let full = lift(k, dm.dim(), target)?;
        data += &full * &dm.data * full.adjoint();
    }
    let mut out = DensityMatrix { data };
    out.symmetrize();
    out.debug_check();
    Ok(out)
}

pub fn apply_operation(dm: &DensityMatrix, op: &Operation, target: Target) -> Result<DensityMatrix> {
    match op {
        Operation::Identity => Ok(dm.clone()),
        Operation::Unitary(u) => apply_unitary(dm, u, target),
        Operation::Kraus(k) => apply_kraus(dm, k, target),
    }
}

/// Outcome-discarded ancilla measurement: zeroes every ancilla coherence.
pub fn mid_measure_ancilla(dm: &DensityMatrix) -> Result<DensityMatrix> {
    if dm.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: dm.dim(),
        });
    }
    let mut data = dm.data.clone();
    for i in 0..4 {
        for j in 0..4 {
            if (i >> 1) != (j >> 1) {
                data[(i, j)] = linalg::ZERO;
            }
        }
    }
    let out = DensityMatrix { data };
    out.debug_check();
    Ok(out)
}

/// `Tr[(|0⟩⟨0|_q ⊗ I) ρ]`, clamped to `[0, 1]`.
pub fn ground_state_probability(dm: &DensityMatrix, qubit: Qubit) -> f64 {
    let p = match dm.dim() {
        2 => dm.data[(0, 0)].re,
        _ => {
            let m = dm.marginal(qubit).expect("two-qubit state");
            m.data[(0, 0)].re
        }
    };
    p.clamp(0.0, 1.0)
}

/// Binomial estimate of `p` from `shots` samples; `shots == 0` returns `p` exactly.
pub fn sample_shots<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> f64 {
    if shots == 0 {
        return p;
    }
    let p = p.clamp(0.0, 1.0);
    let k = Binomial::new(shots, p).expect("p in [0, 1]").sample(rng);
    k as f64 / shots as f64
}

/// Durations are in microseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CircuitOp {
    ControlGate { clifford: Clifford, duration: f64 },
    AncillaMidMeasure { duration: f64 },
    ControlDelay { duration: f64 },
    AncillaDelay { duration: f64 },
    TerminalMeasureAll,
}

impl CircuitOp {
    fn duration(&self) -> Option<f64> {
        match *self {
            CircuitOp::ControlGate { duration, .. }
            | CircuitOp::AncillaMidMeasure { duration }
            | CircuitOp::ControlDelay { duration }
            | CircuitOp::AncillaDelay { duration } => Some(duration),
            CircuitOp::TerminalMeasureAll => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub ops: Vec<CircuitOp>,
    pub control_init: InitState,
    pub ancilla_init: InitState,
}

impl Circuit {
    pub fn new(ops: Vec<CircuitOp>) -> Self {
        Circuit {
            ops,
            ..Default::default()
        }
    }

    pub fn with_init(mut self, control: InitState, ancilla: InitState) -> Self {
        self.control_init = control;
        self.ancilla_init = ancilla;
        self
    }

    /// Exactly one terminal measurement, in last position; all durations positive.
    pub fn validate(&self) -> Result<()> {
        let terminals = self
            .ops
            .iter()
            .filter(|op| matches!(op, CircuitOp::TerminalMeasureAll))
            .count();
        if terminals != 1 || !matches!(self.ops.last(), Some(CircuitOp::TerminalMeasureAll)) {
            return Err(Error::Structure(
                "circuit must end with exactly one terminal measurement".into(),
            ));
        }
        for op in &self.ops {
            if let Some(d) = op.duration() {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::Structure(format!("non-positive duration in {op:?}")));
                }
            }
        }
        Ok(())
    }

    /// Scheduled wall-clock duration. Gates and measurements occupy the whole
    /// pair; delays only advance the clock of their own qubit.
    pub fn duration(&self) -> f64 {
        let (mut control, mut ancilla) = (0.0_f64, 0.0_f64);
        for op in &self.ops {
            match *op {
                CircuitOp::ControlGate { duration, .. } | CircuitOp::AncillaMidMeasure { duration } => {
                    let t = control.max(ancilla) + duration;
                    control = t;
                    ancilla = t;
                }
                CircuitOp::ControlDelay { duration } => control += duration,
                CircuitOp::AncillaDelay { duration } => ancilla += duration,
                CircuitOp::TerminalMeasureAll => {}
            }
        }
        control.max(ancilla)
    }

    pub fn count(&self, pred: impl Fn(&CircuitOp) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(op)).count()
    }

    pub fn gates(&self) -> Vec<Clifford> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                CircuitOp::ControlGate { clifford, .. } => Some(*clifford),
                _ => None,
            })
            .collect()
    }
}

/// Evolves the circuit's initial state under `noise` and returns the state
/// just before the terminal measurement.
pub fn run_circuit(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    circuit.validate()?;
    let gate_noise = noise.gate_channel()?;
    let mut dm = DensityMatrix::pair(circuit.control_init, circuit.ancilla_init);
    if noise.prep_flip > 0.0 {
        let flip = KrausChannel::new(vec![
            linalg::identity(2) * linalg::c((1.0 - noise.prep_flip).sqrt(), 0.0),
            linalg::pauli_x() * linalg::c(noise.prep_flip.sqrt(), 0.0),
        ])?;
        dm = apply_kraus(&apply_kraus(&dm, &flip, Target::Control)?, &flip, Target::Ancilla)?;
    }
    for op in &circuit.ops {
        dm = match op {
            CircuitOp::ControlGate { clifford, .. } => {
                let dm = apply_unitary(&dm, clifford.unitary(), Target::Control)?;
                match &gate_noise {
                    Some(ch) => apply_kraus(&dm, ch, Target::Control)?,
                    None => dm,
                }
            }
            CircuitOp::AncillaMidMeasure { .. } => {
                let dm = apply_operation(&dm, &noise.pre_measure, Target::All)?;
                let dm = if noise.measurement_dephasing {
                    mid_measure_ancilla(&dm)?
                } else {
                    dm
                };
                apply_operation(&dm, &noise.post_measure, Target::All)?
            }
            CircuitOp::ControlDelay { duration } => match noise.idle_channel(Qubit::Control, *duration)? {
                Some(ch) => apply_kraus(&dm, &ch, Target::Control)?,
                None => dm,
            },
            CircuitOp::AncillaDelay { duration } => match noise.idle_channel(Qubit::Ancilla, *duration)? {
                Some(ch) => apply_kraus(&dm, &ch, Target::Ancilla)?,
                None => dm,
            },
            CircuitOp::TerminalMeasureAll => break,
        };
    }
    Ok(dm)
}
