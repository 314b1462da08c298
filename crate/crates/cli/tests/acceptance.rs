//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mcmrb::analysis::{
    analyze_suite, classify_signature, pgs_brute_force, pgs_closed_form, ErrorSignature, SuiteResult,
};
use mcmrb::channel_metrics::{
    avg_gate_fidelity, choi_of_channel, choi_of_unitary, effective_control_infidelity, infidelity_cross_measurement,
    infidelity_stark, ptm_of_channel, AncillaInput,
};
use mcmrb::clifford::{compose, inverse, inverse_of_sequence, random_clifford, Clifford, GROUP_ORDER};
use mcmrb::linalg::{frobenius_distance, on_control, CMatrix};
use mcmrb::noise::{
    angular_from_khz, build_noise_model, collision_unitary, cross_measurement, depolarizing, stark_unitary,
    DeviceParams, Scenario,
};
use mcmrb::protocols::{run_suite, Protocol, SuiteConfig, SuiteData};
use mcmrb::simulator::{
    apply_kraus, apply_operation, apply_unitary, mid_measure_ancilla, DensityMatrix, InitState, KrausChannel,
    Qubit, Target,
};
use mcmrb_cli::commands::{self, Overrides};
use mcmrb_cli::config::RunConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

fn exact_suite(scenario: Scenario, config: &SuiteConfig) -> SuiteResult {
    let noise = build_noise_model(scenario, &DeviceParams::default()).unwrap();
    let data = run_suite(config, &noise).unwrap();
    analyze_suite(&data, config.shots == 0).unwrap()
}

fn eps(r: &SuiteResult, p: Protocol, q: Qubit) -> f64 {
    r.eps(p, q).unwrap().value
}

fn relative(value: f64, target: f64) -> f64 {
    (value - target).abs() / target
}

fn collect(failures: Vec<String>, detail: String) -> Outcome {
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

/// Ancilla EPM of `mcm-rb` and `mcm-rep` within 10% of `η/2`.
fn a1() -> Outcome {
    let config = SuiteConfig::default();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for eta in [0.02, 0.05, 0.10, 0.20] {
        let r = exact_suite(Scenario::NonQnd { eta }, &config);
        for p in [Protocol::McmRb, Protocol::McmRep] {
            let dev = relative(eps(&r, p, Qubit::Ancilla), eta / 2.0);
            worst = worst.max(dev);
            if !(dev <= 0.10) {
                failures.push(format!("eta {eta} {}: {:.1}%", p.as_str(), 100.0 * dev));
            }
        }
    }
    collect(failures, format!("worst deviation {:.2e}", worst))
}

/// Stark `ε_IRB` within 30% of `(1 - cos 2φ)/3`.
fn a2() -> Outcome {
    let config = SuiteConfig::default();
    let mut failures = Vec::new();
    let mut detail = Vec::new();
    for f in [0.01, 0.02, 0.03, 0.05] {
        let phi = f * PI;
        let irb = exact_suite(Scenario::Stark { phi }, &config).eps_irb.unwrap();
        let target = infidelity_stark(phi);
        let dev = relative(irb.value, target);
        detail.push(format!("{f}pi {:+.0}% (scatter {:.1e})", 100.0 * (irb.value / target - 1.0), irb.sigma));
        if !(dev <= 0.30) {
            failures.push(format!("phi {f}pi: {:.1}%", 100.0 * dev));
        }
    }
    collect(failures, detail.join(", "))
}

/// Cross-measurement `ε_IRB` within 15% of `p_m/3`.
fn a3() -> Outcome {
    let config = SuiteConfig::default();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for p_m in [0.002, 0.005, 0.01, 0.02, 0.05] {
        let irb = exact_suite(Scenario::CrossMeasurement { p_m }, &config).eps_irb.unwrap();
        let dev = relative(irb.value, p_m / 3.0);
        worst = worst.max(dev);
        if !(dev <= 0.15) {
            failures.push(format!("p_m {p_m}: {:.1}%", 100.0 * dev));
        }
    }
    collect(failures, format!("worst deviation {:.1}%", 100.0 * worst))
}

fn run_bundled(name: &str) -> (RunConfig, SuiteResult) {
    let cfg = RunConfig::load(&bundled(name)).unwrap();
    let data = run_suite(&cfg.suite, &cfg.noise_model().unwrap()).unwrap();
    let result = analyze_suite(&data, cfg.suite.shots == 0).unwrap();
    (cfg, result)
}

/// Collision at `Δ/J = 20` against `Δ/J = 2`, from the bundled configs.
fn a4() -> Outcome {
    let (cfg, near) = run_bundled("collision_d20.ini");
    let (_, far) = run_bundled("collision_d2.ini");
    let (c_rb, c_del) = (eps(&near, Protocol::McmRb, Qubit::Control), eps(&near, Protocol::DelayRb, Qubit::Control));
    let (a_rb, a_rep) = (eps(&near, Protocol::McmRb, Qubit::Ancilla), eps(&near, Protocol::McmRep, Qubit::Ancilla));
    let class = classify_signature(&near, &cfg.thresholds).unwrap();
    let rms_ratio = far.fit_quality(Protocol::McmRb, Qubit::Control).unwrap()
        / near.fit_quality(Protocol::McmRb, Qubit::Control).unwrap();
    let mut failures = Vec::new();
    if !(c_rb > 3.0 * c_del) {
        failures.push(format!("eps_rb^c/eps_del^c = {:.2}", c_rb / c_del));
    }
    if !(a_rb > 10.0 * a_rep.max(1e-5)) {
        failures.push(format!("eps_rb^a = {a_rb:.2e}, eps_rep^a = {a_rep:.2e}"));
    }
    if !class.contains(ErrorSignature::MeasurementInducedTwoQubitError) || class.collision_hint.is_none() {
        failures.push(format!(
            "classified {:?}, hint {}",
            class.signatures.iter().map(|v| v.signature).collect::<Vec<_>>(),
            class.collision_hint.is_some()
        ));
    }
    if !(rms_ratio >= 5.0) {
        failures.push(format!("rms ratio {rms_ratio:.2}"));
    }
    collect(
        failures,
        format!(
            "eps_rb^c/eps_del^c {:.2}, eps_rb^a {:.2e}, eps_rep^a {:.1e}, two-qubit + hint, rms ratio {:.1}",
            c_rb / c_del,
            a_rb,
            a_rep,
            rms_ratio
        ),
    )
}

/// Closed-form survival against the term-by-term sum.
fn a5() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.001, 0.01, 0.05, 0.1, 0.25, 0.49, 0.5] {
        for n in 0..=150 {
            worst = worst.max((pgs_closed_form(p, n) - pgs_brute_force(p, n)).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max difference {worst:.1e}"))
    } else {
        Err(format!("max difference {worst:.1e}"))
    }
}

/// Choi-state fidelities against the closed forms.
fn a6() -> Outcome {
    let mut failures = Vec::new();
    let mut stark_worst: f64 = 0.0;
    for k in 0..=200 {
        let phi = -PI + 2.0 * PI * k as f64 / 200.0;
        let f = avg_gate_fidelity(&choi_of_unitary(&stark_unitary(phi)).unwrap());
        stark_worst = stark_worst.max((1.0 - f - infidelity_stark(phi)).abs());
    }
    let mut cross_worst: f64 = 0.0;
    for k in 0..=200 {
        let p_m = k as f64 / 200.0;
        let f = avg_gate_fidelity(&choi_of_channel(&cross_measurement(p_m).unwrap()));
        cross_worst = cross_worst.max((1.0 - f - infidelity_cross_measurement(p_m)).abs());
    }
    let mut depol_worst: f64 = 0.0;
    for k in 0..=200 {
        let eta = k as f64 / 200.0;
        let f = avg_gate_fidelity(&choi_of_channel(&depolarizing(eta).unwrap()));
        depol_worst = depol_worst.max((1.0 - f - eta / 2.0).abs());
    }
    let mut collision_worst: f64 = 0.0;
    for delta in [0.0, 0.5, 3.0, 40.0] {
        let channel = KrausChannel::new(vec![collision_unitary(delta, 0.0, 0.71)]).unwrap();
        for input in [AncillaInput::Ground, AncillaInput::MaximallyMixed] {
            collision_worst = collision_worst.max(effective_control_infidelity(&channel, input).unwrap().abs());
        }
    }
    for (name, worst, tol) in [
        ("stark", stark_worst, 1e-10),
        ("cross-measurement", cross_worst, 1e-10),
        ("depolarizing", depol_worst, 1e-12),
        ("collision J=0", collision_worst, 1e-12),
    ] {
        if !(worst <= tol) {
            failures.push(format!("{name} off by {worst:.1e}"));
        }
    }
    collect(
        failures,
        format!(
            "max errors: stark {stark_worst:.1e}, cross {cross_worst:.1e}, depol {depol_worst:.1e}, J=0 {collision_worst:.1e}"
        ),
    )
}

/// ZZ coupling with a relaxing ancilla: the `T1 = 10 μs` fit is the worst.
fn a7() -> Outcome {
    let config = SuiteConfig {
        ancilla_init: InitState::Excited,
        ..SuiteConfig::default()
    };
    let t1s = [0.1, 1.0, 10.0, 100.0];
    let rms: Vec<f64> = t1s
        .iter()
        .map(|&ancilla_t1| {
            let r = exact_suite(
                Scenario::ZzRelaxation {
                    nu: angular_from_khz(50.0),
                    ancilla_t1,
                },
                &config,
            );
            r.fit_quality(Protocol::McmRb, Qubit::Control).unwrap()
        })
        .collect();
    let detail = t1s
        .iter()
        .zip(&rms)
        .map(|(t, r)| format!("T1 {t}us rms {r:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let peak = rms[2];
    if rms.iter().enumerate().all(|(i, &r)| i == 2 || r < peak) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Ingestion of the bundled export. The export is synthetic, so this checks
/// equivalence with its generator rather than with measured data.
fn a8() -> Outcome {
    let data = repo_root().join("data/golden_decay_curves.csv");
    let generator = bundled("golden_export.ini");
    let tmp = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();

    let analyzed = commands::analyze(
        &data,
        Some(&generator),
        &Overrides {
            out: Some(tmp.path().join("analyze")),
            ..Overrides::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let result: SuiteResult = serde_json::from_str(
        &std::fs::read_to_string(analyzed.out_dir.unwrap().join("suite_result.json")).unwrap(),
    )
    .unwrap();
    let irb = result.eps_irb.ok_or("no interleaved estimate")?;
    if !((irb.value - 1.7e-3).abs() <= 1.0e-3) {
        failures.push(format!("eps_irb {:.3e} outside 1.7e-3 +/- 1.0e-3", irb.value));
    }

    let regenerated = tmp.path().join("regenerated");
    commands::simulate(
        &generator,
        &Overrides {
            out: Some(regenerated.clone()),
            ..Overrides::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let fresh = std::fs::read(regenerated.join("decay_curves.csv")).unwrap();
    if fresh != std::fs::read(&data).unwrap() {
        failures.push("regenerated export differs from the bundled file".into());
    }
    collect(
        failures,
        format!(
            "eps_irb {:.3e} +/- {:.1e}, export regenerates bit-exactly (oracle-equivalence only: synthetic export)",
            irb.value, irb.sigma
        ),
    )
}

fn phase_distance_to_identity(u: &CMatrix) -> f64 {
    let phase = u[(0, 0)] / u[(0, 0)].norm();
    frobenius_distance(&(u * phase.conj()), &CMatrix::identity(2, 2))
}

fn suite_bits(data: &SuiteData) -> Vec<u64> {
    data.curves
        .iter()
        .flat_map(|c| c.curve.samples.iter().flatten().map(|p| p.to_bits()))
        .collect()
}

/// Group structure, round trips, state invariants, the Stark transfer
/// matrix and thread-count independence.
fn a9() -> Outcome {
    let mut failures = Vec::new();

    let all: Vec<Clifford> = Clifford::all().collect();
    let closed = all.len() == GROUP_ORDER
        && all.iter().all(|&a| {
            compose(a, inverse(a)) == Clifford::identity()
                && all
                    .iter()
                    .all(|&b| Clifford::from_unitary(&(b.unitary() * a.unitary())) == Some(compose(a, b)))
        });
    if !closed {
        failures.push("Clifford table is not a closed group".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let seq: Vec<Clifford> = (0..1 + trial % 150).map(|_| random_clifford(&mut rng)).collect();
        let mut u = CMatrix::identity(2, 2);
        for c in seq.iter().chain([&inverse_of_sequence(&seq)]) {
            u = c.unitary() * u;
        }
        worst = worst.max(phase_distance_to_identity(&u));
    }
    if !(worst < 1e-10) {
        failures.push(format!("round trip off by {worst:.1e}"));
    }

    let model = build_noise_model(Scenario::Collision { delta: 3.0, coupling: 1.5 }, &DeviceParams::default()).unwrap();
    let gate = model.gate_channel().unwrap().unwrap();
    let mut dm = DensityMatrix::pair(InitState::Excited, InitState::Ground);
    let mut invariant_errors = 0;
    for _ in 0..100 {
        let clifford = random_clifford(&mut rng);
        dm = apply_unitary(&dm, clifford.unitary(), Target::Control).unwrap();
        invariant_errors += dm.check_invariants().is_err() as usize;
        dm = apply_kraus(&dm, &gate, Target::Control).unwrap();
        invariant_errors += dm.check_invariants().is_err() as usize;
        dm = apply_operation(&dm, &model.pre_measure, Target::All).unwrap();
        invariant_errors += dm.check_invariants().is_err() as usize;
        dm = mid_measure_ancilla(&dm).unwrap();
        invariant_errors += dm.check_invariants().is_err() as usize;
        dm = apply_operation(&dm, &model.post_measure, Target::All).unwrap();
        invariant_errors += dm.check_invariants().is_err() as usize;
    }
    if invariant_errors > 0 || !cfg!(debug_assertions) {
        failures.push(format!(
            "{invariant_errors} invariant violations, debug checks {}",
            if cfg!(debug_assertions) { "on" } else { "off" }
        ));
    }

    let mut ptm_worst: f64 = 0.0;
    for k in 0..=40 {
        let theta = -PI / 2.0 + PI * k as f64 / 40.0;
        let ptm = ptm_of_channel(&KrausChannel::new(vec![on_control(&stark_unitary(theta))]).unwrap()).unwrap();
        ptm_worst = ptm_worst.max((ptm.element("IY", "IX").unwrap() - (2.0 * theta).sin()).abs());
    }
    if !(ptm_worst < 1e-10) {
        failures.push(format!("R_YX off by {ptm_worst:.1e}"));
    }

    let config = SuiteConfig {
        lengths: vec![1, 4, 16, 48],
        num_sequences: 12,
        shots: 256,
        ..SuiteConfig::default()
    };
    let noise = build_noise_model(Scenario::Stark { phi: 0.1 }, &DeviceParams::default()).unwrap();
    let on = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_suite(&config, &noise).unwrap())
    };
    let reference = suite_bits(&on(1));
    if [2, 4, 8].iter().any(|&t| suite_bits(&on(t)) != reference) {
        failures.push("results depend on the thread count".into());
    }

    collect(
        failures,
        format!("round trip {worst:.1e}, R_YX {ptm_worst:.1e}, identical for 1/2/4/8 threads"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{name} PASS ({secs:.1}s) {detail}"),
            Err(reason) => {
                failed += 1;
                println!("{name} FAIL ({secs:.1}s) {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
