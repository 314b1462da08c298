//! The five subcommands. Each collects all results in memory and writes its
//! files at the end, followed by `status.json`, which records whether the
//! run completed.

use std::path::{Path, PathBuf};

use mcmrb::analysis::{
    analyze_suite, classify_signature, Classification, FitResult, SuiteResult, Thresholds, EPS_RANGE,
};
use mcmrb::channel_metrics::{
    choi_of_channel, effective_control_channel, effective_control_infidelity, ptm_from_choi, ptm_of_channel,
    threshold_ptm, AncillaInput,
};
use mcmrb::noise::{NoiseModel, Scenario};
use mcmrb::protocols::{run_suite, Protocol, SuiteConfig, SuiteData};
use mcmrb::simulator::{KrausChannel, Qubit};
use serde::{Deserialize, Serialize};

use crate::config::{NoiseSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{load_curves, OutputDir};
use crate::{report, Format};

pub const DEFAULT_OUT_DIR: &str = "out";

/// Command-line values that take precedence over the configuration file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub format: Option<Format>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> PathBuf {
        if let Some(seed) = self.seed {
            cfg.suite.seed = seed;
        }
        if let Some(shots) = self.shots {
            cfg.suite.shots = shots;
        }
        if let Some(format) = self.format {
            cfg.format = format;
        }
        self.out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

/// What a command prints and where it wrote.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: String,
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Status<'a> {
    command: &'a str,
    complete: bool,
    error: Option<String>,
}

/// Runs `body` and records its success in `status.json`. A failing run keeps
/// whatever files it wrote before the failure.
fn with_status<T>(out: &OutputDir, command: &str, body: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
    let result = body();
    let status = Status {
        command,
        complete: result.is_ok(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    out.write_json("status.json", &status)?;
    result
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub protocol: Protocol,
    pub qubit: Qubit,
    pub fit: FitResult,
}

pub fn fit_records(result: &SuiteResult) -> Vec<FitRecord> {
    result
        .entries
        .iter()
        .map(|e| FitRecord {
            protocol: e.protocol,
            qubit: e.qubit,
            fit: e.fit.clone(),
        })
        .collect()
}

fn numeric(e: mcmrb::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Estimates outside [`EPS_RANGE`] mean a fit failed.
fn check_estimates(result: &SuiteResult) -> CliResult<()> {
    let mut bad: Vec<String> = result
        .entries
        .iter()
        .filter(|e| e.suspect)
        .map(|e| format!("{} {} eps = {:.3e}", e.protocol.as_str(), e.qubit.as_str(), e.eps.value))
        .collect();
    if let Some(irb) = result.eps_irb {
        if !(EPS_RANGE.0..=EPS_RANGE.1).contains(&irb.value) {
            bad.push(format!("eps_irb = {:.3e}", irb.value));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("fit failure, estimates out of range: {}", bad.join(", "))))
    }
}

/// Fits, classifies and writes `fits.json`, `suite_result.json`,
/// `classification.json` and `report.txt`. Out-of-range estimates are
/// reported as a numerical failure after everything is written.
fn analyze_into(
    out: &OutputDir,
    data: &SuiteData,
    exact: bool,
    thresholds: &Thresholds,
    header: &str,
    data_path: &Path,
) -> CliResult<(SuiteResult, Classification, String)> {
    let result = analyze_suite(data, exact).map_err(|e| match e {
        mcmrb::Error::Input(m) => CliError::data(data_path, None, m),
        other => numeric(other),
    })?;
    out.write_json("fits.json", &fit_records(&result))?;
    out.write_json("suite_result.json", &result)?;
    let classification = classify_signature(&result, thresholds).map_err(|e| match e {
        mcmrb::Error::Input(m) => CliError::data(data_path, None, m),
        other => numeric(other),
    })?;
    out.write_json("classification.json", &classification)?;
    let text = report::full(header, &result, Some(&classification));
    out.write("report.txt", &text)?;
    check_estimates(&result)?;
    Ok((result, classification, text))
}

fn suite_header(cfg: &SuiteConfig, scenario: Option<&Scenario>) -> String {
    let mut s = String::new();
    if let Some(scenario) = scenario {
        s.push_str(&format!("scenario {}\n", serde_json::to_string(scenario).expect("plain data")));
    }
    s.push_str(&format!(
        "seed {:#x}, shots {}, {} sequences, lengths {:?}",
        cfg.seed, cfg.shots, cfg.num_sequences, cfg.lengths
    ));
    s
}

fn simulate_suite(cfg: &RunConfig, model: &NoiseModel) -> CliResult<SuiteData> {
    run_suite(&cfg.suite, model).map_err(|e| CliError::from_core(e, &cfg.path, &cfg.path))
}

/// Simulates one scenario and analyses it.
pub fn simulate(config: &Path, overrides: &Overrides) -> CliResult<Outcome> {
    let mut cfg = RunConfig::load(config)?;
    let out_dir = overrides.apply(&mut cfg);
    let model = cfg.noise_model()?;
    let scenario = cfg.noise()?.scenario(&cfg.path)?;
    let out = OutputDir::create(&out_dir)?;
    let report = with_status(&out, "simulate", || {
        let data = simulate_suite(&cfg, &model)?;
        out.write_curves("decay_curves", &data, cfg.format)?;
        let header = suite_header(&cfg.suite, Some(&scenario));
        let (_, _, text) = analyze_into(&out, &data, cfg.suite.shots == 0, &cfg.thresholds, &header, &cfg.path)?;
        Ok(text)
    })?;
    Ok(Outcome {
        report,
        out_dir: Some(out_dir),
    })
}

/// Fits and classifies decay curves read from a file. Thresholds and the
/// shot count may come from an optional configuration file; the `--shots`
/// flag overrides the latter.
pub fn analyze(data_path: &Path, config: Option<&Path>, overrides: &Overrides) -> CliResult<Outcome> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::parse(Path::new("<defaults>"), "").expect("empty configuration is valid"),
    };
    let out_dir = overrides.apply(&mut cfg);
    let shots = cfg.suite.shots;
    let data = load_curves(data_path, shots)?;
    let out = OutputDir::create(&out_dir)?;
    let report = with_status(&out, "analyze", || {
        let header = format!("data {}, shots {shots}", data_path.display());
        let (_, _, text) = analyze_into(&out, &data, shots == 0, &cfg.thresholds, &header, data_path)?;
        Ok(text)
    })?;
    Ok(Outcome {
        report,
        out_dir: Some(out_dir),
    })
}

/// Classifies a stored `suite_result.json`.
pub fn report(result_path: &Path, config: Option<&Path>, out: Option<&Path>) -> CliResult<Outcome> {
    let thresholds = match config {
        Some(p) => RunConfig::load(p)?.thresholds,
        None => Thresholds::default(),
    };
    let text =
        std::fs::read_to_string(result_path).map_err(|e| CliError::data(result_path, None, e.to_string()))?;
    let result: SuiteResult =
        serde_json::from_str(&text).map_err(|e| CliError::data(result_path, Some(e.line()), e.to_string()))?;
    let classification = classify_signature(&result, &thresholds).map_err(|e| match e {
        mcmrb::Error::Input(m) => CliError::data(result_path, None, m),
        other => numeric(other),
    })?;
    let text = report::full(&format!("result {}", result_path.display()), &result, Some(&classification));
    if let Some(dir) = out {
        let out = OutputDir::create(dir)?;
        out.write_json("classification.json", &classification)?;
        out.write("report.txt", &text)?;
    }
    Ok(Outcome {
        report: text,
        out_dir: out.map(Path::to_path_buf),
    })
}

/// 1 - F of the control channel left by one measurement step of `spec`,
/// without control relaxation.
pub fn control_infidelity(spec: &NoiseSpec, path: &Path, t_m: f64, input: AncillaInput) -> CliResult<f64> {
    let mut spec = spec.clone();
    spec.control_relaxation = false;
    let channel = step_channel(&spec.noise_model(path, t_m)?)?;
    effective_control_infidelity(&channel, input).map_err(numeric)
}

fn step_channel(model: &NoiseModel) -> CliResult<KrausChannel> {
    model.measurement_step_channel().map_err(numeric)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
    pub scenario: Scenario,
    pub result: SuiteResult,
    pub classification: Classification,
}

/// One line of the sweep summary. `estimate` is the ancilla EPM under
/// `mcm-rb` for the non-QND scenario and `ε_IRB` otherwise; `analytic` is
/// the matching closed-form or channel value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub parameter: String,
    pub value: f64,
    pub estimate_kind: String,
    pub estimate: f64,
    pub estimate_sigma: f64,
    pub analytic: f64,
    pub eps_rb_control: f64,
    pub eps_del_control: f64,
    pub eps_rep_control: f64,
    pub eps_rb_ancilla: f64,
    pub eps_del_ancilla: f64,
    pub eps_rep_ancilla: f64,
    pub rms_rb_control: f64,
    pub signatures: String,
}

fn summary_row(point: &SweepPoint, analytic: f64) -> CliResult<SummaryRow> {
    let r = &point.result;
    let eps = |p, q| r.eps(p, q).map(|e| e.value).unwrap_or(f64::NAN);
    let (estimate_kind, estimate) = match point.scenario {
        Scenario::NonQnd { .. } => (
            "epm_rb_ancilla",
            r.eps(Protocol::McmRb, Qubit::Ancilla)
                .ok_or_else(|| CliError::Numeric("missing ancilla estimate".into()))?,
        ),
        _ => (
            "eps_irb",
            r.eps_irb
                .ok_or_else(|| CliError::Numeric("missing interleaved estimate".into()))?,
        ),
    };
    Ok(SummaryRow {
        parameter: point.parameter.clone(),
        value: point.value,
        estimate_kind: estimate_kind.into(),
        estimate: estimate.value,
        estimate_sigma: estimate.sigma,
        analytic,
        eps_rb_control: eps(Protocol::McmRb, Qubit::Control),
        eps_del_control: eps(Protocol::DelayRb, Qubit::Control),
        eps_rep_control: eps(Protocol::McmRep, Qubit::Control),
        eps_rb_ancilla: eps(Protocol::McmRb, Qubit::Ancilla),
        eps_del_ancilla: eps(Protocol::DelayRb, Qubit::Ancilla),
        eps_rep_ancilla: eps(Protocol::McmRep, Qubit::Ancilla),
        rms_rb_control: r.fit_quality(Protocol::McmRb, Qubit::Control).unwrap_or(f64::NAN),
        signatures: point
            .classification
            .signatures
            .iter()
            .map(|v| format!("{:?}", v.signature))
            .collect::<Vec<_>>()
            .join(" "),
    })
}

/// Runs the suite at every grid point of `[sweep]`, all with the same seed.
pub fn sweep(config: &Path, overrides: &Overrides) -> CliResult<Outcome> {
    let mut cfg = RunConfig::load(config)?;
    let out_dir = overrides.apply(&mut cfg);
    let grid = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::config(&cfg.path, None, "missing [sweep] section"))?;
    let base = cfg.noise()?.clone();
    let t_m = cfg.suite.timing.t_m;
    let out = OutputDir::create(&out_dir)?;
    let mut points = Vec::with_capacity(grid.values.len());
    let mut rows = Vec::with_capacity(grid.values.len());
    let outcome = with_status(&out, "sweep", || {
        for (i, &value) in grid.values.iter().enumerate() {
            let spec = base.with(&grid.parameter, value);
            let scenario = spec.scenario(&cfg.path)?;
            let model = spec.noise_model(&cfg.path, t_m)?;
            let data = simulate_suite(&cfg, &model)?;
            out.write_curves(&format!("points/{i:03}_decay_curves"), &data, cfg.format)?;
            let result = analyze_suite(&data, cfg.suite.shots == 0).map_err(numeric)?;
            check_estimates(&result)?;
            let classification = classify_signature(&result, &cfg.thresholds).map_err(numeric)?;
            let analytic = match scenario {
                Scenario::NonQnd { eta } => eta / 2.0,
                _ => control_infidelity(&spec, &cfg.path, t_m, cfg.metrics.ancilla_input)?,
            };
            let point = SweepPoint {
                parameter: grid.parameter.clone(),
                value,
                scenario,
                result,
                classification,
            };
            rows.push(summary_row(&point, analytic)?);
            points.push(point);
        }
        Ok(())
    });
    // completed points are kept even when a later one fails
    out.write_json("sweep_results.json", &points)?;
    out.write_table("summary", &rows, cfg.format)?;
    outcome?;

    let mut text = format!(
        "sweep of {} over {} points ({})\n{:>12} {:>14} {:>11} {:>11} {:>10}\n",
        grid.parameter,
        grid.values.len(),
        suite_header(&cfg.suite, None),
        "value",
        "estimate",
        "estimate",
        "analytic",
        "rms"
    );
    for row in &rows {
        text.push_str(&format!(
            "{:>12.5e} {:>14} {:>11.4e} {:>11.4e} {:>10.2e}\n",
            row.value, row.estimate_kind, row.estimate, row.analytic, row.rms_rb_control
        ));
    }
    Ok(Outcome {
        report: text,
        out_dir: Some(out_dir),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfidelityRecord {
    pub scenario: Scenario,
    pub ancilla_input: AncillaInput,
    pub control_relaxation: bool,
    /// From the partial trace of the simulated measurement step.
    pub effective_control_infidelity: f64,
    /// Closed form, where the scenario has one.
    pub analytic_control_infidelity: Option<f64>,
    /// `ε` used to truncate the transfer matrix, and the cut `√(6ε)`.
    pub threshold_eps: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionPoint {
    pub delta_over_j: f64,
    pub infidelity: f64,
}

/// Channel metrics of one measurement step: the two-qubit Choi matrix and
/// transfer matrix, the truncated transfer matrix, the effective control
/// channel and its infidelity, and optionally a collision `Δ/J` table.
/// Matrices are always CSV.
pub fn metrics(config: &Path, overrides: &Overrides) -> CliResult<Outcome> {
    let mut cfg = RunConfig::load(config)?;
    let out_dir = overrides.apply(&mut cfg);
    let mut spec = cfg.noise()?.clone();
    spec.control_relaxation &= cfg.metrics.relaxation;
    let t_m = cfg.suite.timing.t_m;
    let scenario = spec.scenario(&cfg.path)?;
    let model = spec.noise_model(&cfg.path, t_m)?;
    let input = cfg.metrics.ancilla_input;
    let out = OutputDir::create(&out_dir)?;

    let report = with_status(&out, "metrics", || {
        let step = step_channel(&model)?;
        let choi = choi_of_channel(&step);
        out.write("choi.csv", &choi.to_csv())?;
        let ptm = ptm_of_channel(&step).map_err(numeric)?;
        out.write("ptm.csv", &ptm.to_csv())?;

        let control = effective_control_channel(&choi, input).map_err(numeric)?;
        out.write("control_choi.csv", &control.to_csv())?;
        out.write("control_ptm.csv", &ptm_from_choi(&control).map_err(numeric)?.to_csv())?;
        let infidelity = effective_control_infidelity(&step, input).map_err(numeric)?;

        let ideal = ptm_of_channel(&step_channel(&NoiseModel::noiseless())?).map_err(numeric)?;
        let eps = cfg.metrics.eps_irb.unwrap_or(infidelity.max(0.0));
        let truncated = threshold_ptm(&ptm, eps, Some(&ideal)).map_err(numeric)?;
        out.write("ptm_thresholded.csv", &truncated.to_csv())?;

        let record = InfidelityRecord {
            scenario,
            ancilla_input: input,
            control_relaxation: spec.control_relaxation,
            effective_control_infidelity: infidelity,
            analytic_control_infidelity: scenario.control_infidelity(),
            threshold_eps: eps,
            threshold: (6.0 * eps).sqrt(),
        };
        out.write_json("infidelity.json", &record)?;

        let mut text = format!(
            "scenario {}\neffective control infidelity {:.6e} (ancilla input {:?})\n",
            serde_json::to_string(&scenario).expect("plain data"),
            infidelity,
            input
        );
        if let Some(a) = record.analytic_control_infidelity {
            text.push_str(&format!("analytic control infidelity {a:.6e}\n"));
        }
        text.push_str(&format!(
            "transfer matrix truncated at {:.4e}: {} of {} entries kept\n",
            record.threshold,
            truncated.entries.iter().filter(|v| **v != 0.0).count(),
            truncated.entries.len()
        ));

        if !cfg.metrics.collision_ratios.is_empty() {
            let Scenario::Collision { coupling, .. } = scenario else {
                return Err(CliError::config(
                    &cfg.path,
                    None,
                    "[metrics] collision_ratios needs scenario `collision`",
                ));
            };
            let grid = cfg
                .metrics
                .collision_ratios
                .iter()
                .map(|&ratio| {
                    let point = spec.with("delta_over_j", ratio).with("coupling", coupling);
                    Ok(CollisionPoint {
                        delta_over_j: ratio,
                        infidelity: control_infidelity(&point, &cfg.path, t_m, input)?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            out.write_table("collision_grid", &grid, cfg.format)?;
            text.push_str("delta/J      1-F\n");
            for p in &grid {
                text.push_str(&format!("{:<12} {:.6e}\n", p.delta_over_j, p.infidelity));
            }
        }
        Ok(text)
    })?;
    Ok(Outcome {
        report,
        out_dir: Some(out_dir),
    })
}
