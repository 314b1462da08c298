//! Run configuration files.
//!
//! A file is a list of `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Dimensional values must carry a unit suffix:
//!
//! | kind | suffixes | stored as |
//! |---|---|---|
//! | time | `us` (`μs`), `ns`, `ms`, `s` | μs |
//! | frequency | `Hz`, `kHz`, `MHz`, `GHz`, `rad/us` | rad/μs, `2π·f` |
//! | angle | `rad`, `pi`, `deg` | rad |
//!
//! Probabilities, ratios and counts are bare numbers. Every diagnostic
//! names the file and line it refers to.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use mcmrb::analysis::Thresholds;
use mcmrb::channel_metrics::AncillaInput;
use mcmrb::noise::{
    angular_from_khz, angular_from_mhz, build_noise_model, DeviceParams, NoiseModel, Relaxation, Scenario,
    DEFAULT_CONTROL_T1_US, DEFAULT_CONTROL_T2_US, DEFAULT_GATE_DEPOL,
};
use mcmrb::protocols::SuiteConfig;
use mcmrb::simulator::InitState;

use crate::error::{CliError, CliResult};
use crate::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Plain,
    Time,
    Frequency,
    Angle,
}

impl Kind {
    fn units(self) -> &'static str {
        match self {
            Kind::Plain => "none",
            Kind::Time => "us, ns, ms, s",
            Kind::Frequency => "Hz, kHz, MHz, GHz, rad/us",
            Kind::Angle => "rad, pi, deg",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        let u = unit.to_ascii_lowercase();
        match self {
            Kind::Plain => None,
            Kind::Time => match u.as_str() {
                "us" | "μs" | "µs" => Some(1.0),
                "ns" => Some(1e-3),
                "ms" => Some(1e3),
                "s" => Some(1e6),
                _ => None,
            },
            Kind::Frequency => match u.as_str() {
                "hz" => Some(angular_from_khz(1e-3)),
                "khz" => Some(angular_from_khz(1.0)),
                "mhz" => Some(angular_from_mhz(1.0)),
                "ghz" => Some(angular_from_mhz(1e3)),
                "rad/us" | "rad/μs" | "rad/µs" => Some(1.0),
                _ => None,
            },
            Kind::Angle => match u.as_str() {
                "rad" => Some(1.0),
                "pi" => Some(PI),
                "deg" => Some(PI / 180.0),
                _ => None,
            },
        }
    }
}

/// Splits `"0.71us"` into `("0.71", "us")`.
fn split_unit(text: &str) -> (&str, &str) {
    let bytes = text.as_bytes();
    let mut end = 0;
    while end < bytes.len() {
        let b = bytes[end];
        let exponent = (b == b'e' || b == b'E')
            && end > 0
            && bytes
                .get(end + 1)
                .is_some_and(|n| n.is_ascii_digit() || *n == b'+' || *n == b'-');
        if b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.') || exponent {
            end += 1;
        } else {
            break;
        }
    }
    (&text[..end], text[end..].trim())
}

/// Parses a number of the given kind into internal units.
pub fn parse_quantity(text: &str, kind: Kind) -> Result<f64, String> {
    let (number, unit) = split_unit(text.trim());
    let value: f64 = number.parse().map_err(|_| format!("`{text}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    match (kind, unit.is_empty()) {
        (Kind::Plain, true) => Ok(value),
        (Kind::Plain, false) => Err(format!("`{text}` is dimensionless and takes no unit")),
        (_, true) => Err(format!("`{text}` needs a unit suffix ({})", kind.units())),
        (_, false) => kind
            .scale(unit)
            .map(|s| value * s)
            .ok_or_else(|| format!("unknown unit `{unit}` (expected {})", kind.units())),
    }
}

#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Clone, Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

const SECTIONS: [&str; 6] = ["suite", "noise", "classify", "output", "sweep", "metrics"];

fn parse_sections(path: &Path, text: &str) -> CliResult<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::config(path, Some(line), "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(CliError::config(
                    path,
                    Some(line),
                    format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                ));
            }
            if let Some(prev) = sections.iter().find(|s| s.name == name) {
                return Err(CliError::config(
                    path,
                    Some(line),
                    format!("section [{name}] already opened on line {}", prev.line),
                ));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::config(path, Some(line), format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(CliError::config(path, Some(line), "empty key or value"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| CliError::config(path, Some(line), "key outside of any [section]"))?;
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            return Err(CliError::config(
                path,
                Some(line),
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(sections)
}

/// Typed access to one section; keys never asked for are reported by
/// [`Reader::finish`].
struct Reader<'a> {
    path: &'a Path,
    name: &'static str,
    entries: Vec<Entry>,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, sections: &[Section], name: &'static str) -> Self {
        let entries = sections
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.entries.clone())
            .unwrap_or_default();
        let used = vec![false; entries.len()];
        Reader {
            path,
            name,
            entries,
            used,
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(self.entries[i].clone())
    }

    fn err(&self, entry: &Entry, message: impl std::fmt::Display) -> CliError {
        CliError::config(self.path, Some(entry.line), format!("[{}] {}: {message}", self.name, entry.key))
    }

    fn quantity(&mut self, key: &str, kind: Kind) -> CliResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse_quantity(&e.value, kind).map(Some).map_err(|m| self.err(&e, m)),
        }
    }

    fn list(&mut self, key: &str, kind: Kind) -> CliResult<Option<(Vec<f64>, usize)>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let values = e
            .value
            .split(',')
            .map(|item| parse_quantity(item, kind))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| self.err(&e, m))?;
        Ok(Some((values, e.line)))
    }

    fn integer<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.err(&e, format!("`{}` is not a non-negative integer", e.value))),
        }
    }

    fn seed(&mut self, key: &str) -> CliResult<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse_seed(&e.value).map(Some).map_err(|m| self.err(&e, m)),
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)]) -> CliResult<Option<T>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        options
            .iter()
            .find(|(name, _)| *name == e.value)
            .map(|(_, v)| Some(*v))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(&e, format!("`{}` is not one of {}", e.value, names.join(", ")))
            })
    }

    fn text(&mut self, key: &str) -> Option<Entry> {
        self.take(key)
    }

    fn finish(self) -> CliResult<()> {
        match self.entries.iter().zip(&self.used).find(|(_, used)| !**used) {
            Some((e, _)) => Err(self.err(e, "unknown key")),
            None => Ok(()),
        }
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64, String> {
    let t = text.trim().replace('_', "");
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| format!("`{text}` is not a 64-bit unsigned seed"))
}

const INIT_STATES: [(&str, InitState); 2] = [("ground", InitState::Ground), ("excited", InitState::Excited)];
const SWITCH: [(&str, bool); 4] = [("on", true), ("off", false), ("true", true), ("false", false)];

/// Noise keys and their kinds. The first six are scenario parameters, the
/// rest describe the device.
const NOISE_KEYS: [(&str, Kind); 11] = [
    ("eta", Kind::Plain),
    ("phi", Kind::Angle),
    ("p_m", Kind::Plain),
    ("coupling", Kind::Frequency),
    ("delta", Kind::Frequency),
    ("delta_over_j", Kind::Plain),
    ("nu", Kind::Frequency),
    ("ancilla_t1", Kind::Time),
    ("gate_depol", Kind::Plain),
    ("control_t1", Kind::Time),
    ("control_t2", Kind::Time),
];
const PREP_FLIP: &str = "prep_flip";

fn noise_kind(key: &str) -> Option<Kind> {
    if key == PREP_FLIP {
        return Some(Kind::Plain);
    }
    NOISE_KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

pub const SCENARIOS: [&str; 6] = ["none", "non_qnd", "stark", "cross_measurement", "collision", "zz_relaxation"];

/// Scenario parameters each scenario accepts.
fn scenario_keys(name: &str) -> &'static [&'static str] {
    match name {
        "non_qnd" => &["eta"],
        "stark" => &["phi"],
        "cross_measurement" => &["p_m"],
        "collision" => &["coupling", "delta", "delta_over_j"],
        "zz_relaxation" => &["nu", "ancilla_t1"],
        _ => &[],
    }
}

const DEVICE_KEYS: [&str; 4] = ["gate_depol", "control_t1", "control_t2", PREP_FLIP];

/// The `[noise]` section: a scenario and its parameters in internal units.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub scenario: String,
    pub params: BTreeMap<String, f64>,
    pub control_relaxation: bool,
    line: usize,
}

impl NoiseSpec {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// Whether `key` may be set for this scenario.
    pub fn accepts(&self, key: &str) -> bool {
        scenario_keys(&self.scenario).contains(&key) || DEVICE_KEYS.contains(&key)
    }

    pub fn with(&self, key: &str, value: f64) -> NoiseSpec {
        let mut spec = self.clone();
        spec.params.insert(key.to_string(), value);
        if key == "delta" {
            spec.params.remove("delta_over_j");
        } else if key == "delta_over_j" {
            spec.params.remove("delta");
        }
        spec
    }

    pub fn scenario(&self, path: &Path) -> CliResult<Scenario> {
        let need = |key: &str| {
            self.get(key).ok_or_else(|| {
                CliError::config(
                    path,
                    Some(self.line),
                    format!("scenario `{}` requires `{key}` in [noise]", self.scenario),
                )
            })
        };
        Ok(match self.scenario.as_str() {
            "none" => Scenario::None,
            "non_qnd" => Scenario::NonQnd { eta: need("eta")? },
            "stark" => Scenario::Stark { phi: need("phi")? },
            "cross_measurement" => Scenario::CrossMeasurement { p_m: need("p_m")? },
            "collision" => {
                let coupling = need("coupling")?;
                let delta = match (self.get("delta"), self.get("delta_over_j")) {
                    (Some(d), None) => d,
                    (None, Some(r)) => r * coupling,
                    _ => {
                        return Err(CliError::config(
                            path,
                            Some(self.line),
                            "scenario `collision` requires exactly one of `delta` and `delta_over_j`",
                        ))
                    }
                };
                Scenario::Collision { delta, coupling }
            }
            "zz_relaxation" => Scenario::ZzRelaxation {
                nu: need("nu")?,
                ancilla_t1: need("ancilla_t1")?,
            },
            other => unreachable!("scenario `{other}` passed validation"),
        })
    }

    pub fn device(&self, t_m: f64) -> DeviceParams {
        let control = self.control_relaxation.then(|| Relaxation {
            t1: self.get("control_t1").unwrap_or(DEFAULT_CONTROL_T1_US),
            t2: self.get("control_t2").unwrap_or(DEFAULT_CONTROL_T2_US),
        });
        DeviceParams {
            gate_depol_eta: self.get("gate_depol").unwrap_or(DEFAULT_GATE_DEPOL),
            control,
            t_m,
        }
    }

    pub fn prep_flip(&self) -> f64 {
        self.get(PREP_FLIP).unwrap_or(0.0)
    }

    /// Builds the noise model with measurements lasting `t_m`.
    pub fn noise_model(&self, path: &Path, t_m: f64) -> CliResult<NoiseModel> {
        let scenario = self.scenario(path)?;
        let blame = |e: mcmrb::Error| CliError::config(path, Some(self.line), e.to_string());
        let mut model = build_noise_model(scenario, &self.device(t_m)).map_err(blame)?;
        model.prep_flip = self.prep_flip();
        model.validate().map_err(blame)?;
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSpec {
    pub ancilla_input: AncillaInput,
    /// Threshold for the truncated transfer matrix; defaults to the
    /// effective control infidelity.
    pub eps_irb: Option<f64>,
    /// Include control relaxation during the measurement.
    pub relaxation: bool,
    /// `Δ/J` values for the collision infidelity table.
    pub collision_ratios: Vec<f64>,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        MetricsSpec {
            ancilla_input: AncillaInput::Ground,
            eps_irb: None,
            relaxation: false,
            collision_ratios: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub path: PathBuf,
    pub suite: SuiteConfig,
    pub noise: Option<NoiseSpec>,
    pub thresholds: Thresholds,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
    pub sweep: Option<SweepSpec>,
    pub metrics: MetricsSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(path, None, e.to_string()))?;
        RunConfig::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> CliResult<RunConfig> {
        let sections = parse_sections(path, text)?;

        let mut r = Reader::new(path, &sections, "suite");
        let mut suite = SuiteConfig::default();
        if let Some((values, line)) = r.list("lengths", Kind::Plain)? {
            suite.lengths = values
                .iter()
                .map(|&v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::config(path, Some(line), format!("[suite] lengths: {v} is not a positive integer")))
                    }
                })
                .collect::<CliResult<_>>()?;
        }
        if let Some(n) = r.integer("num_sequences")? {
            suite.num_sequences = n;
        }
        if let Some(n) = r.integer("shots")? {
            suite.shots = n;
        }
        if let Some(n) = r.integer("length_cap")? {
            suite.length_cap = n;
        }
        if let Some(t) = r.quantity("t_g", Kind::Time)? {
            suite.timing.t_g = t;
        }
        if let Some(t) = r.quantity("t_m", Kind::Time)? {
            suite.timing.t_m = t;
        }
        if let Some(s) = r.choice("control_init", &INIT_STATES)? {
            suite.control_init = s;
        }
        if let Some(s) = r.choice("ancilla_init", &INIT_STATES)? {
            suite.ancilla_init = s;
        }
        if let Some(s) = r.seed("seed")? {
            suite.seed = s;
        }
        r.finish()?;
        suite
            .validate()
            .map_err(|e| CliError::config(path, section_line(&sections, "suite"), e.to_string()))?;

        let noise = if sections.iter().any(|s| s.name == "noise") {
            Some(read_noise(path, &sections)?)
        } else {
            None
        };

        let mut r = Reader::new(path, &sections, "classify");
        let mut thresholds = Thresholds::default();
        if let Some(v) = r.quantity("abs_floor", Kind::Plain)? {
            thresholds.abs_floor = v;
        }
        if let Some(v) = r.quantity("z", Kind::Plain)? {
            thresholds.z = v;
        }
        r.finish()?;
        if !(thresholds.abs_floor >= 0.0 && thresholds.z >= 0.0) {
            return Err(CliError::config(
                path,
                section_line(&sections, "classify"),
                "[classify] thresholds must be non-negative",
            ));
        }

        let mut r = Reader::new(path, &sections, "output");
        let out_dir = r.text("dir").map(|e| PathBuf::from(e.value));
        let format = r
            .choice("format", &[("csv", Format::Csv), ("json", Format::Json)])?
            .unwrap_or_default();
        r.finish()?;

        let sweep = if sections.iter().any(|s| s.name == "sweep") {
            Some(read_sweep(path, &sections, noise.as_ref())?)
        } else {
            None
        };

        let mut r = Reader::new(path, &sections, "metrics");
        let mut metrics = MetricsSpec::default();
        if let Some(v) = r.choice(
            "ancilla_input",
            &[("ground", AncillaInput::Ground), ("maximally_mixed", AncillaInput::MaximallyMixed)],
        )? {
            metrics.ancilla_input = v;
        }
        metrics.eps_irb = r.quantity("eps_irb", Kind::Plain)?;
        if let Some(v) = r.choice("relaxation", &SWITCH)? {
            metrics.relaxation = v;
        }
        if let Some((values, _)) = r.list("collision_ratios", Kind::Plain)? {
            metrics.collision_ratios = values;
        }
        r.finish()?;

        Ok(RunConfig {
            path: path.to_path_buf(),
            suite,
            noise,
            thresholds,
            out_dir,
            format,
            sweep,
            metrics,
        })
    }

    /// The `[noise]` section, which simulations cannot do without.
    pub fn noise(&self) -> CliResult<&NoiseSpec> {
        self.noise
            .as_ref()
            .ok_or_else(|| CliError::config(&self.path, None, "missing [noise] section"))
    }

    pub fn noise_model(&self) -> CliResult<NoiseModel> {
        self.noise()?.noise_model(&self.path, self.suite.timing.t_m)
    }
}

fn section_line(sections: &[Section], name: &str) -> Option<usize> {
    sections.iter().find(|s| s.name == name).map(|s| s.line)
}

fn read_noise(path: &Path, sections: &[Section]) -> CliResult<NoiseSpec> {
    let mut r = Reader::new(path, sections, "noise");
    let header = section_line(sections, "noise");
    let entry = r
        .text("scenario")
        .ok_or_else(|| CliError::config(path, header, "[noise] requires `scenario`"))?;
    if !SCENARIOS.contains(&entry.value.as_str()) {
        return Err(r.err(&entry, format!("unknown scenario (expected one of {})", SCENARIOS.join(", "))));
    }
    let control_relaxation = r.choice("control_relaxation", &SWITCH)?.unwrap_or(true);
    let mut spec = NoiseSpec {
        scenario: entry.value.clone(),
        params: BTreeMap::new(),
        control_relaxation,
        line: entry.line,
    };
    for key in NOISE_KEYS.iter().map(|(k, _)| *k).chain([PREP_FLIP]) {
        let Some(e) = r.take(key) else { continue };
        if !spec.accepts(key) {
            return Err(r.err(&e, format!("not a parameter of scenario `{}`", spec.scenario)));
        }
        let kind = noise_kind(key).expect("listed key");
        let value = parse_quantity(&e.value, kind).map_err(|m| r.err(&e, m))?;
        spec.params.insert(key.to_string(), value);
    }
    r.finish()?;
    spec.scenario(path)?;
    Ok(spec)
}

fn read_sweep(path: &Path, sections: &[Section], noise: Option<&NoiseSpec>) -> CliResult<SweepSpec> {
    let mut r = Reader::new(path, sections, "sweep");
    let header = section_line(sections, "sweep");
    let entry = r
        .text("parameter")
        .ok_or_else(|| CliError::config(path, header, "[sweep] requires `parameter`"))?;
    let noise = noise.ok_or_else(|| CliError::config(path, header, "[sweep] needs a [noise] section"))?;
    let kind = match noise_kind(&entry.value) {
        Some(kind) if noise.accepts(&entry.value) => kind,
        _ => {
            return Err(r.err(
                &entry,
                format!("`{}` is not a parameter of scenario `{}`", entry.value, noise.scenario),
            ))
        }
    };
    let (values, line) = r
        .list("values", kind)?
        .ok_or_else(|| CliError::config(path, header, "[sweep] requires `values`"))?;
    r.finish()?;
    for &v in &values {
        noise.with(&entry.value, v).scenario(path)?;
    }
    if values.is_empty() {
        return Err(CliError::config(path, Some(line), "[sweep] values: empty grid"));
    }
    Ok(SweepSpec {
        parameter: entry.value,
        values,
    })
}
