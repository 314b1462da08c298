//! Error-signature classification from the six error rates of a suite.
//!
//! Relations between two estimates are judged against
//! `max(abs_floor, z·σ)`, where `σ` is the estimate's own uncertainty for
//! comparisons with zero and the combined uncertainty for comparisons
//! between two estimates.

use serde::{Deserialize, Serialize};

use super::{Estimate, SuiteResult};
use crate::protocols::Protocol;
use crate::simulator::Qubit;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorSignature {
    NoMeasurementInducedError,
    NonQndMeasurement,
    MeasurementInducedControlError,
    MeasurementInducedTwoQubitError,
    RbCrossTalk,
}

impl ErrorSignature {
    pub const ALL: [ErrorSignature; 5] = [
        ErrorSignature::NoMeasurementInducedError,
        ErrorSignature::NonQndMeasurement,
        ErrorSignature::MeasurementInducedControlError,
        ErrorSignature::MeasurementInducedTwoQubitError,
        ErrorSignature::RbCrossTalk,
    ];

    /// The expected relations, as printed in reports.
    pub fn relations(self) -> &'static str {
        match self {
            ErrorSignature::NoMeasurementInducedError => "eps^a ~ 0 for all; eps_rb^c ~ eps_del^c, eps_rep^c ~ 0",
            ErrorSignature::NonQndMeasurement => {
                "eps_del^a ~ 0, eps_rb^a > 0, eps_rep^a > 0; eps_rb^c ~ eps_del^c, eps_rep^c ~ 0"
            }
            ErrorSignature::MeasurementInducedControlError => "eps^a ~ 0 for all; eps_rb^c > eps_del^c, eps_rep^c >= 0",
            ErrorSignature::MeasurementInducedTwoQubitError => {
                "eps_del^a ~ 0, eps_rb^a >= 0, eps_rep^a >= 0, not all eps^a ~ 0; eps_rb^c > eps_del^c, eps_rep^c >= 0"
            }
            ErrorSignature::RbCrossTalk => "eps_rep^a ~ 0, eps_rb^a > 0, eps_del^a > 0; eps_rb^c ~ eps_del^c, eps_rep^c ~ 0",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub abs_floor: f64,
    pub z: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { abs_floor: 1e-3, z: 2.0 }
    }
}

/// One elementary relation. `margin` is positive when the relation holds; no
/// perturbation of the estimates smaller than `|margin|` each can flip it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub holds: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureVerdict {
    pub signature: ErrorSignature,
    pub evidence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub signatures: Vec<SignatureVerdict>,
    /// Set when the ancilla decays far more under `mcm-rb` than under
    /// `mcm-rep`, which points at an excitation exchange with the control.
    pub collision_hint: Option<String>,
    pub checks: Vec<Check>,
    pub thresholds: Thresholds,
}

impl Classification {
    pub fn contains(&self, signature: ErrorSignature) -> bool {
        self.signatures.iter().any(|v| v.signature == signature)
    }

    /// Smallest distance of any relation from its boundary.
    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin.abs()).fold(f64::INFINITY, f64::min)
    }
}

const COLLISION_RATIO: f64 = 10.0;
const COLLISION_FLOOR: f64 = 1e-5;

struct Judge<'a> {
    t: &'a Thresholds,
    checks: Vec<Check>,
}

impl Judge<'_> {
    fn record(&mut self, label: String, margin: f64) -> bool {
        let holds = margin > 0.0;
        if !self.checks.iter().any(|c| c.label == label) {
            self.checks.push(Check { label, holds, margin });
        }
        holds
    }

    fn bound(&self, sigma: f64) -> f64 {
        self.t.abs_floor.max(self.t.z * sigma)
    }

    fn zero(&mut self, name: &str, e: Estimate) -> bool {
        self.record(format!("{name} ~ 0"), self.bound(e.sigma) - e.value)
    }

    fn positive(&mut self, name: &str, e: Estimate) -> bool {
        // complement of `~ 0`; the boundary value itself counts as positive
        let margin = e.value - self.bound(e.sigma);
        self.record(format!("{name} > 0"), if margin == 0.0 { f64::MIN_POSITIVE } else { margin })
    }

    fn non_negative(&mut self, name: &str, e: Estimate) -> bool {
        self.record(format!("{name} >= 0"), e.value + self.bound(e.sigma))
    }

    fn greater(&mut self, x_name: &str, x: Estimate, y_name: &str, y: Estimate) -> bool {
        let margin = (x.value - y.value) - self.bound(x.sigma.hypot(y.sigma));
        self.record(format!("{x_name} > {y_name}"), margin / 2.0)
    }

    fn equal(&mut self, x_name: &str, x: Estimate, y_name: &str, y: Estimate) -> bool {
        let margin = self.bound(x.sigma.hypot(y.sigma)) - (x.value - y.value).abs();
        self.record(format!("{x_name} ~ {y_name}"), margin / 2.0)
    }
}

/// Returns every signature whose relations hold; several may apply at once.
pub fn classify_signature(result: &SuiteResult, thresholds: &Thresholds) -> Result<Classification> {
    let get = |p: Protocol, q: Qubit| {
        result
            .eps(p, q)
            .ok_or_else(|| Error::Input(format!("missing error rate for {} on the {}", p.as_str(), q.as_str())))
    };
    let c_rb = get(Protocol::McmRb, Qubit::Control)?;
    let c_del = get(Protocol::DelayRb, Qubit::Control)?;
    let c_rep = get(Protocol::McmRep, Qubit::Control)?;
    let a_rb = get(Protocol::McmRb, Qubit::Ancilla)?;
    let a_del = get(Protocol::DelayRb, Qubit::Ancilla)?;
    let a_rep = get(Protocol::McmRep, Qubit::Ancilla)?;
    if [c_rb, c_del, c_rep, a_rb, a_del, a_rep]
        .iter()
        .any(|e| !e.value.is_finite() || !e.sigma.is_finite())
    {
        return Err(Error::Input("non-finite error rate".into()));
    }

    let mut j = Judge { t: thresholds, checks: Vec::new() };
    // Evaluate every relation up front so that all margins are reported.
    let a_rb_zero = j.zero("eps_rb^a", a_rb);
    let a_del_zero = j.zero("eps_del^a", a_del);
    let a_rep_zero = j.zero("eps_rep^a", a_rep);
    let a_rb_pos = j.positive("eps_rb^a", a_rb);
    let a_del_pos = j.positive("eps_del^a", a_del);
    let a_rep_pos = j.positive("eps_rep^a", a_rep);
    let a_rb_nonneg = j.non_negative("eps_rb^a", a_rb);
    let a_rep_nonneg = j.non_negative("eps_rep^a", a_rep);
    let c_equal = j.equal("eps_rb^c", c_rb, "eps_del^c", c_del);
    let c_greater = j.greater("eps_rb^c", c_rb, "eps_del^c", c_del);
    let c_rep_zero = j.zero("eps_rep^c", c_rep);
    let c_rep_nonneg = j.non_negative("eps_rep^c", c_rep);

    let ancilla_quiet = a_rb_zero && a_del_zero && a_rep_zero;
    let control_unaffected = c_equal && c_rep_zero;
    let rows = [
        (ErrorSignature::NoMeasurementInducedError, ancilla_quiet && control_unaffected),
        (
            ErrorSignature::NonQndMeasurement,
            a_del_zero && a_rb_pos && a_rep_pos && control_unaffected,
        ),
        (
            ErrorSignature::MeasurementInducedControlError,
            ancilla_quiet && c_greater && c_rep_nonneg,
        ),
        (
            ErrorSignature::MeasurementInducedTwoQubitError,
            a_del_zero && a_rb_nonneg && a_rep_nonneg && !ancilla_quiet && c_greater && c_rep_nonneg,
        ),
        (
            ErrorSignature::RbCrossTalk,
            a_rep_zero && a_rb_pos && a_del_pos && control_unaffected,
        ),
    ];
    let signatures = rows
        .into_iter()
        .filter(|&(_, holds)| holds)
        .map(|(signature, _)| SignatureVerdict {
            signature,
            evidence: signature.relations().to_string(),
        })
        .collect();

    let ratio_margin = a_rb.value - COLLISION_RATIO * a_rep.value.max(COLLISION_FLOOR);
    let ratio = j.record("eps_rb^a >> eps_rep^a".into(), ratio_margin / (1.0 + COLLISION_RATIO));
    let collision_hint = (a_rb_pos && ratio).then(|| {
        format!(
            "ancilla decays only under mcm-rb (eps_rb^a = {:.3e}, eps_rep^a = {:.3e}): likely a measurement-induced collision",
            a_rb.value, a_rep.value
        )
    });

    Ok(Classification {
        signatures,
        collision_hint,
        checks: j.checks,
        thresholds: *thresholds,
    })
}
