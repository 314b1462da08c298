//! Decay-curve fitting, error-per-operation estimates and error-signature
//! classification.

mod classify;
mod fit;
mod pgs;

pub use classify::{classify_signature, Check, Classification, ErrorSignature, SignatureVerdict, Thresholds};
pub use fit::{fit_exponential, FitResult, FLAT_RANGE, MIN_LENGTHS};
pub use pgs::{even_flip_probability, pgs_brute_force, pgs_closed_form};

use serde::{Deserialize, Serialize};

use crate::protocols::{Protocol, SuiteData};
use crate::simulator::Qubit;
use crate::{Error, Result};

/// Per-length survival probabilities with their spread over sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub lengths: Vec<usize>,
    pub samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const PROBABILITY_SLACK: f64 = 1e-9;

impl DecayCurve {
    /// Mean and sample standard deviation over the sequences of each length.
    pub fn from_samples(lengths: Vec<usize>, samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::check(&lengths, &samples)?;
        let mean: Vec<f64> = samples.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
        let std = samples
            .iter()
            .zip(&mean)
            .map(|(s, &m)| {
                if s.len() < 2 {
                    0.0
                } else {
                    (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt()
                }
            })
            .collect();
        Ok(DecayCurve { lengths, samples, mean, std })
    }

    /// For deterministic circuits: the spread is the binomial shot error of
    /// the mean, or zero for exact probabilities.
    pub fn with_shot_noise(lengths: Vec<usize>, samples: Vec<Vec<f64>>, shots: u64) -> Result<Self> {
        let mut curve = Self::from_samples(lengths, samples)?;
        curve.std = curve
            .mean
            .iter()
            .map(|&m| {
                if shots == 0 {
                    0.0
                } else {
                    (m.clamp(0.0, 1.0) * (1.0 - m.clamp(0.0, 1.0)) / shots as f64).sqrt()
                }
            })
            .collect();
        Ok(curve)
    }

    fn check(lengths: &[usize], samples: &[Vec<f64>]) -> Result<()> {
        if lengths.len() != samples.len() {
            return Err(Error::Input(format!(
                "{} lengths but {} sample groups",
                lengths.len(),
                samples.len()
            )));
        }
        if lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("lengths must be strictly increasing".into()));
        }
        for (n, s) in lengths.iter().zip(samples) {
            if s.is_empty() {
                return Err(Error::Input(format!("no samples at length {n}")));
            }
            if let Some(bad) = s
                .iter()
                .find(|p| !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(*p))
            {
                return Err(Error::Input(format!("probability {bad} at length {n} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Standard error of each mean.
    pub fn sigma_of_mean(&self) -> Vec<f64> {
        self.std
            .iter()
            .zip(&self.samples)
            .map(|(s, v)| s / (v.len() as f64).sqrt())
            .collect()
    }
}

/// `(1 - α) / 2`.
pub fn epc_from_alpha(alpha: f64) -> f64 {
    (1.0 - alpha) / 2.0
}

/// A value with its one-sigma uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Reference decays at or below this cannot be divided out.
pub const MIN_REFERENCE_ALPHA: f64 = 1e-9;

/// Interleaved estimate `ε = (1 - α_rb/α_del)/2` with first-order error
/// propagation of the ratio.
pub fn irb_estimate(alpha_rb: f64, sigma_rb: f64, alpha_del: f64, sigma_del: f64) -> Result<Estimate> {
    if !(alpha_del > MIN_REFERENCE_ALPHA) {
        return Err(Error::Computation(format!(
            "reference decay α_del = {alpha_del} is too small to resolve"
        )));
    }
    let value = 0.5 * (1.0 - alpha_rb / alpha_del);
    let sigma = 0.5 * (sigma_rb / alpha_del).hypot(alpha_rb * sigma_del / (alpha_del * alpha_del));
    Ok(Estimate { value, sigma })
}

/// Plausible range of an error per operation; estimates outside it indicate
/// a failed fit.
pub const EPS_RANGE: (f64, f64) = (-0.05, 0.55);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub protocol: Protocol,
    pub qubit: Qubit,
    pub eps: Estimate,
    pub fit: FitResult,
    /// The estimate lies outside [`EPS_RANGE`].
    pub suspect: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub entries: Vec<EpsEntry>,
    /// Measurement-induced control error from `mcm-rb` against `delay-rb`.
    pub eps_irb: Option<Estimate>,
}

impl SuiteResult {
    pub fn entry(&self, protocol: Protocol, qubit: Qubit) -> Option<&EpsEntry> {
        self.entries.iter().find(|e| e.protocol == protocol && e.qubit == qubit)
    }

    pub fn eps(&self, protocol: Protocol, qubit: Qubit) -> Option<Estimate> {
        self.entry(protocol, qubit).map(|e| e.eps)
    }

    pub fn fit_quality(&self, protocol: Protocol, qubit: Qubit) -> Option<f64> {
        self.entry(protocol, qubit).map(|e| e.fit.residual_rms)
    }
}

/// Fits every curve and derives the six error rates and the interleaved
/// estimate. With `exact` probabilities the fit uncertainty can vanish; a
/// zero `σ_ε` is then replaced by the fit's residual RMS.
pub fn analyze_suite(data: &SuiteData, exact: bool) -> Result<SuiteResult> {
    let mut entries = Vec::with_capacity(data.curves.len());
    for lc in &data.curves {
        let fit = fit_exponential(&lc.curve)?;
        let mut sigma = fit.sigma_alpha / 2.0;
        if exact && sigma == 0.0 {
            sigma = fit.residual_rms;
        }
        let value = epc_from_alpha(fit.alpha);
        entries.push(EpsEntry {
            protocol: lc.protocol,
            qubit: lc.qubit,
            eps: Estimate { value, sigma },
            fit,
            suspect: !(EPS_RANGE.0..=EPS_RANGE.1).contains(&value),
        });
    }
    let mut result = SuiteResult { entries, eps_irb: None };
    if let (Some(rb), Some(del)) = (
        result.entry(Protocol::McmRb, Qubit::Control),
        result.entry(Protocol::DelayRb, Qubit::Control),
    ) {
        let mut irb = irb_estimate(rb.fit.alpha, rb.fit.sigma_alpha, del.fit.alpha, del.fit.sigma_alpha)?;
        if exact && irb.sigma == 0.0 {
            irb.sigma = rb.fit.residual_rms.hypot(del.fit.residual_rms);
        }
        result.eps_irb = Some(irb);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn epc_examples() {
        assert_eq!(epc_from_alpha(1.0), 0.0);
        assert_eq!(epc_from_alpha(0.0), 0.5);
        assert!((epc_from_alpha(0.98) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn irb_examples() {
        let e = irb_estimate(0.99, 0.0, 0.99, 0.0).unwrap();
        assert_eq!(e.value, 0.0);
        let e = irb_estimate(0.98, 0.0, 0.99, 0.0).unwrap();
        assert!((e.value - 0.00505050505).abs() < 1e-9);
        assert!(matches!(irb_estimate(0.5, 0.0, 0.0, 0.0), Err(Error::Computation(_))));
    }

    #[test]
    fn irb_uncertainty_by_finite_differences() {
        let (a, sa, d, sd) = (0.97, 2e-3, 0.985, 1e-3);
        let f = |a: f64, d: f64| 0.5 * (1.0 - a / d);
        let h = 1e-7;
        let da = (f(a + h, d) - f(a - h, d)) / (2.0 * h);
        let dd = (f(a, d + h) - f(a, d - h)) / (2.0 * h);
        let expected = ((da * sa).powi(2) + (dd * sd).powi(2)).sqrt();
        let got = irb_estimate(a, sa, d, sd).unwrap().sigma;
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn curve_statistics() {
        let c = DecayCurve::from_samples(vec![1, 2], vec![vec![0.9, 0.7], vec![0.5]]).unwrap();
        assert!((c.mean[0] - 0.8).abs() < 1e-15);
        assert!((c.std[0] - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.std[1], 0.0);
        let rep = DecayCurve::with_shot_noise(vec![1], vec![vec![0.5]], 1024).unwrap();
        assert!((rep.std[0] - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn malformed_curves() {
        assert!(DecayCurve::from_samples(vec![1, 1], vec![vec![0.5], vec![0.5]]).is_err());
        assert!(DecayCurve::from_samples(vec![1], vec![vec![]]).is_err());
        assert!(DecayCurve::from_samples(vec![1], vec![vec![1.5]]).is_err());
        assert!(DecayCurve::from_samples(vec![1, 2], vec![vec![0.5]]).is_err());
    }

    proptest! {
        #[test]
        fn epc_strictly_decreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!(a != b);
            prop_assert_eq!(a < b, epc_from_alpha(a) > epc_from_alpha(b));
        }

        #[test]
        fn irb_zero_iff_equal(a in 0.01f64..=1.0, d in 0.01f64..=1.0) {
            let e = irb_estimate(a, 0.0, d, 0.0).unwrap().value;
            prop_assert_eq!(e == 0.0, a == d);
        }
    }
}
