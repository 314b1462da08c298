//! Weighted least-squares fit of `P(N) = A·α^N + B`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::DecayCurve;
use crate::{Error, Result};

pub const MIN_LENGTHS: usize = 4;
/// Curves whose means span less than this are treated as flat.
pub const FLAT_RANGE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 500;
const GRID_POINTS: usize = 241;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub sigma_a: f64,
    pub sigma_alpha: f64,
    pub sigma_b: f64,
    /// Unweighted RMS of `mean - model` over the lengths.
    pub residual_rms: f64,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
    pub converged: bool,
    /// Flat curve: `α` is unidentifiable and reported as 1.
    pub degenerate: bool,
}

impl FitResult {
    pub fn model(&self, n: f64) -> f64 {
        model(&[self.a, self.alpha, self.b], n)
    }
}

fn model(p: &[f64; 3], n: f64) -> f64 {
    p[0] * p[1].powf(n) + p[2]
}

struct Problem {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    fn chi2(&self, p: &[f64; 3]) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| w * (y - model(p, x)).powi(2))
            .sum()
    }

    /// `JᵀWJ` and `JᵀW r` at `p`, with `r = y - f`.
    fn normal_equations(&self, p: &[f64; 3]) -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((&x, &y), &w) in self.x.iter().zip(&self.y).zip(&self.w) {
            let pow = p[1].powf(x);
            let d_alpha = if x == 0.0 { 0.0 } else { p[0] * x * p[1].powf(x - 1.0) };
            let j = Vector3::new(pow, d_alpha, 1.0);
            let r = y - model(p, x);
            jtj += j * j.transpose() * w;
            jtr += j * (w * r);
        }
        (jtj, jtr)
    }

    /// Best `(A, B)` for fixed `α`, with `B` clamped to `[0, 1]`.
    fn project(&self, alpha: f64) -> [f64; 3] {
        let (mut s_pp, mut s_p, mut s_1, mut s_py, mut s_y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&x, &y), &w) in self.x.iter().zip(&self.y).zip(&self.w) {
            let phi = alpha.powf(x);
            s_pp += w * phi * phi;
            s_p += w * phi;
            s_1 += w;
            s_py += w * phi * y;
            s_y += w * y;
        }
        let det = s_pp * s_1 - s_p * s_p;
        let b = if det.abs() > 1e-14 * s_pp * s_1 {
            ((s_pp * s_y - s_p * s_py) / det).clamp(0.0, 1.0)
        } else {
            (s_y / s_1).clamp(0.0, 1.0)
        };
        let a = if s_pp > 0.0 { (s_py - b * s_p) / s_pp } else { 0.0 };
        [a, alpha, b]
    }
}

fn clamp_bounds(p: [f64; 3]) -> [f64; 3] {
    [p[0], p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)]
}

/// Levenberg–Marquardt with projection onto the box `0 ≤ α, B ≤ 1`.
fn levenberg_marquardt(problem: &Problem, start: [f64; 3]) -> ([f64; 3], f64, bool) {
    let mut p = clamp_bounds(start);
    let mut chi2 = problem.chi2(&p);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let (jtj, jtr) = problem.normal_equations(&p);
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = clamp_bounds([p[0] + step[0], p[1] + step[1], p[2] + step[2]]);
            let trial_chi2 = problem.chi2(&trial);
            if trial_chi2 <= chi2 {
                let moved = (0..3).map(|k| (trial[k] - p[k]).abs()).fold(0.0, f64::max);
                let gain = chi2 - trial_chi2;
                p = trial;
                chi2 = trial_chi2;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                if moved < 1e-15 || gain <= 1e-15 * chi2.max(1e-300) {
                    return (p, chi2, true);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left: a (possibly boundary) minimum.
            return (p, chi2, true);
        }
    }
    (p, chi2, false)
}

fn heuristic_start(problem: &Problem) -> [f64; 3] {
    let n = problem.y.len();
    let tail = &problem.y[n.saturating_sub(3)..];
    let b0 = (tail.iter().sum::<f64>() / tail.len() as f64).clamp(0.0, 1.0);
    let a0 = problem.y[0] - b0;
    let logs: Vec<f64> = problem
        .y
        .iter()
        .map(|&y| ((y - b0) * a0.signum()).max(f64::EPSILON).ln())
        .collect();
    let mx = problem.x.iter().sum::<f64>() / n as f64;
    let my = logs.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&x, &l) in problem.x.iter().zip(&logs) {
        sxy += (x - mx) * (l - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    [a0, slope.exp().clamp(0.0, 1.0), b0]
}

/// Candidate starting points from a scan of `α` with `A` and `B` profiled out.
fn grid_starts(problem: &Problem, keep: usize) -> Vec<[f64; 3]> {
    let mut scored: Vec<([f64; 3], f64)> = (0..GRID_POINTS)
        .map(|k| {
            // 1 - α logarithmically spaced in [1e-7, 1]
            let u = -7.0 + 7.0 * k as f64 / (GRID_POINTS - 1) as f64;
            let p = problem.project(1.0 - 10f64.powf(u));
            (p, problem.chi2(&p))
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    scored.into_iter().take(keep).map(|(p, _)| p).collect()
}

fn weights(curve: &DecayCurve) -> Vec<f64> {
    let sigma = curve.sigma_of_mean();
    let mut positive: Vec<f64> = sigma.iter().copied().filter(|&s| s > 0.0).collect();
    if positive.is_empty() {
        return vec![1.0; sigma.len()];
    }
    positive.sort_by(f64::total_cmp);
    let median = positive[positive.len() / 2];
    // Zero or vanishing spreads would dominate the fit; floor them.
    let floor = positive[0].max(1e-3 * median).max(1e-12);
    sigma.iter().map(|&s| 1.0 / s.max(floor).powi(2)).collect()
}

/// Fits the mean of `curve` against the sequence length.
///
/// Points are weighted by the inverse variance of the mean; zero spreads are
/// replaced by the smallest positive one and all-zero spreads give unit
/// weights. Standard errors are `sqrt(diag((JᵀWJ)⁻¹) · χ²/(n-3))`. A fit that
/// exhausts its iteration budget is still returned, with `converged = false`.
pub fn fit_exponential(curve: &DecayCurve) -> Result<FitResult> {
    if curve.lengths.len() < MIN_LENGTHS {
        return Err(Error::Input(format!(
            "need at least {MIN_LENGTHS} lengths to fit, got {}",
            curve.lengths.len()
        )));
    }
    if curve.mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::Input("non-finite mean probability".into()));
    }
    let problem = Problem {
        x: curve.lengths.iter().map(|&n| n as f64).collect(),
        y: curve.mean.clone(),
        w: weights(curve),
    };
    let n = problem.y.len();

    let (lo, hi) = problem
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    if hi - lo < FLAT_RANGE {
        let b = (problem.y.iter().sum::<f64>() / n as f64).clamp(0.0, 1.0);
        let p = [0.0, 1.0, b];
        return Ok(FitResult {
            a: 0.0,
            alpha: 1.0,
            b,
            sigma_a: 0.0,
            sigma_alpha: 0.0,
            sigma_b: 0.0,
            residual_rms: residual_rms(&problem, &p),
            chi2: problem.chi2(&p),
            converged: true,
            degenerate: true,
        });
    }

    let mut starts = vec![heuristic_start(&problem)];
    starts.extend(grid_starts(&problem, 3));
    let (best, chi2, converged) = starts
        .into_iter()
        .map(|s| levenberg_marquardt(&problem, s))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");

    let (jtj, _) = problem.normal_equations(&best);
    let scale = chi2 / (n - 3).max(1) as f64;
    let cov = jtj
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-14).ok())
        .unwrap_or_else(Matrix3::zeros);
    let se = |k: usize| (cov[(k, k)] * scale).max(0.0).sqrt();
    Ok(FitResult {
        a: best[0],
        alpha: best[1],
        b: best[2],
        sigma_a: se(0),
        sigma_alpha: se(1),
        sigma_b: se(2),
        residual_rms: residual_rms(&problem, &best),
        chi2,
        converged,
        degenerate: false,
    })
}

fn residual_rms(problem: &Problem, p: &[f64; 3]) -> f64 {
    let ss: f64 = problem
        .x
        .iter()
        .zip(&problem.y)
        .map(|(&x, &y)| (y - model(p, x)).powi(2))
        .sum();
    (ss / problem.y.len() as f64).sqrt()
}
