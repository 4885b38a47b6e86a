//! Multistart refutation search for rank-one violations `op(x x^*, y y^*) = 0`
//! with `y` outside the sign/phase orbit of `x`.
//!
//! The search minimizes the scale-free ratio
//! `||op(x x^*, y y^*)||^2 / ||z z^* - w w^*||_F^2`, where `z`, `w` are the
//! lifted signals of `x` and `y`. The denominator vanishes exactly on the
//! excluded orbit, so it acts as the separation barrier.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::operator::{MeasurementOperator, OperatorKind};
use crate::lm::{levenberg_marquardt, projected_gradient, LeastSquares, LmConfig};
use crate::quad::{coeffs_from_params, params_from_coeffs, QuadModel};
use crate::recover::phase_distance;
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::signal::{norm, vector_to_json, Field};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub starts: usize,
    pub max_iter: usize,
    /// Gradient steps before the Gauss-Newton polish.
    pub gradient_iters: usize,
    /// Threshold on the squared residual norm.
    pub tol_fail: f64,
    pub tol_sep: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { starts: 200, max_iter: 500, gradient_iters: 25, tol_fail: 1e-18, tol_sep: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PresumedPass,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::PresumedPass => "presumed-pass",
            Verdict::Fail => "fail",
        })
    }
}

/// A pair of frame-coefficient vectors with (numerically) equal measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationWitness {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// `||op(x x^*, y y^*)||` at `||x||^2 + ||y||^2 = 2`.
    pub residual: f64,
    /// Relative distance between the lifted signals modulo sign/phase.
    pub separation: f64,
}

impl ViolationWitness {
    pub fn to_json(&self, field: Field) -> Value {
        json!({
            "x": vector_to_json(field, &self.x),
            "y": vector_to_json(field, &self.y),
            "residual": self.residual,
            "separation": self.separation,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertResult {
    pub verdict: Verdict,
    pub witness: Option<ViolationWitness>,
    pub starts: usize,
    /// Smallest barrier-normalized squared residual over all starts.
    pub best_residual: f64,
}

impl CertResult {
    pub fn to_json(&self, field: Field) -> Value {
        json!({
            "verdict": self.verdict,
            "starts": self.starts,
            "best_residual": self.best_residual,
            "witness": self.witness.as_ref().map(|w| w.to_json(field)),
        })
    }
}

/// The barrier-normalized residual `R / sqrt(D)` in the real parameters
/// `[x; y]` (complex coefficients split into real and imaginary parts).
#[derive(Debug, Clone)]
pub struct SeparationObjective {
    u: QuadModel,
    v: QuadModel,
    complex: bool,
}

struct Parts {
    z: (Vec<f64>, Vec<f64>),
    w: (Vec<f64>, Vec<f64>),
    raw: Vec<f64>,
    /// `z + w'` and `z - w'`, where `w'` is `w` rotated onto the phase of `z`.
    sum: (Vec<f64>, Vec<f64>),
    diff: (Vec<f64>, Vec<f64>),
    /// Conjugate of the unit factor applied to `w`.
    phase: Complex64,
    big_s: f64,
    delta: f64,
    q: f64,
    d: f64,
}

impl SeparationObjective {
    pub fn new(op: &MeasurementOperator) -> Self {
        let (u, v) = op.models();
        Self { u, v, complex: op.kind() == OperatorKind::ComplexPair }
    }

    /// Real parameters per signal.
    pub fn half(&self) -> usize {
        self.u.params()
    }

    pub fn params_of(&self, x: &[Complex64], y: &[Complex64]) -> Vec<f64> {
        let mut t = params_from_coeffs(x, self.complex);
        t.extend(params_from_coeffs(y, self.complex));
        t
    }

    pub fn coeffs_of(&self, theta: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let p = self.half();
        (coeffs_from_params(&theta[..p], self.complex), coeffs_from_params(&theta[p..], self.complex))
    }

    fn parts(&self, theta: &[f64]) -> Parts {
        let p = self.half();
        let n = self.u.len();
        let (mut zr, mut zi, mut wr, mut wi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        self.u.synth(&theta[..p], &mut zr, &mut zi);
        self.v.synth(&theta[p..], &mut wr, &mut wi);
        let groups = self.u.groups();
        let raw = groups
            .iter()
            .map(|&(a, b)| {
                let g = |r: &[f64], i: &[f64], j: usize| r[j] * r[j] + i[j] * i[j];
                g(&zr, &zi, a) + b.map_or(0.0, |b| g(&zr, &zi, b)) - g(&wr, &wi, a) - b.map_or(0.0, |b| g(&wr, &wi, b))
            })
            .collect();
        let c: Complex64 = (0..n).map(|j| Complex64::new(zr[j], -zi[j]) * Complex64::new(wr[j], wi[j])).sum();
        let phase = if c.norm() > 0.0 { (c / c.norm()).conj() } else { Complex64::new(1.0, 0.0) };
        let (mut sum, mut diff) = ((vec![0.0; n], vec![0.0; n]), (vec![0.0; n], vec![0.0; n]));
        for j in 0..n {
            let w = phase * Complex64::new(wr[j], wi[j]);
            sum.0[j] = zr[j] + w.re;
            sum.1[j] = zi[j] + w.im;
            diff.0[j] = zr[j] - w.re;
            diff.1[j] = zi[j] - w.im;
        }
        let dot = |a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)| -> f64 {
            a.0.iter().zip(&b.0).chain(a.1.iter().zip(&b.1)).map(|(x, y)| x * y).sum()
        };
        // ||z z^* - w w^*||^2 without cancellation near the excluded orbit.
        let big_s = dot(&sum, &sum);
        let delta = dot(&diff, &diff);
        let q = dot(&sum, &diff);
        let d = (0.5 * (big_s * delta + q * q)).max(f64::MIN_POSITIVE);
        Parts { z: (zr, zi), w: (wr, wi), raw, sum, diff, phase, big_s, delta, q, d }
    }

    /// `op(x x^*, y y^*)` without the barrier.
    pub fn raw_residual(&self, theta: &[f64]) -> Vec<f64> {
        self.parts(theta).raw
    }
}

impl LeastSquares for SeparationObjective {
    fn dims(&self) -> (usize, usize) {
        (self.u.outputs(), 2 * self.half())
    }

    fn residuals(&self, theta: &[f64], r: &mut [f64]) {
        let parts = self.parts(theta);
        let s = parts.d.sqrt().recip();
        for (o, v) in r.iter_mut().zip(&parts.raw) {
            *o = v * s;
        }
    }

    fn jacobian(&self, theta: &[f64], jac: &mut DMatrix<f64>) {
        let p = self.half();
        let Parts { z, w, raw, sum, diff, phase, big_s, delta, q, d } = self.parts(theta);
        let s = d.sqrt().recip();
        jac.fill(0.0);
        self.u.add_jacobian_at(&z.0, &z.1, s, jac, 0);
        self.v.add_jacobian_at(&w.0, &w.1, -s, jac, p);
        let zero = vec![0.0; z.0.len()];
        let dot = |a: &(Vec<f64>, Vec<f64>), gr: &[f64], gi: &[f64]| -> f64 {
            a.0.iter().zip(gr).chain(a.1.iter().zip(gi)).map(|(x, y)| x * y).sum()
        };
        // The alignment phase is stationary, so it is held fixed here.
        let mut barrier = |col: usize, gr: &[f64], gi: &[f64], second: bool| {
            let (hr, hi): (Vec<f64>, Vec<f64>) = if second {
                gr.iter().zip(gi).map(|(&r, &i)| phase * Complex64::new(r, i)).map(|h| (h.re, h.im)).unzip()
            } else {
                (gr.to_vec(), gi.to_vec())
            };
            let sign = if second { -1.0 } else { 1.0 };
            let d_s = 2.0 * dot(&sum, &hr, &hi);
            let d_delta = 2.0 * sign * dot(&diff, &hr, &hi);
            // q = ||z||^2 - ||w||^2.
            let d_q = 2.0 * sign * dot(if second { &w } else { &z }, gr, gi);
            let dd = 0.5 * (d_s * delta + big_s * d_delta) + q * d_q;
            for (k, rk) in raw.iter().enumerate() {
                jac[(k, col)] -= 0.5 * rk * s * s * s * dd;
            }
        };
        for i in 0..p {
            let (gr, gi) = self.u.generator(i);
            barrier(i, gr, gi.unwrap_or(&zero), false);
        }
        for i in 0..p {
            let (gr, gi) = self.v.generator(i);
            barrier(p + i, gr, gi.unwrap_or(&zero), true);
        }
    }

    fn retract(&self, theta: &mut [f64]) {
        let n2: f64 = theta.iter().map(|v| v * v).sum();
        if n2 > 0.0 {
            let k = (2.0 / n2).sqrt();
            theta.iter_mut().for_each(|v| *v *= k);
        }
    }
}

struct StartOutcome {
    ratio: f64,
    raw_sq: f64,
    separation: f64,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

/// Relative sign/phase distance between the lifted signals of `x` and `y`.
pub fn lifted_separation(op: &MeasurementOperator, x: &[Complex64], y: &[Complex64]) -> f64 {
    let z = op.lift(x, false);
    let w = op.lift(y, true);
    let scale = norm(&z).max(norm(&w));
    if scale == 0.0 {
        return 0.0;
    }
    phase_distance(&z, &w, op.field()) / scale
}

fn run_start(obj: &SeparationObjective, op: &MeasurementOperator, theta0: Vec<f64>, cfg: &SearchConfig) -> Option<StartOutcome> {
    let (theta, _) = projected_gradient(obj, theta0, cfg.gradient_iters);
    let lm = LmConfig { max_iter: cfg.max_iter, ..LmConfig::default() };
    let out = levenberg_marquardt(obj, theta, &lm);
    if !out.cost.is_finite() || out.theta.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let raw_sq = obj.raw_residual(&out.theta).iter().map(|v| v * v).sum();
    let (x, y) = obj.coeffs_of(&out.theta);
    let separation = lifted_separation(op, &x, &y);
    Some(StartOutcome { ratio: out.cost, raw_sq, separation, x, y })
}

/// Multistart search from Gaussian starts.
pub fn search_rank_constrained_kernel(op: &MeasurementOperator, cfg: &SearchConfig) -> CertResult {
    search_with_seeds(op, cfg, &[])
}

/// Like [`search_rank_constrained_kernel`], with extra starting points
/// `(x, y)` tried before the random starts.
pub fn search_with_seeds(op: &MeasurementOperator, cfg: &SearchConfig, seeds: &[(Vec<Complex64>, Vec<Complex64>)]) -> CertResult {
    let obj = SeparationObjective::new(op);
    let dim = 2 * obj.half();
    let total = seeds.len() + cfg.starts;
    let outcomes: Vec<Option<StartOutcome>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let theta0 = match seeds.get(i) {
                Some((x, y)) => obj.params_of(x, y),
                None => {
                    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[(i - seeds.len()) as u64]));
                    gaussian_vec(&mut rng, dim, false).iter().map(|z| z.re).collect()
                }
            };
            run_start(&obj, op, theta0, cfg)
        })
        .collect();

    let mut best_residual = f64::INFINITY;
    let mut witness = None;
    for o in outcomes.iter().flatten() {
        if o.ratio < best_residual {
            best_residual = o.ratio;
        }
        if witness.is_none() && o.raw_sq < cfg.tol_fail && o.separation > cfg.tol_sep {
            witness = Some(ViolationWitness { x: o.x.clone(), y: o.y.clone(), residual: o.raw_sq.sqrt(), separation: o.separation });
        }
    }
    CertResult {
        verdict: if witness.is_some() { Verdict::Fail } else { Verdict::PresumedPass },
        witness,
        starts: total,
        best_residual,
    }
}
