//! Sparse recovery from power-spectrum or reduced measurements.
//!
//! On a fixed support the unknown coefficients enter the measurement as a
//! grouped sum of squared moduli, which is fitted by multistart
//! Levenberg-Marquardt. Support search runs the fixed-support solver on
//! every support and flags ambiguities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lm::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::model::{binomial, Basis, Support};
use crate::quad::{coeffs_from_params, reduced_groups, singleton_groups, QuadModel};
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::signal::{dft_matrix, norm, real_dft_matrix, reduced_len, vector_to_json, Field, PowerSpectrum, ReducedMeasurement};

/// Measurement a recovery problem is posed in.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Reduced(ReducedMeasurement),
    PowerSpectrum(PowerSpectrum),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryProblem {
    basis: Basis,
    m: usize,
    target: Target,
}

impl RecoveryProblem {
    /// Complex problems require the full power spectrum.
    pub fn new(basis: Basis, m: usize, target: Target) -> Result<Self> {
        let n = basis.n();
        if m == 0 || m > n {
            return Err(Error::InvalidInput(format!("sparsity {m} must lie in 1..={n}")));
        }
        let values = match &target {
            Target::Reduced(r) => {
                if basis.field() == Field::Complex {
                    return Err(Error::FieldMismatch("complex recovery needs the full power spectrum".into()));
                }
                if r.values.len() != reduced_len(n) {
                    return Err(Error::DimensionMismatch { expected: reduced_len(n), got: r.values.len() });
                }
                &r.values
            }
            Target::PowerSpectrum(p) => {
                if p.values.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.values.len() });
                }
                &p.values
            }
        };
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("measurements must be finite and non-negative".into()));
        }
        Ok(Self { basis, m, target })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn field(&self) -> Field {
        self.basis.field()
    }

    pub fn target_values(&self) -> &[f64] {
        match &self.target {
            Target::Reduced(r) => &r.values,
            Target::PowerSpectrum(p) => &p.values,
        }
    }

    fn check_support(&self, s: &Support) -> Result<()> {
        if s.m() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: s.m() });
        }
        s.check_within(self.basis.n())
    }

    /// The quadratic model of the measurement restricted to `s`.
    pub fn model(&self, s: &Support) -> Result<QuadModel> {
        self.check_support(s)?;
        let n = self.basis.n();
        let rows = DMatrix::from_fn(s.m(), n, |i, j| self.basis.matrix()[(s.indices()[i], j)]);
        Ok(match &self.target {
            Target::Reduced(_) => {
                let r = real_dft_matrix(n).map(|v| Complex64::new(v, 0.0));
                QuadModel::from_frame(&(rows * r.transpose()), false, reduced_groups(n))
            }
            Target::PowerSpectrum(_) => {
                QuadModel::from_frame(&(rows * dft_matrix(n)), self.field().is_complex(), singleton_groups(n))
            }
        })
    }

    /// Normalized least-squares objective on the support `s`.
    pub fn objective(&self, s: &Support) -> Result<FixedSupportObjective> {
        let model = self.model(s)?;
        let target = self.target_values().to_vec();
        let scale = target.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(FixedSupportObjective { model, target, scale: if scale > 0.0 { scale } else { 1.0 } })
    }
}

/// `(b(theta) - target) / ||target||`.
#[derive(Debug, Clone)]
pub struct FixedSupportObjective {
    model: QuadModel,
    target: Vec<f64>,
    scale: f64,
}

impl FixedSupportObjective {
    pub fn model(&self) -> &QuadModel {
        &self.model
    }
}

impl LeastSquares for FixedSupportObjective {
    fn dims(&self) -> (usize, usize) {
        (self.model.outputs(), self.model.params())
    }

    fn residuals(&self, theta: &[f64], r: &mut [f64]) {
        self.model.measure_into(theta, r);
        for (o, t) in r.iter_mut().zip(&self.target) {
            *o = (*o - t) / self.scale;
        }
    }

    fn jacobian(&self, theta: &[f64], jac: &mut DMatrix<f64>) {
        jac.fill(0.0);
        self.model.add_jacobian(theta, 1.0 / self.scale, jac, 0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub starts: usize,
    /// Acceptance threshold on the normalized residual norm.
    pub accept_tol: f64,
    /// Relative distance above which two embedded solutions count as different.
    pub ambiguity_tol: f64,
    pub enumeration_cap: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Return the first accepted start instead of running all of them.
    pub stop_on_accept: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self { starts: 50, accept_tol: 1e-8, ambiguity_tol: 1e-4, enumeration_cap: 5000, max_iter: 500, seed: 0, stop_on_accept: true }
    }
}

/// A second accepted solution that differs from the reported one.
#[derive(Debug, Clone, PartialEq)]
pub struct Ambiguity {
    pub support: Support,
    pub coeffs: Vec<Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub field: Field,
    pub support: Support,
    /// Canonicalized coefficients on `support`.
    pub coeffs: Vec<Complex64>,
    /// `||b(solution) - target|| / ||target||` (absolute when the target is zero).
    pub residual: f64,
    pub converged: bool,
    pub canonical: bool,
    pub ambiguity: Option<Ambiguity>,
    pub starts_used: usize,
}

impl RecoveryResult {
    /// The solution embedded into `K^N`.
    pub fn signal(&self, basis: &Basis) -> Vec<Complex64> {
        embed_coeffs(basis, &self.support, &self.coeffs)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "field": self.field,
            "support": self.support,
            "coeffs": vector_to_json(self.field, &self.coeffs),
            "residual": self.residual,
            "converged": self.converged,
            "canonical": self.canonical,
            "starts_used": self.starts_used,
            "ambiguity": self.ambiguity.as_ref().map(|a| json!({
                "support": a.support,
                "coeffs": vector_to_json(self.field, &a.coeffs),
                "residual": a.residual,
            })),
        })
    }
}

pub(crate) fn embed_coeffs(basis: &Basis, s: &Support, c: &[Complex64]) -> Vec<Complex64> {
    let n = basis.n();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (&i, ci) in s.indices().iter().zip(c) {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk += ci * basis.matrix()[(i, k)];
        }
    }
    x
}

/// Fixes the sign (real) or phase (complex) so that the first coordinate
/// with modulus above `1e-10` is real and positive.
pub fn canonicalize(x: &[Complex64], field: Field) -> Vec<Complex64> {
    let Some(lead) = x.iter().find(|z| z.norm() > 1e-10) else { return x.to_vec() };
    let t = match field {
        Field::Real => Complex64::new(if lead.re < 0.0 { -1.0 } else { 1.0 }, 0.0),
        Field::Complex => lead.conj() / lead.norm(),
    };
    x.iter().map(|z| z * t).collect()
}

/// `min_t ||x - t y||` over `t = +-1` (real) or `|t| = 1` (complex).
pub fn phase_distance(x: &[Complex64], y: &[Complex64], field: Field) -> f64 {
    let diff = |t: Complex64| x.iter().zip(y).map(|(a, b)| (a - t * b).norm_sqr()).sum::<f64>().sqrt();
    match field {
        Field::Real => diff(Complex64::new(1.0, 0.0)).min(diff(Complex64::new(-1.0, 0.0))),
        Field::Complex => {
            let ip: Complex64 = x.iter().zip(y).map(|(a, b)| b.conj() * a).sum();
            let t = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
            diff(t)
        }
    }
}

/// Whether `x = t y` up to `tol * max(||x||, 1)` for an admissible unit `t`.
pub fn equivalent_up_to_phase(x: &[Complex64], y: &[Complex64], field: Field, tol: f64) -> bool {
    x.len() == y.len() && phase_distance(x, y, field) <= tol * norm(x).max(1.0)
}

struct Attempt {
    coeffs: Vec<Complex64>,
    residual: f64,
}

fn support_seed(base: u64, s: &Support) -> u64 {
    let coords: Vec<u64> = s.indices().iter().map(|&i| i as u64).collect();
    derive_seed(base, &coords)
}

/// Runs the multistart solver on `s`; stops at the first accepted start if
/// `stop_on_accept`, otherwise returns every attempt.
fn attempts(p: &RecoveryProblem, s: &Support, cfg: &RecoveryConfig) -> Result<Vec<Attempt>> {
    let obj = p.objective(s)?;
    let complex = p.field().is_complex();
    let dim = obj.dims().1;
    let target_norm = p.target_values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let seed = support_seed(cfg.seed, s);
    let lm = LmConfig { max_iter: cfg.max_iter, cost_tol: (cfg.accept_tol * 1e-4).powi(2), ..LmConfig::default() };
    let mut out = Vec::new();
    for start in 0..cfg.starts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, &[start as u64]));
        let mut theta: Vec<f64> = gaussian_vec(&mut rng, dim, false).iter().map(|z| z.re).collect();
        let b0 = obj.model().measure(&theta).iter().map(|v| v * v).sum::<f64>().sqrt();
        if b0 > 0.0 {
            let k = (target_norm / b0).sqrt();
            theta.iter_mut().for_each(|v| *v *= k);
        }
        let res = levenberg_marquardt(&obj, theta, &lm);
        let residual = res.cost.sqrt();
        if !residual.is_finite() {
            continue;
        }
        let accepted = residual <= cfg.accept_tol;
        out.push(Attempt { coeffs: coeffs_from_params(&res.theta, complex), residual });
        if accepted && cfg.stop_on_accept {
            break;
        }
    }
    Ok(out)
}

fn zero_result(p: &RecoveryProblem, s: &Support) -> RecoveryResult {
    RecoveryResult {
        field: p.field(),
        support: s.clone(),
        coeffs: vec![Complex64::new(0.0, 0.0); s.m()],
        residual: 0.0,
        converged: true,
        canonical: true,
        ambiguity: None,
        starts_used: 0,
    }
}

/// Multistart Levenberg-Marquardt on the support `s`. A problem with no
/// accepted start is reported with `converged = false` and the residual of
/// the best attempt.
pub fn solve_fixed_support(p: &RecoveryProblem, s: &Support, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    p.check_support(s)?;
    if p.target_values().iter().all(|&v| v == 0.0) {
        return Ok(zero_result(p, s));
    }
    let tries = attempts(p, s, cfg)?;
    let starts_used = tries.len();
    let best = tries
        .into_iter()
        .reduce(|a, b| if b.residual < a.residual { b } else { a })
        .ok_or_else(|| Error::InvalidInput("no finite start".into()))?;
    Ok(RecoveryResult {
        field: p.field(),
        support: s.clone(),
        coeffs: canonicalize(&best.coeffs, p.field()),
        residual: best.residual,
        converged: best.residual <= cfg.accept_tol,
        canonical: true,
        ambiguity: None,
        starts_used,
    })
}

/// Every accepted solution on `s` over all starts, canonicalized.
pub fn accepted_solutions(p: &RecoveryProblem, s: &Support, cfg: &RecoveryConfig) -> Result<Vec<(Vec<Complex64>, f64)>> {
    let cfg = RecoveryConfig { stop_on_accept: false, ..*cfg };
    Ok(attempts(p, s, &cfg)?
        .into_iter()
        .filter(|a| a.residual <= cfg.accept_tol)
        .map(|a| (canonicalize(&a.coeffs, p.field()), a.residual))
        .collect())
}

/// Solves on every `m`-subset (lexicographic order) and returns the best
/// fit, flagging a second accepted support whose embedded solution differs.
pub fn solve_support_search(p: &RecoveryProblem, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let n = p.basis.n();
    let count = binomial(n, p.m);
    if count > cfg.enumeration_cap as u128 {
        return Err(Error::EnumerationCap { count, cap: cfg.enumeration_cap });
    }
    let supports: Vec<Support> = Support::all(n, p.m).collect();
    let results = supports.par_iter().map(|s| solve_fixed_support(p, s, cfg)).collect::<Result<Vec<_>>>()?;
    let best_idx = (0..results.len())
        .reduce(|a, b| if results[b].residual < results[a].residual { b } else { a })
        .expect("at least one support");
    let best_signal = results[best_idx].signal(&p.basis);
    let ambiguity = results.iter().enumerate().find_map(|(i, r)| {
        if i == best_idx || !r.converged || !results[best_idx].converged {
            return None;
        }
        let other = r.signal(&p.basis);
        (!equivalent_up_to_phase(&best_signal, &other, p.field(), cfg.ambiguity_tol))
            .then(|| Ambiguity { support: r.support.clone(), coeffs: r.coeffs.clone(), residual: r.residual })
    });
    let starts_used = results.iter().map(|r| r.starts_used).sum();
    let mut best = results[best_idx].clone();
    best.ambiguity = ambiguity;
    best.starts_used = starts_used;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{embed, sample_generic_basis, sample_sparse_vector, SparseVector};
    use crate::signal::{measure_reduced, power_spectrum, Signal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_problem(basis: &Basis, v: &SparseVector) -> RecoveryProblem {
        let x = embed(v, basis).unwrap();
        RecoveryProblem::new(basis.clone(), v.support.m(), Target::Reduced(measure_reduced(&x).unwrap())).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[c(-1.0, 0.0), c(2.0, 0.0)], Field::Real), vec![c(1.0, 0.0), c(-2.0, 0.0)]);
        let out = canonicalize(&[c(0.0, 1.0), c(1.0, 0.0)], Field::Complex);
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-15 && (out[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(canonicalize(&[c(0.0, 0.0)], Field::Real), vec![c(0.0, 0.0)]);
        let small = canonicalize(&[c(-1e-12, 0.0), c(-3.0, 0.0)], Field::Real);
        assert_eq!(small[1], c(3.0, 0.0));
    }

    #[test]
    fn equivalence_examples() {
        let x = vec![c(1.0, 0.0), c(-2.0, 0.0), c(0.5, 0.0)];
        let neg: Vec<_> = x.iter().map(|z| -z).collect();
        assert!(equivalent_up_to_phase(&x, &neg, Field::Real, 1e-12));
        let z = vec![c(1.0, 2.0), c(-0.3, 0.1)];
        let t = Complex64::from_polar(1.0, 2.1);
        let rot: Vec<_> = z.iter().map(|v| v * t).collect();
        assert!(equivalent_up_to_phase(&z, &rot, Field::Complex, 1e-12));
        assert!(!equivalent_up_to_phase(&z, &rot, Field::Real, 1e-6));
    }

    #[test]
    fn recovers_on_true_support() {
        let basis = sample_generic_basis(16, Field::Real, 21).unwrap();
        let s = Support::new(vec![1, 5, 9, 14], 16).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 4).unwrap();
        let res = solve_fixed_support(&real_problem(&basis, &v), &s, &RecoveryConfig::default()).unwrap();
        assert!(res.converged && res.residual < 1e-10);
        assert!(equivalent_up_to_phase(&res.coeffs, &v.coeffs, Field::Real, 1e-6));
    }

    #[test]
    fn zero_target_gives_zero_solution() {
        let basis = sample_generic_basis(6, Field::Real, 1).unwrap();
        let p = RecoveryProblem::new(basis, 2, Target::Reduced(ReducedMeasurement { values: vec![0.0; 4] })).unwrap();
        let res = solve_fixed_support(&p, &Support::new(vec![0, 1], 6).unwrap(), &RecoveryConfig::default()).unwrap();
        assert_eq!(res.residual, 0.0);
        assert!(res.coeffs.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn full_support_identity_fits_without_uniqueness() {
        let basis = Basis::identity(6, Field::Real).unwrap();
        let s = Support::new((0..6).collect(), 6).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 8).unwrap();
        let res = solve_fixed_support(&real_problem(&basis, &v), &s, &RecoveryConfig::default()).unwrap();
        assert!(res.residual < 1e-10);
    }

    #[test]
    fn support_search_generic_and_shift_ambiguity() {
        let basis = sample_generic_basis(12, Field::Real, 2).unwrap();
        let s = Support::new(vec![2, 6, 7], 12).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 3).unwrap();
        let res = solve_support_search(&real_problem(&basis, &v), &RecoveryConfig::default()).unwrap();
        assert_eq!(res.support, s);
        assert!(res.ambiguity.is_none());

        let id = Basis::identity(8, Field::Real).unwrap();
        let s = Support::new(vec![0, 1, 2], 8).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 5).unwrap();
        let res = solve_support_search(&real_problem(&id, &v), &RecoveryConfig::default()).unwrap();
        assert!(res.ambiguity.is_some());
    }

    #[test]
    fn single_atom_support_is_unique() {
        let basis = sample_generic_basis(7, Field::Real, 6).unwrap();
        let s = Support::new(vec![4], 7).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 1).unwrap();
        let res = solve_support_search(&real_problem(&basis, &v), &RecoveryConfig::default()).unwrap();
        assert_eq!(res.support, s);
        assert!(res.ambiguity.is_none());
    }

    #[test]
    fn enumeration_cap() {
        let basis = sample_generic_basis(20, Field::Real, 1).unwrap();
        let p = RecoveryProblem::new(basis, 10, Target::Reduced(ReducedMeasurement { values: vec![1.0; 11] })).unwrap();
        assert!(matches!(solve_support_search(&p, &RecoveryConfig::default()), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn complex_recovery_up_to_phase() {
        let basis = sample_generic_basis(10, Field::Complex, 12).unwrap();
        let s = Support::new(vec![0, 3, 8], 10).unwrap();
        let v = sample_sparse_vector(&s, Field::Complex, 2).unwrap();
        let x = embed(&v, &basis).unwrap();
        let p = RecoveryProblem::new(basis.clone(), 3, Target::PowerSpectrum(power_spectrum(&x))).unwrap();
        let res = solve_fixed_support(&p, &s, &RecoveryConfig::default()).unwrap();
        assert!(res.converged);
        assert!(equivalent_up_to_phase(&res.signal(&basis), x.entries(), Field::Complex, 1e-6));
    }

    #[test]
    fn power_spectrum_and_reduced_targets_agree() {
        let basis = sample_generic_basis(10, Field::Real, 5).unwrap();
        let s = Support::new(vec![1, 2, 6], 10).unwrap();
        let v = sample_sparse_vector(&s, Field::Real, 9).unwrap();
        let x: Signal = embed(&v, &basis).unwrap();
        let cfg = RecoveryConfig::default();
        let a = solve_fixed_support(&real_problem(&basis, &v), &s, &cfg).unwrap();
        let p = RecoveryProblem::new(basis.clone(), 3, Target::PowerSpectrum(power_spectrum(&x))).unwrap();
        let b = solve_fixed_support(&p, &s, &cfg).unwrap();
        assert!(equivalent_up_to_phase(&a.coeffs, &b.coeffs, Field::Real, 1e-6));
    }

    #[test]
    fn problem_validation() {
        let basis = sample_generic_basis(6, Field::Complex, 1).unwrap();
        assert!(matches!(
            RecoveryProblem::new(basis.clone(), 2, Target::Reduced(ReducedMeasurement { values: vec![1.0; 4] })),
            Err(Error::FieldMismatch(_))
        ));
        assert!(RecoveryProblem::new(basis, 2, Target::PowerSpectrum(PowerSpectrum { values: vec![1.0; 5] })).is_err());
    }
}
