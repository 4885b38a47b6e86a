//! Search for low-rank symmetric matrices in the kernel of a single-frame
//! operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::operator::{symmetric_unvec, MeasurementOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::linalg::null_space;
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub starts: usize,
    pub max_iter: usize,
    /// Relative singular-value threshold defining the null space.
    pub null_tol: f64,
    /// `sigma_3` below which a candidate is reported.
    pub rank_tol: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { starts: 50, max_iter: 2000, null_tol: 1e-10, rank_tol: 1e-8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub null_dim: usize,
    /// Singular values of the operator matrix, decreasing.
    pub singular_values: Vec<f64>,
    /// Smallest third singular value found on the unit sphere of the kernel.
    pub min_sigma3: Option<f64>,
    /// Kernel element of rank at most two, Frobenius-normalized.
    pub candidate: Option<DMatrix<f64>>,
}

impl ProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "null_dim": self.null_dim,
            "singular_values": self.singular_values,
            "min_sigma3": self.min_sigma3,
            "candidate": self.candidate.as_ref().map(|c| c.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()),
        })
    }
}

/// Symmetric-coordinate vector scaled so the Euclidean norm equals the
/// Frobenius norm (off-diagonal slots carry a factor `sqrt 2`).
fn scale_factors(m: usize) -> Vec<f64> {
    (0..m).map(|_| 1.0).chain((0..m * (m - 1) / 2).map(|_| std::f64::consts::SQRT_2)).collect()
}

fn matrix_of(v: &DVector<f64>, scale: &[f64], m: usize) -> DMatrix<f64> {
    let raw: Vec<f64> = v.iter().zip(scale).map(|(a, s)| a / s).collect();
    symmetric_unvec(&raw, m)
}

fn scaled_vec(a: &DMatrix<f64>, scale: &[f64]) -> DVector<f64> {
    let raw = super::operator::symmetric_vec(a);
    DVector::from_iterator(raw.len(), raw.iter().zip(scale).map(|(a, s)| a * s))
}

/// Eigenvalues sorted by decreasing modulus, with eigenvectors.
fn sorted_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].abs().total_cmp(&e.eigenvalues[i].abs()));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn sigma3(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sorted_eigen(a);
    vals.get(2).map_or(0.0, |v| v.abs())
}

fn truncate_rank2(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sorted_eigen(a);
    let mut out = DMatrix::zeros(a.nrows(), a.nrows());
    for (c, val) in vals.iter().enumerate().take(2) {
        let v = vecs.column(c);
        out += *val * v * v.transpose();
    }
    out
}

/// Null space of the explicit real-single operator and a multistart
/// alternating-projection search for a rank-two element in it.
pub fn kernel_low_rank_probe(op: &MeasurementOperator, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if op.kind() != OperatorKind::RealSingle {
        return Err(Error::InvalidInput("the kernel probe acts on single-frame operators".into()));
    }
    let m = op.m();
    let scale = scale_factors(m);
    let scaled = DMatrix::from_fn(op.dimension(), op.domain_dim(), |k, c| op.matrix()[(k, c)] / scale[c]);
    let (kernel, singular_values) = null_space(&scaled, cfg.null_tol);
    let singular_values: Vec<f64> = singular_values.into_iter().take(op.dimension().min(op.domain_dim())).collect();
    let null_dim = kernel.ncols();
    if null_dim == 0 {
        return Ok(ProbeReport { null_dim, singular_values, min_sigma3: None, candidate: None });
    }

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for start in 0..cfg.starts.max(1) {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, &[start as u64]));
        let mut c = DVector::from_iterator(null_dim, gaussian_vec(&mut rng, null_dim, false).iter().map(|z| z.re));
        c /= c.norm();
        let mut a = matrix_of(&(&kernel * &c), &scale, m);
        let mut s3 = sigma3(&a);
        for _ in 0..cfg.max_iter {
            if s3 < cfg.rank_tol * 1e-4 {
                break;
            }
            let projected = kernel.transpose() * scaled_vec(&truncate_rank2(&a), &scale);
            let len = projected.norm();
            if len == 0.0 {
                break;
            }
            let next = matrix_of(&(&kernel * (projected / len)), &scale, m);
            let next_s3 = sigma3(&next);
            let stalled = next_s3 > s3 * (1.0 - 1e-9);
            a = next;
            s3 = next_s3;
            if stalled {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| s3 < *b) {
            best = Some((s3, a));
        }
    }
    let (s3, a) = best.expect("at least one start");
    Ok(ProbeReport {
        null_dim,
        singular_values,
        min_sigma3: Some(s3),
        candidate: (s3 < cfg.rank_tol).then_some(a),
    })
}
