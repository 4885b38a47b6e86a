//! Lifted linear measurement operators.
//!
//! Squared-modulus measurements of a frame are linear in the rank-one matrix
//! `x x^*`. The operators here act on (pairs of) Hermitian or real symmetric
//! `M x M` matrices, vectorized as: diagonal entries, then the real parts of
//! the strictly upper entries in row-major order, then (Hermitian only) their
//! imaginary parts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frame, OverlappingFramePair};
use crate::quad::{reduced_groups, singleton_groups, Groups, QuadModel};
use crate::signal::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    ComplexPair,
    RealPair,
    RealSingle,
}

impl OperatorKind {
    pub fn field(self) -> Field {
        match self {
            OperatorKind::ComplexPair => Field::Complex,
            _ => Field::Real,
        }
    }

    pub fn is_pair(self) -> bool {
        !matches!(self, OperatorKind::RealSingle)
    }
}

/// Explicit real matrix of a lifted operator together with the frames it
/// was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    kind: OperatorKind,
    groups: Groups,
    alpha: DMatrix<Complex64>,
    beta: Option<DMatrix<Complex64>>,
    overlap: usize,
    matrix: DMatrix<f64>,
}

pub fn hermitian_dim(m: usize) -> usize {
    m * m
}

pub fn symmetric_dim(m: usize) -> usize {
    m * (m + 1) / 2
}

fn upper_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |k| (k + 1..m).map(move |l| (k, l)))
}

/// Real coordinates of a Hermitian matrix.
pub fn hermitian_vec(a: &DMatrix<Complex64>) -> Vec<f64> {
    let m = a.nrows();
    let mut v: Vec<f64> = (0..m).map(|k| a[(k, k)].re).collect();
    v.extend(upper_pairs(m).map(|(k, l)| a[(k, l)].re));
    v.extend(upper_pairs(m).map(|(k, l)| a[(k, l)].im));
    v
}

pub fn hermitian_unvec(v: &[f64], m: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(m, m);
    for k in 0..m {
        a[(k, k)] = Complex64::new(v[k], 0.0);
    }
    let off = m * (m - 1) / 2;
    for (p, (k, l)) in upper_pairs(m).enumerate() {
        let z = Complex64::new(v[m + p], v[m + off + p]);
        a[(k, l)] = z;
        a[(l, k)] = z.conj();
    }
    a
}

/// Real coordinates of a symmetric matrix.
pub fn symmetric_vec(a: &DMatrix<f64>) -> Vec<f64> {
    let m = a.nrows();
    (0..m).map(|k| a[(k, k)]).chain(upper_pairs(m).map(|(k, l)| a[(k, l)])).collect()
}

pub fn symmetric_unvec(v: &[f64], m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for k in 0..m {
        a[(k, k)] = v[k];
    }
    for (p, (k, l)) in upper_pairs(m).enumerate() {
        a[(k, l)] = v[m + p];
        a[(l, k)] = v[m + p];
    }
    a
}

/// Coefficients `w` with `w . hermitian_vec(A) = u^* A u`.
fn hermitian_row(u: &[Complex64]) -> Vec<f64> {
    let m = u.len();
    let mut w: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
    let cross: Vec<Complex64> = upper_pairs(m).map(|(k, l)| u[k].conj() * u[l]).collect();
    w.extend(cross.iter().map(|c| 2.0 * c.re));
    w.extend(cross.iter().map(|c| -2.0 * c.im));
    w
}

/// Coefficients `w` with `w . symmetric_vec(A) = u^T A u`.
fn symmetric_row(u: &[f64]) -> Vec<f64> {
    let m = u.len();
    u.iter().map(|v| v * v).chain(upper_pairs(m).map(|(k, l)| 2.0 * u[k] * u[l])).collect()
}

fn column(a: &DMatrix<Complex64>, j: usize) -> Vec<Complex64> {
    a.column(j).iter().copied().collect()
}

fn grouped_rows(groups: &Groups, frame: &DMatrix<Complex64>, complex: bool) -> Vec<Vec<f64>> {
    let row = |j: usize| {
        let col = column(frame, j);
        if complex {
            // u = conj(alpha) makes u^* (x x^*) u = |alpha^T x|^2.
            hermitian_row(&col.iter().map(|z| z.conj()).collect::<Vec<_>>())
        } else {
            symmetric_row(&col.iter().map(|z| z.re).collect::<Vec<_>>())
        }
    };
    groups
        .iter()
        .map(|&(a, b)| {
            let mut r = row(a);
            if let Some(b) = b {
                for (x, y) in r.iter_mut().zip(row(b)) {
                    *x += y;
                }
            }
            r
        })
        .collect()
}

fn pair_matrix(plus: Vec<Vec<f64>>, minus: Vec<Vec<f64>>) -> DMatrix<f64> {
    let d = plus.len();
    let half = plus[0].len();
    DMatrix::from_fn(d, 2 * half, |k, c| if c < half { plus[k][c] } else { -minus[k][c - half] })
}

fn require_field(f: &Frame, field: Field) -> Result<()> {
    if f.field() != field {
        return Err(Error::FieldMismatch(format!("expected a {field} frame, got {}", f.field())));
    }
    Ok(())
}

/// `(A, B) -> (u_j^* A u_j - v_j^* B v_j)_j` with `u_j`, `v_j` the conjugated
/// columns of the two frames.
pub fn build_complex_pair_operator(p: &OverlappingFramePair) -> Result<MeasurementOperator> {
    require_field(&p.first, Field::Complex)?;
    require_field(&p.second, Field::Complex)?;
    let (alpha, beta) = (p.first.matrix().clone(), p.second.matrix().clone());
    if alpha.shape() != beta.shape() {
        return Err(Error::DimensionMismatch { expected: alpha.ncols(), got: beta.ncols() });
    }
    let groups = singleton_groups(alpha.ncols());
    let matrix = pair_matrix(grouped_rows(&groups, &alpha, true), grouped_rows(&groups, &beta, true));
    Ok(MeasurementOperator { kind: OperatorKind::ComplexPair, groups, alpha, beta: Some(beta), overlap: p.s, matrix })
}

/// Grouped differences over `{0}`, `{k, N-k}` and `{N/2}` of the two real
/// frames' quadratic forms.
pub fn build_real_pair_operator(p: &OverlappingFramePair) -> Result<MeasurementOperator> {
    require_field(&p.first, Field::Real)?;
    require_field(&p.second, Field::Real)?;
    let (alpha, beta) = (p.first.matrix().clone(), p.second.matrix().clone());
    let groups = reduced_groups(alpha.ncols());
    let matrix = pair_matrix(grouped_rows(&groups, &alpha, false), grouped_rows(&groups, &beta, false));
    Ok(MeasurementOperator { kind: OperatorKind::RealPair, groups, alpha, beta: Some(beta), overlap: p.s, matrix })
}

/// Grouped quadratic forms of one real frame on a single symmetric matrix.
pub fn build_real_single_operator(f: &Frame) -> Result<MeasurementOperator> {
    require_field(f, Field::Real)?;
    let alpha = f.matrix().clone();
    let groups = reduced_groups(alpha.ncols());
    let rows = grouped_rows(&groups, &alpha, false);
    let matrix = DMatrix::from_fn(rows.len(), rows[0].len(), |k, c| rows[k][c]);
    let overlap = f.m();
    Ok(MeasurementOperator { kind: OperatorKind::RealSingle, groups, alpha, beta: None, overlap, matrix })
}

impl MeasurementOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn field(&self) -> Field {
        self.kind.field()
    }

    /// Output dimension `D`.
    pub fn dimension(&self) -> usize {
        self.groups.len()
    }

    /// Real dimension of the domain.
    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn m(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn n(&self) -> usize {
        self.alpha.ncols()
    }

    /// Number of shared frame rows (`M` for a single frame).
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    pub fn first_frame(&self) -> &DMatrix<Complex64> {
        &self.alpha
    }

    /// The second frame; the first one again for single-frame operators.
    pub fn second_frame(&self) -> &DMatrix<Complex64> {
        self.beta.as_ref().unwrap_or(&self.alpha)
    }

    /// Applies the explicit matrix to a vectorized input.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), got: v.len() });
        }
        Ok((0..self.dimension()).map(|k| self.matrix.row(k).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// Applies the operator to `(A, B)`; `B` is ignored for single-frame
    /// operators. Only the Hermitian (or symmetric) part is read.
    pub fn apply_matrices(&self, a: &DMatrix<Complex64>, b: Option<&DMatrix<Complex64>>) -> Result<Vec<f64>> {
        let m = self.m();
        let check = |x: &DMatrix<Complex64>| -> Result<()> {
            if x.shape() != (m, m) {
                return Err(Error::DimensionMismatch { expected: m, got: x.nrows() });
            }
            Ok(())
        };
        check(a)?;
        let vec_of = |x: &DMatrix<Complex64>| match self.kind {
            OperatorKind::ComplexPair => hermitian_vec(x),
            _ => symmetric_vec(&x.map(|z| z.re)),
        };
        let mut v = vec_of(a);
        if self.kind.is_pair() {
            let b = b.ok_or_else(|| Error::InvalidInput("pair operators take two matrices".into()))?;
            check(b)?;
            v.extend(vec_of(b));
        }
        self.apply(&v)
    }

    /// `op(x x^*, y y^*)` through the explicit matrix.
    pub fn apply_rank_one(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<f64>> {
        let outer = |v: &[Complex64]| DMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj());
        match self.kind {
            OperatorKind::RealSingle => {
                if x.len() != self.m() || y.len() != self.m() {
                    return Err(Error::DimensionMismatch { expected: self.m(), got: x.len().max(y.len()) });
                }
                self.apply_matrices(&(outer(x) - outer(y)), None)
            }
            _ => self.apply_matrices(&outer(x), Some(&outer(y))),
        }
    }

    /// The same quantity evaluated from the frames directly:
    /// `sum_{j in G_k} |alpha_j^T x|^2 - |beta_j^T y|^2`.
    pub fn direct_difference(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<f64>> {
        let m = self.m();
        if x.len() != m || y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: x.len().max(y.len()) });
        }
        let zx = self.lift(x, false);
        let zy = self.lift(y, true);
        Ok(self
            .groups
            .iter()
            .map(|&(a, b)| {
                let g = |z: &[Complex64]| z[a].norm_sqr() + b.map_or(0.0, |b| z[b].norm_sqr());
                g(&zx) - g(&zy)
            })
            .collect())
    }

    /// `z_j = alpha_j^T x` (or with the second frame).
    pub fn lift(&self, x: &[Complex64], second: bool) -> Vec<Complex64> {
        let f = if second { self.second_frame() } else { &self.alpha };
        (0..self.n()).map(|j| (0..self.m()).map(|i| x[i] * f[(i, j)]).sum()).collect()
    }

    /// Quadratic models of the two frames in real parameters.
    pub(crate) fn models(&self) -> (QuadModel, QuadModel) {
        let complex = self.kind == OperatorKind::ComplexPair;
        (
            QuadModel::from_frame(&self.alpha, complex, self.groups.clone()),
            QuadModel::from_frame(self.second_frame(), complex, self.groups.clone()),
        )
    }

    /// The same operator with the frames exchanged.
    pub fn swapped(&self) -> Self {
        let Some(beta) = &self.beta else { return self.clone() };
        let half = self.domain_dim() / 2;
        let matrix = DMatrix::from_fn(self.dimension(), self.domain_dim(), |k, c| {
            if c < half {
                -self.matrix[(k, c + half)]
            } else {
                -self.matrix[(k, c - half)]
            }
        });
        Self { kind: self.kind, groups: self.groups.clone(), alpha: beta.clone(), beta: Some(self.alpha.clone()), overlap: self.overlap, matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{embed, fourier_frame, frame_from_basis, overlapping_pair_from_basis, sample_generic_basis, sample_sparse_vector, Support};
    use crate::rng::{gaussian_vec, rng_from_seed};
    use crate::signal::{measure_reduced, reduced_b, real_dft};

    fn random_frame(m: usize, n: usize, field: Field, seed: u64) -> Frame {
        let mut rng = rng_from_seed(seed);
        Frame::new(field, DMatrix::from_vec(m, n, gaussian_vec(&mut rng, m * n, field.is_complex()))).unwrap()
    }

    fn random_hermitian(m: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = rng_from_seed(seed);
        let g = DMatrix::from_vec(m, m, gaussian_vec(&mut rng, m * m, true));
        &g + g.adjoint()
    }

    #[test]
    fn vectorization_round_trips() {
        let a = random_hermitian(4, 1);
        assert_eq!(hermitian_vec(&a).len(), hermitian_dim(4));
        assert!((hermitian_unvec(&hermitian_vec(&a), 4) - &a).norm() < 1e-14);
        let s = a.map(|z| z.re);
        assert_eq!(symmetric_unvec(&symmetric_vec(&s), 4), s);
    }

    #[test]
    fn identical_frames_cancel() {
        let f = random_frame(3, 7, Field::Complex, 2);
        let p = OverlappingFramePair::new(f.clone(), f, 3).unwrap();
        let op = build_complex_pair_operator(&p).unwrap();
        let a = random_hermitian(3, 3);
        assert!(op.apply_matrices(&a, Some(&a)).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert_eq!(op.dimension(), 7);
        assert_eq!(op.domain_dim(), 18);
    }

    #[test]
    fn complex_rank_one_matches_inner_products() {
        let mut rng = rng_from_seed(4);
        let p = OverlappingFramePair::new(random_frame(3, 8, Field::Complex, 5), random_frame(3, 8, Field::Complex, 6), 0).unwrap();
        let op = build_complex_pair_operator(&p).unwrap();
        let x = gaussian_vec(&mut rng, 3, true);
        let y = gaussian_vec(&mut rng, 3, true);
        let lifted = op.apply_rank_one(&x, &y).unwrap();
        for i in 0..8 {
            // <x, conj(alpha_i)>, conjugate-linear in the second slot.
            let ip = |v: &[Complex64], f: &DMatrix<Complex64>| -> f64 {
                let w: Vec<Complex64> = (0..3).map(|k| f[(k, i)].conj()).collect();
                (0..3).map(|k| v[k] * w[k].conj()).sum::<Complex64>().norm_sqr()
            };
            let expect = ip(&x, p.first.matrix()) - ip(&y, p.second.matrix());
            assert!((lifted[i] - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn scalar_complex_operator() {
        let a = DMatrix::from_row_slice(1, 3, &[Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0), Complex64::new(-3.0, 0.0)]);
        let b = DMatrix::from_row_slice(1, 3, &[Complex64::new(0.5, 0.0), Complex64::new(1.0, -1.0), Complex64::new(0.0, 1.0)]);
        let p = OverlappingFramePair::new(Frame::new(Field::Complex, a.clone()).unwrap(), Frame::new(Field::Complex, b.clone()).unwrap(), 0).unwrap();
        let op = build_complex_pair_operator(&p).unwrap();
        for i in 0..3 {
            assert!((op.matrix()[(i, 0)] - a[(0, i)].norm_sqr()).abs() < 1e-15);
            assert!((op.matrix()[(i, 1)] + b[(0, i)].norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_form_matches_real_decomposition() {
        let mut rng = rng_from_seed(9);
        for seed in 0..50 {
            let a = random_hermitian(4, 100 + seed);
            let u = gaussian_vec(&mut rng, 4, true);
            let direct: f64 = hermitian_row(&u).iter().zip(hermitian_vec(&a)).map(|(w, v)| w * v).sum();
            let sym = a.map(|z| z.re);
            let anti = a.map(|z| z.im);
            let ur = nalgebra::DVector::from_iterator(4, u.iter().map(|z| z.re));
            let ui = nalgebra::DVector::from_iterator(4, u.iter().map(|z| z.im));
            let split = ur.dot(&(&sym * &ur)) + ui.dot(&(&sym * &ui)) - 2.0 * ur.dot(&(&anti * &ui));
            assert!((direct - split).abs() < 1e-10 * (1.0 + split.abs()));
        }
    }

    #[test]
    fn real_pair_matches_reduced_measurements_end_to_end() {
        let basis = sample_generic_basis(9, Field::Real, 3).unwrap();
        let s1 = Support::new(vec![0, 2, 5], 9).unwrap();
        let s2 = Support::new(vec![2, 3, 7], 9).unwrap();
        let pair = overlapping_pair_from_basis(&basis, &s1, &s2).unwrap();
        let op = build_real_pair_operator(&pair.map_frames(fourier_frame).unwrap()).unwrap();
        assert_eq!(op.dimension(), 5);
        let x = sample_sparse_vector(&s1, Field::Real, 1).unwrap();
        let y = sample_sparse_vector(&s2, Field::Real, 2).unwrap();
        // Frame coefficients follow the pair's row order.
        let reorder = |v: &crate::model::SparseVector, rows: &[usize]| -> Vec<Complex64> {
            rows.iter().map(|r| v.coeffs[v.support.indices().iter().position(|i| i == r).unwrap()]).collect()
        };
        let lifted = op.apply_rank_one(&reorder(&x, &pair.rows_first), &reorder(&y, &pair.rows_second)).unwrap();
        let bx = measure_reduced(&embed(&x, &basis).unwrap()).unwrap().values;
        let by = reduced_b(&real_dft(&embed(&y, &basis).unwrap()).unwrap()).values;
        for k in 0..5 {
            let expect = bx[k] - by[k];
            assert!((lifted[k] - expect).abs() < 1e-9 * (1.0 + bx[k].abs() + by[k].abs()));
        }
    }

    #[test]
    fn real_pair_scalar_case() {
        let a = DMatrix::from_row_slice(1, 5, &[1.0, 2.0, -1.0, 0.5, 3.0]).map(|v| Complex64::new(v, 0.0));
        let b = DMatrix::from_row_slice(1, 5, &[2.0, 1.0, 1.0, -2.0, 0.0]).map(|v| Complex64::new(v, 0.0));
        let p = OverlappingFramePair::new(Frame::new(Field::Real, a.clone()).unwrap(), Frame::new(Field::Real, b.clone()).unwrap(), 0).unwrap();
        let op = build_real_pair_operator(&p).unwrap();
        let (x, y) = (1.5, -0.7);
        let out = op.apply_rank_one(&[Complex64::new(x, 0.0)], &[Complex64::new(y, 0.0)]).unwrap();
        let sq = |f: &DMatrix<Complex64>, j: usize| f[(0, j)].re * f[(0, j)].re;
        for (k, o) in out.iter().enumerate().take(3).skip(1) {
            let expect = (sq(&a, k) + sq(&a, 5 - k)) * x * x - (sq(&b, k) + sq(&b, 5 - k)) * y * y;
            assert!((o - expect).abs() < 1e-12);
        }
        assert!((out[0] - (sq(&a, 0) * x * x - sq(&b, 0) * y * y)).abs() < 1e-12);
    }

    #[test]
    fn real_single_on_difference_of_rank_ones() {
        let f = random_frame(3, 10, Field::Real, 8);
        let op = build_real_single_operator(&f).unwrap();
        assert_eq!(op.dimension(), 6);
        assert_eq!(op.domain_dim(), 6);
        let mut rng = rng_from_seed(10);
        let x = gaussian_vec(&mut rng, 3, false);
        let y = gaussian_vec(&mut rng, 3, false);
        let lifted = op.apply_rank_one(&x, &y).unwrap();
        let direct = op.direct_difference(&x, &y).unwrap();
        assert!(lifted.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(op.apply(&[0.0; 6]).unwrap().iter().all(|&v| v == 0.0));
        for c in 0..6 {
            let mut e = vec![0.0; 6];
            e[c] = 1.0;
            let out = op.apply(&e).unwrap();
            assert!((0..6).all(|k| out[k] == op.matrix()[(k, c)]));
        }
    }

    #[test]
    fn linearity() {
        let p = OverlappingFramePair::new(random_frame(2, 6, Field::Complex, 11), random_frame(2, 6, Field::Complex, 12), 0).unwrap();
        let op = build_complex_pair_operator(&p).unwrap();
        let (a1, b1, a2, b2) = (random_hermitian(2, 1), random_hermitian(2, 2), random_hermitian(2, 3), random_hermitian(2, 4));
        let (s, t) = (0.7, -2.3);
        let sc = |v: f64| Complex64::new(v, 0.0);
        let lhs = op.apply_matrices(&(a1.map(|z| z * sc(s)) + a2.map(|z| z * sc(t))), Some(&(b1.map(|z| z * sc(s)) + b2.map(|z| z * sc(t))))).unwrap();
        let r1 = op.apply_matrices(&a1, Some(&b1)).unwrap();
        let r2 = op.apply_matrices(&a2, Some(&b2)).unwrap();
        for k in 0..6 {
            assert!((lhs[k] - (s * r1[k] + t * r2[k])).abs() < 1e-12 * (1.0 + lhs[k].abs()));
        }
    }

    #[test]
    fn swapping_negates() {
        let p = OverlappingFramePair::new(random_frame(2, 6, Field::Real, 13), random_frame(2, 6, Field::Real, 14), 0).unwrap();
        let op = build_real_pair_operator(&p).unwrap();
        let sw = build_real_pair_operator(&p.swapped()).unwrap();
        assert!((op.swapped().matrix() - sw.matrix()).norm() < 1e-14);
    }

    #[test]
    fn field_is_checked() {
        let f = frame_from_basis(&sample_generic_basis(4, Field::Real, 1).unwrap(), &Support::new(vec![0, 1], 4).unwrap()).unwrap();
        let p = OverlappingFramePair::new(f.clone(), f, 2).unwrap();
        assert!(matches!(build_complex_pair_operator(&p), Err(Error::FieldMismatch(_))));
    }
}
