//! Sparsity model: generic bases, supports, sparse vectors and the frames
//! obtained by selecting basis rows.
//!
//! A basis is stored as an `N x N` matrix whose rows are the ordered basis
//! vectors `v_0..v_{N-1}`. Selecting the rows indexed by a support `S` gives
//! an `M x N` frame matrix whose columns are the frame vectors; the
//! synthesis map `c -> A^T c` of that matrix is the embedding of an
//! `M`-sparse coefficient vector into `K^N`.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{gaussian_vec, rng_from_seed};
use crate::signal::{dft_matrix, real_dft_matrix, vector_from_json, vector_to_json, Field, Signal};

pub const DEFAULT_CONDITION_CAP: f64 = 1e6;
const MAX_BASIS_DRAWS: usize = 100;
const FRAME_RANK_TOL: f64 = 1e-10;

/// Ordered basis of `K^N`, one basis vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    field: Field,
    matrix: DMatrix<Complex64>,
    condition: f64,
}

impl Basis {
    /// Validates a square, invertible matrix with condition number at most
    /// [`DEFAULT_CONDITION_CAP`].
    pub fn new(field: Field, matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_cap(field, matrix, DEFAULT_CONDITION_CAP)
    }

    pub fn with_cap(field: Field, matrix: DMatrix<Complex64>, cap: f64) -> Result<Self> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "basis matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_field(field, &matrix)?;
        let condition = linalg::condition_number(&matrix);
        if condition.is_nan() || condition > cap {
            return Err(Error::InvalidInput(format!("basis condition number {condition:e} exceeds cap {cap:e}")));
        }
        Ok(Self { field, matrix, condition })
    }

    /// The standard basis `e_0..e_{N-1}`.
    pub fn identity(n: usize, field: Field) -> Result<Self> {
        Self::new(field, DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn row(&self, i: usize) -> Vec<Complex64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Coordinates of `x` in this basis (solves `sum_i c_i v_i = x`).
    pub fn coefficients(&self, x: &Signal) -> Result<Vec<Complex64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        linalg::solve(&self.matrix.transpose(), x.entries())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "field": self.field,
            "n": self.n(),
            "condition": self.condition,
            "rows": matrix_rows_json(self.field, &self.matrix),
        })
    }

    /// Accepts the object written by [`Basis::to_json`] or a bare row-major
    /// array (field inferred from the entry shape).
    pub fn from_json(value: &Value) -> Result<Self> {
        let (field, matrix) = matrix_from_json(value)?;
        Self::new(field, matrix)
    }
}

fn check_field(field: Field, m: &DMatrix<Complex64>) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    if field == Field::Real && m.iter().any(|z| z.im != 0.0) {
        return Err(Error::FieldMismatch("real matrix with non-zero imaginary part".into()));
    }
    Ok(())
}

fn matrix_rows_json(field: Field, m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| vector_to_json(field, &r.iter().copied().collect::<Vec<_>>()))
            .collect(),
    )
}

fn matrix_from_json(value: &Value) -> Result<(Field, DMatrix<Complex64>)> {
    let (declared, rows) = match value {
        Value::Object(map) => {
            let field = map
                .get("field")
                .map(|f| serde_json::from_value::<Field>(f.clone()))
                .transpose()?;
            let rows = map.get("rows").ok_or_else(|| Error::Parse("missing `rows`".into()))?;
            (field, rows)
        }
        other => (None, other),
    };
    let rows = rows.as_array().ok_or_else(|| Error::Parse("`rows` must be an array".into()))?;
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let parsed = rows.iter().map(vector_from_json).collect::<Result<Vec<_>>>()?;
    let cols = parsed[0].1.len();
    if parsed.iter().any(|(_, r)| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    let inferred = if parsed.iter().any(|(f, _)| *f == Field::Complex) { Field::Complex } else { Field::Real };
    let field = declared.unwrap_or(inferred);
    let matrix = DMatrix::from_fn(parsed.len(), cols, |i, j| parsed[i].1[j]);
    Ok((field, matrix))
}

/// Strictly increasing, non-empty list of indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Support {
    indices: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Support {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("support must be non-empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!("support {indices:?} is not strictly increasing")));
        }
        Ok(Self { indices })
    }
}

impl From<Support> for Vec<usize> {
    fn from(s: Support) -> Self {
        s.indices
    }
}

impl Support {
    /// Validates against an ambient length `n`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let s = Self::try_from(indices)?;
        s.check_within(n)?;
        Ok(s)
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, n)
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, len: n }),
            _ => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &Support) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| other.contains(i)).collect()
    }

    /// Uniformly random `m`-subset of `0..n`.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidInput(format!("cannot draw a support of size {m} from {n}")));
        }
        let mut idx = rand::seq::index::sample(rng, n, m).into_vec();
        idx.sort_unstable();
        Self::new(idx, n)
    }

    /// All `m`-subsets of `0..n` in lexicographic order.
    pub fn all(n: usize, m: usize) -> impl Iterator<Item = Support> {
        (0..n).combinations(m).map(|indices| Support { indices })
    }
}

impl std::fmt::Display for Support {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}}}", self.indices.iter().join(","))
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `M x N` matrix of full row rank; the columns are the frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    field: Field,
    matrix: DMatrix<Complex64>,
}

impl Frame {
    pub fn new(field: Field, matrix: DMatrix<Complex64>) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 || n < m {
            return Err(Error::InvalidInput(format!("frame matrix must be M x N with 1 <= M <= N, got {m}x{n}")));
        }
        check_field(field, &matrix)?;
        let rank = linalg::numerical_rank(&matrix, FRAME_RANK_TOL);
        if rank < m {
            return Err(Error::RankDeficient { rank, expected: m });
        }
        Ok(Self { field, matrix })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    /// `L(v)_j = sum_i v_i A[i, j]`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: coeffs.len() });
        }
        Ok((0..self.n())
            .map(|j| coeffs.iter().enumerate().map(|(i, c)| c * self.matrix[(i, j)]).sum())
            .collect())
    }

    pub fn to_json(&self) -> Value {
        json!({ "field": self.field, "rows": matrix_rows_json(self.field, &self.matrix) })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let (field, matrix) = matrix_from_json(value)?;
        Self::new(field, matrix)
    }
}

/// Two frames sharing their first `s` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlappingFramePair {
    pub first: Frame,
    pub second: Frame,
    pub s: usize,
    /// Basis index of each row of `first` (positional when built directly).
    pub rows_first: Vec<usize>,
    pub rows_second: Vec<usize>,
}

impl OverlappingFramePair {
    /// Pairs two frames whose first `s` rows are identical.
    pub fn new(first: Frame, second: Frame, s: usize) -> Result<Self> {
        if first.field != second.field {
            return Err(Error::FieldMismatch("frames of a pair must share a field".into()));
        }
        if first.matrix.shape() != second.matrix.shape() {
            return Err(Error::DimensionMismatch { expected: first.m() * first.n(), got: second.m() * second.n() });
        }
        if s > first.m() {
            return Err(Error::InvalidInput(format!("overlap {s} exceeds M = {}", first.m())));
        }
        if first.matrix.rows(0, s) != second.matrix.rows(0, s) {
            return Err(Error::InvalidInput("the first s rows of the two frames differ".into()));
        }
        let m = first.m();
        Ok(Self { first, second, s, rows_first: (0..m).collect(), rows_second: (0..m).collect() })
    }

    /// The same pair with the roles of the frames exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
            s: self.s,
            rows_first: self.rows_second.clone(),
            rows_second: self.rows_first.clone(),
        }
    }

    /// Applies `f` to both frames.
    pub fn map_frames(&self, f: impl Fn(&Frame) -> Result<Frame>) -> Result<Self> {
        Ok(Self {
            first: f(&self.first)?,
            second: f(&self.second)?,
            s: self.s,
            rows_first: self.rows_first.clone(),
            rows_second: self.rows_second.clone(),
        })
    }
}

/// Coefficients on a support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub support: Support,
    pub field: Field,
    pub coeffs: Vec<Complex64>,
}

impl SparseVector {
    pub fn new(support: Support, field: Field, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != support.m() {
            return Err(Error::DimensionMismatch { expected: support.m(), got: coeffs.len() });
        }
        if field == Field::Real && coeffs.iter().any(|c| c.im != 0.0) {
            return Err(Error::FieldMismatch("real sparse vector with complex coefficients".into()));
        }
        Ok(Self { support, field, coeffs })
    }

    pub fn to_json(&self) -> Value {
        json!({ "field": self.field, "support": self.support, "coeffs": vector_to_json(self.field, &self.coeffs) })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let support: Support = serde_json::from_value(value["support"].clone())?;
        let (inferred, coeffs) = vector_from_json(&value["coeffs"])?;
        let field = match value.get("field") {
            Some(f) => serde_json::from_value(f.clone())?,
            None => inferred,
        };
        Self::new(support, field, coeffs)
    }
}

/// Gaussian basis, redrawn while its condition number exceeds the default cap.
pub fn sample_generic_basis(n: usize, field: Field, seed: u64) -> Result<Basis> {
    sample_generic_basis_with_cap(n, field, seed, DEFAULT_CONDITION_CAP)
}

pub fn sample_generic_basis_with_cap(n: usize, field: Field, seed: u64, cap: f64) -> Result<Basis> {
    if n == 0 {
        return Err(Error::InvalidInput("basis dimension must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_BASIS_DRAWS {
        let entries = gaussian_vec(&mut rng, n * n, field.is_complex());
        let matrix = DMatrix::from_row_slice(n, n, &entries);
        let condition = linalg::condition_number(&matrix);
        if condition <= cap {
            return Ok(Basis { field, matrix, condition });
        }
    }
    Err(Error::IllConditioned { attempts: MAX_BASIS_DRAWS, cap })
}

/// `x = sum_{i in S} c_i v_i`.
pub fn embed(v: &SparseVector, basis: &Basis) -> Result<Signal> {
    v.support.check_within(basis.n())?;
    if v.field != basis.field {
        return Err(Error::FieldMismatch(format!("{} vector in a {} basis", v.field, basis.field)));
    }
    let n = basis.n();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (&i, c) in v.support.indices().iter().zip(&v.coeffs) {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk += c * basis.matrix[(i, k)];
        }
    }
    Signal::new(basis.field, x)
}

fn select_rows(basis: &Basis, rows: &[usize]) -> Result<Frame> {
    let n = basis.n();
    for &r in rows {
        if r >= n {
            return Err(Error::IndexOutOfRange { index: r, len: n });
        }
    }
    let matrix = DMatrix::from_fn(rows.len(), n, |i, j| basis.matrix[(rows[i], j)]);
    Frame::new(basis.field, matrix)
}

/// Rows `v_i`, `i in S`, stacked in increasing index order.
pub fn frame_from_basis(basis: &Basis, s: &Support) -> Result<Frame> {
    select_rows(basis, s.indices())
}

/// Frames for two supports of equal size with the shared rows first (in
/// increasing order), followed by each support's remaining rows.
pub fn overlapping_pair_from_basis(basis: &Basis, s1: &Support, s2: &Support) -> Result<OverlappingFramePair> {
    if s1.m() != s2.m() {
        return Err(Error::DimensionMismatch { expected: s1.m(), got: s2.m() });
    }
    let shared = s1.intersection(s2);
    let order = |s: &Support| -> Vec<usize> {
        shared.iter().copied().chain(s.indices().iter().copied().filter(|i| !shared.contains(i))).collect()
    };
    let rows_first = order(s1);
    let rows_second = order(s2);
    Ok(OverlappingFramePair {
        first: select_rows(basis, &rows_first)?,
        second: select_rows(basis, &rows_second)?,
        s: shared.len(),
        rows_first,
        rows_second,
    })
}

/// `A F` for a complex frame `A`.
pub fn dft_conjugate_frame(f: &Frame) -> Result<Frame> {
    if f.field != Field::Complex {
        return Err(Error::FieldMismatch("DFT conjugation produces complex frames; input must be complex".into()));
    }
    Frame::new(Field::Complex, &f.matrix * dft_matrix(f.n()))
}

/// Frame whose rows are the real DFTs of the rows of a real frame.
pub fn real_dft_frame(f: &Frame) -> Result<Frame> {
    if f.field != Field::Real {
        return Err(Error::FieldMismatch("real DFT frame requires a real frame".into()));
    }
    let r = real_dft_matrix(f.n()).map(|v| Complex64::new(v, 0.0));
    Frame::new(Field::Real, &f.matrix * r.transpose())
}

/// The frame expressed in the coordinates where the measurement is a
/// grouped sum of squared moduli: real DFT for real frames, `A F` for complex.
pub fn fourier_frame(f: &Frame) -> Result<Frame> {
    match f.field {
        Field::Real => real_dft_frame(f),
        Field::Complex => dft_conjugate_frame(f),
    }
}

/// i.i.d. standard Gaussian coefficients on `s`.
pub fn sample_sparse_vector(s: &Support, field: Field, seed: u64) -> Result<SparseVector> {
    let mut rng = rng_from_seed(seed);
    SparseVector::new(s.clone(), field, gaussian_vec(&mut rng, s.m(), field.is_complex()))
}
