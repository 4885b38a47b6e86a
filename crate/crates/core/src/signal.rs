//! Fourier-side primitives: the DFT, power spectrum, periodic
//! autocorrelation, the dihedral action on `K^N`, the dihedral second moment,
//! the real DFT and the reduced quadratic measurement `b`.
//!
//! All transforms are naive `O(N^2)` matrix applications with an exact
//! twiddle table; signal lengths in this crate are small.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Scalar field of a signal or basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn is_complex(self) -> bool {
        matches!(self, Field::Complex)
    }

    /// Real dimension of one scalar.
    pub fn real_dim(self) -> usize {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::Parse(format!("unknown field `{other}`"))),
        }
    }
}

/// A dense length-`N` vector over `K` with its field tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    field: Field,
    entries: Vec<Complex64>,
}

impl Signal {
    pub fn real(values: Vec<f64>) -> Result<Self> {
        Self::new(Field::Real, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn complex(values: Vec<Complex64>) -> Result<Self> {
        Self::new(Field::Complex, values)
    }

    /// Validating constructor. Real signals must have exactly zero
    /// imaginary parts.
    pub fn new(field: Field, entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("signal length must be at least 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("signal entries must be finite".into()));
        }
        if field == Field::Real && entries.iter().any(|z| z.im != 0.0) {
            return Err(Error::FieldMismatch("real signal with non-zero imaginary part".into()));
        }
        Ok(Self { field, entries })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    /// Real parts, if the signal is real.
    pub fn as_real(&self) -> Option<Vec<f64>> {
        (self.field == Field::Real).then(|| self.entries.iter().map(|z| z.re).collect())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SignalRepr {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

impl Serialize for Signal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        vector_repr(self.field, &self.entries).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (field, entries) = from_repr(SignalRepr::deserialize(deserializer)?);
        Signal::new(field, entries).map_err(serde::de::Error::custom)
    }
}

fn vector_repr(field: Field, entries: &[Complex64]) -> SignalRepr {
    match field {
        Field::Real => SignalRepr::Real(entries.iter().map(|z| z.re).collect()),
        Field::Complex => SignalRepr::Complex(entries.iter().map(|z| [z.re, z.im]).collect()),
    }
}

fn from_repr(repr: SignalRepr) -> (Field, Vec<Complex64>) {
    match repr {
        SignalRepr::Real(v) => (Field::Real, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()),
        SignalRepr::Complex(v) => (Field::Complex, v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()),
    }
}

/// Serde adapter for field-tagged coefficient vectors stored as
/// `(Field, Vec<Complex64>)` elsewhere in the crate: numbers for real,
/// `[re, im]` pairs for complex.
pub(crate) fn vector_to_json(field: Field, entries: &[Complex64]) -> serde_json::Value {
    serde_json::to_value(vector_repr(field, entries)).expect("plain numeric arrays always serialize")
}

pub(crate) fn vector_from_json(value: &serde_json::Value) -> Result<(Field, Vec<Complex64>)> {
    let repr: SignalRepr = serde_json::from_value(value.clone())?;
    Ok(from_repr(repr))
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Componentwise squared moduli of the DFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub values: Vec<f64>,
}

/// Periodic autocorrelation; real for real signals, complex in general.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    pub field: Field,
    pub values: Vec<Complex64>,
}

/// The grouped squared moduli `b_z`, of length `floor(N/2) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMeasurement {
    pub values: Vec<f64>,
}

/// Average of `(g x)(g x)^*` over the dihedral group.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoment {
    pub matrix: DMatrix<Complex64>,
}

/// `r^rotation` (if not reflected) or `r^rotation s` (if reflected), acting
/// by `(r x)[l] = x[l+1]` and `(s x)[l] = x[N-l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DihedralElement {
    pub rotation: usize,
    pub reflected: bool,
}

impl DihedralElement {
    pub const IDENTITY: Self = Self { rotation: 0, reflected: false };

    pub fn rotation(k: usize) -> Self {
        Self { rotation: k, reflected: false }
    }

    pub fn reflection() -> Self {
        Self { rotation: 0, reflected: true }
    }

    /// Group product `self * other` in `D_{2N}`.
    ///
    /// Uses `s r^b = r^{-b} s`, so `(r^a s^e)(r^b s^f) = r^{a + (-1)^e b} s^{e+f}`.
    pub fn compose(self, other: Self, n: usize) -> Self {
        let b = other.rotation % n;
        let rotation = if self.reflected { (self.rotation + n - b) % n } else { (self.rotation + b) % n };
        Self { rotation, reflected: self.reflected ^ other.reflected }
    }

    pub fn inverse(self, n: usize) -> Self {
        if self.reflected {
            // r^k s is an involution.
            Self { rotation: self.rotation % n, reflected: true }
        } else {
            Self { rotation: (n - self.rotation % n) % n, reflected: false }
        }
    }

    /// All `2N` elements: rotations first, then reflections.
    pub fn all(n: usize) -> Vec<Self> {
        (0..n)
            .map(Self::rotation)
            .chain((0..n).map(|k| Self { rotation: k, reflected: true }))
            .collect()
    }

    /// Index map of the action: `(g x)[l] = x[source(l)]`.
    pub fn source_index(self, l: usize, n: usize) -> usize {
        let shifted = (l + self.rotation) % n;
        if self.reflected {
            (n - shifted) % n
        } else {
            shifted
        }
    }
}

/// Powers of `e^{2 pi i / N}`, indexed by `j*k mod N`.
pub(crate) fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

pub(crate) fn dft_slice(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let w = twiddles(n);
    (0..n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, xk) in x.iter().enumerate() {
                acc += w[(j * k) % n] * xk;
            }
            acc
        })
        .collect()
}

/// The unnormalized DFT matrix `F[j,k] = w^{jk}`, `w = e^{2 pi i/N}`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let w = twiddles(n);
    DMatrix::from_fn(n, n, |j, k| w[(j * k) % n])
}

/// `F x` with the unnormalized DFT.
pub fn dft(x: &Signal) -> Signal {
    Signal { field: Field::Complex, entries: dft_slice(&x.entries) }
}

pub fn power_spectrum(x: &Signal) -> PowerSpectrum {
    PowerSpectrum { values: dft_slice(&x.entries).iter().map(|z| z.norm_sqr()).collect() }
}

/// `a[l] = sum_n conj(x[n]) x[n+l]`, indices mod `N`.
///
/// The conjugate sits on the first factor so that `F a = |F x|^2` holds
/// entrywise for complex signals as well; for real signals this is the
/// ordinary `sum_n x[n] x[n+l]`.
pub fn periodic_autocorrelation(x: &Signal) -> Autocorrelation {
    let n = x.len();
    let e = &x.entries;
    let values = (0..n)
        .map(|l| (0..n).map(|i| e[i].conj() * e[(i + l) % n]).sum())
        .collect();
    Autocorrelation { field: x.field, values }
}

pub fn dihedral_act(g: DihedralElement, x: &Signal) -> Signal {
    let n = x.len();
    let entries = (0..n).map(|l| x.entries[g.source_index(l, n)]).collect();
    Signal { field: x.field, entries }
}

/// Direct `2N`-term average of rank-one outer products.
pub fn second_moment(x: &Signal) -> SecondMoment {
    let n = x.len();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for g in DihedralElement::all(n) {
        let gx = dihedral_act(g, x);
        for a in 0..n {
            for b in 0..n {
                acc[(a, b)] += gx.entries[a] * gx.entries[b].conj();
            }
        }
    }
    acc /= Complex64::new((2 * n) as f64, 0.0);
    SecondMoment { matrix: acc }
}

/// Number of reduced measurement components, `floor(N/2) + 1`.
pub fn reduced_len(n: usize) -> usize {
    n / 2 + 1
}

/// Index groups of the reduced measurement: `{0}`, `{k, N-k}` for
/// `0 < k < N/2`, and `{N/2}` for even `N`.
pub fn reduction_groups(n: usize) -> Vec<(usize, Option<usize>)> {
    (0..reduced_len(n))
        .map(|k| if k == 0 || 2 * k == n { (k, None) } else { (k, Some(n - k)) })
        .collect()
}

/// Real DFT in the real Fourier basis: entry `l` is
/// `sum_k x[k] cos(2 pi l k / N)` for `l <= N/2` and
/// `sum_k x[k] sin(2 pi l k / N)` for `l > N/2`.
///
/// Equivalently the stacked `[x_0; x_1]` with the sine block in reverse
/// frequency order (sine frequency `m` lives at index `N-m`, with a sign
/// flip), so that `reduced_b` pairs the cosine and sine of one frequency.
pub fn real_dft(x: &Signal) -> Result<Signal> {
    if x.field != Field::Real {
        return Err(Error::FieldMismatch("real_dft requires a real signal".into()));
    }
    let re: Vec<f64> = x.entries.iter().map(|z| z.re).collect();
    Signal::real(real_dft_slice(&re))
}

pub(crate) fn real_dft_slice(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let w = twiddles(n);
    (0..n)
        .map(|l| {
            let cosine = 2 * l <= n;
            x.iter()
                .enumerate()
                .map(|(k, xk)| {
                    let t = w[(l * k) % n];
                    xk * if cosine { t.re } else { t.im }
                })
                .sum()
        })
        .collect()
}

/// The matrix of `real_dft`.
pub fn real_dft_matrix(n: usize) -> DMatrix<f64> {
    let w = twiddles(n);
    DMatrix::from_fn(n, n, |l, k| {
        let t = w[(l * k) % n];
        if 2 * l <= n {
            t.re
        } else {
            t.im
        }
    })
}

/// Grouped squared moduli `(|z0|^2, |z1|^2 + |z_{N-1}|^2, ...)`.
pub fn reduced_b(z: &Signal) -> ReducedMeasurement {
    ReducedMeasurement { values: reduced_b_slice(&z.entries) }
}

pub(crate) fn reduced_b_slice(z: &[Complex64]) -> Vec<f64> {
    reduction_groups(z.len())
        .into_iter()
        .map(|(a, b)| z[a].norm_sqr() + b.map_or(0.0, |b| z[b].norm_sqr()))
        .collect()
}

/// The reduced measurement of a real signal, `reduced_b(real_dft(x))`.
pub fn measure_reduced(x: &Signal) -> Result<ReducedMeasurement> {
    Ok(reduced_b(&real_dft(x)?))
}

/// For real signals the reduced measurement is the first `floor(N/2)+1`
/// power-spectrum entries.
pub fn reduced_from_power_spectrum(p: &PowerSpectrum) -> ReducedMeasurement {
    ReducedMeasurement { values: p.values[..reduced_len(p.values.len())].to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn dft_examples() {
        let e0 = Signal::real(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(dft(&e0).entries(), &[c(1.0, 0.0); 4], 1e-15));

        let ones = Signal::real(vec![1.0; 4]).unwrap();
        assert!(close(dft(&ones).entries(), &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 1e-12));

        let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((dft(&x).entries()[0] - c(10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dft_uses_positive_exponent() {
        let e1 = Signal::real(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        // Column 1 of F is (1, w, w^2, w^3) with w = i.
        assert!(close(dft(&e1).entries(), &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], 1e-15));
    }

    #[test]
    fn power_spectrum_examples() {
        let e0 = Signal::real(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(power_spectrum(&e0).values, vec![1.0; 4]);
        let ones = Signal::real(vec![1.0; 4]).unwrap();
        let p = power_spectrum(&ones).values;
        assert!((p[0] - 16.0).abs() < 1e-12 && p[1..].iter().all(|v| v.abs() < 1e-12));

        let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let shifted = dihedral_act(DihedralElement::rotation(1), &x);
        let (p, q) = (power_spectrum(&x).values, power_spectrum(&shifted).values);
        assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn autocorrelation_examples() {
        let delta = Signal::real(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(periodic_autocorrelation(&delta).values, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        // Brute force: a[l] = sum_n x[n] x[n+l] for x = (1,2,3,4).
        let x = [1.0, 2.0, 3.0, 4.0];
        let brute: Vec<f64> = (0..4).map(|l| (0..4).map(|n| x[n] * x[(n + l) % 4]).sum()).collect();
        assert_eq!(brute, vec![30.0, 24.0, 22.0, 24.0]);
        let a = periodic_autocorrelation(&Signal::real(x.to_vec()).unwrap());
        assert_eq!(a.values.iter().map(|z| z.re).collect::<Vec<_>>(), brute);
        assert_eq!(a.values[1], a.values[3]);
    }

    #[test]
    fn dihedral_group_relations() {
        let n = 5;
        let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(dihedral_act(DihedralElement::IDENTITY, &x), x);

        let mut y = x.clone();
        for _ in 0..n {
            y = dihedral_act(DihedralElement::rotation(1), &y);
        }
        assert_eq!(y, x);

        let s = DihedralElement::reflection();
        assert_eq!(dihedral_act(s, &dihedral_act(s, &x)), x);

        // rs = s r^{-1}
        let r = DihedralElement::rotation(1);
        assert_eq!(r.compose(s, n), s.compose(r.inverse(n), n));
    }

    #[test]
    fn action_composes_as_group_product() {
        let n = 6;
        let x = Signal::real((0..n).map(|v| (v * v) as f64 + 0.5).collect()).unwrap();
        for g in DihedralElement::all(n) {
            for h in DihedralElement::all(n) {
                let lhs = dihedral_act(h, &dihedral_act(g, &x));
                let rhs = dihedral_act(h.compose(g, n), &x);
                assert_eq!(lhs, rhs, "g={g:?} h={h:?}");
            }
            assert_eq!(dihedral_act(g.inverse(n), &dihedral_act(g, &x)), x);
        }
    }

    #[test]
    fn second_moment_examples() {
        let zero = Signal::real(vec![0.0; 4]).unwrap();
        assert!(second_moment(&zero).matrix.iter().all(|z| z.norm() == 0.0));

        let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = second_moment(&x).matrix;
        // The average over 2N group elements is a[1] / N = 24 / 4.
        assert!((m[(0, 1)] - c(6.0, 0.0)).norm() < 1e-12);
        assert!((&m - m.transpose()).iter().all(|z| z.norm() < 1e-12));
        assert!(m.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn real_dft_examples() {
        for n in 1..9 {
            let mut e0 = vec![0.0; n];
            e0[0] = 1.0;
            let z = real_dft(&Signal::real(e0).unwrap()).unwrap().as_real().unwrap();
            for (l, v) in z.iter().enumerate() {
                let expect = if 2 * l <= n { 1.0 } else { 0.0 };
                assert_eq!(*v, expect, "n={n} l={l}");
            }
        }
        let z = real_dft(&Signal::real(vec![1.0; 4]).unwrap()).unwrap().as_real().unwrap();
        let expect = [4.0, 0.0, 0.0, 0.0];
        assert!(z.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn real_dft_rejects_complex() {
        let x = Signal::complex(vec![c(1.0, 1.0)]).unwrap();
        assert!(matches!(real_dft(&x), Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn reduced_b_examples() {
        let z = Signal::complex(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(reduced_b(&z).values, vec![1.0, 5.0, 0.0]);
        assert_eq!(reduced_b(&Signal::real(vec![0.0; 7]).unwrap()).values, vec![0.0; 4]);
        assert_eq!(reduction_groups(5), vec![(0, None), (1, Some(4)), (2, Some(3))]);
        assert_eq!(reduction_groups(6), vec![(0, None), (1, Some(5)), (2, Some(4)), (3, None)]);
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::real(vec![]).is_err());
        assert!(Signal::real(vec![f64::NAN]).is_err());
        assert!(Signal::new(Field::Real, vec![c(1.0, 1.0)]).is_err());
    }

    #[test]
    fn signal_json_shapes() {
        let r = Signal::real(vec![1.0, -2.5]).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "[1.0,-2.5]");
        let z = Signal::complex(vec![c(1.0, 2.0)]).unwrap();
        assert_eq!(serde_json::to_string(&z).unwrap(), "[[1.0,2.0]]");
        let back: Signal = serde_json::from_str("[[1.0,2.0]]").unwrap();
        assert_eq!(back, z);
        let back: Signal = serde_json::from_str("[3, 4]").unwrap();
        assert_eq!(back.field(), Field::Real);
    }
}
