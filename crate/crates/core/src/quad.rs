//! Grouped quadratic measurement model shared by recovery and certification.
//!
//! A real parameter vector `theta` is mapped linearly to `z = sum_i theta_i g_i`
//! in `C^N`, and the measurement is `b_k = sum_{j in G_k} |z_j|^2` over a
//! fixed list of index groups of size one or two.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::signal::reduction_groups;

pub type Groups = Vec<(usize, Option<usize>)>;

/// Singleton groups, one per coordinate (the full power spectrum).
pub fn singleton_groups(n: usize) -> Groups {
    (0..n).map(|j| (j, None)).collect()
}

/// The reduced-measurement groups `{0}`, `{k, N-k}` and `{N/2}`.
pub fn reduced_groups(n: usize) -> Groups {
    reduction_groups(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadModel {
    p: usize,
    n: usize,
    re: Vec<f64>,
    im: Option<Vec<f64>>,
    groups: Groups,
}

impl QuadModel {
    /// `generators` is `p x N`, one generator per row.
    pub fn new(generators: &DMatrix<Complex64>, groups: Groups) -> Self {
        let (p, n) = generators.shape();
        let re = (0..p).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| generators[(i, j)].re).collect();
        let im = if generators.iter().any(|z| z.im != 0.0) {
            Some((0..p).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| generators[(i, j)].im).collect())
        } else {
            None
        };
        Self { p, n, re, im, groups }
    }

    /// Model in the coefficients of a frame (rows = frame-defining vectors).
    /// Complex coefficients are split as `[Re c; Im c]`.
    pub fn from_frame(frame: &DMatrix<Complex64>, complex_coeffs: bool, groups: Groups) -> Self {
        if complex_coeffs {
            let m = frame.nrows();
            let i = Complex64::new(0.0, 1.0);
            let gens = DMatrix::from_fn(2 * m, frame.ncols(), |r, c| if r < m { frame[(r, c)] } else { i * frame[(r - m, c)] });
            Self::new(&gens, groups)
        } else {
            Self::new(frame, groups)
        }
    }

    pub fn params(&self) -> usize {
        self.p
    }

    pub fn outputs(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    /// Length `N` of the synthesized vector.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub(crate) fn generator(&self, i: usize) -> (&[f64], Option<&[f64]>) {
        let span = i * self.n..(i + 1) * self.n;
        (&self.re[span.clone()], self.im.as_ref().map(|im| &im[span]))
    }

    pub fn synth(&self, theta: &[f64], zr: &mut [f64], zi: &mut [f64]) {
        zr.fill(0.0);
        zi.fill(0.0);
        for (i, &t) in theta.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let row = &self.re[i * self.n..(i + 1) * self.n];
            for (z, g) in zr.iter_mut().zip(row) {
                *z += t * g;
            }
            if let Some(im) = &self.im {
                let row = &im[i * self.n..(i + 1) * self.n];
                for (z, g) in zi.iter_mut().zip(row) {
                    *z += t * g;
                }
            }
        }
    }

    pub fn synth_complex(&self, theta: &[f64]) -> Vec<Complex64> {
        let (mut zr, mut zi) = (vec![0.0; self.n], vec![0.0; self.n]);
        self.synth(theta, &mut zr, &mut zi);
        zr.into_iter().zip(zi).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    fn measure_from(&self, zr: &[f64], zi: &[f64], out: &mut [f64]) {
        let sq = |j: usize| zr[j] * zr[j] + zi[j] * zi[j];
        for (o, &(a, b)) in out.iter_mut().zip(&self.groups) {
            *o = sq(a) + b.map_or(0.0, sq);
        }
    }

    pub fn measure_into(&self, theta: &[f64], out: &mut [f64]) {
        let (mut zr, mut zi) = (vec![0.0; self.n], vec![0.0; self.n]);
        self.synth(theta, &mut zr, &mut zi);
        self.measure_from(&zr, &zi, out);
    }

    pub fn measure(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.measure_into(theta, &mut out);
        out
    }

    /// Adds `scale * d b / d theta` into the block of `jac` starting at
    /// column `col`.
    pub fn add_jacobian(&self, theta: &[f64], scale: f64, jac: &mut DMatrix<f64>, col: usize) {
        let (mut zr, mut zi) = (vec![0.0; self.n], vec![0.0; self.n]);
        self.synth(theta, &mut zr, &mut zi);
        self.add_jacobian_at(&zr, &zi, scale, jac, col);
    }

    pub(crate) fn add_jacobian_at(&self, zr: &[f64], zi: &[f64], scale: f64, jac: &mut DMatrix<f64>, col: usize) {
        for i in 0..self.p {
            let gr = &self.re[i * self.n..(i + 1) * self.n];
            let gi = self.im.as_ref().map(|im| &im[i * self.n..(i + 1) * self.n]);
            let d = |j: usize| zr[j] * gr[j] + gi.map_or(0.0, |g| zi[j] * g[j]);
            for (k, &(a, b)) in self.groups.iter().enumerate() {
                jac[(k, col + i)] += scale * 2.0 * (d(a) + b.map_or(0.0, d));
            }
        }
    }
}

/// `[Re c; Im c]` for complex fields, `Re c` otherwise.
pub fn params_from_coeffs(c: &[Complex64], complex: bool) -> Vec<f64> {
    if complex {
        c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)).collect()
    } else {
        c.iter().map(|z| z.re).collect()
    }
}

pub fn coeffs_from_params(theta: &[f64], complex: bool) -> Vec<Complex64> {
    if complex {
        let m = theta.len() / 2;
        (0..m).map(|i| Complex64::new(theta[i], theta[m + i])).collect()
    } else {
        theta.iter().map(|&t| Complex64::new(t, 0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vec, rng_from_seed};

    fn finite_difference(model: &QuadModel, theta: &[f64]) -> DMatrix<f64> {
        let h = 1e-6;
        let mut j = DMatrix::zeros(model.outputs(), model.params());
        for i in 0..model.params() {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let (bp, bm) = (model.measure(&tp), model.measure(&tm));
            for k in 0..model.outputs() {
                j[(k, i)] = (bp[k] - bm[k]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = rng_from_seed(5);
        for (n, complex) in [(7, false), (8, true), (6, false)] {
            let m = 3;
            let frame = DMatrix::from_vec(m, n, gaussian_vec(&mut rng, m * n, complex));
            let groups = if complex { singleton_groups(n) } else { reduced_groups(n) };
            let model = QuadModel::from_frame(&frame, complex, groups);
            let theta: Vec<f64> = gaussian_vec(&mut rng, model.params(), false).iter().map(|z| z.re).collect();
            let mut jac = DMatrix::zeros(model.outputs(), model.params());
            model.add_jacobian(&theta, 1.0, &mut jac, 0);
            let fd = finite_difference(&model, &theta);
            assert!((&jac - &fd).amax() <= 1e-6 * (1.0 + jac.amax()));
        }
    }

    #[test]
    fn complex_split_reproduces_synthesis() {
        let mut rng = rng_from_seed(2);
        let frame = DMatrix::from_vec(2, 5, gaussian_vec(&mut rng, 10, true));
        let c = gaussian_vec(&mut rng, 2, true);
        let model = QuadModel::from_frame(&frame, true, singleton_groups(5));
        let z = model.synth_complex(&params_from_coeffs(&c, true));
        for j in 0..5 {
            let direct = c[0] * frame[(0, j)] + c[1] * frame[(1, j)];
            assert!((z[j] - direct).norm() < 1e-12);
        }
        assert_eq!(coeffs_from_params(&params_from_coeffs(&c, true), true), c);
    }
}
