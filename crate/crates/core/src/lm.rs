//! Levenberg-Marquardt for small dense least-squares problems, plus a short
//! projected-gradient warm-up used by the certification search.

use nalgebra::{DMatrix, DVector};

/// A residual map `r: R^p -> R^k` with an analytic Jacobian.
pub trait LeastSquares {
    /// `(k, p)`: number of residuals and parameters.
    fn dims(&self) -> (usize, usize);
    fn residuals(&self, theta: &[f64], r: &mut [f64]);
    /// Writes the `k x p` Jacobian.
    fn jacobian(&self, theta: &[f64], jac: &mut DMatrix<f64>);
    /// Maps a parameter vector back onto the feasible set after a step.
    fn retract(&self, _theta: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Stop once the squared residual norm drops below this.
    pub cost_tol: f64,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Stop when an accepted step improves the cost by less than this fraction.
    pub rel_decrease_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iter: 500, cost_tol: 1e-30, grad_tol: 1e-20, step_tol: 1e-14, rel_decrease_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub theta: Vec<f64>,
    /// Squared residual norm at `theta`.
    pub cost: f64,
    pub iterations: usize,
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(problem: &P, theta0: Vec<f64>, cfg: &LmConfig) -> LmOutcome {
    let (k, p) = problem.dims();
    let mut theta = theta0;
    problem.retract(&mut theta);
    let mut r = vec![0.0; k];
    problem.residuals(&theta, &mut r);
    let mut cost = sq_norm(&r);
    let mut jac = DMatrix::zeros(k, p);
    let mut trial = vec![0.0; p];
    let mut r_trial = vec![0.0; k];
    let mut lambda: Option<f64> = None;
    let mut nu = 2.0;
    let mut iterations = 0;

    'outer: while iterations < cfg.max_iter && cost > cfg.cost_tol && cost.is_finite() {
        iterations += 1;
        problem.jacobian(&theta, &mut jac);
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&DVector::from_column_slice(&r));
        if g.amax() <= cfg.grad_tol {
            break;
        }
        let lam = lambda.get_or_insert_with(|| 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE));
        loop {
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += *lam;
            }
            let Some(chol) = a.cholesky() else {
                *lam *= nu;
                nu *= 2.0;
                if *lam > 1e20 {
                    break 'outer;
                }
                continue;
            };
            let step = chol.solve(&(-&g));
            // Model decrease of ||r||^2 for the damped step.
            let predicted = step.dot(&(*lam * &step - &g));
            for i in 0..p {
                trial[i] = theta[i] + step[i];
            }
            problem.retract(&mut trial);
            problem.residuals(&trial, &mut r_trial);
            let trial_cost = sq_norm(&r_trial);
            let rho = if predicted > 0.0 { (cost - trial_cost) / predicted } else { -1.0 };
            if rho > 0.0 && trial_cost.is_finite() {
                let improvement = cost - trial_cost;
                let step_norm = step.norm();
                let theta_norm = sq_norm(&theta).sqrt();
                std::mem::swap(&mut theta, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = trial_cost;
                *lam *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                if step_norm <= cfg.step_tol * (theta_norm + cfg.step_tol)
                    || improvement <= cfg.rel_decrease_tol * (cost + improvement)
                {
                    break 'outer;
                }
                break;
            }
            *lam *= nu;
            nu *= 2.0;
            if *lam > 1e20 {
                break 'outer;
            }
        }
    }
    LmOutcome { theta, cost, iterations }
}

/// Gradient descent on `||r||^2` with Armijo backtracking, retracting after
/// every step. Returns the final point and its cost.
pub fn projected_gradient<P: LeastSquares + ?Sized>(problem: &P, theta0: Vec<f64>, iters: usize) -> (Vec<f64>, f64) {
    let (k, p) = problem.dims();
    let mut theta = theta0;
    problem.retract(&mut theta);
    let mut r = vec![0.0; k];
    problem.residuals(&theta, &mut r);
    let mut cost = sq_norm(&r);
    let mut jac = DMatrix::zeros(k, p);
    let mut trial = vec![0.0; p];
    let mut r_trial = vec![0.0; k];
    let mut t: f64 = 1.0;
    for _ in 0..iters {
        problem.jacobian(&theta, &mut jac);
        let g = 2.0 * jac.tr_mul(&DVector::from_column_slice(&r));
        let gg = g.norm_squared();
        if gg == 0.0 || !gg.is_finite() {
            break;
        }
        t = (t * 4.0).min(1.0);
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..p {
                trial[i] = theta[i] - t * g[i];
            }
            problem.retract(&mut trial);
            problem.residuals(&trial, &mut r_trial);
            let c = sq_norm(&r_trial);
            // Sufficient decrease measured along the retracted step.
            let moved: f64 = (0..p).map(|i| g[i] * (theta[i] - trial[i])).sum();
            if c <= cost - 1e-4 * moved.max(0.0) && c < cost {
                std::mem::swap(&mut theta, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (theta, cost)
}
