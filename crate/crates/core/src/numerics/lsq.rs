//! Bounded Levenberg–Marquardt least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

type ResidualFn<'a> = dyn Fn(&[f64], &mut [f64]) + Sync + 'a;
type JacobianFn<'a> = dyn Fn(&[f64], &mut DMatrix<f64>) + Sync + 'a;

/// A residual vector r(x) of length `m` over `n` parameters with box bounds.
pub struct LsqProblem<'a> {
    pub m: usize,
    pub residuals: &'a ResidualFn<'a>,
    /// Analytic Jacobian ∂r_i/∂x_j; central differences are used when absent.
    pub jacobian: Option<&'a JacobianFn<'a>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Typical magnitude of each parameter, used for finite-difference steps.
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LsqOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub params: Vec<f64>,
    /// s²·(JᵀJ)⁻¹ with s² = SSR/(m − n).
    pub covariance: DMatrix<f64>,
    /// √(Σ r²).
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Parameters that ended pinned at a bound.
    pub at_bound: Vec<bool>,
}

impl LsqSolution {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

impl LsqProblem<'_> {
    fn eval(&self, x: &[f64], r: &mut [f64]) -> f64 {
        (self.residuals)(x, r);
        r.iter().map(|v| v * v).sum()
    }

    fn jac(&self, x: &[f64], r0: &[f64], j: &mut DMatrix<f64>) {
        if let Some(jf) = self.jacobian {
            jf(x, j);
            return;
        }
        let n = x.len();
        let mut xp = x.to_vec();
        let mut rp = vec![0.0; self.m];
        let mut rm = vec![0.0; self.m];
        for c in 0..n {
            let h = 1e-6 * x[c].abs().max(self.scale[c]);
            let up = (x[c] + h).min(self.upper[c]);
            let dn = (x[c] - h).max(self.lower[c]);
            xp[c] = up;
            (self.residuals)(&xp, &mut rp);
            if dn < x[c] {
                xp[c] = dn;
                (self.residuals)(&xp, &mut rm);
            } else {
                rm.copy_from_slice(r0);
            }
            let width = up - dn;
            for i in 0..self.m {
                j[(i, c)] = if width > 0.0 { (rp[i] - rm[i]) / width } else { 0.0 };
            }
            xp[c] = x[c];
        }
    }
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Minimizes Σ r(x)² from `x0` inside the box. Fails with a numerical error if the
/// residuals are non-finite at the start.
pub fn levenberg_marquardt(problem: &LsqProblem<'_>, x0: &[f64], opts: LsqOptions) -> Result<LsqSolution> {
    let n = x0.len();
    let m = problem.m;
    if m < n {
        return Err(Error::Degenerate(format!("{m} residuals cannot determine {n} parameters")));
    }
    let mut x = x0.to_vec();
    clamp(&mut x, &problem.lower, &problem.upper);
    let mut r = vec![0.0; m];
    let mut cost = problem.eval(&x, &mut r);
    if !cost.is_finite() {
        return Err(Error::Numerical { context: "least squares", detail: "non-finite residuals at the start".into() });
    }
    let mut j = DMatrix::zeros(m, n);
    let mut r_trial = vec![0.0; m];
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    problem.jac(&x, &r, &mut j);
    while iterations < opts.max_iter {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &rv;
        if g.amax() <= opts.tol * opts.tol * (1.0 + cost) {
            converged = true;
            break;
        }
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-300)).collect();
        if lambda < 0.0 {
            lambda = 1e-3;
        }
        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += lambda * diag[i];
        }
        let step = match a.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => match a.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            },
        };
        let mut x_trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        clamp(&mut x_trial, &problem.lower, &problem.upper);
        let actual_step: Vec<f64> = x_trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let cost_trial = problem.eval(&x_trial, &mut r_trial);
        let dx = DVector::from_column_slice(&actual_step);
        let jdx = &j * &dx;
        let predicted = -(2.0 * g.dot(&dx) + jdx.dot(&jdx));
        let rho = if predicted > 0.0 { (cost - cost_trial) / predicted } else { -1.0 };
        let step_norm = dx.norm();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if cost_trial.is_finite() && cost_trial < cost {
            let rel_change = (cost - cost_trial) / cost.max(f64::MIN_POSITIVE);
            x = x_trial;
            std::mem::swap(&mut r, &mut r_trial);
            cost = cost_trial;
            problem.jac(&x, &r, &mut j);
            lambda *= if rho > 0.0 { (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3)) } else { 2.0 };
            nu = 2.0;
            if rel_change < opts.tol || step_norm <= opts.tol * (x_norm + opts.tol) || cost == 0.0 {
                converged = true;
                break;
            }
        } else {
            if step_norm <= opts.tol * (x_norm + opts.tol) {
                converged = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e30 {
                converged = true;
                break;
            }
        }
    }

    let jtj = j.transpose() * &j;
    let dof = (m - n).max(1) as f64;
    let s2 = cost / dof;
    let covariance = jtj.clone().try_inverse().map(|inv| inv * s2).unwrap_or_else(|| DMatrix::from_element(n, n, f64::INFINITY));
    let at_bound = (0..n)
        .map(|i| {
            let tol = 1e-9 * problem.scale[i].max(x[i].abs());
            (x[i] - problem.lower[i]).abs() <= tol || (problem.upper[i] - x[i]).abs() <= tol
        })
        .collect();
    Ok(LsqSolution { params: x, covariance, residual_norm: cost.sqrt(), iterations, converged, at_bound })
}
