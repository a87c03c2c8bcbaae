//! Self-contained Levenberg-Marquardt least-squares minimizer.
//!
//! Damped Gauss-Newton with the Nielsen gain-ratio update for the damping
//! parameter. The cost is `F(x) = ½‖r(x)‖²`; accepted steps never increase it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A residual vector with an optional analytic Jacobian. When `jacobian`
/// returns `None`, central finite differences are used.
pub trait LeastSquaresProblem {
    fn residuals(&self, params: &[f64]) -> Vec<f64>;

    fn jacobian(&self, _params: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which the fit is converged.
    pub ftol: f64,
    /// Relative step size below which the fit is converged.
    pub xtol: f64,
    /// Infinity norm of the gradient below which the fit is converged.
    pub gtol: f64,
    /// Initial damping, as a fraction of max(diag JᵀJ). Zero starts with an
    /// undamped Gauss-Newton step, which lands exactly on quadratic problems.
    pub tau: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-14,
            xtol: 1e-13,
            gtol: 1e-14,
            tau: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Gradient,
    Step,
    Cost,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Parameter covariance `σ²·(JᵀJ)⁻¹` at the optimum (pseudo-inverse when
    /// rank-deficient; see `covariance_singular`).
    pub covariance: DMatrix<f64>,
    pub covariance_singular: bool,
    pub iterations: usize,
    /// Final `‖r‖`.
    pub residual_norm: f64,
    pub converged: Convergence,
}

impl LmResult {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.covariance.nrows())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }
}

fn finite_difference_jacobian<P: LeastSquaresProblem>(
    problem: &P,
    params: &[f64],
    m: usize,
) -> DMatrix<f64> {
    let n = params.len();
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut work = params.to_vec();
    for j in 0..n {
        let h = 1e-6 * work[j].abs().max(1e-6);
        let saved = work[j];
        work[j] = saved + h;
        let plus = problem.residuals(&work);
        work[j] = saved - h;
        let minus = problem.residuals(&work);
        work[j] = saved;
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn residual_vector<P: LeastSquaresProblem>(problem: &P, params: &[f64]) -> Result<DVector<f64>> {
    let r = problem.residuals(params);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerics(format!(
            "residual is not finite at parameters {params:?}"
        )));
    }
    Ok(DVector::from_vec(r))
}

/// Minimizes `½‖r(x)‖²` from `init`. The returned covariance is scaled by the
/// residual variance `‖r‖²/(m−n)` when `m > n`.
pub fn lm_minimize<P: LeastSquaresProblem>(
    problem: &P,
    init: &[f64],
    options: &LmOptions,
) -> Result<LmResult> {
    let n = init.len();
    let mut x = DVector::from_column_slice(init);
    let mut r = residual_vector(problem, x.as_slice())?;
    let m = r.len();
    let mut jac = problem
        .jacobian(x.as_slice())
        .unwrap_or_else(|| finite_difference_jacobian(problem, x.as_slice(), m));
    let mut cost = 0.5 * r.norm_squared();

    let mut a = jac.transpose() * &jac; // n×n
    let mut g = jac.transpose() * &r; // gradient of cost
    let mut max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
    let mut mu = options.tau * max_diag;
    let mut nu = 2.0;
    let mut converged = Convergence::MaxIterations;
    let mut iterations = 0;
    // raises μ after a rejected step or a failed factorization
    let bump = |mu: f64, nu: &mut f64, max_diag: f64| -> f64 {
        let raised = if mu > 0.0 {
            mu * *nu
        } else {
            1e-6 * max_diag.max(f64::MIN_POSITIVE)
        };
        *nu *= 2.0;
        raised
    };

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        if g.amax() <= options.gtol * (1.0 + cost) {
            converged = Convergence::Gradient;
            break;
        }
        // (A + μI)·δ = −g
        let mut damped = a.clone();
        for i in 0..n {
            damped[(i, i)] += mu;
        }
        let step = match damped.clone().cholesky() {
            Some(chol) => chol.solve(&(-&g)),
            None => match damped.lu().solve(&(-&g)) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    mu = bump(mu, &mut nu, max_diag);
                    continue;
                }
            },
        };
        if step.iter().any(|v| !v.is_finite()) {
            mu = bump(mu, &mut nu, max_diag);
            continue;
        }
        if step.norm() <= options.xtol * (x.norm() + options.xtol) {
            converged = Convergence::Step;
            break;
        }
        let candidate = &x + &step;
        let r_new = residual_vector(problem, candidate.as_slice())?;
        let cost_new = 0.5 * r_new.norm_squared();
        // predicted decrease of the damped quadratic model
        let predicted = 0.5 * step.dot(&(step.scale(mu) - &g));
        let rho = if predicted > 0.0 {
            (cost - cost_new) / predicted
        } else {
            -1.0
        };
        if rho > 0.0 && cost_new <= cost {
            let cost_drop = cost - cost_new;
            x = candidate;
            r = r_new;
            cost = cost_new;
            jac = problem
                .jacobian(x.as_slice())
                .unwrap_or_else(|| finite_difference_jacobian(problem, x.as_slice(), m));
            a = jac.transpose() * &jac;
            g = jac.transpose() * &r;
            max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
            mu *= (1.0_f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            if cost_drop <= options.ftol * cost.max(f64::MIN_POSITIVE) {
                converged = Convergence::Cost;
                break;
            }
        } else {
            mu = bump(mu, &mut nu, max_diag);
        }
    }

    // covariance from the (undamped) normal matrix at the optimum
    let svd = a.clone().svd(true, true);
    let rank = svd.rank(a.nrows() as f64 * f64::EPSILON * svd.singular_values.max());
    let covariance_singular = rank < n;
    let sigma2 = if m > n {
        2.0 * cost / (m - n) as f64
    } else {
        1.0
    };
    let covariance = svd
        .pseudo_inverse(a.nrows() as f64 * f64::EPSILON * 1e3)
        .map(|p| p * sigma2)
        .unwrap_or_else(|_| DMatrix::zeros(n, n));

    Ok(LmResult {
        params: x.as_slice().to_vec(),
        covariance,
        covariance_singular,
        iterations,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
    })
}
