//! Generic fitting kernel: linear least squares and damped Gauss-Newton
//! (Levenberg-Marquardt style) nonlinear least squares.
//!
//! Both solvers are deterministic: identical inputs give bit-identical
//! results. The linear path uses a rank-revealing SVD; the nonlinear path
//! damps the normal equations with an additive λI term, multiplying λ by
//! 10 on a rejected step and dividing by 10 on an accepted one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative step for central finite-difference Jacobians.
const FD_RELATIVE_STEP: f64 = 1e-6;
/// Damping ceiling; exceeding it with no accepted step is a fit failure.
const MAX_DAMPING: f64 = 1e12;
const MIN_DAMPING: f64 = 1e-15;

/// Convergence thresholds and iteration budget for [`nonlinear_least_squares`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Stop when ‖Jᵀr‖ ≤ `grad_tol`·(1 + ‖r‖).
    pub grad_tol: f64,
    /// Stop when an accepted step has ‖δ‖ ≤ `step_tol`.
    pub step_tol: f64,
    pub max_iterations: usize,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grad_tol: 1e-10,
            step_tol: 1e-12,
            max_iterations: 200,
            initial_damping: 1e-3,
        }
    }
}

/// A nonlinear least-squares problem: residual evaluator, optional analytic
/// Jacobian (row-major, residuals × parameters), optional box bounds.
pub struct FitProblem<'a> {
    param_count: usize,
    residual: Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>,
    jacobian: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>>,
    bounds: Option<Vec<(f64, f64)>>,
}

impl<'a> FitProblem<'a> {
    pub fn new<R>(param_count: usize, residual: R) -> Self
    where
        R: Fn(&[f64]) -> Vec<f64> + 'a,
    {
        FitProblem {
            param_count,
            residual: Box::new(residual),
            jacobian: None,
            bounds: None,
        }
    }

    /// Attach an analytic Jacobian returning a row-major flattened matrix
    /// with one row per residual and one column per parameter.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Vec<f64> + 'a,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }

    /// Attach per-parameter `(lo, hi)` bounds; accepted steps are clamped
    /// into the box.
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_vec((self.residual)(p))
    }

    fn jacobian_at(&self, p: &[f64], n_res: usize) -> DMatrix<f64> {
        if let Some(jac) = &self.jacobian {
            let flat = jac(p);
            debug_assert_eq!(flat.len(), n_res * self.param_count);
            DMatrix::from_row_slice(n_res, self.param_count, &flat)
        } else {
            self.finite_difference_jacobian(p, n_res)
        }
    }

    /// Central differences with relative step 1e-6 per parameter.
    fn finite_difference_jacobian(&self, p: &[f64], n_res: usize) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(n_res, self.param_count);
        let mut work = p.to_vec();
        for j in 0..self.param_count {
            let h = FD_RELATIVE_STEP * (1.0 + p[j].abs());
            work[j] = p[j] + h;
            let plus = (self.residual)(&work);
            work[j] = p[j] - h;
            let minus = (self.residual)(&work);
            work[j] = p[j];
            for i in 0..n_res {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        jac
    }

    fn clamp(&self, p: &mut [f64]) {
        if let Some(bounds) = &self.bounds {
            for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
                *v = v.clamp(lo, hi);
            }
        }
    }
}

/// Solver outcome; `converged` means a gradient- or step-norm tolerance
/// was met (hitting the iteration cap leaves it false).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Condition number of the Jacobian at the solution (σ_max/σ_min).
    pub jacobian_condition: f64,
}

fn rms(r: &DVector<f64>) -> f64 {
    (r.norm_squared() / r.len() as f64).sqrt()
}

/// Minimize ‖design·x − observations‖₂ with a rank-revealing SVD.
///
/// Exact on consistent systems; a rank-deficient design is rejected with
/// the estimated rank.
pub fn linear_least_squares(design: &DMatrix<f64>, observations: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if rows < cols {
        return Err(Error::InvalidInput(format!(
            "design has {rows} rows but {cols} columns"
        )));
    }
    if rows != observations.len() {
        return Err(Error::InvalidInput(format!(
            "design has {rows} rows but {} observations",
            observations.len()
        )));
    }
    if design.iter().any(|v| !v.is_finite()) || observations.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "design and observations must be finite".into(),
        ));
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rows.max(cols) as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < cols {
        return Err(Error::DegenerateDesign { rank, cols });
    }
    svd.solve(observations, tol)
        .map_err(|e| Error::InvalidModel(e.to_string()))
}

/// Damped Gauss-Newton iteration from `init`.
///
/// The Jacobian comes from the problem's analytic evaluator when present,
/// otherwise from central finite differences. Stops on gradient norm, step
/// norm, or the iteration cap; exhausting the damping schedule on singular
/// normal equations is a fit failure, and a non-finite initial residual an
/// invalid model.
pub fn nonlinear_least_squares(
    problem: &FitProblem<'_>,
    init: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    if init.len() != problem.param_count {
        return Err(Error::InvalidInput(format!(
            "expected {} initial parameters, got {}",
            problem.param_count,
            init.len()
        )));
    }
    if options.grad_tol <= 0.0 || options.step_tol <= 0.0 {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    if let Some(bounds) = &problem.bounds {
        for (i, (&p, &(lo, hi))) in init.iter().zip(bounds).enumerate() {
            if p < lo || p > hi {
                return Err(Error::InvalidInput(format!(
                    "initial parameter {i} = {p} outside bounds [{lo}, {hi}]"
                )));
            }
        }
    }

    let mut params = init.to_vec();
    let mut residual = problem.residuals(&params);
    if residual.len() < problem.param_count {
        return Err(Error::InvalidInput(format!(
            "residual length {} below parameter count {}",
            residual.len(),
            problem.param_count
        )));
    }
    if residual.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(
            "residual is not finite at the initial point".into(),
        ));
    }

    let n_res = residual.len();
    let mut cost = residual.norm_squared();
    let mut damping = options.initial_damping;
    let mut converged = false;
    let mut iterations = 0;
    let mut gradient_norm = f64::NAN;

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        let jacobian = problem.jacobian_at(&params, n_res);
        let gradient = jacobian.transpose() * &residual;
        gradient_norm = gradient.norm();
        if gradient_norm <= options.grad_tol * (1.0 + cost.sqrt()) {
            converged = true;
            break;
        }
        let jtj = jacobian.transpose() * &jacobian;

        // Inner damping loop: grow λ until a step reduces the cost.
        let mut accepted = false;
        while damping <= MAX_DAMPING {
            let mut system = jtj.clone();
            for d in 0..problem.param_count {
                system[(d, d)] += damping;
            }
            let step = match system.cholesky() {
                Some(chol) => chol.solve(&(-&gradient)),
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = params
                .iter()
                .zip(step.iter())
                .map(|(p, s)| p + s)
                .collect();
            problem.clamp(&mut trial);
            let trial_residual = problem.residuals(&trial);
            let trial_cost = if trial_residual.iter().all(|v| v.is_finite()) {
                trial_residual.norm_squared()
            } else {
                f64::INFINITY
            };
            if trial_cost < cost {
                let step_norm = params
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                params = trial;
                residual = trial_residual;
                cost = trial_cost;
                damping = (damping / 10.0).max(MIN_DAMPING);
                accepted = true;
                if step_norm <= options.step_tol {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            // No downhill step available: either the gradient is already
            // numerically flat (treat as converged) or the normal
            // equations stayed singular with damping exhausted.
            if gradient_norm <= 1e-6 * (1.0 + cost.sqrt()) {
                converged = true;
                break;
            }
            return Err(Error::FitFailure {
                message: "singular normal equations with damping exhausted".into(),
                residual_rms: rms(&residual),
            });
        }
        if converged {
            break;
        }
    }

    let jacobian = problem.jacobian_at(&params, n_res);
    let singular = jacobian.svd(false, false).singular_values;
    let smin = singular.min();
    let condition = if smin > 0.0 {
        singular.max() / smin
    } else {
        f64::INFINITY
    };

    Ok(FitResult {
        parameters: params,
        residual_rms: rms(&residual),
        iterations,
        converged,
        gradient_norm,
        jacobian_condition: condition,
    })
}
