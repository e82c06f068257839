//! Damped least squares with numeric differentiation.
//!
//! Small and deliberately boring: central-difference Jacobian, normal
//! equations damped by lambda times the JtJ diagonal, lambda down a decade on
//! accepted steps and up a decade on rejected ones. The calibration problems
//! here have at most a few hundred parameters, so dense Cholesky is plenty.

use nalgebra::{DMatrix, DVector};

use super::CalibError;

#[derive(Debug, Clone)]
pub struct LeastSquaresOptions {
    pub initial_lambda: f64,
    pub lambda_factor: f64,
    pub max_lambda: f64,
    /// Stop once an accepted step improves cost by less than this fraction.
    pub relative_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LeastSquaresOptions {
    fn default() -> Self {
        Self {
            initial_lambda: 1e-3,
            lambda_factor: 10.0,
            max_lambda: 1e14,
            relative_tolerance: 1e-10,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    pub params: DVector<f64>,
    /// Cost (squared residual norm) after every accepted step, starting with
    /// the initial cost. Non-increasing by construction.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `|residuals(p)|^2` starting from `initial`.
///
/// The residual function returns `None` where the model is undefined (for
/// calibration: a corner fell behind the camera); such trial steps are
/// rejected and the damping raised. `None` at the initial point is
/// `DivergedPose` since there is nowhere to start.
pub fn solve_least_squares<F>(
    residuals: F,
    initial: DVector<f64>,
    opts: &LeastSquaresOptions,
) -> Result<LeastSquaresSolution, CalibError>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let mut p = initial;
    let mut r = residuals(&p).ok_or(CalibError::DivergedPose)?;
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = opts.initial_lambda;
    let n = p.len();

    for iteration in 1..=opts.max_iterations {
        let jac = numeric_jacobian(&residuals, &p, &r)?;
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r;
        if gradient.amax() < 1e-14 || cost == 0.0 {
            return Ok(LeastSquaresSolution {
                params: p,
                cost_history: history,
                iterations: iteration,
            });
        }

        loop {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let trial = damped
                .cholesky()
                .map(|ch| ch.solve(&(-&gradient)))
                .and_then(|delta| {
                    let candidate = &p + &delta;
                    residuals(&candidate).map(|res| (delta, candidate, res))
                });

            match trial {
                Some((delta, candidate, res)) if res.norm_squared() <= cost => {
                    let new_cost = res.norm_squared();
                    let improvement = cost - new_cost;
                    let negligible_step = delta.norm() <= 1e-14 * (p.norm() + 1e-14);
                    p = candidate;
                    r = res;
                    cost = new_cost;
                    history.push(cost);
                    lambda = (lambda / opts.lambda_factor).max(1e-12);
                    if negligible_step
                        || improvement <= opts.relative_tolerance * history[history.len() - 2].max(1e-300)
                    {
                        return Ok(LeastSquaresSolution {
                            params: p,
                            cost_history: history,
                            iterations: iteration,
                        });
                    }
                    break;
                }
                _ => {
                    lambda *= opts.lambda_factor;
                    if lambda > opts.max_lambda {
                        // Damping maxed out without finding a descent step:
                        // numerically at a minimum.
                        return Ok(LeastSquaresSolution {
                            params: p,
                            cost_history: history,
                            iterations: iteration,
                        });
                    }
                }
            }
        }
    }

    Err(CalibError::NonConvergence {
        iterations: opts.max_iterations,
    })
}

/// Central differences, step 1e-6 scaled by parameter magnitude. Falls back
/// to a one-sided difference when a probe leaves the valid domain.
fn numeric_jacobian<F>(
    f: &F,
    p: &DVector<f64>,
    r0: &DVector<f64>,
) -> Result<DMatrix<f64>, CalibError>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let m = r0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = 1e-6 * p[j].abs().max(1.0);
        let mut plus = p.clone();
        plus[j] += h;
        let mut minus = p.clone();
        minus[j] -= h;
        let column = match (f(&plus), f(&minus)) {
            (Some(rp), Some(rm)) => (rp - rm) / (2.0 * h),
            (Some(rp), None) => (rp - r0) / h,
            (None, Some(rm)) => (r0 - rm) / h,
            (None, None) => return Err(CalibError::DivergedPose),
        };
        jac.set_column(j, &column);
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_problem_converges_in_one_step() {
        let target = DVector::from_vec(vec![3.0, -2.0, 0.5]);
        let t = target.clone();
        let sol = solve_least_squares(
            move |p| Some(p - &t),
            DVector::zeros(3),
            &LeastSquaresOptions::default(),
        )
        .unwrap();
        assert!((sol.params - target).norm() < 1e-8);
        assert!(*sol.cost_history.last().unwrap() < 1e-16);
    }

    #[test]
    fn curved_valley_converges() {
        // Rosenbrock in least-squares form; optimum at (1, 1).
        let sol = solve_least_squares(
            |p| Some(DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])),
            DVector::from_vec(vec![-1.2, 1.0]),
            &LeastSquaresOptions::default(),
        )
        .unwrap();
        assert!((sol.params[0] - 1.0).abs() < 1e-6);
        assert!((sol.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cost_history_is_monotone_non_increasing() {
        let sol = solve_least_squares(
            |p| Some(DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])),
            DVector::from_vec(vec![-1.2, 1.0]),
            &LeastSquaresOptions::default(),
        )
        .unwrap();
        assert!(sol.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(sol.cost_history.len() >= 2);
    }

    #[test]
    fn starting_at_the_optimum_returns_immediately() {
        let sol = solve_least_squares(
            |p| Some(p.clone()),
            DVector::zeros(2),
            &LeastSquaresOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.cost_history, vec![0.0]);
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let opts = LeastSquaresOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let err = solve_least_squares(
            |p| Some(DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])),
            DVector::from_vec(vec![-1.2, 1.0]),
            &opts,
        );
        assert!(matches!(err, Err(CalibError::NonConvergence { iterations: 2 })));
    }

    #[test]
    fn invalid_start_is_rejected() {
        let err = solve_least_squares(|_| None, DVector::zeros(1), &LeastSquaresOptions::default());
        assert!(matches!(err, Err(CalibError::DivergedPose)));
    }
}
