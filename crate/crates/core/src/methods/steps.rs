//! Single iteration steps `x ↦ x + Δ`.
//!
//! Each public step returns the new point; the `*_with_rcond` forms used by
//! the solver loop also report the conditioning of the solve.

use nalgebra::DVector;

use crate::divdiff::{coincident, DividedDifference};
use crate::error::{Error, Result};
use crate::linalg::Factorized;
use crate::problem::Problem;

/// Relative cancellation level below which a scalar divided difference is
/// treated as zero: `|f(y) − f(x)| ≤ 4ε·max(|f(x)|, |f(y)|)`.
const SCALAR_CANCELLATION: f64 = 4.0 * f64::EPSILON;

pub(crate) struct Stepped {
    pub x: DVector<f64>,
    pub rcond: Option<f64>,
}

fn solve_step(h: nalgebra::DMatrix<f64>, x: &DVector<f64>, fx: &DVector<f64>) -> Result<Stepped> {
    let lu = Factorized::new(h)?;
    let delta = lu.solve(fx);
    Ok(Stepped { x: x - delta, rcond: Some(lu.rcond()) })
}

/// `x − F′(x)⁻¹F(x)` through an LU solve.
pub fn newton_step(problem: &Problem, x: &DVector<f64>) -> Result<DVector<f64>> {
    let fx = problem.evaluate(x)?;
    Ok(newton_with_rcond(problem, x, &fx)?.x)
}

pub(crate) fn newton_with_rcond(problem: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<Stepped> {
    solve_step(problem.jacobian(x)?, x, fx)
}

/// `x − F[x + F(x), x]⁻¹F(x)`.
pub fn steffensen_step(problem: &Problem, x: &DVector<f64>, dd: DividedDifference) -> Result<DVector<f64>> {
    let fx = problem.evaluate(x)?;
    Ok(node_step(problem, x, &fx, &(x + &fx), dd)?.x)
}

/// `x − F[node, x]⁻¹F(x)` for an arbitrary second node.
pub(crate) fn node_step(
    problem: &Problem,
    x: &DVector<f64>,
    fx: &DVector<f64>,
    node: &DVector<f64>,
    dd: DividedDifference,
) -> Result<Stepped> {
    if problem.is_scalar() && !matches!(dd, DividedDifference::Integral { .. }) && !coincident(x[0], node[0]) {
        let fy = problem.evaluate(node)?;
        let df = fy[0] - fx[0];
        if df.abs() <= SCALAR_CANCELLATION * fx[0].abs().max(fy[0].abs()) {
            return Err(Error::Singular { rcond: 0.0 });
        }
        let h = nalgebra::DMatrix::from_element(1, 1, df / (node[0] - x[0]));
        return solve_step(h, x, fx);
    }
    solve_step(dd.matrix(problem, node, x)?, x, fx)
}

/// Slope used to make the damped Steffensen node scale free: `f′(x₀)` for
/// scalar problems, `‖F′(x₀)‖` for systems.
pub fn damping_slope(problem: &Problem, x0: &DVector<f64>) -> Result<f64> {
    let j = problem.jacobian(x0)?;
    let s = if problem.is_scalar() { j[(0, 0)] } else { problem.norm().operator(&j) };
    if s == 0.0 {
        return Err(Error::SingularDerivative { rcond: 0.0 });
    }
    Ok(s)
}

/// Steffensen step with node `x + λF(x)/slope`, `slope` from [`damping_slope`].
pub fn damped_steffensen_step(problem: &Problem, x: &DVector<f64>, lambda: f64, slope: f64) -> Result<DVector<f64>> {
    let fx = problem.evaluate(x)?;
    Ok(damped_with_rcond(problem, x, &fx, lambda, slope, DividedDifference::Componentwise)?.x)
}

pub(crate) fn damped_with_rcond(
    problem: &Problem,
    x: &DVector<f64>,
    fx: &DVector<f64>,
    lambda: f64,
    slope: f64,
    dd: DividedDifference,
) -> Result<Stepped> {
    let node = x + fx * (lambda / slope);
    node_step(problem, x, fx, &node, dd)
}

/// `x − F[x_prev, x]⁻¹F(x)`.
pub fn secant_step(problem: &Problem, x_prev: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let fx = problem.evaluate(x)?;
    Ok(node_step(problem, x, &fx, x_prev, DividedDifference::Componentwise)?.x)
}

/// Degree of logarithmic convexity `L_f = f″f/f′²`.
pub fn logarithmic_convexity(problem: &Problem, x: f64) -> Result<f64> {
    let (f, fp, fpp) = scalar_derivatives(problem, x)?;
    Ok(fpp * f / (fp * fp))
}

fn scalar_derivatives(problem: &Problem, x: f64) -> Result<(f64, f64, f64)> {
    if !problem.is_scalar() {
        return Err(Error::InvalidParameter("the h-family is defined for scalar problems".into()));
    }
    let f = problem.evaluate_scalar(x)?;
    let fp = problem.jacobian(&DVector::from_element(1, x))?[(0, 0)];
    if fp == 0.0 {
        return Err(Error::Singular { rcond: 0.0 });
    }
    let fpp = problem.second_derivative(x)?;
    Ok((f, fp, fpp))
}

/// `x − h(L_f(x))·f(x)/f′(x)`.
pub fn h_family_step(problem: &Problem, x: f64, h: &dyn Fn(f64) -> f64) -> Result<f64> {
    let (f, fp, fpp) = scalar_derivatives(problem, x)?;
    let l = fpp * f / (fp * fp);
    let hl = h(l);
    if !hl.is_finite() {
        return Err(Error::Domain(format!("h({l}) is not finite")));
    }
    Ok(x - hl * f / fp)
}

/// Halley's choice `h(L) = 1/(1 − L/2)`.
pub fn halley_h(l: f64) -> f64 {
    1.0 / (1.0 - 0.5 * l)
}
