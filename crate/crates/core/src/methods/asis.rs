//! Steffensen's method on the adimensional form, mapped back to `x`.

use nalgebra::DVector;

use super::{run, Frame, IterationTrace, SteffensenStepper, StoppingCriteria};
use crate::adimensional::{adimensionalize, AdimensionalForm};
use crate::divdiff::DividedDifference;
use crate::error::Result;
use crate::problem::Problem;

/// Result of an ASIS run.
#[derive(Debug, Clone)]
pub struct AsisRun {
    /// Iterates `xₙ = T⁻¹yₙ` with residuals `‖F(xₙ)‖` and steps `‖xₙ₊₁ − xₙ‖`.
    pub trace: IterationTrace,
    /// The iteration on `G` as it ran: `yₙ`, `‖G(yₙ)‖`, `‖yₙ₊₁ − yₙ‖`.
    pub adimensional: IterationTrace,
    pub form: AdimensionalForm,
}

/// `yₙ₊₁ = yₙ − G[yₙ + G(yₙ), yₙ]⁻¹G(yₙ)` from `y₀ = T x₀`.
///
/// Stopping tolerances and divergence checks apply to the original
/// coordinates, so ASIS and the classical methods stop on the same test.
pub fn asis_solve(problem: &Problem, x0: &DVector<f64>, stop: &StoppingCriteria, dd: DividedDifference) -> Result<AsisRun> {
    stop.validate()?;
    let (counted, counters) = problem.counted();
    let form = adimensionalize(&counted, x0)?;
    let to_x = |y: &DVector<f64>| form.to_original(y);
    let frame = Frame { to_x: &to_x, residual_scale: form.sigma(), norm: problem.norm() };
    let mut stepper = SteffensenStepper { dd };
    let mut adim = run(form.problem(), "asis".into(), form.y0(), stop, &mut stepper, Some(&frame));
    let total = counters.snapshot();
    adim.counts = total;

    let sigma = form.sigma();
    let norm = problem.norm();
    let iterates: Vec<DVector<f64>> = adim.iterates.iter().map(|y| form.to_original(y)).collect();
    let step_norms = iterates.windows(2).map(|w| norm.vector(&(&w[1] - &w[0]))).collect();
    let trace = IterationTrace {
        problem: problem.name().to_string(),
        method: "asis".into(),
        residual_norms: adim.residual_norms.iter().map(|r| r * sigma).collect(),
        step_norms,
        iterates,
        rcond: adim.rcond.clone(),
        status: adim.status,
        counts: total,
        fd_jacobian: !problem.has_analytic_jacobian(),
        contract_violations: Vec::new(),
        message: adim.message.clone(),
    };
    Ok(AsisRun { trace, adimensional: adim, form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::{solve, Method, Status};
    use crate::problems;
    use nalgebra::{dmatrix, dvector};

    fn tight() -> StoppingCriteria {
        StoppingCriteria { step_tol: 0.0, res_tol: 1e-15, max_iter: 100 }
    }

    #[test]
    fn asis_on_f1_beats_newton() {
        let run = asis_solve(&problems::f1(), &dvector![0.0], &tight(), DividedDifference::Componentwise).unwrap();
        assert!(run.trace.status.converged());
        let newton = solve(&problems::f1(), &Method::Newton, &dvector![0.0], &tight()).unwrap();
        let root = dvector![1.0];
        let ea = run.trace.errors_to(&root);
        let en = newton.errors_to(&root);
        for (n, (a, b)) in ea.iter().zip(&en).enumerate() {
            if *b < 1e-15 {
                break;
            }
            assert!(a <= b, "n={n}: asis {a} newton {b}");
        }
    }

    #[test]
    fn traces_are_consistent() {
        let run = asis_solve(&problems::example3(), &dvector![0.0, 0.0], &tight(), DividedDifference::Componentwise).unwrap();
        assert!(run.trace.status.converged());
        assert_eq!(run.trace.iterates.len(), run.adimensional.iterates.len());
        for (x, y) in run.trace.iterates.iter().zip(&run.adimensional.iterates) {
            assert!((run.form.to_adimensional(x) - y).norm() < 1e-13);
        }
        assert!((run.trace.last() - dvector![1.0, -1.0]).norm() < 1e-14);
        assert_eq!(run.trace.iterates[0], dvector![0.0, 0.0]);
    }

    #[test]
    fn affine_problem_one_step() {
        let p = problems::linear(dmatrix![2.0, 1.0; -1.0, 4.0], dvector![3.0, -2.0]);
        let run = asis_solve(&p, &dvector![5.0, 5.0], &StoppingCriteria {
            step_tol: 0.0,
            res_tol: 1e-13,
            max_iter: 10,
        }, DividedDifference::Componentwise)
        .unwrap();
        assert_eq!(run.trace.iterations(), 1);
        assert_eq!(run.trace.status, Status::ConvergedByResidual);
    }

    #[test]
    fn solve_dispatches_to_asis() {
        let a = solve(&problems::f1(), &Method::asis(), &dvector![0.0], &tight()).unwrap();
        let b = asis_solve(&problems::f1(), &dvector![0.0], &tight(), DividedDifference::Componentwise).unwrap();
        assert_eq!(a.iterates, b.trace.iterates);
        assert_eq!(a.method, "asis");
    }
}
