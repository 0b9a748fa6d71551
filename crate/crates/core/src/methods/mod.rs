//! Iteration engines and the shared solver loop.

mod asis;
mod steps;
mod trace;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::divdiff::DividedDifference;
use crate::error::{Error, Result};
use crate::linalg::Factorized;
use crate::problem::{EvalCounts, Problem};

pub use asis::{asis_solve, AsisRun};
pub use steps::{
    damped_steffensen_step, damping_slope, h_family_step, halley_h, logarithmic_convexity, newton_step, secant_step,
    steffensen_step,
};
pub use trace::{fmt_f64, IterationTrace, Status};

use steps::Stepped;

/// `‖xₙ‖` beyond this counts as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// A residual this many times above the smallest one seen counts as divergence.
pub const DIVERGENCE_GROWTH: f64 = 1e6;

/// Scalar function `h` of the h-family.
pub type HFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Iteration rule `x_{k+1} = x_k + Δ_k`.
#[derive(Clone)]
pub enum Method {
    /// Point bisection on `[lo, hi]`; iterates are interval midpoints.
    Bisection { lo: f64, hi: f64 },
    /// `Δ = −c·F(x)`.
    FixedSlope { c: f64 },
    /// `Δ = −λ F′(x₀)⁻¹F(x)`.
    DampedFirstOrder { lambda: f64 },
    Newton,
    /// Secant with the extra starting point `x₋₁`.
    Secant { x_prev: DVector<f64> },
    /// `Δ = −F[x + F(x), x]⁻¹F(x)`.
    Steffensen { dd: DividedDifference },
    /// Steffensen with node `x + λF(x)/f′(x₀)` (scalar) or
    /// `x + λF(x)/‖F′(x₀)‖` (systems).
    DampedSteffensen { lambda: f64 },
    /// `Δ = −h(L_f)·f/f′`; scalar problems only.
    HFamily { name: String, h: HFn },
    /// Steffensen on the adimensional form, reported in original coordinates.
    Asis { dd: DividedDifference },
}

impl fmt::Debug for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Method {
    pub fn steffensen() -> Self {
        Method::Steffensen { dd: DividedDifference::Componentwise }
    }

    pub fn asis() -> Self {
        Method::Asis { dd: DividedDifference::Componentwise }
    }

    pub fn secant(x_prev: f64) -> Self {
        Method::Secant { x_prev: DVector::from_element(1, x_prev) }
    }

    pub fn h_family(name: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Method::HFamily { name: name.into(), h: Arc::new(h) }
    }

    pub fn halley() -> Self {
        Method::h_family("halley", halley_h)
    }

    pub fn name(&self) -> String {
        match self {
            Method::Bisection { .. } => "bisection".into(),
            Method::FixedSlope { .. } => "fixed-slope".into(),
            Method::DampedFirstOrder { .. } => "damped-first-order".into(),
            Method::Newton => "newton".into(),
            Method::Secant { .. } => "secant".into(),
            Method::Steffensen { .. } => "steffensen".into(),
            Method::DampedSteffensen { .. } => "damped-steffensen".into(),
            Method::HFamily { name, .. } => format!("h-family:{name}"),
            Method::Asis { .. } => "asis".into(),
        }
    }

    fn uses_jacobian(&self) -> bool {
        matches!(
            self,
            Method::Newton | Method::DampedFirstOrder { .. } | Method::DampedSteffensen { .. } | Method::HFamily { .. }
        )
    }
}

/// When to stop: `‖xₙ₊₁ − xₙ‖ ≤ step_tol`, `‖F(xₙ)‖ ≤ res_tol`, or
/// `max_iter` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingCriteria {
    pub step_tol: f64,
    pub res_tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingCriteria {
    fn default() -> Self {
        Self { step_tol: 1e-15, res_tol: 1e-15, max_iter: 100 }
    }
}

impl StoppingCriteria {
    pub fn new(step_tol: f64, res_tol: f64, max_iter: usize) -> Result<Self> {
        let s = Self { step_tol, res_tol, max_iter };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.step_tol) || !ok(self.res_tol) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!("bad stopping criteria {self:?}")));
        }
        Ok(())
    }
}

/// One step of a method, with whatever state it carries between steps.
pub(crate) trait Stepper {
    fn step(&mut self, problem: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut>;
}

pub(crate) struct StepOut {
    pub stepped: Stepped,
    pub contract_ok: bool,
}

impl From<Stepped> for StepOut {
    fn from(stepped: Stepped) -> Self {
        StepOut { stepped, contract_ok: true }
    }
}

/// Coordinates in which stopping and divergence are judged, when they
/// differ from the iterated ones.
pub(crate) struct Frame<'a> {
    pub to_x: &'a dyn Fn(&DVector<f64>) -> DVector<f64>,
    /// `‖F(x)‖ = residual_scale · ‖G(y)‖`.
    pub residual_scale: f64,
    pub norm: crate::linalg::Norm,
}

/// Runs `stepper` from `x0`. Never fails: every stop is reported in the
/// trace status.
pub(crate) fn run(
    problem: &Problem,
    method: String,
    x0: &DVector<f64>,
    stop: &StoppingCriteria,
    stepper: &mut dyn Stepper,
    frame: Option<&Frame<'_>>,
) -> IterationTrace {
    let norm = problem.norm();
    let mut trace = IterationTrace {
        problem: problem.name().to_string(),
        method,
        iterates: vec![x0.clone()],
        residual_norms: Vec::new(),
        step_norms: Vec::new(),
        rcond: Vec::new(),
        status: Status::MaxIter,
        counts: EvalCounts::default(),
        fd_jacobian: false,
        contract_violations: Vec::new(),
        message: None,
    };
    let judged_residual = |r: f64| frame.map_or(r, |f| r * f.residual_scale);
    let judged_point = |x: &DVector<f64>| frame.map_or_else(|| x.clone(), |f| (f.to_x)(x));
    let judged_norm = frame.map_or(norm, |f| f.norm);

    let mut x = x0.clone();
    let mut fx = match problem.evaluate(&x) {
        Ok(v) => v,
        Err(e) => {
            trace.residual_norms.push(f64::NAN);
            trace.status = Status::DomainFailure;
            trace.message = Some(e.to_string());
            return trace;
        }
    };
    let r0 = norm.vector(&fx);
    trace.residual_norms.push(r0);
    if judged_residual(r0) <= stop.res_tol {
        trace.status = Status::ConvergedByResidual;
        return trace;
    }
    let mut x_judged = judged_point(&x);
    let mut min_res = judged_residual(r0);

    for n in 0..stop.max_iter {
        let out = match stepper.step(problem, &x, &fx) {
            Ok(o) => o,
            Err(e) => {
                trace.status = match e {
                    Error::Singular { .. } | Error::SingularDerivative { .. } => Status::SingularOperator,
                    _ => Status::DomainFailure,
                };
                trace.message = Some(e.to_string());
                return trace;
            }
        };
        let next = out.stepped.x;
        if next.iter().any(|v| !v.is_finite()) {
            trace.status = Status::DomainFailure;
            trace.message = Some("non-finite iterate".into());
            return trace;
        }
        let fnext = match problem.evaluate(&next) {
            Ok(v) => v,
            Err(e) => {
                trace.status = Status::DomainFailure;
                trace.message = Some(e.to_string());
                return trace;
            }
        };
        if !out.contract_ok {
            trace.contract_violations.push(n);
        }
        let next_judged = judged_point(&next);
        let step_judged = judged_norm.vector(&(&next_judged - &x_judged));
        let res = norm.vector(&fnext);
        trace.step_norms.push(norm.vector(&(&next - &x)));
        trace.residual_norms.push(res);
        trace.rcond.push(out.stepped.rcond);
        trace.iterates.push(next.clone());
        let res_judged = judged_residual(res);
        if res_judged <= stop.res_tol {
            trace.status = Status::ConvergedByResidual;
            return trace;
        }
        if step_judged <= stop.step_tol {
            trace.status = Status::ConvergedByStep;
            return trace;
        }
        if judged_norm.vector(&next_judged) > DIVERGENCE_NORM || res_judged > DIVERGENCE_GROWTH * min_res {
            trace.status = Status::Diverged;
            return trace;
        }
        min_res = min_res.min(res_judged);
        x = next;
        fx = fnext;
        x_judged = next_judged;
    }
    trace.status = Status::MaxIter;
    trace
}

struct NewtonStepper;

impl Stepper for NewtonStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        Ok(steps::newton_with_rcond(p, x, fx)?.into())
    }
}

struct FixedSlopeStepper {
    c: f64,
}

impl Stepper for FixedSlopeStepper {
    fn step(&mut self, _: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        Ok(Stepped { x: x - fx * self.c, rcond: None }.into())
    }
}

struct DampedFirstOrderStepper {
    lambda: f64,
    lu: Factorized,
}

impl Stepper for DampedFirstOrderStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        // contract 0 < |λ f′(x)/f′(x₀)| < 2, monitored as ‖λ F′(x₀)⁻¹F′(x)‖
        let j = p.jacobian(x)?;
        let scaled = self.lu.solve_matrix(&j) * self.lambda;
        let gauge = if p.is_scalar() { scaled[(0, 0)].abs() } else { p.norm().operator(&scaled) };
        let contract_ok = gauge > 0.0 && gauge < 2.0;
        let delta = self.lu.solve(fx) * self.lambda;
        Ok(StepOut { stepped: Stepped { x: x - delta, rcond: Some(self.lu.rcond()) }, contract_ok })
    }
}

struct SecantStepper {
    prev: DVector<f64>,
}

impl Stepper for SecantStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        let s = steps::node_step(p, x, fx, &self.prev, DividedDifference::Componentwise)?;
        self.prev = x.clone();
        Ok(s.into())
    }
}

pub(crate) struct SteffensenStepper {
    pub dd: DividedDifference,
}

impl Stepper for SteffensenStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        Ok(steps::node_step(p, x, fx, &(x + fx), self.dd)?.into())
    }
}

struct DampedSteffensenStepper {
    lambda: f64,
    slope: f64,
}

impl Stepper for DampedSteffensenStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        Ok(steps::damped_with_rcond(p, x, fx, self.lambda, self.slope, DividedDifference::Componentwise)?.into())
    }
}

struct HFamilyStepper {
    h: HFn,
}

impl Stepper for HFamilyStepper {
    fn step(&mut self, p: &Problem, x: &DVector<f64>, _: &DVector<f64>) -> Result<StepOut> {
        let next = steps::h_family_step(p, x[0], self.h.as_ref())?;
        Ok(Stepped { x: DVector::from_element(1, next), rcond: None }.into())
    }
}

struct BisectionStepper {
    lo: f64,
    hi: f64,
    f_lo: f64,
}

impl Stepper for BisectionStepper {
    fn step(&mut self, _: &Problem, x: &DVector<f64>, fx: &DVector<f64>) -> Result<StepOut> {
        // x is the current midpoint; keep the half with the sign change,
        // the lower half on a tie
        let (mid, fm) = (x[0], fx[0]);
        if self.f_lo * fm <= 0.0 {
            self.hi = mid;
        } else {
            self.lo = mid;
            self.f_lo = fm;
        }
        Ok(Stepped { x: DVector::from_element(1, 0.5 * (self.lo + self.hi)), rcond: None }.into())
    }
}

fn check_start(problem: &Problem, x0: &DVector<f64>) -> Result<()> {
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x0 must be finite".into()));
    }
    Ok(())
}

fn finite_param(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be finite")))
    }
}

/// Runs `method` on `problem` from `x0`.
///
/// Errors are reserved for bad inputs (dimension, non-finite start, bad
/// bracket, method not applicable). Singular operators, domain failures and
/// divergence end the run with the matching [`Status`] and the partial trace.
///
/// Bisection ignores `x0` and starts from the bracket midpoint. For ASIS the
/// returned trace is in original coordinates; use [`asis_solve`] for the
/// adimensional one as well.
pub fn solve(problem: &Problem, method: &Method, x0: &DVector<f64>, stop: &StoppingCriteria) -> Result<IterationTrace> {
    stop.validate()?;
    check_start(problem, x0)?;
    if let Method::Asis { dd } = method {
        return Ok(asis_solve(problem, x0, stop, *dd)?.trace);
    }
    let (counted, counters) = problem.counted();
    let mut start = x0.clone();
    let mut stepper: Box<dyn Stepper> = match method {
        Method::Newton => Box::new(NewtonStepper),
        Method::FixedSlope { c } => {
            finite_param("c", *c)?;
            Box::new(FixedSlopeStepper { c: *c })
        }
        Method::DampedFirstOrder { lambda } => {
            finite_param("lambda", *lambda)?;
            let lu = Factorized::new(problem.jacobian(x0)?).map_err(|e| match e {
                Error::Singular { rcond } => Error::SingularDerivative { rcond },
                other => other,
            })?;
            Box::new(DampedFirstOrderStepper { lambda: *lambda, lu })
        }
        Method::Secant { x_prev } => {
            check_start(problem, x_prev)?;
            Box::new(SecantStepper { prev: x_prev.clone() })
        }
        Method::Steffensen { dd } => {
            if matches!(dd, DividedDifference::Scalar) && !problem.is_scalar() {
                return Err(Error::InvalidParameter("scalar divided difference on a system".into()));
            }
            Box::new(SteffensenStepper { dd: *dd })
        }
        Method::DampedSteffensen { lambda } => {
            finite_param("lambda", *lambda)?;
            Box::new(DampedSteffensenStepper { lambda: *lambda, slope: damping_slope(problem, x0)? })
        }
        Method::HFamily { h, .. } => {
            if !problem.is_scalar() {
                return Err(Error::InvalidParameter("the h-family is defined for scalar problems".into()));
            }
            Box::new(HFamilyStepper { h: h.clone() })
        }
        Method::Bisection { lo, hi } => {
            if !problem.is_scalar() {
                return Err(Error::InvalidParameter("bisection is defined for scalar problems".into()));
            }
            finite_param("lo", *lo)?;
            finite_param("hi", *hi)?;
            let (lo, hi) = if lo <= hi { (*lo, *hi) } else { (*hi, *lo) };
            let f_lo = problem.evaluate_scalar(lo)?;
            let f_hi = problem.evaluate_scalar(hi)?;
            if f_lo * f_hi > 0.0 {
                return Err(Error::InvalidParameter(format!("no sign change on [{lo}, {hi}]")));
            }
            start = DVector::from_element(1, 0.5 * (lo + hi));
            Box::new(BisectionStepper { lo, hi, f_lo })
        }
        Method::Asis { .. } => unreachable!("handled above"),
    };
    let mut trace = run(&counted, method.name(), &start, stop, stepper.as_mut(), None);
    trace.problem = problem.name().to_string();
    trace.counts = counters.snapshot();
    trace.fd_jacobian = method.uses_jacobian() && !problem.has_analytic_jacobian();
    Ok(trace)
}
