//! Nonlinear problems `F: ℝᵐ → ℝᵐ`, linear rescalings of them, and the
//! Kantorovich constants `(K₂, B, η)` at a starting point.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Factorized, Norm};

pub type VectorFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
pub type MatrixFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Relative finite-difference step, floored at the same absolute value.
pub const FD_STEP: f64 = 1e-7;

/// Finite-difference step for coordinate value `xj`.
pub fn fd_step(xj: f64) -> f64 {
    FD_STEP.max(FD_STEP * xj.abs())
}

/// A square nonlinear map with optional derivative information.
///
/// Cloning is cheap; the evaluators are shared behind `Arc`s and must be
/// pure functions of their argument.
#[derive(Clone)]
pub struct Problem {
    name: String,
    dim: usize,
    f: Arc<VectorFn>,
    jacobian: Option<Arc<MatrixFn>>,
    second: Option<Arc<ScalarFn>>,
    k2: Option<f64>,
    norm: Norm,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("k2", &self.k2)
            .field("norm", &self.norm)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        assert!(dim > 0, "problem dimension must be positive");
        Self {
            name: name.into(),
            dim,
            f: Arc::new(f),
            jacobian: None,
            second: None,
            k2: None,
            norm: Norm::default(),
        }
    }

    /// Scalar problem `f: ℝ → ℝ`.
    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, move |x: &DVector<f64>| DVector::from_element(1, f(x[0])))
    }

    pub fn with_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    /// Analytic derivative of a scalar problem.
    pub fn with_derivative<D>(self, d: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert_eq!(self.dim, 1, "with_derivative is for scalar problems");
        self.with_jacobian(move |x: &DVector<f64>| DMatrix::from_element(1, 1, d(x[0])))
    }

    /// Analytic second derivative of a scalar problem.
    pub fn with_second_derivative<D>(mut self, d: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert_eq!(self.dim, 1, "with_second_derivative is for scalar problems");
        self.second = Some(Arc::new(d));
        self
    }

    pub fn with_k2(mut self, k2: f64) -> Self {
        assert!(k2 >= 0.0 && k2.is_finite(), "K2 must be finite and nonnegative");
        self.k2 = Some(k2);
        self
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn k2(&self) -> Option<f64> {
        self.k2
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second.is_some()
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite argument for {}", self.name)));
        }
        Ok(())
    }

    /// `F(x)`; non-finite output is a domain failure.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let v = (self.f)(x);
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite value of {}", self.name)));
        }
        Ok(v)
    }

    /// Scalar convenience wrapper around [`Problem::evaluate`].
    pub fn evaluate_scalar(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(&DVector::from_element(1, x))?[0])
    }

    /// `F′(x)`: analytic when provided, central differences otherwise.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(j) => {
                self.check_point(x)?;
                let m = j(x);
                if m.nrows() != self.dim || m.ncols() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: m.ncols() });
                }
                if m.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain(format!("non-finite Jacobian of {}", self.name)));
                }
                Ok(m)
            }
            None => self.fd_jacobian(x),
        }
    }

    /// Jacobian column `∂F/∂xⱼ` at `x`.
    pub fn jacobian_column(&self, x: &DVector<f64>, j: usize) -> Result<DVector<f64>> {
        match &self.jacobian {
            Some(_) => Ok(self.jacobian(x)?.column(j).into_owned()),
            None => {
                self.check_point(x)?;
                self.fd_column(x, j)
            }
        }
    }

    fn fd_column(&self, x: &DVector<f64>, j: usize) -> Result<DVector<f64>> {
        let h = fd_step(x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let width = xp[j] - xm[j];
        Ok((self.evaluate(&xp)? - self.evaluate(&xm)?) / width)
    }

    /// Central-difference Jacobian with step `max(1e-7, 1e-7·|xⱼ|)`.
    pub fn fd_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            m.set_column(j, &self.fd_column(x, j)?);
        }
        Ok(m)
    }

    /// `f″(x)` of a scalar problem: analytic when provided, otherwise a
    /// central difference of `f′`.
    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::InvalidParameter("second derivative needs a scalar problem".into()));
        }
        if let Some(d) = &self.second {
            let v = d(x);
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite f'' of {}", self.name)));
            }
            return Ok(v);
        }
        let h = 1e-5_f64.max(1e-5 * x.abs());
        let fp = |t: f64| -> Result<f64> { Ok(self.jacobian(&DVector::from_element(1, t))?[(0, 0)]) };
        Ok((fp(x + h)? - fp(x - h)?) / (2.0 * h))
    }

    /// Returns a copy whose evaluations are tallied in the returned counters.
    pub fn counted(&self) -> (Problem, Arc<EvalCounters>) {
        let counters = Arc::new(EvalCounters::default());
        let mut p = self.clone();
        let inner = self.f.clone();
        let c = counters.clone();
        p.f = Arc::new(move |x: &DVector<f64>| {
            c.f.fetch_add(1, Ordering::Relaxed);
            inner(x)
        });
        if let Some(j) = self.jacobian.clone() {
            let c = counters.clone();
            p.jacobian = Some(Arc::new(move |x: &DVector<f64>| {
                c.jacobian.fetch_add(1, Ordering::Relaxed);
                j(x)
            }));
        }
        (p, counters)
    }
}

/// Evaluation tallies of one run.
#[derive(Debug, Default)]
pub struct EvalCounters {
    f: AtomicUsize,
    jacobian: AtomicUsize,
}

impl EvalCounters {
    pub fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            f_evals: self.f.load(Ordering::Relaxed),
            jacobian_evals: self.jacobian.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub f_evals: usize,
    pub jacobian_evals: usize,
}

/// `x̃ ↦ k·F(c·x̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScaling {
    pub c: f64,
    pub k: f64,
}

impl LinearScaling {
    pub fn new(c: f64, k: f64) -> Result<Self> {
        if c == 0.0 || k == 0.0 || !c.is_finite() || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("scaling factors must be finite and nonzero (c={c}, k={k})")));
        }
        Ok(Self { c, k })
    }

    pub fn inverse(self) -> Self {
        Self { c: 1.0 / self.c, k: 1.0 / self.k }
    }
}

/// Rescales variable and value. The Jacobian picks up `k·c` and the
/// second-derivative bound `|k|·c²`.
pub fn apply_scaling(problem: &Problem, s: LinearScaling) -> Problem {
    let LinearScaling { c, k } = s;
    let f = problem.f.clone();
    let mut out = problem.clone();
    out.name = format!("{}∘scale(c={c},k={k})", problem.name);
    out.f = Arc::new(move |x: &DVector<f64>| f(&(x * c)) * k);
    out.jacobian = problem.jacobian.clone().map(|j| -> Arc<MatrixFn> {
        Arc::new(move |x: &DVector<f64>| j(&(x * c)) * (k * c))
    });
    out.second = problem.second.clone().map(|d| -> Arc<ScalarFn> {
        Arc::new(move |x: f64| k * c * c * d(c * x))
    });
    out.k2 = problem.k2.map(|k2| k2 * k.abs() * c * c);
    out
}

/// Which Kantorovich hypothesis set `η` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KantorovichMode {
    /// `η ≥ ‖F′(x₀)⁻¹F(x₀)‖`
    Newton,
    /// `η ≥ B‖F(x₀)‖`
    Asis,
}

/// Where the second-derivative bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum K2Source {
    Explicit(f64),
    /// The bound stored on the problem.
    FromProblem,
    /// Sampled over the ball `B(x₀, R)`; `None` means `R = 2η`.
    Sampled { radius: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichData {
    pub k2: f64,
    pub b: f64,
    pub eta: f64,
    pub a: f64,
}

impl KantorovichData {
    pub fn new(k2: f64, b: f64, eta: f64) -> Result<Self> {
        if !(k2 >= 0.0 && k2.is_finite()) {
            return Err(Error::InvalidParameter(format!("K2 = {k2} must be finite and >= 0")));
        }
        if !(b > 0.0 && b.is_finite() && eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("B = {b} and eta = {eta} must be positive")));
        }
        Ok(Self { k2, b, eta, a: k2 * b * eta })
    }

    /// `a ≤ 1/2`.
    pub fn satisfies_hypotheses(&self) -> bool {
        self.a <= 0.5
    }
}

const K2_SAMPLES: usize = 64;
const K2_SEED: u64 = 0x6b32;

/// Kantorovich constants at `x0`.
///
/// `B = ‖F′(x₀)⁻¹‖` in the problem's norm; `η` per `mode`; `K₂` per
/// `k2_source`. The sampled bound is the largest directional variation of
/// the Jacobian, `‖(F′(z+hu) − F′(z−hu))/2h‖`, over coordinate directions
/// `u` and a fixed pseudo-random sample of the ball.
pub fn kantorovich_data(
    problem: &Problem,
    x0: &DVector<f64>,
    mode: KantorovichMode,
    k2_source: K2Source,
) -> Result<KantorovichData> {
    let fx = problem.evaluate(x0)?;
    let norm = problem.norm();
    if norm.vector(&fx) == 0.0 {
        return Err(Error::AlreadyAtRoot);
    }
    let jac = problem.jacobian(x0)?;
    let lu = Factorized::new(jac).map_err(|e| match e {
        Error::Singular { rcond } => Error::SingularDerivative { rcond },
        other => other,
    })?;
    let b = lu.inverse_norm(norm);
    let eta = match mode {
        KantorovichMode::Newton => norm.vector(&lu.solve(&fx)),
        KantorovichMode::Asis => b * norm.vector(&fx),
    };
    let k2 = match k2_source {
        K2Source::Explicit(k) => k,
        K2Source::FromProblem => problem
            .k2()
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no stored K2 bound", problem.name())))?,
        K2Source::Sampled { radius } => sampled_k2(problem, x0, radius.unwrap_or(2.0 * eta))?,
    };
    KantorovichData::new(k2, b, eta)
}

/// Largest sampled second-derivative proxy over `B(x0, radius)`.
pub fn sampled_k2(problem: &Problem, x0: &DVector<f64>, radius: f64) -> Result<f64> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling radius {radius} must be finite and >= 0")));
    }
    let m = problem.dim();
    let norm = problem.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(K2_SEED);
    let mut points = vec![x0.clone()];
    for j in 0..m {
        for sign in [-1.0, 1.0] {
            let mut p = x0.clone();
            p[j] += sign * radius;
            points.push(p);
        }
    }
    for _ in 0..K2_SAMPLES {
        let dir = DVector::from_fn(m, |_, _| rng.random_range(-1.0..=1.0));
        let dn = norm.vector(&dir);
        if dn == 0.0 {
            continue;
        }
        let r: f64 = rng.random_range(0.0..=1.0);
        points.push(x0 + dir * (radius * r / dn));
    }
    let mut best: f64 = 0.0;
    for z in &points {
        for j in 0..m {
            let h = 1e-5_f64.max(1e-5 * z[j].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let d = (problem.jacobian(&zp)? - problem.jacobian(&zm)?) / (zp[j] - zm[j]);
            best = best.max(norm.operator(&d));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use nalgebra::dvector;

    #[test]
    fn f1_values() {
        let f1 = problems::f1();
        assert_eq!(f1.evaluate_scalar(1.0).unwrap(), 0.0);
        assert!((f1.evaluate_scalar(0.0).unwrap() - (-0.632_120_558_828_557_7)).abs() < 1e-15);
    }

    #[test]
    fn zigzag_zero_at_origin() {
        let p = problems::zigzag(0.3);
        assert_eq!(p.evaluate(&dvector![0.0, 0.0]).unwrap(), dvector![0.0, 0.0]);
    }

    #[test]
    fn non_finite_output_is_domain_failure() {
        let p = Problem::scalar("log", f64::ln);
        assert!(matches!(p.evaluate_scalar(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.evaluate(&dvector![f64::NAN]), Err(Error::Domain(_))));
    }

    #[test]
    fn dimension_checked() {
        let p = problems::example3();
        assert!(matches!(p.evaluate(&dvector![1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn example3_jacobian_at_origin() {
        let p = problems::example3();
        let j = p.jacobian(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(j, nalgebra::dmatrix![-6.0, 0.0; 0.0, 2.0]);
        let fd = p.fd_jacobian(&dvector![0.0, 0.0]).unwrap();
        assert!((fd - j).amax() < 1e-6);
    }

    #[test]
    fn f1_derivative_at_zero() {
        let f1 = problems::f1();
        let j = f1.jacobian(&dvector![0.0]).unwrap();
        assert!((j[(0, 0)] - (-1.0f64).exp()).abs() < 1e-16);
        let fd = f1.fd_jacobian(&dvector![0.0]).unwrap();
        assert!((fd[(0, 0)] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn linear_map_jacobian_is_constant() {
        let p = problems::linear(nalgebra::dmatrix![2.0, 1.0; -1.0, 3.0], dvector![0.0, 0.0]);
        for x in [dvector![0.0, 0.0], dvector![5.0, -7.0]] {
            assert!((p.fd_jacobian(&x).unwrap() - nalgebra::dmatrix![2.0, 1.0; -1.0, 3.0]).amax() < 1e-7);
        }
    }

    #[test]
    fn fd_jacobian_agrees_with_analytic_on_bundled_problems() {
        let cases: Vec<(Problem, Vec<DVector<f64>>)> = vec![
            (problems::f1(), vec![dvector![0.0], dvector![0.7], dvector![2.5]]),
            (problems::f2(), vec![dvector![0.0], dvector![0.4]]),
            (problems::example3(), vec![dvector![0.0, 0.0], dvector![0.3, -0.8], dvector![1.2, 2.0]]),
            (problems::zigzag(0.1), vec![dvector![0.1, 1.0]]),
        ];
        for (p, xs) in cases {
            for x in xs {
                let a = p.jacobian(&x).unwrap();
                let fd = p.fd_jacobian(&x).unwrap();
                for (u, v) in a.iter().zip(fd.iter()) {
                    assert!((u - v).abs() <= 1e-5 * u.abs().max(1.0), "{}: {u} vs {v}", p.name());
                }
            }
        }
    }

    #[test]
    fn scaling_f1_gives_f2() {
        let f2 = apply_scaling(&problems::f1(), LinearScaling::new(2.0, 1.0).unwrap());
        assert_eq!(f2.evaluate_scalar(0.5).unwrap(), 0.0);
        for x in [-1.0, 0.0, 0.3, 0.9] {
            let want = (2.0 * x - 1.0f64).exp() - 1.0;
            assert!((f2.evaluate_scalar(x).unwrap() - want).abs() <= 1e-15 * want.abs().max(1.0));
        }
    }

    #[test]
    fn identity_scaling_is_identity() {
        let p = problems::example3();
        let q = apply_scaling(&p, LinearScaling::new(1.0, 1.0).unwrap());
        let x = dvector![0.3, -1.1];
        assert_eq!(p.evaluate(&x).unwrap(), q.evaluate(&x).unwrap());
        assert_eq!(p.jacobian(&x).unwrap(), q.jacobian(&x).unwrap());
    }

    #[test]
    fn value_scaling_keeps_roots() {
        let q = apply_scaling(&problems::f1(), LinearScaling::new(1.0, 3.0).unwrap());
        assert_eq!(q.evaluate_scalar(1.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_scale_factor_rejected() {
        assert!(LinearScaling::new(0.0, 1.0).is_err());
        assert!(LinearScaling::new(1.0, 0.0).is_err());
    }

    #[test]
    fn scaling_transforms_derivatives() {
        let p = problems::f1().with_k2(1.0);
        let s = LinearScaling::new(-3.0, 0.5).unwrap();
        let q = apply_scaling(&p, s);
        assert_eq!(q.k2(), Some(0.5 * 9.0));
        let x = 0.2;
        let jq = q.jacobian(&dvector![x]).unwrap()[(0, 0)];
        let fd = q.fd_jacobian(&dvector![x]).unwrap()[(0, 0)];
        assert!((jq - fd).abs() < 1e-7);
        assert!((q.second_derivative(x).unwrap() - 0.5 * 9.0 * (-3.0 * x - 1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn kantorovich_threshold_for_f1() {
        // K2 = sup f1'' on [x0, 1] = 1 gives a = u(u-1) with u = e^{1-x0}.
        let x0 = 1.0 - ((1.0 + 3f64.sqrt()) / 2.0).ln();
        assert!((x0 - 0.6881).abs() < 5e-5);
        let d = kantorovich_data(&problems::f1(), &dvector![x0], KantorovichMode::Newton, K2Source::Explicit(1.0)).unwrap();
        assert!((d.a - 0.5).abs() < 1e-14, "a = {}", d.a);
    }

    #[test]
    fn kantorovich_linear_problem_has_zero_a() {
        let p = problems::linear(nalgebra::dmatrix![2.0, 0.0; 0.0, 0.5], dvector![1.0, 1.0]);
        let d = kantorovich_data(&p, &dvector![0.0, 0.0], KantorovichMode::Newton, K2Source::Sampled { radius: None }).unwrap();
        assert!(d.k2 < 1e-6);
        assert!(d.a < 1e-6);
        assert!((d.b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kantorovich_brute_force_norms() {
        // x0 = 0.9 with K2 = sup f1'' on B(x0, 2η): compare against hand formulas.
        let x0: f64 = 0.9;
        let b = (1.0 - x0).exp();
        let eta = (1.0 - (x0 - 1.0f64).exp()) * b;
        let k2 = (x0 + 2.0 * eta - 1.0).exp();
        let d = kantorovich_data(&problems::f1(), &dvector![x0], KantorovichMode::Newton, K2Source::Explicit(k2)).unwrap();
        assert!((d.b - b).abs() < 1e-12);
        assert!((d.eta - eta).abs() < 1e-12);
        assert!((d.a - k2 * b * eta).abs() < 1e-12);
        let asis = kantorovich_data(&problems::f1(), &dvector![x0], KantorovichMode::Asis, K2Source::Explicit(k2)).unwrap();
        assert!((asis.eta - b * (1.0 - (x0 - 1.0f64).exp())).abs() < 1e-12);
        // sampled bound over the same ball is the supremum up to FD error
        let sampled = kantorovich_data(&problems::f1(), &dvector![x0], KantorovichMode::Newton, K2Source::Sampled { radius: None }).unwrap();
        assert!((sampled.k2 - k2).abs() < 1e-6, "{} vs {}", sampled.k2, k2);
    }

    #[test]
    fn kantorovich_errors() {
        let f1 = problems::f1();
        assert_eq!(
            kantorovich_data(&f1, &dvector![1.0], KantorovichMode::Newton, K2Source::Explicit(1.0)),
            Err(Error::AlreadyAtRoot)
        );
        let flat = Problem::scalar("flat", |x| x * x + 1.0).with_derivative(|x| 2.0 * x);
        assert!(matches!(
            kantorovich_data(&flat, &dvector![0.0], KantorovichMode::Newton, K2Source::Explicit(2.0)),
            Err(Error::SingularDerivative { .. })
        ));
        assert!(kantorovich_data(&f1, &dvector![0.0], KantorovichMode::Newton, K2Source::FromProblem).is_err());
    }

    #[test]
    fn a_invariant_under_scaling() {
        let p = problems::example3().with_k2(10.0);
        let x0 = dvector![0.1, -0.3];
        let base = kantorovich_data(&p, &x0, KantorovichMode::Newton, K2Source::FromProblem).unwrap();
        for (c, k) in [(2.0, 1.0), (0.5, 7.0), (-3.0, 0.25)] {
            let q = apply_scaling(&p, LinearScaling::new(c, k).unwrap());
            let scaled = kantorovich_data(&q, &(&x0 / c), KantorovichMode::Newton, K2Source::FromProblem).unwrap();
            assert!((scaled.a - base.a).abs() <= 1e-10 * base.a.max(1.0), "{} vs {}", scaled.a, base.a);
        }
    }

    #[test]
    fn counters_tally_evaluations() {
        let (p, c) = problems::example3().counted();
        let x = dvector![0.0, 0.0];
        p.evaluate(&x).unwrap();
        p.evaluate(&x).unwrap();
        p.jacobian(&x).unwrap();
        assert_eq!(c.snapshot(), EvalCounts { f_evals: 2, jacobian_evals: 1 });
    }
}
