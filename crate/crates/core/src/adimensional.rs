//! Adimensional forms.
//!
//! For a map `F` and base point `x₀`, with `σ = ‖F(x₀)‖` and
//! `T = −F′(x₀)/σ`, the adimensional map is `G(y) = F(T⁻¹y)/σ` and
//! `y₀ = T x₀`. It satisfies `‖G(y₀)‖ = 1` and `G′(y₀) = −I`. Rescaling
//! `x` or multiplying `F` by a positive factor leaves `G` unchanged; a
//! negative factor turns it into `y ↦ −G(−y)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Factorized, Norm};
use crate::problem::Problem;

/// `σ` below this means `x₀` is already a root.
pub const MIN_SCALE: f64 = 1e-300;
const VALUE_TOL: f64 = 1e-12;
const DERIVATIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdimensionalForm {
    x0: DVector<f64>,
    sigma: f64,
    t: Arc<Factorized>,
    y0: DVector<f64>,
    g: Problem,
}

/// Residuals of the two normalization conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    /// `|‖G(y₀)‖ − 1|`, or `|q(0) − 1|` for a polynomial.
    pub value: f64,
    /// `‖G′(y₀) + I‖` from a finite-difference `G′`, or `|q′(0) + 1|`.
    pub derivative: f64,
}

impl NormalizationReport {
    pub fn passes(&self) -> bool {
        self.value <= VALUE_TOL && self.derivative <= DERIVATIVE_TOL
    }
}

/// Builds the adimensional form of `problem` at `x0` and verifies its
/// normalization.
pub fn adimensionalize(problem: &Problem, x0: &DVector<f64>) -> Result<AdimensionalForm> {
    let fx = problem.evaluate(x0)?;
    let sigma = problem.norm().vector(&fx);
    if sigma < MIN_SCALE {
        return Err(Error::AlreadyAtRoot);
    }
    let form = build(problem, x0, sigma)?;
    let value = (form.g.norm().vector(&form.g.evaluate(&form.y0)?) - 1.0).abs();
    let jac = form.g.jacobian(&form.y0)?;
    let derivative = form.g.norm().operator(&(jac + DMatrix::identity(form.dim(), form.dim())));
    if value > VALUE_TOL || derivative > DERIVATIVE_TOL {
        return Err(Error::Normalization(format!("|‖G(y0)‖ − 1| = {value:e}, ‖G′(y0) + I‖ = {derivative:e}")));
    }
    Ok(form)
}

/// Same construction with a caller-chosen scale and no verification.
pub fn adimensionalize_with_scale(problem: &Problem, x0: &DVector<f64>, sigma: f64) -> Result<AdimensionalForm> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {sigma} must be positive")));
    }
    build(problem, x0, sigma)
}

fn build(problem: &Problem, x0: &DVector<f64>, sigma: f64) -> Result<AdimensionalForm> {
    let jac = problem.jacobian(x0)?;
    let t = Factorized::new(-jac / sigma).map_err(|e| match e {
        Error::Singular { rcond } => Error::SingularDerivative { rcond },
        other => other,
    })?;
    let t = Arc::new(t);
    let y0 = t.matrix() * x0;
    let m = problem.dim();

    let (pf, tf) = (problem.clone(), t.clone());
    let mut g = Problem::new(format!("adim({})", problem.name()), m, move |y: &DVector<f64>| {
        let x = tf.solve(y);
        match pf.evaluate(&x) {
            Ok(v) => v / sigma,
            // non-finite output is turned back into a domain failure by G
            Err(_) => DVector::from_element(y.len(), f64::NAN),
        }
    })
    .with_norm(problem.norm());

    if problem.has_analytic_jacobian() {
        // G′(y) = F′(T⁻¹y)·T⁻¹/σ, row i solving Tᵀ zᵢ = F′ᵢ
        let (pj, tj) = (problem.clone(), t.clone());
        g = g.with_jacobian(move |y: &DVector<f64>| {
            let x = tj.solve(y);
            match pj.jacobian(&x) {
                Ok(j) => {
                    let mut out = DMatrix::zeros(m, m);
                    for i in 0..m {
                        let row = tj.solve_transpose(&j.row(i).transpose()) / sigma;
                        out.set_row(i, &row.transpose());
                    }
                    out
                }
                Err(_) => DMatrix::from_element(m, m, f64::NAN),
            }
        });
    }
    if m == 1 && problem.has_second_derivative() {
        let (ps, tinv) = (problem.clone(), 1.0 / t.matrix()[(0, 0)]);
        g = g.with_second_derivative(move |s| match ps.second_derivative(s * tinv) {
            Ok(v) => v * tinv * tinv / sigma,
            Err(_) => f64::NAN,
        });
    }
    if let Some(k2) = problem.k2() {
        // ‖G″‖ ≤ K₂‖T⁻¹‖²/σ
        let tinv = t.inverse_norm(problem.norm());
        g = g.with_k2(k2 * tinv * tinv / sigma);
    }
    Ok(AdimensionalForm { x0: x0.clone(), sigma, t, y0, g })
}

impl AdimensionalForm {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn y0(&self) -> &DVector<f64> {
        &self.y0
    }

    /// `σ = ‖F(x₀)‖`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `T = −F′(x₀)/σ`.
    pub fn transform(&self) -> &DMatrix<f64> {
        self.t.matrix()
    }

    /// The adimensional map `G` as a problem of its own.
    pub fn problem(&self) -> &Problem {
        &self.g
    }

    pub fn norm(&self) -> Norm {
        self.g.norm()
    }

    /// `x = T⁻¹y`, by a solve with the stored factorization.
    pub fn to_original(&self, y: &DVector<f64>) -> DVector<f64> {
        self.t.solve(y)
    }

    /// `y = T x`.
    pub fn to_adimensional(&self, x: &DVector<f64>) -> DVector<f64> {
        self.t.matrix() * x
    }

    /// Normalization residuals with a central-difference `G′(y₀)`.
    pub fn check_normalization(&self) -> Result<NormalizationReport> {
        let norm = self.g.norm();
        let value = (norm.vector(&self.g.evaluate(&self.y0)?) - 1.0).abs();
        let m = self.dim();
        let jac = self.g.fd_jacobian(&self.y0)?;
        let derivative = norm.operator(&(jac + DMatrix::identity(m, m)));
        Ok(NormalizationReport { value, derivative })
    }
}

/// `q(s) = (b/6)s³ + (a/2)s² − s + 1`; `b = 0` for the quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdimensionalPolynomial {
    pub degree: u8,
    pub a: f64,
    pub b: f64,
}

impl AdimensionalPolynomial {
    pub fn quadratic(a: f64) -> Result<Self> {
        Self::new(2, a, 0.0)
    }

    pub fn cubic(a: f64, b: f64) -> Result<Self> {
        Self::new(3, a, b)
    }

    fn new(degree: u8, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("a = {a}, b = {b} must be finite and >= 0")));
        }
        Ok(Self { degree, a, b })
    }

    pub fn value(&self, s: f64) -> f64 {
        ((self.b / 6.0 * s + self.a / 2.0) * s - 1.0) * s + 1.0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        (self.b / 2.0 * s + self.a) * s - 1.0
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        self.b * s + self.a
    }

    pub fn check_normalization(&self) -> NormalizationReport {
        NormalizationReport { value: (self.value(0.0) - 1.0).abs(), derivative: (self.derivative(0.0) + 1.0).abs() }
    }

    pub fn to_problem(&self) -> Problem {
        let p = *self;
        let bounded = if p.b == 0.0 { Some(p.a) } else { None };
        let prob = Problem::scalar(format!("q(a={},b={})", p.a, p.b), move |s| p.value(s))
            .with_derivative(move |s| p.derivative(s))
            .with_second_derivative(move |s| p.second_derivative(s));
        match bounded {
            Some(k) => prob.with_k2(k),
            None => prob,
        }
    }
}

/// `a = K₂Bη`, and `b = K₃Bη²` when a third-derivative bound is given.
pub fn adimensional_polynomial(k2: f64, k3: Option<f64>, b: f64, eta: f64) -> Result<AdimensionalPolynomial> {
    if !(b > 0.0 && eta > 0.0 && b.is_finite() && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("B = {b} and eta = {eta} must be positive")));
    }
    let a = k2 * b * eta;
    match k3 {
        None => AdimensionalPolynomial::quadratic(a),
        Some(k3) => AdimensionalPolynomial::cubic(a, k3 * b * eta * eta),
    }
}
