//! First-order divided differences `F[x, y]`: linear operators with
//! `F[x, y](x − y) = F(x) − F(y)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::quadrature::gauss_legendre_unit;

/// Nodes closer than this (relative to `max(1, |x|)`) are coincident.
pub const COINCIDENT_TOL: f64 = 1e-14;

pub const DEFAULT_QUADRATURE_NODES: usize = 8;

/// Which divided-difference operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DividedDifference {
    /// `(f(x) − f(y))/(x − y)`; scalar problems only.
    Scalar,
    /// Column-by-column telescoping quotients.
    #[default]
    Componentwise,
    /// Gauss–Legendre quadrature of `F′` along the segment.
    Integral { nodes: usize },
}

impl DividedDifference {
    pub fn integral() -> Self {
        DividedDifference::Integral { nodes: DEFAULT_QUADRATURE_NODES }
    }

    pub fn matrix(&self, problem: &Problem, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        match *self {
            DividedDifference::Scalar => {
                if !problem.is_scalar() {
                    return Err(Error::InvalidParameter("scalar divided difference on a system".into()));
                }
                Ok(DMatrix::from_element(1, 1, scalar_dd(problem, x[0], y[0])?.value))
            }
            DividedDifference::Componentwise => componentwise_dd(problem, x, y),
            DividedDifference::Integral { nodes } => integral_dd(problem, x, y, nodes),
        }
    }
}

pub(crate) fn coincident(x: f64, y: f64) -> bool {
    (x - y).abs() < COINCIDENT_TOL * x.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDd {
    pub value: f64,
    /// The nodes coincided and `f′(x)` was returned instead.
    pub coincident: bool,
}

/// `f[x, y] = (f(x) − f(y))/(x − y)`, falling back to `f′(x)` for
/// coincident nodes.
pub fn scalar_dd(problem: &Problem, x: f64, y: f64) -> Result<ScalarDd> {
    if !problem.is_scalar() {
        return Err(Error::InvalidParameter("scalar_dd needs a scalar problem".into()));
    }
    if coincident(x, y) {
        let d = problem.jacobian(&DVector::from_element(1, x))?[(0, 0)];
        return Ok(ScalarDd { value: d, coincident: true });
    }
    let fx = problem.evaluate_scalar(x)?;
    let fy = problem.evaluate_scalar(y)?;
    Ok(ScalarDd { value: (fx - fy) / (x - y), coincident: false })
}

/// Componentwise divided difference:
///
/// ```text
/// Hᵢⱼ = [Fᵢ(y₁..yⱼ, xⱼ₊₁..xₘ) − Fᵢ(y₁..yⱼ₋₁, xⱼ..xₘ)] / (yⱼ − xⱼ)
/// ```
///
/// Columns with coincident coordinates take the Jacobian column at the
/// chain point `(y₁..yⱼ₋₁, xⱼ..xₘ)`.
pub fn componentwise_dd(problem: &Problem, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = problem.dim();
    if x.len() != m || y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: x.len().min(y.len()) });
    }
    let mut h = DMatrix::zeros(m, m);
    let mut point = x.clone();
    let mut value = problem.evaluate(&point)?;
    for j in 0..m {
        if coincident(x[j], y[j]) {
            h.set_column(j, &problem.jacobian_column(&point, j)?);
            point[j] = y[j];
            value = problem.evaluate(&point)?;
            continue;
        }
        point[j] = y[j];
        let next = problem.evaluate(&point)?;
        h.set_column(j, &((&next - &value) / (y[j] - x[j])));
        value = next;
    }
    Ok(h)
}

/// `∫₀¹ F′(x + θ(y − x)) dθ` by `nodes`-point Gauss–Legendre.
pub fn integral_dd(problem: &Problem, x: &DVector<f64>, y: &DVector<f64>, nodes: usize) -> Result<DMatrix<f64>> {
    let m = problem.dim();
    if x.len() != m || y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: x.len().min(y.len()) });
    }
    if nodes == 0 {
        return Err(Error::InvalidParameter("integral divided difference needs at least one node".into()));
    }
    let dir = y - x;
    let mut h = DMatrix::zeros(m, m);
    for (theta, w) in gauss_legendre_unit(nodes) {
        h += problem.jacobian(&(x + &dir * theta))? * w;
    }
    Ok(h)
}

/// `‖H(x − y) − (F(x) − F(y))‖ / max(1, ‖F(x) − F(y)‖)`.
pub fn verify_interpolatory(h: &DMatrix<f64>, problem: &Problem, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let norm = problem.norm();
    let df = problem.evaluate(x)? - problem.evaluate(y)?;
    let r = h * (x - y) - &df;
    Ok(norm.vector(&r) / norm.vector(&df).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use nalgebra::{dmatrix, dvector};

    fn square() -> Problem {
        Problem::scalar("t^2", |t| t * t).with_derivative(|t| 2.0 * t)
    }

    #[test]
    fn scalar_square() {
        let d = scalar_dd(&square(), 1.0, 3.0).unwrap();
        assert_eq!(d, ScalarDd { value: 4.0, coincident: false });
        assert_eq!(scalar_dd(&square(), 3.0, 1.0).unwrap().value, 4.0);
    }

    #[test]
    fn scalar_f1_value() {
        let e1 = (-1.0f64).exp() - 1.0;
        let d = scalar_dd(&problems::f1(), 0.0, e1).unwrap();
        let oracle = (((e1 - 1.0).exp() - 1.0) - ((-1.0f64).exp() - 1.0)) / e1;
        assert!((d.value - oracle).abs() < 1e-15);
        assert!((d.value - 0.27268).abs() < 5e-6);
    }

    #[test]
    fn scalar_coincident_nodes_fall_back_to_derivative() {
        let d = scalar_dd(&problems::f1(), 0.3, 0.3).unwrap();
        assert!(d.coincident);
        assert_eq!(d.value, (0.3f64 - 1.0).exp());
    }

    #[test]
    fn scalar_limit_approaches_derivative() {
        let f1 = problems::f1();
        let x = 0.4;
        let exact = (x - 1.0f64).exp();
        for h in [1e-7, 1e-8, 1e-9] {
            let d = scalar_dd(&f1, x, x + h).unwrap();
            assert!(!d.coincident);
            assert!((d.value - exact).abs() < 1e-6, "h={h}");
        }
    }

    #[test]
    fn componentwise_linear_map_is_exact() {
        let a = dmatrix![2.0, -1.0, 0.5; 0.0, 3.0, 1.0; 4.0, 0.0, -2.0];
        let p = problems::linear(a.clone(), dvector![1.0, 2.0, 3.0]);
        let h = componentwise_dd(&p, &dvector![0.1, -0.2, 0.7], &dvector![1.5, 0.3, -2.0]).unwrap();
        assert!((h - a).amax() < 1e-14);
    }

    #[test]
    fn componentwise_reduces_to_scalar() {
        let f1 = problems::f1();
        let h = componentwise_dd(&f1, &dvector![0.2], &dvector![-0.7]).unwrap();
        assert_eq!(h[(0, 0)], scalar_dd(&f1, 0.2, -0.7).unwrap().value);
    }

    #[test]
    fn componentwise_example3_identity() {
        let p = problems::example3();
        let (x, y) = (dvector![0.0, 0.0], dvector![0.1, -0.2]);
        let h = componentwise_dd(&p, &x, &y).unwrap();
        assert!(verify_interpolatory(&h, &p, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn componentwise_coincident_column_uses_jacobian() {
        let p = problems::example3();
        let (x, y) = (dvector![0.5, 1.0], dvector![0.5, -0.25]);
        let h = componentwise_dd(&p, &x, &y).unwrap();
        let j = p.jacobian(&x).unwrap();
        assert_eq!(h.column(0), j.column(0));
        assert!(verify_interpolatory(&h, &p, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn integral_linear_exact_any_nodes() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let p = problems::linear(a.clone(), dvector![0.0, 1.0]);
        for q in 1..5 {
            let h = integral_dd(&p, &dvector![0.0, 0.0], &dvector![2.0, -1.0], q).unwrap();
            assert!((h - &a).amax() < 1e-14);
        }
    }

    #[test]
    fn integral_quadratic_exact_with_two_nodes() {
        let p = problems::example3();
        // example3 is cubic in x; use a genuinely quadratic map instead
        let quad = Problem::new("quad", 2, |v: &DVector<f64>| dvector![v[0] * v[1] + v[0], v[0] * v[0] - 2.0 * v[1] * v[1]])
            .with_jacobian(|v: &DVector<f64>| dmatrix![v[1] + 1.0, v[0]; 2.0 * v[0], -4.0 * v[1]]);
        let (x, y) = (dvector![0.3, -1.2], dvector![-0.8, 2.5]);
        for q in 2..6 {
            let h = integral_dd(&quad, &x, &y, q).unwrap();
            assert!(verify_interpolatory(&h, &quad, &x, &y).unwrap() <= 1e-13, "q={q}");
        }
        // cubic terms need more nodes, but 8 is plenty
        let h = integral_dd(&p, &x, &y, DEFAULT_QUADRATURE_NODES).unwrap();
        assert!(verify_interpolatory(&h, &p, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn integral_matches_scalar_on_f1() {
        let f1 = problems::f1();
        let y = (-1.0f64).exp() - 1.0;
        let h = integral_dd(&f1, &dvector![0.0], &dvector![y], 20).unwrap();
        let s = scalar_dd(&f1, 0.0, y).unwrap().value;
        assert!((h[(0, 0)] - s).abs() < 1e-12);
    }

    #[test]
    fn wrong_operator_residual() {
        let id = Problem::new("id", 1, |v: &DVector<f64>| v.clone());
        let r = verify_interpolatory(&DMatrix::zeros(1, 1), &id, &dvector![3.0], &dvector![1.0]).unwrap();
        // ‖0 − 2‖ / max(1, 2)
        assert_eq!(r, 1.0);
    }

    #[test]
    fn derivative_approximation_bound() {
        // ‖F[x,y] − F′(x)‖ ≤ K₂‖x − y‖ with K₂ = 2·max(|a|)... use q(s), K₂ = a
        let a = 0.4;
        let q = problems::adimensional_quadratic(a);
        for (x, y) in [(0.0, 1.0), (-2.0, 3.0), (0.5, 0.51)] {
            let d = scalar_dd(&q, x, y).unwrap().value;
            let fp = a * x - 1.0;
            assert!((d - fp).abs() <= a * (x - y).abs() + 1e-15);
        }
    }

    #[test]
    fn scalar_mean_value_bracket() {
        // f[x,y] = f′(x) + f″(ξ)/2 (y − x), ξ between nodes; f₁″ is monotone
        let f1 = problems::f1();
        for (x, y) in [(0.0, 0.8), (1.5, -0.5), (0.2, 0.2001)] {
            let d = scalar_dd(&f1, x, y).unwrap().value;
            let fp = (x - 1.0f64).exp();
            let lo = f1.second_derivative(x.min(y)).unwrap();
            let hi = f1.second_derivative(x.max(y)).unwrap();
            let half = 0.5 * (y - x);
            let (b1, b2) = (fp + lo * half, fp + hi * half);
            let (lo_b, hi_b) = (b1.min(b2), b1.max(b2));
            assert!(d >= lo_b - 1e-14 && d <= hi_b + 1e-14, "{d} not in [{lo_b}, {hi_b}]");
        }
    }

    #[test]
    fn variant_dispatch() {
        let f1 = problems::f1();
        let (x, y) = (dvector![0.0], dvector![0.5]);
        let s = DividedDifference::Scalar.matrix(&f1, &x, &y).unwrap();
        let c = DividedDifference::Componentwise.matrix(&f1, &x, &y).unwrap();
        let i = DividedDifference::integral().matrix(&f1, &x, &y).unwrap();
        assert_eq!(s, c);
        assert!((s - i).amax() < 1e-12);
        assert!(DividedDifference::Scalar.matrix(&problems::example3(), &dvector![0.0, 0.0], &dvector![1.0, 1.0]).is_err());
    }
}
