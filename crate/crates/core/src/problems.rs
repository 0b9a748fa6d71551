//! Bundled problems used by the experiments and tests.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::problem::Problem;

/// `f₁(x) = exp(x − 1) − 1`, root `x* = 1`.
pub fn f1() -> Problem {
    Problem::scalar("f1", |x| (x - 1.0).exp() - 1.0)
        .with_derivative(|x| (x - 1.0).exp())
        .with_second_derivative(|x| (x - 1.0).exp())
}

/// `f₂(x) = f₁(2x) = exp(2x − 1) − 1`, root `x* = 1/2`.
pub fn f2() -> Problem {
    Problem::scalar("f2", |x| (2.0 * x - 1.0).exp() - 1.0)
        .with_derivative(|x| 2.0 * (2.0 * x - 1.0).exp())
        .with_second_derivative(|x| 4.0 * (2.0 * x - 1.0).exp())
}

/// The two-variable system
///
/// ```text
/// F₁(x, y) = −4x(y − x² + 2) − 2(1 − x)
/// F₂(x, y) = 2(y − x² + 2)
/// ```
///
/// with root `(1, −1)`.
pub fn example3() -> Problem {
    Problem::new("example3", 2, |v: &DVector<f64>| {
        let (x, y) = (v[0], v[1]);
        let w = y - x * x + 2.0;
        dvector![-4.0 * x * w - 2.0 * (1.0 - x), 2.0 * w]
    })
    .with_jacobian(|v: &DVector<f64>| {
        let (x, y) = (v[0], v[1]);
        let w = y - x * x + 2.0;
        dmatrix![
            -4.0 * w + 8.0 * x * x + 2.0, -4.0 * x;
            -4.0 * x, 2.0
        ]
    })
}

/// Gradient of `H(x, y) = (x² + b y²)/2`, i.e. `F(x, y) = (x, b y)`.
pub fn zigzag(b: f64) -> Problem {
    Problem::new(format!("zigzag(b={b})"), 2, move |v: &DVector<f64>| dvector![v[0], b * v[1]])
        .with_jacobian(move |_: &DVector<f64>| dmatrix![1.0, 0.0; 0.0, b])
        .with_k2(0.0)
}

/// `F(x) = A x − rhs`.
pub fn linear(a: DMatrix<f64>, rhs: DVector<f64>) -> Problem {
    assert!(a.is_square() && a.nrows() == rhs.len());
    let m = rhs.len();
    let a2 = a.clone();
    Problem::new("linear", m, move |x: &DVector<f64>| &a * x - &rhs)
        .with_jacobian(move |_: &DVector<f64>| a2.clone())
        .with_k2(0.0)
}

/// Adimensional quadratic `q(s) = (a/2)s² − s + 1`.
pub fn adimensional_quadratic(a: f64) -> Problem {
    Problem::scalar(format!("q(a={a})"), move |s| 0.5 * a * s * s - s + 1.0)
        .with_derivative(move |s| a * s - 1.0)
        .with_second_derivative(move |_| a)
        .with_k2(a)
}

/// Majorizing quadratic `p(t) = (K₂/2)t² − t/B + η/B`.
pub fn majorizing_quadratic(k2: f64, b: f64, eta: f64) -> Problem {
    Problem::scalar(format!("p(K2={k2},B={b},eta={eta})"), move |t| 0.5 * k2 * t * t - t / b + eta / b)
        .with_derivative(move |t| k2 * t - 1.0 / b)
        .with_second_derivative(move |_| k2)
        .with_k2(k2)
}
