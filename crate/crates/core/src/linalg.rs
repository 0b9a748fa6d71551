//! Vector norms, induced operator norms and small dense solves.
//!
//! Every linear solve in the crate goes through [`Factorized`], which keeps an
//! LU factorization with partial pivoting together with an exact reciprocal
//! condition number in the 1-norm. Explicit inverses are never formed for
//! iteration steps.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this reciprocal condition number a linear operator counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_SWEEPS: usize = 200;

/// Norm used for vectors; operator norms are the induced ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
}

impl Norm {
    pub fn vector(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::Euclidean => v.norm(),
            Norm::Max => v.amax(),
        }
    }

    /// Induced operator norm: spectral norm for Euclidean, max row sum for Max.
    pub fn operator(self, a: &DMatrix<f64>) -> f64 {
        match self {
            Norm::Euclidean => spectral_norm(a),
            Norm::Max => max_row_sum(a),
        }
    }
}

pub fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_col_sum(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    power_iteration(n, |v| a.tr_mul(&(a * v)))
}

/// Power iteration for the dominant eigenvalue of a symmetric positive
/// semidefinite operator, returned as its square root.
fn power_iteration(n: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // A uniform start can be orthogonal to the dominant direction, so a
    // second, irregular start is always run and the larger estimate kept.
    let starts = [
        DVector::from_element(n, 1.0),
        DVector::from_fn(n, |i, _| ((i as f64 + 1.0) * 0.754_877_666_2).fract() - 0.5),
    ];
    let mut best: f64 = 0.0;
    for start in starts {
        let norm = start.norm();
        if norm == 0.0 {
            continue;
        }
        let mut v = start / norm;
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_SWEEPS {
            let w = apply(&v);
            let next = v.dot(&w);
            let wn = w.norm();
            if wn == 0.0 || !wn.is_finite() {
                lambda = next.max(0.0);
                break;
            }
            v = w / wn;
            let done = (next - lambda).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE);
            lambda = next;
            if done {
                break;
            }
        }
        lambda = lambda.max(v.dot(&apply(&v)));
        best = best.max(lambda);
    }
    best.max(0.0).sqrt()
}

/// LU factorization with partial pivoting plus its reciprocal condition
/// number `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
#[derive(Debug, Clone)]
pub struct Factorized {
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    lu_t: LU<f64, Dyn, Dyn>,
    rcond: f64,
}

impl Factorized {
    /// Factorizes `a`, failing with [`Error::Singular`] when the reciprocal
    /// condition number is below [`SINGULAR_RCOND`].
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let f = Self::new_unchecked(a)?;
        if f.rcond < SINGULAR_RCOND {
            return Err(Error::Singular { rcond: f.rcond });
        }
        Ok(f)
    }

    /// Factorizes without the conditioning threshold. Exactly singular
    /// matrices still fail.
    pub fn new_unchecked(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        let lu = LU::new(a.clone());
        let lu_t = LU::new(a.transpose());
        let n = a.nrows();
        let anorm = max_col_sum(&a);
        let mut inv_norm: f64 = 0.0;
        let mut singular = anorm == 0.0;
        if !singular {
            for j in 0..n {
                let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
                match lu.solve(&e) {
                    Some(col) if col.iter().all(|v| v.is_finite()) => {
                        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
                    }
                    _ => {
                        singular = true;
                        break;
                    }
                }
            }
        }
        let rcond = if singular || inv_norm == 0.0 { 0.0 } else { 1.0 / (anorm * inv_norm) };
        if rcond == 0.0 {
            return Err(Error::Singular { rcond });
        }
        Ok(Self { matrix: a, lu, lu_t, rcond })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("factorization checked nonsingular at construction")
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu_t.solve(b).expect("factorization checked nonsingular at construction")
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(b).expect("factorization checked nonsingular at construction")
    }

    /// Operator norm of `A⁻¹` in the given norm, through solves only.
    pub fn inverse_norm(&self, norm: Norm) -> f64 {
        let n = self.dim();
        match norm {
            Norm::Euclidean => power_iteration(n, |v| self.solve_transpose(&self.solve(v))),
            Norm::Max => {
                // max row sum of A⁻¹ = max column sum of A⁻ᵀ
                (0..n)
                    .map(|j| {
                        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
                        self.solve_transpose(&e).iter().map(|v| v.abs()).sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}
