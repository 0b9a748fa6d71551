//! Independent work items fanned out over threads.
//!
//! Every item is a pure function of its input, so the parallel and sequential
//! modes return identical results in the same order.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::{steffensen_on_adim_poly, steffensen_sequences, PolynomialIteration, SteffensenBoundSequences};
use crate::divdiff::{componentwise_dd, verify_interpolatory};
use crate::error::Result;
use crate::methods::{solve, IterationTrace, Method, StoppingCriteria};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` when the crate is built with the `parallel` feature.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Order-preserving map. Falls back to a plain loop without the `parallel`
/// feature.
pub fn map<T, U, F>(items: &[T], mode: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// One solve per starting point.
pub fn solve_many(
    problem: &Problem,
    method: &Method,
    starts: &[DVector<f64>],
    stop: &StoppingCriteria,
    mode: Execution,
) -> Vec<Result<IterationTrace>> {
    map(starts, mode, |x0| solve(problem, method, x0, stop))
}

/// Steffensen bound sequences alongside the exact iteration on the quadratic
/// for each `a`.
pub fn bounds_sweep(
    a_grid: &[f64],
    n: usize,
    mode: Execution,
) -> Vec<Result<(SteffensenBoundSequences, PolynomialIteration)>> {
    map(a_grid, mode, |&a| Ok((steffensen_sequences(a, n)?, steffensen_on_adim_poly(a, n + 1)?)))
}

/// A problem with a pair of points at which to test `F[x,y](x−y) = F(x)−F(y)`.
#[derive(Clone)]
pub struct InterpolatoryCase {
    pub problem: Problem,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// Relative interpolatory residual of the componentwise operator per case.
pub fn interpolatory_residuals(cases: &[InterpolatoryCase], mode: Execution) -> Vec<Result<f64>> {
    map(cases, mode, |c| {
        let h = componentwise_dd(&c.problem, &c.x, &c.y)?;
        verify_interpolatory(&h, &c.problem, &c.x, &c.y)
    })
}
