//! Run records and their CSV/JSON forms.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Result;
use crate::problem::EvalCounts;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ConvergedByStep,
    ConvergedByResidual,
    MaxIter,
    SingularOperator,
    DomainFailure,
    Diverged,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::ConvergedByStep | Status::ConvergedByResidual)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::ConvergedByStep => "converged-by-step",
            Status::ConvergedByResidual => "converged-by-residual",
            Status::MaxIter => "max-iter",
            Status::SingularOperator => "singular-operator",
            Status::DomainFailure => "domain-failure",
            Status::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full history of one solver run.
///
/// `iterates[n]` is `xₙ`, `residual_norms[n]` is `‖F(xₙ)‖` and
/// `step_norms[n]` is `‖xₙ₊₁ − xₙ‖`, so there is one step fewer than
/// iterates. `rcond[n]` is the reciprocal condition number of the linear
/// operator solved in step `n`, if the method solves one.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub problem: String,
    pub method: String,
    #[serde(serialize_with = "points")]
    pub iterates: Vec<DVector<f64>>,
    pub residual_norms: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub rcond: Vec<Option<f64>>,
    pub status: Status,
    pub counts: EvalCounts,
    /// A finite-difference Jacobian stood in for a missing analytic one.
    pub fd_jacobian: bool,
    /// Steps at which a monitored method contract was violated.
    pub contract_violations: Vec<usize>,
    /// Why the run stopped early, when it did.
    pub message: Option<String>,
}

fn points<S: Serializer>(v: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
    rows.serialize(s)
}

impl IterationTrace {
    /// Number of completed steps.
    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("a trace always holds x0")
    }

    pub fn dim(&self) -> usize {
        self.iterates[0].len()
    }

    /// `‖xₙ − x*‖` in the Euclidean norm for every iterate.
    pub fn errors_to(&self, root: &DVector<f64>) -> Vec<f64> {
        self.iterates.iter().map(|x| (x - root).norm()).collect()
    }

    /// First index with `‖xₙ − x*‖ < tol`.
    pub fn first_below(&self, root: &DVector<f64>, tol: f64) -> Option<usize> {
        self.iterates.iter().position(|x| (x - root).norm() < tol)
    }

    /// Columns `n, x1..xm, residual_norm, step_norm`; the step column holds
    /// `‖xₙ₊₁ − xₙ‖` and is empty on the last row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let m = self.dim();
        let mut header = vec!["n".to_string()];
        header.extend((1..=m).map(|i| format!("x{i}")));
        header.push("residual_norm".into());
        header.push("step_norm".into());
        out.write_record(&header)?;
        for (n, x) in self.iterates.iter().enumerate() {
            let mut row = vec![n.to_string()];
            row.extend(x.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(self.residual_norms[n]));
            row.push(self.step_norms.get(n).map(|v| fmt_f64(*v)).unwrap_or_default());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Shortest round-trip decimal form; `NaN`/`inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}
