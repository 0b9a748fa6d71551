//! Reproducible experiments: traces, tables, order estimates and the checks
//! each experiment asserts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize, Serializer};

use crate::bounds::{
    majorizing_roots, newton_sequences, steffensen_on_adim_poly, steffensen_sequences, BoundSystem, Positivity,
};
use crate::divdiff::DividedDifference;
use crate::error::{Error, Result};
use crate::methods::{asis_solve, fmt_f64, solve, IterationTrace, Method, Status, StoppingCriteria};
use crate::orders::{aq_order, q_order, r_order, OrderEstimate};
use crate::problem::{kantorovich_data, K2Source, KantorovichData, KantorovichMode, Problem};
use crate::problems;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Example1,
    Example2,
    Example3,
    Zigzag,
    BoundsReport,
    Custom,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Example1,
        ExperimentName::Example2,
        ExperimentName::Example3,
        ExperimentName::Zigzag,
        ExperimentName::BoundsReport,
        ExperimentName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Example1 => "example1",
            ExperimentName::Example2 => "example2",
            ExperimentName::Example3 => "example3",
            ExperimentName::Zigzag => "zigzag",
            ExperimentName::BoundsReport => "bounds-report",
            ExperimentName::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Everything an experiment run needs. Unset fields take the experiment's
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    /// Method names, see [`parse_method`]. Empty means the experiment's set.
    #[serde(default)]
    pub methods: Vec<String>,
    /// Bundled problem for `custom`: `f1`, `f2`, `example3` or `zigzag`.
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Second starting point of the secant method.
    #[serde(default)]
    pub x_prev: Option<Vec<f64>>,
    /// Bracket for bisection.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub step_tol: Option<f64>,
    #[serde(default)]
    pub res_tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Damping of the damped methods; slope `c` of the fixed-slope method.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Zigzag conditioning, or the zigzag problem for `custom`.
    #[serde(default)]
    pub b: Option<f64>,
    /// Kantorovich constant for `bounds-report` (with `K₂ = a`, `B = η = 1`).
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub k2: Option<f64>,
    #[serde(default)]
    pub bound_b: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub system: Option<BoundSystem>,
    /// Number of bound-sequence steps or zigzag steps.
    #[serde(default)]
    pub n: Option<usize>,
    /// Run `bounds-report` even when `a > 1/2`.
    #[serde(default, rename = "override")]
    pub override_hypotheses: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            methods: Vec::new(),
            problem: None,
            x0: None,
            x_prev: None,
            interval: None,
            step_tol: None,
            res_tol: None,
            max_iter: None,
            lambda: None,
            b: None,
            a: None,
            k2: None,
            bound_b: None,
            eta: None,
            system: None,
            n: None,
            override_hypotheses: false,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every numeric parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let mut nums: Vec<(&str, f64)> = Vec::new();
        for (name, v) in [
            ("step_tol", self.step_tol),
            ("res_tol", self.res_tol),
            ("lambda", self.lambda),
            ("b", self.b),
            ("a", self.a),
            ("k2", self.k2),
            ("bound_b", self.bound_b),
            ("eta", self.eta),
        ] {
            if let Some(v) = v {
                nums.push((name, v));
            }
        }
        for v in self.x0.iter().flatten() {
            nums.push(("x0", *v));
        }
        for v in self.x_prev.iter().flatten() {
            nums.push(("x_prev", *v));
        }
        for v in self.interval.iter().flatten() {
            nums.push(("interval", *v));
        }
        if let Some((name, v)) = nums.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
        }
        self.stopping(StoppingCriteria::default())?;
        Ok(())
    }

    fn stopping(&self, base: StoppingCriteria) -> Result<StoppingCriteria> {
        StoppingCriteria::new(
            self.step_tol.unwrap_or(base.step_tol),
            self.res_tol.unwrap_or(base.res_tol),
            self.max_iter.unwrap_or(base.max_iter),
        )
    }

    fn x0_or(&self, default: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(self.x0.as_deref().unwrap_or(default))
    }

    fn method_names(&self, default: &[&str]) -> Vec<String> {
        if self.methods.is_empty() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            self.methods.clone()
        }
    }
}

/// Method from its CLI name.
///
/// `newton`, `steffensen`, `asis`, `steffensen-integral`, `asis-integral`,
/// `secant`, `halley`, `damped-steffensen`, `damped-first-order`,
/// `fixed-slope` and `bisection`. `secant` takes `x_prev` (default
/// `x0 − 1/2`), the damped methods and `fixed-slope` take `lambda`
/// (default 1), and `bisection` needs `interval`.
pub fn parse_method(name: &str, cfg: &ExperimentConfig, x0: &DVector<f64>) -> Result<Method> {
    let lambda = cfg.lambda.unwrap_or(1.0);
    Ok(match name {
        "newton" => Method::Newton,
        "steffensen" => Method::steffensen(),
        "asis" => Method::asis(),
        "steffensen-integral" => Method::Steffensen { dd: DividedDifference::integral() },
        "asis-integral" => Method::Asis { dd: DividedDifference::integral() },
        "secant" => Method::Secant {
            x_prev: match &cfg.x_prev {
                Some(v) => DVector::from_column_slice(v),
                None => x0.add_scalar(-0.5),
            },
        },
        "halley" => Method::halley(),
        "damped-steffensen" => Method::DampedSteffensen { lambda },
        "damped-first-order" => Method::DampedFirstOrder { lambda },
        "fixed-slope" => Method::FixedSlope { c: lambda },
        "bisection" => {
            let [lo, hi] = cfg
                .interval
                .ok_or_else(|| Error::InvalidParameter("bisection needs an interval".into()))?;
            Method::Bisection { lo, hi }
        }
        other => return Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
    })
}

/// A table cell; missing values serialize as an empty CSV field or `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Num(v) => fmt_f64(*v),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(n) => s.serialize_u64(*n as u64),
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(v) => s.serialize_str(&fmt_f64(*v)),
            Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// An order estimate, or why none could be made.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOrder {
    pub method: String,
    pub estimate: std::result::Result<OrderEstimate, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentName,
    pub traces: Vec<IterationTrace>,
    pub tables: Vec<Table>,
    pub orders: Vec<MethodOrder>,
    pub checks: Vec<Check>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: ExperimentName,
    passed: bool,
    checks: &'a [Check],
    orders: &'a [MethodOrder],
    metadata: &'a BTreeMap<String, String>,
    statuses: BTreeMap<String, Status>,
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

impl ExperimentReport {
    fn new(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            traces: Vec::new(),
            tables: Vec::new(),
            orders: Vec::new(),
            checks: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn trace(&self, method: &str) -> Option<&IterationTrace> {
        self.traces.iter().find(|t| t.method == method)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    fn summary(&self) -> Summary<'_> {
        Summary {
            experiment: self.experiment,
            passed: self.passed(),
            checks: &self.checks,
            orders: &self.orders,
            metadata: &self.metadata,
            statuses: self.traces.iter().map(|t| (format!("{}/{}", t.problem, t.method), t.status)).collect(),
        }
    }

    /// Summary (checks, orders, metadata) as pretty JSON.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// The whole report, traces included, as pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the report into `dir` and returns the files written.
    ///
    /// CSV: one file per trace (`<experiment>_<problem>_<method>.csv`), one
    /// per table (`<experiment>_<table>.csv`) and `<experiment>_summary.json`.
    /// JSON: a single `<experiment>.json`.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let exp = self.experiment.as_str();
        let mut written = Vec::new();
        match format {
            OutputFormat::Json => {
                let path = dir.join(format!("{exp}.json"));
                std::fs::write(&path, self.to_json()? + "\n")?;
                written.push(path);
            }
            OutputFormat::Csv => {
                for t in &self.traces {
                    let path = dir.join(format!("{exp}_{}_{}.csv", file_stem(&t.problem), file_stem(&t.method)));
                    t.write_csv(std::fs::File::create(&path)?)?;
                    written.push(path);
                }
                for t in &self.tables {
                    let path = dir.join(format!("{exp}_{}.csv", file_stem(&t.name)));
                    t.write_csv(std::fs::File::create(&path)?)?;
                    written.push(path);
                }
                let path = dir.join(format!("{exp}_summary.json"));
                std::fs::write(&path, self.summary_json()? + "\n")?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Dispatch on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentName::Example1 => run_example1(cfg),
        ExperimentName::Example2 => run_example2(cfg),
        ExperimentName::Example3 => run_example3(cfg),
        ExperimentName::Zigzag => run_zigzag(cfg),
        ExperimentName::BoundsReport => run_bounds_report(cfg),
        ExperimentName::Custom => run_custom(cfg),
    }
}

/// Threshold below which errors count as converged in the comparisons.
pub const COMPARISON_FLOOR: f64 = 1e-15;

fn run_methods(problem: &Problem, names: &[String], cfg: &ExperimentConfig, x0: &DVector<f64>, stop: &StoppingCriteria) -> Result<Vec<IterationTrace>> {
    names.iter().map(|name| solve(problem, &parse_method(name, cfg, x0)?, x0, stop)).collect()
}

/// `n` against `log₁₀‖xₙ − x*‖` per trace; `-inf` for an exact hit, empty
/// past the end of a trace.
pub fn log_error_table(name: &str, traces: &[IterationTrace], root: &DVector<f64>) -> Table {
    let errors: Vec<Vec<f64>> = traces.iter().map(|t| t.errors_to(root)).collect();
    let len = errors.iter().map(Vec::len).max().unwrap_or(0);
    let mut columns = vec!["n".to_string()];
    columns.extend(traces.iter().map(|t| format!("log10_error_{}", t.method)));
    let rows = (0..len)
        .map(|n| {
            let mut row = vec![Cell::Int(n)];
            row.extend(errors.iter().map(|e| e.get(n).map_or(Cell::Empty, |v| Cell::Num(v.log10()))));
            row
        })
        .collect();
    Table { name: name.into(), columns, rows }
}

/// First index at which `better` exceeds `reference`, scanning while the
/// reference error is at least [`COMPARISON_FLOOR`].
pub fn first_dominance_violation(better: &[f64], reference: &[f64]) -> Option<usize> {
    better
        .iter()
        .zip(reference)
        .take_while(|(_, r)| **r >= COMPARISON_FLOOR)
        .position(|(b, r)| b > r)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or("never".into(), |n| n.to_string())
}

fn orders_for(traces: &[IterationTrace], root: &DVector<f64>, eta: f64) -> Vec<MethodOrder> {
    let mut out = Vec::new();
    for t in traces {
        let e = t.errors_to(root);
        out.push(MethodOrder { method: format!("{}:Q", t.method), estimate: q_order(&e).map_err(|e| e.to_string()) });
        out.push(MethodOrder { method: format!("{}:R", t.method), estimate: r_order(&e).map_err(|e| e.to_string()) });
        out.push(MethodOrder {
            method: format!("{}:AQ", t.method),
            estimate: aq_order(&t.step_norms, eta).map_err(|e| e.to_string()),
        });
    }
    out
}

fn dominance_checks(report: &mut ExperimentReport, root: &DVector<f64>) {
    let (Some(newton), Some(asis), Some(stef)) = (report.trace("newton"), report.trace("asis"), report.trace("steffensen"))
    else {
        return;
    };
    let (en, ea) = (newton.errors_to(root), asis.errors_to(root));
    let violation = first_dominance_violation(&ea, &en);
    let n_newton = newton.first_below(root, COMPARISON_FLOOR);
    let n_stef = stef.first_below(root, COMPARISON_FLOOR);
    let statuses = [newton.status, asis.status, stef.status];
    let slower = match (n_stef, n_newton) {
        (None, Some(_)) => true,
        (Some(s), Some(n)) => s > n,
        _ => false,
    };
    report.push(
        "all methods converge",
        statuses.iter().all(|s| s.converged()),
        format!("newton {}, asis {}, steffensen {}", statuses[0], statuses[1], statuses[2]),
    );
    report.push(
        "asis error <= newton error until 1e-15",
        violation.is_none(),
        match violation {
            Some(n) => format!("asis {:e} > newton {:e} at n={n}", ea[n], en[n]),
            None => "holds at every common index".into(),
        },
    );
    report.push(
        "steffensen slower than newton to 1e-15",
        slower,
        format!("steffensen {}, newton {}", fmt_opt(n_stef), fmt_opt(n_newton)),
    );
}

/// Newton, Steffensen and ASIS on `f₁(x) = exp(x − 1) − 1` from `x₀ = 0`.
pub fn run_example1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(ExperimentName::Example1);
    let problem = problems::f1();
    let root = DVector::from_element(1, 1.0);
    let x0 = cfg.x0_or(&[0.0]);
    let stop = cfg.stopping(StoppingCriteria::default())?;
    report.traces = run_methods(&problem, &cfg.method_names(&["newton", "steffensen", "asis"]), cfg, &x0, &stop)?;
    report.tables.push(log_error_table("log_errors", &report.traces, &root));
    let eta = kantorovich_data(&problem, &x0, KantorovichMode::Newton, K2Source::Explicit(0.0))?.eta;
    report.orders = orders_for(&report.traces, &root, eta);
    report.metadata.insert("root".into(), "1".into());
    report.metadata.insert("eta".into(), fmt_f64(eta));

    dominance_checks(&mut report, &root);
    if let Some(newton) = report.trace("newton") {
        let n = newton.first_below(&root, COMPARISON_FLOOR);
        report.push(
            "newton reaches 1e-15 within 8 iterations",
            n.is_some_and(|n| n <= 8),
            format!("first below 1e-15 at n={}", fmt_opt(n)),
        );
    }
    Ok(report)
}

/// Classic Steffensen on `f₂(x) = exp(2x − 1) − 1` from `x₀ = 0` with the
/// iteration counts of its long preconvergence phase, plus the scale checks
/// against `f₁`.
pub fn run_example2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(ExperimentName::Example2);
    let (f1, f2) = (problems::f1(), problems::f2());
    let root = DVector::from_element(1, 0.5);
    let x0 = cfg.x0_or(&[0.0]);
    let long = cfg.stopping(StoppingCriteria { max_iter: 5000, ..StoppingCriteria::default() })?;
    let stop = cfg.stopping(StoppingCriteria::default())?;

    let stef = solve(&f2, &Method::steffensen(), &x0, &long)?;
    let n_half = stef.first_below(&root, 0.5);
    let n_tiny = stef.first_below(&root, 1e-16);
    report.metadata.insert("steffensen_first_below_0.5".into(), fmt_opt(n_half));
    report.metadata.insert("steffensen_first_below_1e-16".into(), fmt_opt(n_tiny));
    report.push(
        "steffensen first below 0.5 at 3705 +- 10",
        n_half.is_some_and(|n| n.abs_diff(3705) <= 10),
        format!("n={}", fmt_opt(n_half)),
    );
    report.push(
        "steffensen first below 1e-16 at 3716 +- 10",
        n_tiny.is_some_and(|n| n.abs_diff(3716) <= 10),
        format!("n={}", fmt_opt(n_tiny)),
    );

    let newton2 = solve(&f2, &Method::Newton, &x0, &stop)?;
    let x0_f1 = &x0 * 2.0;
    let newton1 = solve(&f1, &Method::Newton, &x0_f1, &stop)?;
    let worst = newton2
        .iterates
        .iter()
        .zip(&newton1.iterates)
        .map(|(a, b)| {
            let half = b * 0.5;
            let scale = half.norm().max(a.norm());
            if scale == 0.0 { 0.0 } else { (a - half).norm() / scale }
        })
        .fold(0.0, f64::max);
    report.push(
        "newton on f2 is half of newton on f1",
        worst <= 1e-12,
        format!("max relative gap {worst:e} over {} iterates", newton2.iterates.len().min(newton1.iterates.len())),
    );

    let asis2 = asis_solve(&f2, &x0, &stop, DividedDifference::Componentwise)?;
    let asis1 = asis_solve(&f1, &x0_f1, &stop, DividedDifference::Componentwise)?;
    let ys = (&asis2.adimensional.iterates, &asis1.adimensional.iterates);
    let gap = ys.0.iter().zip(ys.1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    report.push(
        "asis adimensional traces of f1 and f2 agree",
        ys.0.len() == ys.1.len() && gap <= 1e-13,
        format!("lengths {} and {}, max gap {gap:e}", ys.0.len(), ys.1.len()),
    );

    report.traces = vec![stef, newton2, asis2.trace];
    report.tables.push(log_error_table("log_errors", &report.traces, &root));
    Ok(report)
}

/// Newton, Steffensen and ASIS on the two-variable system from `(0, 0)`.
/// The reference root is the converged Newton limit.
pub fn run_example3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(ExperimentName::Example3);
    let problem = problems::example3();
    let x0 = cfg.x0_or(&[0.0, 0.0]);
    let stop = cfg.stopping(StoppingCriteria::default())?;
    report.traces = run_methods(&problem, &cfg.method_names(&["newton", "steffensen", "asis"]), cfg, &x0, &stop)?;

    let reference = solve(&problem, &Method::Newton, &x0, &StoppingCriteria { step_tol: 0.0, res_tol: 1e-14, max_iter: 200 })?;
    let root = reference.last().clone();
    let residual = reference.residual_norms.last().copied().unwrap_or(f64::INFINITY);
    report.push(
        "reference root residual < 1e-14",
        residual < 1e-14,
        format!("root ({}, {}), residual {residual:e}", fmt_f64(root[0]), fmt_f64(root[1])),
    );
    report.metadata.insert("root".into(), format!("{} {}", fmt_f64(root[0]), fmt_f64(root[1])));
    report.metadata.insert("root_source".into(), "converged newton limit".into());
    report.tables.push(log_error_table("log_errors", &report.traces, &root));
    let eta = kantorovich_data(&problem, &x0, KantorovichMode::Newton, K2Source::Explicit(0.0))?.eta;
    report.orders = orders_for(&report.traces, &root, eta);
    dominance_checks(&mut report, &root);
    Ok(report)
}

/// Exact line search steepest descent on `H = (x² + b y²)/2`.
///
/// Returns the iterates `(x, y)` and `H` at each.
pub fn steepest_descent(b: f64, start: [f64; 2], steps: usize) -> Vec<([f64; 2], f64)> {
    let energy = |p: [f64; 2]| 0.5 * (p[0] * p[0] + b * p[1] * p[1]);
    let mut p = start;
    let mut out = vec![(p, energy(p))];
    for _ in 0..steps {
        let g = [p[0], b * p[1]];
        let gg = g[0] * g[0] + g[1] * g[1];
        let gag = g[0] * g[0] + b * g[1] * g[1];
        if gag == 0.0 {
            break;
        }
        let t = gg / gag;
        p = [p[0] - t * g[0], p[1] - t * g[1]];
        out.push((p, energy(p)));
    }
    out
}

/// Steepest descent from `(b, 1)` and ASIS on `F(x, y) = (x, b y)` from the
/// same point.
pub fn run_zigzag(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let b = cfg.b.unwrap_or(0.1);
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidParameter(format!("b = {b} must lie in (0, 1)")));
    }
    let mut report = ExperimentReport::new(ExperimentName::Zigzag);
    let steps = cfg.n.unwrap_or(30);
    let expected = ((1.0 - b) / (1.0 + b)).powi(2);
    let path = steepest_descent(b, [b, 1.0], steps);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (n, (p, h)) in path.iter().enumerate() {
        let ratio = (n > 0).then(|| h / path[n - 1].1);
        if let Some(r) = ratio {
            worst = worst.max((r - expected).abs());
        }
        rows.push(vec![Cell::Int(n), Cell::Num(p[0]), Cell::Num(p[1]), Cell::Num(*h), ratio.map_or(Cell::Empty, Cell::Num)]);
    }
    report.tables.push(Table {
        name: "steepest_descent".into(),
        columns: ["n", "x", "y", "energy", "energy_ratio"].map(String::from).to_vec(),
        rows,
    });
    report.metadata.insert("expected_ratio".into(), fmt_f64(expected));
    report.push(
        "energy ratio equals ((1-b)/(1+b))^2",
        path.len() > 1 && worst <= 1e-10,
        format!("{} steps, max deviation {worst:e}", path.len() - 1),
    );

    let x0 = DVector::from_column_slice(&[b, 1.0]);
    let stop = cfg.stopping(StoppingCriteria::default())?;
    let run = asis_solve(&problems::zigzag(b), &x0, &stop, DividedDifference::Componentwise)?;
    let r1 = run.trace.residual_norms.get(1).copied().unwrap_or(f64::INFINITY);
    report.push(
        "asis converges in one iteration",
        run.trace.iterations() == 1 && run.trace.status.converged() && r1 <= 1e-13,
        format!("{} iterations, status {}, residual after one step {r1:e}", run.trace.iterations(), run.trace.status),
    );
    report.traces.push(run.trace);
    Ok(report)
}

/// Kantorovich constants for the bounds report: explicit `K₂, B, η`, or `a`
/// alone (read as `K₂ = a`, `B = η = 1`).
fn report_data(cfg: &ExperimentConfig) -> Result<KantorovichData> {
    match (cfg.a, cfg.k2, cfg.bound_b, cfg.eta) {
        (Some(a), None, None, None) => KantorovichData::new(a, 1.0, 1.0),
        (None, k2, b, eta) => KantorovichData::new(k2.unwrap_or(0.5), b.unwrap_or(1.0), eta.unwrap_or(1.0)),
        _ => Err(Error::InvalidParameter("give either a or K2/B/eta, not both".into())),
    }
}

fn rel_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 { 0.0 } else { (x - y).abs() / scale }
}

/// Bound sequences and their dimensional envelopes as a table.
///
/// Steffensen columns are `n, a_n, b_n, c_n, d_n, r_n, d_n_eta, tail_eta`;
/// Newton drops `b_n` and `c_n`. `tail_eta` is `(s* − rₙ)η`.
pub fn run_bounds_report(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = report_data(cfg)?;
    let a = data.a;
    if a > 0.5 && !cfg.override_hypotheses {
        return Err(Error::HypothesesNotSatisfied { a });
    }
    let system = cfg.system.unwrap_or(BoundSystem::Steffensen);
    let n = cfg.n.unwrap_or(30);
    let mut report = ExperimentReport::new(ExperimentName::BoundsReport);
    let s_star = majorizing_roots(a).map(|r| r.s_star).ok();
    report.metadata.insert("a".into(), fmt_f64(a));
    report.metadata.insert("K2".into(), fmt_f64(data.k2));
    report.metadata.insert("B".into(), fmt_f64(data.b));
    report.metadata.insert("eta".into(), fmt_f64(data.eta));
    report.metadata.insert("system".into(), format!("{system:?}").to_lowercase());
    report.metadata.insert("s_star".into(), s_star.map_or("undefined".into(), fmt_f64));
    let eta = data.eta;
    let tail = |r: f64| s_star.map_or(Cell::Empty, |s| Cell::Num((s - r) * eta));

    let (columns, rows, positivity, invariant): (&[&str], Vec<Vec<Cell>>, Positivity, Vec<f64>) = match system {
        BoundSystem::Newton => {
            let s = newton_sequences(a, n)?;
            let rows = (0..s.a.len())
                .map(|k| {
                    vec![Cell::Int(k), Cell::Num(s.a[k]), Cell::Num(s.d[k]), Cell::Num(s.r[k]), Cell::Num(s.d[k] * eta), tail(s.r[k])]
                })
                .collect();
            if a > 0.0 {
                let worst = (0..s.a.len()).map(|k| (s.r[k] - (1.0 - 1.0 / s.a[k]) / a).abs()).fold(0.0, f64::max);
                report.push("partial sums equal (1 - 1/a_n)/a", worst <= 1e-12, format!("max gap {worst:e}"));
            }
            (&["n", "a_n", "d_n", "r_n", "d_n_eta", "tail_eta"], rows, s.positivity, s.invariant_residuals())
        }
        BoundSystem::Steffensen => {
            let s = steffensen_sequences(a, n)?;
            let rows = (0..s.a.len())
                .map(|k| {
                    vec![
                        Cell::Int(k),
                        Cell::Num(s.a[k]),
                        Cell::Num(s.b[k]),
                        Cell::Num(s.c[k]),
                        Cell::Num(s.d[k]),
                        Cell::Num(s.r[k]),
                        Cell::Num(s.d[k] * eta),
                        tail(s.r[k]),
                    ]
                })
                .collect();
            if a <= 0.5 {
                let exact = steffensen_on_adim_poly(a, s.a.len())?;
                let steps = exact.steps();
                let worst = (0..s.a.len())
                    .map(|k| {
                        [
                            rel_gap(s.a[k], -1.0 / exact.q_prime[k]),
                            rel_gap(s.b[k], -1.0 / exact.divided_difference[k]),
                            rel_gap(s.c[k], exact.q[k]),
                            rel_gap(s.d[k], steps[k]),
                            rel_gap(s.r[k], exact.s[k]),
                        ]
                        .into_iter()
                        .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                report.push(
                    "sequences equal the exact iteration on q",
                    worst <= 1e-12,
                    format!("max relative gap {worst:e}"),
                );
            }
            (&["n", "a_n", "b_n", "c_n", "d_n", "r_n", "d_n_eta", "tail_eta"], rows, s.positivity, s.invariant_residuals())
        }
    };
    let worst = invariant.iter().map(|v| v.abs()).fold(0.0, f64::max);
    report.push("invariant holds", worst <= 1e-12, format!("max residual {worst:e}"));
    report.metadata.insert(
        "positivity".into(),
        match positivity {
            Positivity::Positive => "positive".into(),
            Positivity::NotPositive { at } => format!("not positive from n={at}"),
        },
    );
    if a <= 0.5 {
        report.push("denominators positive", positivity == Positivity::Positive, format!("{positivity:?}"));
    }
    report.tables.push(Table { name: format!("{system:?}_bounds").to_lowercase(), columns: columns.iter().map(|c| c.to_string()).collect(), rows });
    Ok(report)
}

/// Chosen methods on a bundled problem; each must converge.
pub fn run_custom(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let name = cfg.problem.as_deref().unwrap_or("f1");
    let (problem, default_x0): (Problem, Vec<f64>) = match name {
        "f1" => (problems::f1(), vec![0.0]),
        "f2" => (problems::f2(), vec![0.0]),
        "example3" => (problems::example3(), vec![0.0, 0.0]),
        "zigzag" => {
            let b = cfg.b.unwrap_or(0.1);
            (problems::zigzag(b), vec![b, 1.0])
        }
        other => return Err(Error::InvalidParameter(format!("unknown problem {other:?}"))),
    };
    let x0 = cfg.x0_or(&default_x0);
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x0.len() });
    }
    let stop = cfg.stopping(StoppingCriteria::default())?;
    let mut report = ExperimentReport::new(ExperimentName::Custom);
    report.metadata.insert("problem".into(), name.into());
    report.traces = run_methods(&problem, &cfg.method_names(&["newton", "steffensen", "asis"]), cfg, &x0, &stop)?;
    for t in &report.traces {
        report.checks.push(Check::new(
            format!("{} converges", t.method),
            t.status.converged(),
            format!("{} after {} iterations", t.status, t.iterations()),
        ));
    }
    Ok(report)
}
