use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use asis::bounds::BoundSystem;
use asis::experiments::{self, ExperimentConfig, ExperimentName, ExperimentReport, OutputFormat};
use clap::Parser;

/// Runs the bundled experiments and writes their traces.
///
/// Exit status is 0 when every check of the experiment passes, 1 when some
/// check fails and 2 when the run could not be carried out.
#[derive(Debug, Parser)]
#[command(name = "asis", version)]
struct Cli {
    /// example1, example2, example3, zigzag, bounds-report or custom.
    /// May be omitted when --config names it.
    #[arg(value_parser = parse_experiment)]
    experiment: Option<ExperimentName>,

    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Methods to run (repeat or comma-separate).
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,

    /// Bundled problem for `custom`: f1, f2, example3, zigzag.
    #[arg(long)]
    problem: Option<String>,

    /// Starting point, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,

    /// Second starting point of the secant method.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_prev: Option<Vec<f64>>,

    /// Bisection bracket `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    interval: Option<Vec<f64>>,

    #[arg(long)]
    tol_step: Option<f64>,

    #[arg(long)]
    tol_res: Option<f64>,

    #[arg(long)]
    max_iter: Option<usize>,

    /// Damping parameter (slope for fixed-slope).
    #[arg(long)]
    lambda: Option<f64>,

    /// Zigzag conditioning in (0, 1).
    #[arg(long)]
    b: Option<f64>,

    /// Kantorovich constant for bounds-report (K2 = a, B = eta = 1).
    #[arg(long)]
    a: Option<f64>,

    #[arg(long)]
    k2: Option<f64>,

    /// The bound B on the inverse derivative.
    #[arg(long)]
    bound_b: Option<f64>,

    #[arg(long)]
    eta: Option<f64>,

    /// Bound system: newton or steffensen (alias asis).
    #[arg(long, value_parser = parse_system)]
    system: Option<BoundSystem>,

    /// Sequence length for bounds-report, step count for zigzag.
    #[arg(long)]
    n: Option<usize>,

    /// Produce the bounds report even when a > 1/2.
    #[arg(long = "override")]
    override_hypotheses: bool,

    /// Output directory; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,

    /// Runs are deterministic; only `none` is accepted.
    #[arg(long, value_parser = ["none"])]
    seed: Option<String>,
}

fn parse_experiment(s: &str) -> Result<ExperimentName, String> {
    s.parse().map_err(|e: asis::Error| e.to_string())
}

fn parse_system(s: &str) -> Result<BoundSystem, String> {
    s.parse().map_err(|e: asis::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: asis::Error| e.to_string())
}

fn build_config(cli: Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(e) = cli.experiment {
                if e != cfg.experiment {
                    bail!("experiment {e} conflicts with {} in {}", cfg.experiment, path.display());
                }
            }
            cfg
        }
        None => match cli.experiment {
            Some(e) => ExperimentConfig::new(e),
            None => bail!("name an experiment or pass --config"),
        },
    };
    if !cli.methods.is_empty() {
        cfg.methods = cli.methods;
    }
    macro_rules! set {
        ($($field:ident = $value:expr),* $(,)?) => {
            $(if let Some(v) = $value { cfg.$field = Some(v); })*
        };
    }
    set!(
        problem = cli.problem,
        x0 = cli.x0,
        x_prev = cli.x_prev,
        interval = cli.interval.map(|v| [v[0], v[1]]),
        step_tol = cli.tol_step,
        res_tol = cli.tol_res,
        max_iter = cli.max_iter,
        lambda = cli.lambda,
        b = cli.b,
        a = cli.a,
        k2 = cli.k2,
        bound_b = cli.bound_b,
        eta = cli.eta,
        system = cli.system,
        n = cli.n,
        out = cli.out,
    );
    cfg.override_hypotheses |= cli.override_hypotheses;
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &ExperimentReport) {
    println!("experiment {}", report.experiment);
    for (k, v) in &report.metadata {
        println!("  {k}: {v}");
    }
    for t in &report.traces {
        println!("  {}/{}: {} after {} iterations", t.problem, t.method, t.status, t.iterations());
    }
    for o in &report.orders {
        match &o.estimate {
            Ok(e) => println!("  order {}: {:.4}{}", o.method, e.order, if e.stable { "" } else { " (unstable)" }),
            Err(msg) => println!("  order {}: {msg}", o.method),
        }
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<bool> {
        let cfg = build_config(cli)?;
        let report = experiments::run(&cfg)?;
        print_report(&report);
        if let Some(dir) = &cfg.out {
            for path in report.write(dir, cfg.format)? {
                println!("wrote {}", path.display());
            }
        }
        Ok(report.passed())
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
