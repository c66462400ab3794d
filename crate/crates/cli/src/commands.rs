//! Subcommand arguments and their implementations. Each command renders
//! its full output as a string so writing is a single ordered step.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use serde_json::{json, Value};

use ncrw::correlations::{correlation_function, density_profile, MultiTimePointSet};
use ncrw::kernels::{Gauge, KernelSpec, KernelVariant, SpaceTimePoint};
use ncrw::martingale::{FiniteConfiguration, LatticeSpec};
use ncrw::montecarlo::{estimate_many, Estimator, Functional};
use ncrw::relaxation::relaxation_sweep;

use crate::checks;
use crate::config::{OutputFormat, RunConfig};
use crate::format::{csv, json_number, number};
use crate::{CliError, Command};

/// Rendered output; `failed` carries `(failed, total)` when a selftest fails.
pub struct Output {
    pub text: String,
    pub failed: Option<(usize, usize)>,
}

impl From<String> for Output {
    fn from(text: String) -> Self {
        Output { text, failed: None }
    }
}

/// `finite:u1,u2,…`, `lattice:a` or `stationary:rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecArg {
    pub variant: KernelVariant,
    text: String,
}

impl FromStr for SpecArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(SpecArg {
            variant: s.parse().map_err(|e: ncrw::Error| e.to_string())?,
            text: s.to_string(),
        })
    }
}

impl fmt::Display for SpecArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

/// `s,x`.
fn parse_point(s: &str) -> Result<(f64, i64), String> {
    let (t, x) = s.split_once(',').ok_or_else(|| format!("expected t,x, got {s:?}"))?;
    Ok((
        t.trim().parse().map_err(|e| format!("time {t:?}: {e}"))?,
        x.trim().parse().map_err(|e| format!("site {x:?}: {e}"))?,
    ))
}

/// `t:x1,x2,…`.
fn parse_group(s: &str) -> Result<(f64, Vec<i64>), String> {
    let (t, xs) = s.split_once(':').ok_or_else(|| format!("expected t:x1,x2,..., got {s:?}"))?;
    Ok((t.trim().parse().map_err(|e| format!("time {t:?}: {e}"))?, parse_list(xs)?))
}

/// `lo:hi`, inclusive.
fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    if hi < lo {
        return Err(format!("empty window {s:?}"));
    }
    Ok((lo, hi))
}

fn point_set(groups: &[(f64, Vec<i64>)]) -> Result<MultiTimePointSet, CliError> {
    let mut groups = groups.to_vec();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    for g in &mut groups {
        g.1.sort_unstable();
    }
    MultiTimePointSet::new(groups).map_err(|e| CliError::Usage(format!("--at: {e}")))
}

fn points_json(pts: &MultiTimePointSet) -> Value {
    Value::Array(
        pts.points()
            .iter()
            .map(|p| json!({ "t": json_number(p.t), "x": p.x }))
            .collect(),
    )
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub spec: SpecArg,
    /// Space-time point `t,x`; give it twice for `(s,x)` and `(t,y)`.
    #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<(f64, i64)>,
    /// Time lag `t - s`, used with `--dx` instead of two points.
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Displacement `y - x`.
    #[arg(long, allow_hyphen_values = true)]
    pub dx: Option<i64>,
    #[arg(long, default_value = "prob")]
    pub gauge: Gauge,
    /// Tabulate every pair over `--times` × `--window`.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(i64, i64)>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub spec: SpecArg,
    #[arg(long)]
    pub t: f64,
    /// Sites `lo:hi`, inclusive.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: (i64, i64),
}

#[derive(Debug, Args)]
pub struct CorrelationArgs {
    #[arg(long)]
    pub spec: SpecArg,
    /// Points `t:x1,x2,...`; repeat for further times.
    #[arg(long = "at", value_parser = parse_group, allow_hyphen_values = true, required = true)]
    pub at: Vec<(f64, Vec<i64>)>,
    #[arg(long, default_value = "prob")]
    pub gauge: Gauge,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Initial sites `u1,u2,...`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub config: Vec<i64>,
    /// Simulation horizon.
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// `h` or `dmr`.
    #[arg(long, default_value = "h")]
    pub estimator: Estimator,
    /// Points `t:x1,x2,...`; the functional is the product of occupation counts.
    #[arg(long = "at", value_parser = parse_group, allow_hyphen_values = true)]
    pub at: Vec<(f64, Vec<i64>)>,
}

#[derive(Debug, Args)]
pub struct RelaxationArgs {
    #[arg(long)]
    pub a: i64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dt: f64,
    /// Displacements `-dx_max..=dx_max`.
    #[arg(long, default_value_t = 5)]
    pub dx_max: i64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub tau: Vec<f64>,
    /// Site of the earlier point.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub x: i64,
}

pub fn dispatch(command: &Command, config: &RunConfig) -> Result<Output, CliError> {
    match command {
        Command::Kernel(args) => kernel(args, config).map(Output::from),
        Command::Density(args) => density(args, config).map(Output::from),
        Command::Correlation(args) => correlation(args, config).map(Output::from),
        Command::Simulate(args) => simulate(args, config).map(Output::from),
        Command::Relaxation(args) => relaxation(args, config).map(Output::from),
        Command::Selftest => Ok(selftest(config)),
    }
}

fn point(t: f64, x: i64) -> Result<SpaceTimePoint, CliError> {
    Ok(SpaceTimePoint::new(t, x)?)
}

fn kernel(args: &KernelArgs, config: &RunConfig) -> Result<String, CliError> {
    let spec = KernelSpec::new(args.spec.variant.clone(), args.gauge);
    let tol = &config.tolerances;
    if args.grid {
        let (lo, hi) = args
            .window
            .ok_or_else(|| CliError::Usage("--grid needs --window".into()))?;
        if args.times.is_empty() {
            return Err(CliError::Usage("--grid needs --times".into()));
        }
        let mut rows = Vec::new();
        for &s in &args.times {
            for x in lo..=hi {
                for &t in &args.times {
                    for y in lo..=hi {
                        rows.push((s, x, t, y, spec.eval(point(s, x)?, point(t, y)?, tol)?));
                    }
                }
            }
        }
        return Ok(match config.output.unwrap_or(OutputFormat::Csv) {
            OutputFormat::Csv => csv(
                &["s", "x", "t", "y", "value"],
                rows.iter()
                    .map(|r| vec![number(r.0), r.1.to_string(), number(r.2), r.3.to_string(), number(r.4)]),
            ),
            OutputFormat::Json => render_json(&json!({
                "spec": args.spec.to_string(),
                "gauge": args.gauge.to_string(),
                "rows": rows.iter().map(|r| json!({
                    "s": json_number(r.0), "x": r.1, "t": json_number(r.2), "y": r.3, "value": json_number(r.4),
                })).collect::<Vec<_>>(),
            })),
        });
    }
    let (p, q) = match (args.points.as_slice(), args.dt, args.dx) {
        (&[p, q], None, None) => (p, q),
        (&[], Some(dt), Some(dx)) => {
            let s = (-dt).max(0.0);
            ((s, 0), (s + dt, dx))
        }
        _ => return Err(CliError::Usage("give either --point twice or both --dt and --dx".into())),
    };
    let value = spec.eval(point(p.0, p.1)?, point(q.0, q.1)?, tol)?;
    Ok(match config.output {
        None => format!("{}\n", number(value)),
        Some(OutputFormat::Csv) => csv(
            &["s", "x", "t", "y", "value"],
            [vec![number(p.0), p.1.to_string(), number(q.0), q.1.to_string(), number(value)]],
        ),
        Some(OutputFormat::Json) => render_json(&json!({
            "spec": args.spec.to_string(),
            "gauge": args.gauge.to_string(),
            "s": json_number(p.0), "x": p.1, "t": json_number(q.0), "y": q.1,
            "value": json_number(value),
        })),
    })
}

fn density(args: &DensityArgs, config: &RunConfig) -> Result<String, CliError> {
    let spec = KernelSpec::new(args.spec.variant.clone(), Gauge::Probability);
    let (lo, hi) = args.window;
    let rho = density_profile(&spec.with_tolerances(config.tolerances), args.t, lo..=hi)?;
    Ok(match config.output.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => csv(
            &["t", "x", "rho"],
            (lo..=hi).zip(&rho).map(|(x, r)| vec![number(args.t), x.to_string(), number(*r)]),
        ),
        OutputFormat::Json => render_json(&json!({
            "spec": args.spec.to_string(),
            "t": json_number(args.t),
            "rows": (lo..=hi).zip(&rho).map(|(x, r)| json!({ "x": x, "rho": json_number(*r) })).collect::<Vec<_>>(),
        })),
    })
}

fn correlation(args: &CorrelationArgs, config: &RunConfig) -> Result<String, CliError> {
    let spec = KernelSpec::new(args.spec.variant.clone(), args.gauge);
    let pts = point_set(&args.at)?;
    let value = correlation_function(&spec.with_tolerances(config.tolerances), &pts)?;
    Ok(match config.output.unwrap_or(OutputFormat::Json) {
        OutputFormat::Csv => csv(
            &["t", "x", "value"],
            pts.points().iter().map(|p| vec![number(p.t), p.x.to_string(), number(value)]),
        ),
        OutputFormat::Json => render_json(&json!({
            "spec": args.spec.to_string(),
            "gauge": args.gauge.to_string(),
            "points": points_json(&pts),
            "value": json_number(value),
        })),
    })
}

fn simulate(args: &SimulateArgs, config: &RunConfig) -> Result<String, CliError> {
    let xi = FiniteConfiguration::new(args.config.clone()).map_err(|e| CliError::Usage(format!("--config: {e}")))?;
    let (functional, analytic, points) = if args.at.is_empty() {
        (Functional::One, 1.0, Value::Array(Vec::new()))
    } else {
        let pts = point_set(&args.at)?;
        let spec = KernelSpec::new(KernelVariant::Finite(xi.clone()), Gauge::Probability);
        let value = correlation_function(&spec.with_tolerances(config.tolerances), &pts)?;
        (Functional::correlation(&pts), value, points_json(&pts))
    };
    let r = estimate_many(
        &xi,
        std::slice::from_ref(&functional),
        args.horizon,
        args.samples,
        config.seed,
        args.estimator,
        &config.tolerances,
    )?
    .remove(0);
    let z = r.z_score(analytic);
    let estimator = match args.estimator {
        Estimator::HTransform => "h",
        Estimator::Dmr => "dmr",
    };
    Ok(match config.output.unwrap_or(OutputFormat::Json) {
        OutputFormat::Csv => csv(
            &["estimate", "std_error", "ess", "analytic_value", "z_score"],
            [vec![
                number(r.mean),
                number(r.std_error),
                number(r.effective_samples),
                number(analytic),
                number(z),
            ]],
        ),
        OutputFormat::Json => render_json(&json!({
            "config": args.config,
            "T": json_number(args.horizon),
            "estimator": estimator,
            "samples": r.n_samples,
            "seed": config.seed,
            "points": points,
            "estimate": json_number(r.mean),
            "std_error": json_number(r.std_error),
            "ess": json_number(r.effective_samples),
            "analytic_value": json_number(analytic),
            "z_score": json_number(z),
        })),
    })
}

fn relaxation(args: &RelaxationArgs, config: &RunConfig) -> Result<String, CliError> {
    let a = LatticeSpec::new(args.a).map_err(|e| CliError::Usage(format!("--a: {e}")))?;
    if args.dx_max < 0 {
        return Err(CliError::Usage("--dx-max must be >= 0".into()));
    }
    let displacements: Vec<(f64, i64)> = (-args.dx_max..=args.dx_max).map(|dx| (args.dt, dx)).collect();
    let report = relaxation_sweep(a, args.x, &displacements, &args.tau, &config.tolerances)?;
    Ok(match config.output.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => csv(
            &["tau", "dt", "dx", "lattice_value", "stationary_value", "gap"],
            report.cells.iter().map(|c| {
                vec![
                    number(c.tau),
                    number(c.dt),
                    c.dx.to_string(),
                    number(c.lattice_value),
                    number(c.stationary_value),
                    number(c.gap),
                ]
            }),
        ),
        OutputFormat::Json => render_json(&json!({
            "a": args.a,
            "x": args.x,
            "rows": report.cells.iter().map(|c| json!({
                "tau": json_number(c.tau),
                "dt": json_number(c.dt),
                "dx": c.dx,
                "lattice_value": json_number(c.lattice_value),
                "stationary_value": json_number(c.stationary_value),
                "gap": json_number(c.gap),
            })).collect::<Vec<_>>(),
        })),
    })
}

fn selftest(config: &RunConfig) -> Output {
    let results = checks::selftest_suite(&config.tolerances);
    let failed = results.iter().filter(|c| !c.passed).count();
    let text = match config.output {
        Some(OutputFormat::Json) => render_json(&json!({
            "passed": failed == 0,
            "checks": results.iter().map(|c| json!({
                "criterion": c.criterion,
                "name": c.name,
                "passed": c.passed,
                "seconds": json_number(c.elapsed.as_secs_f64()),
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })),
        _ => results.iter().map(|c| format!("{c}\n")).collect(),
    };
    Output {
        text,
        failed: (failed > 0).then_some((failed, results.len())),
    }
}
