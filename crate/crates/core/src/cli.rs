//! The `mom` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{gamma_coefficient, leading_fit, GammaConfig};
use crate::autocorr::{min_theta_grid, mom_exact, residue_series_terms, ExactOptions};
use crate::error::{MomError, Result};
use crate::lfunctions::{predicted_mom, ArithmeticFamily, EllipticCurveData};
use crate::montecarlo::{mom_estimate, McOptions};
use crate::params::{leading_exponent, Family, GroupSpec, MomOrder};
use crate::validation::{run_suite, SuiteMode};

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(name = "mom", version, about = "Moments of moments of characteristic polynomials and L-functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo estimate over Haar-random matrices.
    Mc(McArgs),
    /// Exact value for finite N.
    Exact(ExactArgs),
    /// Leading-order coefficient as N → ∞.
    Gamma(GammaArgs),
    /// Leading coefficient from exact values at consecutive N.
    Fit(FitArgs),
    /// Leading-order prediction for an L-function family.
    Predict(PredictArgs),
    /// Run the acceptance matrix.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum GroupArg {
    Sp,
    So,
}

impl From<GroupArg> for Family {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Sp => Family::Symplectic,
            GroupArg::So => Family::EvenOrthogonal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum FormatArg {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum FamilyArg {
    Dirichlet,
    Elliptic,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OrderArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub beta: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    #[command(flatten)]
    pub order: OrderArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub antithetic: bool,
    /// θ-grid for the inner average; the minimum exact grid by default.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    /// A single N.
    #[arg(long, conflicts_with = "n_range", required_unless_present = "n_range")]
    pub n: Option<u32>,
    /// An inclusive range a:b.
    #[arg(long)]
    pub n_range: Option<String>,
    #[command(flatten)]
    pub order: OrderArgs,
    /// θ-grid per dimension; the minimum exact grid by default.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Permit k*beta = 3; prints a size estimate first.
    #[arg(long)]
    pub allow_large: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GammaArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    #[command(flatten)]
    pub order: OrderArgs,
    #[arg(long, default_value_t = 32)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    #[command(flatten)]
    pub order: OrderArgs,
    #[arg(long)]
    pub n_range: String,
    /// Polynomial degree; the leading exponent by default.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Permit k*beta = 3; prints a size estimate first.
    #[arg(long)]
    pub allow_large: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[command(flatten)]
    pub order: OrderArgs,
    /// Height D of the discriminant range.
    #[arg(long)]
    pub d: f64,
    #[arg(long, default_value_t = 10_000)]
    pub cutoff: u64,
    /// Cache file of lines "p a_p" for the elliptic family.
    #[arg(long)]
    pub ap_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Fewer Monte Carlo seeds.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let bad = || MomError::InvalidParameter(format!("bad range '{s}', expected a:b"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a, b))
}

fn order_of(o: &OrderArgs) -> Result<MomOrder> {
    MomOrder::new(o.k as usize, o.beta as usize)
}

/// A finished report: JSON value plus a CSV table and a text rendering.
struct Report {
    json: Value,
    csv_header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
    text: String,
}

fn emit(report: &Report, out: &OutputArgs) -> Result<()> {
    let body = match out.format {
        FormatArg::Json => serde_json::to_string_pretty(&report.json).map_err(|e| MomError::Numeric(e.to_string()))? + "\n",
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| MomError::Io(std::io::Error::other(e));
            w.write_record(&report.csv_header).map_err(io)?;
            for r in &report.csv_rows {
                w.write_record(r).map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| MomError::Io(std::io::Error::other(e.to_string())))?).expect("utf8")
        }
        FormatArg::Text => report.text.clone(),
    };
    match &out.output {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn cmd_mc(a: &McArgs) -> Result<Report> {
    let spec = GroupSpec::new(a.group.into(), a.n as usize)?;
    let o = order_of(&a.order)?;
    let opts = McOptions { threads: a.threads, antithetic: a.antithetic, inner_grid: a.grid };
    let e = mom_estimate(spec, o, a.samples, a.seed, opts)?;
    Ok(Report {
        json: json!({"command": "mc", "config": a, "mean": e.mean, "std_error": e.std_error, "n": e.num_samples, "seed": a.seed, "params": e.config_digest}),
        csv_header: vec!["group", "n", "k", "beta", "samples", "seed", "mean", "std_error"],
        csv_rows: vec![vec![format!("{:?}", a.group).to_lowercase(), a.n.to_string(), a.order.k.to_string(), a.order.beta.to_string(), a.samples.to_string(), a.seed.to_string(), e.mean.to_string(), e.std_error.to_string()]],
        text: format!("{:.6} ± {:.6}\n", e.mean, e.std_error),
    })
}

fn exact_values(group: GroupArg, order: MomOrder, ns: (usize, usize), grid: Option<usize>, threads: usize, allow_large: bool) -> Result<Vec<(usize, f64)>> {
    if allow_large && order.k_beta() == 3 {
        let terms = residue_series_terms(order);
        eprintln!("k*beta = 3: {terms} coefficients per residue series (~{:.1} KiB each)", terms as f64 * 16.0 / 1024.0);
    }
    (ns.0..=ns.1)
        .map(|n| {
            let g = GroupSpec::new(group.into(), n)?;
            let m = grid.unwrap_or_else(|| min_theta_grid(g, order));
            Ok((n, mom_exact(g, order, m, ExactOptions { threads, allow_large, ..Default::default() })?))
        })
        .collect()
}

fn cmd_exact(a: &ExactArgs) -> Result<Report> {
    let o = order_of(&a.order)?;
    let ns = match (&a.n, &a.n_range) {
        (Some(n), _) => (*n as usize, *n as usize),
        (None, Some(r)) => parse_range(r)?,
        (None, None) => return Err(MomError::InvalidParameter("give --n or --n-range".into())),
    };
    let vals = exact_values(a.group, o, ns, a.grid, a.threads, a.allow_large)?;
    Ok(Report {
        json: json!({"command": "exact", "config": a, "values": vals.iter().map(|(n, v)| json!({"n": n, "value": v})).collect::<Vec<_>>()}),
        csv_header: vec!["n", "value"],
        csv_rows: vals.iter().map(|(n, v)| vec![n.to_string(), v.to_string()]).collect(),
        text: vals.iter().map(|(_, v)| format!("{v:.6}\n")).collect(),
    })
}

fn cmd_gamma(a: &GammaArgs) -> Result<Report> {
    let o = order_of(&a.order)?;
    let g = gamma_coefficient(a.group.into(), o, GammaConfig { nodes: a.nodes, radius: a.radius })?;
    let exponent = leading_exponent(a.group.into(), o);
    Ok(Report {
        json: json!({"command": "gamma", "config": a, "gamma": g.value, "literal_normalisation": g.literal, "imaginary_part": g.imaginary_part, "exponent": exponent}),
        csv_header: vec!["group", "k", "beta", "exponent", "gamma", "literal_normalisation"],
        csv_rows: vec![vec![format!("{:?}", a.group).to_lowercase(), a.order.k.to_string(), a.order.beta.to_string(), exponent.to_string(), g.value.to_string(), g.literal.to_string()]],
        text: format!("{:.12e}\n", g.value),
    })
}

fn cmd_fit(a: &FitArgs) -> Result<Report> {
    let o = order_of(&a.order)?;
    let family: Family = a.group.into();
    let degree = a.degree.unwrap_or(leading_exponent(family, o) as usize);
    let vals = exact_values(a.group, o, parse_range(&a.n_range)?, None, a.threads, a.allow_large)?;
    let fit = leading_fit(&vals, degree, a.tolerance)?;
    Ok(Report {
        json: json!({"command": "fit", "config": a, "degree": degree, "leading": fit.leading, "residual": fit.residual, "values": vals.iter().map(|(n, v)| json!({"n": n, "value": v})).collect::<Vec<_>>()}),
        csv_header: vec!["n", "value", "degree", "leading", "residual"],
        csv_rows: vals
            .iter()
            .map(|(n, v)| vec![n.to_string(), v.to_string(), degree.to_string(), fit.leading.to_string(), fit.residual.map(|r| r.to_string()).unwrap_or_default()])
            .collect(),
        text: format!("{:.12} residual {}\n", fit.leading, fit.residual.map(|r| format!("{r:.1e}")).unwrap_or_else(|| "n/a".into())),
    })
}

fn cmd_predict(a: &PredictArgs) -> Result<Report> {
    let o = order_of(&a.order)?;
    let family = match a.family {
        FamilyArg::Dirichlet => ArithmeticFamily::QuadraticDirichlet,
        FamilyArg::Elliptic => {
            let curve = EllipticCurveData::default_curve();
            let curve = match &a.ap_cache {
                Some(path) => curve.with_ap_cache(path, a.cutoff)?,
                None => {
                    let mut c = curve;
                    c.compute_ap_table(a.cutoff)?;
                    c
                }
            };
            ArithmeticFamily::EllipticTwists(curve)
        }
    };
    let p = predicted_mom(&family, o, a.d, a.cutoff, GammaConfig::default())?;
    Ok(Report {
        json: json!({"command": "predict", "config": a, "prediction": p}),
        csv_header: vec!["family", "k", "beta", "d", "prediction", "euler_product", "gamma", "exponent", "log_argument"],
        csv_rows: vec![vec![
            format!("{:?}", a.family).to_lowercase(),
            a.order.k.to_string(),
            a.order.beta.to_string(),
            a.d.to_string(),
            p.value.to_string(),
            p.euler_product.to_string(),
            p.gamma.to_string(),
            p.exponent.to_string(),
            p.log_argument.to_string(),
        ]],
        text: format!("{:.12e}\n", p.value),
    })
}

fn cmd_validate(a: &ValidateArgs) -> Result<(Report, bool)> {
    let mode = if a.quick { SuiteMode::Quick } else { SuiteMode::Full };
    let outcomes = run_suite(mode, |c| eprintln!("{}", c.line()));
    let ok = outcomes.iter().all(|c| !c.is_unexpected_failure());
    let report = Report {
        json: json!({"command": "validate", "config": a, "passed": ok, "checks": outcomes}),
        csv_header: vec!["id", "name", "passed", "known_defect", "seconds", "detail"],
        csv_rows: outcomes
            .iter()
            .map(|c| vec![c.id.clone(), c.name.clone(), c.passed.to_string(), c.known_defect.to_string(), format!("{:.2}", c.seconds), c.detail.clone()])
            .collect(),
        text: outcomes.iter().map(|c| c.line() + "\n").collect(),
    };
    Ok((report, ok))
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let (report, out, code) = match &cli.command {
        Command::Mc(a) => (cmd_mc(a)?, &a.out, 0),
        Command::Exact(a) => (cmd_exact(a)?, &a.out, 0),
        Command::Gamma(a) => (cmd_gamma(a)?, &a.out, 0),
        Command::Fit(a) => (cmd_fit(a)?, &a.out, 0),
        Command::Predict(a) => (cmd_predict(a)?, &a.out, 0),
        Command::Validate(a) => {
            let (r, ok) = cmd_validate(a)?;
            (r, &a.out, if ok { 0 } else { 3 })
        }
    };
    emit(&report, out)?;
    Ok(code)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"error": e.code(), "message": e.to_string()}));
            e.exit_code()
        }
    }
}
