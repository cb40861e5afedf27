//! The `hw` command-line tool.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::asian::{
    conditional_density, marginal_density, AsianConfig, AsianMethod, GbmIntegralQuery,
    MarginalOptions,
};
use crate::asymptotics::{density_main, density_rough, levy_density, log_density_crude, LogDensity};
use crate::error::{HwError, Result};
use crate::inversion::{levy_oracle, oracle_outcome, Contour, ContourSpec};
use crate::saddle::{from_sp_identity, saddle_threshold, solve_saddle};
use crate::specfun::HwParams;

pub const CSV_HEADER: [&str; 9] = [
    "t",
    "r",
    "u0",
    "log_f_main",
    "log_f_rough",
    "log_f_crude",
    "log_f_oracle",
    "rel_log_gap_main",
    "warnings",
];

/// Smallest `t` for which the comparison table runs the oracle.
pub const ORACLE_MIN_T: f64 = 1e-3;

const DEFAULT_LEVY_GRID: [f64; 6] = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Parser)]
#[command(name = "hw", version, about = "Hartman-Watson density: asymptotics, inversion, Asian densities")]
pub struct Cli {
    /// Relative tolerance of the numerical inversion.
    #[arg(long, global = true, env = "HW_REL_TOL")]
    pub rel_tol: Option<f64>,
    /// Budget of integrand evaluations per quadrature.
    #[arg(long, global = true)]
    pub max_nodes: Option<usize>,
    /// Also print linear-scale values where they are representable.
    #[arg(long, global = true)]
    pub linear: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the saddle-point equation.
    Saddle(PointArgs),
    /// Evaluate the density f_r(t) by one method.
    Density(DensityArgs),
    /// Tabulate all methods over a grid of t as CSV.
    Compare(CompareArgs),
    /// Density of the integral of geometric Brownian motion.
    Asian(AsianArgs),
    /// Check the inversion engine on the Lévy transform pair.
    LevyCheck(LevyArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PointArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Main,
    Rough,
    Crude,
    Oracle,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DensityArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Main)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[arg(long)]
    pub r: f64,
    /// Comma-separated values of t.
    #[arg(long, value_delimiter = ',', conflicts_with = "log_grid")]
    pub t: Vec<f64>,
    /// Log-spaced grid: LO HI N.
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"])]
    pub log_grid: Option<Vec<f64>>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AsianMethodArg {
    Oracle,
    Main,
    Rough,
    Auto,
}

impl From<AsianMethodArg> for AsianMethod {
    fn from(m: AsianMethodArg) -> Self {
        match m {
            AsianMethodArg::Oracle => AsianMethod::Oracle,
            AsianMethodArg::Main => AsianMethod::Main,
            AsianMethodArg::Rough => AsianMethod::Rough,
            AsianMethodArg::Auto => AsianMethod::Auto,
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct AsianArgs {
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Conditioning value of W_t + nu t.
    #[arg(long, required_unless_present = "marginal", conflicts_with = "marginal")]
    pub x: Option<f64>,
    #[arg(long)]
    pub u: f64,
    /// Integrate over the law of the endpoint instead of conditioning.
    #[arg(long)]
    pub marginal: bool,
    #[arg(long, value_enum, default_value_t = AsianMethodArg::Auto)]
    pub method: AsianMethodArg,
    /// Below this t the automatic method uses the main asymptotic formula.
    #[arg(long, default_value_t = 0.05)]
    pub auto_threshold: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct LevyArgs {
    /// Comma-separated values of t.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
}

/// Parses `args` and runs the command, writing to `out` and `err`. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn contour_spec(cli: &Cli) -> Result<ContourSpec> {
    let mut spec = ContourSpec::default();
    if let Some(tol) = cli.rel_tol {
        spec.rel_tol = tol;
    }
    if let Some(n) = cli.max_nodes {
        spec.max_nodes = n;
    }
    spec.validate()?;
    Ok(spec)
}

fn io(e: std::io::Error) -> HwError {
    HwError::Domain(format!("i/o failure: {e}"))
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec = contour_spec(cli)?;
    match &cli.command {
        Command::Saddle(a) => cmd_saddle(a, out),
        Command::Density(a) => cmd_density(a, &spec, cli.linear, out),
        Command::Compare(a) => cmd_compare(a, &spec, out, err),
        Command::Asian(a) => cmd_asian(a, &spec, cli, out),
        Command::LevyCheck(a) => cmd_levy_check(a, &spec, out),
    }
    .map(|_| 0)
}

fn cmd_saddle(a: &PointArgs, out: &mut dyn Write) -> Result<()> {
    let params = HwParams::new(a.r)?;
    let sol = solve_saddle(a.t, &params)?;
    let lines = [
        ("r", a.r),
        ("rho", params.rho()),
        ("t", a.t),
        ("t_max", saddle_threshold(&params)),
        ("u0", sol.u0),
        ("residual", sol.residual),
        ("M", sol.m_exact),
        ("from_sp_identity", from_sp_identity(&sol, &params)),
    ];
    for (key, value) in lines {
        writeln!(out, "{key} = {value:e}").map_err(io)?;
    }
    writeln!(out, "iterations = {}", sol.iterations).map_err(io)?;
    Ok(())
}

fn write_density(d: &LogDensity, linear: bool, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "method = {}", d.method.as_str()).map_err(io)?;
    writeln!(out, "log_value = {:e}", d.log_value).map_err(io)?;
    if linear {
        match d.value {
            Some(v) => writeln!(out, "value = {v:e}"),
            None => writeln!(out, "value = not representable"),
        }
        .map_err(io)?;
    }
    if let Some(e) = d.rel_error {
        writeln!(out, "rel_error = {e:e}").map_err(io)?;
    }
    Ok(())
}

fn cmd_density(a: &DensityArgs, spec: &ContourSpec, linear: bool, out: &mut dyn Write) -> Result<()> {
    let params = HwParams::new(a.r)?;
    if !(a.t.is_finite() && a.t > 0.0) {
        return Err(HwError::InvalidArgument(format!("t must be positive, got {}", a.t)));
    }
    writeln!(out, "r = {:e}\nt = {:e}", a.r, a.t).map_err(io)?;
    match a.method {
        MethodArg::Main => write_density(&density_main(a.t, &params)?, linear, out),
        MethodArg::Rough => write_density(&density_rough(a.t, &params)?, linear, out),
        MethodArg::Crude => {
            let d = LogDensity::new(log_density_crude(a.t)?, crate::DensityMethod::Crude);
            write_density(&d, linear, out)
        }
        MethodArg::Oracle => {
            let o = oracle_outcome(a.t, &params, spec)?;
            write_density(&o.density, linear, out)?;
            match o.contour {
                Contour::Vertical {
                    abscissa,
                    half_width,
                } => writeln!(
                    out,
                    "contour = vertical\nabscissa = {abscissa:e}\nhalf_width = {half_width:e}"
                ),
                Contour::BranchCut { mu_max } => {
                    writeln!(out, "contour = branch-cut\nmu_max = {mu_max:e}")
                }
            }
            .map_err(io)?;
            writeln!(out, "nodes = {}", o.nodes).map_err(io)
        }
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub t: f64,
    pub r: f64,
    pub u0: Option<f64>,
    pub log_f_main: Option<f64>,
    pub log_f_rough: Option<f64>,
    pub log_f_crude: Option<f64>,
    pub log_f_oracle: Option<f64>,
    pub rel_log_gap_main: Option<f64>,
    pub warnings: Vec<String>,
}

impl ComparisonRecord {
    pub fn compute(t: f64, params: &HwParams, spec: &ContourSpec) -> Self {
        let mut warnings = Vec::new();
        let mut keep = |label: &str, r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                warnings.push(format!("{label}: {e}"));
                None
            }
        };
        let u0 = keep("saddle", solve_saddle(t, params).map(|s| s.u0));
        let log_f_main = keep("main", density_main(t, params).map(|d| d.log_value));
        let log_f_rough = keep("rough", density_rough(t, params).map(|d| d.log_value));
        let log_f_crude = keep("crude", log_density_crude(t));
        let log_f_oracle = if t >= ORACLE_MIN_T {
            keep("oracle", crate::inversion::oracle_density(t, params, spec).map(|d| d.log_value))
        } else {
            None
        };
        let rel_log_gap_main = match (log_f_main, log_f_oracle) {
            (Some(m), Some(o)) => Some((m - o).abs() / o.abs()),
            _ => None,
        };
        ComparisonRecord {
            t,
            r: params.r(),
            u0,
            log_f_main,
            log_f_rough,
            log_f_crude,
            log_f_oracle,
            rel_log_gap_main,
            warnings,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.log_f_main.is_some() || self.log_f_oracle.is_some()
    }

    pub fn to_record(&self) -> Vec<String> {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        vec![
            format!("{:.16e}", self.t),
            format!("{:.16e}", self.r),
            cell(self.u0),
            cell(self.log_f_main),
            cell(self.log_f_rough),
            cell(self.log_f_crude),
            cell(self.log_f_oracle),
            cell(self.rel_log_gap_main),
            self.warnings.join("; "),
        ]
    }
}

fn compare_grid(a: &CompareArgs) -> Result<Vec<f64>> {
    let grid = match &a.log_grid {
        Some(g) => {
            let (lo, hi, n) = (g[0], g[1], g[2]);
            if !(lo > 0.0 && hi > 0.0 && n >= 1.0 && n.fract() == 0.0) {
                return Err(HwError::InvalidArgument(
                    "--log-grid needs LO > 0, HI > 0 and a whole number N >= 1".into(),
                ));
            }
            let n = n as usize;
            if n == 1 {
                vec![lo]
            } else {
                let step = (hi.ln() - lo.ln()) / (n - 1) as f64;
                (0..n).map(|k| (lo.ln() + step * k as f64).exp()).collect()
            }
        }
        None => a.t.clone(),
    };
    if grid.is_empty() {
        return Err(HwError::InvalidArgument(
            "empty grid: pass --t T1,T2,... or --log-grid LO HI N".into(),
        ));
    }
    if let Some(t) = grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(HwError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    Ok(grid)
}

/// Computes the comparison table, one row per grid point, in grid order.
pub fn comparison_table(grid: &[f64], params: &HwParams, spec: &ContourSpec) -> Vec<ComparisonRecord> {
    grid.par_iter()
        .map(|&t| ComparisonRecord::compute(t, params, spec))
        .collect()
}

/// Writes the table as CSV.
pub fn write_csv<W: Write>(rows: &[ComparisonRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| HwError::Domain(format!("csv write failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.to_record()).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

fn cmd_compare(
    a: &CompareArgs,
    spec: &ContourSpec,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let grid = compare_grid(a)?;
    let params = HwParams::new(a.r)?;
    let rows = comparison_table(&grid, &params, spec);

    let summary: &mut dyn Write = match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(io)?;
            write_csv(&rows, file)?;
            &mut *out
        }
        None => {
            write_csv(&rows, &mut *out)?;
            &mut *err
        }
    };
    let max_gap = rows
        .iter()
        .filter_map(|r| r.rel_log_gap_main)
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))));
    let failed = rows.iter().filter(|r| !r.succeeded()).count();
    match max_gap {
        Some(g) => writeln!(summary, "rows = {}, failed = {failed}, max rel_log_gap_main = {g:e}", rows.len()),
        None => writeln!(summary, "rows = {}, failed = {failed}, max rel_log_gap_main = n/a", rows.len()),
    }
    .map_err(io)?;
    if failed == rows.len() {
        return Err(HwError::Domain("no row of the comparison succeeded".into()));
    }
    Ok(())
}

fn cmd_asian(a: &AsianArgs, spec: &ContourSpec, cli: &Cli, out: &mut dyn Write) -> Result<()> {
    if !(a.auto_threshold > 0.0 && a.auto_threshold.is_finite()) {
        return Err(HwError::InvalidArgument(format!(
            "auto threshold must be positive, got {}",
            a.auto_threshold
        )));
    }
    let cfg = AsianConfig {
        auto_threshold: a.auto_threshold,
        contour: *spec,
        ..AsianConfig::default()
    };
    let method = AsianMethod::from(a.method);
    let d = if a.marginal {
        let mut opts = MarginalOptions::default();
        if let Some(n) = cli.max_nodes {
            opts.max_nodes = n;
        }
        marginal_density(a.t, a.nu, a.u, method, &cfg, &opts)?
    } else {
        let x = a.x.ok_or_else(|| HwError::InvalidArgument("--x or --marginal is required".into()))?;
        conditional_density(
            &GbmIntegralQuery {
                t: a.t,
                nu: a.nu,
                x,
                u: a.u,
                method,
            },
            &cfg,
        )?
    };
    let kind = if a.marginal { "marginal" } else { "conditional" };
    writeln!(out, "density = {kind}\nt = {:e}\nnu = {:e}\nu = {:e}", a.t, a.nu, a.u).map_err(io)?;
    if let Some(x) = a.x {
        writeln!(out, "x = {x:e}").map_err(io)?;
    }
    write_density(&d, cli.linear, out)
}

fn cmd_levy_check(a: &LevyArgs, spec: &ContourSpec, out: &mut dyn Write) -> Result<()> {
    let grid: Vec<f64> = if a.t.is_empty() {
        DEFAULT_LEVY_GRID.to_vec()
    } else {
        a.t.clone()
    };
    let mut worst: f64 = 0.0;
    for &t in &grid {
        let exact = levy_density(t)?;
        let inverted = levy_oracle(t, spec)?;
        let rel = (inverted.log_value - exact.log_value).exp_m1().abs();
        worst = worst.max(rel);
        writeln!(
            out,
            "t = {t:e}, log_oracle = {:e}, log_exact = {:e}, rel_error = {rel:e}",
            inverted.log_value, exact.log_value
        )
        .map_err(io)?;
    }
    writeln!(out, "max relative error = {worst:e}").map_err(io)?;
    Ok(())
}
