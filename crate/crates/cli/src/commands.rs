use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};
use virfuse::bpz::{
    apply_to_powerproduct, build_bpz_system, compile_d, fuchsian_check, kappa, ode_json, z0_build, Spectator,
};
use virfuse::fusion::{default_kmax, fuse, FusionError, Sign};
use virfuse::odesolve::{chebyshev_theta_grid, curve_csv, curves_svg, solve_watermelon, McPoint, DEFAULT_GRID};
use virfuse::slemc::{batch_csv, watermelon_mc, watermelon_mc_with_threads, McConfig, McEstimate, DEFAULT_DT};
use virfuse::virasoro::{singular_vector, singular_vector_at, VirasoroError};
use virfuse::{KacLabel, Rational, RationalFunction};

use crate::verify::{self, Level, Options};
use crate::{CliError, Output};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn math(e: impl std::fmt::Display) -> CliError {
    CliError::Math(e.to_string())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// `p`, `p/q` or a finite decimal, read exactly.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|_| format!("expected a rational p/q, got {s:?}"))
}

fn kac(r: u32, s: u32) -> Result<KacLabel, CliError> {
    KacLabel::new(r, s).map_err(|e| usage(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Latex,
}

#[derive(Debug, Clone, Args)]
pub struct SingularArgs {
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub s: u32,
    /// Specialize τ to this rational value.
    #[arg(long, value_parser = parse_rational)]
    pub tau: Option<Rational>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn singular(a: &SingularArgs) -> Result<Output, CliError> {
    let label = kac(a.r, a.s)?;
    if a.tau.as_ref().is_some_and(Rational::is_zero) {
        return Err(usage("τ must be nonzero"));
    }
    let v = match &a.tau {
        Some(t) => singular_vector_at(label, t),
        None => singular_vector(label),
    }
    .map_err(|e| match e {
        VirasoroError::InvalidLabel(..) | VirasoroError::ZeroTau => usage(e.to_string()),
        e => math(e),
    })?;
    Ok(Output::text(match a.format {
        Format::Latex => format!("{}\n", v.to_latex()),
        Format::Json => pretty(&json!({
            "r": a.r,
            "s": a.s,
            "level": label.level(),
            "tau": a.tau.as_ref().map_or("symbolic".to_string(), Rational::to_string),
            "latex": v.to_latex(),
            "terms": v.to_json(),
        })),
    }))
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub s: u32,
    /// `plus` or `minus`.
    #[arg(long, value_parser = |s: &str| s.parse::<Sign>())]
    pub sign: Sign,
    #[arg(long)]
    pub kmax: Option<u32>,
}

pub fn fuse_cmd(a: &FuseArgs) -> Result<Output, CliError> {
    let label = kac(a.r, a.s)?;
    let k_max = a.kmax.unwrap_or_else(|| default_kmax(label));
    let res = fuse(label, a.sign, k_max).map_err(|e| match e {
        FusionError::NoTarget { .. } => usage(e.to_string()),
        e => math(e),
    })?;
    let mut out = Output::text(pretty(&res.to_json()));
    if !res.certificate {
        out.failure = Some(format!("P_{} failed the singularity certificate", res.k_star));
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct OdeArgs {
    #[arg(long)]
    pub n: u32,
    /// Rational κ; symbolic when omitted.
    #[arg(long, value_parser = parse_rational)]
    pub kappa: Option<Rational>,
    /// Fail with exit code 2 unless the operator is Fuchsian.
    #[arg(long)]
    pub check: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn ode(a: &OdeArgs) -> Result<Output, CliError> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let (k, label) = match &a.kappa {
        Some(k) if k.is_zero() => return Err(usage("κ must be nonzero")),
        Some(k) => (RationalFunction::constant(k.clone()), k.to_string()),
        None => (kappa(), "kappa".to_string()),
    };
    let op = compile_d(a.n, &k).map_err(math)?;
    let report = fuchsian_check(&op);
    let mut out = Output::text(match a.format {
        Format::Json => pretty(&ode_json(a.n, &label, &op, &report)),
        Format::Latex => format!("{}\n", op.to_latex()),
    });
    if a.check {
        out.notes.push(format!("fuchsian: {}", report.is_fuchsian));
        if !report.is_fuchsian {
            out.failure = Some(format!("not Fuchsian: {}", report.failures.join("; ")));
        }
    }
    Ok(out)
}

fn check_kappa(k: f64) -> Result<(), CliError> {
    if !(k > 0.0 && k <= 4.0) {
        return Err(usage(format!("κ = {k} is outside (0, 4]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: u32,
    /// `p/q` or a decimal, read exactly.
    #[arg(long, value_parser = parse_rational)]
    pub kappa: Rational,
    /// Number of Chebyshev angles.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Monte-Carlo estimates (one JSON object or an array) to fit for n ≥ 2.
    #[arg(long)]
    pub mc_file: Option<PathBuf>,
    /// Write an SVG plot of the curves here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn read_mc_file(path: &PathBuf, n: u32) -> Result<Vec<McPoint>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let items = match v {
        Value::Array(items) => items,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|item| {
            let e: McEstimate =
                serde_json::from_value(item).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if e.config.n != n {
                return Err(usage(format!("{}: estimate for n = {}, expected {n}", path.display(), e.config.n)));
            }
            Ok(McPoint { theta: e.config.theta, f_hat: e.f_hat })
        })
        .collect()
}

pub fn solve(a: &SolveArgs) -> Result<Output, CliError> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    check_kappa(a.kappa.to_f64())?;
    if a.grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let points = a.mc_file.as_ref().map(|p| read_mc_file(p, a.n)).transpose()?;
    let grid = chebyshev_theta_grid(a.grid);
    let sol = solve_watermelon(a.n, &a.kappa, &grid, points.as_deref()).map_err(math)?;
    let mut out = Output::default();
    let title = format!("n = {}, kappa = {}", a.n, a.kappa);
    let (rows, prefix) = match &sol.curve {
        Some(curve) => {
            out.notes.push(format!("method: {}", curve.method));
            if let Err(e) = curve.check_invariants() {
                out.notes.push(format!("warning: {e}"));
            }
            if let Some(d) = curve.reflection_defect() {
                out.notes.push(format!("reflection defect: {d:.3e}"));
            }
            (&curve.values, "f")
        }
        None => {
            out.notes.push("method: fundamental-system (pass --mc-file to fit sector curves)".into());
            (&sol.fundamental, "phi")
        }
    };
    if let Some(fit) = &sol.fit {
        out.notes.push(format!(
            "fit: max residual {:.6}, rms residual {:.6}, condition {:.3e}, rank {}",
            fit.max_residual, fit.rms_residual, fit.condition, fit.rank
        ));
    }
    out.stdout = curve_csv(&grid, rows, prefix);
    if let Some(path) = &a.plot {
        std::fs::write(path, curves_svg(&grid, rows, &title))
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub n: u32,
    /// Decimal or `p/q`.
    #[arg(long, value_parser = |s: &str| parse_rational(s).map(|q| q.to_f64()))]
    pub kappa: f64,
    /// One angle, or a comma-separated list for a batch.
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub stop_radius_factor: Option<f64>,
    #[arg(long)]
    pub left_threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: McFormat,
}

pub fn mc(a: &McArgs, threads: Option<usize>) -> Result<Output, CliError> {
    let thetas = &a.theta;
    if thetas.is_empty() {
        return Err(usage("--theta needs at least one angle"));
    }
    let mut base = McConfig::new(a.n, a.kappa, thetas[0], a.samples, a.seed);
    base.dt = a.dt;
    base.stop_radius_factor = a.stop_radius_factor.unwrap_or(base.stop_radius_factor);
    base.left_threshold = a.left_threshold.unwrap_or(base.left_threshold);
    let configs: Vec<McConfig> = thetas.iter().map(|&theta| McConfig { theta, ..base.clone() }).collect();
    for c in &configs {
        c.validate().map_err(|e| usage(e.to_string()))?;
    }
    let estimates = configs
        .iter()
        .map(|c| match threads {
            Some(t) => watermelon_mc_with_threads(c, t),
            None => watermelon_mc(c),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(math)?;
    let stdout = match (a.format, estimates.as_slice()) {
        (McFormat::Csv, es) => batch_csv(es),
        (McFormat::Json, [one]) => format!("{}\n", one.to_json()),
        (McFormat::Json, es) => format!("{}\n", serde_json::to_string_pretty(es).expect("plain data serializes")),
    };
    let undecided: u64 = estimates.iter().map(|e| e.flagged_undecided).sum();
    let mut out = Output::text(stdout);
    if undecided > 0 {
        out.notes.push(format!("{undecided} undecided attempts were resampled"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct BpzMultiArgs {
    /// Number of (2,1) seeds.
    #[arg(long)]
    pub r: usize,
    /// Number of (1,2) seeds.
    #[arg(long)]
    pub s: usize,
    /// Number of spectators.
    #[arg(long)]
    pub n: usize,
    /// Comma-separated spectator exponents `a_k`; weights follow from the
    /// exponent equations. All zero when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_rational)]
    pub a: Option<Vec<Rational>>,
    /// Apply every operator to the product solution.
    #[arg(long)]
    pub check_z0: bool,
}

pub fn bpz_multi(a: &BpzMultiArgs) -> Result<Output, CliError> {
    if a.r + a.s == 0 {
        return Err(usage("at least one of --r and --s must be positive"));
    }
    let spectators: Vec<Spectator> = match &a.a {
        None => vec![Spectator::zero(); a.n],
        Some(list) if list.len() == a.n => {
            list.iter().map(|x| Spectator::from_a(RationalFunction::constant(x.clone()))).collect()
        }
        Some(list) => return Err(usage(format!("--a has {} entries, expected {}", list.len(), a.n))),
    };
    let sys = build_bpz_system(a.r, a.s, &spectators).map_err(math)?;
    let ops: Vec<(String, &str, _)> = sys
        .layout
        .x
        .iter()
        .zip(&sys.d21)
        .map(|(v, d)| (v.name().to_string(), "D21", d))
        .chain(sys.layout.y.iter().zip(&sys.d12).map(|(v, d)| (v.name().to_string(), "D12", d)))
        .collect();
    let mut report = json!({
        "r": a.r,
        "s": a.s,
        "n": a.n,
        "variables": sys.layout.all().iter().map(|v| v.name().to_string()).collect::<Vec<_>>(),
        "spectators": spectators.iter().map(|sp| json!({
            "h": sp.h.to_string(), "a": sp.a.to_string(), "b": sp.b.to_string()
        })).collect::<Vec<_>>(),
        "operators": ops.iter().map(|(at, kind, d)| json!({"at": at, "kind": kind, "operator": d.to_string()})).collect::<Vec<_>>(),
    });
    let mut failure = None;
    if a.check_z0 {
        let z = z0_build(a.r, a.s, &spectators).map_err(math)?;
        let residuals: Vec<(String, RationalFunction)> =
            ops.iter().map(|(at, _, d)| (at.clone(), apply_to_powerproduct(d, &z))).collect();
        let failed: Vec<&String> = residuals.iter().filter(|(_, r)| !r.is_zero()).map(|(at, _)| at).collect();
        report["z0"] = json!(z.factors().iter().map(|(f, e)| json!([f.to_string(), e.to_string()])).collect::<Vec<_>>());
        report["z0Check"] = json!(if failed.is_empty() { "PASS" } else { "FAIL" });
        if !failed.is_empty() {
            failure = Some(format!("Z0 is not annihilated at {failed:?}"));
        }
    }
    Ok(Output { stdout: pretty(&report), notes: vec![], failure })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: VerifyLevel,
    /// Samples per Monte-Carlo estimate in the full level.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

/// Runs the suite, printing each line as it completes, and ends with a JSON
/// summary listing the failed criteria.
pub fn verify_cmd(a: &VerifyArgs, threads: Option<usize>) -> Result<Output, CliError> {
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let level = match a.level {
        VerifyLevel::Quick => Level::Quick,
        VerifyLevel::Full => Level::Full,
    };
    let options = Options { threads, samples: a.samples };
    let reports = verify::run(level, &options, |r| println!("{}", r.line()));
    let failed: Vec<u32> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = json!({
        "level": format!("{:?}", a.level).to_lowercase(),
        "passed": failed.is_empty(),
        "failed": failed,
        "criteria": reports,
    });
    let mut out = Output::text(pretty(&summary));
    if !failed.is_empty() {
        out.failure = Some(format!("criteria {failed:?} failed"));
    }
    Ok(out)
}
