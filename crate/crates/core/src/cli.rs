//! The `nevrand` command line: `eval`, `verify` and `tails`.
//!
//! Exit codes: 0 when every configured check passes, 1 when a check fails
//! (artifacts are still written), 2 for invalid input or configuration, and
//! 3 when the numerical machinery fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{RecordFormat, RunManifest, WorkerCount};
use crate::error::{Error, Result};
use crate::experiments::{self, trial::T_RESOLUTION, Check};
use crate::functionals::{count_zeros_argument, counting_n, characteristic_t, find_zeros, jensen_residual, log_rounding_floor, log_sigma_omega, x_r_functional_log};
use crate::quadrature::QuadratureSpec;
use crate::random::{sample_function, RandomModel};
use crate::series::{log_max_modulus, log_sigma, pointwise_truncation_degree, truncation_degree, CoefficientSequence, TruncationPolicy};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    ThresholdFailure = 1,
    Validation = 2,
    Numeric = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn for_error(e: &Error) -> Self {
        if e.is_numeric() {
            ExitStatus::Numeric
        } else {
            ExitStatus::Validation
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nevrand", version = crate::VERSION, about = "Nevanlinna functionals of random entire functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the functionals of one base (and optionally one random sample) at one radius.
    Eval(EvalArgs),
    /// Run the verify-family experiments of a config.
    Verify(RunArgs),
    /// Run the tail-family experiments of a config.
    Tails(RunArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Base as KIND[:ARGS]: exponential, geometric-factorial:C,S, mittag-leffler:RHO,
    /// explicit-list:C0,C1,..., star:BASE.
    pub base: String,
    /// Radius of the circle.
    #[arg(long)]
    pub r: f64,
    /// Coefficient model; enables the per-sample rows.
    #[arg(long)]
    pub model: Option<String>,
    /// Stream seed of the sample [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trial index within the seed's streams.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Value a, as `re`, `re+imi` or `imi`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long)]
    pub workers: Option<WorkerCount>,
    /// Record format, `csv` or `jsonl`; overrides `output.format`.
    #[arg(long)]
    pub format: Option<RecordFormat>,
}

pub fn parse_model(s: &str) -> Result<RandomModel> {
    RandomModel::ALL
        .into_iter()
        .find(|m| m.name() == s.to_ascii_lowercase())
        .ok_or_else(|| Error::InvalidInput(format!("unknown model '{s}' (expected gaussian, rademacher or steinhaus)")))
}

fn parse_number<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::InvalidInput(format!("bad {what} '{s}'")))
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    parse_number(s, "complex number")
}

/// Parses the `KIND[:ARGS]` base grammar.
pub fn parse_base(spec: &str) -> Result<CoefficientSequence> {
    let (kind, args) = match spec.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a)),
        None => (spec.trim(), None),
    };
    let list = |n: usize| -> Result<Vec<f64>> {
        let a = args.ok_or_else(|| Error::InvalidInput(format!("{kind} needs {n} argument(s)")))?;
        let v = a.split(',').map(|x| parse_number::<f64>(x, "number")).collect::<Result<Vec<_>>>()?;
        if v.len() != n {
            return Err(Error::InvalidInput(format!("{kind} needs {n} argument(s), got {}", v.len())));
        }
        Ok(v)
    };
    let seq = match kind {
        "exponential" | "exp" if args.is_none() => CoefficientSequence::Exponential,
        "geometric-factorial" => {
            let v = list(2)?;
            CoefficientSequence::GeometricFactorial { c: v[0], s: v[1] }
        }
        "mittag-leffler" => CoefficientSequence::MittagLeffler { rho: list(1)?[0] },
        "explicit-list" => {
            let a = args.ok_or_else(|| Error::InvalidInput("explicit-list needs coefficients".into()))?;
            let c = a.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
            CoefficientSequence::ExplicitList { coefficients: c }
        }
        "star" => {
            let inner = parse_base(args.ok_or_else(|| Error::InvalidInput("star needs a base".into()))?)?;
            crate::series::star_transform(&inner)
        }
        _ => return Err(Error::InvalidInput(format!("unknown base '{spec}'"))),
    };
    seq.validate()?;
    Ok(seq)
}

/// Rows printed by `eval`.
pub fn eval_rows(args: &EvalArgs) -> Result<Vec<(String, String)>> {
    if !(args.r.is_finite() && args.r > 0.0) {
        return Err(Error::InvalidInput(format!("r must be positive and finite, got {}", args.r)));
    }
    let seq = parse_base(&args.base)?;
    let a = args.a.as_deref().map(parse_complex).transpose()?;
    let model = args.model.as_deref().map(parse_model).transpose()?;
    let policy = TruncationPolicy::default();
    let spec = QuadratureSpec::default();
    let r = args.r;

    let degree = truncation_degree(&seq, r, &policy)?;
    let base = crate::random::TruncatedSample::deterministic(&seq, pointwise_truncation_degree(&seq, r, &policy)?);
    let ls = log_sigma(&seq, r, &policy)?;
    let mut rows = vec![
        ("base".to_string(), seq.id()),
        ("r".into(), r.to_string()),
        ("degree".into(), degree.to_string()),
        ("sigma".into(), ls.exp().to_string()),
        ("log_sigma".into(), ls.to_string()),
        ("log_M".into(), log_max_modulus(&base.coefficients, r)?.to_string()),
    ];
    let floor = log_rounding_floor(&base, r)?;
    if floor <= T_RESOLUTION.ln() {
        rows.push(("T".into(), characteristic_t(&base, r, &spec)?.to_string()));
    } else {
        rows.push(("T".into(), format!("unresolved (coefficient rounding floor e^{floor:.1})")));
    }
    if let Some(model) = model {
        let seed = args.seed.unwrap_or(0);
        let sample = sample_function(&seq, model, degree, seed, args.trial);
        let zero = Complex64::new(0.0, 0.0);
        rows.push(("model".into(), model.name().into()));
        rows.push(("seed".into(), seed.to_string()));
        rows.push(("trial".into(), args.trial.to_string()));
        rows.push(("n_zero".into(), count_zeros_argument(&sample, r, zero, &spec)?.to_string()));
        rows.push(("N_zero".into(), counting_n(&find_zeros(&sample, zero, r)?, r)?.to_string()));
        if let Some(a) = a {
            rows.push(("a".into(), a.to_string()));
            rows.push(("n_a".into(), count_zeros_argument(&sample, r, a, &spec)?.to_string()));
            rows.push(("N_a".into(), counting_n(&find_zeros(&sample, a, r)?, r)?.to_string()));
        }
        rows.push(("log_sigma_omega".into(), log_sigma_omega(&sample, r)?.to_string()));
        rows.push(("T_omega".into(), characteristic_t(&sample, r, &spec)?.to_string()));
        rows.push(("X_r".into(), x_r_functional_log(&sample, ls, r, &spec)?.to_string()));
        rows.push(("jensen_residual".into(), jensen_residual(&sample, r, &spec)?.to_string()));
    } else if a.is_some() {
        return Err(Error::InvalidInput("--a needs --model".into()));
    }
    Ok(rows)
}

fn print_checks(err: &mut impl Write, checks: &[Check]) {
    for c in checks.iter().filter(|c| !c.pass) {
        let _ = writeln!(err, "check failed: {} = {} (limit {})", c.name, c.value, c.limit);
    }
}

fn manifest(args: &RunArgs) -> Result<RunManifest> {
    Ok(RunManifest::load(&args.config)?.with_overrides(args.out.clone(), args.seed, args.workers, args.format))
}

fn verify(args: &RunArgs, out: &mut impl Write, err: &mut impl Write) -> Result<ExitStatus> {
    let m = manifest(args)?;
    let (records, report) = experiments::run_verify(&m.config, m.workers.resolve())?;
    let paths = experiments::write_verify(&m.output_dir, m.format, &report.config, &records, &report)?;
    let sections = [
        report.theorem1.as_ref().map(|r| &r.checks),
        report.value_a.as_ref().map(|r| &r.checks),
        report.bounds.as_ref().map(|r| &r.checks),
        report.nns.as_ref().map(|r| &r.checks),
    ];
    for checks in sections.into_iter().flatten() {
        print_checks(err, checks);
    }
    let _ = writeln!(out, "verify {}: {} rows -> {}", if report.pass { "pass" } else { "FAIL" }, records.len(), paths.records.display());
    let _ = writeln!(out, "report -> {}", paths.report.display());
    Ok(if report.pass { ExitStatus::Pass } else { ExitStatus::ThresholdFailure })
}

fn tails(args: &RunArgs, out: &mut impl Write, err: &mut impl Write) -> Result<ExitStatus> {
    let m = manifest(args)?;
    let (records, report) = experiments::run_tails(&m.config, m.workers.resolve())?;
    let paths = experiments::write_tails(&m.output_dir, m.format, &report.config, &records, &report)?;
    print_checks(err, &report.report.checks);
    let pass = report.report.pass;
    let _ = writeln!(out, "tails {}: {} rows -> {}", if pass { "pass" } else { "FAIL" }, records.len(), paths.records.display());
    let _ = writeln!(out, "report -> {}", paths.report.display());
    Ok(if pass { ExitStatus::Pass } else { ExitStatus::ThresholdFailure })
}

/// Parses `argv`, runs the command, and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::Validation.code() } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval(args) => eval_rows(args).map(|rows| {
            for (k, v) in rows {
                let _ = writeln!(out, "{k:<16} {v}");
            }
            ExitStatus::Pass
        }),
        Command::Verify(args) => verify(args, out, err),
        Command::Tails(args) => tails(args, out, err),
    };
    match result {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::for_error(&e).code()
        }
    }
}
