//! Command-line front-end for the pacbayes library.
//!
//! Five subcommands cover the workflow: `certify` evaluates one bound at an
//! explicit context, `compare` tabulates every applicable bound at one
//! context with a dominance verdict, `coverage` runs Monte-Carlo
//! experiments on a discrete problem, `anytime` spends a confidence-budget
//! schedule over a horizon, and `sweep` varies one context field over a
//! grid.
//!
//! Exit codes: 0 on success, 1 on invalid input (one-line diagnostic naming
//! the offending flag), 2 on a runtime or numerical failure. Results are
//! bit-identical to the corresponding library calls; JSON output uses the
//! shortest float representation that parses back to the same value, so
//! print/parse round-trips are exact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pacbayes::anytime::{make_anytime, BetaSchedule};
use pacbayes::bounded::{self, BoundContext, BoundId, Certificate};
use pacbayes::general::{self, EssSupInfo, MartingaleContext, SecondMomentContext};
use pacbayes::lab::{coverage_bound_ids, coverage_experiment_multi, preset, CoverageReport};
use pacbayes::{
    CgfTable, DiscreteProblem, Error as LibError, NatsValue, PosteriorRule, Probability,
    TailFamily,
};

/// Version of the JSON output layout; bumped only on breaking changes.
const SCHEMA_VERSION: u32 = 1;

/// Environment fallback for --seed.
const SEED_ENV: &str = "PACBAYES_SEED";

/// Sample count when tabulating --cgf-expr; dense enough that the linear
/// interpolant sits far below certificate tolerances.
const CGF_EXPR_POINTS: usize = 4096;

/// Slack for the compare dominance verdict; covers solver termination
/// error, the mathematical orderings being non-strict.
const DOMINANCE_TOL: f64 = 1e-9;

/// The bounds that take a plain (n, beta, kl, emp_risk) context and a [0,1]
/// loss; these are the rows `compare` always prints and the family
/// `anytime` schedules.
const BOUNDED_IDS: [BoundId; 9] = [
    BoundId::Mcallester,
    BoundId::SeegerLangford,
    BoundId::CatoniFixed,
    BoundId::CatoniUniform,
    BoundId::FastRateStrong,
    BoundId::FastRateSimple,
    BoundId::MixedRate,
    BoundId::Thiemann,
    BoundId::Rivasplata,
];

#[derive(Parser, Debug)]
#[command(
    name = "pacbayes",
    version,
    about = "PAC-Bayes risk certificates: evaluate, compare, and stress-test generalization bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one bound at an explicit context and print its certificate
    Certify(Box<CertifyArgs>),
    /// Evaluate every applicable bound at one context, sorted by value,
    /// with a dominance-chain verdict
    Compare(Box<CompareArgs>),
    /// Monte-Carlo coverage of bounds on a discrete problem
    Coverage(Box<CoverageArgs>),
    /// Apply a confidence-budget schedule to a bound over a horizon
    Anytime(Box<AnytimeArgs>),
    /// Vary one context field over a grid and tabulate certificates
    Sweep(Box<SweepArgs>),
}

#[derive(Args, Debug, Clone)]
struct ContextArgs {
    /// Sample size behind the empirical risk
    #[arg(long)]
    n: u64,
    /// Confidence level in (0, 1); exclusive with --log-inv-beta
    #[arg(long)]
    beta: Option<f64>,
    /// ln(1/beta) in nats, for confidences too extreme to write as beta
    #[arg(long)]
    log_inv_beta: Option<f64>,
    /// Posterior dependence (KL divergence) in nats
    #[arg(long)]
    kl: f64,
    /// Interpret --kl in bits instead of nats
    #[arg(long)]
    kl_bits: bool,
    /// Posterior-averaged empirical risk in [0, 1]
    #[arg(long)]
    emp_risk: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// Tail family for the general bounds (chernoff*, cgf-fixed-lambda)
    #[arg(long, value_enum)]
    family: Option<FamilyKind>,
    /// Loss range lower end (family bounded, randomized-subsample)
    #[arg(long)]
    range_min: Option<f64>,
    /// Loss range upper end (family bounded, randomized-subsample)
    #[arg(long)]
    range_max: Option<f64>,
    /// Variance proxy sigma^2 (subgaussian, subgamma, subexponential)
    #[arg(long)]
    sigma2: Option<f64>,
    /// Scale parameter c > 0 (subgamma, subexponential)
    #[arg(long)]
    scale_c: Option<f64>,
    /// CSV file of lambda,psi rows tabulating a custom CGF envelope
    #[arg(long)]
    cgf_table: Option<PathBuf>,
    /// Expression for psi(lambda) in the variable lambda, e.g. "lambda^2/2"
    #[arg(long)]
    cgf_expr: Option<String>,
    /// Domain supremum for sampling --cgf-expr into a table
    #[arg(long)]
    cgf_domain: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FamilyKind {
    Bounded,
    Subgaussian,
    Subgamma,
    Subexponential,
    Custom,
}

#[derive(Args, Debug, Clone)]
struct ExtrasArgs {
    /// Fixed parameter for catoni-fixed and cgf-fixed-lambda
    #[arg(long)]
    lambda: Option<f64>,
    /// Spend the xi(n) confidence constant in catoni-fixed
    #[arg(long)]
    use_xi: bool,
    /// Known essential supremum of the risk, for cut-off fallbacks
    #[arg(long)]
    esssup: Option<f64>,
    /// Event cut-off for chernoff (defaults to the per-family menu choice)
    #[arg(long)]
    k_max: Option<u64>,
    /// Combined second-moment proxy for second-moment
    #[arg(long)]
    sigma2_n: Option<f64>,
    /// Realized quadratic variation (martingale)
    #[arg(long)]
    var_empirical: Option<f64>,
    /// Predictable quadratic variation (martingale)
    #[arg(long)]
    var_predictable: Option<f64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Bound to evaluate (kebab-case name, e.g. mixed-rate, chernoff)
    #[arg(long)]
    bound: String,
    #[command(flatten)]
    context: ContextArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    extras: ExtrasArgs,
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    context: ContextArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    extras: ExtrasArgs,
    /// Output format (csv prints the table; the verdict goes to stderr)
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    /// Problem description JSON file; exclusive with --preset
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Built-in problem name; exclusive with --problem
    #[arg(long)]
    preset: Option<String>,
    /// Bounds to test, comma separated; defaults to every bound
    #[arg(long = "bound", value_delimiter = ',')]
    bounds: Vec<String>,
    /// Posterior rule applied to each drawn sample
    #[arg(long, value_enum, default_value = "gibbs")]
    rule: RuleKind,
    /// Gibbs temperature parameter lambda (rule gibbs)
    #[arg(long)]
    lambda: Option<f64>,
    /// Scale the Gibbs lambda by the sample size
    #[arg(long)]
    n_scaled: bool,
    /// Softmax temperature (rule erm-softmax)
    #[arg(long)]
    temperature: Option<f64>,
    /// Explicit posterior weights, comma separated (rule fixed)
    #[arg(long, value_delimiter = ',')]
    posterior: Option<Vec<f64>>,
    /// Sample size per trial
    #[arg(long, default_value_t = 100)]
    n: u64,
    /// Number of Monte-Carlo trials
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Confidence level in (0, 1); exclusive with --log-inv-beta
    #[arg(long)]
    beta: Option<f64>,
    /// ln(1/beta) in nats
    #[arg(long)]
    log_inv_beta: Option<f64>,
    /// Master seed; falls back to PACBAYES_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RuleKind {
    Gibbs,
    ErmSoftmax,
    Fixed,
}

#[derive(Args, Debug)]
struct AnytimeArgs {
    /// Bound to evaluate at every step (bounded-loss kl family only)
    #[arg(long)]
    bound: String,
    /// Confidence-budget schedule
    #[arg(long, value_enum, default_value = "basel")]
    schedule: ScheduleKind,
    /// Largest sample size to certify; steps run n = 1..=horizon
    #[arg(long)]
    horizon: u64,
    /// Posterior dependence in nats, held fixed across the horizon
    #[arg(long)]
    kl: f64,
    /// Interpret --kl in bits instead of nats
    #[arg(long)]
    kl_bits: bool,
    /// Empirical risk held fixed across the horizon
    #[arg(long)]
    emp_risk: f64,
    /// Total confidence budget in (0, 1); exclusive with --log-inv-beta
    #[arg(long)]
    beta: Option<f64>,
    /// ln(1/beta) in nats for the total budget
    #[arg(long)]
    log_inv_beta: Option<f64>,
    /// Fixed parameter for catoni-fixed
    #[arg(long)]
    lambda: Option<f64>,
    /// Spend the xi(n) confidence constant in catoni-fixed
    #[arg(long)]
    use_xi: bool,
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ScheduleKind {
    Basel,
    KaufmannKoolen,
}

impl ScheduleKind {
    fn name(self) -> &'static str {
        match self {
            ScheduleKind::Basel => "basel",
            ScheduleKind::KaufmannKoolen => "kaufmann-koolen",
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Bound to evaluate at every grid point
    #[arg(long)]
    bound: String,
    /// Context field the sweep varies
    #[arg(long, value_enum)]
    vary: VaryField,
    /// First grid value
    #[arg(long)]
    from: f64,
    /// Last grid value
    #[arg(long)]
    to: f64,
    /// Number of grid points, endpoints included
    #[arg(long)]
    steps: usize,
    /// Space the grid geometrically instead of linearly
    #[arg(long)]
    log: bool,
    /// Sample size (fixed; omit when --vary n)
    #[arg(long)]
    n: Option<u64>,
    /// Confidence level (fixed; omit when --vary beta)
    #[arg(long)]
    beta: Option<f64>,
    /// ln(1/beta) in nats (fixed; omit when --vary beta)
    #[arg(long)]
    log_inv_beta: Option<f64>,
    /// Dependence in nats (fixed; omit when --vary kl)
    #[arg(long)]
    kl: Option<f64>,
    /// Interpret --kl and kl grid values in bits
    #[arg(long)]
    kl_bits: bool,
    /// Empirical risk (fixed; omit when --vary emp-risk)
    #[arg(long)]
    emp_risk: Option<f64>,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    extras: ExtrasArgs,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum VaryField {
    N,
    Beta,
    Kl,
    EmpRisk,
}

impl VaryField {
    fn name(self) -> &'static str {
        match self {
            VaryField::N => "n",
            VaryField::Beta => "beta",
            VaryField::Kl => "kl",
            VaryField::EmpRisk => "emp-risk",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
enum CliError {
    /// Bad flags or malformed input files; exit code 1.
    Validation(String),
    /// Failure while computing or emitting results; exit code 2.
    Runtime(String),
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Library errors that reflect bad inputs map to exit 1; numerical
/// breakdowns map to exit 2.
fn classify(e: LibError) -> CliError {
    match e {
        LibError::NonFiniteObjective(_) => CliError::Runtime(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn require<T>(v: Option<T>, flag: &str, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| validation(format!("{flag} is required for {what}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("error: invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify(a) => cmd_certify(*a),
        Command::Compare(a) => cmd_compare(*a),
        Command::Coverage(a) => cmd_coverage(*a),
        Command::Anytime(a) => cmd_anytime(*a),
        Command::Sweep(a) => cmd_sweep(*a),
    }
}

/// Everything a single bound evaluation can consume, validated from flags.
#[derive(Clone)]
struct EvalInputs {
    n: u64,
    beta: Option<f64>,
    log_inv_beta: Option<f64>,
    kl_nats: f64,
    emp_risk: Option<f64>,
    family: Option<TailFamily>,
    lambda: Option<f64>,
    use_xi: bool,
    esssup: EssSupInfo,
    k_max: Option<u64>,
    sigma2_n: Option<f64>,
    var_empirical: Option<f64>,
    var_predictable: Option<f64>,
    range: Option<(f64, f64)>,
}

impl EvalInputs {
    fn build(ctx: &ContextArgs, fam: &FamilyArgs, extras: &ExtrasArgs) -> Result<Self, CliError> {
        if ctx.n == 0 {
            return Err(validation("--n must be at least 1"));
        }
        Self::from_parts(
            ctx.n,
            ctx.beta,
            ctx.log_inv_beta,
            ctx.kl,
            ctx.kl_bits,
            ctx.emp_risk,
            fam,
            extras,
            true,
        )
    }

    /// Shared constructor; `beta_required` is false only for sweeps that
    /// vary beta, where the grid supplies it per point.
    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        n: u64,
        beta: Option<f64>,
        log_inv_beta: Option<f64>,
        kl: f64,
        kl_bits: bool,
        emp_risk: Option<f64>,
        fam: &FamilyArgs,
        extras: &ExtrasArgs,
        beta_required: bool,
    ) -> Result<Self, CliError> {
        match (beta, log_inv_beta) {
            (Some(_), Some(_)) => {
                return Err(validation(
                    "--beta and --log-inv-beta are mutually exclusive; pass exactly one",
                ))
            }
            (None, None) if beta_required => {
                return Err(validation("one of --beta or --log-inv-beta is required"))
            }
            _ => {}
        }
        let kl_nats = if kl_bits { kl * std::f64::consts::LN_2 } else { kl };
        let range = match (fam.range_min, fam.range_max) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(validation("--range-min and --range-max must be given together")),
        };
        let family = build_family(fam, range)?;
        let esssup = match extras.esssup {
            Some(v) => EssSupInfo::known(v).map_err(|e| validation(format!("--esssup: {e}")))?,
            None => EssSupInfo::unknown(),
        };
        if let Some(l) = extras.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(validation(format!(
                    "--lambda must be positive and finite, got {l}"
                )));
            }
        }
        Ok(EvalInputs {
            n,
            beta,
            log_inv_beta,
            kl_nats,
            emp_risk,
            family,
            lambda: extras.lambda,
            use_xi: extras.use_xi,
            esssup,
            k_max: extras.k_max,
            sigma2_n: extras.sigma2_n,
            var_empirical: extras.var_empirical,
            var_predictable: extras.var_predictable,
            range,
        })
    }

    fn make_ctx(&self, what: &str) -> Result<BoundContext, CliError> {
        let emp = require(self.emp_risk, "--emp-risk", what)?;
        let emp = Probability::new(emp).map_err(|e| validation(format!("--emp-risk: {e}")))?;
        let kl = NatsValue::new(self.kl_nats).map_err(|e| validation(format!("--kl: {e}")))?;
        match (self.beta, self.log_inv_beta) {
            (Some(b), _) => BoundContext::new(self.n, b, kl, emp)
                .map_err(|e| validation(format!("--beta: {e}"))),
            (_, Some(l)) => BoundContext::with_log_inv_beta(self.n, l, kl, emp)
                .map_err(|e| validation(format!("--log-inv-beta: {e}"))),
            _ => Err(validation("one of --beta or --log-inv-beta is required")),
        }
    }

    /// Beta as a plain float, for interfaces that cannot take ln(1/beta).
    fn beta_value(&self) -> Result<f64, CliError> {
        match (self.beta, self.log_inv_beta) {
            (Some(b), _) => Ok(b),
            (_, Some(l)) => {
                let b = (-l).exp();
                if b > 0.0 {
                    Ok(b)
                } else {
                    Err(validation(
                        "--log-inv-beta is too extreme to represent as a positive beta here",
                    ))
                }
            }
            _ => Err(validation("one of --beta or --log-inv-beta is required")),
        }
    }

    fn require_family(&self, bound: &str) -> Result<&TailFamily, CliError> {
        self.family
            .as_ref()
            .ok_or_else(|| validation(format!("--family is required for bound '{bound}'")))
    }
}

fn build_family(
    fa: &FamilyArgs,
    range: Option<(f64, f64)>,
) -> Result<Option<TailFamily>, CliError> {
    let Some(kind) = fa.family else {
        return Ok(None);
    };
    let fam = match kind {
        FamilyKind::Bounded => {
            let (a, b) = range.ok_or_else(|| {
                validation("--range-min and --range-max are required for --family bounded")
            })?;
            TailFamily::bounded_range(a, b)
                .map_err(|e| validation(format!("--range-min/--range-max: {e}")))?
        }
        FamilyKind::Subgaussian => {
            let s = require(fa.sigma2, "--sigma2", "--family subgaussian")?;
            TailFamily::sub_gaussian(s).map_err(|e| validation(format!("--sigma2: {e}")))?
        }
        FamilyKind::Subgamma => {
            let s = require(fa.sigma2, "--sigma2", "--family subgamma")?;
            let c = require(fa.scale_c, "--scale-c", "--family subgamma")?;
            TailFamily::sub_gamma(s, c)
                .map_err(|e| validation(format!("--sigma2/--scale-c: {e}")))?
        }
        FamilyKind::Subexponential => {
            let s = require(fa.sigma2, "--sigma2", "--family subexponential")?;
            let c = require(fa.scale_c, "--scale-c", "--family subexponential")?;
            TailFamily::sub_exponential(s, c)
                .map_err(|e| validation(format!("--sigma2/--scale-c: {e}")))?
        }
        FamilyKind::Custom => match (&fa.cgf_table, &fa.cgf_expr) {
            (Some(_), Some(_)) => {
                return Err(validation("--cgf-table and --cgf-expr are mutually exclusive"))
            }
            (Some(path), None) => TailFamily::CustomCgf(load_cgf_table(path)?),
            (None, Some(expr)) => {
                TailFamily::CustomCgf(table_from_expr(expr, fa.cgf_domain)?)
            }
            (None, None) => {
                return Err(validation("--family custom needs --cgf-table or --cgf-expr"))
            }
        },
    };
    Ok(Some(fam))
}

fn load_cgf_table(path: &PathBuf) -> Result<CgfTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| validation(format!("--cgf-table {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| validation(format!("--cgf-table: {e}")))?;
        if record.len() != 2 {
            return Err(validation(format!(
                "--cgf-table: row {} has {} fields, expected lambda,psi",
                i + 1,
                record.len()
            )));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(l), Ok(p)) => points.push((l, p)),
            // A single leading non-numeric row is a header.
            _ if i == 0 => {}
            _ => {
                return Err(validation(format!(
                    "--cgf-table: row {} is not a numeric lambda,psi pair",
                    i + 1
                )))
            }
        }
    }
    CgfTable::new(points).map_err(|e| validation(format!("--cgf-table: {e}")))
}

fn table_from_expr(expr: &str, domain: Option<f64>) -> Result<CgfTable, CliError> {
    let b_dom = require(domain, "--cgf-domain", "--cgf-expr")?;
    let parsed: meval::Expr = expr
        .parse()
        .map_err(|e| validation(format!("--cgf-expr: {e}")))?;
    let f = parsed
        .bind("lambda")
        .map_err(|e| validation(format!("--cgf-expr: {e}")))?;
    CgfTable::from_fn(f, b_dom, CGF_EXPR_POINTS)
        .map_err(|e| validation(format!("--cgf-expr: {e}")))
}

fn parse_bound(name: &str) -> Result<BoundId, CliError> {
    coverage_bound_ids()
        .into_iter()
        .find(|id| id.name() == name)
        .ok_or_else(|| {
            let menu = coverage_bound_ids()
                .iter()
                .map(|id| id.name())
                .collect::<Vec<_>>()
                .join(", ");
            validation(format!("--bound: unknown bound '{name}'; expected one of: {menu}"))
        })
}

fn resolve_beta(beta: Option<f64>, log_inv_beta: Option<f64>) -> Result<f64, CliError> {
    let b = match (beta, log_inv_beta) {
        (Some(_), Some(_)) => {
            return Err(validation(
                "--beta and --log-inv-beta are mutually exclusive; pass exactly one",
            ))
        }
        (None, None) => return Err(validation("one of --beta or --log-inv-beta is required")),
        (Some(b), None) => b,
        (None, Some(l)) => {
            let b = (-l).exp();
            if !(b > 0.0) {
                return Err(validation(
                    "--log-inv-beta is too extreme to represent as a positive beta here",
                ));
            }
            b
        }
    };
    if b.is_nan() || b <= 0.0 || b >= 1.0 {
        return Err(validation(format!("--beta must lie in (0,1), got {b}")));
    }
    Ok(b)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            validation(format!("{SEED_ENV} must be an unsigned 64-bit integer, got '{text}'"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(validation(format!("{SEED_ENV}: {e}"))),
    }
}

fn evaluate_bound(id: BoundId, inp: &EvalInputs) -> Result<Certificate, CliError> {
    let what = format!("bound '{}'", id.name());
    let cert = match id {
        BoundId::Mcallester => bounded::mcallester(&inp.make_ctx(&what)?),
        BoundId::SeegerLangford => bounded::seeger_langford(&inp.make_ctx(&what)?),
        BoundId::CatoniFixed => {
            let lambda = require(inp.lambda, "--lambda", &what)?;
            bounded::catoni_fixed(&inp.make_ctx(&what)?, lambda, inp.use_xi).map_err(classify)?
        }
        BoundId::CatoniUniform => bounded::catoni_uniform(&inp.make_ctx(&what)?),
        BoundId::FastRateStrong => bounded::fast_rate_strong(&inp.make_ctx(&what)?),
        BoundId::FastRateSimple => bounded::fast_rate_simple(&inp.make_ctx(&what)?),
        BoundId::MixedRate => bounded::mixed_rate(&inp.make_ctx(&what)?),
        BoundId::Thiemann => bounded::thiemann(&inp.make_ctx(&what)?),
        BoundId::Rivasplata => bounded::rivasplata(&inp.make_ctx(&what)?),
        BoundId::CgfFixedLambda => {
            let lambda = require(inp.lambda, "--lambda", &what)?;
            let family = inp.require_family(id.name())?;
            general::cgf_fixed_lambda(&inp.make_ctx(&what)?, family, lambda).map_err(classify)?
        }
        BoundId::Chernoff => {
            let family = inp.require_family(id.name())?;
            let ctx = inp.make_ctx(&what)?;
            match inp.k_max {
                Some(0) => return Err(validation("--k-max must be at least 1")),
                Some(k) => general::chernoff_analogue_with_cutoff(&ctx, family, inp.esssup, k),
                None => general::chernoff_tail_menu(&ctx, family, inp.esssup),
            }
        }
        BoundId::ChernoffNoCutoff => {
            let family = inp.require_family(id.name())?;
            general::chernoff_no_cutoff(&inp.make_ctx(&what)?, family)
        }
        BoundId::ChernoffLinearized => {
            let family = inp.require_family(id.name())?;
            general::chernoff_linearized(&inp.make_ctx(&what)?, family)
        }
        BoundId::ChernoffLoglog => {
            let family = inp.require_family(id.name())?;
            general::chernoff_loglog(&inp.make_ctx(&what)?, family, inp.esssup)
        }
        BoundId::SecondMoment => {
            let s = require(inp.sigma2_n, "--sigma2-n", &what)?;
            let smc = SecondMomentContext::new(inp.make_ctx(&what)?, s)
                .map_err(|e| validation(format!("--sigma2-n: {e}")))?;
            general::second_moment_bound(&smc, inp.esssup)
        }
        BoundId::Martingale => {
            let ve = require(inp.var_empirical, "--var-empirical", &what)?;
            let vp = require(inp.var_predictable, "--var-predictable", &what)?;
            let beta = inp.beta_value()?;
            let kl =
                NatsValue::new(inp.kl_nats).map_err(|e| validation(format!("--kl: {e}")))?;
            let mc = MartingaleContext::new(inp.n, beta, kl, ve, vp)
                .map_err(|e| validation(e.to_string()))?;
            general::martingale_bound(&mc, inp.esssup)
        }
        BoundId::RandomizedSubsample => {
            let (a, b) = inp.range.ok_or_else(|| {
                validation(format!("--range-min and --range-max are required for {what}"))
            })?;
            general::randomized_subsample_bound(&inp.make_ctx(&what)?, a, b).map_err(classify)?
        }
    };
    Ok(cert)
}

/// Bounded-family dispatch used by anytime schedules, where the library
/// error type must flow through `make_anytime`.
fn bounded_eval(
    id: BoundId,
    ctx: &BoundContext,
    lambda: Option<f64>,
    use_xi: bool,
) -> pacbayes::Result<Certificate> {
    Ok(match id {
        BoundId::Mcallester => bounded::mcallester(ctx),
        BoundId::SeegerLangford => bounded::seeger_langford(ctx),
        BoundId::CatoniFixed => {
            let lambda = lambda.expect("--lambda validated before scheduling");
            bounded::catoni_fixed(ctx, lambda, use_xi)?
        }
        BoundId::CatoniUniform => bounded::catoni_uniform(ctx),
        BoundId::FastRateStrong => bounded::fast_rate_strong(ctx),
        BoundId::FastRateSimple => bounded::fast_rate_simple(ctx),
        BoundId::MixedRate => bounded::mixed_rate(ctx),
        BoundId::Thiemann => bounded::thiemann(ctx),
        BoundId::Rivasplata => bounded::rivasplata(ctx),
        other => unreachable!("{other} is not in the bounded-loss kl family"),
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing output: {e}")))?;
    write_stdout(text.as_bytes())
}

/// Writes to stdout, treating a closed pipe (output piped into head and the
/// like) as success rather than a runtime failure.
fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let res = out
        .write_all(bytes)
        .and_then(|()| out.write_all(b"\n"))
        .and_then(|()| out.flush());
    match res {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Runtime(format!("writing output: {e}"))),
    }
}

/// Shortest decimal that parses back to the same f64 (non-finite prints as
/// null, matching the JSON convention).
fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("float serialization cannot fail")
}

fn csv_out<F>(write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut csv::Writer<std::io::Stdout>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(std::io::stdout());
    match write(&mut w).and_then(|()| w.flush().map_err(csv::Error::from)) {
        Ok(()) => Ok(()),
        Err(e) if broken_pipe(&e) => Ok(()),
        Err(e) => Err(CliError::Runtime(format!("writing csv: {e}"))),
    }
}

fn broken_pipe(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)
}

#[derive(Serialize)]
struct CertifyOutput {
    schema_version: u32,
    command: &'static str,
    certificate: Certificate,
}

fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    let id = parse_bound(&args.bound)?;
    let inputs = EvalInputs::build(&args.context, &args.family, &args.extras)?;
    let cert = evaluate_bound(id, &inputs)?;
    match args.format {
        Format::Json => print_json(&CertifyOutput {
            schema_version: SCHEMA_VERSION,
            command: "certify",
            certificate: cert,
        }),
        Format::Csv => csv_out(|w| {
            w.write_record(["bound", "n", "beta", "value", "informative"])?;
            w.write_record([
                cert.bound_id.name(),
                &cert.n.to_string(),
                &num(cert.beta),
                &num(cert.value),
                &cert.informative.to_string(),
            ])
        }),
    }
}

#[derive(Serialize)]
struct DominanceViolationOut {
    tighter: BoundId,
    looser: BoundId,
    gap: f64,
}

#[derive(Serialize)]
struct DominanceVerdict {
    holds: bool,
    tolerance: f64,
    violations: Vec<DominanceViolationOut>,
}

/// Orderings that hold for every context: seeger-langford lower-bounds the
/// whole kl family it anchors, each derivation step only loosens, and the
/// uniform catoni optimum beats any fixed lambda spending the same xi
/// constant. catoni-fixed without --use-xi spends a cheaper budget and is
/// excluded.
fn dominance_verdict(rows: &[Certificate], fixed_uses_xi: bool) -> DominanceVerdict {
    let value = |id: BoundId| rows.iter().find(|c| c.bound_id == id).map(|c| c.value);
    let mut pairs: Vec<(BoundId, BoundId)> = BOUNDED_IDS
        .iter()
        .filter(|&&id| id != BoundId::SeegerLangford && id != BoundId::CatoniFixed)
        .map(|&id| (BoundId::SeegerLangford, id))
        .collect();
    pairs.extend([
        (BoundId::FastRateStrong, BoundId::FastRateSimple),
        (BoundId::FastRateSimple, BoundId::MixedRate),
        (BoundId::FastRateSimple, BoundId::Thiemann),
        (BoundId::MixedRate, BoundId::Thiemann),
        (BoundId::MixedRate, BoundId::Rivasplata),
        (BoundId::Thiemann, BoundId::Rivasplata),
    ]);
    if fixed_uses_xi {
        pairs.push((BoundId::CatoniUniform, BoundId::CatoniFixed));
        pairs.push((BoundId::SeegerLangford, BoundId::CatoniFixed));
    }
    let mut violations = Vec::new();
    for (tighter, looser) in pairs {
        if let (Some(t), Some(l)) = (value(tighter), value(looser)) {
            if t > l + DOMINANCE_TOL {
                violations.push(DominanceViolationOut { tighter, looser, gap: t - l });
            }
        }
    }
    DominanceVerdict { holds: violations.is_empty(), tolerance: DOMINANCE_TOL, violations }
}

#[derive(Serialize)]
struct CompareOutput {
    schema_version: u32,
    command: &'static str,
    n: u64,
    log_inv_beta: f64,
    kl_nats: f64,
    emp_risk: f64,
    rows: Vec<Certificate>,
    dominance: DominanceVerdict,
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let inp = EvalInputs::build(&args.context, &args.family, &args.extras)?;
    let ctx = inp.make_ctx("compare")?;
    // catoni-fixed joins the table at lambda = n unless --lambda overrides.
    let lambda_fixed = inp.lambda.unwrap_or(inp.n as f64);
    let mut rows = vec![
        bounded::mcallester(&ctx),
        bounded::seeger_langford(&ctx),
        bounded::catoni_fixed(&ctx, lambda_fixed, inp.use_xi).map_err(classify)?,
        bounded::catoni_uniform(&ctx),
        bounded::fast_rate_strong(&ctx),
        bounded::fast_rate_simple(&ctx),
        bounded::mixed_rate(&ctx),
        bounded::thiemann(&ctx),
        bounded::rivasplata(&ctx),
    ];
    if let Some(family) = &inp.family {
        rows.push(general::chernoff_tail_menu(&ctx, family, inp.esssup));
        rows.push(general::chernoff_no_cutoff(&ctx, family));
        rows.push(general::chernoff_linearized(&ctx, family));
        rows.push(general::chernoff_loglog(&ctx, family, inp.esssup));
        if let Some(lambda) = inp.lambda {
            rows.push(general::cgf_fixed_lambda(&ctx, family, lambda).map_err(classify)?);
        }
    }
    if let Some(s) = inp.sigma2_n {
        let smc = SecondMomentContext::new(ctx.clone(), s)
            .map_err(|e| validation(format!("--sigma2-n: {e}")))?;
        rows.push(general::second_moment_bound(&smc, inp.esssup));
    }
    if let Some((a, b)) = inp.range {
        rows.push(general::randomized_subsample_bound(&ctx, a, b).map_err(classify)?);
    }
    let dominance = dominance_verdict(&rows, inp.use_xi);
    rows.sort_by(|x, y| {
        x.value
            .total_cmp(&y.value)
            .then_with(|| x.bound_id.name().cmp(y.bound_id.name()))
    });
    match args.format {
        Format::Json => print_json(&CompareOutput {
            schema_version: SCHEMA_VERSION,
            command: "compare",
            n: ctx.n(),
            log_inv_beta: ctx.log_inv_beta(),
            kl_nats: ctx.kl().value(),
            emp_risk: ctx.emp_risk().value(),
            rows,
            dominance,
        }),
        Format::Csv => {
            csv_out(|w| {
                w.write_record(["bound", "value", "informative"])?;
                for cert in &rows {
                    w.write_record([
                        cert.bound_id.name(),
                        &num(cert.value),
                        &cert.informative.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            if dominance.holds {
                eprintln!("dominance chain holds within {DOMINANCE_TOL:e}");
            } else {
                let detail = dominance
                    .violations
                    .iter()
                    .map(|v| format!("{} > {} by {:e}", v.tighter, v.looser, v.gap))
                    .collect::<Vec<_>>()
                    .join("; ");
                eprintln!("dominance chain violated: {detail}");
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BoundReportOut {
    bound: BoundId,
    report: CoverageReport,
}

#[derive(Serialize)]
struct CoverageOutput {
    schema_version: u32,
    command: &'static str,
    source: String,
    rule: PosteriorRule,
    n: u64,
    beta: f64,
    trials: u64,
    seed: u64,
    reports: Vec<BoundReportOut>,
}

fn cmd_coverage(args: CoverageArgs) -> Result<(), CliError> {
    let (source, problem) = match (&args.problem, &args.preset) {
        (Some(_), Some(_)) => {
            return Err(validation("--problem and --preset are mutually exclusive"))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| validation(format!("--problem {}: {e}", path.display())))?;
            let problem = DiscreteProblem::from_json(&text)
                .map_err(|e| validation(format!("--problem: {e}")))?;
            (path.display().to_string(), problem)
        }
        (None, Some(name)) => {
            let problem = preset(name).map_err(|e| validation(format!("--preset: {e}")))?;
            (format!("preset:{name}"), problem)
        }
        (None, None) => return Err(validation("one of --problem or --preset is required")),
    };
    let rule = match args.rule {
        RuleKind::Gibbs => PosteriorRule::Gibbs {
            lambda: args.lambda.unwrap_or(1.0),
            n_scaled: args.n_scaled,
        },
        RuleKind::ErmSoftmax => PosteriorRule::ErmSoftmax {
            temperature: require(args.temperature, "--temperature", "rule 'erm-softmax'")?,
        },
        RuleKind::Fixed => PosteriorRule::FixedPosterior {
            pmf: require(args.posterior.clone(), "--posterior", "rule 'fixed'")?,
        },
    };
    let bound_ids = if args.bounds.is_empty() {
        coverage_bound_ids()
    } else {
        args.bounds
            .iter()
            .map(|s| parse_bound(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    if args.n == 0 {
        return Err(validation("--n must be at least 1"));
    }
    if args.trials == 0 {
        return Err(validation("--trials must be at least 1"));
    }
    let beta = resolve_beta(args.beta, args.log_inv_beta)?;
    let seed = resolve_seed(args.seed)?;
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let reports =
        coverage_experiment_multi(&problem, &rule, &bound_ids, args.n, beta, args.trials, seed)
            .map_err(classify)?;
    match args.format {
        Format::Json => print_json(&CoverageOutput {
            schema_version: SCHEMA_VERSION,
            command: "coverage",
            source,
            rule,
            n: args.n,
            beta,
            trials: args.trials,
            seed,
            reports: reports
                .into_iter()
                .map(|(bound, report)| BoundReportOut { bound, report })
                .collect(),
        }),
        Format::Csv => csv_out(|w| {
            w.write_record([
                "bound",
                "trials",
                "violations",
                "violation_rate",
                "mean_bound",
                "mean_pop_risk",
                "ci_low",
                "ci_high",
            ])?;
            for (bound, r) in &reports {
                w.write_record([
                    bound.name(),
                    &r.trials.to_string(),
                    &r.violations.to_string(),
                    &num(r.violation_rate),
                    &num(r.mean_bound),
                    &num(r.mean_pop_risk),
                    &num(r.binomial_ci.0),
                    &num(r.binomial_ci.1),
                ])?;
            }
            Ok(())
        }),
    }
}

#[derive(Serialize)]
struct AnytimeOutput {
    schema_version: u32,
    command: &'static str,
    bound: BoundId,
    schedule: &'static str,
    total_beta: f64,
    horizon: u64,
    certificates: Vec<Certificate>,
}

fn cmd_anytime(args: AnytimeArgs) -> Result<(), CliError> {
    let id = parse_bound(&args.bound)?;
    if !BOUNDED_IDS.contains(&id) {
        let menu = BOUNDED_IDS.map(|b| b.name()).join(", ");
        return Err(validation(format!(
            "--bound: '{}' does not take a schedule; expected one of: {menu}",
            id.name()
        )));
    }
    if args.horizon == 0 {
        return Err(validation("--horizon must be at least 1"));
    }
    let beta = resolve_beta(args.beta, args.log_inv_beta)?;
    let schedule = match args.schedule {
        ScheduleKind::Basel => BetaSchedule::basel(beta),
        ScheduleKind::KaufmannKoolen => BetaSchedule::kaufmann_koolen(beta),
    }
    .map_err(|e| validation(format!("--beta: {e}")))?;
    let kl_nats = if args.kl_bits {
        args.kl * std::f64::consts::LN_2
    } else {
        args.kl
    };
    let kl = NatsValue::new(kl_nats).map_err(|e| validation(format!("--kl: {e}")))?;
    let emp =
        Probability::new(args.emp_risk).map_err(|e| validation(format!("--emp-risk: {e}")))?;
    if id == BoundId::CatoniFixed {
        let l = require(args.lambda, "--lambda", "bound 'catoni-fixed'")?;
        if !(l > 0.0) || !l.is_finite() {
            return Err(validation(format!("--lambda must be positive and finite, got {l}")));
        }
    }
    let certificates = make_anytime(
        |n, beta_n| {
            let ctx = BoundContext::new(n, beta_n, kl, emp)?;
            bounded_eval(id, &ctx, args.lambda, args.use_xi)
        },
        &schedule,
        args.horizon,
    )
    .map_err(classify)?;
    match args.format {
        Format::Json => print_json(&AnytimeOutput {
            schema_version: SCHEMA_VERSION,
            command: "anytime",
            bound: id,
            schedule: args.schedule.name(),
            total_beta: beta,
            horizon: args.horizon,
            certificates,
        }),
        Format::Csv => csv_out(|w| {
            w.write_record(["n", "beta_n", "value", "informative"])?;
            for cert in &certificates {
                w.write_record([
                    &cert.n.to_string(),
                    &num(cert.beta),
                    &num(cert.value),
                    &cert.informative.to_string(),
                ])?;
            }
            Ok(())
        }),
    }
}

#[derive(Serialize)]
struct SweepPoint {
    input: f64,
    certificate: Certificate,
}

#[derive(Serialize)]
struct SweepOutput {
    schema_version: u32,
    command: &'static str,
    bound: BoundId,
    vary: &'static str,
    points: Vec<SweepPoint>,
}

fn sweep_grid(from: f64, to: f64, steps: usize, log: bool) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(validation("--steps must be at least 1"));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(validation("--from and --to must be finite"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    if log && !(from > 0.0 && to > 0.0) {
        return Err(validation("--log spacing needs positive --from and --to"));
    }
    let k = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == 0 {
                from
            } else if i == steps - 1 {
                to
            } else if log {
                from * (to / from).powf(i as f64 / k)
            } else {
                from + (to - from) * (i as f64 / k)
            }
        })
        .collect())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let id = parse_bound(&args.bound)?;
    let values = sweep_grid(args.from, args.to, args.steps, args.log)?;
    match args.vary {
        VaryField::N if args.n.is_some() => {
            return Err(validation("--n conflicts with --vary n; the grid supplies it"))
        }
        VaryField::Beta if args.beta.is_some() || args.log_inv_beta.is_some() => {
            return Err(validation(
                "--beta/--log-inv-beta conflict with --vary beta; the grid supplies it",
            ))
        }
        VaryField::Kl if args.kl.is_some() => {
            return Err(validation("--kl conflicts with --vary kl; the grid supplies it"))
        }
        VaryField::EmpRisk if args.emp_risk.is_some() => {
            return Err(validation(
                "--emp-risk conflicts with --vary emp-risk; the grid supplies it",
            ))
        }
        _ => {}
    }
    let n_base = match args.vary {
        VaryField::N => 1,
        _ => {
            let n = require(args.n, "--n", "sweep")?;
            if n == 0 {
                return Err(validation("--n must be at least 1"));
            }
            n
        }
    };
    let kl_base = match args.vary {
        VaryField::Kl => 0.0,
        _ => require(args.kl, "--kl", "sweep")?,
    };
    let template = EvalInputs::from_parts(
        n_base,
        args.beta,
        args.log_inv_beta,
        kl_base,
        args.kl_bits,
        args.emp_risk,
        &args.family,
        &args.extras,
        !matches!(args.vary, VaryField::Beta),
    )?;
    let mut points = Vec::with_capacity(values.len());
    for &x in &values {
        let mut inp = template.clone();
        let input = match args.vary {
            VaryField::N => {
                let v = x.round();
                if !v.is_finite() || v < 1.0 || v > 2f64.powi(53) {
                    return Err(validation(format!(
                        "--from/--to: n grid values must round to integers >= 1, got {x}"
                    )));
                }
                inp.n = v as u64;
                v
            }
            VaryField::Beta => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(validation(format!(
                        "--from/--to: beta grid values must lie in (0,1), got {x}"
                    )));
                }
                inp.beta = Some(x);
                inp.log_inv_beta = None;
                x
            }
            VaryField::Kl => {
                inp.kl_nats = if args.kl_bits {
                    x * std::f64::consts::LN_2
                } else {
                    x
                };
                x
            }
            VaryField::EmpRisk => {
                inp.emp_risk = Some(x);
                x
            }
        };
        let certificate = evaluate_bound(id, &inp)?;
        points.push(SweepPoint { input, certificate });
    }
    match args.format {
        Format::Json => print_json(&SweepOutput {
            schema_version: SCHEMA_VERSION,
            command: "sweep",
            bound: id,
            vary: args.vary.name(),
            points,
        }),
        Format::Csv => csv_out(|w| {
            w.write_record([args.vary.name(), "value", "informative"])?;
            for p in &points {
                let label = if matches!(args.vary, VaryField::N) {
                    format!("{}", p.input as u64)
                } else {
                    num(p.input)
                };
                w.write_record([
                    &label,
                    &num(p.certificate.value),
                    &p.certificate.informative.to_string(),
                ])?;
            }
            Ok(())
        }),
    }
}
