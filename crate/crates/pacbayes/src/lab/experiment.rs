//! Monte-Carlo coverage and tightness experiments over discrete problems.
//!
//! Every trial draws a fresh dataset from its own deterministic random
//! stream, computes the posterior and its exact population quantities, and
//! checks each requested bound against the true risk. Violation counting is
//! exact because nothing about the posterior is sampled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anytime::BetaSchedule;
use crate::bounded::{
    catoni_fixed, catoni_uniform, fast_rate_simple, fast_rate_strong, mcallester, mixed_rate,
    rivasplata, seeger_langford, thiemann, BoundContext, BoundId, Certificate,
    ConfidenceConstant,
};
use crate::error::{Error, Result};
use crate::general::{
    cgf_fixed_lambda, chernoff_linearized, chernoff_loglog, chernoff_no_cutoff,
    chernoff_tail_menu, martingale_bound, randomized_subsample_bound, second_moment_bound,
    EssSupInfo, MartingaleContext, SecondMomentContext,
};
use crate::specfun::{minimize_scalar_grid, NatsValue, Probability};
use crate::tails::TailFamily;

use super::problem::{
    apply_rule, draw_with_rng, exact_quantities_from_counts, trial_rng, DiscreteProblem,
    ExactQuantities, PosteriorRule,
};

/// Two-sided 99% normal quantile used for the Wilson interval.
pub const WILSON_Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for a binomial proportion at 99% confidence.
#[must_use]
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    assert!(successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z99 * WILSON_Z99;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z99 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Outcome of a Monte-Carlo coverage run for one bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    pub violations: u64,
    pub violation_rate: f64,
    /// Mean certificate value across trials (final-step value for anytime runs).
    pub mean_bound: f64,
    /// Mean exact posterior-averaged population risk across trials.
    pub mean_pop_risk: f64,
    /// 99% Wilson interval for the violation probability.
    pub binomial_ci: (f64, f64),
}

impl CoverageReport {
    fn from_sums(trials: u64, violations: u64, sum_bound: f64, sum_pop: f64) -> Self {
        let (lo, hi) = wilson_interval(violations, trials);
        CoverageReport {
            trials,
            violations,
            violation_rate: violations as f64 / trials as f64,
            mean_bound: sum_bound / trials as f64,
            mean_pop_risk: sum_pop / trials as f64,
            binomial_ci: (lo, hi),
        }
    }
}

/// Every bound the coverage machinery can exercise.
#[must_use]
pub fn coverage_bound_ids() -> Vec<BoundId> {
    vec![
        BoundId::Mcallester,
        BoundId::SeegerLangford,
        BoundId::CatoniFixed,
        BoundId::CatoniUniform,
        BoundId::FastRateStrong,
        BoundId::FastRateSimple,
        BoundId::MixedRate,
        BoundId::Thiemann,
        BoundId::Rivasplata,
        BoundId::CgfFixedLambda,
        BoundId::Chernoff,
        BoundId::ChernoffNoCutoff,
        BoundId::ChernoffLinearized,
        BoundId::ChernoffLoglog,
        BoundId::SecondMoment,
        BoundId::Martingale,
        BoundId::RandomizedSubsample,
    ]
}

/// Checks that the problem declares a loss range inside [0, 1], which the
/// coverage path needs so empirical risks fit the bound contexts.
fn unit_range(problem: &DiscreteProblem) -> Result<(f64, f64)> {
    match problem.loss_range() {
        Some((a, b)) if a >= 0.0 && b <= 1.0 => Ok((a, b)),
        Some((a, b)) => Err(Error::InvalidProblem(format!(
            "coverage experiments need losses declared within [0, 1], got [{a}, {b}]"
        ))),
        None => Err(Error::InvalidProblem(
            "coverage experiments need an explicit loss_range within [0, 1]".into(),
        )),
    }
}

/// The largest population risk any posterior could average to, used as the
/// known essential supremum on event-complement branches.
fn esssup_of(problem: &DiscreteProblem) -> EssSupInfo {
    let max = problem.pop_risks().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    EssSupInfo::known(max).expect("population risks are finite")
}

/// Per-trial state shared by all bounds: the outcome tally, the posterior,
/// and the exact quantities derived from them.
struct TrialState<'a> {
    problem: &'a DiscreteProblem,
    counts: Vec<u64>,
    n: u64,
    posterior: Vec<f64>,
    q: ExactQuantities,
}

impl TrialState<'_> {
    fn bound_context(&self, beta: f64) -> Result<BoundContext> {
        BoundContext::new(
            self.n,
            beta,
            NatsValue::new(self.q.kl)?,
            Probability::new(self.q.emp_risk)?,
        )
    }

    /// Empirical and predictable quadratic variation of the risk martingale
    /// M_n = n (risk - emp_risk), posterior-averaged.
    fn martingale_variations(&self) -> (f64, f64) {
        let problem = self.problem;
        let pop = problem.pop_risks();
        let mut var_emp = 0.0;
        let mut var_pred = 0.0;
        for (h, &p) in self.posterior.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let r = pop[h];
            let mut emp_part = 0.0;
            let mut pred_part = 0.0;
            for (z, o) in problem.outcomes().iter().enumerate() {
                let d = r - problem.loss(h, z);
                emp_part += self.counts[z] as f64 * d * d;
                pred_part += o.prob * d * d;
            }
            var_emp += p * emp_part;
            var_pred += p * self.n as f64 * pred_part;
        }
        (var_emp, var_pred)
    }
}

/// Evaluates one bound on a trial. The tail family for the general bounds
/// is the declared loss range, the tightest family that is exactly valid
/// for a discrete problem.
fn certificate_for_trial(
    state: &TrialState<'_>,
    bound_id: BoundId,
    beta: f64,
    range: (f64, f64),
    esssup: EssSupInfo,
) -> Result<Certificate> {
    let (a, b) = range;
    let family = TailFamily::bounded_range(a, b)?;
    match bound_id {
        BoundId::Mcallester
        | BoundId::SeegerLangford
        | BoundId::CatoniFixed
        | BoundId::CatoniUniform
        | BoundId::FastRateStrong
        | BoundId::FastRateSimple
        | BoundId::MixedRate
        | BoundId::Thiemann
        | BoundId::Rivasplata => {
            let ctx = state.bound_context(beta)?;
            bounded_certificate(bound_id, &ctx)
        }
        BoundId::CgfFixedLambda => {
            let ctx = state.bound_context(beta)?;
            // Data-free default: the optimizer of the zero-dependence bound.
            let lambda = (8.0 * ctx.log_inv_beta() / state.n as f64).sqrt() / (b - a);
            cgf_fixed_lambda(&ctx, &family, lambda)
        }
        BoundId::Chernoff => {
            let ctx = state.bound_context(beta)?;
            Ok(chernoff_tail_menu(&ctx, &family, esssup))
        }
        BoundId::ChernoffNoCutoff => {
            let ctx = state.bound_context(beta)?;
            Ok(chernoff_no_cutoff(&ctx, &family))
        }
        BoundId::ChernoffLinearized => {
            let ctx = state.bound_context(beta)?;
            Ok(chernoff_linearized(&ctx, &family))
        }
        BoundId::ChernoffLoglog => {
            let ctx = state.bound_context(beta)?;
            Ok(chernoff_loglog(&ctx, &family, esssup))
        }
        BoundId::SecondMoment => {
            let ctx = state.bound_context(beta)?;
            let smc = SecondMomentContext::new(ctx, state.q.sigma2_n())?;
            Ok(second_moment_bound(&smc, esssup))
        }
        BoundId::Martingale => {
            let (ve, vp) = state.martingale_variations();
            let mc =
                MartingaleContext::new(state.n, beta, NatsValue::new(state.q.kl)?, ve, vp)?;
            Ok(martingale_bound(&mc, esssup))
        }
        BoundId::RandomizedSubsample => {
            let ctx = state.bound_context(beta)?;
            randomized_subsample_bound(&ctx, a, b)
        }
    }
}

/// Dispatch for the bounded-loss kl bounds that need nothing beyond a
/// context. catoni-fixed uses the data-free default lambda = n.
fn bounded_certificate(bound_id: BoundId, ctx: &BoundContext) -> Result<Certificate> {
    match bound_id {
        BoundId::Mcallester => Ok(mcallester(ctx)),
        BoundId::SeegerLangford => Ok(seeger_langford(ctx)),
        BoundId::CatoniFixed => catoni_fixed(ctx, ctx.n() as f64, false),
        BoundId::CatoniUniform => Ok(catoni_uniform(ctx)),
        BoundId::FastRateStrong => Ok(fast_rate_strong(ctx)),
        BoundId::FastRateSimple => Ok(fast_rate_simple(ctx)),
        BoundId::MixedRate => Ok(mixed_rate(ctx)),
        BoundId::Thiemann => Ok(thiemann(ctx)),
        BoundId::Rivasplata => Ok(rivasplata(ctx)),
        other => Err(Error::Domain(format!(
            "bound '{other}' is not in the bounded-loss kl family"
        ))),
    }
}

/// The certified claim differs per bound: most certify the population risk
/// itself, the martingale bound certifies the unnormalized deviation.
fn is_violation(bound_id: BoundId, state: &TrialState<'_>, cert: &Certificate) -> bool {
    match bound_id {
        BoundId::Martingale => {
            state.n as f64 * (state.q.pop_risk - state.q.emp_risk) > cert.value
        }
        _ => state.q.pop_risk > cert.value,
    }
}

/// One trial's results across all requested bounds, in input order.
pub(crate) struct TrialRow {
    pub values: Vec<f64>,
    pub violated: Vec<bool>,
    pub pop_risk: f64,
    pub emp_risk: f64,
    pub kl: f64,
}

/// Runs all trials and returns per-trial rows indexed by trial number, so
/// aggregation never depends on scheduling order.
pub(crate) fn run_trials(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    bound_ids: &[BoundId],
    n: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TrialRow>> {
    if n == 0 || trials == 0 {
        return Err(Error::Domain("n and trials must both be >= 1".into()));
    }
    let range = unit_range(problem)?;
    let esssup = esssup_of(problem);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let sample = draw_with_rng(problem, n, &mut rng);
            let counts = problem.count_outcomes(&sample)?;
            let emp = problem.emp_risks_from_counts(&counts, n);
            let posterior = apply_rule(problem, rule, &emp, n)?;
            let q = exact_quantities_from_counts(problem, &counts, n, &posterior)?;
            let state = TrialState { problem, counts, n, posterior, q };
            let mut values = Vec::with_capacity(bound_ids.len());
            let mut violated = Vec::with_capacity(bound_ids.len());
            for &id in bound_ids {
                let cert = certificate_for_trial(&state, id, beta, range, esssup)?;
                violated.push(is_violation(id, &state, &cert));
                values.push(cert.value);
            }
            Ok(TrialRow {
                values,
                violated,
                pop_risk: q.pop_risk,
                emp_risk: q.emp_risk,
                kl: q.kl,
            })
        })
        .collect()
}

/// Monte-Carlo coverage of one bound at sample size `n`.
///
/// Each trial draws a dataset from stream `trial` of `master_seed`, applies
/// the posterior rule, and flags a violation when the exact population risk
/// exceeds the certificate. Results are bit-identical for a given seed
/// regardless of thread count.
pub fn coverage_experiment(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    bound_id: BoundId,
    n: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<CoverageReport> {
    let reports =
        coverage_experiment_multi(problem, rule, &[bound_id], n, beta, trials, master_seed)?;
    Ok(reports.into_iter().next().expect("one bound requested").1)
}

/// Coverage for several bounds sharing each trial's dataset and posterior,
/// which is both faster and a paired comparison.
pub fn coverage_experiment_multi(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    bound_ids: &[BoundId],
    n: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<(BoundId, CoverageReport)>> {
    let rows = run_trials(problem, rule, bound_ids, n, beta, trials, master_seed)?;
    let mut out = Vec::with_capacity(bound_ids.len());
    for (j, &id) in bound_ids.iter().enumerate() {
        let mut violations = 0u64;
        let mut sum_bound = 0.0;
        let mut sum_pop = 0.0;
        for row in &rows {
            violations += u64::from(row.violated[j]);
            sum_bound += row.values[j];
            sum_pop += row.pop_risk;
        }
        out.push((id, CoverageReport::from_sums(trials, violations, sum_bound, sum_pop)));
    }
    Ok(out)
}

/// Mean tightness diagnostics for one bound over a coverage run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub bound_id: BoundId,
    pub mean_certificate: f64,
    pub mean_emp_risk: f64,
    pub mean_kl_over_n: f64,
    /// Mean of certificate minus exact population risk.
    pub mean_slack: f64,
}

/// Tabulates mean certificate, empirical risk, kl/n, and slack per bound.
pub fn tightness_table(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    bound_ids: &[BoundId],
    n: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TightnessRow>> {
    let rows = run_trials(problem, rule, bound_ids, n, beta, trials, master_seed)?;
    let tf = trials as f64;
    let mean_emp: f64 = rows.iter().map(|r| r.emp_risk).sum::<f64>() / tf;
    let mean_kl_over_n: f64 = rows.iter().map(|r| r.kl).sum::<f64>() / tf / n as f64;
    let mean_pop: f64 = rows.iter().map(|r| r.pop_risk).sum::<f64>() / tf;
    Ok(bound_ids
        .iter()
        .enumerate()
        .map(|(j, &id)| {
            let mean_certificate = rows.iter().map(|r| r.values[j]).sum::<f64>() / tf;
            TightnessRow {
                bound_id: id,
                mean_certificate,
                mean_emp_risk: mean_emp,
                mean_kl_over_n,
                mean_slack: mean_certificate - mean_pop,
            }
        })
        .collect())
}

/// How the per-step confidence is allocated in an anytime run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnytimeMode {
    /// beta_n = 6 beta / (pi^2 n^2).
    Basel,
    /// beta_n = beta / (Z n ln^2(6n)), the heavier-horizon allocation.
    KaufmannKoolen,
    /// Full beta at every step with the sqrt(pi (n+1)) confidence constant
    /// substituted into the kl bounds.
    SeegerSubstitution,
    /// Negative control: the fixed-sample bound reused at every step with
    /// no allocation at all. Its simultaneous violation rate may exceed
    /// beta; report, never certify.
    Naive,
}

/// Simultaneous coverage over growing prefixes of one data stream.
///
/// A trial is violating when any prefix length in [1, horizon] has exact
/// population risk above that step's certificate. `mean_bound` and
/// `mean_pop_risk` report the final step. Supports the bounded-loss kl
/// bounds; the posterior rule is re-applied at every prefix.
#[allow(clippy::too_many_arguments)]
pub fn anytime_coverage_experiment(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    bound_id: BoundId,
    horizon: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
    mode: AnytimeMode,
) -> Result<CoverageReport> {
    if horizon == 0 || trials == 0 {
        return Err(Error::Domain("horizon and trials must both be >= 1".into()));
    }
    unit_range(problem)?;
    let schedule = match mode {
        AnytimeMode::Basel => Some(BetaSchedule::basel(beta)?),
        AnytimeMode::KaufmannKoolen => Some(BetaSchedule::kaufmann_koolen(beta)?),
        AnytimeMode::SeegerSubstitution | AnytimeMode::Naive => None,
    };
    let rows: Vec<(bool, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let sample = draw_with_rng(problem, horizon, &mut rng);
            let mut counts = vec![0u64; problem.n_outcomes()];
            let mut violated = false;
            let mut final_value = f64::NAN;
            let mut final_pop = f64::NAN;
            for (i, &z) in sample.iter().enumerate() {
                counts[z] += 1;
                let n = i as u64 + 1;
                let emp = problem.emp_risks_from_counts(&counts, n);
                let posterior = apply_rule(problem, rule, &emp, n)?;
                let q = exact_quantities_from_counts(problem, &counts, n, &posterior)?;
                let beta_n = match &schedule {
                    Some(s) => s.beta_at(n)?,
                    None => beta,
                };
                let mut ctx = BoundContext::new(
                    n,
                    beta_n,
                    NatsValue::new(q.kl)?,
                    Probability::new(q.emp_risk)?,
                )?;
                if mode == AnytimeMode::SeegerSubstitution {
                    ctx = ctx.with_constant(ConfidenceConstant::SqrtPiNPlus1);
                }
                let cert = bounded_certificate(bound_id, &ctx)?;
                if q.pop_risk > cert.value {
                    violated = true;
                }
                if n == horizon {
                    final_value = cert.value;
                    final_pop = q.pop_risk;
                }
            }
            Ok((violated, final_value, final_pop))
        })
        .collect::<Result<_>>()?;
    let mut violations = 0u64;
    let mut sum_bound = 0.0;
    let mut sum_pop = 0.0;
    for &(v, b, p) in &rows {
        violations += u64::from(v);
        sum_bound += b;
        sum_pop += p;
    }
    Ok(CoverageReport::from_sums(trials, violations, sum_bound, sum_pop))
}

/// Negative control: re-optimizes the fixed-lambda Catoni bound on the
/// realized data with no price for the search, the mistake the
/// lambda-uniform bound exists to avoid. Report only, never certify.
pub fn post_hoc_lambda_coverage(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    n: u64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<CoverageReport> {
    if n == 0 || trials == 0 {
        return Err(Error::Domain("n and trials must both be >= 1".into()));
    }
    unit_range(problem)?;
    let rows: Vec<(bool, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let sample = draw_with_rng(problem, n, &mut rng);
            let counts = problem.count_outcomes(&sample)?;
            let emp = problem.emp_risks_from_counts(&counts, n);
            let posterior = apply_rule(problem, rule, &emp, n)?;
            let q = exact_quantities_from_counts(problem, &counts, n, &posterior)?;
            let ctx = BoundContext::new(
                n,
                beta,
                NatsValue::new(q.kl)?,
                Probability::new(q.emp_risk)?,
            )?;
            // Data-dependent lambda at the plain fixed-lambda confidence.
            let (_, cheat) = minimize_scalar_grid(
                |lambda| match catoni_fixed(&ctx, lambda, false) {
                    Ok(cert) => cert.value,
                    Err(_) => f64::INFINITY,
                },
                1e-3,
                1e3 * n as f64,
                1e-6,
                256,
            )?;
            Ok((q.pop_risk > cheat, cheat, q.pop_risk))
        })
        .collect::<Result<_>>()?;
    let mut violations = 0u64;
    let mut sum_bound = 0.0;
    let mut sum_pop = 0.0;
    for &(v, b, p) in &rows {
        violations += u64::from(v);
        sum_bound += b;
        sum_pop += p;
    }
    Ok(CoverageReport::from_sums(trials, violations, sum_bound, sum_pop))
}
