//! Synthetic discrete learning problems with exactly computable risks.
//!
//! A [`DiscreteProblem`] couples a finite outcome distribution with a finite
//! hypothesis class and a loss table, so population risk, posterior KL, and
//! second moments are exact sums rather than Monte-Carlo estimates. Coverage
//! experiments then only randomize over datasets, never over the posterior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::NatsValue;

/// Tolerance for "sums to one" checks on probability vectors.
const PMF_SUM_TOL: f64 = 1e-12;

/// One atom of the outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Label carried along for display; the loss table is indexed positionally.
    pub value: f64,
    /// Probability mass of this outcome.
    pub prob: f64,
}

/// Wire form of a problem file. Kept separate so deserialization runs the
/// same validation as [`DiscreteProblem::new`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProblemSpec {
    outcomes: Vec<Outcome>,
    hypotheses: Vec<String>,
    loss: Vec<Vec<f64>>,
    prior: Vec<f64>,
    loss_range: Option<(f64, f64)>,
}

/// A finite data distribution, hypothesis class, loss table, and prior.
///
/// Invariants are enforced at construction: both pmfs are non-negative and
/// sum to one within 1e-12, the loss table is finite with one row per
/// hypothesis and one column per outcome, and when `loss_range` is present
/// every loss entry lies inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemSpec", into = "ProblemSpec")]
pub struct DiscreteProblem {
    outcomes: Vec<Outcome>,
    hypotheses: Vec<String>,
    loss: Vec<Vec<f64>>,
    prior: Vec<f64>,
    loss_range: Option<(f64, f64)>,
}

impl TryFrom<ProblemSpec> for DiscreteProblem {
    type Error = Error;

    fn try_from(raw: ProblemSpec) -> Result<Self> {
        DiscreteProblem::new(raw.outcomes, raw.hypotheses, raw.loss, raw.prior, raw.loss_range)
    }
}

impl From<DiscreteProblem> for ProblemSpec {
    fn from(p: DiscreteProblem) -> Self {
        ProblemSpec {
            outcomes: p.outcomes,
            hypotheses: p.hypotheses,
            loss: p.loss,
            prior: p.prior,
            loss_range: p.loss_range,
        }
    }
}

fn check_pmf(name: &str, pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidProblem(format!("{name} pmf is empty")));
    }
    for (i, &p) in pmf.iter().enumerate() {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "{name} pmf entry {i} is {p}, expected a finite value >= 0"
            )));
        }
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > PMF_SUM_TOL {
        return Err(Error::InvalidProblem(format!(
            "{name} pmf sums to {sum}, expected 1 within {PMF_SUM_TOL:e}"
        )));
    }
    Ok(())
}

impl DiscreteProblem {
    /// Builds a problem after validating every structural invariant.
    pub fn new(
        outcomes: Vec<Outcome>,
        hypotheses: Vec<String>,
        loss: Vec<Vec<f64>>,
        prior: Vec<f64>,
        loss_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        let probs: Vec<f64> = outcomes.iter().map(|o| o.prob).collect();
        check_pmf("outcome", &probs)?;
        for o in &outcomes {
            if !o.value.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "outcome value {} is not finite",
                    o.value
                )));
            }
        }
        if hypotheses.is_empty() {
            return Err(Error::InvalidProblem("hypothesis list is empty".into()));
        }
        if loss.len() != hypotheses.len() {
            return Err(Error::InvalidProblem(format!(
                "loss table has {} rows for {} hypotheses",
                loss.len(),
                hypotheses.len()
            )));
        }
        if let Some((a, b)) = loss_range {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidProblem(format!(
                    "loss_range ({a}, {b}) must be finite with a < b"
                )));
            }
        }
        for (h, row) in loss.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(Error::InvalidProblem(format!(
                    "loss row {h} has {} entries for {} outcomes",
                    row.len(),
                    outcomes.len()
                )));
            }
            for (z, &l) in row.iter().enumerate() {
                if !l.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "loss[{h}][{z}] is {l}, expected finite"
                    )));
                }
                if let Some((a, b)) = loss_range {
                    if l < a || l > b {
                        return Err(Error::InvalidProblem(format!(
                            "loss[{h}][{z}] = {l} falls outside declared range [{a}, {b}]"
                        )));
                    }
                }
            }
        }
        check_pmf("prior", &prior)?;
        if prior.len() != hypotheses.len() {
            return Err(Error::InvalidProblem(format!(
                "prior has {} entries for {} hypotheses",
                prior.len(),
                hypotheses.len()
            )));
        }
        Ok(DiscreteProblem { outcomes, hypotheses, loss, prior, loss_range })
    }

    /// Loads a problem from its JSON file form.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_hypotheses(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn hypotheses(&self) -> &[String] {
        &self.hypotheses
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn loss(&self, hypothesis: usize, outcome: usize) -> f64 {
        self.loss[hypothesis][outcome]
    }

    pub fn loss_range(&self) -> Option<(f64, f64)> {
        self.loss_range
    }

    /// Population risk of every hypothesis: an exact sum over outcomes.
    pub fn pop_risks(&self) -> Vec<f64> {
        self.loss
            .iter()
            .map(|row| row.iter().zip(&self.outcomes).map(|(&l, o)| l * o.prob).sum())
            .collect()
    }

    /// Population second moment of the loss for every hypothesis.
    pub fn pop_second_moments(&self) -> Vec<f64> {
        self.loss
            .iter()
            .map(|row| row.iter().zip(&self.outcomes).map(|(&l, o)| l * l * o.prob).sum())
            .collect()
    }

    /// Empirical risk of every hypothesis given outcome counts.
    ///
    /// `counts[z]` is how often outcome `z` appeared; `n` is the sample size
    /// (kept separate so prefix evaluations can reuse one counts buffer).
    pub fn emp_risks_from_counts(&self, counts: &[u64], n: u64) -> Vec<f64> {
        debug_assert_eq!(counts.len(), self.outcomes.len());
        debug_assert!(n > 0);
        let nf = n as f64;
        self.loss
            .iter()
            .map(|row| {
                row.iter().zip(counts).map(|(&l, &c)| l * c as f64).sum::<f64>() / nf
            })
            .collect()
    }

    /// Empirical second moment of the loss for every hypothesis.
    pub fn emp_second_moments_from_counts(&self, counts: &[u64], n: u64) -> Vec<f64> {
        debug_assert_eq!(counts.len(), self.outcomes.len());
        let nf = n as f64;
        self.loss
            .iter()
            .map(|row| {
                row.iter().zip(counts).map(|(&l, &c)| l * l * c as f64).sum::<f64>() / nf
            })
            .collect()
    }

    /// Tallies a sample of outcome indices into per-outcome counts.
    pub fn count_outcomes(&self, sample: &[usize]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.outcomes.len()];
        for &z in sample {
            if z >= self.outcomes.len() {
                return Err(Error::InvalidProblem(format!(
                    "sample refers to outcome {z}, but the problem has {} outcomes",
                    self.outcomes.len()
                )));
            }
            counts[z] += 1;
        }
        Ok(counts)
    }
}

/// How a posterior over hypotheses is produced from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum PosteriorRule {
    /// Gibbs reweighting of the prior, `P(w) ∝ Q(w) exp(-λ r̂(w))`.
    ///
    /// With `n_scaled` set, λ is multiplied by the sample size first, which
    /// matches the convention where the exponent is `n λ' r̂`. The default
    /// applies λ to the empirical risk directly.
    Gibbs {
        lambda: f64,
        #[serde(default)]
        n_scaled: bool,
    },
    /// A data-independent posterior given explicitly.
    FixedPosterior { pmf: Vec<f64> },
    /// Softmax of negative empirical risk, `P(w) ∝ exp(-r̂(w)/temperature)`.
    /// Ignores the prior; the prior must then have full support for the
    /// KL term to stay finite.
    ErmSoftmax { temperature: f64 },
}

/// Applies a posterior rule to per-hypothesis empirical risks.
pub fn apply_rule(
    problem: &DiscreteProblem,
    rule: &PosteriorRule,
    emp_risks: &[f64],
    n: u64,
) -> Result<Vec<f64>> {
    match rule {
        PosteriorRule::Gibbs { lambda, n_scaled } => {
            if !(lambda.is_finite() && *lambda >= 0.0) {
                return Err(Error::Domain(format!(
                    "gibbs lambda is {lambda}, expected a finite value >= 0"
                )));
            }
            let eff = if *n_scaled { lambda * n as f64 } else { *lambda };
            Ok(gibbs_weights(problem.prior(), emp_risks, eff))
        }
        PosteriorRule::FixedPosterior { pmf } => {
            check_pmf("posterior", pmf)?;
            if pmf.len() != problem.n_hypotheses() {
                return Err(Error::InvalidProblem(format!(
                    "fixed posterior has {} entries for {} hypotheses",
                    pmf.len(),
                    problem.n_hypotheses()
                )));
            }
            Ok(pmf.clone())
        }
        PosteriorRule::ErmSoftmax { temperature } => {
            if !(temperature.is_finite() && *temperature > 0.0) {
                return Err(Error::Domain(format!(
                    "softmax temperature is {temperature}, expected a finite value > 0"
                )));
            }
            // Uniform log-prior: softmax over -r̂/T.
            let uniform = vec![1.0; emp_risks.len()];
            Ok(gibbs_weights(&uniform, emp_risks, 1.0 / temperature))
        }
    }
}

/// Gibbs posterior over a finite class, computed in log space.
///
/// `P(w) ∝ Q(w) exp(-λ r̂(w))`. Zero-mass prior entries stay at zero. λ = 0
/// returns the prior; large λ concentrates on empirical risk minimizers.
pub fn gibbs_posterior(
    problem: &DiscreteProblem,
    sample: &[usize],
    lambda: f64,
) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidProblem("sample is empty".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "gibbs lambda is {lambda}, expected a finite value >= 0"
        )));
    }
    let counts = problem.count_outcomes(sample)?;
    let emp = problem.emp_risks_from_counts(&counts, sample.len() as u64);
    Ok(gibbs_weights(problem.prior(), &emp, lambda))
}

pub(crate) fn gibbs_weights(prior: &[f64], emp_risks: &[f64], lambda: f64) -> Vec<f64> {
    // ln w = ln q - λ r̂; zero prior mass gives -inf and survives as exact zero.
    let log_w: Vec<f64> = prior
        .iter()
        .zip(emp_risks)
        .map(|(&q, &r)| q.ln() - lambda * r)
        .collect();
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_w.iter().map(|&lw| (lw - m).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|w| w / z).collect()
}

/// Exact population-level quantities of a posterior on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactQuantities {
    /// Posterior-average population risk.
    pub pop_risk: f64,
    /// Posterior-average empirical risk.
    pub emp_risk: f64,
    /// KL divergence of the posterior from the prior, in nats.
    pub kl: f64,
    /// Posterior average of the empirical second moment of the loss.
    pub second_moment_empirical: f64,
    /// Posterior average of the population second moment of the loss.
    pub second_moment_population: f64,
}

impl ExactQuantities {
    /// The variance proxy `(1/n) Σ_i E[ℓ(W,Z_i)² + 2 ℓ(W,Z')² + 1]`, which
    /// collapses to `empirical + 2 population + 1` for an i.i.d. sample.
    pub fn sigma2_n(&self) -> f64 {
        self.second_moment_empirical + 2.0 * self.second_moment_population + 1.0
    }

    pub fn kl_nats(&self) -> NatsValue {
        NatsValue::new(self.kl).expect("kl is finite and non-negative by construction")
    }
}

/// Computes exact risks, KL, and second moments for a posterior.
///
/// Errors when the posterior puts mass where the prior has none (the KL
/// would be infinite) or when dimensions disagree.
pub fn exact_quantities(
    problem: &DiscreteProblem,
    sample: &[usize],
    posterior: &[f64],
) -> Result<ExactQuantities> {
    let counts = problem.count_outcomes(sample)?;
    exact_quantities_from_counts(problem, &counts, sample.len() as u64, posterior)
}

/// Same as [`exact_quantities`] but from pre-tallied outcome counts.
pub fn exact_quantities_from_counts(
    problem: &DiscreteProblem,
    counts: &[u64],
    n: u64,
    posterior: &[f64],
) -> Result<ExactQuantities> {
    if n == 0 {
        return Err(Error::InvalidProblem("sample is empty".into()));
    }
    check_pmf("posterior", posterior)?;
    if posterior.len() != problem.n_hypotheses() {
        return Err(Error::InvalidProblem(format!(
            "posterior has {} entries for {} hypotheses",
            posterior.len(),
            problem.n_hypotheses()
        )));
    }
    let prior = problem.prior();
    let mut kl = 0.0;
    for (h, (&p, &q)) in posterior.iter().zip(prior).enumerate() {
        if p == 0.0 {
            continue; // 0 ln 0 = 0
        }
        if q == 0.0 {
            return Err(Error::Domain(format!(
                "posterior puts mass {p} on hypothesis {h} where the prior has none"
            )));
        }
        kl += p * (p / q).ln();
    }
    // Tiny negative KL can arise from rounding when posterior == prior.
    let kl = kl.max(0.0);

    let emp = problem.emp_risks_from_counts(counts, n);
    let pop = problem.pop_risks();
    let emp2 = problem.emp_second_moments_from_counts(counts, n);
    let pop2 = problem.pop_second_moments();
    let avg = |vals: &[f64]| -> f64 {
        posterior.iter().zip(vals).map(|(&p, &v)| p * v).sum()
    };
    Ok(ExactQuantities {
        pop_risk: avg(&pop),
        emp_risk: avg(&emp),
        kl,
        second_moment_empirical: avg(&emp2),
        second_moment_population: avg(&pop2),
    })
}

/// Draws `n` i.i.d. outcome indices with a deterministic generator.
///
/// The same `(problem, n, seed)` triple always yields the same dataset,
/// independent of platform and of any surrounding parallelism.
pub fn draw_dataset(problem: &DiscreteProblem, n: u64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_with_rng(problem, n, &mut rng)
}

/// Deterministic per-trial generator: one stream per trial index, so trial
/// datasets never depend on execution order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

pub(crate) fn draw_with_rng(problem: &DiscreteProblem, n: u64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let cum: Vec<f64> = problem
        .outcomes
        .iter()
        .scan(0.0, |acc, o| {
            *acc += o.prob;
            Some(*acc)
        })
        .collect();
    let last = problem.outcomes.len() - 1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cum.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}
