//! Anytime validity: spend a total confidence budget across all sample
//! sizes so the certificates hold simultaneously for every n, either by a
//! per-n budget schedule (union bound) or, for the binary-KL family, by a
//! direct constant substitution that needs no schedule at all.

use serde::{Deserialize, Serialize};

use crate::bounded::{BoundContext, Certificate, ConfidenceConstant};
use crate::error::{Error, Result};

/// Normalizer Z = sum over n >= 1 of 1/(n ln^2(6n)).
///
/// The raw weights 1/(n ln^2(6n)) sum to a finite constant that is not 1,
/// so the schedule divides by this Z to guarantee the betas sum to at most
/// the total. Computed as the truncated sum to 10^8 (0.710753141212582)
/// plus the integral tail bound 1/ln(6e8) (0.04947448152984049); the tail
/// bound overshoots the true remainder, so this constant is an upper bound
/// on Z and the guarantee errs on the safe side.
pub const KK_NORMALIZER: f64 = 0.760_227_622_742_422_5;

/// How the per-n confidence budget decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleRule {
    /// beta_n = 6 beta / (pi^2 n^2); sums to exactly beta.
    Basel,
    /// beta_n = beta / (Z n ln^2(6n)); heavier early spending than Basel,
    /// paying only log-log in the budget.
    KaufmannKoolen,
    /// beta_n = weights[n-1] * beta for an explicit weight table with
    /// non-negative entries summing to at most 1.
    Custom(Vec<f64>),
}

/// A confidence-budget schedule: a decay rule plus the total budget it
/// spends across all n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    rule: ScheduleRule,
    total_beta: f64,
}

impl BetaSchedule {
    pub fn basel(total_beta: f64) -> Result<Self> {
        Self::with_rule(ScheduleRule::Basel, total_beta)
    }

    pub fn kaufmann_koolen(total_beta: f64) -> Result<Self> {
        Self::with_rule(ScheduleRule::KaufmannKoolen, total_beta)
    }

    pub fn custom(weights: Vec<f64>, total_beta: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSchedule("custom weight table is empty".into()));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "weight {w} at index {i} must be finite and non-negative"
                )));
            }
            sum += w;
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidSchedule(format!(
                "weights sum to {sum}, exceeding the total budget"
            )));
        }
        Self::with_rule(ScheduleRule::Custom(weights), total_beta)
    }

    fn with_rule(rule: ScheduleRule, total_beta: f64) -> Result<Self> {
        if total_beta.is_nan() || total_beta <= 0.0 || total_beta >= 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "total_beta must lie in (0,1), got {total_beta}"
            )));
        }
        Ok(BetaSchedule { rule, total_beta })
    }

    #[must_use]
    pub fn total_beta(&self) -> f64 {
        self.total_beta
    }

    #[must_use]
    pub fn rule(&self) -> &ScheduleRule {
        &self.rule
    }

    /// The confidence spent at sample size n.
    pub fn beta_at(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("schedules start at n = 1".into()));
        }
        match &self.rule {
            ScheduleRule::Basel => {
                let nf = n as f64;
                Ok(6.0 * self.total_beta / (std::f64::consts::PI * std::f64::consts::PI * nf * nf))
            }
            ScheduleRule::KaufmannKoolen => {
                let nf = n as f64;
                let ln6n = (6.0 * nf).ln();
                Ok(self.total_beta / (KK_NORMALIZER * nf * ln6n * ln6n))
            }
            ScheduleRule::Custom(weights) => weights
                .get((n - 1) as usize)
                .map(|w| w * self.total_beta)
                .ok_or_else(|| {
                    Error::InvalidSchedule(format!(
                        "custom weight table has {} entries; n = {n} is beyond it",
                        weights.len()
                    ))
                }),
        }
    }
}

/// Evaluates a fixed-n bound at every n up to the horizon, spending the
/// schedule's per-n budget, so the returned certificates hold jointly with
/// probability at least 1 - total_beta. For budget-style bounds the cost
/// over the fixed-n certificate at level total_beta is the added
/// ln(total_beta / beta_n) nats (e.g. ln(pi^2 n^2 / 6) under Basel).
pub fn make_anytime<F>(
    bound: F,
    schedule: &BetaSchedule,
    horizon: u64,
) -> Result<Vec<Certificate>>
where
    F: Fn(u64, f64) -> Result<Certificate>,
{
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let mut certificates = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        let beta_n = schedule.beta_at(n)?;
        let cert = bound(n, beta_n)
            .map_err(|e| Error::Domain(format!("anytime evaluation failed at n = {n}: {e}")))?;
        certificates.push(cert);
    }
    Ok(certificates)
}

/// Direct anytime conversion for the binary-KL bound family: replaces the
/// context's confidence constant with sqrt(pi (n+1)), under which every
/// bound derived from the change-of-measure argument holds simultaneously
/// for all n with no schedule and no union cost. Costs
/// ln(sqrt(pi(n+1)) / xi(n)) extra nats over the fixed-n constant, about
/// 0.18 at n = 1000.
#[must_use]
pub fn seeger_anytime_substitution(ctx: &BoundContext) -> BoundContext {
    ctx.clone().with_constant(ConfidenceConstant::SqrtPiNPlus1)
}
