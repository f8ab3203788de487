//! Parameter-free certificates for losses with general tail behaviors:
//! the Chernoff-style bound and its cut-off, no-cut-off, linearized, and
//! log-log variants, plus second-moment, martingale, and
//! randomized-subsample bounds.
//!
//! Each evaluator combines a [`BoundContext`] with a tail description and
//! returns a [`Certificate`] whose params record the exact confidence
//! budget (`budget_nats`) fed to the conjugate inverse. Values are not
//! clamped: general losses have no universal range. When an event cut-off
//! fails, the certificate falls back to the caller-supplied essential
//! supremum and is informative only if that supremum is known.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounded::{BoundContext, BoundId, Certificate};
use crate::error::{Error, Result};
use crate::tails::TailFamily;

/// Caller-supplied knowledge of the essential supremum of the
/// posterior-averaged risk, used on the complement of event cut-offs.
/// The default is unknown, which surfaces as an uninformative infinite
/// certificate rather than a fabricated constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssSupInfo {
    pub value: f64,
    pub known: bool,
}

impl EssSupInfo {
    pub fn known(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!(
                "essential supremum must be non-negative or infinite, got {value}"
            )));
        }
        Ok(EssSupInfo { value, known: true })
    }

    #[must_use]
    pub fn unknown() -> Self {
        EssSupInfo { value: f64::INFINITY, known: false }
    }
}

impl Default for EssSupInfo {
    fn default() -> Self {
        Self::unknown()
    }
}

/// Context for the second-moment bound: the common quadruple plus the
/// aggregate sigma2_n = (1/n) sum of [empirical second moment + twice the
/// population second moment + 1] per sample, hence always at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentContext {
    ctx: BoundContext,
    sigma2_n: f64,
}

impl SecondMomentContext {
    pub fn new(ctx: BoundContext, sigma2_n: f64) -> Result<Self> {
        if !(sigma2_n >= 1.0) || !sigma2_n.is_finite() {
            return Err(Error::Domain(format!(
                "sigma2_n aggregates a +1 per term and must be finite and >= 1, got {sigma2_n}"
            )));
        }
        Ok(SecondMomentContext { ctx, sigma2_n })
    }

    #[must_use]
    pub fn ctx(&self) -> &BoundContext {
        &self.ctx
    }

    #[must_use]
    pub fn sigma2_n(&self) -> f64 {
        self.sigma2_n
    }
}

/// Context for the martingale bound: sample count, confidence, relative
/// entropy, and the two variance processes (empirical quadratic variation
/// and predictable quadratic variation, both posterior-averaged).
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleContext {
    n: u64,
    log_inv_beta: f64,
    kl: crate::specfun::NatsValue,
    var_empirical: f64,
    var_predictable: f64,
}

impl MartingaleContext {
    pub fn new(
        n: u64,
        beta: f64,
        kl: crate::specfun::NatsValue,
        var_empirical: f64,
        var_predictable: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("sample count n must be >= 1".into()));
        }
        if beta.is_nan() || beta <= 0.0 || beta >= 1.0 {
            return Err(Error::Domain(format!("beta must lie in (0,1), got {beta}")));
        }
        for (name, v) in [("var_empirical", var_empirical), ("var_predictable", var_predictable)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(MartingaleContext {
            n,
            log_inv_beta: -beta.ln(),
            kl,
            var_empirical,
            var_predictable,
        })
    }

    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[must_use]
    pub fn kl(&self) -> crate::specfun::NatsValue {
        self.kl
    }

    /// The combined variance process [M]_n + 2 <M>_n + 1.
    #[must_use]
    pub fn v_total(&self) -> f64 {
        self.var_empirical + 2.0 * self.var_predictable + 1.0
    }
}

/// ln of the union-bound constant 2 e n (n+1)^2 ln(en), assembled in
/// log-space so it never overflows.
#[must_use]
pub fn ln_xi_prime(n: u64) -> f64 {
    let n = n as f64;
    std::f64::consts::LN_2 + 1.0 + n.ln() + 2.0 * (n + 1.0).ln() + (1.0 + n.ln()).ln()
}

/// Cut-off preset for d-dimensional parametric posteriors: ceil(ln(d n)).
#[must_use]
pub fn k_max_parametric(d: u64, n: u64) -> u64 {
    ((d as f64 * n as f64).ln().ceil()).max(1.0) as u64
}

/// Cut-off preset with an extra scale p (e.g. parameter count times
/// precision levels): ceil(ln(d p n)).
#[must_use]
pub fn k_max_parametric_scaled(d: u64, p: u64, n: u64) -> u64 {
    ((d as f64 * p as f64 * n as f64).ln().ceil()).max(1.0) as u64
}

fn general_certificate(
    ctx: &BoundContext,
    bound_id: BoundId,
    value: f64,
    informative: bool,
    params: BTreeMap<String, f64>,
) -> Certificate {
    Certificate {
        value,
        bound_id,
        params,
        informative,
        beta: ctx.beta(),
        n: ctx.n(),
    }
}

/// The parameterized building block: emp_risk + (C + psi(lambda)) / lambda
/// with C = (kl + ln(1/beta)) / n. The parameter must be fixed before the
/// data; optimizing it after the fact voids the guarantee, which is what
/// the parameter-free variants below exist to avoid.
pub fn cgf_fixed_lambda(
    ctx: &BoundContext,
    family: &TailFamily,
    lambda: f64,
) -> Result<Certificate> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let psi = family.psi(lambda)?;
    let c = ctx.confidence_term_plain();
    let value = ctx.emp_risk().value() + (c + psi) / lambda;
    let mut params = BTreeMap::new();
    params.insert("lambda".into(), lambda);
    params.insert("budget_nats".into(), c);
    Ok(general_certificate(ctx, BoundId::CgfFixedLambda, value, true, params))
}

/// Chernoff-style parameter-free bound with the default cut-off k_max = n:
/// on the event kl <= n the value is
/// emp_risk + psi*^{-1}((kl + ln(e n / beta)) / n), otherwise the essential
/// supremum.
#[must_use]
pub fn chernoff_analogue(
    ctx: &BoundContext,
    family: &TailFamily,
    esssup: EssSupInfo,
) -> Certificate {
    chernoff_analogue_with_cutoff(ctx, family, esssup, ctx.n())
}

/// Chernoff-style bound with an explicit cut-off: the event is kl <= k_max
/// and the budget is (kl + ln(e k_max / beta)) / n. Larger k_max widens the
/// event at a logarithmic price in the budget.
#[must_use]
pub fn chernoff_analogue_with_cutoff(
    ctx: &BoundContext,
    family: &TailFamily,
    esssup: EssSupInfo,
    k_max: u64,
) -> Certificate {
    assert!(k_max >= 1, "cut-off k_max must be at least 1");
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let budget = (kl + 1.0 + (k_max as f64).ln() + ctx.log_inv_beta()) / n;
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    params.insert("k_max".into(), k_max as f64);
    if kl <= k_max as f64 {
        let value = ctx.emp_risk().value()
            + family.psi_star_inverse(crate::specfun::NatsValue::clamped(budget));
        general_certificate(ctx, BoundId::Chernoff, value, true, params)
    } else {
        params.insert("esssup_branch".into(), 1.0);
        general_certificate(ctx, BoundId::Chernoff, esssup.value, esssup.known, params)
    }
}

/// Family-specialized Chernoff menu. Bounded ranges get the lenient
/// double-sample budget (kl + ln(e n / beta)) / (2n) with no essential
/// supremum fallback (the formula already exceeds the range when the
/// dependence is that large); subexponential losses get an explicit event
/// split between the subgaussian branch and the relaxed linear branch
/// (c+1) * budget at threshold kl <= n sigma2/(2c) - ln(e/beta); the other
/// families reduce to [`chernoff_analogue`].
#[must_use]
pub fn chernoff_tail_menu(
    ctx: &BoundContext,
    family: &TailFamily,
    esssup: EssSupInfo,
) -> Certificate {
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    match family {
        TailFamily::BoundedRange { a, b } => {
            let budget = (kl + 1.0 + n.ln() + ctx.log_inv_beta()) / (2.0 * n);
            let value = ctx.emp_risk().value() + (b - a) * budget.sqrt();
            let mut params = BTreeMap::new();
            params.insert("budget_nats".into(), budget);
            params.insert("k_max".into(), 2.0 * n);
            general_certificate(ctx, BoundId::Chernoff, value, true, params)
        }
        TailFamily::SubExponential { sigma2, c } => {
            let budget = (kl + 1.0 + n.ln() + ctx.log_inv_beta()) / n;
            let mut params = BTreeMap::new();
            params.insert("budget_nats".into(), budget);
            params.insert("k_max".into(), n);
            if kl > n {
                params.insert("esssup_branch".into(), 1.0);
                return general_certificate(
                    ctx,
                    BoundId::Chernoff,
                    esssup.value,
                    esssup.known,
                    params,
                );
            }
            let threshold = n * sigma2 / (2.0 * c) - (1.0 + ctx.log_inv_beta());
            let on_f = kl <= threshold;
            params.insert("event_f".into(), if on_f { 1.0 } else { 0.0 });
            let excess =
                if on_f { (2.0 * sigma2 * budget).sqrt() } else { (c + 1.0) * budget };
            let value = ctx.emp_risk().value() + excess;
            general_certificate(ctx, BoundId::Chernoff, value, true, params)
        }
        _ => chernoff_analogue(ctx, family, esssup),
    }
}

/// Variant with no event cut-off at all: the dependence enters the
/// union-bound constant instead, giving budget
/// (kl + ln(e pi^2 (kl+1)^2 / (6 beta))) / n and never consulting the
/// essential supremum.
#[must_use]
pub fn chernoff_no_cutoff(ctx: &BoundContext, family: &TailFamily) -> Certificate {
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let ln_pi2_6 = (std::f64::consts::PI * std::f64::consts::PI / 6.0).ln();
    let budget = (kl + 1.0 + ln_pi2_6 + 2.0 * (kl + 1.0).ln() + ctx.log_inv_beta()) / n;
    let value =
        ctx.emp_risk().value() + family.psi_star_inverse(crate::specfun::NatsValue::clamped(budget));
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    general_certificate(ctx, BoundId::ChernoffNoCutoff, value, true, params)
}

/// Linearized variant: budget (1.1 kl + ln(10 e pi^2 / beta)) / n, a
/// single-slope envelope of the no-cut-off budget that trades a 10% premium
/// on the dependence for a flat constant.
#[must_use]
pub fn chernoff_linearized(ctx: &BoundContext, family: &TailFamily) -> Certificate {
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let ln_const = (10.0 * std::f64::consts::E * std::f64::consts::PI * std::f64::consts::PI).ln();
    let budget = (1.1 * kl + ln_const + ctx.log_inv_beta()) / n;
    let value =
        ctx.emp_risk().value() + family.psi_star_inverse(crate::specfun::NatsValue::clamped(budget));
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    general_certificate(ctx, BoundId::ChernoffLinearized, value, true, params)
}

/// Log-log union-bound variant: on the event kl <= n the budget is
/// (e max(kl, 1) + ln((2 + ln n) / beta)) / n. The union-bound cost drops
/// from ln(n) to ln(2 + ln n) at the price of a factor e on the dependence,
/// so it wins only when kl grows slower than logarithmically in n.
#[must_use]
pub fn chernoff_loglog(
    ctx: &BoundContext,
    family: &TailFamily,
    esssup: EssSupInfo,
) -> Certificate {
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let budget =
        (std::f64::consts::E * kl.max(1.0) + (2.0 + n.ln()).ln() + ctx.log_inv_beta()) / n;
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    if kl <= n {
        let value = ctx.emp_risk().value()
            + family.psi_star_inverse(crate::specfun::NatsValue::clamped(budget));
        general_certificate(ctx, BoundId::ChernoffLoglog, value, true, params)
    } else {
        params.insert("esssup_branch".into(), 1.0);
        general_certificate(ctx, BoundId::ChernoffLoglog, esssup.value, esssup.known, params)
    }
}

/// Second-moment bound: needs only sigma2_n rather than a full CGF
/// envelope. On the event sigma2_n * kl <= n the value is
/// emp_risk + (2/sqrt(6)) sqrt(sigma2_n (kl + ln(xi'(n)/beta)) / n) with
/// xi'(n) = 2 e n (n+1)^2 ln(en).
#[must_use]
pub fn second_moment_bound(smc: &SecondMomentContext, esssup: EssSupInfo) -> Certificate {
    let ctx = smc.ctx();
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let budget = (kl + ln_xi_prime(ctx.n()) + ctx.log_inv_beta()) / n;
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    params.insert("sigma2_n".into(), smc.sigma2_n());
    if smc.sigma2_n() * kl <= n {
        let value =
            ctx.emp_risk().value() + 2.0 / 6.0f64.sqrt() * (smc.sigma2_n() * budget).sqrt();
        general_certificate(ctx, BoundId::SecondMoment, value, true, params)
    } else {
        params.insert("esssup_branch".into(), 1.0);
        general_certificate(ctx, BoundId::SecondMoment, esssup.value, esssup.known, params)
    }
}

/// Martingale bound on |E^S M_n(W)| (unnormalized): with
/// V = [M]_n + 2 <M>_n + 1, on the event V * kl <= n^2 the value is
/// (2/sqrt(6)) sqrt(V (kl + ln(xi'(n)/beta))). Dividing by n under the
/// i.i.d. specialization M_n = n (risk - emp_risk) recovers the
/// second-moment display.
#[must_use]
pub fn martingale_bound(mc: &MartingaleContext, esssup: EssSupInfo) -> Certificate {
    let kl = mc.kl.value();
    let n = mc.n as f64;
    let v = mc.v_total();
    let budget_nats = kl + ln_xi_prime(mc.n) + mc.log_inv_beta;
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget_nats);
    params.insert("v_total".into(), v);
    let (value, informative) = if v * kl <= n * n {
        (2.0 / 6.0f64.sqrt() * (v * budget_nats).sqrt(), true)
    } else {
        params.insert("esssup_branch".into(), 1.0);
        (esssup.value, esssup.known)
    };
    Certificate {
        value,
        bound_id: BoundId::Martingale,
        params,
        informative,
        beta: (-mc.log_inv_beta).exp(),
        n: mc.n,
    }
}

/// Randomized-subsample bound for losses in [a, b], against a
/// supersample-conditioned prior: emp_risk plus
/// sqrt(2 (b-a)^2 (kl + ln(e n / beta)) / n) plus the ghost-sample tail
/// sqrt((b-a)^2 ln(4/beta) / (2n)).
pub fn randomized_subsample_bound(ctx: &BoundContext, a: f64, b: f64) -> Result<Certificate> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("range must satisfy a < b, got [{a}, {b}]")));
    }
    let kl = ctx.kl().value();
    let n = ctx.n() as f64;
    let range2 = (b - a) * (b - a);
    let budget = (kl + 1.0 + n.ln() + ctx.log_inv_beta()) / n;
    let tail = range2 * (4.0f64.ln() + ctx.log_inv_beta()) / (2.0 * n);
    let value = ctx.emp_risk().value() + (2.0 * range2 * budget).sqrt() + tail.sqrt();
    let mut params = BTreeMap::new();
    params.insert("budget_nats".into(), budget);
    params.insert("tail_term".into(), tail.sqrt());
    Ok(general_certificate(ctx, BoundId::RandomizedSubsample, value, true, params))
}
