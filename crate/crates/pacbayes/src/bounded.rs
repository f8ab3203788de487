//! Certificate evaluators for losses with range [0, 1]: McAllester,
//! Seeger-Langford, Catoni (fixed and uniform in its parameter), the
//! fast-rate and mixed-rate families, and the Thiemann and Rivasplata
//! baselines they dominate, plus the abstract dominance comparison
//! functions.
//!
//! Every evaluator consumes a [`BoundContext`] and produces a
//! [`Certificate`]. Throughout, the confidence budget is
//! C_xi = (kl + ln(constant(n)/beta)) / n with the context's confidence
//! constant (Maurer's xi(n) bound by default), and C = (kl + ln(1/beta)) / n
//! without it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, NatsValue, Probability, XiMode};

/// The multiplicative constant inside the confidence term ln(constant/beta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfidenceConstant {
    /// Closed-form upper bound on Maurer's xi(n); the default.
    XiBound,
    /// Maurer's exact binomial sum (falls back to the bound above n = 10^4).
    XiExact,
    /// sqrt(pi (n+1)), which makes every Seeger-Langford-derived bound
    /// anytime-valid without a union-bound schedule.
    SqrtPiNPlus1,
    /// A caller-supplied constant, must be positive. A value of 1 removes
    /// the constant entirely.
    Fixed(f64),
}

impl ConfidenceConstant {
    /// Evaluates the constant at sample size n. The flag is true when exact
    /// xi mode fell back to its bound.
    #[must_use]
    pub fn evaluate(self, n: u64) -> (f64, bool) {
        match self {
            ConfidenceConstant::XiBound => (specfun::xi_maurer(n, XiMode::Bound).value, false),
            ConfidenceConstant::XiExact => {
                let xi = specfun::xi_maurer(n, XiMode::Exact);
                (xi.value, xi.fell_back)
            }
            ConfidenceConstant::SqrtPiNPlus1 => {
                ((std::f64::consts::PI * (n as f64 + 1.0)).sqrt(), false)
            }
            ConfidenceConstant::Fixed(k) => {
                debug_assert!(k > 0.0, "fixed confidence constant must be positive");
                (k, false)
            }
        }
    }
}

/// The quadruple every bound consumes: sample count, confidence level,
/// posterior-prior relative entropy, and posterior-averaged empirical risk.
/// The confidence level is held as ln(1/beta) so that extreme confidences
/// do not underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundContext {
    n: u64,
    log_inv_beta: f64,
    kl: NatsValue,
    emp_risk: Probability,
    constant: ConfidenceConstant,
}

impl BoundContext {
    /// Builds a context from a confidence level beta in (0, 1).
    pub fn new(n: u64, beta: f64, kl: NatsValue, emp_risk: Probability) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 || beta >= 1.0 {
            return Err(Error::Domain(format!("beta must lie in (0,1), got {beta}")));
        }
        Self::with_log_inv_beta(n, -beta.ln(), kl, emp_risk)
    }

    /// Builds a context directly from ln(1/beta) > 0, for confidences too
    /// extreme to represent as beta itself.
    pub fn with_log_inv_beta(
        n: u64,
        log_inv_beta: f64,
        kl: NatsValue,
        emp_risk: Probability,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("sample count n must be >= 1".into()));
        }
        if !(log_inv_beta > 0.0) || log_inv_beta.is_infinite() {
            return Err(Error::Domain(format!(
                "ln(1/beta) must be positive and finite, got {log_inv_beta}"
            )));
        }
        Ok(BoundContext {
            n,
            log_inv_beta,
            kl,
            emp_risk,
            constant: ConfidenceConstant::XiBound,
        })
    }

    /// Replaces the confidence constant (xi bound by default).
    #[must_use]
    pub fn with_constant(mut self, constant: ConfidenceConstant) -> Self {
        self.constant = constant;
        self
    }

    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[must_use]
    pub fn beta(&self) -> f64 {
        (-self.log_inv_beta).exp()
    }

    #[must_use]
    pub fn log_inv_beta(&self) -> f64 {
        self.log_inv_beta
    }

    #[must_use]
    pub fn kl(&self) -> NatsValue {
        self.kl
    }

    #[must_use]
    pub fn emp_risk(&self) -> Probability {
        self.emp_risk
    }

    #[must_use]
    pub fn constant(&self) -> ConfidenceConstant {
        self.constant
    }

    /// ln(constant(n)) and whether exact xi mode fell back to its bound.
    #[must_use]
    pub fn ln_constant(&self) -> (f64, bool) {
        let (value, fell_back) = self.constant.evaluate(self.n);
        (value.ln(), fell_back)
    }

    /// The dependence-confidence term with the context's constant:
    /// (kl + ln(constant(n)) + ln(1/beta)) / n.
    #[must_use]
    pub fn confidence_term(&self) -> f64 {
        (self.kl.value() + self.ln_constant().0 + self.log_inv_beta) / self.n as f64
    }

    /// The dependence-confidence term without any constant:
    /// (kl + ln(1/beta)) / n.
    #[must_use]
    pub fn confidence_term_plain(&self) -> f64 {
        (self.kl.value() + self.log_inv_beta) / self.n as f64
    }
}

/// Identifies which bound produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundId {
    Mcallester,
    SeegerLangford,
    CatoniFixed,
    CatoniUniform,
    FastRateStrong,
    FastRateSimple,
    MixedRate,
    Thiemann,
    Rivasplata,
    CgfFixedLambda,
    Chernoff,
    ChernoffNoCutoff,
    ChernoffLinearized,
    ChernoffLoglog,
    SecondMoment,
    Martingale,
    RandomizedSubsample,
}

impl BoundId {
    /// The kebab-case name used in serialized output and CLI flags.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            BoundId::Mcallester => "mcallester",
            BoundId::SeegerLangford => "seeger-langford",
            BoundId::CatoniFixed => "catoni-fixed",
            BoundId::CatoniUniform => "catoni-uniform",
            BoundId::FastRateStrong => "fast-rate-strong",
            BoundId::FastRateSimple => "fast-rate-simple",
            BoundId::MixedRate => "mixed-rate",
            BoundId::Thiemann => "thiemann",
            BoundId::Rivasplata => "rivasplata",
            BoundId::CgfFixedLambda => "cgf-fixed-lambda",
            BoundId::Chernoff => "chernoff",
            BoundId::ChernoffNoCutoff => "chernoff-no-cutoff",
            BoundId::ChernoffLinearized => "chernoff-linearized",
            BoundId::ChernoffLoglog => "chernoff-loglog",
            BoundId::SecondMoment => "second-moment",
            BoundId::Martingale => "martingale",
            BoundId::RandomizedSubsample => "randomized-subsample",
        }
    }
}

impl std::fmt::Display for BoundId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One bound evaluation: the risk upper bound, which bound produced it, the
/// optimized parameters exactly as used, and whether the result is
/// informative (below 1 for [0,1] losses, cut-off event satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Infinite when no finite bound exists (unknown essential supremum on
    /// a failed cut-off event); crosses JSON as null in that case.
    #[serde(with = "inf_as_null")]
    pub value: f64,
    pub bound_id: BoundId,
    pub params: BTreeMap<String, f64>,
    pub informative: bool,
    pub beta: f64,
    pub n: u64,
}

/// JSON has no infinity literal, so an unbounded value crosses the wire as
/// null and parses back to +infinity, keeping print/parse a round trip.
/// Certificates never carry negative or NaN values.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Builds a [0,1]-loss certificate: clamps the value into [0,1], retains the
/// pre-clamp value in params, and marks it uninformative when it reaches 1.
fn clamped_certificate(
    ctx: &BoundContext,
    bound_id: BoundId,
    pre_clamp: f64,
    mut params: BTreeMap<String, f64>,
) -> Certificate {
    params.insert("pre_clamp".into(), pre_clamp);
    if ctx.ln_constant().1 {
        params.insert("xi_fallback".into(), 1.0);
    }
    Certificate {
        value: pre_clamp.clamp(0.0, 1.0),
        bound_id,
        params,
        informative: pre_clamp < 1.0,
        beta: ctx.beta(),
        n: ctx.n,
    }
}

/// Slow-rate bound: emp_risk + sqrt(C_xi / 2).
#[must_use]
pub fn mcallester(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    let pre = ctx.emp_risk.value() + (c_xi / 2.0).sqrt();
    clamped_certificate(ctx, BoundId::Mcallester, pre, params)
}

/// The binary-KL certificate: the largest q with d(emp_risk || q) <= C_xi.
#[must_use]
pub fn seeger_langford(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    let q = specfun::kl_inverse_upper(ctx.emp_risk, NatsValue::clamped(c_xi));
    clamped_certificate(ctx, BoundId::SeegerLangford, q.value(), params)
}

/// The Catoni objective (1 - e^{-lambda r / n - budget}) / (1 - e^{-lambda/n}),
/// evaluated cancellation-free via expm1.
fn catoni_objective(n: u64, r: f64, budget: f64, lambda: f64) -> f64 {
    let t = lambda / n as f64;
    (-t * r - budget).exp_m1() / (-t).exp_m1()
}

/// Fixed-parameter Catoni bound. By default the budget is
/// C = (kl + ln(1/beta)) / n; with `use_xi` it is C_xi instead, which makes
/// the value directly comparable with `catoni_uniform` at equal confidence
/// terms. The parameter must be fixed before seeing the data.
pub fn catoni_fixed(ctx: &BoundContext, lambda: f64, use_xi: bool) -> Result<Certificate> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "catoni_fixed requires a positive finite lambda, got {lambda}"
        )));
    }
    let budget = if use_xi { ctx.confidence_term() } else { ctx.confidence_term_plain() };
    let pre = catoni_objective(ctx.n, ctx.emp_risk.value(), budget, lambda);
    let mut params = BTreeMap::new();
    params.insert("lambda".into(), lambda);
    params.insert("confidence_term".into(), budget);
    params.insert("use_xi".into(), if use_xi { 1.0 } else { 0.0 });
    Ok(clamped_certificate(ctx, BoundId::CatoniFixed, pre, params))
}

/// Catoni bound holding uniformly over its parameter: the infimum of the
/// Catoni objective over lambda > 0 with budget C_xi, searched on a
/// log-spaced grid over [1e-3, 1e3 n] with golden-section refinement.
/// Outside that range the objective is within numerical noise of its
/// asymptotes for [0,1] losses. Equals `seeger_langford` up to optimizer
/// tolerance.
#[must_use]
pub fn catoni_uniform(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let n = ctx.n;
    let (lambda_star, pre) =
        specfun::minimize_scalar(|lam| catoni_objective(n, r, c_xi, lam), 1e-3, 1e3 * n as f64, 1e-6)
            .expect("catoni objective is finite for every positive lambda");
    let mut params = BTreeMap::new();
    params.insert("lambda_star".into(), lambda_star);
    params.insert("confidence_term".into(), c_xi);
    clamped_certificate(ctx, BoundId::CatoniUniform, pre, params)
}

/// kappa(c) = 1 - c(1 - ln c), the constant-offset of the strong fast-rate
/// objective; kappa(1) = 0 and kappa is positive on (0, 1).
fn kappa(c: f64) -> f64 {
    1.0 - c * (1.0 - c.ln())
}

/// The gamma-parameterized fast-rate objective
///
///   c gamma ln(gamma/(gamma-1)) r + c gamma c_xi + kappa(c) gamma.
///
/// At c = 1 it reduces exactly (kappa(1) = 0) to the simple fast-rate
/// objective gamma ln(gamma/(gamma-1)) r + gamma c_xi.
#[must_use]
pub fn fast_rate_objective(r: f64, c_xi: f64, c: f64, gamma: f64) -> f64 {
    // ln(gamma/(gamma-1)) without cancellation for large gamma.
    let ln_ratio = -(-1.0 / gamma).ln_1p();
    c * gamma * ln_ratio * r + c * gamma * c_xi + kappa(c) * gamma
}

/// Sentinel recorded for gamma when the realizable limit gamma -> 1+ is the
/// analytic optimum (empirical risk zero).
pub const GAMMA_SENTINEL: f64 = 1.0 + 1e-8;

/// The gamma minimizing the fast-rate objective at fixed c in (0, 1]:
/// gamma = 1 + 1/u where u solves u - ln(1+u) = A with
/// A = (c budget + kappa(c)) / (c r_hat), i.e.
/// gamma = 1 + [-1 - W_{-1}(-e^{-1-A})]^{-1} on the -1 branch.
///
/// For r_hat = 0 the objective decreases toward gamma -> 1+ and the
/// sentinel 1 + 1e-8 is returned. When e^{-1-A} underflows (A beyond ~700)
/// the same root is found by a Newton iteration on u - ln(1+u) = A, which
/// is the Lambert equation in the u parameterization.
pub fn optimal_gamma(r_hat: Probability, budget: f64, c: f64) -> Result<f64> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("budget must be positive and finite, got {budget}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must lie in (0,1], got {c}")));
    }
    let r = r_hat.value();
    if r == 0.0 {
        return Ok(GAMMA_SENTINEL);
    }
    let a = (c * budget + kappa(c)) / (c * r);
    let arg = -(-1.0 - a).exp();
    let u = if arg == 0.0 {
        // e^{-1-A} underflowed; solve u - ln(1+u) = A directly.
        let mut u = a + a.ln_1p();
        for _ in 0..8 {
            let f = u - u.ln_1p() - a;
            u -= f * (1.0 + u) / u;
        }
        u
    } else {
        -1.0 - specfun::lambert_w_m1(arg)?
    };
    Ok(1.0 + 1.0 / u)
}

/// Chatzigeorgiou's closed-form two-term approximation of `optimal_gamma`:
/// gamma ~ 1 + [sqrt(2A) + 5A/6]^{-1}. Exposed for comparison with the
/// exact Lambert route; they agree within 2% relative over moderate A.
pub fn chatzigeorgiou_gamma(r_hat: Probability, budget: f64, c: f64) -> Result<f64> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("budget must be positive and finite, got {budget}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must lie in (0,1], got {c}")));
    }
    let r = r_hat.value();
    if r == 0.0 {
        return Ok(GAMMA_SENTINEL);
    }
    let a = (c * budget + kappa(c)) / (c * r);
    Ok(1.0 + 1.0 / ((2.0 * a).sqrt() + 5.0 * a / 6.0))
}

/// Strong fast-rate bound: the infimum of `fast_rate_objective` over
/// gamma > 1 and c in (0, 1]. For each c the inner gamma is closed-form via
/// `optimal_gamma`; the outer c search runs a 512-point log grid on
/// (1e-6, 1] with golden-section refinement. Equals `seeger_langford` up to
/// optimizer tolerance.
///
/// In the realizable case the infimum is the gamma -> 1+ limit of
/// min_c { c C_xi + kappa(c) }, attained at c = e^{-C_xi} with value
/// 1 - e^{-C_xi}, and is returned in closed form.
#[must_use]
pub fn fast_rate_strong(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    if r == 0.0 {
        let c_star = (-c_xi).exp();
        let pre = -(-c_xi).exp_m1();
        params.insert("c_star".into(), c_star);
        params.insert("gamma_star".into(), GAMMA_SENTINEL);
        return clamped_certificate(ctx, BoundId::FastRateStrong, pre, params);
    }
    let inner = |c: f64| -> (f64, f64) {
        match optimal_gamma(ctx.emp_risk, c_xi, c) {
            Ok(gamma) => (fast_rate_objective(r, c_xi, c, gamma), gamma),
            Err(_) => (f64::INFINITY, f64::NAN),
        }
    };
    let (c_star, pre) =
        specfun::minimize_scalar_grid(|c| inner(c).0, 1e-6, 1.0, 1e-12, 512)
            .expect("fast-rate objective is finite on (0, 1]");
    let (_, gamma_star) = inner(c_star);
    params.insert("c_star".into(), c_star);
    params.insert("gamma_star".into(), gamma_star);
    clamped_certificate(ctx, BoundId::FastRateStrong, pre, params)
}

/// Simple fast-rate bound (the c = 1 member of the strong family):
/// inf over gamma > 1 of gamma ln(gamma/(gamma-1)) emp_risk + gamma C_xi,
/// evaluated exactly at the closed-form optimal gamma. In the realizable
/// case the infimum is the gamma -> 1+ limit C_xi itself, so the
/// certificate carries a multiplicative factor of one on the confidence
/// term, and the sentinel gamma is recorded.
#[must_use]
pub fn fast_rate_simple(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    if r == 0.0 {
        params.insert("gamma_star".into(), GAMMA_SENTINEL);
        return clamped_certificate(ctx, BoundId::FastRateSimple, c_xi, params);
    }
    if c_xi == 0.0 {
        // Degenerate zero-budget limit: the objective decreases to r as
        // gamma grows without bound; no finite gamma_star exists.
        return clamped_certificate(ctx, BoundId::FastRateSimple, r, params);
    }
    let gamma = optimal_gamma(ctx.emp_risk, c_xi, 1.0)
        .expect("positive budget and c = 1 are always in domain");
    let pre = fast_rate_objective(r, c_xi, 1.0, gamma);
    params.insert("gamma_star".into(), gamma);
    clamped_certificate(ctx, BoundId::FastRateSimple, pre, params)
}

/// Mixed-rate bound, closed form: emp_risk + C_xi + sqrt(2 emp_risk C_xi).
#[must_use]
pub fn mixed_rate(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    let pre = r + c_xi + (2.0 * r * c_xi).sqrt();
    clamped_certificate(ctx, BoundId::MixedRate, pre, params)
}

/// The Thiemann objective emp_risk/(1 - lambda/2) + C_xi/(lambda (1 - lambda/2))
/// on lambda in (0, 2).
#[must_use]
pub fn thiemann_objective(r: f64, c_xi: f64, lambda: f64) -> f64 {
    let half = 1.0 - lambda / 2.0;
    r / half + c_xi / (lambda * half)
}

/// Thiemann's fast-rate baseline: the infimum of `thiemann_objective` over
/// lambda in (0, 2), via grid-plus-golden-section search. The objective is
/// coercive at both ends whenever C_xi > 0, so the minimizer is interior.
#[must_use]
pub fn thiemann(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    if c_xi == 0.0 {
        // Zero-budget limit: inf over lambda of r/(1 - lambda/2) is r at
        // lambda -> 0+.
        return clamped_certificate(ctx, BoundId::Thiemann, r, params);
    }
    let (lambda_star, pre) =
        specfun::minimize_scalar(|lam| thiemann_objective(r, c_xi, lam), 1e-12, 2.0 - 1e-12, 1e-10)
            .expect("thiemann objective is finite on the interior of (0, 2)");
    params.insert("lambda_star".into(), lambda_star);
    clamped_certificate(ctx, BoundId::Thiemann, pre, params)
}

/// Rivasplata's mixed-rate baseline:
/// emp_risk + C_xi + sqrt(2 emp_risk C_xi + C_xi^2).
#[must_use]
pub fn rivasplata(ctx: &BoundContext) -> Certificate {
    let c_xi = ctx.confidence_term();
    let r = ctx.emp_risk.value();
    let mut params = BTreeMap::new();
    params.insert("confidence_term".into(), c_xi);
    let pre = r + c_xi + (2.0 * r * c_xi + c_xi * c_xi).sqrt();
    clamped_certificate(ctx, BoundId::Rivasplata, pre, params)
}

/// f_th(r, c) = inf over lambda in (0,2) of
/// r/(1 - lambda/2) + c/(lambda(1 - lambda/2)), in closed form: the
/// stationary point solves r lambda^2 + 2 c lambda - 2c = 0.
#[must_use]
pub fn f_th(r: f64, c: f64) -> f64 {
    debug_assert!(r >= 0.0 && c >= 0.0);
    if c == 0.0 {
        // Infimum r as lambda -> 0+.
        return r;
    }
    if r == 0.0 {
        // lambda* = 1 maximizes lambda(1 - lambda/2).
        return 2.0 * c;
    }
    let s = (c * c + 2.0 * r * c).sqrt();
    let lambda = 2.0 * c / (c + s);
    thiemann_objective(r, c, lambda)
}

/// f_fr(r, c) = inf over gamma > 2 of gamma ln(gamma/(gamma-1)) r + gamma c,
/// via the closed-form unconstrained minimizer clamped to the boundary
/// gamma = 2 (the objective is convex in gamma).
#[must_use]
pub fn f_fr(r: f64, c: f64) -> f64 {
    debug_assert!(r >= 0.0 && c >= 0.0);
    if c == 0.0 {
        // gamma ln(gamma/(gamma-1)) decreases to 1 as gamma grows.
        return r;
    }
    if r == 0.0 {
        return 2.0 * c;
    }
    let gamma = optimal_gamma(Probability::new_clamped(r), c, 1.0)
        .expect("positive budget")
        .max(2.0);
    fast_rate_objective(r, c, 1.0, gamma)
}

/// f_mr(r, c) = inf over gamma > 2 of (1/2)(2 gamma - 1)/(gamma - 1) r
/// + gamma c. The unconstrained minimizer is gamma = 1 + sqrt(r / (2c)),
/// interior exactly when r >= 2c, where the infimum is the mixed-rate
/// closed form r + c + sqrt(2 r c); otherwise the boundary gives
/// (3/2) r + 2 c.
#[must_use]
pub fn f_mr(r: f64, c: f64) -> f64 {
    debug_assert!(r >= 0.0 && c >= 0.0);
    if c == 0.0 {
        return r;
    }
    if r == 0.0 {
        return 2.0 * c;
    }
    if r >= 2.0 * c {
        r + c + (2.0 * r * c).sqrt()
    } else {
        1.5 * r + 2.0 * c
    }
}

/// Numerical slack allowed before a dominance comparison counts as violated.
pub const DOMINANCE_SLACK: f64 = 1e-12;

/// One grid point where a dominance inequality failed beyond the slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub r: f64,
    pub c: f64,
    pub f_fr: f64,
    pub f_mr: f64,
    pub f_th: f64,
}

/// Outcome of `dominance_check`: the worst observed slack of each
/// inequality (positive means the left side exceeded f_th) and every point
/// violating beyond `DOMINANCE_SLACK`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub max_fr_minus_th: f64,
    pub max_mr_minus_th: f64,
    pub violations: Vec<DominanceViolation>,
}

impl DominanceReport {
    #[must_use]
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the abstract comparison functions on each (r, c) pair and
/// checks f_fr <= f_th and f_mr <= f_th pointwise.
#[must_use]
pub fn dominance_check(grid: &[(f64, f64)]) -> DominanceReport {
    let mut report = DominanceReport {
        max_fr_minus_th: f64::NEG_INFINITY,
        max_mr_minus_th: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for &(r, c) in grid {
        let (fr, mr, th) = (f_fr(r, c), f_mr(r, c), f_th(r, c));
        report.max_fr_minus_th = report.max_fr_minus_th.max(fr - th);
        report.max_mr_minus_th = report.max_mr_minus_th.max(mr - th);
        if fr - th > DOMINANCE_SLACK || mr - th > DOMINANCE_SLACK {
            report.violations.push(DominanceViolation { r, c, f_fr: fr, f_mr: mr, f_th: th });
        }
    }
    report
}
