//! Scalar special functions and generic optimizers on which every bound
//! evaluator is built: binary relative entropy and its partial inverse,
//! the -1 branch of the Lambert W function, Maurer's binomial constant,
//! the exponential envelope, and a grid-plus-golden-section minimizer.
//!
//! All logarithms are natural; confidence levels are handled as ln(1/beta)
//! so that extreme confidences do not underflow.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A probability, constrained to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    /// Validates `v` in [0, 1].
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("probability must lie in [0,1], got {v}")));
        }
        Ok(Probability(v))
    }

    /// Clamps `v` into [0, 1]. Intended for values that are probabilities up
    /// to floating-point rounding. Panics on NaN.
    pub fn new_clamped(v: f64) -> Self {
        assert!(!v.is_nan(), "probability must not be NaN");
        Probability(v.clamp(0.0, 1.0))
    }

    #[must_use]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// A non-negative quantity measured in nats (relative entropies, confidence
/// budgets, log ratios). May be +infinity, never NaN or negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NatsValue(f64);

impl NatsValue {
    pub const ZERO: NatsValue = NatsValue(0.0);
    pub const INFINITY: NatsValue = NatsValue(f64::INFINITY);

    /// Validates `v` >= 0 (infinity allowed).
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain(format!("nats value must be >= 0, got {v}")));
        }
        Ok(NatsValue(v))
    }

    /// Clamps tiny negative rounding noise up to zero. Panics on NaN.
    pub fn clamped(v: f64) -> Self {
        assert!(!v.is_nan(), "nats value must not be NaN");
        NatsValue(v.max(0.0))
    }

    #[must_use]
    pub fn value(self) -> f64 {
        self.0
    }

    #[must_use]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl TryFrom<f64> for NatsValue {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        NatsValue::new(v)
    }
}

impl From<NatsValue> for f64 {
    fn from(n: NatsValue) -> f64 {
        n.0
    }
}

/// -1/e as the exact negative of f64 exp(-1), so that the branch point of
/// the Lambert W -1 branch round-trips: lambert_w_m1(NEG_INV_E) = -1 exactly.
pub const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

/// Binary relative entropy d(p||q) between Bernoulli(p) and Bernoulli(q),
/// in nats, with the conventions 0 ln 0 = 0 and d(p||q) = +inf when
/// q is 0 or 1 while p differs from q.
#[must_use]
pub fn binary_kl(p: Probability, q: Probability) -> NatsValue {
    let (p, q) = (p.value(), q.value());
    if p == q {
        return NatsValue::ZERO;
    }
    if q == 0.0 || q == 1.0 {
        return NatsValue::INFINITY;
    }
    let mut d = 0.0;
    if p > 0.0 {
        d += p * (p / q).ln();
    }
    if p < 1.0 {
        d += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    // d >= 0 mathematically; rounding can leave a tiny negative residue.
    NatsValue::clamped(d)
}

/// Largest q in [p_hat, 1] with binary_kl(p_hat, q) <= c.
///
/// d(p||.) is strictly increasing on [p, 1), so the supremum is the unique
/// root of d(p||q) = c when one exists below 1. The root is bracketed and
/// bisected in the coordinate u = -ln(1-q), where the objective
///
///   g(u) = p ln p - p ln(1 - e^{ -u }) + (1-p)(ln(1-p) + u)
///
/// is convex and increasing with slope below 1-p, so the bisection error in
/// u transfers to the relative-entropy residual with a factor below one and
/// no precision is lost as q approaches 1.
#[must_use]
pub fn kl_inverse_upper(p_hat: Probability, c: NatsValue) -> Probability {
    let p = p_hat.value();
    let c = c.value();
    if c == 0.0 {
        return p_hat;
    }
    if p >= 1.0 || c.is_infinite() {
        return Probability::ONE;
    }
    if p == 0.0 {
        // d(0||q) = -ln(1-q); the budget is exhausted at q = 1 - e^{-c}.
        return Probability::new_clamped(-(-c).exp_m1());
    }
    let ln_p = p.ln();
    let ln_1mp = (-p).ln_1p();
    let g = |u: f64| {
        // ln(1 - e^{-u}) without cancellation; -expm1(-u) = 1 - e^{-u}.
        let ln_q = (-(-u).exp_m1()).ln();
        p * (ln_p - ln_q) + (1.0 - p) * (ln_1mp + u)
    };
    // g(u) >= (1-p) u + p ln p + (1-p) ln(1-p), so this upper end brackets.
    let entropy = -(p * ln_p + (1.0 - p) * ln_1mp);
    let mut lo = -ln_1mp;
    let mut hi = (c + entropy) / (1.0 - p);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let u = 0.5 * (lo + hi);
    Probability::new_clamped(-(-u).exp_m1())
}

/// The -1 branch of the Lambert W function: the solution w <= -1 of
/// w e^w = x for x in [-1/e, 0).
///
/// # Algorithm
/// Within 2(1 + e x) < 1e-4 of the branch point the standard series in
/// p = -sqrt(2(1 + e x)) is used (Halley's denominators degenerate there).
/// Elsewhere the iteration starts from the closed-form approximation
/// W_-1(x) ~ -1 - sqrt(2u) - 5u/6 with u = -1 - ln(-x), and Halley steps
/// refine it until |w e^w - x| <= 1e-12 |x| (at most 50 steps; convergence
/// is cubic, so the final residual is ordinarily at machine precision).
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    if x.is_nan() || x < NEG_INV_E || x >= 0.0 {
        return Err(Error::Domain(format!(
            "lambert_w_m1 requires -1/e <= x < 0, got {x}"
        )));
    }
    if x == NEG_INV_E {
        return Ok(-1.0);
    }
    let p2 = 2.0 * std::f64::consts::E.mul_add(x, 1.0);
    if p2 < 1e-4 {
        let p = -p2.sqrt();
        // Branch-point series W = -1 + p - p^2/3 + 11 p^3/72 - ...
        let w = -1.0
            + p * (1.0
                + p * (-1.0 / 3.0
                    + p * (11.0 / 72.0
                        + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 - p * 221.0 / 8505.0)))));
        return Ok(w);
    }
    let u = -1.0 - (-x).ln();
    let mut w = -1.0 - (2.0 * u).sqrt() - 5.0 * u / 6.0;
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 1e-12 * x.abs() {
            break;
        }
        let fp = ew * (w + 1.0);
        let fpp = ew * (w + 2.0);
        let mut step = f / (fp - f * fpp / (2.0 * fp));
        // Stay on the -1 branch; a full step never crosses once the series
        // region is excluded, but guard against overshoot anyway.
        while w - step >= -1.0 {
            step *= 0.5;
        }
        w -= step;
    }
    Ok(w)
}

/// Selects how Maurer's constant xi(n) is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiMode {
    /// The exact binomial sum, practical for n <= 10^4.
    Exact,
    /// The closed-form upper bound; the default used by the bound evaluators.
    Bound,
}

/// Result of evaluating Maurer's constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xi {
    pub value: f64,
    /// True when exact mode overflowed its practical range and the bound
    /// was returned instead.
    pub fell_back: bool,
}

/// Exact-mode size limit; above it the binomial sum is still finite but the
/// O(n) evaluation stops being worth it and the bound is returned instead.
const XI_EXACT_MAX_N: u64 = 10_000;

/// Maurer's constant xi(n), which lies in [sqrt(n), 2 + sqrt(2n)].
///
/// Bound mode returns 2 sqrt(n) for n = 1 and min(2 sqrt(n), 2 + sqrt(2n))
/// for n >= 2. Exact mode evaluates the binomial sum
///
///   xi(n) = sum_{k=0}^{n} C(n,k) (k/n)^k ((n-k)/n)^{n-k}
///
/// in log-space term by term; for n above 10^4 it falls back to the bound
/// and flags that it did.
#[must_use]
pub fn xi_maurer(n: u64, mode: XiMode) -> Xi {
    assert!(n >= 1, "xi is defined for n >= 1");
    match mode {
        XiMode::Bound => Xi { value: xi_bound(n), fell_back: false },
        XiMode::Exact => {
            if n > XI_EXACT_MAX_N {
                return Xi { value: xi_bound(n), fell_back: true };
            }
            Xi { value: xi_exact(n), fell_back: false }
        }
    }
}

fn xi_bound(n: u64) -> f64 {
    let nf = n as f64;
    if n == 1 {
        2.0 * nf.sqrt()
    } else {
        (2.0 * nf.sqrt()).min(2.0 + (2.0 * nf).sqrt())
    }
}

fn xi_exact(n: u64) -> f64 {
    let nf = n as f64;
    // Cumulative ln k! so that ln C(n,k) = lf[n] - lf[k] - lf[n-k].
    let mut lf = vec![0.0f64; n as usize + 1];
    for k in 1..=n as usize {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    // The k = 0 and k = n terms are 1 each (0^0 = 1 convention).
    let mut sum = 2.0;
    if n == 1 {
        return sum;
    }
    for k in 1..n as usize {
        let kf = k as f64;
        let ln_term = lf[n as usize] - lf[k] - lf[n as usize - k]
            + kf * (kf / nf).ln()
            + (nf - kf) * ((nf - kf) / nf).ln();
        sum += ln_term.exp();
    }
    sum
}

/// Linear envelope of 1 - e^{-x} tangent at a: returns
/// e^{-a} x + 1 - e^{-a}(1 + a), which upper-bounds 1 - e^{-x} for every
/// a > 0, with equality at a = x.
#[must_use]
pub fn exp_envelope(x: f64, a: f64) -> f64 {
    debug_assert!(x >= 0.0 && a > 0.0);
    let ea = (-a).exp();
    ea.mul_add(x, 1.0 - ea * (1.0 + a))
}

/// Golden-section step constant, (sqrt(5) - 1) / 2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a scalar function on [lo, hi]: a coarse grid scan (at least 256
/// points, log-spaced when lo > 0) locates the best basin at grid
/// resolution, then golden-section refinement narrows the surrounding
/// bracket until its width is at most `tol`. Returns (argmin, min).
///
/// The grid scan exists because several bound objectives are not convex in
/// their parameter; golden section alone could converge to the wrong basin.
/// Ties on the grid keep the smallest argument. Non-finite values compare
/// as +infinity; if more than half the grid is non-finite the search is
/// rejected.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    minimize_scalar_grid(f, lo, hi, tol, 256)
}

/// `minimize_scalar` with an explicit grid resolution (at least 2 points).
pub fn minimize_scalar_grid<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    grid_points: usize,
) -> Result<(f64, f64)> {
    assert!(lo < hi, "search range must satisfy lo < hi");
    assert!(grid_points >= 2);
    let log_spaced = lo > 0.0;
    let (t_lo, t_hi) = if log_spaced { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let to_x = |t: f64| if log_spaced { t.exp() } else { t };

    let mut eval = |t: f64| {
        let y = f(to_x(t));
        if y.is_finite() {
            (y, true)
        } else {
            (f64::INFINITY, false)
        }
    };

    let m = grid_points - 1;
    let mut best_i = 0usize;
    let mut best_y = f64::INFINITY;
    let mut finite = 0usize;
    let mut grid_t = Vec::with_capacity(grid_points);
    for i in 0..=m {
        let t = t_lo + (t_hi - t_lo) * (i as f64 / m as f64);
        grid_t.push(t);
        let (y, ok) = eval(t);
        if ok {
            finite += 1;
        }
        if y < best_y {
            best_y = y;
            best_i = i;
        }
    }
    if finite * 2 < grid_points {
        return Err(Error::NonFiniteObjective(format!(
            "{} of {} grid points evaluated non-finite on [{lo}, {hi}]",
            grid_points - finite,
            grid_points
        )));
    }

    // Golden-section refinement on the bracket around the best grid point.
    let mut a = grid_t[best_i.saturating_sub(1)];
    let mut b = grid_t[(best_i + 1).min(m)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, _) = eval(c);
    let (mut fd, _) = eval(d);
    for _ in 0..200 {
        if to_x(b) - to_x(a) <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d).0;
        }
    }
    let (mut arg, mut min) = (to_x(grid_t[best_i]), best_y);
    for (t, y) in [(c, fc), (d, fd)] {
        if y < min {
            min = y;
            arg = to_x(t);
        }
    }
    Ok((arg, min))
}
