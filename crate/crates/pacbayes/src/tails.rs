//! Tail-behavior descriptions for the loss: a cumulant-generating-function
//! envelope psi with its domain, and the conjugate inverse psi*^{-1} used by
//! every general-tail certificate, in closed form for the standard families
//! and numerically for custom envelopes.
//!
//! An envelope is a convex non-decreasing psi on [0, b_dom) with
//! psi(0) = psi'(0) = 0 that dominates the CGF of the negated loss. Its
//! conjugate inverse is
//!
//!   psi*^{-1}(y) = inf over lambda in (0, b_dom) of (y + psi(lambda)) / lambda,
//!
//! which is non-decreasing and concave in y.

use crate::error::{Error, Result};
use crate::specfun::{self, NatsValue};

/// Known tail families and their CGF envelopes.
///
/// The variant fields are public for matching; use the checked constructors
/// (`bounded_range`, `sub_gaussian`, `sub_gamma`, `sub_exponential`,
/// `CgfTable::new`) so the parameter invariants (`a <= b`, `sigma2 > 0`,
/// `c > 0`) hold.
#[derive(Debug, Clone, PartialEq)]
pub enum TailFamily {
    /// Losses confined to [a, b]; treated as subgaussian with variance
    /// proxy (b-a)^2/4, so psi(lambda) = lambda^2 (b-a)^2 / 8.
    BoundedRange { a: f64, b: f64 },
    /// psi(lambda) = lambda^2 sigma2 / 2 on all of [0, infinity).
    SubGaussian { sigma2: f64 },
    /// psi(lambda) = lambda^2 sigma2 / (2 (1 - c lambda)) on [0, 1/c).
    SubGamma { sigma2: f64, c: f64 },
    /// psi(lambda) = lambda^2 sigma2 / 2, but only on [0, 1/c).
    SubExponential { sigma2: f64, c: f64 },
    /// A tabulated envelope with linear interpolation; see [`CgfTable`].
    CustomCgf(CgfTable),
}

impl TailFamily {
    pub fn bounded_range(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::Domain(format!("bounded range requires a <= b, got [{a}, {b}]")));
        }
        Ok(TailFamily::BoundedRange { a, b })
    }

    pub fn sub_gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(TailFamily::SubGaussian { sigma2 })
    }

    pub fn sub_gamma(sigma2: f64, c: f64) -> Result<Self> {
        Self::scale_pair(sigma2, c)?;
        Ok(TailFamily::SubGamma { sigma2, c })
    }

    pub fn sub_exponential(sigma2: f64, c: f64) -> Result<Self> {
        Self::scale_pair(sigma2, c)?;
        Ok(TailFamily::SubExponential { sigma2, c })
    }

    fn scale_pair(sigma2: f64, c: f64) -> Result<()> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("scale c must be positive, got {c}")));
        }
        Ok(())
    }

    /// Supremum of the envelope's domain [0, sup); infinite for families
    /// whose CGF envelope holds for every lambda.
    #[must_use]
    pub fn domain_sup(&self) -> f64 {
        match self {
            TailFamily::BoundedRange { .. } | TailFamily::SubGaussian { .. } => f64::INFINITY,
            TailFamily::SubGamma { c, .. } | TailFamily::SubExponential { c, .. } => 1.0 / c,
            TailFamily::CustomCgf(table) => table.b_dom(),
        }
    }

    /// The envelope psi(lambda); errors when lambda leaves [0, domain_sup).
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) || lambda >= self.domain_sup() {
            return Err(Error::Domain(format!(
                "lambda {lambda} outside CGF envelope domain [0, {})",
                self.domain_sup()
            )));
        }
        Ok(match self {
            TailFamily::BoundedRange { a, b } => {
                let range = b - a;
                lambda * lambda * range * range / 8.0
            }
            TailFamily::SubGaussian { sigma2 } | TailFamily::SubExponential { sigma2, .. } => {
                lambda * lambda * sigma2 / 2.0
            }
            TailFamily::SubGamma { sigma2, c } => {
                lambda * lambda * sigma2 / (2.0 * (1.0 - c * lambda))
            }
            TailFamily::CustomCgf(table) => table.eval(lambda),
        })
    }

    /// The conjugate inverse psi*^{-1}(y), closed form per family:
    ///
    /// - bounded range: (b-a) sqrt(y/2)
    /// - subgaussian: sqrt(2 sigma2 y)
    /// - subgamma: sqrt(2 sigma2 y) + c y
    /// - subexponential: sqrt(2 sigma2 y) while the unconstrained stationary
    ///   point stays in the domain (y <= sigma2/(2c^2)), otherwise the
    ///   boundary evaluation c y + sigma2/(2c), which is continuous at the
    ///   crossover
    /// - custom table: the numeric infimum.
    #[must_use]
    pub fn psi_star_inverse(&self, y: NatsValue) -> f64 {
        let y = y.value();
        if y.is_infinite() {
            return f64::INFINITY;
        }
        match self {
            TailFamily::BoundedRange { a, b } => (b - a) * (y / 2.0).sqrt(),
            TailFamily::SubGaussian { sigma2 } => (2.0 * sigma2 * y).sqrt(),
            TailFamily::SubGamma { sigma2, c } => (2.0 * sigma2 * y).sqrt() + c * y,
            TailFamily::SubExponential { sigma2, c } => {
                if y <= sigma2 / (2.0 * c * c) {
                    (2.0 * sigma2 * y).sqrt()
                } else {
                    c * y + sigma2 / (2.0 * c)
                }
            }
            TailFamily::CustomCgf(table) => {
                psi_star_inverse_numeric(|l| table.eval(l), table.b_dom(), NatsValue::clamped(y))
                    .expect("validated CGF tables give a finite objective")
            }
        }
    }

    /// Like [`psi_star_inverse`](Self::psi_star_inverse), but the
    /// subexponential out-of-domain branch uses the relaxed linear form
    /// (c+1) y instead of the boundary infimum. That form pairs with an
    /// explicit event split on the dependence budget (the certificate-level
    /// split keeps it a valid upper bound); other families are unchanged.
    #[must_use]
    pub fn psi_star_inverse_relaxed(&self, y: NatsValue) -> f64 {
        match self {
            TailFamily::SubExponential { sigma2, c } => {
                let y = y.value();
                if y.is_infinite() {
                    f64::INFINITY
                } else if y <= sigma2 / (2.0 * c * c) {
                    (2.0 * sigma2 * y).sqrt()
                } else {
                    (c + 1.0) * y
                }
            }
            _ => self.psi_star_inverse(y),
        }
    }
}

impl From<CgfTable> for TailFamily {
    fn from(table: CgfTable) -> Self {
        TailFamily::CustomCgf(table)
    }
}

/// Numeric conjugate inverse: the infimum over lambda in (0, b_dom) of
/// (y + psi(lambda)) / lambda, by log-spaced grid search with golden-section
/// refinement. The boundary limit lambda -> b_dom is represented by
/// evaluation at b_dom (1 - 1e-9). Errors when the objective is non-finite
/// on most of the domain.
pub fn psi_star_inverse_numeric<F: Fn(f64) -> f64>(
    psi: F,
    b_dom: f64,
    y: NatsValue,
) -> Result<f64> {
    if !(b_dom > 0.0) || !b_dom.is_finite() {
        return Err(Error::Domain(format!("b_dom must be positive and finite, got {b_dom}")));
    }
    let y = y.value();
    if y == 0.0 {
        // psi(lambda)/lambda -> psi'(0) = 0 from the envelope normalization.
        return Ok(0.0);
    }
    let objective = |lambda: f64| (y + psi(lambda)) / lambda;
    let (_, min) =
        specfun::minimize_scalar_grid(objective, b_dom * 1e-12, b_dom * (1.0 - 1e-9), 1e-9 * b_dom, 512)?;
    Ok(min)
}

/// A sampled CGF envelope (lambda_i, psi(lambda_i)) with piecewise-linear
/// interpolation, which preserves the monotonicity and convexity of the
/// sampled values. Construction checks the envelope invariants: the grid
/// starts at lambda = 0 with psi(0) = 0 and increases strictly; the values
/// are finite, non-decreasing, and convex; and the first chord's slope is
/// small against the last chord's, the finite-difference version of
/// psi'(0) = 0 (sample finely near zero for steep envelopes). The domain
/// supremum is the last grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CgfTable {
    lambdas: Vec<f64>,
    values: Vec<f64>,
}

impl CgfTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidCgfTable(format!(
                "need at least 3 sample points, got {}",
                points.len()
            )));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::InvalidCgfTable(format!(
                "table must start at (0, 0), got ({}, {})",
                points[0].0, points[0].1
            )));
        }
        let mut prev_slope = f64::NEG_INFINITY;
        let mut first_slope = 0.0;
        for (i, window) in points.windows(2).enumerate() {
            let [(l0, v0), (l1, v1)] = [window[0], window[1]];
            if !(l1.is_finite() && v1.is_finite()) {
                return Err(Error::InvalidCgfTable(format!("non-finite sample ({l1}, {v1})")));
            }
            if l1 <= l0 {
                return Err(Error::InvalidCgfTable(format!(
                    "lambda grid must increase strictly, got {l0} then {l1}"
                )));
            }
            if v1 < v0 {
                return Err(Error::InvalidCgfTable(format!(
                    "psi must be non-decreasing, got {v0} then {v1}"
                )));
            }
            let slope = (v1 - v0) / (l1 - l0);
            if slope < prev_slope - 1e-9 * (1.0 + prev_slope.abs()) {
                return Err(Error::InvalidCgfTable(format!(
                    "psi must be convex; chord slope fell from {prev_slope} to {slope} at lambda {l0}"
                )));
            }
            prev_slope = slope;
            if i == 0 {
                first_slope = slope;
            }
        }
        let last_slope = prev_slope;
        if first_slope > 0.05 * last_slope + 1e-9 {
            return Err(Error::InvalidCgfTable(format!(
                "psi'(0) must vanish; first chord slope {first_slope} is too steep (sample more finely near zero)"
            )));
        }
        let (lambdas, values) = points.into_iter().unzip();
        Ok(CgfTable { lambdas, values })
    }

    /// Samples a closed-form envelope on a uniform grid over [0, b_dom].
    pub fn from_fn<F: Fn(f64) -> f64>(psi: F, b_dom: f64, points: usize) -> Result<Self> {
        if !(b_dom > 0.0) || !b_dom.is_finite() {
            return Err(Error::Domain(format!("b_dom must be positive and finite, got {b_dom}")));
        }
        if points < 3 {
            return Err(Error::Domain("need at least 3 sample points".into()));
        }
        let samples = (0..points)
            .map(|i| {
                let lambda = b_dom * i as f64 / (points - 1) as f64;
                (lambda, psi(lambda))
            })
            .collect();
        Self::new(samples)
    }

    /// The domain supremum: the last tabulated lambda.
    #[must_use]
    pub fn b_dom(&self) -> f64 {
        *self.lambdas.last().expect("tables hold at least 3 points")
    }

    /// Interpolated psi at lambda, clamped to the tabulated range.
    #[must_use]
    pub fn eval(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0 && lambda <= self.b_dom());
        let i = self.lambdas.partition_point(|&l| l <= lambda);
        if i == 0 {
            return self.values[0];
        }
        if i == self.lambdas.len() {
            return *self.values.last().unwrap();
        }
        let (l0, l1) = (self.lambdas[i - 1], self.lambdas[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (lambda - l0) / (l1 - l0)
    }
}
