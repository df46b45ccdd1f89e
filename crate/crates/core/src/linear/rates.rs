//! Optimal algebraic decay rates as functions of the dimension `N` and the
//! alignment order `α`, in floating point and in exact rational arithmetic.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay exponents `r` in `‖·‖ ≲ ⟨t⟩^{-r}` for one `(N, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub dimension: u32,
    pub alpha: f64,
    /// `‖ρ - 1‖_{L²}`.
    pub r1: f64,
    /// `‖u‖_{L²}`.
    pub r2: f64,
    /// `‖ℙu‖_{L²}`: `N/(2α)`.
    pub incompressible: f64,
    /// Whether `α ∈ [2N/(3N+2), 1]`, the range where the `ℙu` rate is claimed.
    pub incompressible_valid: bool,
    /// `‖ρ - 1‖_{L^∞}` and `‖u‖_{L^∞}`: `N/(2-α)`, for `α ≤ 1`.
    pub linf: Option<f64>,
    /// `‖∇ρ‖_{L²}` and `‖Λ^αu‖_{L²}`: `(N+2)/(2(2-α))`, for `α ≤ 1`.
    pub gradient: Option<f64>,
}

/// Rates for integer `N ≥ 1` and `α ∈ (0, 2)`.
pub fn rate_table(dimension: u32, alpha: f64) -> Result<RateTable> {
    if dimension == 0 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: 0.0,
            reason: "dimension must be at least 1".into(),
        });
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "rates are defined for alpha in (0, 2)".into(),
        });
    }
    let n = dimension as f64;
    let (r1, r2) = if alpha <= 1.0 {
        (
            n / (2.0 * (2.0 - alpha)),
            (n + 2.0 * (1.0 - alpha)) / (2.0 * (2.0 - alpha)),
        )
    } else {
        (n / (2.0 * alpha), n / (2.0 * alpha))
    };
    let low = alpha <= 1.0;
    Ok(RateTable {
        dimension,
        alpha,
        r1,
        r2,
        incompressible: n / (2.0 * alpha),
        incompressible_valid: low && alpha >= 2.0 * n / (3.0 * n + 2.0),
        linf: low.then(|| n / (2.0 - alpha)),
        gradient: low.then(|| (n + 2.0) / (2.0 * (2.0 - alpha))),
    })
}

/// Exact rates at a rational `α`. The closed interval `[0, 2]` is accepted so
/// that the one-sided limits at the endpoints can be read off directly: the
/// formulas are rational functions continuous up to each endpoint of their branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRates {
    pub r1: Rational64,
    pub r2: Rational64,
    pub incompressible: Option<Rational64>,
}

/// `r₁, r₂` from the `α ≤ 1` branch (valid for `α ∈ [0, 1]`) or the `α ≥ 1`
/// branch (valid for `α ∈ [1, 2]`); both agree at `α = 1`.
pub fn exact_rates(dimension: u32, alpha: Rational64) -> Result<ExactRates> {
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    if dimension == 0 || alpha < zero || alpha > two {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: *alpha.numer() as f64 / *alpha.denom() as f64,
            reason: "exact rates need N >= 1 and alpha in [0, 2]".into(),
        });
    }
    let n = Rational64::from_integer(dimension as i64);
    let (r1, r2) = if alpha <= one {
        (
            n / (two * (two - alpha)),
            (n + two * (one - alpha)) / (two * (two - alpha)),
        )
    } else {
        (n / (two * alpha), n / (two * alpha))
    };
    let incompressible = (alpha > zero).then(|| n / (two * alpha));
    Ok(ExactRates { r1, r2, incompressible })
}
