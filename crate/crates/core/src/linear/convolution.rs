//! Growth or decay of `I(t) = ∫₀ᵗ ⟨t-τ⟩^{-a₁}⟨τ⟩^{-a₂} dτ`:
//!
//! * `max(a₁, a₂) > 1`: `I ≲ ⟨t⟩^{-min(a₁, a₂)}`;
//! * `max(a₁, a₂) = 1`: `I ≲ ⟨t⟩^{-min(a₁, a₂)} log(1 + ⟨t⟩)`;
//! * `max(a₁, a₂) < 1`: `I ≲ ⟨t⟩^{1-a₁-a₂}`.

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, logspace, QuadOptions};
use crate::error::{Error, Result};
use crate::fit::power_law_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvolutionCase {
    MaxAboveOne,
    MaxEqualsOne,
    MaxBelowOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub a1: f64,
    pub a2: f64,
    pub case: ConvolutionCase,
    pub expected_exponent: f64,
    pub fitted_exponent: f64,
    /// `|fitted - expected| / |expected|`, or the absolute gap when the expected exponent is 0.
    pub deviation: f64,
    /// For the logarithmic case: `sup/inf` of `I / (⟨t⟩^{-min} log(1+⟨t⟩))`.
    pub envelope_ratio: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Largest accepted `sup/inf` of the normalized integral in the logarithmic case.
pub const LOG_ENVELOPE_BAND: f64 = 2.0;

/// `I(t)` by adaptive quadrature, with panels graded toward both endpoints.
pub fn convolution_integral(a1: f64, a2: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let f = |tau: f64| (1.0 + (t - tau)).powf(-a1) * (1.0 + tau).powf(-a2);
    let half = 0.5 * t;
    let mut pts = vec![0.0];
    if half > 1.0 {
        let grade = logspace(1.0, half, 20);
        pts.extend(grade.iter().copied());
        pts.extend(grade.iter().rev().skip(1).map(|x| t - x));
    } else {
        pts.push(half);
    }
    pts.push(t);
    pts.dedup();
    integrate(
        f,
        &pts,
        QuadOptions {
            rel_tol: 1e-12,
            ..Default::default()
        },
    )
}

/// Fits the exponent of `I(t)` over `times` and compares it with the case table.
pub fn convolution_inequality_check(a1: f64, a2: f64, times: &[f64], tolerance: f64) -> Result<ConvolutionReport> {
    if !(a1 >= 0.0 && a2 >= 0.0) {
        return Err(Error::Precondition(format!(
            "exponents must be non-negative, got {a1}, {a2}"
        )));
    }
    let (hi, lo) = (a1.max(a2), a1.min(a2));
    let (case, expected) = if hi > 1.0 {
        (ConvolutionCase::MaxAboveOne, -lo)
    } else if hi == 1.0 {
        (ConvolutionCase::MaxEqualsOne, -lo)
    } else {
        (ConvolutionCase::MaxBelowOne, 1.0 - a1 - a2)
    };
    let values = times
        .iter()
        .map(|&t| convolution_integral(a1, a2, t))
        .collect::<Result<Vec<f64>>>()?;
    let fitted = power_law_fit(times, &values)?.slope;
    let deviation = if expected == 0.0 {
        (fitted - expected).abs()
    } else {
        ((fitted - expected) / expected).abs()
    };
    let (envelope_ratio, pass) = if case == ConvolutionCase::MaxEqualsOne {
        let norm: Vec<f64> = times
            .iter()
            .zip(&values)
            .map(|(t, v)| {
                let bracket = 1.0 + t;
                v / (bracket.powf(-lo) * bracket.ln_1p())
            })
            .collect();
        let inf = norm.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup = norm.iter().cloned().fold(0.0, f64::max);
        let ratio = sup / inf;
        (Some(ratio), inf > 0.0 && ratio <= LOG_ENVELOPE_BAND)
    } else {
        (None, deviation <= tolerance)
    };
    Ok(ConvolutionReport {
        a1,
        a2,
        case,
        expected_exponent: expected,
        fitted_exponent: fitted,
        deviation,
        envelope_ratio,
        tolerance,
        pass,
        times: times.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        for t in [0.5, 3.0, 1e3] {
            assert!((convolution_integral(0.0, 0.0, t).unwrap() - t).abs() < 1e-10 * t);
            // a₁ = 2, a₂ = 0: ∫₀ᵗ (1+t-τ)^{-2} dτ = 1 - 1/(1+t)
            let v = convolution_integral(2.0, 0.0, t).unwrap();
            assert!((v - t / (1.0 + t)).abs() < 1e-12);
            // a₁ = a₂ = 1: 2 log(1+t)/(2+t)
            let v = convolution_integral(1.0, 1.0, t).unwrap();
            let exact = 2.0 * t.ln_1p() / (2.0 + t);
            assert!((v - exact).abs() < 1e-11 * exact);
        }
        assert_eq!(convolution_integral(1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn case_table() {
        let ts = logspace(1e2, 1e5, 31);
        let r = convolution_inequality_check(0.0, 0.0, &ts, 0.03).unwrap();
        assert_eq!(r.case, ConvolutionCase::MaxBelowOne);
        assert!(r.pass && (r.fitted_exponent - 1.0).abs() < 0.01);
        let r = convolution_inequality_check(2.0, 0.5, &ts, 0.03).unwrap();
        assert_eq!(r.case, ConvolutionCase::MaxAboveOne);
        assert!(r.pass, "{}", r.fitted_exponent);
        let r = convolution_inequality_check(1.0, 0.5, &ts, 0.03).unwrap();
        assert_eq!(r.case, ConvolutionCase::MaxEqualsOne);
        assert!(r.pass, "{:?}", r.envelope_ratio);
        assert!(convolution_inequality_check(-1.0, 0.5, &ts, 0.03).is_err());
    }
}
