//! Power-law regression against `⟨t⟩ = 1 + t` and lower-envelope checks of
//! rescaled time series. Shared by the quadrature audits and the run diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line `log v = intercept + slope · log(1+t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for an exact fit or two points).
    pub stderr: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        stderr,
        points: n,
    })
}

/// Fits `v ≈ C⟨t⟩^{slope}` on log-log axes.
pub fn power_law_fit(times: &[f64], values: &[f64]) -> Result<LineFit> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs positive finite values, found {v}"
        )));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln_1p()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&x, &y)
}

/// Thresholds for [`lower_envelope`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    /// Required `inf/sup` of the rescaled series.
    pub floor_fraction: f64,
    /// The late-time slope of the rescaled series may not fall below `-trend_tolerance · rate`.
    pub trend_tolerance: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            floor_fraction: 1e-2,
            trend_tolerance: 0.03,
        }
    }
}

/// Result of rescaling a series by `⟨t⟩^{rate}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub quantity: String,
    pub rate: f64,
    pub inf: f64,
    pub sup: f64,
    /// Log-log slope of the rescaled series over the last decade of the window.
    pub tail_slope: f64,
    pub options: EnvelopeOptions,
    pub pass: bool,
    pub times: Vec<f64>,
    pub scaled: Vec<f64>,
}

/// Checks that `⟨t⟩^{rate}·v(t)` keeps a positive floor and does not trend downward.
pub fn lower_envelope(
    quantity: &str,
    times: &[f64],
    values: &[f64],
    rate: f64,
    opts: EnvelopeOptions,
) -> Result<EnvelopeReport> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::InsufficientData("envelope needs at least 3 samples".into()));
    }
    let scaled: Vec<f64> = times
        .iter()
        .zip(values)
        .map(|(t, v)| (1.0 + t).powf(rate) * v)
        .collect();
    let inf = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_last = *times.last().expect("non-empty");
    let tail: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t_last / 10.0).collect();
    let idx: Vec<usize> = if tail.len() >= 3 {
        tail
    } else {
        (times.len() - 3..times.len()).collect()
    };
    let tail_slope = if inf > 0.0 {
        let ts: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let vs: Vec<f64> = idx.iter().map(|&i| scaled[i]).collect();
        power_law_fit(&ts, &vs)?.slope
    } else {
        f64::NEG_INFINITY
    };
    let pass = inf > 0.0
        && inf.is_finite()
        && inf >= opts.floor_fraction * sup
        && tail_slope >= -opts.trend_tolerance * rate.abs().max(1e-12);
    Ok(EnvelopeReport {
        quantity: quantity.to_string(),
        rate,
        inf,
        sup,
        tail_slope,
        options: opts,
        pass,
        times: times.to_vec(),
        scaled,
    })
}
