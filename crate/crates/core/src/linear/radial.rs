//! Fourier-side norms of `Ĝ(t)f̂` and `e^{-νtΛ^β}f̂` for radial data, computed
//! by adaptive radial quadrature in `N` dimensions, and decay-exponent checks built on them.
//!
//! Norms are taken on the Fourier side without the `(2π)^{-N}` Plancherel
//! factor: `‖g‖_{L²} = (∫|g(ξ)|²dξ)^{1/2}` and `‖g‖_{L¹} = ∫|g(ξ)|dξ`. Constant
//! factors do not affect decay exponents.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::green::{critical_wavenumber, green_entries, heat_symbol};
use super::quadrature::{integrate, logspace, QuadOptions};
use crate::error::{Error, Result};
use crate::fit::{lower_envelope, power_law_fit, EnvelopeOptions, EnvelopeReport};
use crate::model::PhysParams;

/// Default relative tolerance for the fitted exponents.
pub const EXPONENT_TOL: f64 = 0.03;

/// A radial profile `f̂(|ξ|)`, negligible beyond `cutoff`.
#[derive(Clone)]
pub struct RadialData {
    label: String,
    cutoff: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialData")
            .field("label", &self.label)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl RadialData {
    pub fn new(label: &str, cutoff: f64, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.to_string(),
            cutoff,
            profile: Arc::new(profile),
        }
    }

    /// `e^{-|ξ|²/2}`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", 40.0, |k| (-0.5 * k * k).exp())
    }

    /// `|ξ|^m e^{-|ξ|²/2}`, which vanishes at the origin for `m > 0`.
    pub fn gaussian_moment(m: f64) -> Self {
        Self::new(&format!("gaussian_moment_{m}"), 45.0, move |k| {
            k.powf(m) * (-0.5 * k * k).exp()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn value(&self, k: f64) -> f64 {
        (self.profile)(k)
    }
}

/// An entry of `Ĝ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    G11,
    G12,
    G21,
    G22,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::G11, Channel::G12, Channel::G21, Channel::G22];

    pub fn index(self) -> (usize, usize) {
        match self {
            Channel::G11 => (0, 0),
            Channel::G12 => (0, 1),
            Channel::G21 => (1, 0),
            Channel::G22 => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    L1,
}

/// Surface area `2π^{N/2}/Γ(N/2)` of the unit sphere in `ℝ^N`.
pub fn sphere_area(dimension: usize) -> f64 {
    use std::f64::consts::PI;
    // S₁ = 2, S₂ = 2π, S_{N+2} = 2π S_N / N
    let mut s = if dimension % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut n = if dimension % 2 == 1 { 1 } else { 2 };
    while n < dimension {
        s *= 2.0 * PI / n as f64;
        n += 2;
    }
    s
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_intervals: 20_000,
    }
}

/// Radial breakpoints from `0` to `cutoff`, log-spaced, with the regime boundary inserted.
fn breakpoints(cutoff: f64, extra: Option<f64>) -> Vec<f64> {
    let mut pts = vec![0.0];
    pts.extend(logspace(1e-12, cutoff, 90));
    if let Some(kc) = extra {
        if kc > 1e-12 && kc < cutoff {
            pts.push(kc);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_{ℝ^N} g(|ξ|) dξ` for a radial integrand.
pub fn radial_integral(dimension: usize, g: impl Fn(f64) -> f64, points: &[f64]) -> Result<f64> {
    let nm1 = dimension as i32 - 1;
    let v = integrate(|k| k.powi(nm1) * g(k), points, quad_opts())?;
    Ok(sphere_area(dimension) * v)
}

fn finish_norm(kind: NormKind, integral: f64) -> f64 {
    match kind {
        NormKind::L2 => integral.sqrt(),
        NormKind::L1 => integral,
    }
}

fn weight(k: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        k.powf(s)
    }
}

/// `‖|ξ|^s Ĝᵢⱼ(t) f̂‖` in `L²` or `L¹` over `ℝ^N`, `N = p.dimension`.
pub fn green_norm(p: &PhysParams, data: &RadialData, channel: Channel, s: f64, t: f64, kind: NormKind) -> Result<f64> {
    let (i, j) = channel.index();
    let g = |k: f64| {
        let v = (weight(k, s) * green_entries(t, k, p)[i][j] * data.value(k)).abs();
        match kind {
            NormKind::L2 => v * v,
            NormKind::L1 => v,
        }
    };
    let pts = breakpoints(data.cutoff, critical_wavenumber(p));
    Ok(finish_norm(kind, radial_integral(p.dimension, g, &pts)?))
}

/// `‖|ξ|^s e^{-νt|ξ|^β} f̂‖` in `L²` or `L¹` over `ℝ^N`.
pub fn heat_norm(
    nu: f64,
    beta: f64,
    dimension: usize,
    data: &RadialData,
    s: f64,
    t: f64,
    kind: NormKind,
) -> Result<f64> {
    let g = |k: f64| {
        let v = (weight(k, s) * heat_symbol(t, k, nu, beta) * data.value(k)).abs();
        match kind {
            NormKind::L2 => v * v,
            NormKind::L1 => v,
        }
    };
    Ok(finish_norm(
        kind,
        radial_integral(dimension, g, &breakpoints(data.cutoff, None))?,
    ))
}

/// All four entries' weighted norms at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayNorms {
    pub t: f64,
    pub s: f64,
    /// `‖|ξ|^s Ĝᵢⱼ(t)f̂‖_{L²}`, indexed `[i][j]`.
    pub l2: [[f64; 2]; 2],
    /// `‖|ξ|^s Ĝᵢⱼ(t)f̂‖_{L¹}`, indexed `[i][j]`.
    pub l1: [[f64; 2]; 2],
}

/// Weighted `L²` and `L¹` norms of every entry of `Ĝ(t)f̂`.
pub fn linear_decay_norms(p: &PhysParams, data: &RadialData, s: f64, t: f64) -> Result<DecayNorms> {
    let mut l2 = [[0.0; 2]; 2];
    let mut l1 = [[0.0; 2]; 2];
    for c in Channel::ALL {
        let (i, j) = c.index();
        l2[i][j] = green_norm(p, data, c, s, t, NormKind::L2)?;
        l1[i][j] = green_norm(p, data, c, s, t, NormKind::L1)?;
    }
    Ok(DecayNorms { t, s, l2, l1 })
}

/// Asymptotic decay exponent (negative) of `‖|ξ|^s Ĝᵢⱼ(t)f̂‖` for data with `f̂(0) ≠ 0`.
///
/// At low frequency `Ĝ₁₁ ≈ e^{-(γ/μ)t|ξ|^{2-α}}`, `Ĝ₂₁` carries an extra `|ξ|^{1-α}`
/// and `Ĝ₂₂` an extra `|ξ|^{2-2α}` next to a fractional-heat part `e^{-μt|ξ|^α}`.
pub fn expected_exponent(channel: Channel, kind: NormKind, s: f64, dimension: usize, alpha: f64) -> f64 {
    let n = dimension as f64;
    let parabolic = |extra: f64| match kind {
        NormKind::L2 => (n + 2.0 * (s + extra)) / (2.0 * (2.0 - alpha)),
        NormKind::L1 => (n + s + extra) / (2.0 - alpha),
    };
    let rate = match channel {
        Channel::G11 => parabolic(0.0),
        Channel::G12 | Channel::G21 => parabolic(1.0 - alpha),
        Channel::G22 => {
            let heat = match kind {
                NormKind::L2 => (n + 2.0 * s) / (2.0 * alpha),
                NormKind::L1 => (n + s) / alpha,
            };
            parabolic(2.0 - 2.0 * alpha).min(heat)
        }
    };
    -rate
}

/// A fitted decay exponent compared with its reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub quantity: String,
    pub fitted: f64,
    pub stderr: f64,
    pub expected: f64,
    pub relative_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ExponentCheck {
    pub fn from_series(
        quantity: &str,
        times: Vec<f64>,
        values: Vec<f64>,
        expected: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let fit = power_law_fit(&times, &values)?;
        let relative_deviation = ((fit.slope - expected) / expected).abs();
        Ok(Self {
            quantity: quantity.to_string(),
            fitted: fit.slope,
            stderr: fit.stderr,
            expected,
            relative_deviation,
            tolerance,
            pass: relative_deviation <= tolerance,
            times,
            values,
        })
    }
}

/// Default fit window for linear-level audits: 31 log-spaced times on `[10², 10⁵]`.
pub fn default_window() -> Vec<f64> {
    logspace(1e2, 1e5, 31)
}

fn series(times: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    times.par_iter().map(|&t| f(t)).collect()
}

/// Regresses `log‖|ξ|^s Ĝᵢⱼ(t)f̂‖` against `log⟨t⟩` and compares with [`expected_exponent`].
pub fn green_decay_check(
    p: &PhysParams,
    data: &RadialData,
    channel: Channel,
    kind: NormKind,
    s: f64,
    times: &[f64],
) -> Result<ExponentCheck> {
    let values = series(times, |t| green_norm(p, data, channel, s, t, kind))?;
    let expected = expected_exponent(channel, kind, s, p.dimension, p.alpha);
    ExponentCheck::from_series(
        &format!("{channel:?}_{kind:?}_s{s}"),
        times.to_vec(),
        values,
        expected,
        EXPONENT_TOL,
    )
}

/// Fitted `L²` and `L¹` exponents of the fractional heat semigroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    pub nu: f64,
    pub beta: f64,
    pub s: f64,
    pub dimension: usize,
    /// `t = 0` value of the `L²` norm, i.e. `‖|ξ|^s f̂‖_{L²}`.
    pub initial_l2: f64,
    pub l2: ExponentCheck,
    pub l1: ExponentCheck,
    pub pass: bool,
}

/// `L²` exponent against `-(N+2s)/(2β)` and `L¹` exponent against `-(N+s)/β`.
pub fn heat_decay_check(
    nu: f64,
    beta: f64,
    s: f64,
    dimension: usize,
    data: &RadialData,
    times: &[f64],
) -> Result<HeatReport> {
    if !(nu > 0.0 && beta > 0.0 && s >= 0.0) {
        return Err(Error::Precondition(format!(
            "heat check needs nu > 0, beta > 0, s >= 0 (got {nu}, {beta}, {s})"
        )));
    }
    let n = dimension as f64;
    let l2v = series(times, |t| heat_norm(nu, beta, dimension, data, s, t, NormKind::L2))?;
    let l1v = series(times, |t| heat_norm(nu, beta, dimension, data, s, t, NormKind::L1))?;
    let l2 = ExponentCheck::from_series(
        "heat_L2",
        times.to_vec(),
        l2v,
        -(n + 2.0 * s) / (2.0 * beta),
        EXPONENT_TOL,
    )?;
    let l1 = ExponentCheck::from_series("heat_L1", times.to_vec(), l1v, -(n + s) / beta, EXPONENT_TOL)?;
    Ok(HeatReport {
        nu,
        beta,
        s,
        dimension,
        initial_l2: heat_norm(nu, beta, dimension, data, s, 0.0, NormKind::L2)?,
        pass: l2.pass && l1.pass,
        l2,
        l1,
    })
}

/// Lower-envelope checks of `⟨t⟩^{r₁}‖Ĝ₁₁f̂‖_{L²}` and `⟨t⟩^{r₂}‖Ĝ₂₁f̂‖_{L²}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub g11: EnvelopeReport,
    pub g21: EnvelopeReport,
    pub pass: bool,
}

/// Requires `α ∈ (0, 1)` and `f̂(0) ≠ 0`; data vanishing at the origin is a
/// precondition violation, reported as an error.
pub fn lower_bound_audit(
    p: &PhysParams,
    data: &RadialData,
    times: &[f64],
    opts: EnvelopeOptions,
) -> Result<LowerBoundReport> {
    if !(p.alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "lower-bound audit needs alpha in (0, 1), got {}",
            p.alpha
        )));
    }
    let f0 = data.value(0.0);
    if !(f0.abs() > 0.0 && f0.is_finite()) {
        return Err(Error::Precondition(format!(
            "data '{}' has f(0) = {f0}; the lower bound needs nonzero mean",
            data.label()
        )));
    }
    let n = p.dimension;
    let g11 = series(times, |t| green_norm(p, data, Channel::G11, 0.0, t, NormKind::L2))?;
    let g21 = series(times, |t| green_norm(p, data, Channel::G21, 0.0, t, NormKind::L2))?;
    let r1 = -expected_exponent(Channel::G11, NormKind::L2, 0.0, n, p.alpha);
    let r2 = -expected_exponent(Channel::G21, NormKind::L2, 0.0, n, p.alpha);
    let g11 = lower_envelope("G11_L2", times, &g11, r1, opts)?;
    let g21 = lower_envelope("G21_L2", times, &g21, r2, opts)?;
    Ok(LowerBoundReport {
        pass: g11.pass && g21.pass,
        g11,
        g21,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn gaussian_data_norm_at_time_zero() {
        // ∫_{ℝ^N} e^{-|ξ|²} dξ = π^{N/2}
        let p = PhysParams::new(0.5, 1.0, 1.0, 2).unwrap();
        let n = linear_decay_norms(&p, &RadialData::gaussian(), 0.0, 0.0).unwrap();
        assert!((n.l2[0][0] - PI.sqrt()).abs() < 1e-10);
        assert_eq!(n.l2[0][1], 0.0);
        assert!((n.l1[1][1] - 2.0 * PI).abs() < 1e-9);
        for dim in [1usize, 3] {
            let h = heat_norm(1.0, 1.0, dim, &RadialData::gaussian(), 0.0, 0.0, NormKind::L2).unwrap();
            assert!((h * h - PI.powf(dim as f64 / 2.0)).abs() < 1e-9);
        }
        // ‖|ξ| e^{-|ξ|²/2}‖² in ℝ²: 2π ∫ k³ e^{-k²} dk = π
        let s1 = heat_norm(1.0, 1.0, 2, &RadialData::gaussian(), 1.0, 0.0, NormKind::L2).unwrap();
        assert!((s1 * s1 - PI).abs() < 1e-9);
    }

    #[test]
    fn heat_norm_has_closed_form_for_beta_two() {
        // N = 2, β = 2: ∫ e^{-2νtk²} e^{-k²} dξ = π/(1+2νt)
        for t in [0.5, 10.0, 1e4] {
            let h = heat_norm(1.0, 2.0, 2, &RadialData::gaussian(), 0.0, t, NormKind::L2).unwrap();
            let exact = (PI / (1.0 + 2.0 * t)).sqrt();
            assert!((h - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn expected_exponents() {
        assert!((expected_exponent(Channel::G11, NormKind::L2, 0.0, 2, 0.5) + 2.0 / 3.0).abs() < 1e-15);
        assert!((expected_exponent(Channel::G21, NormKind::L2, 0.0, 2, 0.5) + 1.0).abs() < 1e-15);
        assert!((expected_exponent(Channel::G11, NormKind::L2, 0.0, 2, 1.0) + 1.0).abs() < 1e-15);
        assert!((expected_exponent(Channel::G21, NormKind::L2, 0.0, 2, 1.0) + 1.0).abs() < 1e-15);
        assert!((expected_exponent(Channel::G11, NormKind::L1, 0.0, 2, 0.5) + 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_rejects_zero_mean_data() {
        let p = PhysParams::new(0.5, 1.0, 1.0, 2).unwrap();
        let r = lower_bound_audit(
            &p,
            &RadialData::gaussian_moment(2.0),
            &[1.0, 10.0, 100.0],
            EnvelopeOptions::default(),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
        let p1 = PhysParams::new(1.0, 1.0, 1.0, 2).unwrap();
        assert!(lower_bound_audit(
            &p1,
            &RadialData::gaussian(),
            &[1.0, 10.0, 100.0],
            EnvelopeOptions::default()
        )
        .is_err());
    }
}
