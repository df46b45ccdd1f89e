//! Norm tracking, conserved quantities, the cross-term energy functionals,
//! decay-exponent fits and the box-size sensitivity study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::fit::{lower_envelope, power_law_fit, EnvelopeOptions, EnvelopeReport};
use crate::grid::{make_grid, Grid};
use crate::linear::rates::rate_table;
use crate::model::{sigma_transform, PhysParams, SimState};
use crate::scenario::{make_initial, ScenarioSpec};
use crate::spectral::{self, gradient, lebesgue_norms, leray_project, riesz_power, sobolev_norm};
use crate::timestepper::{run, RunLabel, StepperConfig};

/// Column names of the time-series table, in order.
pub const COLUMNS: [&str; 17] = [
    "t",
    "L1_a",
    "L2_a",
    "Linf_a",
    "L2_u",
    "Linf_u",
    "H1_a",
    "Hs_a",
    "Hs_u",
    "L2_Pu",
    "L2_Lam_alpha_u",
    "L2_grad_a",
    "mass",
    "mom_x",
    "mom_y",
    "Y",
    "Ytilde",
];

/// Sobolev order and cross-term weights of the monitored functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub s: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl EnergyWeights {
    /// `δ₁ = min(1, μ/√γ)` and `δ₂ = min(1, μ/√γ, √γ/μ)`.
    pub fn for_params(p: &PhysParams, s: f64) -> Self {
        let r = p.mu / p.gamma.sqrt();
        Self {
            s,
            delta1: r.min(1.0),
            delta2: r.min(1.0 / r).min(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must lie in (0, 1]".into(),
                });
            }
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s",
                value: self.s,
                reason: "Sobolev order must be positive".into(),
            });
        }
        Ok(())
    }
}

/// One row of the time series. Norms of `a` and `u` are taken on the
/// fluctuations about their box means, the quantities that decay on a torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub l1_a: f64,
    pub l2_a: f64,
    pub linf_a: f64,
    pub l2_u: f64,
    pub linf_u: f64,
    pub h1_a: f64,
    pub hs_a: f64,
    pub hs_u: f64,
    pub l2_pu: f64,
    pub l2_lam_alpha_u: f64,
    pub l2_grad_a: f64,
    pub mass: f64,
    pub momentum: [f64; 2],
    pub y: f64,
    pub ytilde: f64,
}

impl Record {
    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; 17] {
        [
            self.t,
            self.l1_a,
            self.l2_a,
            self.linf_a,
            self.l2_u,
            self.linf_u,
            self.h1_a,
            self.hs_a,
            self.hs_u,
            self.l2_pu,
            self.l2_lam_alpha_u,
            self.l2_grad_a,
            self.mass,
            self.momentum[0],
            self.momentum[1],
            self.y,
            self.ytilde,
        ]
    }

    pub fn get(&self, quantity: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == quantity).map(|i| self.values()[i])
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// `(mass, momentum)` = `(∫a, ∫(1+a)u)` over the box; `momentum[1] = 0` in one dimension.
pub fn conserved(state: &SimState) -> (f64, [f64; 2]) {
    let mass = state.a.integral(0);
    let mut momentum = [0.0; 2];
    for (i, m) in momentum.iter_mut().enumerate().take(state.u.ncomp()) {
        let ui = state.u.component(i);
        *m = ui.integral(0) + state.a.inner(&ui).expect("state fields share a grid");
    }
    (mass, momentum)
}

/// `∫u·∇Λ^β σ dx`, evaluated mode by mode.
fn cross_term(u: &SpectralField, sigma: &SpectralField, beta: f64) -> f64 {
    let w = riesz_power(sigma, beta);
    let g = gradient(&w);
    u.inner(&g).expect("fields share a grid")
}

/// `(Y, Ỹ)` with unit proof constants:
///
/// ```text
/// Y = (1 + δ₁μ/(2√γ))‖σ‖² + ‖u‖² + δ₁∫u·∇Λ^{-α}σ
/// Ỹ = ‖Λ^sσ‖² + ‖Λ^su‖² + δ₂∫u·∇Λ^{2s+α-2}σ
/// ```
pub fn energy_functionals(state: &SimState, p: &PhysParams, s: f64, delta1: f64, delta2: f64) -> Result<(f64, f64)> {
    let sigma = sigma_transform(&state.a, p.gamma)?;
    let u = &state.u;
    let ns = sigma.l2_norm().powi(2);
    let nu = u.l2_norm().powi(2);
    let y = (1.0 + delta1 * p.mu / (2.0 * p.gamma.sqrt())) * ns + nu + delta1 * cross_term(u, &sigma, -p.alpha);
    let hs = sobolev_norm(&sigma, s, true).powi(2) + sobolev_norm(u, s, true).powi(2);
    let ytilde = hs + delta2 * cross_term(u, &sigma, 2.0 * s + p.alpha - 2.0);
    Ok((y, ytilde))
}

/// The state with the box means of `a` and `u` removed.
pub fn fluctuation(state: &SimState) -> SimState {
    SimState {
        t: state.t,
        a: state.a.without_mean(),
        u: state.u.without_mean(),
    }
}

/// Diagnostics of one state.
pub fn record(state: &SimState, p: &PhysParams, w: &EnergyWeights) -> Result<Record> {
    let f = fluctuation(state);
    let na = lebesgue_norms(&f.a);
    let nu = lebesgue_norms(&f.u);
    let (mass, momentum) = conserved(state);
    let (y, ytilde) = energy_functionals(&f, p, w.s, w.delta1, w.delta2)?;
    Ok(Record {
        t: state.t,
        l1_a: na.l1,
        l2_a: na.l2,
        linf_a: na.linf,
        l2_u: nu.l2,
        linf_u: nu.linf,
        h1_a: sobolev_norm(&f.a, 1.0, false),
        hs_a: sobolev_norm(&f.a, w.s, false),
        hs_u: sobolev_norm(&f.u, w.s, false),
        l2_pu: leray_project(&f.u).l2_norm(),
        l2_lam_alpha_u: riesz_power(&f.u, p.alpha).l2_norm(),
        l2_grad_a: gradient(&f.a).l2_norm(),
        mass,
        momentum,
        y,
        ytilde,
    })
}

/// Fraction of `‖a‖² + ‖u‖²` (fluctuations) carried by modes whose largest axis
/// index lies in the top eighth of the resolved band. The band ends at `n/3`
/// under dealiasing and at `n/2` otherwise.
pub fn tail_energy_fraction(state: &SimState, dealiased: bool) -> f64 {
    let grid = state.a.grid().clone();
    let n = grid.points_per_axis() as i64;
    let kmax = if dealiased { n / 3 } else { n / 2 };
    let cut = (7 * kmax + 7) / 8;
    let f = fluctuation(state);
    let total = f.a.l2_norm().powi(2) + f.u.l2_norm().powi(2);
    if total == 0.0 {
        return 0.0;
    }
    let tail = |x: &SpectralField| {
        x.weighted_norm(|i| if grid.max_axis_index(i) >= cut { 1.0 } else { 0.0 })
            .powi(2)
    };
    (tail(&f.a) + tail(&f.u)) / total
}

/// Above this tail-energy fraction a run is flagged under-resolved.
pub const TAIL_ENERGY_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
}

impl GridSpec {
    pub fn of(grid: &Grid) -> Self {
        Self {
            dimension: grid.dim(),
            points_per_axis: grid.points_per_axis(),
            box_length: grid.length(),
        }
    }
}

/// Everything that identifies a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub params: PhysParams,
    pub grid: GridSpec,
    pub stepper: StepperConfig,
    pub energy: EnergyWeights,
    pub label: RunLabel,
    pub steps: usize,
    pub max_tail_fraction: f64,
    pub under_resolved: bool,
}

/// Time-ordered diagnostics records of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    meta: SeriesMeta,
    records: Vec<Record>,
}

impl DecaySeries {
    pub fn new(meta: SeriesMeta, records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InsufficientData("a series needs at least one record".into()));
        }
        if records.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Precondition("record times must be strictly increasing".into()));
        }
        Ok(Self { meta, records })
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, quantity: &str) -> Option<Vec<f64>> {
        COLUMNS.iter().position(|c| *c == quantity)?;
        Some(
            self.records
                .iter()
                .map(|r| r.get(quantity).expect("known column"))
                .collect(),
        )
    }

    /// Comma-separated table: header of [`COLUMNS`], then one row per record
    /// with every value printed round-trip exact.
    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let row: Vec<String> = r.values().iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reference exponent (negative) of a quantity from the rate table, if one applies.
pub fn reference_exponent(quantity: &str, dimension: u32, alpha: f64) -> Option<f64> {
    let r = rate_table(dimension, alpha).ok()?;
    let rate = match quantity {
        "L2_a" | "H1_a" | "Hs_a" => r.r1,
        "L2_u" | "Hs_u" => r.r2,
        "Linf_a" | "Linf_u" => r.linf?,
        "L2_grad_a" | "L2_Lam_alpha_u" => r.gradient?,
        "L2_Pu" if r.incompressible_valid => r.incompressible,
        "Y" => 2.0 * r.r1,
        _ => return None,
    };
    Some(-rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub quantity: String,
    pub window: [f64; 2],
    pub points: usize,
    pub exponent: f64,
    pub stderr: f64,
    pub reference: Option<f64>,
    pub relative_deviation: Option<f64>,
    /// Slope over the later half of the window minus slope over the earlier half.
    pub local_drift: f64,
    /// Set when the drift exceeds what a pure power law would show, e.g. a
    /// logarithmic correction that biases the fitted exponent.
    pub drifting: bool,
}

const MIN_FIT_POINTS: usize = 8;

/// Least-squares slope of `log(value)` against `log(1+t)` over the records in `window`.
pub fn fit_series(
    quantity: &str,
    times: &[f64],
    values: &[f64],
    window: [f64; 2],
    reference: Option<f64>,
) -> Result<FitResult> {
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window[0] && **t <= window[1])
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{quantity}: {} records in [{:.3e}, {:.3e}], need {MIN_FIT_POINTS}",
            t.len(),
            window[0],
            window[1]
        )));
    }
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Precondition(format!(
            "{quantity}: non-positive value {bad:e} in fit window"
        )));
    }
    let fit = power_law_fit(&t, &v)?;
    let half = t.len() / 2;
    let early = power_law_fit(&t[..=half], &v[..=half])?;
    let late = power_law_fit(&t[half..], &v[half..])?;
    let local_drift = late.slope - early.slope;
    let drifting = local_drift.abs() > (3.0 * (early.stderr + late.stderr)).max(1e-2);
    let relative_deviation = reference.map(|r| {
        if r == 0.0 {
            (fit.slope - r).abs()
        } else {
            ((fit.slope - r) / r).abs()
        }
    });
    Ok(FitResult {
        quantity: quantity.to_string(),
        window: [t[0], t[t.len() - 1]],
        points: t.len(),
        exponent: fit.slope,
        stderr: fit.stderr,
        reference,
        relative_deviation,
        local_drift,
        drifting,
    })
}

pub fn fit_decay(series: &DecaySeries, quantity: &str, window: [f64; 2]) -> Result<FitResult> {
    let values = series
        .column(quantity)
        .ok_or_else(|| Error::Precondition(format!("unknown quantity `{quantity}`")))?;
    let p = &series.meta.params;
    let reference = reference_exponent(quantity, p.dimension as u32, p.alpha);
    fit_series(quantity, &series.times(), &values, window, reference)
}

/// Scaled-envelope check `value·⟨t⟩^{rate}` over `window`. Refused when the
/// initial mass or the initial momentum vanishes.
pub fn lower_bound_envelope(
    series: &DecaySeries,
    quantity: &str,
    rate: f64,
    window: [f64; 2],
    opts: EnvelopeOptions,
) -> Result<EnvelopeReport> {
    let first = &series.records[0];
    let scale = first.l1_a.max(f64::MIN_POSITIVE);
    if first.mass.abs() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "lower bound needs nonzero initial mass, got {:e}",
            first.mass
        )));
    }
    if first.momentum.iter().all(|m| m.abs() <= 1e-12 * scale.max(1.0)) {
        return Err(Error::Precondition("lower bound needs nonzero initial momentum".into()));
    }
    let values = series
        .column(quantity)
        .ok_or_else(|| Error::Precondition(format!("unknown quantity `{quantity}`")))?;
    let (t, v): (Vec<f64>, Vec<f64>) = series
        .times()
        .into_iter()
        .zip(values)
        .filter(|(t, _)| *t >= window[0] && *t <= window[1])
        .unzip();
    lower_envelope(quantity, &t, &v, rate, opts)
}

/// Local exponent `d log(value)/d log(1+t)` by central differences in `log(1+t)`.
pub fn local_exponents(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            if l == r {
                return f64::NAN;
            }
            (values[r].ln() - values[l].ln()) / (times[r].ln_1p() - times[l].ln_1p())
        })
        .collect()
}

/// Box lengths and the run settings shared by every box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStudy {
    pub params: PhysParams,
    pub scenario: ScenarioSpec,
    pub stepper: StepperConfig,
    pub energy: EnergyWeights,
    /// Grid spacing kept fixed across boxes; the point count follows the length.
    pub spacing: f64,
    pub t_end: f64,
    pub quantities: Vec<String>,
    /// Relative agreement required of local exponents from consecutive boxes.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxComparison {
    pub lengths: [f64; 2],
    /// Largest recorded `t` up to which every compared local exponent agrees.
    pub t_agree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxReport {
    pub lengths: Vec<f64>,
    pub points_per_axis: Vec<usize>,
    pub comparisons: Vec<BoxComparison>,
    /// `t_agree` of the largest pair: the end of the trustworthy fit window.
    pub t_box: f64,
    #[serde(skip)]
    pub series: Vec<DecaySeries>,
}

fn points_for(length: f64, spacing: f64) -> usize {
    let n = (length / spacing).round() as usize;
    (n + n % 2).max(8)
}

/// Up to which time local exponents of the two series agree within `tol`.
/// Both series must share their record times.
pub fn agreement_time(a: &DecaySeries, b: &DecaySeries, quantities: &[String], tol: f64) -> Result<f64> {
    let times = a.times();
    if times != b.times() {
        return Err(Error::Precondition("series have different record times".into()));
    }
    let mut t_agree = times[0];
    let exps: Vec<(Vec<f64>, Vec<f64>)> = quantities
        .iter()
        .map(|q| {
            let va = a
                .column(q)
                .ok_or_else(|| Error::Precondition(format!("unknown quantity `{q}`")))?;
            let vb = b
                .column(q)
                .ok_or_else(|| Error::Precondition(format!("unknown quantity `{q}`")))?;
            Ok((local_exponents(&times, &va), local_exponents(&times, &vb)))
        })
        .collect::<Result<_>>()?;
    for i in 1..times.len() {
        let ok = exps.iter().all(|(ea, eb)| {
            let scale = ea[i].abs().max(eb[i].abs()).max(1e-2);
            (ea[i] - eb[i]).abs() <= tol * scale
        });
        if !ok {
            break;
        }
        t_agree = times[i];
    }
    Ok(t_agree)
}

/// One run per box length at fixed spacing, compared pairwise in order.
pub fn box_sensitivity(study: &BoxStudy, lengths: &[f64]) -> Result<BoxReport> {
    if lengths.len() < 2 {
        return Err(Error::Precondition(format!(
            "box sensitivity needs at least two box lengths, got {}",
            lengths.len()
        )));
    }
    let points: Vec<usize> = lengths.iter().map(|&l| points_for(l, study.spacing)).collect();
    let series = lengths
        .par_iter()
        .zip(&points)
        .map(|(&l, &n)| {
            let grid = make_grid(study.params.dimension, n, l)?;
            let init = make_initial(&study.scenario, &grid, &study.params)?;
            let label = RunLabel {
                scenario: study.scenario.kind.name().to_string(),
                seed: study.scenario.seed,
                config_hash: String::new(),
            };
            run(&init, &study.stepper, &study.params, &study.energy, study.t_end, &label).map_err(|f| f.error)
        })
        .collect::<Result<Vec<_>>>()?;
    let comparisons = lengths
        .windows(2)
        .zip(series.windows(2))
        .map(|(l, s)| {
            Ok(BoxComparison {
                lengths: [l[0], l[1]],
                t_agree: agreement_time(&s[0], &s[1], &study.quantities, study.tolerance)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t_box = comparisons.last().expect("at least one pair").t_agree;
    Ok(BoxReport {
        lengths: lengths.to_vec(),
        points_per_axis: points,
        comparisons,
        t_box,
        series,
    })
}

/// `‖Λ^s f‖²`, exposed for the equivalence-window checks.
pub fn homogeneous_sq(f: &SpectralField, s: f64) -> f64 {
    spectral::sobolev_norm(f, s, true).powi(2)
}
