//! Envelope fits of the pointwise bounds on `Ĝ(t, ξ)`:
//!
//! * `α < 1`, low frequency: `|Ĝ₁₁| ≤ C e^{-ct|ξ|^{2-α}}` and
//!   `|Ĝ₂₁| = γ|Ĝ₁₂| ≤ C|ξ|^{1-α} e^{-ct|ξ|^{2-α}}`;
//! * `α < 1`, high frequency: `|Ĝᵢⱼ| ≤ C e^{-ct}`;
//! * `α = 1`: `|Ĝᵢⱼ| ≤ C e^{-c|ξ|t}`.
//!
//! For each case the rate `c` is fitted as half the smallest observed
//! `-log(|g|/w)/φ` over samples with `φ ≥ phi_min`, and the front constant `C`
//! as the smallest value covering every sample. A case passes when both are
//! finite and positive and the front constant barely moves on a refined grid.

use serde::{Deserialize, Serialize};

use super::green::{classify_regime, green_entries, Regime};
use super::quadrature::logspace;
use crate::error::{Error, Result};
use crate::model::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseOptions {
    /// Only samples with `φ ≥ phi_min` enter the rate fit.
    pub phi_min: f64,
    /// Largest accepted growth of the front constant when the grid is refined.
    pub refinement_ratio: f64,
}

impl Default for PointwiseOptions {
    fn default() -> Self {
        Self {
            phi_min: 10.0,
            refinement_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: f64,
    pub xi: f64,
    /// `|g|/w` at this sample.
    pub ratio: f64,
}

/// Fitted envelope for one bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub entry: String,
    pub samples: usize,
    pub fit_samples: usize,
    pub c_front: f64,
    pub c_exp: f64,
    pub c_front_refined: f64,
    /// Sample fixing the rate constant.
    pub binding_sample: Option<SamplePoint>,
    pub pass: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub params: PhysParams,
    pub grid_points: usize,
    pub options: PointwiseOptions,
    /// Largest `||Ĝ₂₁| - γ|Ĝ₁₂|| / max(|Ĝ₂₁|, tiny)` over the grid.
    pub identity_error: f64,
    pub cases: Vec<CaseReport>,
    pub pass: bool,
}

struct CaseSpec {
    name: &'static str,
    entry: (usize, usize),
    member: fn(Regime) -> bool,
    weight: fn(f64, &PhysParams) -> f64,
    phi: fn(f64, f64, &PhysParams) -> f64,
}

const ENTRY_NAMES: [[&str; 2]; 2] = [["G11", "G12"], ["G21", "G22"]];

fn case_specs(p: &PhysParams) -> Vec<CaseSpec> {
    let unit = |_: f64, _: &PhysParams| 1.0;
    let all = |_: Regime| true;
    if p.alpha == 1.0 {
        [(0, 0), (0, 1), (1, 0), (1, 1)]
            .into_iter()
            .map(|entry| CaseSpec {
                name: "alpha_one",
                entry,
                member: all,
                weight: unit,
                phi: |t, xi, _| xi * t,
            })
            .collect()
    } else {
        let low = |r: Regime| r == Regime::LowFrequency;
        let high = |r: Regime| r != Regime::LowFrequency;
        let parabolic = |t: f64, xi: f64, p: &PhysParams| t * xi.powf(2.0 - p.alpha);
        let mut v = vec![
            CaseSpec {
                name: "low_frequency",
                entry: (0, 0),
                member: low,
                weight: unit,
                phi: parabolic,
            },
            CaseSpec {
                name: "low_frequency",
                entry: (1, 0),
                member: low,
                weight: |xi, p| xi.powf(1.0 - p.alpha),
                phi: parabolic,
            },
        ];
        for entry in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            v.push(CaseSpec {
                name: "high_frequency",
                entry,
                member: high,
                weight: unit,
                phi: |t, _, _| t,
            });
        }
        v
    }
}

fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push((w[0] * w[1]).sqrt());
    }
    out.extend(grid.last());
    out
}

struct Obs {
    t: f64,
    xi: f64,
    ratio: f64,
    phi: f64,
}

fn observations(spec: &CaseSpec, p: &PhysParams, times: &[f64], xis: &[f64]) -> Vec<Obs> {
    let mut out = Vec::new();
    for &xi in xis {
        if !(spec.member)(classify_regime(xi, p)) {
            continue;
        }
        let w = (spec.weight)(xi, p);
        for &t in times {
            let g = green_entries(t, xi, p)[spec.entry.0][spec.entry.1];
            out.push(Obs {
                t,
                xi,
                ratio: g.abs() / w,
                phi: (spec.phi)(t, xi, p),
            });
        }
    }
    out
}

fn front(obs: &[Obs], c_exp: f64) -> f64 {
    obs.iter().fold(0.0, |m, o| m.max(o.ratio * (c_exp * o.phi).exp()))
}

fn run_case(spec: &CaseSpec, p: &PhysParams, times: &[f64], xis: &[f64], opts: &PointwiseOptions) -> CaseReport {
    let entry = ENTRY_NAMES[spec.entry.0][spec.entry.1].to_string();
    let obs = observations(spec, p, times, xis);
    let mut report = CaseReport {
        case: spec.name.to_string(),
        entry,
        samples: obs.len(),
        fit_samples: 0,
        c_front: f64::NAN,
        c_exp: f64::NAN,
        c_front_refined: f64::NAN,
        binding_sample: None,
        pass: false,
        message: String::new(),
    };
    if obs.is_empty() {
        report.pass = true;
        report.message = "no grid samples in this regime".into();
        return report;
    }
    let mut kappa = f64::INFINITY;
    for o in obs.iter().filter(|o| o.phi >= opts.phi_min) {
        report.fit_samples += 1;
        if o.ratio > 0.0 {
            let k = -o.ratio.ln() / o.phi;
            if k < kappa {
                kappa = k;
                report.binding_sample = Some(SamplePoint {
                    t: o.t,
                    xi: o.xi,
                    ratio: o.ratio,
                });
            }
        }
    }
    if report.fit_samples == 0 {
        report.message = format!("no samples reach phi >= {}", opts.phi_min);
        return report;
    }
    let c_exp = 0.5 * kappa;
    report.c_exp = c_exp;
    if !(c_exp > 0.0) {
        report.message = "no decay: the binding sample does not shrink with phi".into();
        return report;
    }
    if !c_exp.is_finite() {
        // every fitted sample underflowed; any finite rate is consistent
        report.c_exp = 1.0;
    }
    report.c_front = front(&obs, report.c_exp);
    let refined = observations(spec, p, &refine(times), &refine(xis));
    report.c_front_refined = front(&refined, report.c_exp);
    let stable = report.c_front_refined <= opts.refinement_ratio * report.c_front;
    report.pass = report.c_front.is_finite() && report.c_front > 0.0 && stable;
    report.message = if report.pass {
        "envelope covers all samples".into()
    } else if !stable {
        format!(
            "front constant grows from {:.3e} to {:.3e} under refinement",
            report.c_front, report.c_front_refined
        )
    } else {
        "front constant is not finite".into()
    };
    report
}

/// Fits the envelope constants on the tensor grid `times × xis`.
pub fn pointwise_bound_audit(
    p: &PhysParams,
    times: &[f64],
    xis: &[f64],
    opts: PointwiseOptions,
) -> Result<PointwiseReport> {
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| *x > 0.0);
    if times.len() < 2 || xis.len() < 2 || !sorted(times) || !sorted(xis) {
        return Err(Error::Precondition(
            "audit grids need at least two positive, increasing values".into(),
        ));
    }
    let mut identity_error: f64 = 0.0;
    for &xi in xis {
        for &t in times {
            let g = green_entries(t, xi, p);
            let (a, b) = (g[1][0].abs(), p.gamma * g[0][1].abs());
            identity_error = identity_error.max((a - b).abs() / a.max(f64::MIN_POSITIVE));
        }
    }
    let cases: Vec<CaseReport> = case_specs(p)
        .iter()
        .map(|s| run_case(s, p, times, xis, &opts))
        .collect();
    Ok(PointwiseReport {
        params: *p,
        grid_points: times.len() * xis.len(),
        options: opts,
        identity_error,
        pass: identity_error <= 1e-12 && cases.iter().all(|c| c.pass),
        cases,
    })
}

/// The default audit grid: 100 log-spaced values on `[10⁻³, 10³]` for both `t` and `|ξ|`.
pub fn default_audit_grid() -> (Vec<f64>, Vec<f64>) {
    (logspace(1e-3, 1e3, 100), logspace(1e-3, 1e3, 100))
}
