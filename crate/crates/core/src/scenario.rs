//! Initial data: smooth periodized Gaussian bumps with prescribed amplitude,
//! mean density deviation and net momentum.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::conserved;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::{PhysParams, SimState, RHO_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// A single positive bump in `a` and in `u_x`: nonzero mass and momentum.
    LowerBound,
    /// A dipole in `a` with its zero mode removed, and zero net momentum.
    ZeroMean,
    /// Gaussian-filtered random-phase fields.
    RandomPhase,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LowerBound => "lower-bound",
            Self::ZeroMean => "zero-mean",
            Self::RandomPhase => "random-phase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Peak value of the density bump and of the velocity bump.
    pub amplitude: f64,
    /// Standard deviation of the Gaussian.
    pub width: f64,
    /// Box mean of `a₀`; the construction's own mean when absent.
    pub mean_a: Option<f64>,
    /// `∫ρ₀u₀ dx`; the construction's own momentum when absent.
    pub momentum: Option<[f64; 2]>,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::LowerBound,
            amplitude: 1e-2,
            width: 3.0,
            mean_a: None,
            momentum: None,
            seed: 0,
        }
    }
}

/// `Σ_m exp(-|x - c - mL|²/(2w²))` over the nearest images.
fn periodized_gaussian(grid: &Arc<Grid>, center: [f64; 2], width: f64) -> SpectralField {
    let l = grid.length();
    let dim = grid.dim();
    let images: &[f64] = &[-1.0, 0.0, 1.0];
    SpectralField::scalar_from_fn(grid, |x| {
        let axis = |d: usize| -> f64 {
            images
                .iter()
                .map(|m| {
                    let r = x[d] - center[d] - m * l;
                    (-r * r / (2.0 * width * width)).exp()
                })
                .sum()
        };
        if dim == 1 {
            axis(0)
        } else {
            axis(0) * axis(1)
        }
    })
}

fn random_phase_field(grid: &Arc<Grid>, width: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let kmag = grid.kmag();
    let coeffs: Vec<Complex64> = kmag
        .iter()
        .map(|&k| {
            let theta = rng.gen_range(0.0..2.0 * PI);
            Complex64::from_polar((-0.5 * k * k * width * width).exp(), theta)
        })
        .collect();
    let mut data = coeffs;
    grid.inverse(&mut data);
    let samples: Vec<f64> = data.iter().map(|z| z.re).collect();
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let samples = samples.into_iter().map(|x| x / peak).collect();
    SpectralField::from_physical(grid, vec![samples]).expect("sample count matches grid")
}

fn set_mean(f: &mut SpectralField, mean: f64) {
    f.coeffs_mut(0)[0] = Complex64::new(mean, 0.0);
}

fn invalid(name: &'static str, value: f64, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason: reason.into(),
    }
}

/// Builds `(a₀, u₀)` at `t = 0` for the scenario, using `seed` for random phases.
pub fn make_initial(spec: &ScenarioSpec, grid: &Arc<Grid>, p: &PhysParams) -> Result<SimState> {
    if !(spec.amplitude > 0.0 && spec.amplitude.is_finite()) {
        return Err(invalid("amplitude", spec.amplitude, "must be positive"));
    }
    if !(spec.width > 0.0 && spec.width.is_finite()) {
        return Err(invalid("width", spec.width, "must be positive"));
    }
    if grid.dim() != p.dimension {
        return Err(Error::ShapeMismatch);
    }
    let amp = spec.amplitude;
    let l = grid.length();
    let center = [0.5 * l, 0.5 * l];
    let dim = grid.dim();
    let vector = |f: &SpectralField, dir: [f64; 2]| {
        SpectralField::from_components((0..dim).map(|d| f.scale(dir[d])).collect()).expect("shared grid")
    };

    let (mut a, u, default_momentum) = match spec.kind {
        ScenarioKind::LowerBound => {
            let g = periodized_gaussian(grid, center, spec.width).scale(amp);
            let u = vector(&g, [1.0, 0.0]);
            (g, u, None)
        }
        ScenarioKind::ZeroMean => {
            if spec.mean_a.is_some_and(|m| m != 0.0) {
                return Err(invalid(
                    "mean_a",
                    spec.mean_a.unwrap_or_default(),
                    "zero-mean scenario needs mean_a = 0",
                ));
            }
            let shift = 1.5 * spec.width;
            let left = periodized_gaussian(grid, [center[0] - shift, center[1]], spec.width);
            let right = periodized_gaussian(grid, [center[0] + shift, center[1]], spec.width);
            let mut a = left.sub(&right)?.scale(amp);
            set_mean(&mut a, 0.0);
            let u = vector(&left.add(&right)?.scale(0.5 * amp), [1.0, 0.0]);
            (a, u, Some([0.0, 0.0]))
        }
        ScenarioKind::RandomPhase => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let a = random_phase_field(grid, spec.width, &mut rng).scale(amp);
            let parts = (0..dim)
                .map(|_| random_phase_field(grid, spec.width, &mut rng).scale(amp))
                .collect();
            (a, SpectralField::from_components(parts)?, None)
        }
    };
    if let Some(m) = spec.mean_a {
        set_mean(&mut a, m);
    }

    let mut state = SimState { t: 0.0, a, u };
    let min_rho = state.min_rho();
    if !(min_rho > RHO_MIN) {
        return Err(invalid(
            "amplitude",
            amp,
            &format!("initial density reaches {min_rho:.3e}; not positive"),
        ));
    }

    // u ← u + c with c = (P - ∫(1+a)u)/(V + ∫a) matches the momentum exactly.
    if let Some(target) = spec.momentum.or(default_momentum) {
        let (mass, current) = conserved(&state);
        let denom = grid.volume() + mass;
        for (d, (t, c)) in target.iter().zip(current).enumerate().take(dim) {
            let shift = (t - c) / denom;
            state.u.coeffs_mut(d)[0] += shift;
        }
    }
    Ok(state)
}
