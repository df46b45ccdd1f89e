//! Exponential time differencing for the perturbation system.
//!
//! Per mode the compressible pair `(â, v̂)` is advanced with the Green's
//! matrix and the incompressible part `ℙû` with `e^{-μ|ξ|^α h}`; the
//! nonlinear forcing `(F, G, H)` enters through the integrated weights
//!
//! ```text
//! ETD1:     x₁ = Ĝ(h)x₀ + P₁N(x₀)
//! ETD-RK2:  y = Ĝ(h)x₀ + P₁N(x₀),   x₁ = y + P₂(N(y) - N(x₀))
//! ```
//!
//! with `P₁ = ∫₀ʰĜ(s)ds` and `P₂ = h⁻¹∫₀ʰĜ(h-s)s ds`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    record, tail_energy_fraction, DecaySeries, EnergyWeights, GridSpec, Record, SeriesMeta, TAIL_ENERGY_LIMIT,
};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::linear::green::{etd_weights, green_entries, heat_symbol, EtdWeights};
use crate::model::{a_from_sigma, nonlinearities, rhs_sigma, sigma_transform, PhysParams, SimState};
use crate::spectral::{
    compressible_velocity, divergence, gradient, inverse_riesz_div, leray_project, riesz_power, sobolev_norm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Etd1,
    EtdRk2,
}

/// Variables in which the nonlinear forcing is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// `(a, u)`.
    Perturbation,
    /// `(σ, u)`, with `σ/√γ` propagated by the same Green's matrix.
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Positivity floor for `ρ`.
    pub rho_min: f64,
    pub max_steps: usize,
    /// Steps between diagnostics records.
    pub output_stride: usize,
    pub formulation: Formulation,
    /// Drops the nonlinear forcing.
    pub linear_only: bool,
    /// Upper cap used by [`stable_dt`].
    pub dt_max: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            scheme: Scheme::EtdRk2,
            dealias: true,
            rho_min: 1e-3,
            max_steps: 10_000_000,
            output_stride: 10,
            formulation: Formulation::Perturbation,
            linear_only: false,
            dt_max: 1.0,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: f64, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason: reason.into(),
            })
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt, "must be positive and finite");
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return bad("rho_min", self.rho_min, "must lie in (0, 1)");
        }
        if self.max_steps == 0 {
            return bad("max_steps", 0.0, "must be at least 1");
        }
        if self.output_stride == 0 {
            return bad("output_stride", 0.0, "must be at least 1");
        }
        if !(self.dt_max > 0.0) {
            return bad("dt_max", self.dt_max, "must be positive");
        }
        Ok(())
    }
}

/// Identifies a run in its series metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLabel {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
}

/// Split variables: `s` is `a` or `σ/√γ`, `v = Λ⁻¹div u`, `pu = ℙu`.
#[derive(Debug, Clone)]
struct Vars {
    s: SpectralField,
    v: SpectralField,
    pu: SpectralField,
}

impl Vars {
    fn sub(&self, o: &Vars) -> Result<Vars> {
        Ok(Vars {
            s: self.s.sub(&o.s)?,
            v: self.v.sub(&o.v)?,
            pu: self.pu.sub(&o.pu)?,
        })
    }
}

/// `(e^z, φ₁(z), φ₂(z))` with `φ₁ = (e^z - 1)/z`, `φ₂ = (e^z - 1 - z)/z²`.
fn phi_functions(z: f64) -> [f64; 3] {
    if z.abs() < 1e-2 {
        let phi1 = 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0))));
        let phi2 = 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z * (1.0 / 720.0 + z / 5040.0))));
        [z.exp(), phi1, phi2]
    } else {
        let em1 = z.exp_m1();
        [z.exp(), em1 / z, (em1 - z) / (z * z)]
    }
}

/// Step weights for one grid, configuration and time step.
pub struct Stepper {
    grid: Arc<Grid>,
    params: PhysParams,
    cfg: StepperConfig,
    h: f64,
    slot: Vec<u32>,
    pair: Vec<EtdWeights>,
    /// `[e^{-μ|ξ|^α h}, hφ₁, hφ₂]` per slot.
    heat: Vec<[f64; 3]>,
}

impl Stepper {
    /// Precomputes the weights for step `h` once per distinct `|ξ|`.
    pub fn new(grid: &Arc<Grid>, cfg: &StepperConfig, p: &PhysParams, h: f64) -> Result<Self> {
        cfg.validate()?;
        p.validate()?;
        if grid.dim() != p.dimension {
            return Err(Error::ShapeMismatch);
        }
        let mut index: HashMap<u64, u32> = HashMap::new();
        let mut distinct = Vec::new();
        let slot = grid
            .kmag()
            .iter()
            .map(|k| {
                *index.entry(k.to_bits()).or_insert_with(|| {
                    distinct.push(*k);
                    (distinct.len() - 1) as u32
                })
            })
            .collect();
        let pair = distinct
            .par_iter()
            .map(|&k| etd_weights(h, k, p))
            .collect::<Result<Vec<_>>>()?;
        let heat = distinct
            .iter()
            .map(|&k| {
                let z = if k == 0.0 { 0.0 } else { -p.mu * k.powf(p.alpha) * h };
                let [e, p1, p2] = phi_functions(z);
                [e, h * p1, h * p2]
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            params: *p,
            cfg: *cfg,
            h,
            slot,
            pair,
            heat,
        })
    }

    pub fn dt(&self) -> f64 {
        self.h
    }

    fn split(&self, state: &SimState) -> Result<Vars> {
        let s = match self.cfg.formulation {
            Formulation::Perturbation => state.a.clone(),
            Formulation::Sigma => sigma_transform(&state.a, self.params.gamma)?.scale(1.0 / self.params.gamma.sqrt()),
        };
        Ok(Vars {
            s,
            v: inverse_riesz_div(&state.u),
            pu: leray_project(&state.u),
        })
    }

    fn join(&self, x: &Vars, t: f64) -> Result<SimState> {
        let a = match self.cfg.formulation {
            Formulation::Perturbation => x.s.clone(),
            Formulation::Sigma => a_from_sigma(&x.s.scale(self.params.gamma.sqrt()), self.params.gamma)?,
        };
        Ok(SimState {
            t,
            a,
            u: compressible_velocity(&x.v).add(&x.pu)?,
        })
    }

    /// Forcing `(F, G, H)` in the stepper's variables.
    fn forcing(&self, x: &Vars) -> Result<Vars> {
        let p = &self.params;
        let state = self.join(x, 0.0)?;
        match self.cfg.formulation {
            Formulation::Perturbation => {
                let n = nonlinearities(&state, p, self.cfg.dealias)?;
                Ok(Vars {
                    s: n.f,
                    v: n.g,
                    pu: n.h,
                })
            }
            Formulation::Sigma => {
                let sg = p.gamma.sqrt();
                let sigma = x.s.scale(sg);
                let (ds, du) = rhs_sigma(&sigma, &state.u, p, self.cfg.dealias)?;
                let ns = ds.add(&divergence(&state.u).scale(sg))?;
                let nu = du
                    .add(&riesz_power(&state.u, p.alpha).scale(p.mu))?
                    .add(&gradient(&sigma).scale(sg))?;
                Ok(Vars {
                    s: ns.scale(1.0 / sg),
                    v: inverse_riesz_div(&nu),
                    pu: leray_project(&nu),
                })
            }
        }
    }

    /// `base + W·f` per mode, with `W` the first (`second = false`) or second weight;
    /// when `propagate` is set `base` is first advanced by `Ĝ(h)`, `e^{-μ|ξ|^α h}`.
    fn combine(&self, base: &Vars, f: Option<&Vars>, second: bool, propagate: bool) -> Result<Vars> {
        let n = self.grid.len();
        let (bs, bv) = (base.s.coeffs(0), base.v.coeffs(0));
        let pair: Vec<(Complex64, Complex64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let slot = self.slot[i] as usize;
                let w = &self.pair[slot];
                let (mut s, mut v) = (bs[i], bv[i]);
                if propagate {
                    let e = &w.propagator;
                    (s, v) = (e[0][0] * s + e[0][1] * v, e[1][0] * s + e[1][1] * v);
                }
                if let Some(f) = f {
                    let m = if second { &w.second } else { &w.first };
                    let (fs, fv) = (f.s.coeffs(0)[i], f.v.coeffs(0)[i]);
                    s += m[0][0] * fs + m[0][1] * fv;
                    v += m[1][0] * fs + m[1][1] * fv;
                }
                (s, v)
            })
            .collect();
        let (s, v): (Vec<Complex64>, Vec<Complex64>) = pair.into_iter().unzip();
        let mut pu = base.pu.map_modes(|i, z| {
            if propagate {
                z * self.heat[self.slot[i] as usize][0]
            } else {
                z
            }
        });
        if let Some(f) = f {
            let k = if second { 2 } else { 1 };
            for c in 0..pu.ncomp() {
                let src = f.pu.coeffs(c);
                for (i, z) in pu.coeffs_mut(c).iter_mut().enumerate() {
                    *z += self.heat[self.slot[i] as usize][k] * src[i];
                }
            }
        }
        Ok(Vars {
            s: SpectralField::from_coeffs(&self.grid, vec![s])?,
            v: SpectralField::from_coeffs(&self.grid, vec![v])?,
            pu,
        })
    }

    /// One step of size [`Stepper::dt`].
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        if **state.a.grid() != *self.grid {
            return Err(Error::ShapeMismatch);
        }
        let x0 = self.split(state)?;
        let x1 = if self.cfg.linear_only {
            self.combine(&x0, None, false, true)?
        } else {
            let n0 = self.forcing(&x0)?;
            let y = self.combine(&x0, Some(&n0), false, true)?;
            match self.cfg.scheme {
                Scheme::Etd1 => y,
                Scheme::EtdRk2 => {
                    let n1 = self.forcing(&y)?;
                    self.combine(&y, Some(&n1.sub(&n0)?), true, false)?
                }
            }
        };
        let t = state.t + self.h;
        if !(x1.s.is_finite() && x1.v.is_finite() && x1.pu.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let next = self.join(&x1, t)?;
        next.check_positivity(self.cfg.rho_min)?;
        Ok(next)
    }
}

/// One step of size `cfg.dt`. Rebuilds the weights; use [`Stepper`] for repeated steps.
pub fn step(state: &SimState, cfg: &StepperConfig, p: &PhysParams) -> Result<SimState> {
    Stepper::new(state.a.grid(), cfg, p, cfg.dt)?.step(state)
}

/// Exact solution of the linearized system after time `t`.
pub fn propagate_linear(state: &SimState, t: f64, p: &PhysParams) -> Result<SimState> {
    let grid = state.a.grid().clone();
    let kmag = grid.kmag();
    let (a, v) = (state.a.coeffs(0), inverse_riesz_div(&state.u));
    let v = v.coeffs(0);
    let pairs: Vec<(Complex64, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let g = green_entries(t, kmag[i], p);
            (g[0][0] * a[i] + g[0][1] * v[i], g[1][0] * a[i] + g[1][1] * v[i])
        })
        .collect();
    let (a, v): (Vec<Complex64>, Vec<Complex64>) = pairs.into_iter().unzip();
    let pu = leray_project(&state.u).map_modes(|i, z| z * heat_symbol(t, kmag[i], p.mu, p.alpha));
    let v = SpectralField::from_coeffs(&grid, vec![v])?;
    Ok(SimState {
        t: state.t + t,
        a: SpectralField::from_coeffs(&grid, vec![a])?,
        u: compressible_velocity(&v).add(&pu)?,
    })
}

/// Advective and pressure constants of [`stable_dt`], calibrated by bisecting
/// the largest stable step on weakly damped random-phase data.
pub const C_ADV: f64 = 1.75;
pub const C_PRES: f64 = 3.5;

/// `min(C_adv·Δx/‖u‖_∞, C_pres·Δx/√(γ max ρ^{γ-1}), dt_max)`.
pub fn stable_dt(state: &SimState, cfg: &StepperConfig, p: &PhysParams) -> f64 {
    let dx = state.a.grid().spacing();
    let u = state.u.physical();
    let umax = (0..state.a.grid().len())
        .map(|i| u.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let rho_pow = state
        .a
        .physical_component(0)
        .iter()
        .map(|a| (1.0 + a).powf(p.gamma - 1.0))
        .fold(0.0f64, f64::max);
    let adv = if umax > 0.0 { C_ADV * dx / umax } else { f64::INFINITY };
    let pres = C_PRES * dx / (p.gamma * rho_pow).sqrt();
    adv.min(pres).min(cfg.dt_max)
}

/// Growth of `‖(a, u)‖_{H²}` beyond this factor counts as an instability.
pub const GROWTH_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Stability {
    Stable,
    /// A step failed (non-finite values or lost positivity).
    Failed(Error),
    /// The `H²` norm grew past [`GROWTH_LIMIT`] times its initial value.
    Growth {
        t: f64,
        factor: f64,
    },
}

/// Steps `state` with a fixed `dt` up to `horizon` and classifies the outcome.
pub fn probe_stability(
    state: &SimState,
    cfg: &StepperConfig,
    p: &PhysParams,
    dt: f64,
    horizon: f64,
) -> Result<Stability> {
    let norm = |s: &SimState| sobolev_norm(&s.a, 2.0, false) + sobolev_norm(&s.u, 2.0, false);
    let cfg = StepperConfig {
        dt,
        dt_max: cfg.dt_max.max(dt),
        ..*cfg
    };
    let stepper = Stepper::new(state.a.grid(), &cfg, p, dt)?;
    let n0 = norm(state);
    let mut x = state.clone();
    for _ in 0..(horizon / dt).ceil() as usize {
        x = match stepper.step(&x) {
            Ok(y) => y,
            Err(e) => return Ok(Stability::Failed(e)),
        };
        let factor = norm(&x) / n0;
        if factor > GROWTH_LIMIT {
            return Ok(Stability::Growth { t: x.t, factor });
        }
    }
    Ok(Stability::Stable)
}

/// A run stopped by a step error; carries what was produced before it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<DecaySeries>,
    pub last_good: SimState,
}

/// Advances `initial` to `t_end` with a uniform step `t_end / ⌈t_end/dt⌉ ≤ dt`,
/// recording diagnostics every `output_stride` steps and at `t_end`.
pub fn run(
    initial: &SimState,
    cfg: &StepperConfig,
    p: &PhysParams,
    energy: &EnergyWeights,
    t_end: f64,
    label: &RunLabel,
) -> std::result::Result<DecaySeries, Box<RunFailure>> {
    let fail = |error: Error, partial: Option<DecaySeries>, last_good: &SimState| {
        Box::new(RunFailure {
            error,
            partial,
            last_good: last_good.clone(),
        })
    };
    if !(t_end >= 0.0 && t_end.is_finite()) {
        let e = Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "must be finite and non-negative".into(),
        };
        return Err(fail(e, None, initial));
    }
    if let Err(e) = cfg.validate().and_then(|_| energy.validate()) {
        return Err(fail(e, None, initial));
    }
    let steps = (t_end / cfg.dt).ceil() as usize;
    if steps > cfg.max_steps {
        let e = Error::Precondition(format!("{steps} steps needed, max_steps = {}", cfg.max_steps));
        return Err(fail(e, None, initial));
    }
    let grid = initial.a.grid().clone();
    let mut meta = SeriesMeta {
        params: *p,
        grid: GridSpec::of(&grid),
        stepper: *cfg,
        energy: *energy,
        label: label.clone(),
        steps,
        max_tail_fraction: 0.0,
        under_resolved: false,
    };
    let mut records: Vec<Record> = Vec::new();
    let observe = |state: &SimState, records: &mut Vec<Record>, meta: &mut SeriesMeta| -> Result<()> {
        let r = record(state, p, energy)?;
        if !r.is_finite() {
            return Err(Error::NonFinite { t: state.t });
        }
        let tail = tail_energy_fraction(state, cfg.dealias);
        meta.max_tail_fraction = meta.max_tail_fraction.max(tail);
        meta.under_resolved |= tail > TAIL_ENERGY_LIMIT;
        records.push(r);
        Ok(())
    };
    let partial = |records: &[Record], meta: &SeriesMeta| DecaySeries::new(meta.clone(), records.to_vec()).ok();

    let mut state = SimState {
        t: 0.0,
        ..initial.clone()
    };
    if let Err(e) = state.check_positivity(cfg.rho_min) {
        return Err(fail(e, None, &state));
    }
    if let Err(e) = observe(&state, &mut records, &mut meta) {
        return Err(fail(e, None, &state));
    }
    if steps == 0 {
        return DecaySeries::new(meta, records).map_err(|e| fail(e, None, initial));
    }
    let h = t_end / steps as f64;
    let stepper = match Stepper::new(&grid, cfg, p, h) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, None, initial)),
    };
    for n in 1..=steps {
        let mut next = match stepper.step(&state) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, partial(&records, &meta), &state)),
        };
        next.t = if n == steps { t_end } else { n as f64 * h };
        state = next;
        if n % cfg.output_stride == 0 || n == steps {
            if let Err(e) = observe(&state, &mut records, &mut meta) {
                return Err(fail(e, partial(&records, &meta), &state));
            }
        }
    }
    DecaySeries::new(meta, records).map_err(|e| fail(e, None, &state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::conserved;
    use crate::grid::make_grid;
    use crate::scenario::{make_initial, ScenarioKind, ScenarioSpec};

    fn params(dim: usize) -> PhysParams {
        PhysParams::new(0.5, 1.0, 1.0, dim).unwrap()
    }

    fn bump(dim: usize, n: usize, l: f64, amp: f64) -> SimState {
        let g = make_grid(dim, n, l).unwrap();
        let spec = ScenarioSpec {
            amplitude: amp,
            width: 2.0,
            ..Default::default()
        };
        make_initial(&spec, &g, &params(dim)).unwrap()
    }

    fn rel(a: &SimState, b: &SimState) -> f64 {
        let da = a.a.sub(&b.a).unwrap().l2_norm() + a.u.sub(&b.u).unwrap().l2_norm();
        da / (b.a.l2_norm() + b.u.l2_norm())
    }

    #[test]
    fn phi_functions_are_continuous() {
        for z in [-1e-2, -0.5, -10.0, -1e-8] {
            let [e, p1, p2] = phi_functions(z);
            assert!((e - z.exp()).abs() < 1e-15);
            let em1 = z.exp_m1();
            assert!((p1 - em1 / z).abs() < 1e-13);
            if z.abs() > 1e-3 {
                assert!((p2 - (em1 - z) / (z * z)).abs() < 1e-11);
            }
        }
        let below = phi_functions(-0.0099999);
        let above = phi_functions(-0.0100001);
        assert!((below[2] - above[2]).abs() < 1e-7);
        assert_eq!(phi_functions(0.0), [1.0, 1.0, 0.5]);
    }

    #[test]
    fn linear_mode_is_the_exact_propagator() {
        let s = bump(2, 32, 30.0, 0.1);
        let p = params(2);
        let cfg = StepperConfig {
            dt: 0.7,
            linear_only: true,
            ..Default::default()
        };
        let one = step(&s, &cfg, &p).unwrap();
        let exact = propagate_linear(&s, 0.7, &p).unwrap();
        assert!(rel(&one, &exact) < 1e-12);
        let stepper = Stepper::new(s.a.grid(), &cfg, &p, 0.7).unwrap();
        let mut x = s.clone();
        for _ in 0..10 {
            x = stepper.step(&x).unwrap();
        }
        assert!(rel(&x, &propagate_linear(&s, 7.0, &p).unwrap()) < 1e-10);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = make_grid(2, 16, 10.0).unwrap();
        let s = SimState::equilibrium(&g);
        for scheme in [Scheme::Etd1, Scheme::EtdRk2] {
            let cfg = StepperConfig {
                scheme,
                ..Default::default()
            };
            let next = step(&s, &cfg, &params(2)).unwrap();
            assert_eq!(next.a.l2_norm() + next.u.l2_norm(), 0.0);
        }
    }

    #[test]
    fn reassembly_identity_after_a_step() {
        let s = bump(2, 32, 30.0, 0.1);
        let next = step(&s, &StepperConfig::default(), &params(2)).unwrap();
        let v = inverse_riesz_div(&next.u);
        let gap = next
            .u
            .sub(&compressible_velocity(&v))
            .unwrap()
            .sub(&leray_project(&next.u))
            .unwrap();
        assert!(gap.l2_norm() <= 1e-12 * next.u.l2_norm());
    }

    #[test]
    fn sigma_formulation_agrees_to_second_order() {
        let s = bump(2, 64, 30.0, 0.05);
        let p = PhysParams::new(0.5, 1.0, 1.6, 2).unwrap();
        let gap = |dt: f64| {
            let a = StepperConfig {
                dt,
                ..Default::default()
            };
            let b = StepperConfig {
                formulation: Formulation::Sigma,
                ..a
            };
            let sa = Stepper::new(s.a.grid(), &a, &p, dt).unwrap();
            let sb = Stepper::new(s.a.grid(), &b, &p, dt).unwrap();
            let (mut x, mut y) = (s.clone(), s.clone());
            for _ in 0..(1.0 / dt).round() as usize {
                x = sa.step(&x).unwrap();
                y = sb.step(&y).unwrap();
            }
            rel(&x, &y)
        };
        let (g1, g2) = (gap(0.05), gap(0.025));
        assert!(g1 < 1e-5, "{g1}");
        assert!((g1 / g2 - 4.0).abs() < 0.5, "{g1} {g2}");
    }

    #[test]
    fn run_records_and_conserves_mass() {
        let s = bump(1, 64, 50.0, 0.05);
        let p = params(1);
        let cfg = StepperConfig {
            dt: 0.25,
            output_stride: 4,
            ..Default::default()
        };
        let w = EnergyWeights::for_params(&p, 2.0);
        let series = run(&s, &cfg, &p, &w, 10.0, &RunLabel::default()).unwrap();
        let times = series.times();
        assert_eq!(times.len(), 11);
        assert_eq!(*times.last().unwrap(), 10.0);
        let m0 = conserved(&s).0;
        for r in series.records() {
            assert!((r.mass - m0).abs() <= 1e-12);
        }
        assert!(!series.meta().under_resolved);

        let only = run(&s, &cfg, &p, &w, 0.0, &RunLabel::default()).unwrap();
        assert_eq!(only.records().len(), 1);
        assert_eq!(only.records()[0].t, 0.0);
    }

    #[test]
    fn run_reports_positivity_failure_with_last_good_state() {
        let g = make_grid(1, 64, 20.0).unwrap();
        let p = params(1);
        let k = 2.0 * std::f64::consts::PI / 20.0;
        let u = SpectralField::vector_from_fn(&g, |x| [0.9 * (k * x[0]).sin(), 0.0]);
        let s = SimState::new(0.0, SpectralField::zeros(&g, 1), u).unwrap();
        let cfg = StepperConfig {
            dt: 0.05,
            rho_min: 0.75,
            output_stride: 1,
            ..Default::default()
        };
        let f = run(
            &s,
            &cfg,
            &p,
            &EnergyWeights::for_params(&p, 2.0),
            10.0,
            &RunLabel::default(),
        )
        .unwrap_err();
        assert!(matches!(f.error, Error::Positivity { .. }), "{:?}", f.error);
        assert!(f.last_good.min_rho() >= 0.75 && f.last_good.t > 0.0);
        assert!(f.partial.is_some());

        let low = ScenarioSpec {
            kind: ScenarioKind::ZeroMean,
            amplitude: 0.9,
            ..Default::default()
        };
        let s = make_initial(&low, &g, &p).unwrap();
        let f = run(
            &s,
            &cfg,
            &p,
            &EnergyWeights::for_params(&p, 2.0),
            10.0,
            &RunLabel::default(),
        )
        .unwrap_err();
        assert!(matches!(f.error, Error::Positivity { .. }) && f.partial.is_none());
    }

    #[test]
    fn stable_dt_examples() {
        let p = PhysParams::new(0.5, 1.0, 2.0, 2).unwrap();
        let cfg = StepperConfig::default();
        let g = make_grid(2, 32, 32.0).unwrap();
        let s = SimState::equilibrium(&g);
        assert_eq!(stable_dt(&s, &cfg, &p), (C_PRES * 1.0 / 2f64.sqrt()).min(cfg.dt_max));

        let fast = |n: usize| {
            let g = make_grid(2, n, 32.0).unwrap();
            let u = SpectralField::vector_from_fn(&g, |_| [30.0, 0.0]);
            let s = SimState::new(0.0, SpectralField::zeros(&g, 1), u).unwrap();
            stable_dt(&s, &cfg, &p)
        };
        assert!((fast(32) - C_ADV / 30.0).abs() < 1e-14);
        assert!((fast(64) - 0.5 * fast(32)).abs() < 1e-14);
    }

    #[test]
    fn twice_the_stable_step_is_unstable_on_stiff_data() {
        let p = PhysParams::new(0.5, 0.05, 1.0, 2).unwrap();
        let g = make_grid(2, 64, 16.0).unwrap();
        let spec = ScenarioSpec {
            kind: ScenarioKind::RandomPhase,
            amplitude: 0.4,
            width: 0.5,
            seed: 3,
            ..Default::default()
        };
        let s = make_initial(&spec, &g, &p).unwrap();
        let cfg = StepperConfig {
            dt_max: 100.0,
            ..Default::default()
        };
        let dt = stable_dt(&s, &cfg, &p);
        assert_eq!(probe_stability(&s, &cfg, &p, dt, 50.0).unwrap(), Stability::Stable);
        assert_ne!(
            probe_stability(&s, &cfg, &p, 2.0 * dt, 50.0).unwrap(),
            Stability::Stable
        );
    }

    #[test]
    fn config_validation() {
        let bad = [
            StepperConfig {
                dt: 0.0,
                ..Default::default()
            },
            StepperConfig {
                rho_min: 1.0,
                ..Default::default()
            },
            StepperConfig {
                output_stride: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
