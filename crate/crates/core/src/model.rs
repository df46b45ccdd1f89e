//! Right-hand sides of the Euler-alignment system in primitive `(ρ, u)`,
//! perturbation `(a, u)` with `a = ρ - 1`, and symmetrized `(σ, u)` variables.
//!
//! All products are formed pointwise on the grid and, when `dealiased` is set,
//! truncated with the 2/3 rule on the way back to Fourier space. The alignment
//! force is only ever evaluated in its commutator form
//! `𝒟(u, ρ) = -μρ(Λ^α(ρu) - uΛ^αρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::spectral::{self, divergence, finish, gradient, riesz_power};

/// Density floor below which a state is rejected.
pub const RHO_MIN: f64 = 1e-8;

/// Model constants: alignment order `α`, alignment strength `μ`, adiabatic
/// exponent `γ` (pressure `P = ρ^γ`) and the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub alpha: f64,
    pub mu: f64,
    pub gamma: f64,
    pub dimension: usize,
}

impl PhysParams {
    pub fn new(alpha: f64, mu: f64, gamma: f64, dimension: usize) -> Result<Self> {
        let p = Self {
            alpha,
            mu,
            gamma,
            dimension,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "alignment order must lie in (0, 1]".into(),
            });
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                reason: "alignment strength must be positive".into(),
            });
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "adiabatic exponent must be at least 1".into(),
            });
        }
        if self.dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                value: 0.0,
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Solution snapshot in perturbation variables.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    /// Density deviation `a = ρ - 1`.
    pub a: SpectralField,
    /// Velocity, one component per axis.
    pub u: SpectralField,
}

impl SimState {
    pub fn new(t: f64, a: SpectralField, u: SpectralField) -> Result<Self> {
        if !a.is_scalar() || u.ncomp() != a.grid().dim() || *a.grid() != *u.grid() {
            return Err(Error::ShapeMismatch);
        }
        let s = Self { t, a, u };
        s.check_positivity(RHO_MIN)?;
        Ok(s)
    }

    /// Equilibrium `(a, u) = (0, 0)`.
    pub fn equilibrium(grid: &std::sync::Arc<crate::grid::Grid>) -> Self {
        Self {
            t: 0.0,
            a: SpectralField::zeros(grid, 1),
            u: SpectralField::zeros(grid, grid.dim()),
        }
    }

    pub fn min_rho(&self) -> f64 {
        self.a
            .physical_component(0)
            .into_iter()
            .fold(f64::INFINITY, |m, x| m.min(1.0 + x))
    }

    pub fn check_positivity(&self, floor: f64) -> Result<()> {
        check_positive(&self.a.physical_component(0), 1.0, floor)
    }
}

fn check_positive(samples: &[f64], offset: f64, floor: f64) -> Result<()> {
    let min_rho = samples.iter().fold(f64::INFINITY, |m, x| m.min(offset + x));
    if !(min_rho >= floor) {
        return Err(Error::Positivity { min_rho, floor });
    }
    Ok(())
}

fn dot_samples(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `(u·∇)w` for a vector field `w`, from physical samples of `u` and the
/// physical samples of every `∂_j w_i` (indexed `[i][j]`).
fn advect(u: &[Vec<f64>], grad_w: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    grad_w
        .iter()
        .map(|row| {
            let mut out = vec![0.0; u[0].len()];
            for (uj, dj) in u.iter().zip(row) {
                for ((o, x), y) in out.iter_mut().zip(uj).zip(dj) {
                    *o += x * y;
                }
            }
            out
        })
        .collect()
}

fn vector_gradient_samples(u: &SpectralField) -> Vec<Vec<Vec<f64>>> {
    (0..u.ncomp()).map(|i| gradient(&u.component(i)).physical()).collect()
}

/// Alignment force `𝒟(u, ρ) = -μρ(Λ^α(ρu) - uΛ^αρ)`.
pub fn alignment_term(
    rho: &SpectralField,
    u: &SpectralField,
    p: &PhysParams,
    dealiased: bool,
) -> Result<SpectralField> {
    let rho_s = rho.physical_component(0);
    check_positive(&rho_s, 0.0, RHO_MIN)?;
    let u_s = u.physical();
    let rho_u = finish(u, u_s.iter().map(|c| dot_samples(c, &rho_s)).collect(), dealiased);
    let lam_rho = riesz_power(rho, p.alpha).physical_component(0);
    let u_lam_rho = finish(u, u_s.iter().map(|c| dot_samples(c, &lam_rho)).collect(), dealiased);
    let commutator = riesz_power(&rho_u, p.alpha).sub(&u_lam_rho)?;
    let weighted = commutator
        .physical()
        .iter()
        .map(|c| c.iter().zip(&rho_s).map(|(x, r)| -p.mu * r * x).collect())
        .collect();
    Ok(finish(u, weighted, dealiased))
}

/// Time derivatives in conservative form: `(∂_tρ, ∂_t(ρu))` with
/// `∂_tρ = -div(ρu)` and `∂_t(ρu) = -div(ρu⊗u) - ∇ρ^γ + 𝒟(u, ρ)`.
pub fn rhs_primitive(
    rho: &SpectralField,
    u: &SpectralField,
    p: &PhysParams,
    dealiased: bool,
) -> Result<(SpectralField, SpectralField)> {
    let rho_s = rho.physical_component(0);
    check_positive(&rho_s, 0.0, RHO_MIN)?;
    let u_s = u.physical();
    let m = finish(u, u_s.iter().map(|c| dot_samples(c, &rho_s)).collect(), dealiased);
    let drho = divergence(&m).scale(-1.0);

    let m_s = m.physical();
    let grid = u.grid().clone();
    let flux_div: Vec<SpectralField> = m_s
        .iter()
        .map(|mi| {
            let row: Vec<SpectralField> = u_s
                .iter()
                .map(|uj| finish(rho, vec![dot_samples(mi, uj)], dealiased))
                .collect();
            divergence(&SpectralField::from_components(row).expect("shared grid"))
        })
        .collect();
    let flux_div = SpectralField::from_components(flux_div)?;

    let pressure = finish(rho, vec![rho_s.iter().map(|r| r.powf(p.gamma)).collect()], dealiased);
    let grad_p = gradient(&pressure);
    let align = alignment_term(rho, u, p, dealiased)?;
    debug_assert_eq!(grid.dim(), align.ncomp());
    let dmom = align.sub(&flux_div)?.sub(&grad_p)?;
    Ok((drho, dmom))
}

/// Nonlinear momentum forcing in perturbation variables,
/// `N = μ(uΛ^αa - Λ^α(au)) - u·∇u - γ(ρ^{γ-2} - 1)∇a`, together with the
/// (possibly dealiased) mass flux `au`.
pub fn momentum_nonlinearity(
    state: &SimState,
    p: &PhysParams,
    dealiased: bool,
) -> Result<(SpectralField, SpectralField)> {
    let (a, u) = (&state.a, &state.u);
    let a_s = a.physical_component(0);
    check_positive(&a_s, 1.0, RHO_MIN)?;
    let u_s = u.physical();

    let au = finish(u, u_s.iter().map(|c| dot_samples(c, &a_s)).collect(), dealiased);

    let lam_a = riesz_power(a, p.alpha).physical_component(0);
    let grad_a = gradient(a).physical();
    let grad_u = vector_gradient_samples(u);
    let adv = advect(&u_s, &grad_u);

    let pressure_coeff: Option<Vec<f64>> = if p.gamma == 2.0 {
        None
    } else {
        Some(
            a_s.iter()
                .map(|x| p.gamma * ((1.0 + x).powf(p.gamma - 2.0) - 1.0))
                .collect(),
        )
    };

    let sum: Vec<Vec<f64>> = (0..u.ncomp())
        .map(|i| {
            let mut out: Vec<f64> = (0..a_s.len())
                .map(|k| p.mu * u_s[i][k] * lam_a[k] - adv[i][k])
                .collect();
            if let Some(q) = &pressure_coeff {
                for ((o, qk), gk) in out.iter_mut().zip(q).zip(&grad_a[i]) {
                    *o -= qk * gk;
                }
            }
            out
        })
        .collect();
    let pointwise = finish(u, sum, dealiased);
    let nonlinear = pointwise.sub(&riesz_power(&au, p.alpha).scale(p.mu))?;
    Ok((nonlinear, au))
}

/// `(∂_t a, ∂_t u)` for the perturbation system, linear parts included.
pub fn rhs_perturbation(state: &SimState, p: &PhysParams, dealiased: bool) -> Result<(SpectralField, SpectralField)> {
    let (nonlinear, au) = momentum_nonlinearity(state, p, dealiased)?;
    let da = divergence(&state.u).add(&divergence(&au))?.scale(-1.0);
    let linear = riesz_power(&state.u, p.alpha)
        .scale(-p.mu)
        .sub(&gradient(&state.a).scale(p.gamma))?;
    Ok((da, linear.add(&nonlinear)?))
}

/// Forcing terms of the split linear system for `(a, v, ℙu)`.
#[derive(Debug, Clone)]
pub struct Nonlinearities {
    /// `F = -div(au)`.
    pub f: SpectralField,
    /// `G = Λ⁻¹div N`.
    pub g: SpectralField,
    /// `H = ℙN`, divergence free.
    pub h: SpectralField,
}

/// `F`, `G`, `H` from the nonlinear momentum forcing `N`.
///
/// `H` is the projection of the whole of `N`: the pressure correction
/// `(ρ^{γ-2} - 1)∇a` is a gradient, so projecting it contributes nothing
/// beyond truncation round-off, and `-∇Λ⁻¹G + H = N` holds exactly.
pub fn nonlinearities(state: &SimState, p: &PhysParams, dealiased: bool) -> Result<Nonlinearities> {
    let (nonlinear, au) = momentum_nonlinearity(state, p, dealiased)?;
    Ok(Nonlinearities {
        f: divergence(&au).scale(-1.0),
        g: spectral::inverse_riesz_div(&nonlinear),
        h: spectral::leray_project(&nonlinear),
    })
}

/// `σ(ρ)`: `ln ρ` for `γ = 1`, `2√γ/(γ-1) (ρ^{(γ-1)/2} - 1)` otherwise.
pub fn sigma_of_rho(rho: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        rho.ln()
    } else {
        2.0 * gamma.sqrt() / (gamma - 1.0) * (rho.powf(0.5 * (gamma - 1.0)) - 1.0)
    }
}

/// `dσ/da`, used by the chain rule between the two formulations.
pub fn sigma_derivative(rho: f64, gamma: f64) -> f64 {
    gamma.sqrt() * rho.powf(0.5 * (gamma - 3.0))
}

/// Inverse of [`sigma_of_rho`] written for `a = ρ - 1`; `None` outside the domain.
pub fn a_of_sigma(sigma: f64, gamma: f64) -> Option<f64> {
    if gamma == 1.0 {
        Some(sigma.exp_m1())
    } else {
        let base = (gamma - 1.0) / (2.0 * gamma.sqrt()) * sigma + 1.0;
        (base > 0.0).then(|| base.powf(2.0 / (gamma - 1.0)) - 1.0)
    }
}

/// Pointwise `σ = σ(1 + a)`, re-transformed without truncation.
pub fn sigma_transform(a: &SpectralField, gamma: f64) -> Result<SpectralField> {
    let a_s = a.physical_component(0);
    check_positive(&a_s, 1.0, RHO_MIN)?;
    let s = a_s.iter().map(|x| sigma_of_rho(1.0 + x, gamma)).collect();
    Ok(finish(a, vec![s], false))
}

/// Pointwise inverse of [`sigma_transform`].
pub fn a_from_sigma(sigma: &SpectralField, gamma: f64) -> Result<SpectralField> {
    let s = sigma.physical_component(0);
    let a = s
        .iter()
        .map(|&x| a_of_sigma(x, gamma).ok_or(Error::SigmaDomain { value: x }))
        .collect::<Result<Vec<f64>>>()?;
    Ok(finish(sigma, vec![a], false))
}

/// `(∂_tσ, ∂_t u)` for the symmetrized system; the alignment commutator is
/// evaluated through `a = a(σ)`.
pub fn rhs_sigma(
    sigma: &SpectralField,
    u: &SpectralField,
    p: &PhysParams,
    dealiased: bool,
) -> Result<(SpectralField, SpectralField)> {
    let a = a_from_sigma(sigma, p.gamma)?;
    let sg = p.gamma.sqrt();
    let half = 0.5 * (p.gamma - 1.0);

    let s_s = sigma.physical_component(0);
    let u_s = u.physical();
    let a_s = a.physical_component(0);
    let div_u = divergence(u);
    let div_s = div_u.physical_component(0);
    let grad_sigma = gradient(sigma).physical();

    // ∂tσ = -√γ div u - u·∇σ - (γ-1)/2 σ div u
    let mut ds_point = vec![0.0; s_s.len()];
    for k in 0..s_s.len() {
        let adv: f64 = (0..u.ncomp()).map(|j| u_s[j][k] * grad_sigma[j][k]).sum();
        ds_point[k] = -adv - half * s_s[k] * div_s[k];
    }
    let ds = finish(sigma, vec![ds_point], dealiased).sub(&div_u.scale(sg))?;

    // ∂tu = -μΛ^αu - √γ∇σ + μ(uΛ^αa - Λ^α(au)) - u·∇u - (γ-1)/2 σ∇σ
    let au = finish(u, u_s.iter().map(|c| dot_samples(c, &a_s)).collect(), dealiased);
    let lam_a = riesz_power(&a, p.alpha).physical_component(0);
    let adv = advect(&u_s, &vector_gradient_samples(u));
    let pointwise: Vec<Vec<f64>> = (0..u.ncomp())
        .map(|i| {
            (0..s_s.len())
                .map(|k| p.mu * u_s[i][k] * lam_a[k] - adv[i][k] - half * s_s[k] * grad_sigma[i][k])
                .collect()
        })
        .collect();
    let du = finish(u, pointwise, dealiased)
        .sub(&riesz_power(&au, p.alpha).scale(p.mu))?
        .sub(&riesz_power(u, p.alpha).scale(p.mu))?
        .sub(&gradient(sigma).scale(sg))?;
    Ok((ds, du))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::spectral::leray_project;
    use std::f64::consts::PI;

    fn params(gamma: f64) -> PhysParams {
        PhysParams::new(0.5, 1.3, gamma, 2).unwrap()
    }

    /// Band-limited smooth state: products up to cubic order stay inside the 2/3 band.
    fn smooth_state(n: usize, l: f64, amp: f64) -> SimState {
        let g = make_grid(2, n, l).unwrap();
        let w = 2.0 * PI / l;
        let a = SpectralField::scalar_from_fn(&g, |x| {
            amp * ((w * x[0]).cos() + 0.5 * (w * x[1] + 0.3).sin() + 0.3 * (w * (x[0] + x[1])).cos())
        });
        let u = SpectralField::vector_from_fn(&g, |x| {
            [
                amp * (0.7 * (w * x[1]).cos() + 0.2 + 0.4 * (w * x[0]).sin()),
                amp * (-0.5 * (w * x[0] + 1.0).sin() + 0.3 * (w * (x[0] - x[1])).cos()),
            ]
        });
        SimState::new(0.0, a, u).unwrap()
    }

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn parameter_ranges() {
        assert!(PhysParams::new(1.5, 1.0, 1.0, 2).is_err());
        assert!(PhysParams::new(0.0, 1.0, 1.0, 2).is_err());
        assert!(PhysParams::new(0.5, 0.0, 1.0, 2).is_err());
        assert!(PhysParams::new(0.5, 1.0, 0.9, 2).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 2).is_ok());
    }

    #[test]
    fn alignment_with_unit_density_is_fractional_dissipation() {
        let s = smooth_state(32, 6.0, 0.1);
        let p = params(1.4);
        let one = SpectralField::scalar_from_fn(s.a.grid(), |_| 1.0);
        let d = alignment_term(&one, &s.u, &p, true).unwrap();
        let expected = riesz_power(&s.u, p.alpha).scale(-p.mu);
        assert!(rel(&d, &expected) < 1e-12);
    }

    #[test]
    fn alignment_vanishes_on_consensus() {
        let s = smooth_state(32, 6.0, 0.1);
        let rho = s.a.map_modes(|i, z| if i == 0 { z + 1.0 } else { z });
        let c = SpectralField::vector_from_fn(s.a.grid(), |_| [0.4, -1.1]);
        let d = alignment_term(&rho, &c, &params(1.0), true).unwrap();
        assert!(d.l2_norm() < 1e-12);
    }

    #[test]
    fn alignment_is_momentum_neutral() {
        let s = smooth_state(32, 6.0, 0.2);
        let rho = s.a.map_modes(|i, z| if i == 0 { z + 1.0 } else { z });
        let d = alignment_term(&rho, &s.u, &params(1.0), true).unwrap();
        let scale = rho.l2_norm() * s.u.l2_norm();
        for c in 0..2 {
            assert!(d.integral(c).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn alignment_rejects_nonpositive_density() {
        let g = make_grid(1, 16, 1.0).unwrap();
        let rho = SpectralField::scalar_from_fn(&g, |x| (2.0 * PI * x[0]).sin());
        let u = SpectralField::zeros(&g, 1);
        assert!(matches!(
            alignment_term(&rho, &u, &params(1.0), true),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = make_grid(2, 16, 4.0).unwrap();
        let s = SimState::equilibrium(&g);
        let p = params(1.4);
        let (da, du) = rhs_perturbation(&s, &p, true).unwrap();
        assert_eq!(da.l2_norm(), 0.0);
        assert_eq!(du.l2_norm(), 0.0);
        let one = SpectralField::scalar_from_fn(&g, |_| 1.0);
        let (dr, dm) = rhs_primitive(&one, &s.u, &p, true).unwrap();
        assert!(dr.l2_norm() < 1e-14 && dm.l2_norm() < 1e-13);
        let nl = nonlinearities(&s, &p, true).unwrap();
        assert_eq!(nl.f.l2_norm() + nl.g.l2_norm() + nl.h.l2_norm(), 0.0);
    }

    #[test]
    fn unit_density_reduces_to_burgers_with_dissipation() {
        let s = smooth_state(32, 6.0, 0.1);
        let p = params(1.7);
        let one = SpectralField::scalar_from_fn(s.a.grid(), |_| 1.0);
        let (drho, dmom) = rhs_primitive(&one, &s.u, &p, true).unwrap();
        // -div(u⊗u) - μΛ^α u
        let u_s = s.u.physical();
        let comps: Vec<SpectralField> = (0..2)
            .map(|i| {
                let row: Vec<SpectralField> = (0..2)
                    .map(|j| finish(&one, vec![dot_samples(&u_s[i], &u_s[j])], true))
                    .collect();
                divergence(&SpectralField::from_components(row).unwrap()).scale(-1.0)
            })
            .collect();
        let expected = SpectralField::from_components(comps)
            .unwrap()
            .sub(&riesz_power(&s.u, p.alpha).scale(p.mu))
            .unwrap();
        assert!(rel(&dmom, &expected) < 1e-12);
        assert!(drho.integral(0).abs() < 1e-12);
    }

    #[test]
    fn mass_derivative_has_zero_mean() {
        let s = smooth_state(32, 6.0, 0.3);
        let (da, _) = rhs_perturbation(&s, &params(1.4), true).unwrap();
        assert!(da.integral(0).abs() < 1e-14);
    }

    #[test]
    fn perturbation_matches_primitive_form() {
        // γ = 2 keeps every product a polynomial, so both routes are exact.
        let s = smooth_state(48, 6.0, 0.2);
        let p = params(2.0);
        let (da, du) = rhs_perturbation(&s, &p, true).unwrap();
        let rho = s.a.map_modes(|i, z| if i == 0 { z + 1.0 } else { z });
        let (drho, dmom) = rhs_primitive(&rho, &s.u, &p, true).unwrap();
        assert!(rel(&da, &drho) < 1e-10);
        // ∂t(ρu) = ρ∂tu + u∂tρ
        let rho_s = rho.physical_component(0);
        let da_s = da.physical_component(0);
        let u_s = s.u.physical();
        let du_s = du.physical();
        let mom: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                (0..rho_s.len())
                    .map(|k| rho_s[k] * du_s[i][k] + u_s[i][k] * da_s[k])
                    .collect()
            })
            .collect();
        let mom = finish(&s.u, mom, false);
        assert!(rel(&mom, &dmom) < 1e-10, "{}", rel(&mom, &dmom));
    }

    #[test]
    fn sigma_transform_values_and_round_trip() {
        let g = make_grid(2, 16, 3.0).unwrap();
        let zero = SpectralField::zeros(&g, 1);
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            assert_eq!(sigma_transform(&zero, gamma).unwrap().l2_norm(), 0.0);
        }
        let e = SpectralField::scalar_from_fn(&g, |_| std::f64::consts::E - 1.0);
        let s = sigma_transform(&e, 1.0).unwrap();
        assert!((s.mean(0) - 1.0).abs() < 1e-14);

        let a = SpectralField::scalar_from_fn(&g, |x| {
            0.45 * (2.0 * PI * x[0] / 3.0).sin() * (2.0 * PI * x[1] / 3.0).cos()
        });
        for gamma in [1.0, 1.4, 2.0] {
            let s = sigma_transform(&a, gamma).unwrap();
            let back = a_from_sigma(&s, gamma).unwrap();
            assert!(rel(&back, &a) < 1e-12);
        }
        // γ = 2: σ = 2√2(√ρ - 1) pointwise
        let s = sigma_transform(&a, 2.0).unwrap().physical_component(0);
        for (sv, av) in s.iter().zip(a.physical_component(0)) {
            assert!((sv - 2.0 * 2f64.sqrt() * ((1.0 + av).sqrt() - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_sigma_domain_is_enforced() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let s = SpectralField::scalar_from_fn(&g, |_| -10.0);
        // γ = 2: base = σ/(2√2) + 1 < 0
        assert!(matches!(a_from_sigma(&s, 2.0), Err(Error::SigmaDomain { .. })));
        assert!(a_from_sigma(&s, 1.0).is_ok());
    }

    #[test]
    fn sigma_formulation_equilibrium_and_isothermal_terms() {
        let g = make_grid(2, 16, 4.0).unwrap();
        let z = SpectralField::zeros(&g, 1);
        let u = SpectralField::zeros(&g, 2);
        let (ds, du) = rhs_sigma(&z, &u, &params(1.4), true).unwrap();
        assert_eq!(ds.l2_norm() + du.l2_norm(), 0.0);
    }

    #[test]
    fn sigma_formulation_matches_chain_rule() {
        for gamma in [1.0, 1.4, 2.0] {
            let s = smooth_state(64, 6.0, 1e-3);
            let p = params(gamma);
            let (da, du_a) = rhs_perturbation(&s, &p, true).unwrap();
            let sigma = sigma_transform(&s.a, gamma).unwrap();
            let (ds, du_s) = rhs_sigma(&sigma, &s.u, &p, true).unwrap();
            let chain: Vec<f64> =
                s.a.physical_component(0)
                    .iter()
                    .zip(da.physical_component(0))
                    .map(|(a, d)| sigma_derivative(1.0 + a, gamma) * d)
                    .collect();
            let chain = finish(&s.a, vec![chain], false);
            assert!(rel(&ds, &chain) < 1e-8, "gamma {gamma}: {}", rel(&ds, &chain));
            assert!(rel(&du_s, &du_a) < 1e-8, "gamma {gamma}: {}", rel(&du_s, &du_a));
        }
    }

    #[test]
    fn forcing_decomposition_recombines() {
        for gamma in [1.0, 1.4] {
            let s = smooth_state(32, 6.0, 0.2);
            let p = params(gamma);
            let nl = nonlinearities(&s, &p, true).unwrap();
            let (da, du) = rhs_perturbation(&s, &p, true).unwrap();
            let linear_u = riesz_power(&s.u, p.alpha)
                .scale(-p.mu)
                .sub(&gradient(&s.a).scale(p.gamma))
                .unwrap();
            let target = du.sub(&linear_u).unwrap();
            let recombined = spectral::compressible_velocity(&nl.g).add(&nl.h).unwrap();
            assert!(rel(&recombined, &target) < 1e-10);
            let target_a = da.add(&divergence(&s.u)).unwrap();
            assert!(rel(&nl.f, &target_a) < 1e-12);
            let div_h = divergence(&nl.h);
            assert!(div_h.max_coeff() <= 1e-12 * nl.h.max_coeff().max(1e-300) * 10.0);
            assert!(rel(&leray_project(&nl.h), &nl.h) < 1e-12);
        }
    }
}
