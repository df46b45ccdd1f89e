//! Fourier-multiplier operators on periodic fields.
//!
//! Sign conventions: `Λ = (-Δ)^{1/2}` has multiplier `|ξ|`, derivatives are
//! `∂_j ↦ iξ_j`, and the compressible part of a velocity is recovered from
//! `v = Λ⁻¹ div u` through `u = -∇Λ⁻¹v + ℙu`. Negative-order multipliers
//! map the zero mode to zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `|ξ|^β` with the zero mode sent to 1 for `β = 0` and to 0 otherwise.
#[inline]
pub fn riesz_symbol(kmag: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else if kmag == 0.0 {
        0.0
    } else {
        kmag.powf(beta)
    }
}

/// `Λ^β f` for `β ≥ 0`.
pub fn fractional_laplacian(f: &SpectralField, beta: f64) -> Result<SpectralField> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "order must be finite and non-negative".into(),
        });
    }
    Ok(riesz_power(f, beta))
}

/// `Λ^β f` for any real order; negative orders annihilate the zero mode.
pub fn riesz_power(f: &SpectralField, beta: f64) -> SpectralField {
    let kmag = f.grid().kmag().to_vec();
    f.map_modes(move |i, z| z * riesz_symbol(kmag[i], beta))
}

/// `∇f` of a scalar field.
pub fn gradient(f: &SpectralField) -> SpectralField {
    assert!(f.is_scalar(), "gradient expects a scalar field");
    let grid = f.grid().clone();
    let parts = (0..grid.dim())
        .map(|axis| {
            let k = grid.wavevector(axis);
            f.map_modes(|i, z| I * k[i] * z)
        })
        .collect();
    SpectralField::from_components(parts).expect("components share a grid")
}

/// `div u` of a vector field.
pub fn divergence(u: &SpectralField) -> SpectralField {
    let grid = u.grid().clone();
    assert_eq!(u.ncomp(), grid.dim(), "divergence expects a vector field");
    let mut out = SpectralField::zeros(&grid, 1);
    for axis in 0..grid.dim() {
        let k = grid.wavevector(axis);
        let src = u.coeffs(axis);
        for (i, o) in out.coeffs_mut(0).iter_mut().enumerate() {
            *o += I * k[i] * src[i];
        }
    }
    out
}

/// `v = Λ⁻¹ div u`, i.e. `v̂ = iξ·û / |ξ|` with `v̂(0) = 0`.
pub fn inverse_riesz_div(u: &SpectralField) -> SpectralField {
    let kmag = u.grid().kmag().to_vec();
    let d = divergence(u);
    d.map_modes(move |i, z| {
        if kmag[i] == 0.0 {
            Complex64::default()
        } else {
            z / kmag[i]
        }
    })
}

/// `-∇Λ⁻¹v`: the gradient (compressible) part of the velocity whose `Λ⁻¹div` is `v`.
pub fn compressible_velocity(v: &SpectralField) -> SpectralField {
    assert!(v.is_scalar());
    let grid = v.grid().clone();
    let kmag = grid.kmag();
    let parts = (0..grid.dim())
        .map(|axis| {
            let k = grid.wavevector(axis);
            v.map_modes(|i, z| {
                if kmag[i] == 0.0 {
                    Complex64::default()
                } else {
                    -I * (k[i] / kmag[i]) * z
                }
            })
        })
        .collect();
    SpectralField::from_components(parts).expect("components share a grid")
}

/// Leray projection `ℙ = Id - ∇Δ⁻¹div`: per mode `û ↦ (I - ξξᵀ/|ξ|²) û`.
/// The zero mode passes through unchanged.
pub fn leray_project(u: &SpectralField) -> SpectralField {
    let grid = u.grid().clone();
    assert_eq!(u.ncomp(), grid.dim(), "leray_project expects a vector field");
    let mut out = u.clone();
    if grid.dim() == 1 {
        // Every one-dimensional field is a gradient; only the mean survives.
        for (i, z) in out.coeffs_mut(0).iter_mut().enumerate() {
            if i != 0 {
                *z = Complex64::default();
            }
        }
        return out;
    }
    let (kx, ky, kmag) = (grid.wavevector(0), grid.wavevector(1), grid.kmag());
    let (ux, uy) = (u.coeffs(0), u.coeffs(1));
    let mut px = vec![Complex64::default(); grid.len()];
    let mut py = vec![Complex64::default(); grid.len()];
    for i in 0..grid.len() {
        if kmag[i] == 0.0 {
            px[i] = ux[i];
            py[i] = uy[i];
        } else {
            let k2 = kmag[i] * kmag[i];
            let dot = (kx[i] * ux[i] + ky[i] * uy[i]) / k2;
            px[i] = ux[i] - kx[i] * dot;
            py[i] = uy[i] - ky[i] * dot;
        }
    }
    SpectralField::from_coeffs(&grid, vec![px, py]).expect("shape preserved")
}

/// Homogeneous `(Σ|ξ|^{2s}|f̂|²)^{1/2}` or inhomogeneous `(Σ(1+|ξ|²)^s|f̂|²)^{1/2}`
/// Sobolev norm, with Parseval weights, summed over components.
pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    let kmag = f.grid().kmag();
    if homogeneous {
        f.weighted_norm(|i| riesz_symbol(kmag[i], 2.0 * s))
    } else {
        f.weighted_norm(|i| (1.0 + kmag[i] * kmag[i]).powf(s))
    }
}

/// Keeps the modes whose every axis index satisfies `|k| ≤ n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid().clone();
    let n = grid.points_per_axis() as i64;
    f.map_modes(|i, z| {
        if 3 * grid.max_axis_index(i) > n {
            Complex64::default()
        } else {
            z
        }
    })
}

/// `L¹`, `L²` and `L^∞` norms of a field (Euclidean magnitude over components).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LebesgueNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// `L¹` and `L^∞` from the uniform-grid samples, `L²` from Parseval.
pub fn lebesgue_norms(f: &SpectralField) -> LebesgueNorms {
    let samples = f.physical();
    let grid = f.grid();
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..grid.len() {
        let m = samples.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
        l1 += m;
        linf = linf.max(m);
    }
    LebesgueNorms {
        l1: l1 * grid.cell_volume(),
        l2: f.l2_norm(),
        linf,
    }
}

/// Pointwise product of two scalar fields, optionally dealiased.
pub fn product(f: &SpectralField, g: &SpectralField, dealiased: bool) -> SpectralField {
    assert!(f.is_scalar() && g.is_scalar());
    let (a, b) = (f.physical_component(0), g.physical_component(0));
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    finish(f, vec![prod], dealiased)
}

/// Pointwise product of a scalar field with every component of `u`.
pub fn scalar_times_vector(f: &SpectralField, u: &SpectralField, dealiased: bool) -> SpectralField {
    assert!(f.is_scalar());
    let a = f.physical_component(0);
    let comps = u
        .physical()
        .into_iter()
        .map(|c| c.iter().zip(&a).map(|(x, y)| x * y).collect())
        .collect();
    finish(f, comps, dealiased)
}

/// Transforms physical samples back and applies the optional 2/3 truncation.
pub fn finish(like: &SpectralField, samples: Vec<Vec<f64>>, dealiased: bool) -> SpectralField {
    let out = SpectralField::from_physical(like.grid(), samples).expect("sample count matches grid");
    if dealiased {
        dealias(&out)
    } else {
        out
    }
}
