//! Real-valued scalar and vector fields stored by their Fourier coefficients.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A real scalar (one component) or vector (`dim` components) field on a periodic grid.
///
/// Coefficients are Fourier-series coefficients, so the zero mode is the box
/// mean and `∫|f|² dx = V Σ|f̂_k|²`. Physical samples are produced on demand.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, ncomp: usize) -> Self {
        Self {
            grid: grid.clone(),
            comps: vec![vec![Complex64::default(); grid.len()]; ncomp],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn from_physical(grid: &Arc<Grid>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch);
        }
        let comps = samples
            .into_iter()
            .map(|s| {
                let mut data: Vec<Complex64> = s.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
                grid.forward(&mut data);
                data
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn scalar_from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> f64 + Sync) -> Self {
        let samples: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(grid.coords(i))).collect();
        Self::from_physical(grid, vec![samples]).expect("sample count matches grid")
    }

    /// Vector field with `grid.dim()` components; the second entry of `f`'s
    /// output is ignored in one dimension.
    pub fn vector_from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> [f64; 2] + Sync) -> Self {
        let values: Vec<[f64; 2]> = (0..grid.len()).into_par_iter().map(|i| f(grid.coords(i))).collect();
        let samples = (0..grid.dim()).map(|c| values.iter().map(|v| v[c]).collect()).collect();
        Self::from_physical(grid, samples).expect("sample count matches grid")
    }

    pub fn from_components(parts: Vec<SpectralField>) -> Result<Self> {
        let grid = parts.first().ok_or(Error::ShapeMismatch)?.grid.clone();
        let mut comps = Vec::with_capacity(parts.len());
        for p in parts {
            if *p.grid != *grid {
                return Err(Error::ShapeMismatch);
            }
            comps.extend(p.comps);
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.comps.len() == 1
    }

    pub fn coeffs(&self, comp: usize) -> &[Complex64] {
        &self.comps[comp]
    }

    pub fn coeffs_mut(&mut self, comp: usize) -> &mut [Complex64] {
        &mut self.comps[comp]
    }

    pub fn component(&self, comp: usize) -> SpectralField {
        Self {
            grid: self.grid.clone(),
            comps: vec![self.comps[comp].clone()],
        }
    }

    /// Physical samples of one component (real part of the synthesized series).
    pub fn physical_component(&self, comp: usize) -> Vec<f64> {
        let mut data = self.comps[comp].clone();
        self.grid.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    pub fn physical(&self) -> Vec<Vec<f64>> {
        (0..self.ncomp()).map(|c| self.physical_component(c)).collect()
    }

    pub fn same_shape(&self, other: &SpectralField) -> bool {
        *self.grid == *other.grid && self.ncomp() == other.ncomp()
    }

    /// Applies a per-mode map `f(mode index, coefficient)` to every component.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64 + Sync) -> SpectralField {
        let comps = self
            .comps
            .iter()
            .map(|c| c.par_iter().enumerate().map(|(i, &z)| f(i, z)).collect())
            .collect();
        Self {
            grid: self.grid.clone(),
            comps,
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        self.map_modes(|_, z| z * s)
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<SpectralField> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.par_iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            comps,
        })
    }

    /// Box mean of one component.
    pub fn mean(&self, comp: usize) -> f64 {
        self.comps[comp][0].re
    }

    /// `∫ f dx` of one component over the box.
    pub fn integral(&self, comp: usize) -> f64 {
        self.mean(comp) * self.grid.volume()
    }

    /// Copy with the zero mode of every component removed.
    pub fn without_mean(&self) -> SpectralField {
        self.map_modes(|i, z| if i == 0 { Complex64::default() } else { z })
    }

    /// `‖f‖_{L²}` over all components, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm(|_| 1.0)
    }

    /// `(V Σ_k w(k) |f̂_k|²)^{1/2}` summed over components.
    pub fn weighted_norm(&self, w: impl Fn(usize) -> f64 + Sync) -> f64 {
        let sum: f64 = self
            .comps
            .iter()
            .map(|c| ordered_sum(c.len(), |i| w(i) * c[i].norm_sqr()))
            .sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// `∫ f·g dx` summed over components.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch);
        }
        let sum: f64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| ordered_sum(a.len(), |i| (a[i] * b[i].conj()).re))
            .sum();
        Ok(self.grid.volume() * sum)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}

const CHUNK: usize = 4096;

/// Parallel sum of `term(0..n)` whose rounding does not depend on thread scheduling.
pub(crate) fn ordered_sum(n: usize, term: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&term).sum())
        .collect();
    partial.iter().sum()
}
