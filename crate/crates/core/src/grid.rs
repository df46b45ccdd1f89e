//! Uniform periodic grids and their discrete Fourier transforms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A periodic box `[0, L)^N` sampled at `n` points per axis, with `N` in {1, 2}.
///
/// Modes are stored in FFT order. In two dimensions the flat index of mode
/// `(i, j)` is `i * n + j`, where `i` runs along `x` and `j` along `y`.
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    axis_wavenumbers: Vec<f64>,
    axis_indices: Vec<i64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kmag: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

/// Builds a grid, validating the point count and the box length.
pub fn make_grid(dimension: usize, points_per_axis: usize, box_length: f64) -> Result<Arc<Grid>> {
    Grid::new(dimension, points_per_axis, box_length).map(Arc::new)
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }

        let axis_indices: Vec<i64> = (0..n as i64)
            .map(|k| if k < n as i64 / 2 { k } else { k - n as i64 })
            .collect();
        let dk = 2.0 * PI / length;
        let axis_wavenumbers: Vec<f64> = axis_indices.iter().map(|&k| k as f64 * dk).collect();

        let modes = n.pow(dim as u32);
        let mut kx = vec![0.0; modes];
        let mut ky = vec![0.0; modes];
        if dim == 1 {
            kx.copy_from_slice(&axis_wavenumbers);
        } else {
            for i in 0..n {
                for j in 0..n {
                    kx[i * n + j] = axis_wavenumbers[i];
                    ky[i * n + j] = axis_wavenumbers[j];
                }
            }
        }
        let kmag = kx.iter().zip(&ky).map(|(a, b)| a.hypot(*b)).collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Self {
            dim,
            n,
            length,
            axis_wavenumbers,
            axis_indices,
            kx,
            ky,
            kmag,
            forward,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of samples (equal to the number of Fourier modes).
    pub fn len(&self) -> usize {
        self.kx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kx.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Wavenumbers along one axis, in FFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.axis_wavenumbers
    }

    /// Integer mode indices along one axis, in FFT order: `0, 1, .., n/2-1, -n/2, .., -1`.
    pub fn axis_indices(&self) -> &[i64] {
        &self.axis_indices
    }

    /// Component `axis` of the wavevector of every mode.
    pub fn wavevector(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.kx,
            1 => &self.ky,
            _ => panic!("axis {axis} out of range"),
        }
    }

    /// `|xi|` for every mode.
    pub fn kmag(&self) -> &[f64] {
        &self.kmag
    }

    /// Largest integer index magnitude over the axes of mode `idx`.
    pub fn max_axis_index(&self, idx: usize) -> i64 {
        if self.dim == 1 {
            self.axis_indices[idx].abs()
        } else {
            let (i, j) = (idx / self.n, idx % self.n);
            self.axis_indices[i].abs().max(self.axis_indices[j].abs())
        }
    }

    /// Physical coordinates of sample `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    /// Forward transform normalized to Fourier-series coefficients:
    /// `c_k = (1/M) sum_j f_j exp(-i xi_k x_j)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= scale);
    }

    /// Inverse of [`Grid::forward`]: sums the Fourier series at the samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let n = self.n;
        if self.dim == 1 {
            plan.process(data);
            return;
        }
        data.par_chunks_mut(n).for_each(|row| plan.process(row));
        let mut t = transpose(data, n);
        t.par_chunks_mut(n).for_each(|row| plan.process(row));
        data.copy_from_slice(&transpose(&t, n));
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        for (i, c) in col.iter_mut().enumerate() {
            *c = data[i * n + j];
        }
    });
    out
}
