//! Adaptive Gauss–Kronrod (7/15) quadrature for smooth, possibly vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`] and [`integrate_vec`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

struct Panel<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    error: f64,
}

impl<const M: usize> PartialEq for Panel<M> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const M: usize> Eq for Panel<M> {}
impl<const M: usize> PartialOrd for Panel<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const M: usize> Ord for Panel<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<const M: usize>(f: &impl Fn(f64) -> [f64; M], a: f64, b: f64) -> Panel<M> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; M];
    let mut gauss = [0.0; M];
    for (j, (&x, &wk)) in XGK.iter().zip(&WGK).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sgn in pts {
            let v = f(c + sgn * h * x);
            for m in 0..M {
                kron[m] += wk * v[m];
                if j % 2 == 1 {
                    gauss[m] += WG[j / 2] * v[m];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for m in 0..M {
        kron[m] *= h;
        gauss[m] *= h;
        error = error.max((kron[m] - gauss[m]).abs());
    }
    Panel {
        a,
        b,
        value: kron,
        error,
    }
}

/// Integrates a vector-valued `f` over `[points[0], points[last]]`, starting from
/// the panels delimited by `points` and bisecting the panel with the largest
/// error estimate until the total estimate meets
/// `max(abs_tol, rel_tol · max_m |I_m|)`.
pub fn integrate_vec<const M: usize>(
    f: impl Fn(f64) -> [f64; M],
    points: &[f64],
    opts: QuadOptions,
) -> Result<[f64; M]> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Quadrature("breakpoints must be strictly increasing".into()));
    }
    let mut heap: BinaryHeap<Panel<M>> = points.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    loop {
        let mut total = [0.0; M];
        let mut err = 0.0;
        for p in heap.iter() {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            err += p.error;
        }
        if !err.is_finite() || total.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("integrand produced non-finite values".into()));
        }
        let scale = total.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok(total);
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence after {} panels (error {err:.3e}, value {scale:.3e})",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature(format!(
                "panel at {:.6e} cannot be bisected",
                worst.a
            )));
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

/// Scalar version of [`integrate_vec`].
pub fn integrate(f: impl Fn(f64) -> f64, points: &[f64], opts: QuadOptions) -> Result<f64> {
    integrate_vec(|x| [f(x)], points, opts).map(|v| v[0])
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
