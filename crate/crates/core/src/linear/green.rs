//! Eigenvalues and fundamental matrix of the linearized per-mode system
//!
//! ```text
//! d/dt (â, v̂) = A (â, v̂),   A = [[0, -|ξ|], [γ|ξ|, -μ|ξ|^α]].
//! ```
//!
//! `Ĝ(t) = e^{At}` is real. With `λ̄ = -μ|ξ|^α/2` and `Δ = λ₊ - λ₋` it is
//! evaluated as `Ĝ = H·I + K·(A - λ̄I)` where `H = e^{tλ̄}cosh(tΔ/2)` and
//! `K = t e^{tλ̄} sinhc(tΔ/2)`. Both are written in terms of decaying
//! exponentials only, so no branch overflows and the generic and double-root
//! formulas join continuously.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_vec, QuadOptions};
use crate::model::PhysParams;

/// Relative tolerance on `|ξ|^{1-α}` versus `μ/(2√γ)` for the critical tag.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Below this `|tΔ|` the hyperbolic factors are replaced by their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Real, distinct eigenvalues.
    LowFrequency,
    /// Complex-conjugate eigenvalues.
    HighFrequency,
    /// Double root.
    Critical,
}

/// Ĝ at one `(t, |ξ|)` with its eigenvalues and regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenSample {
    pub t: f64,
    pub xi: f64,
    /// Entries `[[Ĝ₁₁, Ĝ₁₂], [Ĝ₂₁, Ĝ₂₂]]`.
    pub g: [[Complex64; 2]; 2],
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub regime: Regime,
}

impl GreenSample {
    /// Real parts of the entries.
    pub fn real(&self) -> [[f64; 2]; 2] {
        [[self.g[0][0].re, self.g[0][1].re], [self.g[1][0].re, self.g[1][1].re]]
    }
}

/// The generator `A(|ξ|)`.
pub fn generator(xi: f64, p: &PhysParams) -> [[f64; 2]; 2] {
    [[0.0, -xi], [p.gamma * xi, -damping(xi, p)]]
}

fn damping(xi: f64, p: &PhysParams) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        p.mu * xi.powf(p.alpha)
    }
}

/// `μ²|ξ|^{2α} - 4γ|ξ|²`, factored to avoid cancellation near the double root.
fn discriminant(xi: f64, p: &PhysParams) -> f64 {
    let d = damping(xi, p);
    let w = 2.0 * p.gamma.sqrt() * xi;
    (d - w) * (d + w)
}

/// `λ± = (-μ|ξ|^α ∓ √(μ²|ξ|^{2α} - 4γ|ξ|²))/2` with the principal root, so
/// `λ₊` is the strongly damped eigenvalue. For a positive discriminant `λ₋`
/// is recovered from `λ₊λ₋ = γ|ξ|²`.
pub fn eigenvalues(xi: f64, p: &PhysParams) -> (Complex64, Complex64) {
    if xi == 0.0 {
        return (Complex64::default(), Complex64::default());
    }
    let d = damping(xi, p);
    let disc = discriminant(xi, p);
    if disc >= 0.0 {
        let plus = -0.5 * (d + disc.sqrt());
        let minus = p.gamma * xi * xi / plus;
        (Complex64::new(plus, 0.0), Complex64::new(minus, 0.0))
    } else {
        let w = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * d, -w), Complex64::new(-0.5 * d, w))
    }
}

/// The boundary `|ξ_c| = (μ/(2√γ))^{1/(1-α)}` between the regimes, `None` for `α = 1`.
pub fn critical_wavenumber(p: &PhysParams) -> Option<f64> {
    (p.alpha < 1.0).then(|| (p.mu / (2.0 * p.gamma.sqrt())).powf(1.0 / (1.0 - p.alpha)))
}

/// Compares `|ξ|^{1-α}` with `μ/(2√γ)`. For `α = 1` the left side is 1 for
/// every `ξ` and the tag follows the sign of `μ² - 4γ`.
pub fn classify_regime(xi: f64, p: &PhysParams) -> Regime {
    let lhs = if p.alpha == 1.0 { 1.0 } else { xi.powf(1.0 - p.alpha) };
    let threshold = p.mu / (2.0 * p.gamma.sqrt());
    if lhs < threshold * (1.0 - CRITICAL_TOL) {
        Regime::LowFrequency
    } else if lhs > threshold * (1.0 + CRITICAL_TOL) {
        Regime::HighFrequency
    } else {
        Regime::Critical
    }
}

/// `(H, K)` with `Ĝ = H·I + K·(A - λ̄I)`.
fn hk(t: f64, xi: f64, p: &PhysParams) -> (f64, f64) {
    if xi == 0.0 || t == 0.0 {
        return (1.0, t);
    }
    let d = damping(xi, p);
    let mean = -0.5 * d;
    let disc = discriminant(xi, p);
    let half_gap = 0.5 * disc.abs().sqrt();
    if 2.0 * half_gap * t < SERIES_THRESHOLD {
        let q = 0.25 * t * t * disc;
        let e = (t * mean).exp();
        return (
            e * (1.0 + q / 2.0 + q * q / 24.0),
            t * e * (1.0 + q / 6.0 + q * q / 120.0),
        );
    }
    if disc > 0.0 {
        let fast = mean - half_gap;
        let slow = p.gamma * xi * xi / fast;
        let es = (t * slow).exp();
        let ef = (t * fast).exp();
        // fast - slow = -2·half_gap; subtracting the two roots would cancel near the double root.
        let k = -es * (-2.0 * half_gap * t).exp_m1() / (2.0 * half_gap);
        (0.5 * (es + ef), k)
    } else {
        let e = (t * mean).exp();
        let x = half_gap * t;
        (e * x.cos(), e * x.sin() / half_gap)
    }
}

/// `h·I + k·(A - λ̄I)`, linear in `(h, k)`.
fn assemble(h: f64, k: f64, xi: f64, p: &PhysParams) -> [[f64; 2]; 2] {
    let half_d = 0.5 * damping(xi, p);
    let g12 = -xi * k;
    [[h + half_d * k, g12], [-p.gamma * g12, h - half_d * k]]
}

/// Real entries of `Ĝ(t, |ξ|)`; `Ĝ₂₁ = -γĜ₁₂` holds exactly.
pub fn green_entries(t: f64, xi: f64, p: &PhysParams) -> [[f64; 2]; 2] {
    let (h, k) = hk(t, xi, p);
    assemble(h, k, xi, p)
}

/// Exponential-integrator weights of one mode for a step `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtdWeights {
    /// `Ĝ(h)`.
    pub propagator: [[f64; 2]; 2],
    /// `∫₀ʰ Ĝ(s) ds`.
    pub first: [[f64; 2]; 2],
    /// `h⁻¹ ∫₀ʰ Ĝ(h - s) s ds`.
    pub second: [[f64; 2]; 2],
}

/// [`EtdWeights`] from adaptive quadrature of the scalar factors `H`, `K`.
pub fn etd_weights(h: f64, xi: f64, p: &PhysParams) -> crate::error::Result<EtdWeights> {
    // Every integrand is bounded by about one, so the weights are accurate to 1e-14·h at worst.
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-14 * h,
        ..Default::default()
    };
    let v = integrate_vec(
        |s| {
            let (h0, k0) = hk(s, xi, p);
            let (h1, k1) = hk(h - s, xi, p);
            [h0, k0 / h, h1 * s / h, k1 * s / (h * h)]
        },
        &[0.0, h],
        opts,
    )?;
    Ok(EtdWeights {
        propagator: green_entries(h, xi, p),
        first: assemble(v[0], v[1] * h, xi, p),
        second: assemble(v[2], v[3] * h, xi, p),
    })
}

/// `Ĝ(t, |ξ|)` as a [`GreenSample`].
pub fn green_matrix(t: f64, xi: f64, p: &PhysParams) -> GreenSample {
    let g = green_entries(t, xi, p);
    let c = |x: f64| Complex64::new(x, 0.0);
    let (lambda_plus, lambda_minus) = eigenvalues(xi, p);
    GreenSample {
        t,
        xi,
        g: [[c(g[0][0]), c(g[0][1])], [c(g[1][0]), c(g[1][1])]],
        lambda_plus,
        lambda_minus,
        regime: classify_regime(xi, p),
    }
}

/// Closed form at the double root:
/// `e^{-√γ|ξ|t}[[1+√γ|ξ|t, -|ξ|t], [γ|ξ|t, 1-√γ|ξ|t]]`.
pub fn critical_closed_form(t: f64, xi: f64, gamma: f64) -> [[f64; 2]; 2] {
    let s = gamma.sqrt() * xi * t;
    let e = (-s).exp();
    [[e * (1.0 + s), -e * xi * t], [e * gamma * xi * t, e * (1.0 - s)]]
}

/// `e^{-νt|ξ|^β}`, the symbol of the fractional heat semigroup.
pub fn heat_symbol(t: f64, xi: f64, nu: f64, beta: f64) -> f64 {
    if xi == 0.0 {
        1.0
    } else {
        (-nu * t * xi.powf(beta)).exp()
    }
}

pub fn matmul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn frobenius(a: &[[f64; 2]; 2]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pp(alpha: f64, mu: f64, gamma: f64) -> PhysParams {
        PhysParams::new(alpha, mu, gamma, 2).unwrap()
    }

    fn diff(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        [
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ]
    }

    /// `e^{At}` from the complex eigen-decomposition, valid away from the double root.
    fn eigen_oracle(t: f64, xi: f64, p: &PhysParams) -> [[f64; 2]; 2] {
        let (lp, lm) = eigenvalues(xi, p);
        let a = generator(xi, p);
        let (ep, em) = ((lp * t).exp(), (lm * t).exp());
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                // e^{At} = (e^{λ₊t}(A - λ₋) - e^{λ₋t}(A - λ₊)) / (λ₊ - λ₋)
                let v = (ep * (a[i][j] - lm * id) - em * (a[i][j] - lp * id)) / (lp - lm);
                g[i][j] = v.re;
            }
        }
        g
    }

    #[test]
    fn eigenvalue_examples() {
        let (a, b) = eigenvalues(1.0, &pp(1.0, 2.0, 1.0));
        assert!((a - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((b - Complex64::new(-1.0, 0.0)).norm() < 1e-15);

        let (a, b) = eigenvalues(0.01, &pp(0.5, 1.0, 1.0));
        // closed formula in extended precision: (-0.1 ∓ √0.0096)/2
        let root = 0.097_979_589_711_327_12;
        assert!((a.re - (-0.1 - root) / 2.0).abs() < 1e-15);
        assert!((b.re - 1e-4 / ((-0.1 - root) / 2.0)).abs() < 1e-17);
        assert!((a.re + 0.09899).abs() < 1e-5 && (b.re + 0.00101).abs() < 1e-5);

        let (a, b) = eigenvalues(1.0, &pp(1.0, 1.0, 1.0));
        let s3 = 3f64.sqrt() / 2.0;
        assert!((a - Complex64::new(-0.5, -s3)).norm() < 1e-15);
        assert!((b - Complex64::new(-0.5, s3)).norm() < 1e-15);
        assert_eq!(
            eigenvalues(0.0, &pp(0.5, 1.0, 1.0)),
            (Complex64::default(), Complex64::default())
        );
    }

    #[test]
    fn trace_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let p = pp(
                rng.gen_range(0.05..=1.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(1.0..4.0),
            );
            let xi = 10f64.powf(rng.gen_range(-4.0..4.0));
            let (a, b) = eigenvalues(xi, &p);
            let tr = -p.mu * xi.powf(p.alpha);
            let det = p.gamma * xi * xi;
            assert!((a + b - tr).norm() <= 1e-12 * tr.abs());
            assert!((a * b - det).norm() <= 1e-12 * det);
            assert!(a.re <= 0.0 && b.re <= 0.0);
        }
    }

    #[test]
    fn regime_examples() {
        let p = pp(0.5, 2.0, 1.0);
        assert_eq!(classify_regime(0.25, &p), Regime::LowFrequency);
        assert_eq!(classify_regime(1.0, &p), Regime::Critical);
        assert_eq!(classify_regime(4.0, &p), Regime::HighFrequency);
        assert_eq!(classify_regime(0.0, &p), Regime::LowFrequency);
        let p1 = pp(1.0, 1.0, 1.0);
        for xi in [1e-3, 1.0, 1e3] {
            assert_eq!(classify_regime(xi, &p1), Regime::HighFrequency);
        }
        assert_eq!(classify_regime(5.0, &pp(1.0, 3.0, 1.0)), Regime::LowFrequency);
        assert_eq!(classify_regime(5.0, &pp(1.0, 2.0, 1.0)), Regime::Critical);
        assert_eq!(critical_wavenumber(&p), Some(1.0));
    }

    #[test]
    fn identity_at_time_zero() {
        for xi in [0.0, 1e-3, 0.25, 1.0, 7.0] {
            let g = green_entries(0.0, xi, &pp(0.5, 2.0, 1.0));
            assert_eq!(g, [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    #[test]
    fn critical_point_matches_closed_form() {
        // α = 0.5, μ = 2, γ = 1: |ξ| = 1 is the exact double root.
        let p = pp(0.5, 2.0, 1.0);
        for t in [0.1, 1.0, 3.0, 20.0] {
            let g = green_entries(t, 1.0, &p);
            let c = critical_closed_form(t, 1.0, 1.0);
            assert!(frobenius(&diff(&g, &c)) <= 1e-14 * frobenius(&c).max(1e-300));
        }
        let g = green_matrix(2.0, 1.0, &p);
        assert_eq!(g.regime, Regime::Critical);
    }

    #[test]
    fn agrees_with_complex_eigen_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let p = pp(
                rng.gen_range(0.05..=1.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(1.0..4.0),
            );
            let xi = 10f64.powf(rng.gen_range(-2.0..2.0));
            let t = 10f64.powf(rng.gen_range(-2.0..1.0));
            let (lp, lm) = eigenvalues(xi, &p);
            if ((lp - lm) * t).norm() < 1e-2 {
                continue;
            }
            let g = green_entries(t, xi, &p);
            let o = eigen_oracle(t, xi, &p);
            assert!(frobenius(&diff(&g, &o)) <= 1e-9 * frobenius(&o), "{p:?} {xi} {t}");
        }
    }

    #[test]
    fn branches_join_continuously_at_the_double_root() {
        let p = pp(0.5, 2.0, 1.0);
        let t = 1.5;
        for eps in [1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-13] {
            for xi in [1.0 - eps, 1.0 + eps] {
                let g = green_entries(t, xi, &p);
                let c = critical_closed_form(t, xi, 1.0);
                // the two differ by O(q), q = t²·disc/4
                let q = 0.25 * t * t * discriminant(xi, &p).abs();
                let err = frobenius(&diff(&g, &c)) / frobenius(&c);
                assert!(err <= 2.0 * q + 1e-13, "eps {eps}: {err:e} vs q {q:e}");
                if eps <= 1e-9 {
                    assert!(err <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn semigroup_and_entry_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let p = pp(
                rng.gen_range(0.05..=1.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(1.0..4.0),
            );
            let xi = 10f64.powf(rng.gen_range(-3.0..3.0));
            let t = 10f64.powf(rng.gen_range(-3.0..2.0));
            let s = 10f64.powf(rng.gen_range(-3.0..2.0));
            let whole = green_entries(t + s, xi, &p);
            let prod = matmul(&green_entries(t, xi, &p), &green_entries(s, xi, &p));
            assert!(frobenius(&diff(&whole, &prod)) <= 1e-10 * frobenius(&whole) + 1e-250);
            assert_eq!(whole[1][0], -p.gamma * whole[0][1]);
        }
    }

    #[test]
    fn semigroup_on_the_double_root_at_long_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let (alpha, gamma): (f64, f64) = (rng.gen_range(0.05..1.0), rng.gen_range(1.0..4.0));
            let xi = 10f64.powf(rng.gen_range(-2.0..2.0));
            let p = pp(alpha, 2.0 * gamma.sqrt() * xi.powf(1.0 - alpha), gamma);
            let (t, s) = (rng.gen_range(1.0..100.0), rng.gen_range(1.0..100.0));
            let whole = green_entries(t + s, xi, &p);
            let prod = matmul(&green_entries(t, xi, &p), &green_entries(s, xi, &p));
            assert!(frobenius(&diff(&whole, &prod)) <= 1e-10 * frobenius(&whole) + 1e-250);
        }
    }

    #[test]
    fn no_overflow_in_stiff_low_frequency_limit() {
        let p = pp(0.25, 10.0, 1.0);
        let g = green_entries(1e6, 1e-3, &p);
        assert!(g.iter().flatten().all(|x| x.is_finite()));
        assert!(g[0][0] > 0.0 && g[0][0] < 1.0);
    }

    fn inverse(a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
    }

    #[test]
    fn etd_weights_match_resolvent_formulas() {
        // With A invertible: ∫₀ʰe^{As}ds = A⁻¹(e^{Ah} - I), h⁻¹∫₀ʰe^{A(h-s)}s ds = A⁻²(e^{Ah} - I - hA)/h.
        for (alpha, mu, gamma) in [(0.5, 1.0, 1.0), (1.0, 0.7, 2.0), (0.25, 3.0, 1.5)] {
            let p = PhysParams::new(alpha, mu, gamma, 2).unwrap();
            for (h, xi) in [(0.1, 0.3), (0.5, 2.0), (1.0, 0.05), (0.2, 7.0)] {
                let w = etd_weights(h, xi, &p).unwrap();
                let a = generator(xi, &p);
                let inv = inverse(&a);
                let e = green_entries(h, xi, &p);
                let mut em = e;
                em[0][0] -= 1.0;
                em[1][1] -= 1.0;
                let p1 = matmul(&inv, &em);
                let mut r = em;
                for i in 0..2 {
                    for j in 0..2 {
                        r[i][j] = (r[i][j] - h * a[i][j]) / h;
                    }
                }
                let p2 = matmul(&inv, &matmul(&inv, &r));
                let scale = frobenius(&p1);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((w.first[i][j] - p1[i][j]).abs() < 1e-9 * scale, "{h} {xi}");
                        assert!((w.second[i][j] - p2[i][j]).abs() < 1e-7 * scale, "{h} {xi}");
                    }
                }
                assert_eq!(w.propagator, e);
            }
        }
    }

    #[test]
    fn etd_weights_at_zero_mode() {
        let p = PhysParams::new(0.5, 1.0, 1.0, 2).unwrap();
        let w = etd_weights(0.3, 0.0, &p).unwrap();
        assert!((w.first[0][0] - 0.3).abs() < 1e-15 && w.first[0][1] == 0.0);
        assert!((w.second[1][1] - 0.15).abs() < 1e-15);
    }
}
