//! Radial prolate spheroidal function `S_0^(1)(1, x)` and the quadrature
//! incompatibility constant built from it.
//!
//! The zeroth angular function is expanded in even Legendre polynomials,
//! `S_00(x, η) = Σ' d_r P_r(η)`. Its coefficients solve the three-term
//! recurrence
//!
//! ```text
//! α_r d_{r+2} + (β_r − λ) d_r + γ_r d_{r−2} = 0
//! ```
//!
//! for the smallest eigenvalue `λ`. Evaluating the finite Fourier transform
//! eigen-equation at the origin gives the radial value at ξ = 1 as
//! `d_0 / S_00(x, 0)`, normalized so that it tends to 1 as `x → 0`. That ratio
//! uses no spherical Bessel sums and stays well conditioned for large `x`,
//! where `S_00(x, 1)` is exponentially small.

use nalgebra::{DMatrix, SymmetricEigen};

/// Below this argument the radial factor is taken as exactly 1.
pub const SMALL_ARGUMENT: f64 = 1e-3;

/// Successive truncations must agree to this relative tolerance.
pub const SERIES_TOLERANCE: f64 = 1e-9;

const MAX_TERMS: usize = 4000;

fn alpha(r: f64, x2: f64) -> f64 {
    (r + 2.0) * (r + 1.0) * x2 / ((2.0 * r + 3.0) * (2.0 * r + 5.0))
}

fn beta(r: f64, x2: f64) -> f64 {
    r * (r + 1.0) + (2.0 * r * (r + 1.0) - 1.0) * x2 / ((2.0 * r - 1.0) * (2.0 * r + 3.0))
}

fn gamma(r: f64, x2: f64) -> f64 {
    r * (r - 1.0) * x2 / ((2.0 * r - 3.0) * (2.0 * r - 1.0))
}

/// Legendre coefficients `d_0, d_2, …, d_{2(terms-1)}` of `S_00(x, ·)`,
/// normalized to `d_0 > 0` and unit Euclidean norm of the symmetrized vector.
pub fn legendre_coefficients(x: f64, terms: usize) -> Vec<f64> {
    assert!(terms >= 2);
    let x2 = x * x;
    // Diagonal similarity D making the recurrence matrix symmetric.
    let mut scale = vec![1.0f64; terms];
    let mut sym = DMatrix::<f64>::zeros(terms, terms);
    for k in 0..terms {
        let r = 2.0 * k as f64;
        sym[(k, k)] = beta(r, x2);
        if k + 1 < terms {
            let up = alpha(r, x2);
            let down = gamma(r + 2.0, x2);
            let off = (up * down).sqrt();
            sym[(k, k + 1)] = off;
            sym[(k + 1, k)] = off;
            scale[k + 1] = scale[k] * (down / up).sqrt();
        }
    }
    let eig = SymmetricEigen::new(sym);
    let lowest = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let v = eig.eigenvectors.column(lowest);
    let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
    (0..terms).map(|k| sign * scale[k] * v[k]).collect()
}

/// `P_{2k}(0)` for `k = 0..terms`.
fn legendre_even_at_zero(terms: usize) -> impl Iterator<Item = f64> {
    // P_{2k}(0) = (-1)^k (2k-1)!! / (2k)!!
    (0..terms).scan(1.0f64, |p, k| {
        let out = *p;
        let kf = k as f64 + 1.0;
        *p *= -(2.0 * kf - 1.0) / (2.0 * kf);
        Some(out)
    })
}

fn radial_with_terms(x: f64, terms: usize) -> f64 {
    let d = legendre_coefficients(x, terms);
    let at_zero: f64 = d.iter().zip(legendre_even_at_zero(terms)).map(|(a, b)| a * b).sum();
    d[0] / at_zero
}

/// `S_0^(1)(1, x)` by the Legendre series, truncation grown until two
/// successive truncations agree to [`SERIES_TOLERANCE`].
pub fn radial_s0(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "argument must be positive, got {x}");
    let mut terms = (x / 2.0).ceil() as usize + 12;
    let mut prev = radial_with_terms(x, terms);
    loop {
        terms += 10;
        let next = radial_with_terms(x, terms);
        if (next - prev).abs() <= SERIES_TOLERANCE * next.abs() || terms >= MAX_TERMS {
            return next;
        }
        prev = next;
    }
}

/// Largest eigenvalue of the time-and-band limiting operator with bandwidth
/// parameter `x`, `(2x/π)·S_0^(1)(1, x)²`.
pub fn concentration_eigenvalue(x: f64) -> f64 {
    let s = radial_s0(x);
    (2.0 * x / std::f64::consts::PI * s * s).min(1.0)
}

/// Incompatibility `c(δq, δp) = (δq·δp / 2π) · S_0^(1)(1, δq·δp/4)²` of the
/// two binned quadrature measurements.
///
/// For `δq·δp/4 <` [`SMALL_ARGUMENT`] the radial factor is replaced by 1; the
/// relative error of that shortcut is below 1e-6 there (it scales as the
/// square of the argument).
pub fn incompatibility(delta_q: f64, delta_p: f64) -> f64 {
    assert!(delta_q > 0.0 && delta_p > 0.0, "bin widths must be positive");
    let x = delta_q * delta_p / 4.0;
    if x < SMALL_ARGUMENT {
        delta_q * delta_p / (2.0 * std::f64::consts::PI)
    } else {
        incompatibility_series(delta_q, delta_p)
    }
}

/// Incompatibility evaluated through the Legendre series at every argument.
pub fn incompatibility_series(delta_q: f64, delta_p: f64) -> f64 {
    concentration_eigenvalue(delta_q * delta_p / 4.0)
}
