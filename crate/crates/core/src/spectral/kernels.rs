//! One-dimensional Dirichlet and Fejér kernels and Cesàro means.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

const SINGULAR: f64 = 1e-8;

/// `D_n(u) = Σ_{|k|<=n} e^{iku} = sin((n+½)u) / sin(u/2)`.
pub fn dirichlet_kernel(n: usize, u: f64) -> f64 {
    let half = (0.5 * u).sin();
    if half.abs() < SINGULAR {
        // near u ≡ 0 (mod 2π) the quotient loses all precision
        return 1.0 + 2.0 * (1..=n).map(|k| (k as f64 * u).cos()).sum::<f64>();
    }
    ((n as f64 + 0.5) * u).sin() / half
}

/// `K_n(u) = (1/(n+1)) Σ_{r=0}^{n} D_r(u) = (1/(n+1)) (sin((n+1)u/2) / sin(u/2))²`.
pub fn fejer_kernel(n: usize, u: f64) -> f64 {
    let m = n as f64 + 1.0;
    let half = (0.5 * u).sin();
    if half.abs() < SINGULAR {
        return (0..=n)
            .map(|k| (m - k as f64) * if k == 0 { 1.0 } else { 2.0 * (k as f64 * u).cos() })
            .sum::<f64>()
            / m;
    }
    let q = (0.5 * m * u).sin() / half;
    q * q / m
}

/// `σ_n = (1/(n+1)) Σ_{r=0}^{n} S_r` for any provider of the partial sums
/// `r ↦ S_r` at a fixed point.
pub fn cesaro_mean(mut partial: impl FnMut(usize) -> Complex64, n: usize) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for r in 0..=n {
        total += partial(r);
    }
    total / (n as f64 + 1.0)
}

/// `σ_n(t)` of a one-dimensional spectrum as the convolution
/// `(1/2π) ∫ K_n(u) φ(t − u) du`.
///
/// The integrand is a trigonometric polynomial of degree at most `n + B`, so
/// the uniform rule with more than `n + B` nodes evaluates it exactly.
pub fn fejer_mean(s: &Spectrum, n: usize, t: f64) -> Result<Complex64> {
    if s.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: s.dimension(),
        });
    }
    let b = s.bandwidth()[0] as i64;
    let nodes = 2 * (n + b as usize + 1);
    let mut total = Complex64::new(0.0, 0.0);
    for l in 0..nodes {
        let u = 2.0 * PI * l as f64 / nodes as f64;
        let mut phi = Complex64::new(0.0, 0.0);
        for k in -b..=b {
            phi += s.get(&[k]) * Complex64::cis(k as f64 * (t - u));
        }
        total += phi * fejer_kernel(n, u);
    }
    Ok(total / nodes as f64)
}
