//! Composite Gauss–Legendre quadrature for moments of continuous densities.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{log_unit_branch, Distribution, Moment, MomentMethod};
use crate::error::{Error, Result};

/// Tolerance on the density mass over the integration interval.
pub const MASS_TOL: f64 = 1e-6;

/// Nodes and weights of the degree-`k` Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[k - 1 - i] = -x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `int_a^b g(x) dx` by `m` equal panels of the degree-`k` rule.
pub fn composite<F: Fn(f64) -> Complex64>(g: F, a: f64, b: f64, m: usize, k: usize) -> Complex64 {
    let (nodes, weights) = gauss_legendre(k);
    let width = (b - a) / m as f64;
    let half = 0.5 * width;
    let mut total = Complex64::new(0.0, 0.0);
    for panel in 0..m {
        let mid = a + (panel as f64 + 0.5) * width;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(&weights) {
            acc += *w * g(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// `int_a^b phi^x density(x) dx` with the `M` versus `2M` change as error estimate.
pub fn moment_quadrature<D: Fn(f64) -> f64>(
    density: D,
    support: (f64, f64),
    phi: Complex64,
    subintervals: usize,
    degree: usize,
) -> Result<Moment> {
    if phi.norm() > 1.0 + 1e-12 || phi.norm() == 0.0 {
        return Err(Error::param(format!("quadrature base |phi| = {} must lie in (0, 1]", phi.norm())));
    }
    moment_quadrature_at_rate(density, support, log_unit_branch(phi), subintervals, degree)
}

/// `int_a^b exp(rate x) density(x) dx`, see [`moment_quadrature`].
pub fn moment_quadrature_at_rate<D: Fn(f64) -> f64>(
    density: D,
    (a, b): (f64, f64),
    rate: Complex64,
    subintervals: usize,
    degree: usize,
) -> Result<Moment> {
    if subintervals == 0 || degree == 0 {
        return Err(Error::param("quadrature needs at least one panel and degree one"));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::param(format!("quadrature interval [{a}, {b}] is empty")));
    }
    if rate.re > 1e-12 {
        return Err(Error::param("quadrature exponent must have nonpositive real part"));
    }
    let mass = composite(|x| Complex64::new(density(x), 0.0), a, b, subintervals, degree).re;
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!("density integrates to {mass} on [{a}, {b}]")));
    }
    let g = |x: f64| (rate * x).exp() * density(x);
    let coarse = composite(g, a, b, subintervals, degree);
    let fine = composite(g, a, b, 2 * subintervals, degree);
    Ok(Moment { value: coarse, method: MomentMethod::Quadrature, abs_error_bound: (fine - coarse).norm() })
}

/// Quadrature moment of a continuous law over its default truncation interval.
pub fn distribution_moment_quadrature(
    dist: &Distribution,
    phi: Complex64,
    subintervals: usize,
    degree: usize,
) -> Result<Moment> {
    let support = dist
        .truncation_interval()
        .ok_or_else(|| Error::param("quadrature applies to continuous laws only"))?;
    moment_quadrature(|x| dist.density(x).unwrap_or(0.0), support, phi, subintervals, degree)
}
