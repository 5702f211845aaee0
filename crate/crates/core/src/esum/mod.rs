//! Certified exponential-sum approximations of utility functions.
//!
//! [`esum_decompose`] extends `mu` to an even function `mu_hat` supported on
//! `[-2T, 2T]`, multiplies by `eta^x` with `eta = 2`, expands the product in a
//! Fourier series on `[-hT, hT]` and divides the bases back by `eta`. Each term
//! is `c_k psi_k^x` with `psi_k = e^{i pi k / (hT)} / eta`, so `|psi_k| = 1/2`.
//!
//! A term stores its exponent `rate = ln psi_k = -ln eta + i pi k / (hT)` rather
//! than `psi_k` itself, which keeps `psi_k^x` single-valued for real `x`.

mod two_dim;
mod utility;

pub use two_dim::{esum_decompose_2d, ExpTerm2D, ExponentialSum2D, Utility2D};
pub use utility::{check_eps, extend_utility, Blend, ExtendedUtility, UtilitySpec};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::arg_unit;
use crate::error::{Error, Result};
use crate::fourier::{fourier_coefficients, DEFAULT_OVERSAMPLE};

/// Base of the damping factor `eta^x`.
pub const ETA: f64 = 2.0;
/// Points in every certification grid.
pub const GRID_POINTS: usize = 10_000;
/// Cap on increments of the window factor `h`.
pub const MAX_WINDOW_ITERATIONS: usize = 20;

/// One term `coeff * exp(rate * x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coeff: Complex64,
    pub rate: Complex64,
}

impl ExpTerm {
    pub fn psi(&self) -> Complex64 {
        self.rate.exp()
    }

    /// `|psi|` and `arg(psi)` in `[0, 2pi)`.
    pub fn psi_polar(&self) -> (f64, f64) {
        (self.rate.re.exp(), arg_unit(self.psi()))
    }
}

/// `mu_tilde(x) = sum_k c_k psi_k^x` together with its measured accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSum {
    pub terms: Vec<ExpTerm>,
    pub eta: f64,
    pub h: f64,
    pub t_eps: f64,
    /// `max(grid_error, tail_error)`.
    pub certified_error: f64,
    /// `max |mu - mu_tilde|` on `[0, grid_max]`.
    pub grid_error: f64,
    /// `max |mu_tilde|` on `[grid_max, 2 grid_max]`.
    pub tail_error: f64,
    pub grid_max: f64,
}

impl ExponentialSum {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.iter().fold(0.0, |acc, t| acc + t.coeff.norm())
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.coeff).collect()
    }

    pub fn rates(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.rate).collect()
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|t| t.coeff * (t.rate * x).exp()).sum()
    }

    /// The sum for `x -> mu_tilde(scale * x)`; errors carry over unchanged in sup norm.
    pub fn rescaled(&self, scale: f64) -> ExponentialSum {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.rate *= scale;
        }
        out.t_eps /= scale;
        out.grid_max /= scale;
        out
    }
}

/// Tuning knobs of [`esum_decompose_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsumOptions {
    pub blend: Blend,
    pub oversample: usize,
    pub grid_points: usize,
}

impl Default for EsumOptions {
    fn default() -> Self {
        EsumOptions { blend: Blend::Smoothstep, oversample: DEFAULT_OVERSAMPLE, grid_points: GRID_POINTS }
    }
}

pub fn esum_decompose(mu: &UtilitySpec, eps: f64, max_terms: usize) -> Result<ExponentialSum> {
    esum_decompose_with(mu, eps, max_terms, &EsumOptions::default())
}

pub fn esum_decompose_with(
    mu: &UtilitySpec,
    eps: f64,
    max_terms: usize,
    opts: &EsumOptions,
) -> Result<ExponentialSum> {
    let ext = extend_utility(mu, eps, opts.blend)?;
    if max_terms < 3 {
        return Err(Error::param(format!("max_terms = {max_terms} must be at least 3")));
    }
    let t = ext.t_eps;
    let mut h = initial_window(eps, t);
    if mu.is_identically_zero() {
        return Ok(ExponentialSum {
            terms: Vec::new(),
            eta: ETA,
            h,
            t_eps: t,
            certified_error: 0.0,
            grid_error: 0.0,
            tail_error: 0.0,
            grid_max: 2.0 * h * t,
        });
    }
    let max_n = (max_terms - 1) / 2;
    for _ in 0..MAX_WINDOW_ITERATIONS {
        let half_width = h * t;
        let series = FourierSeries::fit(&ext, half_width, eps, max_n, opts)?;
        let abs_sum: f64 = series.coeffs.iter().map(|c| c.norm()).sum();
        // the damped tail beyond the window is at most 2^{-hT} sum |c_k| <= eps
        if half_width >= (abs_sum / eps).log2() {
            return Ok(series.certify(mu, h, t, opts.grid_points));
        }
        h += 1.0;
    }
    Err(Error::WindowNotConverged { iterations: MAX_WINDOW_ITERATIONS })
}

/// `max(2, ceil(log2(4/eps) / T))`.
pub fn initial_window(eps: f64, t: f64) -> f64 {
    ((4.0 / eps).log2() / t).ceil().max(2.0)
}

/// Fourier coefficients of `eta^x mu_hat(x)` on `[-H, H]`, read as an exponential sum.
struct FourierSeries {
    n: usize,
    half_width: f64,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    /// Doubles `N` until `|mu_hat - mu_tilde| <= eps` on `[0, H]`.
    fn fit(
        ext: &ExtendedUtility,
        half_width: f64,
        eps: f64,
        max_n: usize,
        opts: &EsumOptions,
    ) -> Result<Self> {
        let scale = half_width / PI;
        let f = |theta: f64| {
            let x = theta * scale;
            ETA.powf(x) * ext.value(x)
        };
        let mut n = 1usize.min(max_n);
        loop {
            let ps = fourier_coefficients(f, n, opts.oversample)?;
            let series = FourierSeries { n, half_width, coeffs: ps.coeffs().to_vec() };
            let err = series.max_error(|x| ext.value(x), 0.0, half_width, opts.grid_points);
            if err <= eps {
                return Ok(series);
            }
            if n >= max_n {
                return Err(Error::TermBudgetExceeded { terms: 2 * n + 1, achieved: err, target: eps });
            }
            n = (2 * n).min(max_n);
        }
    }

    /// `sum_k c_k exp((-ln eta + i pi k / H) x)` by a phase recurrence.
    fn evaluate(&self, x: f64) -> Complex64 {
        let omega = PI / self.half_width * x;
        let step = Complex64::from_polar(1.0, omega);
        let n = self.n as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut w = Complex64::from_polar(1.0, -(n as f64) * omega);
        for (j, c) in self.coeffs.iter().enumerate() {
            if j % 64 == 0 {
                // re-anchor to stop rounding drift in the recurrence
                w = Complex64::from_polar(1.0, (j as i64 - n) as f64 * omega);
            }
            acc += c * w;
            w *= step;
        }
        acc * ETA.powf(-x)
    }

    fn max_error<F: Fn(f64) -> f64>(&self, target: F, a: f64, b: f64, points: usize) -> f64 {
        (0..=points)
            .map(|j| {
                let x = a + (b - a) * j as f64 / points as f64;
                (self.evaluate(x) - target(x)).norm()
            })
            .fold(0.0, f64::max)
    }

    fn max_modulus(&self, a: f64, b: f64, points: usize) -> f64 {
        (0..=points).map(|j| self.evaluate(a + (b - a) * j as f64 / points as f64).norm()).fold(0.0, f64::max)
    }

    fn certify(self, mu: &UtilitySpec, h: f64, t: f64, points: usize) -> ExponentialSum {
        let grid_max = 2.0 * self.half_width;
        let grid_error = self.max_error(|x| mu.value(x), 0.0, grid_max, points);
        let tail_error = self.max_modulus(grid_max, 2.0 * grid_max, points);
        let n = self.n as i64;
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &coeff)| ExpTerm {
                coeff,
                rate: Complex64::new(-ETA.ln(), PI * (j as i64 - n) as f64 / self.half_width),
            })
            .collect();
        ExponentialSum {
            terms,
            eta: ETA,
            h,
            t_eps: t,
            certified_error: grid_error.max(tail_error),
            grid_error,
            tail_error,
            grid_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(delta: f64) -> UtilitySpec {
        UtilitySpec::threshold_ramp(delta, 1.0).unwrap()
    }

    fn assert_certified(s: &ExponentialSum, mu: &UtilitySpec, eps: f64) {
        assert!(s.certified_error <= 2.0 * eps, "{} > 2 * {eps}", s.certified_error);
        assert!(s.grid_max >= s.h * s.t_eps);
        for t in &s.terms {
            assert!((t.psi().norm() - 0.5).abs() < 1e-15);
        }
        // independent re-evaluation with the generic term formula
        let worst = (0..=2000)
            .map(|j| {
                let x = s.grid_max * j as f64 / 2000.0;
                (s.evaluate(x) - mu.value(x)).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst <= s.grid_error + 1e-9);
    }

    #[test]
    fn ramp_at_tenth() {
        let mu = ramp(0.5);
        let s = esum_decompose(&mu, 0.1, 81).unwrap();
        assert_certified(&s, &mu, 0.1);
        assert_eq!(s.len(), 33);
        assert!(s.t_eps == 1.5 && s.h == 4.0);
    }

    #[test]
    fn inverse_at_quarter() {
        let s = esum_decompose(&UtilitySpec::Inverse, 0.25, 81).unwrap();
        assert_certified(&s, &UtilitySpec::Inverse, 0.25);
        assert_eq!(s.t_eps, 3.0);
        assert!(s.terms.iter().all(|t| t.psi_polar().0 == 0.5));
    }

    #[test]
    fn zero_utility_is_empty() {
        let mu = UtilitySpec::PiecewiseLinear { points: vec![(0.0, 0.0), (1.0, 0.0)] };
        let s = esum_decompose(&mu, 0.1, 9).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.certified_error, 0.0);
    }

    #[test]
    fn term_budget_reported() {
        match esum_decompose(&ramp(0.25), 0.05, 9) {
            Err(Error::TermBudgetExceeded { terms, target, .. }) => {
                assert_eq!(terms, 9);
                assert_eq!(target, 0.05);
            }
            other => panic!("expected a budget error, got {other:?}"),
        }
        assert!(esum_decompose(&ramp(0.5), 0.1, 2).is_err());
        assert!(esum_decompose(&ramp(0.5), 0.6, 81).is_err());
    }

    #[test]
    fn coefficients_are_conjugate_symmetric() {
        let s = esum_decompose(&UtilitySpec::Inverse, 0.25, 81).unwrap();
        let l = s.len();
        for j in 0..l {
            let (a, b) = (s.terms[j], s.terms[l - 1 - j]);
            assert!((a.coeff - b.coeff.conj()).norm() < 1e-10);
            assert!((a.rate - b.rate.conj()).norm() < 1e-12);
        }
        for x in [0.0, 0.3, 2.0, 7.7] {
            assert!(s.evaluate(x).im.abs() < 1e-9);
        }
    }

    #[test]
    fn rescaling_reads_a_stretched_argument() {
        let s = esum_decompose(&ramp(0.5), 0.1, 81).unwrap();
        let r = s.rescaled(0.25);
        for x in [0.0, 1.0, 4.4, 9.0] {
            assert!((r.evaluate(x) - s.evaluate(0.25 * x)).norm() < 1e-12);
        }
    }

    #[test]
    fn piecewise_linear_decomposes() {
        let mu = UtilitySpec::PiecewiseLinear { points: vec![(0.0, 1.0), (1.0, 0.6), (2.0, 0.0)] };
        let s = esum_decompose(&mu, 0.1, 129).unwrap();
        assert_certified(&s, &mu, 0.1);
    }

    #[test]
    fn linear_blend_also_certifies() {
        let opts = EsumOptions { blend: Blend::Linear, ..EsumOptions::default() };
        let s = esum_decompose_with(&UtilitySpec::Inverse, 0.25, 129, &opts).unwrap();
        assert_certified(&s, &UtilitySpec::Inverse, 0.25);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn certificate_holds_for_random_ramps(
            delta in 0.3f64..1.5,
            threshold in 0.5f64..2.0,
            eps in 0.1f64..0.3,
        ) {
            let mu = UtilitySpec::threshold_ramp(delta, threshold).unwrap();
            let s = esum_decompose(&mu, eps, 257).unwrap();
            prop_assert!(s.certified_error <= 2.0 * eps);
            prop_assert!(s.tail_error <= 2.0 * eps);
            prop_assert!(s.terms.iter().all(|t| t.psi().norm() <= 1.0));
            // window condition that ends the h loop
            prop_assert!(s.h * s.t_eps >= (s.abs_coeff_sum() / eps).log2());
        }
    }
}
