//! Truncated Fourier series of real functions on `[-pi, pi]` and `[-pi, pi]^2`.
//!
//! Coefficients come from the trapezoidal rule on `M` uniform samples, which is
//! exactly a length-`M` DFT; the transform itself is delegated to `rustfft`.
//! For the periodic integrands produced by [`crate::esum`] the trapezoidal rule
//! converges spectrally, so no adaptive quadrature is needed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Samples per harmonic slot: `M = oversample * (2N + 1)`, about `16N`.
pub const DEFAULT_OVERSAMPLE: usize = 8;

/// `S_N f(x) = sum_{k=-N}^{N} c_k e^{ikx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPartialSum {
    n: usize,
    /// `coeffs[k + n] = c_k`.
    coeffs: Vec<Complex64>,
}

impl FourierPartialSum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.n as i64) as usize]
    }

    /// Coefficients in order `c_{-N}, ..., c_N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn evaluate_complex(&self, x: f64) -> Complex64 {
        let n = self.n as i64;
        (-n..=n).map(|k| self.coeff(k) * Complex64::from_polar(1.0, k as f64 * x)).sum()
    }

    /// Real part of the partial sum; `x` outside `[-pi, pi]` reads the periodic extension.
    pub fn evaluate(&self, x: f64) -> f64 {
        let v = self.evaluate_complex(x);
        debug_assert!(v.im.abs() <= 1e-9 * self.abs_sum().max(1.0));
        v.re
    }

    /// Largest deviation of `c_{-k}` from `conj(c_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n as i64;
        (0..=n).map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm()).fold(0.0, f64::max)
    }
}

fn check_sampling(n: usize, oversample: usize) -> Result<usize> {
    if oversample == 0 {
        return Err(Error::param("oversample must be positive"));
    }
    let m = oversample * (2 * n + 1);
    if m < 8 * n {
        return Err(Error::param(format!(
            "{m} samples are too few for {n} harmonics (need at least {})",
            8 * n
        )));
    }
    Ok(m)
}

/// Trapezoid coefficients `c_k`, `|k| <= N`, from `M` uniform samples of `f` on `[-pi, pi)`.
pub fn fourier_coefficients<F: Fn(f64) -> f64>(
    f: F,
    n: usize,
    oversample: usize,
) -> Result<FourierPartialSum> {
    let m = check_sampling(n, oversample)?;
    let mut buf: Vec<Complex64> =
        (0..m).map(|j| Complex64::new(f(-PI + 2.0 * PI * j as f64 / m as f64), 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let ni = n as i64;
    let raw: Vec<Complex64> = (-ni..=ni)
        .map(|k| {
            // the grid starts at -pi, contributing e^{ik pi} = (-1)^k
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[k.rem_euclid(m as i64) as usize] * (scale * sign)
        })
        .collect();
    let coeffs = (0..raw.len()).map(|i| 0.5 * (raw[i] + raw[raw.len() - 1 - i].conj())).collect();
    Ok(FourierPartialSum { n, coeffs })
}

/// Largest `|f(x) - S_N f(x)|` over `grid_size` uniform points of `[-pi, pi]`.
pub fn sup_error<F: Fn(f64) -> f64>(ps: &FourierPartialSum, f: F, grid_size: usize) -> Result<f64> {
    if grid_size < 1000 {
        return Err(Error::param("sup_error needs at least 1000 grid points"));
    }
    Ok((0..grid_size)
        .map(|j| {
            let x = -PI + 2.0 * PI * j as f64 / (grid_size - 1) as f64;
            (f(x) - ps.evaluate(x)).abs()
        })
        .fold(0.0, f64::max))
}

/// `|f(x) - f(y)| <= coefficient * |x - y|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderSpec {
    pub alpha: f64,
    pub coefficient: f64,
}

impl HolderSpec {
    pub fn new(alpha: f64, coefficient: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) || !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(Error::param(format!(
                "Hoelder exponent {alpha} must lie in (0, 1] with positive coefficient"
            )));
        }
        Ok(HolderSpec { alpha, coefficient })
    }

    /// Jackson-type estimate `coefficient * (1 + ln N) / N^alpha` with unit constant.
    pub fn jackson_estimate(&self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        self.coefficient * (1.0 + n.ln()) / n.powf(self.alpha)
    }

    /// Smallest power of two whose Jackson estimate is at most `eps`.
    pub fn suggested_n(&self, eps: f64) -> usize {
        let mut n = 1usize;
        while self.jackson_estimate(n) > eps && n < 1 << 30 {
            n *= 2;
        }
        n
    }
}

/// `sum_{|k1|, |k2| <= N} c_{k1,k2} e^{i(k1 x + k2 y)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPartialSum2D {
    n: usize,
    /// Row-major in `(k1 + n, k2 + n)`.
    coeffs: Vec<Complex64>,
}

impl FourierPartialSum2D {
    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.n + 1
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        self.coeffs[((k1 + n) as usize) * self.width() + (k2 + n) as usize]
    }

    /// All `((k1, k2), c)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        let n = self.n as i64;
        let w = self.width();
        self.coeffs.iter().enumerate().map(move |(i, &c)| (((i / w) as i64 - n, (i % w) as i64 - n), c))
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        self.iter()
            .map(|((k1, k2), c)| c * Complex64::from_polar(1.0, k1 as f64 * x + k2 as f64 * y))
            .sum::<Complex64>()
            .re
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.iter().map(|((k1, k2), c)| (self.coeff(-k1, -k2) - c.conj()).norm()).fold(0.0, f64::max)
    }
}

/// Tensor-product trapezoid coefficients on `M x M` samples.
pub fn fourier_coefficients_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    n: usize,
    oversample: usize,
) -> Result<FourierPartialSum2D> {
    let m = check_sampling(n, oversample)?;
    let node = |j: usize| -PI + 2.0 * PI * j as f64 / m as f64;
    let mut grid: Vec<Complex64> =
        (0..m * m).map(|i| Complex64::new(f(node(i / m), node(i % m)), 0.0)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    // rows (second axis), then columns (first axis)
    fft.process(&mut grid);
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        for r in 0..m {
            column[r] = grid[r * m + c];
        }
        fft.process(&mut column);
        for r in 0..m {
            grid[r * m + c] = column[r];
        }
    }
    let scale = 1.0 / (m * m) as f64;
    let ni = n as i64;
    let w = 2 * n + 1;
    let mut raw = Vec::with_capacity(w * w);
    for k1 in -ni..=ni {
        for k2 in -ni..=ni {
            let sign = if (k1 + k2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let idx = k1.rem_euclid(m as i64) as usize * m + k2.rem_euclid(m as i64) as usize;
            raw.push(grid[idx] * (scale * sign));
        }
    }
    let coeffs = (0..raw.len()).map(|i| 0.5 * (raw[i] + raw[raw.len() - 1 - i].conj())).collect();
    Ok(FourierPartialSum2D { n, coeffs })
}

/// Largest `|f - S_N f|` over a `grid_size x grid_size` uniform grid of `[-pi, pi]^2`.
pub fn sup_error_2d<F: Fn(f64, f64) -> f64>(ps: &FourierPartialSum2D, f: F, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::param("2-D grid needs at least two points per axis"));
    }
    let node = |j: usize| -PI + 2.0 * PI * j as f64 / (grid_size - 1) as f64;
    let mut worst = 0.0f64;
    for i in 0..grid_size {
        for j in 0..grid_size {
            let (x, y) = (node(i), node(j));
            worst = worst.max((f(x, y) - ps.evaluate(x, y)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_is_exact() {
        let ps = fourier_coefficients(f64::cos, 2, DEFAULT_OVERSAMPLE).unwrap();
        for k in -2..=2i64 {
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((ps.coeff(k) - Complex64::new(expect, 0.0)).norm() < 1e-10);
        }
        assert!((ps.evaluate(0.0) - 1.0).abs() < 1e-12);
        assert!(ps.evaluate(PI / 2.0).abs() < 1e-10);
        assert!(sup_error(&ps, f64::cos, 1000).unwrap() <= 1e-9);
    }

    #[test]
    fn zero_and_constant() {
        let z = fourier_coefficients(|_| 0.0, 5, DEFAULT_OVERSAMPLE).unwrap();
        assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));
        let c = fourier_coefficients(|_| 0.3, 1, DEFAULT_OVERSAMPLE).unwrap();
        assert!(sup_error(&c, |_| 0.3, 1000).unwrap() <= 1e-10);
    }

    #[test]
    fn triangle_wave_coefficients() {
        let ps = fourier_coefficients(f64::abs, 8, DEFAULT_OVERSAMPLE).unwrap();
        assert!((ps.coeff(0).re - PI / 2.0).abs() < 1e-2);
        for k in [1i64, 3, 5, 7] {
            let kf = k as f64;
            let exact = ((kf * PI).cos() - 1.0) / (PI * kf * kf);
            // trapezoid aliasing error is O(1/M^2) on the kink at +-pi
            assert!((ps.coeff(k).re - exact).abs() < 2e-3, "k = {k}");
            assert!((ps.coeff(-k).re - exact).abs() < 2e-3);
        }
        // evaluation equals the direct coefficient sum sum_k c_k i^k
        let direct: Complex64 = (-8..=8i64).map(|k| ps.coeff(k) * Complex64::i().powi(k as i32)).sum();
        assert!((ps.evaluate(PI / 2.0) - direct.re).abs() < 1e-12);
        assert!((ps.evaluate(PI / 2.0) - PI / 2.0).abs() < 0.05);
    }

    #[test]
    fn triangle_wave_with_fine_sampling_matches_analytic() {
        let ps = fourier_coefficients(f64::abs, 8, 512).unwrap();
        assert!((ps.coeff(0).re - PI / 2.0).abs() < 1e-5);
        for k in 1..=8i64 {
            let kf = k as f64;
            let exact = ((kf * PI).cos() - 1.0) / (PI * kf * kf);
            assert!((ps.coeff(k).re - exact).abs() < 1e-5, "k = {k}");
        }
    }

    #[test]
    fn undersampling_rejected() {
        assert!(fourier_coefficients(f64::cos, 8, 0).is_err());
        assert!(fourier_coefficients(f64::cos, 8, 3).is_err());
        assert!(sup_error(&fourier_coefficients(f64::cos, 1, 8).unwrap(), f64::cos, 999).is_err());
    }

    /// Even ramp: 1 on `|x| <= 1`, 0 beyond `1 + delta`.
    fn ramp(delta: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| ((1.0 + delta - x.abs()) / delta).clamp(0.0, 1.0)
    }

    #[test]
    fn jackson_rate_on_lipschitz_ramps() {
        for delta in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let f = ramp(delta);
            let errs: Vec<f64> = [8, 16, 32, 64]
                .iter()
                .map(|&n| {
                    let ps = fourier_coefficients(&f, n, DEFAULT_OVERSAMPLE).unwrap();
                    sup_error(&ps, &f, 4000).unwrap()
                })
                .collect();
            for w in errs.windows(2) {
                assert!(w[1] <= 0.75 * w[0], "delta {delta}: {errs:?}");
            }
        }
    }

    #[test]
    fn holder_heuristic() {
        let h = HolderSpec::new(1.0, 2.0).unwrap();
        assert!(h.jackson_estimate(64) < h.jackson_estimate(8));
        let n = h.suggested_n(0.1);
        assert!(h.jackson_estimate(n) <= 0.1 && h.jackson_estimate(n / 2) > 0.1);
        assert!(HolderSpec::new(1.5, 1.0).is_err());
        assert!(HolderSpec::new(0.5, 0.0).is_err());
    }

    #[test]
    fn product_cosine_2d() {
        let ps = fourier_coefficients_2d(|x, y| x.cos() * y.cos(), 2, DEFAULT_OVERSAMPLE).unwrap();
        for ((k1, k2), c) in ps.iter() {
            let expect = if k1.abs() == 1 && k2.abs() == 1 { 0.25 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-10, "({k1},{k2})");
        }
        let one = fourier_coefficients_2d(|_, _| 1.0, 3, DEFAULT_OVERSAMPLE).unwrap();
        for ((k1, k2), c) in one.iter() {
            let expect = if (k1, k2) == (0, 0) { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_2d_coefficients() {
        // sin x cos 2y = (e^{ix} - e^{-ix})(e^{2iy} + e^{-2iy}) / 4i
        let ps = fourier_coefficients_2d(|x, y| x.sin() * (2.0 * y).cos(), 3, DEFAULT_OVERSAMPLE).unwrap();
        assert!((ps.coeff(1, 2) - Complex64::new(0.0, -0.25)).norm() < 1e-12);
        assert!((ps.coeff(-1, -2) - Complex64::new(0.0, 0.25)).norm() < 1e-12);
        assert!((ps.evaluate(0.7, -0.3) - 0.7f64.sin() * (-0.6f64).cos()).abs() < 1e-12);
    }

    #[test]
    fn plateau_2d_rate() {
        let r = ramp(0.5);
        let f = |x: f64, y: f64| r(x).min(r(y));
        let e8 = sup_error_2d(&fourier_coefficients_2d(f, 8, DEFAULT_OVERSAMPLE).unwrap(), f, 200).unwrap();
        let e16 = sup_error_2d(&fourier_coefficients_2d(f, 16, DEFAULT_OVERSAMPLE).unwrap(), f, 200).unwrap();
        assert!(e16 < e8, "{e8} -> {e16}");
    }

    proptest! {
        #[test]
        fn hermitian_and_parseval(
            a in proptest::collection::vec(-1.0f64..1.0, 4),
            b in proptest::collection::vec(-1.0f64..1.0, 4),
            n in 1usize..12,
        ) {
            let f = |x: f64| {
                a.iter().enumerate().map(|(j, c)| c * ((j as f64) * x).cos()).sum::<f64>()
                    + b.iter().enumerate().map(|(j, c)| c * ((j as f64 + 1.0) * x).sin()).sum::<f64>()
                    + (x.cos()).exp() * a[0]
            };
            let ps = fourier_coefficients(f, n, DEFAULT_OVERSAMPLE).unwrap();
            prop_assert!(ps.hermitian_defect() <= 1e-10);
            for x in [-3.0, -1.0, 0.0, 0.4, 2.9] {
                prop_assert!(ps.evaluate_complex(x).im.abs() <= 1e-9 * ps.abs_sum().max(1.0));
            }
            // (1/2pi) int f^2 by a fine midpoint rule
            let m = 20000;
            let energy = (0..m)
                .map(|j| f(-PI + 2.0 * PI * (j as f64 + 0.5) / m as f64).powi(2))
                .sum::<f64>() / m as f64;
            let coeff_energy: f64 = ps.coeffs().iter().map(|c| c.norm_sqr()).sum();
            prop_assert!(coeff_energy <= energy + 1e-6);
        }

        #[test]
        fn hermitian_2d(n in 1usize..5, s in -1.0f64..1.0) {
            let f = |x: f64, y: f64| (x + s * y).sin() + (x * y).cos() * s;
            let ps = fourier_coefficients_2d(f, n, DEFAULT_OVERSAMPLE).unwrap();
            prop_assert!(ps.hermitian_defect() <= 1e-10);
        }
    }
}
