//! Exponential sums in two variables, `sum_k c_k psi1_k^x psi2_k^y`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::utility::{check_eps, Blend, UtilitySpec};
use super::{initial_window, ExponentialSum, ETA, MAX_WINDOW_ITERATIONS};
use crate::error::{Error, Result};
use crate::fourier::{fourier_coefficients_2d, DEFAULT_OVERSAMPLE};

/// Grid points per axis for the stopping test on `[0, H]^2`.
const FIT_GRID: usize = 120;
/// Grid points per axis for certification on `[0, 2H]^2` and the tail probe.
const CERT_GRID: usize = 240;

/// A utility of a two-dimensional weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Utility2D {
    /// `min(ramp(x), ramp(y))`: both coordinates within the threshold.
    Plateau {
        delta: f64,
        #[serde(default = "one")]
        threshold: f64,
    },
    /// `g(x) g(y)`.
    Product {
        factor: UtilitySpec,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

impl Utility2D {
    fn axis_ramp(delta: f64, threshold: f64) -> UtilitySpec {
        UtilitySpec::ThresholdRamp { delta, threshold }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Utility2D::Plateau { delta, threshold } => Self::axis_ramp(*delta, *threshold).validate(),
            Utility2D::Product { factor } => factor.validate(),
            Utility2D::Zero => Ok(()),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            Utility2D::Plateau { delta, threshold } => {
                let r = Self::axis_ramp(*delta, *threshold);
                r.value(x).min(r.value(y))
            }
            Utility2D::Product { factor } => factor.value(x) * factor.value(y),
            Utility2D::Zero => 0.0,
        }
    }

    pub fn tail_point(&self, eps: f64) -> f64 {
        match self {
            Utility2D::Plateau { delta, threshold } => threshold + delta,
            Utility2D::Product { factor } => factor.tail_point(eps),
            Utility2D::Zero => 1.0,
        }
    }
}

/// One term `coeff * exp(rate1 * x + rate2 * y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm2D {
    pub coeff: Complex64,
    pub rate1: Complex64,
    pub rate2: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSum2D {
    pub terms: Vec<ExpTerm2D>,
    pub eta: f64,
    pub h: f64,
    pub t_eps: f64,
    pub certified_error: f64,
    /// `max |mu - mu_tilde|` on `[0, grid_max]^2`.
    pub grid_error: f64,
    /// `max |mu_tilde|` on `[0, 2 grid_max]^2` outside `[0, grid_max]^2`.
    pub tail_error: f64,
    pub grid_max: f64,
}

impl ExponentialSum2D {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn evaluate(&self, x: f64, y: f64) -> Complex64 {
        self.terms.iter().map(|t| t.coeff * (t.rate1 * x + t.rate2 * y).exp()).sum()
    }

    /// `a(x) b(y)` as a two-dimensional sum, certified against `mu`.
    pub fn outer_product(a: &ExponentialSum, b: &ExponentialSum, mu: &Utility2D) -> Self {
        let terms: Vec<ExpTerm2D> = a
            .terms
            .iter()
            .flat_map(|s| {
                b.terms.iter().map(move |t| ExpTerm2D {
                    coeff: s.coeff * t.coeff,
                    rate1: s.rate,
                    rate2: t.rate,
                })
            })
            .collect();
        let grid_max = a.grid_max.min(b.grid_max);
        let mut out = ExponentialSum2D {
            terms,
            eta: a.eta,
            h: a.h.min(b.h),
            t_eps: a.t_eps.max(b.t_eps),
            certified_error: 0.0,
            grid_error: 0.0,
            tail_error: 0.0,
            grid_max,
        };
        out.certify(mu);
        out
    }

    fn certify(&mut self, mu: &Utility2D) {
        let g = self.grid_max;
        let inner = GridEval::new(&self.terms, g, CERT_GRID);
        self.grid_error = inner.max_deviation(|x, y| mu.value(x, y));
        let outer = GridEval::new(&self.terms, 2.0 * g, CERT_GRID);
        self.tail_error = outer.max_modulus_outside(g);
        self.certified_error = self.grid_error.max(self.tail_error);
    }
}

/// Values of a two-dimensional sum on a uniform square grid `[0, b]^2`.
///
/// Rates factor by axis, so the grid is evaluated as `E1 * diag(c) * E2^T`
/// grouped by distinct `rate1`.
struct GridEval {
    nodes: Vec<f64>,
    values: Vec<Complex64>,
}

impl GridEval {
    fn new(terms: &[ExpTerm2D], b: f64, points: usize) -> Self {
        let nodes: Vec<f64> = (0..=points).map(|j| b * j as f64 / points as f64).collect();
        let g = nodes.len();
        let mut values = vec![Complex64::new(0.0, 0.0); g * g];
        let mut start = 0;
        while start < terms.len() {
            let rate1 = terms[start].rate1;
            let mut end = start;
            while end < terms.len() && terms[end].rate1 == rate1 {
                end += 1;
            }
            // inner[y] = sum over the group of c * exp(rate2 * y)
            let inner: Vec<Complex64> = nodes
                .iter()
                .map(|&y| terms[start..end].iter().map(|t| t.coeff * (t.rate2 * y).exp()).sum())
                .collect();
            for (i, &x) in nodes.iter().enumerate() {
                let e = (rate1 * x).exp();
                for (j, v) in inner.iter().enumerate() {
                    values[i * g + j] += e * v;
                }
            }
            start = end;
        }
        GridEval { nodes, values }
    }

    fn max_deviation<F: Fn(f64, f64) -> f64>(&self, target: F) -> f64 {
        let g = self.nodes.len();
        let mut worst = 0.0f64;
        for (i, &x) in self.nodes.iter().enumerate() {
            for (j, &y) in self.nodes.iter().enumerate() {
                worst = worst.max((self.values[i * g + j] - target(x, y)).norm());
            }
        }
        worst
    }

    fn max_modulus_outside(&self, inner: f64) -> f64 {
        let g = self.nodes.len();
        let mut worst = 0.0f64;
        for (i, &x) in self.nodes.iter().enumerate() {
            for (j, &y) in self.nodes.iter().enumerate() {
                if x.max(y) >= inner {
                    worst = worst.max(self.values[i * g + j].norm());
                }
            }
        }
        worst
    }
}

/// Two-dimensional counterpart of [`super::esum_decompose`]; `max_terms` bounds `(2N+1)^2`.
pub fn esum_decompose_2d(mu2: &Utility2D, eps: f64, max_terms: usize) -> Result<ExponentialSum2D> {
    check_eps(eps)?;
    mu2.validate()?;
    if max_terms < 9 {
        return Err(Error::param(format!("max_terms = {max_terms} must allow at least 3 x 3 terms")));
    }
    let t = mu2.tail_point(eps);
    if !(t > 0.0) {
        return Err(Error::param(format!("tail point {t} must be positive")));
    }
    let mut h = initial_window(eps, t);
    if *mu2 == Utility2D::Zero {
        return Ok(ExponentialSum2D {
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
    let cutoff = |a: f64| {
        if a <= t {
            1.0
        } else {
            Blend::Smoothstep.cutoff((a - t) / t)
        }
    };
    // mu2 frozen at the tail point on each axis, times a cutoff per axis
    let mu_hat = |x: f64, y: f64| {
        let (ax, ay) = (x.abs(), y.abs());
        if ax >= 2.0 * t || ay >= 2.0 * t {
            return 0.0;
        }
        mu2.value(ax.min(t), ay.min(t)) * cutoff(ax) * cutoff(ay)
    };
    let side = ((max_terms as f64).sqrt().floor() as usize).max(3);
    let max_n = (side - 1) / 2;
    for _ in 0..MAX_WINDOW_ITERATIONS {
        let half_width = h * t;
        let scale = half_width / PI;
        let f = |u: f64, v: f64| {
            let (x, y) = (u * scale, v * scale);
            ETA.powf(x + y) * mu_hat(x, y)
        };
        let mut n = 1usize;
        let sum = loop {
            let ps = fourier_coefficients_2d(f, n, DEFAULT_OVERSAMPLE)?;
            let terms: Vec<ExpTerm2D> = ps
                .iter()
                .map(|((k1, k2), coeff)| ExpTerm2D {
                    coeff,
                    rate1: Complex64::new(-ETA.ln(), PI * k1 as f64 / half_width),
                    rate2: Complex64::new(-ETA.ln(), PI * k2 as f64 / half_width),
                })
                .collect();
            let err = GridEval::new(&terms, half_width, FIT_GRID).max_deviation(mu_hat);
            if err <= eps {
                break terms;
            }
            if n >= max_n {
                return Err(Error::TermBudgetExceeded {
                    terms: (2 * n + 1) * (2 * n + 1),
                    achieved: err,
                    target: eps,
                });
            }
            n = (2 * n).min(max_n);
        };
        let abs_sum: f64 = sum.iter().map(|t| t.coeff.norm()).sum();
        if half_width >= (abs_sum / eps).log2() {
            let mut out = ExponentialSum2D {
                terms: sum,
                eta: ETA,
                h,
                t_eps: t,
                certified_error: 0.0,
                grid_error: 0.0,
                tail_error: 0.0,
                grid_max: 2.0 * half_width,
            };
            out.certify(mu2);
            return Ok(out);
        }
        h += 1.0;
    }
    Err(Error::WindowNotConverged { iterations: MAX_WINDOW_ITERATIONS })
}
