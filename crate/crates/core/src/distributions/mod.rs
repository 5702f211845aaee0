//! Nonnegative element-weight laws and their complex moments `E[phi^w]`.
//!
//! `E[phi^w]` is the characteristic function of `w` evaluated at `-i ln phi`,
//! so every law with a known characteristic function has a closed form here.
//! Continuous laws without one go through [`quadrature::moment_quadrature`].
//!
//! Two entry points exist. [`moment`] takes a bare base `phi` and resolves
//! `ln phi` on the branch with `arg(phi)` in `[0, 2pi)`. [`moment_at_rate`] takes
//! the exponent `rate = ln phi` directly; the solver uses it, because the terms of
//! an exponential sum carry unwrapped phases whose powers at non-integer weights
//! depend on the branch.

pub mod quadrature;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution as _, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a discrete law's probabilities.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Largest admissible `Pr(w < 0)` for a Gaussian weight.
pub const GAUSSIAN_NEGATIVE_MASS: f64 = 1e-6;
/// Slack on `|phi| <= 1` absorbing rounding in callers.
const UNIT_DISK_TOL: f64 = 1e-12;

/// Law of a single nonnegative element weight.
///
/// Construction always validates; deserialization goes through the same checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    /// Finitely many `(value, probability)` atoms.
    Discrete(Vec<(f64, f64)>),
    Poisson {
        lambda: f64,
    },
    Exponential {
        rate: f64,
    },
    Gaussian {
        mean: f64,
        stddev: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DistributionSpec {
    Discrete { support: Vec<(f64, f64)> },
    Poisson { lambda: f64 },
    Exponential { rate: f64 },
    Gaussian { mean: f64, stddev: f64 },
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Discrete { support } => Distribution::discrete(support),
            DistributionSpec::Poisson { lambda } => Distribution::poisson(lambda),
            DistributionSpec::Exponential { rate } => Distribution::exponential(rate),
            DistributionSpec::Gaussian { mean, stddev } => Distribution::gaussian(mean, stddev),
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Discrete(support) => DistributionSpec::Discrete { support },
            Distribution::Poisson { lambda } => DistributionSpec::Poisson { lambda },
            Distribution::Exponential { rate } => DistributionSpec::Exponential { rate },
            Distribution::Gaussian { mean, stddev } => DistributionSpec::Gaussian { mean, stddev },
        }
    }
}

impl Distribution {
    pub fn discrete(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty discrete support".into()));
        }
        let mut total = 0.0;
        for &(v, p) in &support {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "discrete value {v} is not a finite nonnegative number"
                )));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidDistribution(format!("probability {p} outside (0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Distribution::Discrete(support))
    }

    /// A weight that is always `value`.
    pub fn point(value: f64) -> Result<Self> {
        Self::discrete(vec![(value, 1.0)])
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidDistribution(format!("poisson mean {lambda} must be positive")));
        }
        Ok(Distribution::Poisson { lambda })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidDistribution(format!("exponential rate {rate} must be positive")));
        }
        Ok(Distribution::Exponential { rate })
    }

    /// Gaussian weights are admitted only when their negative tail is negligible.
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        if !(stddev > 0.0 && stddev.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "gaussian needs finite mean and positive stddev, got ({mean}, {stddev})"
            )));
        }
        let negative_mass = normal_cdf(-mean / stddev);
        if negative_mass > GAUSSIAN_NEGATIVE_MASS {
            return Err(Error::InvalidDistribution(format!(
                "gaussian N({mean}, {stddev}^2) puts mass {negative_mass:.3e} below zero"
            )));
        }
        Ok(Distribution::Gaussian { mean, stddev })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Distribution::Discrete(_))
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Discrete(s) => s.iter().map(|&(v, p)| v * p).sum(),
            Distribution::Poisson { lambda } => *lambda,
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Gaussian { mean, .. } => *mean,
        }
    }

    /// Probability density for the continuous laws.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            Distribution::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            Distribution::Gaussian { mean, stddev } => {
                let z = (x - mean) / stddev;
                Some((-0.5 * z * z).exp() / (stddev * (TAU).sqrt()))
            }
            _ => None,
        }
    }

    /// Interval outside of which a continuous law has mass below `1e-10`.
    pub fn truncation_interval(&self) -> Option<(f64, f64)> {
        match *self {
            Distribution::Exponential { rate } => Some((0.0, 1e10f64.ln() / rate)),
            Distribution::Gaussian { mean, stddev } => {
                // Phi(-6.5) = 4.0e-11 per side
                Some(((mean - 6.5 * stddev).max(0.0), mean + 6.5 * stddev))
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Discrete(support) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in support {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                support[support.len() - 1].0
            }
            Distribution::Poisson { lambda } => Poisson::new(*lambda).expect("validated").sample(rng),
            Distribution::Exponential { rate } => Exp::new(*rate).expect("validated").sample(rng),
            Distribution::Gaussian { mean, stddev } => {
                Normal::new(*mean, *stddev).expect("validated").sample(rng)
            }
        }
    }
}

/// How a [`Moment`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    DirectSum,
    Quadrature,
}

/// A complex moment `E[phi^w]` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: Complex64,
    pub method: MomentMethod,
    pub abs_error_bound: f64,
}

impl Moment {
    fn exact(value: Complex64, method: MomentMethod) -> Self {
        Moment { value, method, abs_error_bound: 0.0 }
    }
}

/// Argument of `z` normalized into `[0, 2pi)`.
pub fn arg_unit(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        let shifted = a + TAU;
        // -0.0 and tiny negatives round to TAU
        if shifted >= TAU {
            0.0
        } else {
            shifted
        }
    } else {
        a
    }
}

/// `ln phi` with the argument taken in `[0, 2pi)`.
pub fn log_unit_branch(phi: Complex64) -> Complex64 {
    Complex64::new(phi.norm().ln(), arg_unit(phi))
}

/// `E[phi^w]` for a base on the closed unit disk.
pub fn moment(dist: &Distribution, phi: Complex64) -> Result<Moment> {
    let modulus = phi.norm();
    if !modulus.is_finite() || modulus > 1.0 + UNIT_DISK_TOL {
        return Err(Error::param(format!("moment base |phi| = {modulus} lies outside the unit disk")));
    }
    if modulus == 0.0 {
        return match dist {
            // 0^0 = 1, 0^v = 0 for v > 0
            Distribution::Discrete(support) => Ok(Moment::exact(
                Complex64::new(support.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum(), 0.0),
                MomentMethod::DirectSum,
            )),
            _ => Err(Error::param("phi = 0 has no logarithm for continuous laws")),
        };
    }
    moment_at_rate(dist, log_unit_branch(phi))
}

/// `E[exp(rate * w)]` for `Re(rate) <= 0`.
pub fn moment_at_rate(dist: &Distribution, rate: Complex64) -> Result<Moment> {
    if !(rate.re.is_finite() && rate.im.is_finite()) || rate.re > UNIT_DISK_TOL {
        return Err(Error::param(format!("moment exponent {rate} must have nonpositive real part")));
    }
    let value = match *dist {
        Distribution::Discrete(ref support) => {
            let v = support.iter().map(|&(x, p)| p * (rate * x).exp()).sum::<Complex64>();
            return Ok(Moment::exact(v, MomentMethod::DirectSum));
        }
        Distribution::Poisson { lambda } => (lambda * (rate.exp() - 1.0)).exp(),
        Distribution::Exponential { rate: r } => {
            if rate.re >= r {
                return Err(Error::MomentDiverges(format!(
                    "exponential rate {r} does not exceed Re(ln phi) = {}",
                    rate.re
                )));
            }
            r / (r - rate)
        }
        Distribution::Gaussian { mean, stddev } => (mean * rate + 0.5 * stddev * stddev * rate * rate).exp(),
    };
    Ok(Moment::exact(value, MomentMethod::ClosedForm))
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
