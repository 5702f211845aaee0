//! Utility functions on `[0, inf)` and their compactly supported even extensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_threshold() -> f64 {
    1.0
}

/// A utility `mu` with `0 <= mu <= 1` that is at most `eps` beyond its tail point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// 1 up to `threshold`, linear down to 0 at `threshold + delta`.
    ThresholdRamp {
        delta: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// `1 / (x + 1)`.
    Inverse,
    /// Linear interpolation of `(x, y)` breakpoints; constant before the first,
    /// zero after the last.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl UtilitySpec {
    pub fn threshold_ramp(delta: f64, threshold: f64) -> Result<Self> {
        let u = UtilitySpec::ThresholdRamp { delta, threshold };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UtilitySpec::ThresholdRamp { delta, threshold } => {
                if !(*delta > 0.0 && delta.is_finite() && *threshold > 0.0 && threshold.is_finite()) {
                    return Err(Error::param(format!(
                        "ramp needs positive delta and threshold, got ({delta}, {threshold})"
                    )));
                }
            }
            UtilitySpec::Inverse => {}
            UtilitySpec::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err(Error::param("piecewise-linear utility needs breakpoints"));
                }
                for &(x, y) in points {
                    if !(x >= 0.0 && x.is_finite() && (0.0..=1.0).contains(&y)) {
                        return Err(Error::param(format!("breakpoint ({x}, {y}) outside [0, inf) x [0, 1]")));
                    }
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::param("breakpoints must be strictly increasing in x"));
                }
                if points[points.len() - 1].1 != 0.0 {
                    return Err(Error::param("last breakpoint must have y = 0"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::ThresholdRamp { delta, threshold } => {
                (1.0 - (x - threshold) / delta).clamp(0.0, 1.0)
            }
            UtilitySpec::Inverse => 1.0 / (x.max(0.0) + 1.0),
            UtilitySpec::PiecewiseLinear { points } => {
                let first = points[0];
                if x <= first.0 {
                    return first.1;
                }
                match points.iter().position(|p| p.0 >= x) {
                    None => 0.0,
                    Some(i) => {
                        let (x0, y0) = points[i - 1];
                        let (x1, y1) = points[i];
                        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    /// A point beyond which `mu <= eps`.
    pub fn tail_point(&self, eps: f64) -> f64 {
        match self {
            UtilitySpec::ThresholdRamp { delta, threshold } => threshold + delta,
            UtilitySpec::Inverse => 1.0 / eps - 1.0,
            UtilitySpec::PiecewiseLinear { points } => points[points.len() - 1].0.max(1e-9),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            UtilitySpec::PiecewiseLinear { points } => points.iter().all(|p| p.1 == 0.0),
            _ => false,
        }
    }

    /// Lipschitz constant on `[0, inf)`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            UtilitySpec::ThresholdRamp { delta, .. } => 1.0 / delta,
            UtilitySpec::Inverse => 1.0,
            UtilitySpec::PiecewiseLinear { points } => {
                points.windows(2).map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// Interpolation used on `[T, 2T]` to bring the extension down to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blend {
    /// `1 - (3t^2 - 2t^3)`: continuously differentiable at both ends.
    #[default]
    Smoothstep,
    Linear,
}

impl Blend {
    /// Falls from 1 at `t = 0` to 0 at `t = 1`.
    pub fn cutoff(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Blend::Smoothstep => 1.0 - t * t * (3.0 - 2.0 * t),
            Blend::Linear => 1.0 - t,
        }
    }
}

/// The even, compactly supported extension `mu_hat` of a utility.
///
/// `mu_hat = mu` on `[0, T]`, falls to 0 on `[T, 2T]`, vanishes beyond `2T` and
/// satisfies `mu_hat(-x) = mu_hat(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedUtility {
    pub utility: UtilitySpec,
    pub t_eps: f64,
    pub blend: Blend,
    mu_t: f64,
}

impl ExtendedUtility {
    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.t_eps {
            self.utility.value(a)
        } else {
            self.mu_t * self.cutoff(a)
        }
    }

    /// Multiplier that is 1 on `[0, T]` and blends to 0 on `[T, 2T]`.
    pub fn cutoff(&self, a: f64) -> f64 {
        if a <= self.t_eps {
            1.0
        } else {
            self.blend.cutoff((a - self.t_eps) / self.t_eps)
        }
    }
}

pub fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param(format!("eps = {eps} must lie in (0, 0.5)")));
    }
    Ok(())
}

pub fn extend_utility(mu: &UtilitySpec, eps: f64, blend: Blend) -> Result<ExtendedUtility> {
    check_eps(eps)?;
    mu.validate()?;
    let t_eps = mu.tail_point(eps);
    if !(t_eps > 0.0) {
        return Err(Error::param(format!("tail point {t_eps} must be positive")));
    }
    let mu_t = mu.value(t_eps);
    if mu_t > eps + 1e-12 {
        return Err(Error::param(format!("utility is {mu_t} at its tail point, above eps = {eps}")));
    }
    Ok(ExtendedUtility { utility: mu.clone(), t_eps, blend, mu_t })
}
