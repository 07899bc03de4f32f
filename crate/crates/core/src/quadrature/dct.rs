use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::dd::Scalar;

/// Distance-to-α rule `α_γ(δ) = (1 - (1 - δ/diam)^γ)^(1/γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRule {
    pub gamma: f64,
    pub diameter: f64,
}

impl AlphaRule {
    pub fn new(gamma: f64, diameter: f64) -> Result<Self> {
        if !(gamma >= 1.0) || !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::Parameter(format!(
                "alpha rule needs gamma >= 1 and a positive diameter (got {gamma}, {diameter})"
            )));
        }
        Ok(Self { gamma, diameter })
    }

    pub fn alpha(&self, delta: f64) -> f64 {
        let t = (delta / self.diameter).clamp(0.0, 1.0);
        (1.0 - (1.0 - t).powf(self.gamma)).powf(1.0 / self.gamma)
    }
}

/// Cubic reparametrization `q(s) = ŷ + α(s - s_α) + β_α(s - s_α)^3` of
/// `[-1, 1]` onto itself. With `α = 0` it clusters nodes at `ŷ` with a
/// vanishing Jacobian; with `α = 1` it is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DctMap {
    pub alpha: f64,
    pub y_hat: f64,
    pub s_alpha: f64,
    pub beta_alpha: f64,
}

fn cubic(alpha: f64, y: f64, s: f64) -> f64 {
    (((2.0 * alpha + 1.0) * s - 3.0 * y) * s + (3.0 - 2.0 * alpha)) * s - y
}

fn cubic_prime(alpha: f64, y: f64, s: f64) -> f64 {
    (3.0 * (2.0 * alpha + 1.0) * s - 6.0 * y) * s + (3.0 - 2.0 * alpha)
}

/// Real root of `z^3 + p z + q = 0` for `p >= 0`, written so that no
/// cancellation occurs for small `|q|`.
fn depressed_root(p: f64, q: f64) -> f64 {
    let disc = (0.25 * q * q + p * p * p / 27.0).sqrt();
    let a = (0.5 * q.abs() + disc).cbrt();
    if a == 0.0 {
        return 0.0;
    }
    let b = p / (3.0 * a);
    -q / (a * a + a * b + b * b)
}

impl DctMap {
    /// Identity map (`α = 1`).
    pub fn identity(y_hat: f64) -> Self {
        Self { alpha: 1.0, y_hat, s_alpha: y_hat, beta_alpha: 0.0 }
    }

    /// Solves the coefficient cubic for `s_α` and builds the map.
    pub fn new(y_hat: f64, alpha: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&y_hat) || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!(
                "DCT map needs y_hat in [-1, 1] and alpha in [0, 1] (got {y_hat}, {alpha})"
            )));
        }
        let a3 = 2.0 * alpha + 1.0;
        let shift = y_hat / a3;
        let p = ((3.0 - 2.0 * alpha) * a3 - 3.0 * y_hat * y_hat) / (a3 * a3);
        let b = -3.0 * y_hat / a3;
        let c = (3.0 - 2.0 * alpha) / a3;
        let d = -y_hat / a3;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        let mut s = depressed_root(p.max(0.0), q) + shift;
        for _ in 0..2 {
            let f = cubic(alpha, y_hat, s);
            let fp = cubic_prime(alpha, y_hat, s);
            if fp > 0.0 {
                s -= f / fp;
            }
        }
        if !(s.abs() <= 1.0 + 1e-12) || cubic(alpha, y_hat, s).abs() >= 1e-13 {
            return Err(Error::Numeric(format!(
                "DCT cubic root {s} rejected for y_hat={y_hat}, alpha={alpha}"
            )));
        }
        let s = s.clamp(-1.0, 1.0);
        let beta = (1.0 - alpha) / (1.0 + 3.0 * s * s);
        Ok(Self { alpha, y_hat, s_alpha: s, beta_alpha: beta })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let t = s - self.s_alpha;
        self.y_hat + self.alpha * t + self.beta_alpha * t * t * t
    }

    /// [`Self::eval`] in any scalar type, with the coefficients taken as exact.
    pub fn eval_in<T: Scalar>(&self, s: T) -> T {
        let t = s - T::from_f64(self.s_alpha);
        T::from_f64(self.y_hat) + T::from_f64(self.alpha) * t + T::from_f64(self.beta_alpha) * t * t * t
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let t = s - self.s_alpha;
        self.alpha + 3.0 * self.beta_alpha * t * t
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        6.0 * self.beta_alpha * (s - self.s_alpha)
    }

    /// Preimage of `x` under the map.
    pub fn inverse(&self, x: f64) -> f64 {
        let (al, be) = (self.alpha, self.beta_alpha);
        let mut t = if be <= 1e-8 * al {
            (x - self.y_hat) / al
        } else {
            depressed_root(al / be, (self.y_hat - x) / be)
        };
        for _ in 0..3 {
            let f = al * t + be * t * t * t + self.y_hat - x;
            let fp = al + 3.0 * be * t * t;
            if fp <= 0.0 || f == 0.0 {
                break;
            }
            t -= f / fp;
        }
        (self.s_alpha + t).clamp(-1.0, 1.0)
    }
}
