//! The cutoff `χ` and the kinking profile `ρ₁(γ, t) = exp(−2γt)·χ(t)`.

use crate::error::{Error, Result};

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn flat_bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// C^∞ transition from 0 (at `s <= 0`) to 1 (at `s >= 1`), flat to all orders at both ends.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = flat_bump(s);
        let b = flat_bump(1.0 - s);
        a / (a + b)
    }
}

/// Collar profile tied to a tubular radius `δ`: `χ ≡ 1` on `[0, δ/8]`, `χ ≡ 0` on `[δ/2, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkProfile {
    delta: f64,
    sign: f64,
}

impl KinkProfile {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("tubular radius must be positive, got {delta}")));
        }
        Ok(Self { delta, sign: 1.0 })
    }

    /// Profile whose kink has the wrong sign, `exp(+2γt)`. Only used to
    /// check that the self-test notices a broken profile.
    #[doc(hidden)]
    pub fn with_flipped_kink(mut self) -> Self {
        self.sign = -1.0;
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Distance beyond which every extension vanishes.
    pub fn support_width(&self) -> f64 {
        0.5 * self.delta
    }

    /// Width of the band where `χ ≡ 1`.
    pub fn flat_width(&self) -> f64 {
        0.125 * self.delta
    }

    /// `χ(t)`, for any real `t` (equal to 1 for `t <= δ/8`).
    pub fn cutoff(&self, t: f64) -> f64 {
        let lo = self.flat_width();
        let hi = self.support_width();
        1.0 - smoothstep((t - lo) / (hi - lo))
    }

    /// `ρ₁(γ, t)` without argument checks.
    #[inline]
    pub fn rho(&self, gamma: f64, t: f64) -> f64 {
        let c = self.cutoff(t);
        if c == 0.0 {
            0.0
        } else {
            (-2.0 * self.sign * gamma * t).exp() * c
        }
    }

    /// `ρ₁(γ, t)` for `γ, t >= 0`.
    pub fn kink_value(&self, gamma: f64, t: f64) -> Result<f64> {
        if !(gamma >= 0.0) || !(t >= 0.0) {
            return Err(Error::NegativeArgument(format!("kink profile needs γ, t >= 0, got γ={gamma}, t={t}")));
        }
        Ok(self.rho(gamma, t))
    }
}
