use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Typicality radii used by the coding layer.
///
/// Source sequences are tested at `δ`, the encoder searches at `2δ` and the
/// decoder at `8δ`. The covering slack is `γ(δ) = c·δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSchedule {
    delta: f64,
    multipliers: [f64; 3],
    gamma_factor: f64,
}

impl ToleranceSchedule {
    pub fn new(delta: f64, gamma_factor: f64) -> Result<Self> {
        Self::with_multipliers(delta, [1.0, 2.0, 8.0], gamma_factor)
    }

    pub fn with_multipliers(delta: f64, multipliers: [f64; 3], gamma_factor: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return invalid(format!("delta must be positive, got {delta}"));
        }
        if !(multipliers[0] > 0.0 && multipliers[0] < multipliers[1] && multipliers[1] < multipliers[2]) {
            return invalid(format!(
                "multipliers {multipliers:?} must be positive and strictly increasing"
            ));
        }
        if !(gamma_factor.is_finite() && gamma_factor > 0.0) {
            return invalid(format!("gamma factor must be positive, got {gamma_factor}"));
        }
        Ok(Self {
            delta,
            multipliers,
            gamma_factor,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn multipliers(&self) -> [f64; 3] {
        self.multipliers
    }

    pub fn gamma_factor(&self) -> f64 {
        self.gamma_factor
    }

    pub fn source_radius(&self) -> f64 {
        self.multipliers[0] * self.delta
    }

    pub fn encode_radius(&self) -> f64 {
        self.multipliers[1] * self.delta
    }

    pub fn decode_radius(&self) -> f64 {
        self.multipliers[2] * self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_factor * self.delta
    }
}

/// Entropy-continuity slack `−3 ε log2(ε·K)` for an alphabet product of size `K`.
///
/// The expression is negative once `ε·K > 1`; it is clamped at zero there, and
/// `ε = 0` gives zero.
pub fn alpha_n(epsilon: f64, alphabet_product: usize) -> f64 {
    if epsilon <= 0.0 {
        return 0.0;
    }
    (-3.0 * epsilon * (epsilon * alphabet_product as f64).log2()).max(0.0)
}
