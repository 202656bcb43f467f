use serde::{Deserialize, Serialize};

use crate::concept::OutputId;
use crate::dfa::Distance;
use crate::error::DecodeError;

/// Beam search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    /// Number of beams `k`.
    pub beams: usize,
    /// Number of outputs to generate, `T`.
    pub horizon: usize,
    pub alpha_min: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Recorded for replay; tie-breaking is deterministic and does not
    /// consume randomness.
    pub seed: u64,
    /// Output that ends a beam early; the ended beam idles with zero
    /// log-probability until the horizon.
    #[serde(default)]
    pub eos: Option<OutputId>,
    /// Whether prompt outputs advance the automaton.
    #[serde(default)]
    pub prompt_in_scope: bool,
    /// Keep per-step score rows in the result.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub trace: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beams: 64,
            horizon: 32,
            alpha_min: 0.5,
            gamma: 1.0,
            epsilon: 0.1,
            seed: 0,
            eos: None,
            prompt_in_scope: false,
            trace: false,
        }
    }
}

impl DecodeConfig {
    pub fn new(beams: usize, horizon: usize) -> Self {
        DecodeConfig {
            beams,
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let fail = |m: &str| Err(DecodeError::Config(m.to_string()));
        if self.beams == 0 {
            return fail("beams must be positive");
        }
        if self.horizon == 0 {
            return fail("horizon must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha_min) {
            return fail("alpha_min must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return fail("gamma must be positive and finite");
        }
        // 1 - a + 2 a eps > 0 for every a in [alpha_min, 1] iff eps < 1/2
        if !(0.0..0.5).contains(&self.epsilon) {
            return fail("epsilon must lie in [0, 0.5)");
        }
        Ok(())
    }
}

/// Ramping push-up coefficient
/// `α = α_min + (1 − α_min) · min(1, (d / remaining)^γ)`.
/// No remaining steps, or an unreachable target, gives 1.
pub fn ramp_push_up(alpha_min: f64, d: Distance, remaining: usize, gamma: f64) -> f64 {
    if remaining == 0 || !d.is_finite() {
        return 1.0;
    }
    let ratio = d.as_f64() / remaining as f64;
    alpha_min + (1.0 - alpha_min) * ratio.powf(gamma).min(1.0)
}

/// Affine push toward the row maximum:
/// `α·max + (1 − α + factor·α·ε)·z`, with `factor` 2 for a completed
/// distance-decreasing transition and 1 for a quasi one. Hard zeros stay
/// hard zeros.
pub fn push_up(z: f64, row_max: f64, alpha: f64, epsilon: f64, factor: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return z;
    }
    alpha * row_max + (1.0 - alpha + factor * alpha * epsilon) * z
}
