use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacingKind {
    Constant,
    Linear,
    Exponential,
}

/// Smoothing-strength schedule over epochs.
///
/// * constant: `α_t = alpha_const`
/// * linear: `α_t = min(r·t, α_max)`; `r` must be nonnegative
/// * exponential: `α_t = min(b·exp(r·t), α_max)`; a negative `r` decays
///   from `b`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacingSchedule {
    pub kind: PacingKind,
    pub alpha_const: f64,
    pub r: f64,
    pub b: f64,
    pub alpha_max: f64,
}

impl PacingSchedule {
    pub fn constant(alpha: f64) -> Self {
        Self {
            kind: PacingKind::Constant,
            alpha_const: alpha,
            r: 0.0,
            b: 0.0,
            alpha_max: 1.0,
        }
    }

    pub fn linear(r: f64, alpha_max: f64) -> Self {
        Self {
            kind: PacingKind::Linear,
            alpha_const: 0.0,
            r,
            b: 0.0,
            alpha_max,
        }
    }

    pub fn exponential(b: f64, r: f64, alpha_max: f64) -> Self {
        Self {
            kind: PacingKind::Exponential,
            alpha_const: 0.0,
            r,
            b,
            alpha_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha_max) || !unit.contains(&self.alpha_const) {
            return Err(Error::InvalidArgument(format!(
                "alpha_max = {} and alpha_const = {} must lie in [0, 1]",
                self.alpha_max, self.alpha_const
            )));
        }
        if !(self.b >= 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidArgument(format!("b = {} must be >= 0 and r = {} finite", self.b, self.r)));
        }
        if self.kind == PacingKind::Linear && self.r < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "linear pacing with r = {} would produce negative strengths",
                self.r
            )));
        }
        Ok(())
    }

    /// Smoothing strength at epoch `t`.
    pub fn alpha_at(&self, t: usize) -> f64 {
        let t = t as f64;
        match self.kind {
            PacingKind::Constant => self.alpha_const,
            PacingKind::Linear => (self.r * t).min(self.alpha_max),
            PacingKind::Exponential => (self.b * (self.r * t).exp()).min(self.alpha_max),
        }
    }
}
