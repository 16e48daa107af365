//! Numerical tolerances shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Slack and deduplication radius for nearest-point sets.
    pub nearest: f64,
    /// Slack in the monotone bisection predicates for ρ and the reach function.
    pub slack: f64,
    /// Finite-difference step as a fraction of the local feature size.
    pub step_factor: f64,
    /// Relative tolerance for differential identities and regularity.
    pub diff: f64,
    /// `|1 − rχ|` at or below this makes κ infinite.
    pub sing: f64,
    /// Singular values of Dξ below `rank · σ_max` span no tangent direction.
    pub rank: f64,
    /// Absolute floor for the tangent-space rank threshold.
    pub rank_floor: f64,
    /// Search cap for ρ; reaching it encodes ρ = ∞.
    pub t_max: f64,
    /// Search cap for the reach function; reaching it encodes ∞.
    pub s_max: f64,
    /// Cap on λ in the bounds that involve λ(λ−1)⁻¹.
    pub lambda_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            nearest: 1e-9,
            slack: 1e-10,
            step_factor: 1e-4,
            diff: 1e-6,
            sing: 1e-5,
            rank: 1e-3,
            rank_floor: 1e-8,
            t_max: 1e6,
            s_max: 1e6,
            lambda_cap: 1e6,
        }
    }
}

impl Tolerances {
    /// Applies a `key=value` override as given on the command line.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance {key} must be positive, got {value}")));
        }
        if key == "step_factor" && value >= 0.5 {
            return Err(Error::InvalidConfig("step_factor must lie in (0, 0.5)".into()));
        }
        let slot = match key {
            "nearest" => &mut self.nearest,
            "slack" => &mut self.slack,
            "step_factor" => &mut self.step_factor,
            "diff" => &mut self.diff,
            "sing" => &mut self.sing,
            "rank" => &mut self.rank,
            "rank_floor" => &mut self.rank_floor,
            "t_max" => &mut self.t_max,
            "s_max" => &mut self.s_max,
            "lambda_cap" => &mut self.lambda_cap,
            _ => return Err(Error::InvalidConfig(format!("unknown tolerance key {key:?}"))),
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_known_and_reject_unknown() {
        let mut t = Tolerances::default();
        t.set("diff", 1e-5).unwrap();
        assert_eq!(t.diff, 1e-5);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("slack", -1.0).is_err());
        assert!(t.set("step_factor", 0.7).is_err());
    }
}
