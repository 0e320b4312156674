use serde::{Deserialize, Serialize};

use crate::SolverError;

/// Nonmonotone Armijo line-search parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    /// Sufficient-decrease constant, in (0, 1).
    pub sigma: f64,
    /// Backtracking factor, in (0, 1).
    pub rho: f64,
    /// Number of past objective values the acceptance test may reference.
    /// With `memory = 1` the iteration is monotone.
    pub memory: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            sigma: 1e-4,
            rho: 0.4,
            memory: 10,
        }
    }
}

/// All SGP hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Regularization weight. Zero is allowed (pure least squares).
    pub lambda: f64,
    /// TV smoothing parameter.
    pub beta: f64,
    /// Iteration cap in convergence mode.
    pub max_iters: usize,
    /// Relative objective-decrease tolerance defining convergence.
    pub stop_tol: f64,
    /// Clamp for the Barzilai–Borwein step length.
    pub alpha_bounds: (f64, f64),
    /// Static outer clamp for the diagonal scaling; tightened per iteration
    /// by a decaying schedule.
    pub scaling_bounds: (f64, f64),
    pub linesearch: LineSearchConfig,
    /// Iterations per Barzilai–Borwein rule before switching to the other.
    pub bb_alternation: usize,
}

impl SolverConfig {
    /// Defaults with the given regularization weight.
    pub fn for_lambda(lambda: f64) -> Self {
        SolverConfig {
            lambda,
            beta: 1e-3,
            max_iters: 500,
            stop_tol: 1e-6,
            alpha_bounds: (1e-10, 1e10),
            scaling_bounds: (1e-5, 1e5),
            linesearch: LineSearchConfig::default(),
            bb_alternation: 3,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and nonnegative, got {}", self.lambda));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.stop_tol > 0.0) {
            return bad(format!("stop_tol must be positive, got {}", self.stop_tol));
        }
        let (a_min, a_max) = self.alpha_bounds;
        if !(a_min > 0.0 && a_min < a_max) {
            return bad(format!("alpha bounds must satisfy 0 < min < max, got {:?}", self.alpha_bounds));
        }
        let (l_min, l_max) = self.scaling_bounds;
        // min·max ≤ 1 is the rounding-safe form of max ≤ 1/min.
        if !(l_min > 0.0 && l_min < l_max && l_min * l_max <= 1.0 + 1e-12) {
            return bad(format!(
                "scaling bounds must satisfy 0 < min < max <= 1/min, got {:?}",
                self.scaling_bounds
            ));
        }
        let ls = &self.linesearch;
        if !(ls.sigma > 0.0 && ls.sigma < 1.0) || !(ls.rho > 0.0 && ls.rho < 1.0) {
            return bad(format!("line search sigma/rho must lie in (0,1), got {ls:?}"));
        }
        if ls.memory < 1 {
            return bad("line search memory must be at least 1".into());
        }
        if self.bb_alternation < 1 {
            return bad("bb_alternation must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(SolverConfig::for_lambda(4e-5).validate().is_ok());
        assert!(SolverConfig::for_lambda(0.0).validate().is_ok());
    }

    #[test]
    fn bad_bounds_rejected() {
        let mut cfg = SolverConfig::for_lambda(1e-5);
        cfg.alpha_bounds = (1.0, 0.5);
        assert!(cfg.validate().is_err());

        let mut cfg = SolverConfig::for_lambda(1e-5);
        cfg.scaling_bounds = (1e-3, 1e5);
        assert!(cfg.validate().is_err(), "max must not exceed 1/min");

        let mut cfg = SolverConfig::for_lambda(1e-5);
        cfg.linesearch.memory = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = SolverConfig::for_lambda(4e-5);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SolverConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
