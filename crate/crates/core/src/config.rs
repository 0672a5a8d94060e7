use serde::{Deserialize, Serialize};

/// Default bistochastic tolerance on `|M[0][0] - M[1][1]|`.
pub const DEFAULT_TOL_B: f64 = 0.05;
/// Band within which a satisfied-with-equality Accardi bound counts as classical.
pub const DEFAULT_TOL_EQ: f64 = 1e-9;
/// Phase-one residual below which a marginal problem is declared feasible.
pub const DEFAULT_EPS_LP: f64 = 1e-8;
/// Row sums, prior sums and context sums are checked to this precision.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Numerical knobs shared by the estimation and decision pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Additive smoothing applied to every count cell.
    pub smoothing: f64,
    pub tol_b: f64,
    pub tol_eq: f64,
    pub eps_lp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            smoothing: 0.0,
            tol_b: DEFAULT_TOL_B,
            tol_eq: DEFAULT_TOL_EQ,
            eps_lp: DEFAULT_EPS_LP,
        }
    }
}
