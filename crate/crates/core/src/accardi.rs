//! Closed-form classicality test for three binary observables whose pairwise
//! transition matrices are bistochastic.
//!
//! With `p = P(A|B)`, `q = P(B|C)` and `r = P(C|A)` the triple admits a single
//! sample space iff `|p + q - 1| <= r <= 1 - |p - q|`.

use serde::{Deserialize, Serialize};

use crate::prob::TransitionMatrix;

/// Parameters of a triple `(A, B, C)` in cyclic orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleParams {
    pub observables: [String; 3],
    /// Diagonal mean of `P(A|B)`.
    pub p: f64,
    /// Diagonal mean of `P(B|C)`.
    pub q: f64,
    /// Diagonal mean of `P(C|A)`.
    pub r: f64,
    pub applicable: bool,
    /// `(δ_AB, δ_BC, δ_CA)`.
    pub deviations: [f64; 3],
}

impl TripleParams {
    /// Builds parameters for exactly-bistochastic matrices.
    pub fn from_pqr(observables: [&str; 3], p: f64, q: f64, r: f64) -> Self {
        TripleParams {
            observables: observables.map(str::to_string),
            p,
            q,
            r,
            applicable: true,
            deviations: [0.0; 3],
        }
    }

    /// `a_given_b` conditions on B, `b_given_c` on C, `c_given_a` on A.
    pub fn from_matrices(
        a_given_b: &TransitionMatrix,
        b_given_c: &TransitionMatrix,
        c_given_a: &TransitionMatrix,
    ) -> Self {
        let ms = [a_given_b, b_given_c, c_given_a];
        TripleParams {
            observables: [
                c_given_a.pair.0.clone(),
                a_given_b.pair.0.clone(),
                b_given_c.pair.0.clone(),
            ],
            p: a_given_b.diagonal_mean(),
            q: b_given_c.diagonal_mean(),
            r: c_given_a.diagonal_mean(),
            applicable: ms.iter().all(|m| m.bistochastic_param.is_some()),
            deviations: ms.map(|m| m.bistochastic_deviation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Classical,
    Contextual,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Classical => "classical",
            Verdict::Contextual => "contextual",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccardiVerdict {
    pub verdict: Verdict,
    /// `|p + q - 1|`
    pub lower: f64,
    /// `1 - |p - q|`
    pub upper: f64,
    /// `min(r - lower, upper - r)`; negative when the bounds are violated.
    pub slack: f64,
}

/// Slack of the Accardi bounds for raw parameters.
pub fn accardi_slack(p: f64, q: f64, r: f64) -> (f64, f64, f64) {
    let lower = (p + q - 1.0).abs();
    let upper = 1.0 - (p - q).abs();
    (lower, upper, (r - lower).min(upper - r))
}

/// Classifies a triple; boundary cases within `tol_eq` count as classical.
pub fn accardi_check(params: &TripleParams, tol_eq: f64) -> AccardiVerdict {
    let (lower, upper, slack) = accardi_slack(params.p, params.q, params.r);
    let verdict = if !params.applicable {
        Verdict::NotApplicable
    } else if slack >= -tol_eq {
        Verdict::Classical
    } else {
        Verdict::Contextual
    };
    AccardiVerdict {
        verdict,
        lower,
        upper,
        slack,
    }
}
