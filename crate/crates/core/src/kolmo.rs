//! Single-sample-space representability as a linear feasibility problem.
//!
//! `T` observables with `n` outcomes each live on the product space of
//! `n^T` elementary outcomes. A family of pairwise joint tables is
//! representable iff some probability vector over that space has exactly
//! those tables as its pair marginals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accardi::{accardi_check, AccardiVerdict, TripleParams};
use crate::config::{Tolerances, STOCHASTIC_TOL};
use crate::observable::ObservableSet;
use crate::prob::{resolve_pair, PairSource, ProbError, TransitionMatrix};
use crate::simplex::{phase_one, SimplexError};

/// Largest product space accepted by [`decide_feasibility`].
pub const MAX_OUTCOMES: usize = 1_000_000;
pub const MAX_VALUES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("product space has {0} outcomes, limit is {MAX_OUTCOMES}")]
    ProblemTooLarge(u128),
    #[error("linear feasibility solver failed: {0}")]
    SolverFailure(String),
    #[error("orientations ({a}, {b}) and ({b}, {a}) disagree by {discrepancy}")]
    InconsistentOrientations {
        a: String,
        b: String,
        discrepancy: f64,
    },
    #[error("invalid marginal table for ({0}, {1}): {2}")]
    InvalidTable(String, String, String),
    #[error("invalid problem shape: {0}")]
    InvalidShape(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

impl From<SimplexError> for LpError {
    fn from(e: SimplexError) -> Self {
        LpError::SolverFailure(e.to_string())
    }
}

/// Target pair marginals over `T` observables with `n` values each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFeasibilityProblem {
    observables: usize,
    values: usize,
    /// `(α, β) → J` with `J[i][j]` the target `P(A_α = i, A_β = j)`.
    pair_marginals: BTreeMap<(usize, usize), Vec<Vec<f64>>>,
    pub tolerance: f64,
}

fn table_discrepancy(ab: &[Vec<f64>], ba: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in ab.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            d = d.max((v - ba[j][i]).abs());
        }
    }
    d
}

impl JointFeasibilityProblem {
    pub fn new(observables: usize, values: usize, tolerance: f64) -> Result<Self, LpError> {
        if observables == 0 {
            return Err(LpError::InvalidShape("at least one observable is required".into()));
        }
        if !(2..=MAX_VALUES).contains(&values) {
            return Err(LpError::InvalidShape(format!(
                "outcomes per observable must be in 2..={MAX_VALUES}, got {values}"
            )));
        }
        Ok(JointFeasibilityProblem {
            observables,
            values,
            pair_marginals: BTreeMap::new(),
            tolerance,
        })
    }

    pub fn observables(&self) -> usize {
        self.observables
    }

    pub fn values(&self) -> usize {
        self.values
    }

    pub fn pair_marginals(&self) -> &BTreeMap<(usize, usize), Vec<Vec<f64>>> {
        &self.pair_marginals
    }

    /// `n^T`, saturating far above any accepted size.
    pub fn outcome_count(&self) -> u128 {
        (self.values as u128).saturating_pow(self.observables.min(128) as u32)
    }

    /// Adds the target `P(A_a = i, A_b = j) = table[i][j]`.
    ///
    /// A table for the reverse orientation already present must be its
    /// transpose within the problem tolerance.
    pub fn add_pair(&mut self, a: usize, b: usize, table: Vec<Vec<f64>>) -> Result<(), LpError> {
        let (sa, sb) = (a.to_string(), b.to_string());
        if a == b || a >= self.observables || b >= self.observables {
            return Err(LpError::InvalidTable(sa, sb, "pair indices out of range".into()));
        }
        let n = self.values;
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(LpError::InvalidTable(sa, sb, format!("table must be {n}x{n}")));
        }
        if table.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LpError::InvalidTable(sa, sb, "negative or non-finite entry".into()));
        }
        let total: f64 = table.iter().flatten().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(LpError::InvalidTable(sa, sb, format!("entries sum to {total}")));
        }
        let reverse = self
            .pair_marginals
            .get(&(b, a))
            .map(|other| table_discrepancy(&table, other));
        let same = self.pair_marginals.get(&(a, b)).map(|other| {
            table
                .iter()
                .flatten()
                .zip(other.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        });
        if let Some(discrepancy) = reverse.into_iter().chain(same).reduce(f64::max) {
            if discrepancy > self.tolerance {
                return Err(LpError::InconsistentOrientations { a: sa, b: sb, discrepancy });
            }
        }
        self.pair_marginals.insert((a, b), table);
        Ok(())
    }

    /// Drops the target for `(a, b)`; returns whether one was present.
    pub fn remove_pair(&mut self, a: usize, b: usize) -> bool {
        self.pair_marginals.remove(&(a, b)).is_some()
    }

    /// Value of observable `k` in elementary outcome `omega`.
    pub fn outcome_value(&self, omega: usize, k: usize) -> usize {
        (omega / self.values.pow(k as u32)) % self.values
    }

    /// Pair marginals of a distribution over the product space.
    pub fn marginalize(&self, distribution: &[f64], a: usize, b: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.values]; self.values];
        for (omega, &w) in distribution.iter().enumerate() {
            m[self.outcome_value(omega, a)][self.outcome_value(omega, b)] += w;
        }
        m
    }
}

/// Verdict of [`decide_feasibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Probability vector over the `n^T` outcomes, present iff feasible.
    pub witness: Option<Vec<f64>>,
    /// Optimal phase-one residual: the target mass no distribution can reach.
    pub max_violation: f64,
}

/// Builds the binary marginal problem implied by transition matrices and their priors.
pub fn build_problem(
    matrices: &[TransitionMatrix],
    observables: &ObservableSet,
    tolerance: f64,
) -> Result<JointFeasibilityProblem, LpError> {
    let mut problem = JointFeasibilityProblem::new(observables.len(), 2, tolerance)?;
    for m in matrices {
        let (a, b) = resolve_pair(observables, &m.pair.0, &m.pair.1)?;
        let joint = m.joint();
        let table = joint.iter().map(|r| r.to_vec()).collect();
        problem.add_pair(a, b, table).map_err(|e| match e {
            LpError::InconsistentOrientations { discrepancy, .. } => {
                LpError::InconsistentOrientations {
                    a: m.pair.0.clone(),
                    b: m.pair.1.clone(),
                    discrepancy,
                }
            }
            other => other,
        })?;
    }
    Ok(problem)
}

/// Decides whether a probability vector reproduces every target marginal.
pub fn decide_feasibility(problem: &JointFeasibilityProblem) -> Result<FeasibilityResult, LpError> {
    let size = problem.outcome_count();
    if size > MAX_OUTCOMES as u128 {
        return Err(LpError::ProblemTooLarge(size));
    }
    let size = size as usize;
    let n = problem.values;

    let mut rows = vec![vec![1.0; size]];
    let mut rhs = vec![1.0];
    for (&(a, b), table) in &problem.pair_marginals {
        let first = rows.len();
        for row in table {
            for &target in row {
                rows.push(vec![0.0; size]);
                rhs.push(target);
            }
        }
        for omega in 0..size {
            let cell = problem.outcome_value(omega, a) * n + problem.outcome_value(omega, b);
            rows[first + cell][omega] = 1.0;
        }
    }

    let solution = phase_one(&rows, &rhs)?;
    let residual = solution.residual();
    let point = solution.point();

    // Recompute the residual from the returned point; a mismatch means the
    // tableau has drifted.
    let recomputed: f64 = rows
        .iter()
        .zip(&rhs)
        .map(|(row, &t)| t - row.iter().zip(point).map(|(a, x)| a * x).sum::<f64>())
        .sum();
    if !residual.is_finite() || (recomputed - residual).abs() > 1e-7 {
        return Err(LpError::SolverFailure(format!(
            "phase-one residual {residual} disagrees with recomputed {recomputed}"
        )));
    }

    if residual > problem.tolerance {
        return Ok(FeasibilityResult {
            feasible: false,
            witness: None,
            max_violation: residual,
        });
    }
    let witness = point.to_vec();
    for (&(a, b), table) in &problem.pair_marginals {
        let m = problem.marginalize(&witness, a, b);
        let worst = m
            .iter()
            .flatten()
            .zip(table.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if worst > problem.tolerance {
            return Err(LpError::SolverFailure(format!(
                "witness misses marginal ({a}, {b}) by {worst}"
            )));
        }
    }
    Ok(FeasibilityResult {
        feasible: true,
        witness: Some(witness),
        max_violation: residual,
    })
}

/// Everything computed for one triple of observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleAnalysis {
    pub params: TripleParams,
    pub accardi: AccardiVerdict,
    pub lp: FeasibilityResult,
}

/// Runs estimation, the Accardi test and the marginal-problem test on `(A, B, C)`.
pub fn feasibility_from_dataset<S: PairSource + ?Sized>(
    source: &S,
    triple: [&str; 3],
    tol: &Tolerances,
) -> Result<TripleAnalysis, LpError> {
    let [a, b, c] = triple;
    let a_given_b = source.transition(b, a, tol)?;
    let b_given_c = source.transition(c, b, tol)?;
    let c_given_a = source.transition(a, c, tol)?;
    let params = TripleParams::from_matrices(&a_given_b, &b_given_c, &c_given_a);
    let accardi = accardi_check(&params, tol.tol_eq);

    let local = ObservableSet::from_ids(triple, "triple")
        .map_err(|e| LpError::InvalidShape(e.to_string()))?;
    let problem = build_problem(&[a_given_b, b_given_c, c_given_a], &local, tol.eps_lp)?;
    let lp = decide_feasibility(&problem)?;
    Ok(TripleAnalysis {
        params,
        accardi,
        lp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_EPS_LP;

    fn set3() -> ObservableSet {
        ObservableSet::from_ids(["A", "B", "C"], "t").unwrap()
    }

    #[test]
    fn single_pair_identity() {
        let set = ObservableSet::from_ids(["A", "B"], "t").unwrap();
        let m = TransitionMatrix::symmetric("A", "B", 1.0, 0.05);
        let p = build_problem(&[m], &set, DEFAULT_EPS_LP).unwrap();
        assert_eq!(p.pair_marginals()[&(0, 1)], vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!(decide_feasibility(&p).unwrap().feasible);
    }

    #[test]
    fn trine_tables() {
        let ms = [
            TransitionMatrix::symmetric("B", "A", 0.25, 0.05),
            TransitionMatrix::symmetric("C", "B", 0.25, 0.05),
            TransitionMatrix::symmetric("A", "C", 0.25, 0.05),
        ];
        let p = build_problem(&ms, &set3(), DEFAULT_EPS_LP).unwrap();
        assert_eq!(p.pair_marginals().len(), 3);
        for t in p.pair_marginals().values() {
            assert_eq!(t, &vec![vec![0.125, 0.375], vec![0.375, 0.125]]);
            let s: f64 = t.iter().flatten().sum();
            assert_eq!(s, 1.0);
        }
        let r = decide_feasibility(&p).unwrap();
        assert!(!r.feasible);
        assert!(r.witness.is_none());
        assert!(r.max_violation > 1e-3);
    }

    #[test]
    fn empty_problem_is_feasible() {
        let p = build_problem(&[], &set3(), DEFAULT_EPS_LP).unwrap();
        assert!(p.pair_marginals().is_empty());
        let r = decide_feasibility(&p).unwrap();
        assert!(r.feasible);
        let w = r.witness.unwrap();
        assert_eq!(w.len(), 8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_joint_is_its_own_witness() {
        let joint = [0.05, 0.1, 0.15, 0.2, 0.1, 0.05, 0.25, 0.1];
        let mut p = JointFeasibilityProblem::new(3, 2, DEFAULT_EPS_LP).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            let m = p.marginalize(&joint, a, b);
            p.add_pair(a, b, m).unwrap();
        }
        let r = decide_feasibility(&p).unwrap();
        assert!(r.feasible);
        let w = r.witness.unwrap();
        for (&(a, b), t) in p.pair_marginals() {
            let m = p.marginalize(&w, a, b);
            for (x, y) in m.iter().flatten().zip(t.iter().flatten()) {
                assert!((x - y).abs() <= DEFAULT_EPS_LP);
            }
        }
    }

    #[test]
    fn inconsistent_orientations_flagged() {
        let set = ObservableSet::from_ids(["A", "B"], "t").unwrap();
        let ab = TransitionMatrix::symmetric("A", "B", 1.0, 0.05);
        let ba = TransitionMatrix::symmetric("B", "A", 0.0, 0.05);
        let err = build_problem(&[ab.clone(), ba], &set, DEFAULT_EPS_LP).unwrap_err();
        assert!(matches!(err, LpError::InconsistentOrientations { .. }));
        let ba_ok = TransitionMatrix::symmetric("B", "A", 1.0, 0.05);
        assert!(build_problem(&[ab, ba_ok], &set, DEFAULT_EPS_LP).is_ok());
    }

    #[test]
    fn unknown_observable_propagates() {
        let m = TransitionMatrix::symmetric("A", "Z", 1.0, 0.05);
        assert!(matches!(
            build_problem(&[m], &set3(), DEFAULT_EPS_LP),
            Err(LpError::Prob(ProbError::UnknownObservable(_)))
        ));
    }

    #[test]
    fn size_guard() {
        let p = JointFeasibilityProblem::new(21, 2, DEFAULT_EPS_LP).unwrap();
        assert!(matches!(decide_feasibility(&p), Err(LpError::ProblemTooLarge(2_097_152))));
        assert!(JointFeasibilityProblem::new(3, 5, DEFAULT_EPS_LP).is_err());
    }

    #[test]
    fn invalid_tables_rejected() {
        let mut p = JointFeasibilityProblem::new(3, 2, DEFAULT_EPS_LP).unwrap();
        assert!(p.add_pair(0, 1, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(p.add_pair(0, 1, vec![vec![1.2, -0.2], vec![0.0, 0.0]]).is_err());
        assert!(p.add_pair(0, 0, vec![vec![0.5, 0.0], vec![0.0, 0.5]]).is_err());
        assert!(p.add_pair(0, 1, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn three_valued_problem() {
        // Perfect correlation A=B, B=C, but A and C anti-aligned on a 3-cycle shift.
        let mut p = JointFeasibilityProblem::new(3, 3, DEFAULT_EPS_LP).unwrap();
        let third = 1.0 / 3.0;
        let diag = vec![vec![third, 0.0, 0.0], vec![0.0, third, 0.0], vec![0.0, 0.0, third]];
        let shift = vec![vec![0.0, third, 0.0], vec![0.0, 0.0, third], vec![third, 0.0, 0.0]];
        p.add_pair(0, 1, diag.clone()).unwrap();
        p.add_pair(1, 2, diag.clone()).unwrap();
        p.add_pair(0, 2, diag).unwrap();
        assert!(decide_feasibility(&p).unwrap().feasible);
        p.remove_pair(0, 2);
        p.add_pair(0, 2, shift).unwrap();
        assert!(!decide_feasibility(&p).unwrap().feasible);
    }
}
