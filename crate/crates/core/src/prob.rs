//! Pairwise counting, conditional probability estimation and the reduction of
//! empirical 2x2 transition matrices to the one-parameter bistochastic form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Tolerances, STOCHASTIC_TOL};
use crate::observable::ObservableSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("a pair needs two distinct observables, got `{0}` twice")]
    SameObservable(String),
    #[error("no data for the pair ({0}, {1})")]
    EmptyPairData(String, String),
    #[error("conditioning row {row} of ({a}, {b}) has zero mass; the conditional is undefined")]
    ZeroConditioningRow { a: String, b: String, row: usize },
    #[error("matrices ({0}) and ({1}) are not opposite orientations of one pair")]
    PairMismatch(String, String),
    #[error("smoothing must be finite and non-negative, got {0}")]
    BadSmoothing(f64),
    #[error("joint table for ({0}, {1}) is not a probability table")]
    BadJointTable(String, String),
}

/// Joint 2x2 counts `counts[i][j] = #{A = i, B = j}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub pair: (String, String),
    pub counts: [[u64; 2]; 2],
}

impl CountTable {
    pub fn new(a: impl Into<String>, b: impl Into<String>, counts: [[u64; 2]; 2]) -> Self {
        CountTable {
            pair: (a.into(), b.into()),
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i][0] + self.counts[i][1]
    }

    /// The same table seen from `(b, a)`.
    pub fn transposed(&self) -> CountTable {
        let c = &self.counts;
        CountTable {
            pair: (self.pair.1.clone(), self.pair.0.clone()),
            counts: [[c[0][0], c[1][0]], [c[0][1], c[1][1]]],
        }
    }
}

/// Conditional probabilities `entries[i][j] = P(B = j | A = i)` for the
/// ordered pair `(A, B) = (conditioning, conditioned)`, together with the
/// priors of the conditioning observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub pair: (String, String),
    pub entries: [[f64; 2]; 2],
    pub priors: [f64; 2],
    /// `(M[0][0] + M[1][1]) / 2`, present only when the matrix is bistochastic within `tol_b`.
    pub bistochastic_param: Option<f64>,
    /// `|M[0][0] - M[1][1]|`.
    pub bistochastic_deviation: f64,
}

impl TransitionMatrix {
    fn assemble(pair: (String, String), entries: [[f64; 2]; 2], priors: [f64; 2], tol_b: f64) -> Self {
        let deviation = (entries[0][0] - entries[1][1]).abs();
        let bistochastic_param =
            (deviation <= tol_b).then(|| (entries[0][0] + entries[1][1]) / 2.0);
        let m = TransitionMatrix {
            pair,
            entries,
            priors,
            bistochastic_param,
            bistochastic_deviation: deviation,
        };
        debug_assert!(m.is_row_stochastic(STOCHASTIC_TOL));
        m
    }

    /// Builds the matrix from an exact joint table `joint[i][j] = P(A = i, B = j)`.
    pub fn from_joint(
        a: impl Into<String>,
        b: impl Into<String>,
        joint: [[f64; 2]; 2],
        tol_b: f64,
    ) -> Result<Self, ProbError> {
        let (a, b) = (a.into(), b.into());
        let total: f64 = joint.iter().flatten().sum();
        if joint.iter().flatten().any(|v| !v.is_finite() || *v < 0.0)
            || (total - 1.0).abs() > STOCHASTIC_TOL
        {
            return Err(ProbError::BadJointTable(a, b));
        }
        let mut entries = [[0.0; 2]; 2];
        let mut priors = [0.0; 2];
        for i in 0..2 {
            let row = joint[i][0] + joint[i][1];
            if row <= 0.0 {
                return Err(ProbError::ZeroConditioningRow { a, b, row: i });
            }
            priors[i] = row;
            entries[i] = [joint[i][0] / row, 1.0 - joint[i][0] / row];
        }
        Ok(Self::assemble((a, b), entries, priors, tol_b))
    }

    /// The one-parameter matrix `[[p, 1-p], [1-p, p]]` with uniform priors.
    pub fn symmetric(a: impl Into<String>, b: impl Into<String>, p: f64, tol_b: f64) -> Self {
        Self::assemble((a.into(), b.into()), [[p, 1.0 - p], [1.0 - p, p]], [0.5, 0.5], tol_b)
    }

    /// Bistochastic parameter whether or not the matrix qualifies.
    pub fn diagonal_mean(&self) -> f64 {
        (self.entries[0][0] + self.entries[1][1]) / 2.0
    }

    /// `P(A = i, B = j)` implied by priors and conditionals.
    pub fn joint(&self) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for (i, row) in j.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = self.priors[i] * self.entries[i][k];
            }
        }
        j
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|r| (r[0] + r[1] - 1.0).abs() <= tol && r.iter().all(|v| (0.0..=1.0).contains(v)))
            && (self.priors[0] + self.priors[1] - 1.0).abs() <= tol
    }
}

/// Outcome of comparing `P(A=i) P(B=j | A=i)` with `P(B=j) P(A=i | B=j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub discrepancy: f64,
    pub consistent: bool,
}

/// Anything that can hand out pairwise joint counts.
pub trait PairCounter {
    fn observables(&self) -> &ObservableSet;
    /// Counts for observable indices `(a, b)`, oriented as `(a, b)`.
    fn counts_by_index(&self, a: usize, b: usize) -> [[u64; 2]; 2];
}

/// A data source able to produce transition matrices for ordered pairs.
pub trait PairSource: Sync {
    fn observable_set(&self) -> &ObservableSet;
    fn transition(
        &self,
        conditioning: &str,
        conditioned: &str,
        tol: &Tolerances,
    ) -> Result<TransitionMatrix, ProbError>;
}

pub(crate) fn resolve_pair(
    set: &ObservableSet,
    a: &str,
    b: &str,
) -> Result<(usize, usize), ProbError> {
    if a == b {
        return Err(ProbError::SameObservable(a.to_string()));
    }
    let ia = set
        .index_of(a)
        .ok_or_else(|| ProbError::UnknownObservable(a.to_string()))?;
    let ib = set
        .index_of(b)
        .ok_or_else(|| ProbError::UnknownObservable(b.to_string()))?;
    Ok((ia, ib))
}

/// Tallies `(A, B)` outcomes for the named observables.
pub fn count_pairs<D: PairCounter + ?Sized>(
    dataset: &D,
    a: &str,
    b: &str,
) -> Result<CountTable, ProbError> {
    let (ia, ib) = resolve_pair(dataset.observables(), a, b)?;
    let table = CountTable::new(a, b, dataset.counts_by_index(ia, ib));
    if table.total() == 0 {
        return Err(ProbError::EmptyPairData(a.to_string(), b.to_string()));
    }
    Ok(table)
}

/// Estimates `P(B | A)` from joint counts with additive smoothing `alpha`.
pub fn estimate_transition(
    counts: &CountTable,
    alpha: f64,
    tol_b: f64,
) -> Result<TransitionMatrix, ProbError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(ProbError::BadSmoothing(alpha));
    }
    let total = counts.total() as f64;
    let mut entries = [[0.0; 2]; 2];
    let mut priors = [0.0; 2];
    for i in 0..2 {
        let row = counts.row_sum(i) as f64;
        let denom = row + 2.0 * alpha;
        if denom <= 0.0 {
            return Err(ProbError::ZeroConditioningRow {
                a: counts.pair.0.clone(),
                b: counts.pair.1.clone(),
                row: i,
            });
        }
        let m0 = (counts.counts[i][0] as f64 + alpha) / denom;
        entries[i] = [m0, 1.0 - m0];
        priors[i] = (row + 2.0 * alpha) / (total + 4.0 * alpha);
    }
    Ok(TransitionMatrix::assemble(
        counts.pair.clone(),
        entries,
        priors,
        tol_b,
    ))
}

/// Checks Bayes coherence of two opposite orientations of one pair.
pub fn bayes_consistency(
    t_ab: &TransitionMatrix,
    t_ba: &TransitionMatrix,
    tol: f64,
) -> Result<ConsistencyReport, ProbError> {
    if t_ab.pair.0 != t_ba.pair.1 || t_ab.pair.1 != t_ba.pair.0 {
        return Err(ProbError::PairMismatch(
            format!("{}, {}", t_ab.pair.0, t_ab.pair.1),
            format!("{}, {}", t_ba.pair.0, t_ba.pair.1),
        ));
    }
    let mut discrepancy: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let forward = t_ab.priors[i] * t_ab.entries[i][j];
            let backward = t_ba.priors[j] * t_ba.entries[j][i];
            discrepancy = discrepancy.max((forward - backward).abs());
        }
    }
    Ok(ConsistencyReport {
        discrepancy,
        consistent: discrepancy <= tol,
    })
}

/// Shared implementation of [`PairSource::transition`] for count-based data.
pub(crate) fn transition_from_counts<D: PairCounter + ?Sized>(
    dataset: &D,
    conditioning: &str,
    conditioned: &str,
    tol: &Tolerances,
) -> Result<TransitionMatrix, ProbError> {
    let counts = count_pairs(dataset, conditioning, conditioned)?;
    estimate_transition(&counts, tol.smoothing, tol.tol_b)
}
