//! The personalization rate: the fraction of randomly sampled observable
//! triples whose transition parameters violate the Accardi bounds, alongside
//! the fraction that fail the general marginal-problem test.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accardi::{AccardiVerdict, TripleParams, Verdict};
use crate::config::Tolerances;
use crate::kolmo::{feasibility_from_dataset, LpError};
use crate::observable::ObservableSet;
use crate::prob::PairSource;

pub const DEFAULT_TRIPLES: usize = 1000;
pub const MAX_EXHAUSTIVE: u64 = 100_000;
pub const WILSON_Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersError {
    #[error("need at least 3 observables to form a triple, have {0}")]
    TooFewObservables(usize),
    #[error("requested {requested} distinct triples but only {population} exist")]
    SampleExceedsPopulation { requested: usize, population: u64 },
    #[error("exhaustive mode needs at most {MAX_EXHAUSTIVE} triples, have {0}")]
    ExhaustiveTooLarge(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    WithoutReplacement,
    WithReplacement,
    Exhaustive,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::WithoutReplacement => "without_replacement",
            SamplingMode::WithReplacement => "with_replacement",
            SamplingMode::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// `None` means `min(1000, C(T,3))`; ignored in exhaustive mode.
    pub num_triples: Option<usize>,
    pub mode: SamplingMode,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            num_triples: None,
            mode: SamplingMode::WithoutReplacement,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Number of unordered triples from `t` items.
pub fn triple_count(t: usize) -> u64 {
    let t = t as u64;
    if t < 3 {
        0
    } else {
        t * (t - 1) * (t - 2) / 6
    }
}

/// The `rank`-th triple `i < j < k` in lexicographic order.
fn unrank_triple(t: usize, mut rank: u64) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut start = 0;
    for (slot, remaining) in [(0usize, 2u64), (1, 1), (2, 0)] {
        let mut i = start;
        loop {
            let tail = (t - 1 - i) as u64;
            let block = match remaining {
                2 => tail * tail.saturating_sub(1) / 2,
                1 => tail,
                _ => 1,
            };
            if rank < block {
                break;
            }
            rank -= block;
            i += 1;
        }
        out[slot] = i;
        start = i + 1;
    }
    out
}

/// Draws unordered triples of observable indices according to the plan.
pub fn sample_triple_indices(t: usize, plan: &SamplingPlan) -> Result<Vec<[usize; 3]>, PersError> {
    if t < 3 {
        return Err(PersError::TooFewObservables(t));
    }
    let population = triple_count(t);
    let wanted = plan
        .num_triples
        .unwrap_or_else(|| DEFAULT_TRIPLES.min(population as usize));
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let ranks: Vec<u64> = match plan.mode {
        SamplingMode::Exhaustive => {
            if population > MAX_EXHAUSTIVE {
                return Err(PersError::ExhaustiveTooLarge(population));
            }
            (0..population).collect()
        }
        SamplingMode::WithoutReplacement => {
            if wanted as u64 > population {
                return Err(PersError::SampleExceedsPopulation {
                    requested: wanted,
                    population,
                });
            }
            index::sample(&mut rng, population as usize, wanted)
                .into_iter()
                .map(|r| r as u64)
                .collect()
        }
        SamplingMode::WithReplacement => (0..wanted).map(|_| rng.random_range(0..population)).collect(),
    };
    Ok(ranks.into_iter().map(|r| unrank_triple(t, r)).collect())
}

/// Draws unordered triples of observable ids according to the plan.
pub fn sample_triples(set: &ObservableSet, plan: &SamplingPlan) -> Result<Vec<[String; 3]>, PersError> {
    let id = |i: usize| set.get(i).map(|o| o.id.clone()).unwrap_or_default();
    Ok(sample_triple_indices(set.len(), plan)?
        .into_iter()
        .map(|t| t.map(id))
        .collect())
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let s = successes.min(trials);
    let n = trials as f64;
    let p = s as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt();
    let lo = if s == 0 { 0.0 } else { ((center - margin) / denom).clamp(0.0, p) };
    let hi = if s == trials { 1.0 } else { ((center + margin) / denom).clamp(p, 1.0) };
    (lo, hi)
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// Verdicts for one evaluated triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    /// Position in the sampled order.
    pub index: usize,
    pub params: TripleParams,
    pub accardi: AccardiVerdict,
    pub lp_feasible: bool,
    pub lp_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTriple {
    pub index: usize,
    pub observables: [String; 3],
    pub reason: String,
    pub solver_failure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    fn wilson(k: u64, n: u64) -> Self {
        let (lower, upper) = wilson_interval(k, n, WILSON_Z_95);
        Interval { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersCi {
    pub accardi: Interval,
    pub accardi_all: Interval,
    pub lp: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersEstimate {
    /// Accardi violations over Accardi-applicable triples.
    pub pers_accardi: f64,
    /// Accardi violations over every sampled triple.
    pub pers_accardi_all: f64,
    /// Marginal-problem failures over decided triples.
    pub pers_lp: f64,
    pub sampled: u64,
    /// Sampled triples that were evaluated (not skipped).
    pub decided: u64,
    pub applicable: u64,
    pub skipped: u64,
    pub accardi_violations: u64,
    pub lp_violations: u64,
    pub seed: u64,
    pub ci95: PersCi,
}

impl PersEstimate {
    pub fn from_reports(reports: &[TripleReport], skipped: u64, seed: u64) -> Self {
        let decided = reports.len() as u64;
        let sampled = decided + skipped;
        let applicable = reports
            .iter()
            .filter(|r| r.accardi.verdict != Verdict::NotApplicable)
            .count() as u64;
        let accardi_violations = reports
            .iter()
            .filter(|r| r.accardi.verdict == Verdict::Contextual)
            .count() as u64;
        let lp_violations = reports.iter().filter(|r| !r.lp_feasible).count() as u64;
        PersEstimate {
            pers_accardi: ratio(accardi_violations, applicable),
            pers_accardi_all: ratio(accardi_violations, sampled),
            pers_lp: ratio(lp_violations, decided),
            sampled,
            decided,
            applicable,
            skipped,
            accardi_violations,
            lp_violations,
            seed,
            ci95: PersCi {
                accardi: Interval::wilson(accardi_violations, applicable),
                accardi_all: Interval::wilson(accardi_violations, sampled),
                lp: Interval::wilson(lp_violations, decided),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersAnalysis {
    pub plan: SamplingPlan,
    pub triples: Vec<TripleReport>,
    pub skipped: Vec<SkippedTriple>,
    pub estimate: PersEstimate,
}

/// Samples triples from `set` and evaluates each against `source`.
///
/// Triples are evaluated in parallel on the current rayon pool and merged in
/// sampled order; failures on individual triples are recorded as skipped.
pub fn estimate_pers<S: PairSource + ?Sized>(
    source: &S,
    set: &ObservableSet,
    plan: &SamplingPlan,
) -> Result<PersAnalysis, PersError> {
    let triples = sample_triples(set, plan)?;
    let tol = plan.tolerances;
    let outcomes: Vec<Result<TripleReport, SkippedTriple>> = triples
        .par_iter()
        .enumerate()
        .map(|(index, ids)| {
            let refs = [ids[0].as_str(), ids[1].as_str(), ids[2].as_str()];
            match feasibility_from_dataset(source, refs, &tol) {
                Ok(a) => Ok(TripleReport {
                    index,
                    params: a.params,
                    accardi: a.accardi,
                    lp_feasible: a.lp.feasible,
                    lp_residual: a.lp.max_violation,
                }),
                Err(e) => Err(SkippedTriple {
                    index,
                    observables: ids.clone(),
                    solver_failure: matches!(e, LpError::SolverFailure(_)),
                    reason: e.to_string(),
                }),
            }
        })
        .collect();
    let mut reports = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => reports.push(r),
            Err(s) => skipped.push(s),
        }
    }
    let estimate = PersEstimate::from_reports(&reports, skipped.len() as u64, plan.seed);
    Ok(PersAnalysis {
        plan: *plan,
        triples: reports,
        skipped,
        estimate,
    })
}
