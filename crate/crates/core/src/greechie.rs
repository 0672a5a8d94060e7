//! Pasted contexts as hypergraphs: atoms tagged by the contexts containing
//! them, with probabilistic and two-valued states.
//!
//! Text format, one declaration per line, `#` starts a comment:
//!
//! ```text
//! atom a b c
//! context a b
//! context b c
//! context c a
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::STOCHASTIC_TOL;
use crate::simplex::{phase_one, SimplexError};

pub const MAX_STATE_ATOMS: usize = 10_000;
pub const MAX_ENUMERATION_ATOMS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreechieError {
    #[error("hypergraph has {atoms} atoms, limit is {limit}")]
    ProblemTooLarge { atoms: usize, limit: usize },
    #[error("hypergraph is not valid: {0}")]
    Invalid(String),
    #[error("context {context} refers to unknown atom `{atom}`")]
    UnknownAtom { context: usize, atom: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("state search failed: {0}")]
    SolverFailure(String),
}

impl From<SimplexError> for GreechieError {
    fn from(e: SimplexError) -> Self {
        GreechieError::SolverFailure(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextHypergraph {
    atoms: Vec<String>,
    /// Each context as indices into `atoms`.
    contexts: Vec<Vec<usize>>,
}

/// Structural problems found by [`validate`]; an empty report means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub uncovered_atoms: Vec<String>,
    /// `(i, j)`: context `i` is a proper subset of context `j`.
    pub nested_contexts: Vec<(usize, usize)>,
    pub duplicate_atoms: Vec<String>,
    pub duplicate_contexts: Vec<(usize, usize)>,
    /// Contexts with fewer than two distinct atoms.
    pub small_contexts: Vec<usize>,
    /// Contexts listing some atom more than once.
    pub repeated_members: Vec<usize>,
    /// More than one context and no atom shared between contexts.
    pub unpasted: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.uncovered_atoms.is_empty()
            && self.nested_contexts.is_empty()
            && self.duplicate_atoms.is_empty()
            && self.duplicate_contexts.is_empty()
            && self.small_contexts.is_empty()
            && self.repeated_members.is_empty()
    }

    fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.uncovered_atoms.is_empty() {
            parts.push(format!("uncovered atoms {:?}", self.uncovered_atoms));
        }
        if !self.nested_contexts.is_empty() {
            parts.push(format!("nested contexts {:?}", self.nested_contexts));
        }
        if !self.duplicate_atoms.is_empty() {
            parts.push(format!("duplicate atoms {:?}", self.duplicate_atoms));
        }
        if !self.duplicate_contexts.is_empty() {
            parts.push(format!("duplicate contexts {:?}", self.duplicate_contexts));
        }
        if !self.small_contexts.is_empty() {
            parts.push(format!("contexts with fewer than two atoms {:?}", self.small_contexts));
        }
        if !self.repeated_members.is_empty() {
            parts.push(format!("contexts repeating an atom {:?}", self.repeated_members));
        }
        parts.join("; ")
    }
}

/// Probabilities on atoms summing to one over every context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub values: BTreeMap<String, f64>,
}

/// A 0/1 state: exactly one atom per context carries the value 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwoValuedState {
    pub values: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub state: State,
    /// Minimising and maximising two distinct linear objectives gave the same point.
    pub unique: bool,
}

impl ContextHypergraph {
    /// Builds a hypergraph from atom ids and contexts given by atom id.
    ///
    /// Only unknown atoms are rejected; everything else is left for [`validate`].
    pub fn new<A, C, S>(atoms: A, contexts: C) -> Result<Self, GreechieError>
    where
        A: IntoIterator<Item = S>,
        S: Into<String>,
        C: IntoIterator,
        C::Item: IntoIterator,
        <C::Item as IntoIterator>::Item: AsRef<str>,
    {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        for (i, a) in atoms.iter().enumerate() {
            lookup.entry(a.as_str()).or_insert(i);
        }
        let mut resolved = Vec::new();
        for (ci, ctx) in contexts.into_iter().enumerate() {
            let mut members = Vec::new();
            for name in ctx {
                let name = name.as_ref();
                let &idx = lookup.get(name).ok_or_else(|| GreechieError::UnknownAtom {
                    context: ci,
                    atom: name.to_string(),
                })?;
                members.push(idx);
            }
            resolved.push(members);
        }
        Ok(ContextHypergraph {
            atoms,
            contexts: resolved,
        })
    }

    /// `k` binary contexts `{x1,x2}, {x2,x3}, ..., {xk,x1}`.
    pub fn cycle(k: usize) -> Self {
        let atoms: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
        let contexts = (0..k).map(|i| vec![i, (i + 1) % k]).collect();
        ContextHypergraph { atoms, contexts }
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn context_ids(&self, index: usize) -> Vec<&str> {
        self.contexts[index].iter().map(|&a| self.atoms[a].as_str()).collect()
    }

    pub fn parse(text: &str) -> Result<Self, GreechieError> {
        let mut atoms: Vec<String> = Vec::new();
        let mut contexts: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let keyword = words.next().unwrap_or("");
            let rest: Vec<String> = words.map(str::to_string).collect();
            match keyword {
                "atom" | "atoms" => {
                    if rest.is_empty() {
                        return Err(GreechieError::Parse {
                            line: i + 1,
                            message: "`atom` needs at least one id".into(),
                        });
                    }
                    if !contexts.is_empty() {
                        return Err(GreechieError::Parse {
                            line: i + 1,
                            message: "atoms must be declared before contexts".into(),
                        });
                    }
                    atoms.extend(rest);
                }
                "context" => {
                    if rest.is_empty() {
                        return Err(GreechieError::Parse {
                            line: i + 1,
                            message: "`context` needs at least one atom".into(),
                        });
                    }
                    contexts.push((i + 1, rest));
                }
                other => {
                    return Err(GreechieError::Parse {
                        line: i + 1,
                        message: format!("unknown keyword `{other}`"),
                    })
                }
            }
        }
        let lines: Vec<usize> = contexts.iter().map(|(l, _)| *l).collect();
        Self::new(atoms, contexts.into_iter().map(|(_, c)| c)).map_err(|e| match e {
            GreechieError::UnknownAtom { context, atom } => GreechieError::Parse {
                line: lines[context],
                message: format!("unknown atom `{atom}`"),
            },
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "atom {}", self.atoms.join(" "));
        for i in 0..self.contexts.len() {
            let _ = writeln!(out, "context {}", self.context_ids(i).join(" "));
        }
        out
    }
}

/// Reports structural oddities without rejecting the hypergraph.
pub fn validate(h: &ContextHypergraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    for a in &h.atoms {
        if !seen.insert(a.as_str()) && !report.duplicate_atoms.contains(a) {
            report.duplicate_atoms.push(a.clone());
        }
    }
    let mut covered = vec![0usize; h.atoms.len()];
    let sets: Vec<HashSet<usize>> = h
        .contexts
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    for (i, (ctx, set)) in h.contexts.iter().zip(&sets).enumerate() {
        if set.len() != ctx.len() {
            report.repeated_members.push(i);
        }
        if set.len() < 2 {
            report.small_contexts.push(i);
        }
        for &a in set {
            covered[a] += 1;
        }
    }
    report.uncovered_atoms = h
        .atoms
        .iter()
        .zip(&covered)
        .filter(|(_, &n)| n == 0)
        .map(|(a, _)| a.clone())
        .collect();
    for i in 0..sets.len() {
        for j in 0..sets.len() {
            if i == j {
                continue;
            }
            if sets[i] == sets[j] {
                if i < j {
                    report.duplicate_contexts.push((i, j));
                }
            } else if sets[i].is_subset(&sets[j]) {
                report.nested_contexts.push((i, j));
            }
        }
    }
    report.unpasted = h.contexts.len() > 1 && covered.iter().all(|&n| n <= 1);
    report
}

fn require_valid(h: &ContextHypergraph) -> Result<(), GreechieError> {
    let report = validate(h);
    if report.is_valid() {
        Ok(())
    } else {
        Err(GreechieError::Invalid(report.summary()))
    }
}

/// Finds a probability assignment summing to one in every context, if any.
pub fn find_state(h: &ContextHypergraph) -> Result<Option<StateSolution>, GreechieError> {
    if h.atoms.len() > MAX_STATE_ATOMS {
        return Err(GreechieError::ProblemTooLarge {
            atoms: h.atoms.len(),
            limit: MAX_STATE_ATOMS,
        });
    }
    require_valid(h)?;
    let n = h.atoms.len();
    let rows: Vec<Vec<f64>> = h
        .contexts
        .iter()
        .map(|c| {
            let mut row = vec![0.0; n];
            for &a in c {
                row[a] = 1.0;
            }
            row
        })
        .collect();
    let rhs = vec![1.0; rows.len()];
    let solution = phase_one(&rows, &rhs)?;
    if solution.residual() > STOCHASTIC_TOL {
        return Ok(None);
    }
    let point = solution.point().to_vec();
    for (i, c) in h.contexts.iter().enumerate() {
        let s: f64 = c.iter().map(|&a| point[a]).sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(GreechieError::SolverFailure(format!(
                "context {i} sums to {s} in the returned state"
            )));
        }
    }
    let region = solution
        .into_feasible(STOCHASTIC_TOL)
        .ok_or_else(|| GreechieError::SolverFailure("lost feasible basis".into()))?;
    let weights: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    let negated: Vec<f64> = weights.iter().map(|w| -w).collect();
    let low = region.minimize(&weights)?;
    let high = region.minimize(&negated)?;
    let unique = low
        .iter()
        .zip(&high)
        .all(|(x, y)| (x - y).abs() <= STOCHASTIC_TOL);
    let values = h.atoms.iter().cloned().zip(point).collect();
    Ok(Some(StateSolution {
        state: State { values },
        unique,
    }))
}

/// Exhaustive backtracking search for two-valued states, stopping after `limit`.
///
/// Each state is an exact cover of the contexts by atoms. Results are sorted
/// by their value vectors over lexicographically ordered atom ids.
pub fn enumerate_two_valued_states(
    h: &ContextHypergraph,
    limit: usize,
) -> Result<Vec<TwoValuedState>, GreechieError> {
    let n = h.atoms.len();
    if n > MAX_ENUMERATION_ATOMS {
        return Err(GreechieError::ProblemTooLarge {
            atoms: n,
            limit: MAX_ENUMERATION_ATOMS,
        });
    }
    require_valid(h)?;
    let masks: Vec<u64> = h
        .contexts
        .iter()
        .map(|c| c.iter().fold(0u64, |m, &a| m | (1 << a)))
        .collect();
    // Atoms that share a context with each atom, itself included.
    let mut neighbours = vec![0u64; n];
    for &m in &masks {
        for (a, nb) in neighbours.iter_mut().enumerate() {
            if m & (1 << a) != 0 {
                *nb |= m;
            }
        }
    }
    let mut found: Vec<u64> = Vec::new();
    let mut search = Search {
        masks: &masks,
        neighbours: &neighbours,
        limit,
        found: &mut found,
    };
    search.run(0, 0, &mut vec![false; masks.len()]);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h.atoms[a].cmp(&h.atoms[b]));
    let key = |s: u64| -> Vec<u8> { order.iter().map(|&a| ((s >> a) & 1) as u8).collect() };
    found.sort_by_key(|&s| key(s));
    Ok(found
        .into_iter()
        .map(|s| TwoValuedState {
            values: h
                .atoms
                .iter()
                .enumerate()
                .map(|(a, id)| (id.clone(), ((s >> a) & 1) as u8))
                .collect(),
        })
        .collect())
}

struct Search<'a> {
    masks: &'a [u64],
    neighbours: &'a [u64],
    limit: usize,
    found: &'a mut Vec<u64>,
}

impl Search<'_> {
    /// `chosen`: atoms valued 1; `blocked`: atoms forced to 0.
    fn run(&mut self, chosen: u64, blocked: u64, covered: &mut Vec<bool>) {
        if self.found.len() >= self.limit {
            return;
        }
        // Uncovered context with the fewest remaining candidates.
        let mut best: Option<(usize, u64)> = None;
        for (i, &m) in self.masks.iter().enumerate() {
            if covered[i] {
                continue;
            }
            let candidates = m & !blocked;
            if candidates == 0 {
                return;
            }
            if best.is_none_or(|(_, c)| candidates.count_ones() < c.count_ones()) {
                best = Some((i, candidates));
            }
        }
        let Some((_, mut candidates)) = best else {
            self.found.push(chosen);
            return;
        };
        while candidates != 0 {
            let atom = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            let bit = 1u64 << atom;
            let newly: Vec<usize> = (0..self.masks.len())
                .filter(|&i| !covered[i] && self.masks[i] & bit != 0)
                .collect();
            for &i in &newly {
                covered[i] = true;
            }
            self.run(chosen | bit, blocked | self.neighbours[atom], covered);
            for &i in &newly {
                covered[i] = false;
            }
            if self.found.len() >= self.limit {
                return;
            }
        }
    }
}

/// The classical 2x2 contingency table as one sample space of four atoms.
pub fn contingency_to_hypergraph(relevant: &str, retrieved: &str) -> ContextHypergraph {
    let (a, b) = (relevant, retrieved);
    let atoms = vec![
        format!("{a}&{b}"),
        format!("{a}&!{b}"),
        format!("!{a}&{b}"),
        format!("!{a}&!{b}"),
    ];
    ContextHypergraph {
        atoms,
        contexts: vec![vec![0, 1, 2, 3]],
    }
}

/// The same two observables as separate, unpasted binary contexts `{A, !A}`, `{B, !B}`.
pub fn contingency_split_hypergraph(relevant: &str, retrieved: &str) -> ContextHypergraph {
    let (a, b) = (relevant, retrieved);
    ContextHypergraph {
        atoms: vec![a.to_string(), format!("!{a}"), b.to_string(), format!("!{b}")],
        contexts: vec![vec![0, 1], vec![2, 3]],
    }
}
