//! Ground-truth generators: a classical sampler over one explicit sample space
//! and a qubit sampler measuring pairs of in-plane spin directions.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::STOCHASTIC_TOL;
use crate::dataset::{JointRecordDataset, PairEntry, PairLogDataset, PairTable, PairTables};
use crate::observable::ObservableSet;

pub const MAX_CLASSICAL_OBSERVABLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalDistribution {
    /// Probabilities over `{0,1}^T`; bit `k` of the index is observable `k`.
    Table(Vec<f64>),
    /// Drawn from the flat prior over the probability simplex.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModelSpec {
    pub observables: usize,
    pub distribution: ClassicalDistribution,
    pub records: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ClassicalSample {
    pub dataset: JointRecordDataset,
    pub joint: Vec<f64>,
    /// Exact pair marginals of `joint` for every pair.
    pub exact: PairTables,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitModelSpec {
    /// Measurement directions in degrees.
    pub angles: Vec<f64>,
    /// Observable index pairs to log; `None` logs every pair `i < j`.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct QuantumSample {
    pub dataset: PairLogDataset,
    /// Analytic same-outcome probability per logged pair.
    pub transitions: Vec<((usize, usize), f64)>,
    pub exact: PairTables,
}

pub fn classical_names(t: usize) -> Vec<String> {
    (1..=t).map(|i| format!("X{i}")).collect()
}

pub fn quantum_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("Q{i}")).collect()
}

/// Same-outcome probability `cos^2((θa - θb) / 2)` for directions in degrees.
pub fn same_outcome_probability(theta_a: f64, theta_b: f64) -> f64 {
    ((theta_a - theta_b).to_radians() / 2.0).cos().powi(2)
}

fn random_simplex_point(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..len).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

fn marginal(joint: &[f64], a: usize, b: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; 2]; 2];
    for (omega, &w) in joint.iter().enumerate() {
        m[(omega >> a) & 1][(omega >> b) & 1] += w;
    }
    m
}

/// Samples joint records from one explicit distribution over `{0,1}^T`.
pub fn gen_classical(spec: &ClassicalModelSpec) -> Result<ClassicalSample, SynthError> {
    let t = spec.observables;
    if t == 0 || t > MAX_CLASSICAL_OBSERVABLES {
        return Err(SynthError::InvalidSpec(format!(
            "observable count must be in 1..={MAX_CLASSICAL_OBSERVABLES}, got {t}"
        )));
    }
    let size = 1usize << t;
    let joint = match &spec.distribution {
        ClassicalDistribution::Table(p) => {
            if p.len() != size {
                return Err(SynthError::InvalidSpec(format!(
                    "table has {} entries, expected {size}",
                    p.len()
                )));
            }
            let total: f64 = p.iter().sum();
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(SynthError::InvalidSpec(
                    "table must be non-negative and sum to 1".into(),
                ));
            }
            p.clone()
        }
        ClassicalDistribution::Random { seed } => random_simplex_point(size, *seed),
    };
    let names = classical_names(t);
    let set = ObservableSet::from_ids(names.iter().cloned(), "synthetic classical")
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let mut dataset = JointRecordDataset::new(set);
    if spec.records > 0 {
        let picker = WeightedIndex::new(&joint)
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut bits = vec![0u8; t];
        for _ in 0..spec.records {
            let omega = picker.sample(&mut rng);
            for (k, b) in bits.iter_mut().enumerate() {
                *b = ((omega >> k) & 1) as u8;
            }
            dataset.push(&bits);
        }
    }
    let mut pairs = Vec::new();
    for a in 0..t {
        for b in a + 1..t {
            pairs.push(PairTable {
                a: names[a].clone(),
                b: names[b].clone(),
                table: marginal(&joint, a, b),
            });
        }
    }
    let exact = PairTables::new(names, 2, pairs, Some(joint.clone()))
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(ClassicalSample {
        dataset,
        joint,
        exact,
    })
}

/// Logs sequential measurements of direction pairs on a maximally mixed qubit.
///
/// The first outcome is uniform; the second agrees with it with probability
/// `cos^2((θa - θb) / 2)`. Pair `k` draws from its own stream of the seed.
pub fn gen_quantum(spec: &QubitModelSpec) -> Result<QuantumSample, SynthError> {
    let k = spec.angles.len();
    if k < 2 {
        return Err(SynthError::InvalidSpec("at least two angles are required".into()));
    }
    if let Some(bad) = spec.angles.iter().find(|a| !(0.0..360.0).contains(*a)) {
        return Err(SynthError::InvalidSpec(format!("angle {bad} outside [0, 360)")));
    }
    let pairs: Vec<(usize, usize)> = match &spec.pairs {
        Some(p) => {
            if let Some(&(a, b)) = p.iter().find(|&&(a, b)| a == b || a >= k || b >= k) {
                return Err(SynthError::InvalidSpec(format!("invalid pair ({a}, {b})")));
            }
            p.clone()
        }
        None => (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect(),
    };
    let transitions: Vec<((usize, usize), f64)> = pairs
        .iter()
        .map(|&(a, b)| ((a, b), same_outcome_probability(spec.angles[a], spec.angles[b])))
        .collect();

    let blocks: Vec<Vec<PairEntry>> = transitions
        .par_iter()
        .enumerate()
        .map(|(stream, &((a, b), p))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(stream as u64);
            (0..spec.trials)
                .map(|_| {
                    let value_a = rng.random_bool(0.5) as u8;
                    let same = rng.random_bool(p.clamp(0.0, 1.0));
                    let value_b = if same { value_a } else { 1 - value_a };
                    PairEntry {
                        a,
                        value_a,
                        b,
                        value_b,
                    }
                })
                .collect()
        })
        .collect();

    let names = quantum_names(k);
    let set = ObservableSet::from_ids(names.iter().cloned(), "synthetic qubit")
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let dataset = PairLogDataset::new(set, blocks.into_iter().flatten().collect());
    let tables = transitions
        .iter()
        .map(|&((a, b), p)| PairTable {
            a: names[a].clone(),
            b: names[b].clone(),
            table: vec![vec![p / 2.0, (1.0 - p) / 2.0], vec![(1.0 - p) / 2.0, p / 2.0]],
        })
        .collect();
    let exact = PairTables::new(names, 2, tables, None)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(QuantumSample {
        dataset,
        transitions,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::prob::{count_pairs, estimate_transition, PairSource};

    #[test]
    fn point_mass_gives_identical_records() {
        let mut table = vec![0.0; 8];
        table[7] = 1.0;
        let s = gen_classical(&ClassicalModelSpec {
            observables: 3,
            distribution: ClassicalDistribution::Table(table),
            records: 5,
            seed: 1,
        })
        .unwrap();
        assert_eq!(s.dataset.len(), 5);
        assert!(s.dataset.records().all(|r| r == vec![1, 1, 1]));
    }

    #[test]
    fn classical_is_reproducible() {
        let spec = ClassicalModelSpec {
            observables: 4,
            distribution: ClassicalDistribution::Random { seed: 3 },
            records: 500,
            seed: 9,
        };
        let a = gen_classical(&spec).unwrap();
        let b = gen_classical(&spec).unwrap();
        assert_eq!(a.dataset.to_text(), b.dataset.to_text());
        assert_eq!(a.joint, b.joint);
        assert!((a.joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_pair_tables_concentrate() {
        let s = gen_classical(&ClassicalModelSpec {
            observables: 3,
            distribution: ClassicalDistribution::Table(vec![0.125; 8]),
            records: 100_000,
            seed: 11,
        })
        .unwrap();
        for (a, b) in [("X1", "X2"), ("X2", "X3"), ("X1", "X3")] {
            let c = count_pairs(&s.dataset, a, b).unwrap();
            for row in c.counts {
                for v in row {
                    assert!((v as f64 / 100_000.0 - 0.25).abs() < 0.01);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = |t, d| {
            gen_classical(&ClassicalModelSpec {
                observables: t,
                distribution: d,
                records: 1,
                seed: 0,
            })
        };
        assert!(bad(17, ClassicalDistribution::Random { seed: 0 }).is_err());
        assert!(bad(2, ClassicalDistribution::Table(vec![0.5, 0.5])).is_err());
        assert!(bad(1, ClassicalDistribution::Table(vec![0.7, 0.7])).is_err());
        let q = |angles: Vec<f64>| {
            gen_quantum(&QubitModelSpec {
                angles,
                pairs: None,
                trials: 1,
                seed: 0,
            })
        };
        assert!(q(vec![0.0]).is_err());
        assert!(q(vec![0.0, 360.0]).is_err());
    }

    #[test]
    fn equal_angles_give_identity() {
        let s = gen_quantum(&QubitModelSpec {
            angles: vec![30.0, 30.0],
            pairs: None,
            trials: 1000,
            seed: 5,
        })
        .unwrap();
        assert_eq!(s.transitions[0].1, 1.0);
        let c = count_pairs(&s.dataset, "Q1", "Q2").unwrap();
        let m = estimate_transition(&c, 0.0, 0.05).unwrap();
        assert_eq!(m.entries, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn trine_exact_parameters() {
        let s = gen_quantum(&QubitModelSpec {
            angles: vec![0.0, 120.0, 240.0],
            pairs: None,
            trials: 0,
            seed: 0,
        })
        .unwrap();
        for &(_, p) in &s.transitions {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let tol = Tolerances::default();
        let m = s.exact.transition("Q2", "Q1", &tol).unwrap();
        assert!((m.bistochastic_param.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trine_empirical_close_to_born_rule() {
        let s = gen_quantum(&QubitModelSpec {
            angles: vec![0.0, 120.0, 240.0],
            pairs: None,
            trials: 100_000,
            seed: 7,
        })
        .unwrap();
        assert_eq!(s.dataset.entries().len(), 300_000);
        for (a, b) in [("Q1", "Q2"), ("Q2", "Q3"), ("Q1", "Q3")] {
            let c = count_pairs(&s.dataset, a, b).unwrap();
            assert_eq!(c.total(), 100_000);
            let m = estimate_transition(&c, 0.0, 0.05).unwrap();
            assert!((m.diagonal_mean() - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn analytic_parameter_is_symmetric() {
        for (a, b) in [(0.0, 77.0), (10.0, 350.0), (200.0, 45.5)] {
            assert!((same_outcome_probability(a, b) - same_outcome_probability(b, a)).abs() < 1e-15);
        }
    }
}
