//! Diagnostics for non-classical (contextual) correlations in binary-observable data.
//!
//! The pipeline estimates pairwise transition matrices from joint records or
//! pairwise logs ([`prob`]), tests triples against the Accardi bounds
//! ([`accardi`]) and against the general marginal problem ([`kolmo`]), and
//! aggregates sampled triples into the personalization rate ([`pers`]).
//! Overlapping contexts given as hypergraphs are handled by [`greechie`];
//! [`synth`] produces classical and quantum ground-truth data.

pub mod accardi;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod greechie;
pub mod kolmo;
pub mod observable;
pub mod pers;
pub mod prob;
pub mod report;
pub mod simplex;
pub mod synth;

pub use accardi::{accardi_check, AccardiVerdict, TripleParams, Verdict};
pub use config::Tolerances;
pub use dataset::{JointRecordDataset, PairLogDataset, PairTables};
pub use error::Error;
pub use greechie::{
    enumerate_two_valued_states, find_state, validate, ContextHypergraph, State, TwoValuedState,
};
pub use kolmo::{
    build_problem, decide_feasibility, feasibility_from_dataset, FeasibilityResult,
    JointFeasibilityProblem,
};
pub use observable::{BinaryObservable, ObservableSet};
pub use pers::{estimate_pers, sample_triples, PersEstimate, SamplingMode, SamplingPlan};
pub use prob::{
    bayes_consistency, count_pairs, estimate_transition, CountTable, PairSource, TransitionMatrix,
};
