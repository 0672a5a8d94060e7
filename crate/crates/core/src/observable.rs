//! Named two-valued observables and ordered collections of them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("observable id must be non-empty")]
    EmptyId,
    #[error("observable `{0}` has identical outcome labels")]
    DuplicateLabels(String),
    #[error("observable `{0}` appears more than once")]
    DuplicateId(String),
    #[error("an observable set needs at least one observable")]
    Empty,
}

/// A yes/no property of a record, identified by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryObservable {
    pub id: String,
    pub value_labels: [String; 2],
}

impl BinaryObservable {
    pub fn new(id: impl Into<String>) -> Result<Self, ObservableError> {
        Self::with_labels(id, "0", "1")
    }

    pub fn with_labels(
        id: impl Into<String>,
        zero: impl Into<String>,
        one: impl Into<String>,
    ) -> Result<Self, ObservableError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ObservableError::EmptyId);
        }
        let value_labels = [zero.into(), one.into()];
        if value_labels[0] == value_labels[1] {
            return Err(ObservableError::DuplicateLabels(id));
        }
        Ok(BinaryObservable { id, value_labels })
    }
}

/// An ordered, duplicate-free list of observables plus a note on where they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableSet {
    observables: Vec<BinaryObservable>,
    pub source: String,
}

impl ObservableSet {
    pub fn new(
        observables: Vec<BinaryObservable>,
        source: impl Into<String>,
    ) -> Result<Self, ObservableError> {
        if observables.is_empty() {
            return Err(ObservableError::Empty);
        }
        let mut seen = HashSet::new();
        for o in &observables {
            if !seen.insert(o.id.as_str()) {
                return Err(ObservableError::DuplicateId(o.id.clone()));
            }
        }
        Ok(ObservableSet {
            observables,
            source: source.into(),
        })
    }

    /// Builds a set of default-labelled observables from ids.
    pub fn from_ids<I, S>(ids: I, source: impl Into<String>) -> Result<Self, ObservableError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let observables = ids
            .into_iter()
            .map(BinaryObservable::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(observables, source)
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.id == id)
    }

    pub fn get(&self, index: usize) -> Option<&BinaryObservable> {
        self.observables.get(index)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.observables.iter().map(|o| o.id.as_str())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BinaryObservable> {
        self.observables.iter()
    }
}
