//! Joint-record and pair-log datasets, and their comma-separated text formats.
//!
//! Joint format: a header of observable names, then one line of 0/1 values per
//! record. Pair-log format: the header `obs_a,val_a,obs_b,val_b`, then one
//! logged measurement pair per line. Fields are whitespace-trimmed and blank
//! lines are ignored in both.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::kolmo::{JointFeasibilityProblem, LpError};
use crate::observable::{ObservableError, ObservableSet};
use crate::prob::{
    resolve_pair, transition_from_counts, PairCounter, PairSource, ProbError, TransitionMatrix,
};

pub const PAIRLOG_HEADER: [&str; 4] = ["obs_a", "val_a", "obs_b", "val_b"];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: value `{value}` is not 0 or 1")]
    NonBinaryValue {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("line {line}: header mismatch: {message}")]
    HeaderMismatch { line: usize, message: String },
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-empty trimmed lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_bit(value: &str, line: usize, column: usize) -> Result<u8, FormatError> {
    match value {
        "0" => Ok(0),
        "1" => Ok(1),
        "" => Err(FormatError::Parse {
            line,
            column,
            message: "empty field".into(),
        }),
        _ => Err(FormatError::NonBinaryValue {
            line,
            column,
            value: value.to_string(),
        }),
    }
}

/// Records over a single sample space, stored column-wise as packed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointRecordDataset {
    observables: ObservableSet,
    columns: Vec<Vec<u64>>,
    len: usize,
}

impl JointRecordDataset {
    pub fn new(observables: ObservableSet) -> Self {
        let columns = vec![Vec::new(); observables.len()];
        JointRecordDataset {
            observables,
            columns,
            len: 0,
        }
    }

    /// Appends one record; `bits[k]` is the value of observable `k`.
    ///
    /// Panics if the record length differs from the number of observables or
    /// a value is not 0/1.
    pub fn push(&mut self, bits: &[u8]) {
        assert_eq!(bits.len(), self.columns.len(), "record length mismatch");
        let (word, bit) = (self.len / 64, self.len % 64);
        for (col, &v) in self.columns.iter_mut().zip(bits) {
            assert!(v <= 1, "non-binary value {v}");
            if bit == 0 {
                col.push(0);
            }
            col[word] |= (v as u64) << bit;
        }
        self.len += 1;
    }

    pub fn from_records(observables: ObservableSet, records: &[Vec<u8>]) -> Self {
        let mut d = Self::new(observables);
        for r in records {
            d.push(r);
        }
        d
    }

    pub fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self, record: usize, observable: usize) -> u8 {
        ((self.columns[observable][record / 64] >> (record % 64)) & 1) as u8
    }

    pub fn record(&self, index: usize) -> Vec<u8> {
        (0..self.columns.len()).map(|k| self.value(index, k)).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.len).map(|i| self.record(i))
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, FormatError> {
        let mut lines = content_lines(text);
        let (hline, header) = lines.next().ok_or(FormatError::HeaderMismatch {
            line: 1,
            message: "missing header".into(),
        })?;
        let names = fields(header);
        if let Some(pos) = names.iter().position(|n| n.is_empty()) {
            return Err(FormatError::Parse {
                line: hline,
                column: pos + 1,
                message: "empty observable name".into(),
            });
        }
        let set = ObservableSet::from_ids(names.iter().copied(), source)?;
        let width = set.len();
        let mut data = JointRecordDataset::new(set);
        let mut row = Vec::with_capacity(width);
        for (lineno, line) in lines {
            let values = fields(line);
            if values.len() != width {
                return Err(FormatError::HeaderMismatch {
                    line: lineno,
                    message: format!("expected {width} fields, found {}", values.len()),
                });
            }
            row.clear();
            for (col, v) in values.iter().enumerate() {
                row.push(parse_bit(v, lineno, col + 1)?);
            }
            data.push(&row);
        }
        Ok(data)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len * self.columns.len() * 2 + 64);
        out.push_str(&self.observables.ids().collect::<Vec<_>>().join(","));
        out.push('\n');
        for i in 0..self.len {
            for k in 0..self.columns.len() {
                if k > 0 {
                    out.push(',');
                }
                out.push(if self.value(i, k) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

impl PairCounter for JointRecordDataset {
    fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    fn counts_by_index(&self, a: usize, b: usize) -> [[u64; 2]; 2] {
        let (ca, cb) = (&self.columns[a], &self.columns[b]);
        let (mut n11, mut n1_, mut n_1) = (0u64, 0u64, 0u64);
        for (x, y) in ca.iter().zip(cb) {
            n11 += (x & y).count_ones() as u64;
            n1_ += x.count_ones() as u64;
            n_1 += y.count_ones() as u64;
        }
        let n = self.len as u64;
        let n10 = n1_ - n11;
        let n01 = n_1 - n11;
        [[n - n11 - n10 - n01, n01], [n10, n11]]
    }
}

impl PairSource for JointRecordDataset {
    fn observable_set(&self) -> &ObservableSet {
        &self.observables
    }

    fn transition(
        &self,
        conditioning: &str,
        conditioned: &str,
        tol: &Tolerances,
    ) -> Result<TransitionMatrix, ProbError> {
        transition_from_counts(self, conditioning, conditioned, tol)
    }
}

/// One logged measurement of two observables within the same trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEntry {
    pub a: usize,
    pub value_a: u8,
    pub b: usize,
    pub value_b: u8,
}

type PairCounts = HashMap<(usize, usize), [[u64; 2]; 2]>;

/// Pairwise measurement logs without any global record.
#[derive(Debug, Clone)]
pub struct PairLogDataset {
    observables: ObservableSet,
    entries: Vec<PairEntry>,
    index: OnceLock<PairCounts>,
}

impl PartialEq for PairLogDataset {
    fn eq(&self, other: &Self) -> bool {
        self.observables == other.observables && self.entries == other.entries
    }
}

impl PairLogDataset {
    pub fn new(observables: ObservableSet, entries: Vec<PairEntry>) -> Self {
        let t = observables.len();
        assert!(
            entries
                .iter()
                .all(|e| e.a < t && e.b < t && e.value_a <= 1 && e.value_b <= 1),
            "pair entry out of range"
        );
        PairLogDataset {
            observables,
            entries,
            index: OnceLock::new(),
        }
    }

    pub fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    fn counts_index(&self) -> &PairCounts {
        self.index.get_or_init(|| {
            let mut map = PairCounts::new();
            for e in &self.entries {
                map.entry((e.a, e.b)).or_default()[e.value_a as usize][e.value_b as usize] += 1;
            }
            map
        })
    }

    /// Parses the pair-log format. Observables are collected in order of first appearance.
    pub fn parse(text: &str, source: &str) -> Result<Self, FormatError> {
        let mut lines = content_lines(text);
        let (hline, header) = lines.next().ok_or(FormatError::HeaderMismatch {
            line: 1,
            message: "missing header".into(),
        })?;
        let cols = fields(header);
        if cols != PAIRLOG_HEADER {
            return Err(FormatError::HeaderMismatch {
                line: hline,
                message: format!("expected `{}`, found `{header}`", PAIRLOG_HEADER.join(",")),
            });
        }
        let mut ids: Vec<String> = Vec::new();
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let mut entries = Vec::new();
        let mut intern = |name: &str, line: usize, column: usize| -> Result<usize, FormatError> {
            if name.is_empty() {
                return Err(FormatError::Parse {
                    line,
                    column,
                    message: "empty observable name".into(),
                });
            }
            if let Some(&i) = lookup.get(name) {
                return Ok(i);
            }
            ids.push(name.to_string());
            lookup.insert(name.to_string(), ids.len() - 1);
            Ok(ids.len() - 1)
        };
        for (lineno, line) in lines {
            let f = fields(line);
            if f.len() != 4 {
                return Err(FormatError::HeaderMismatch {
                    line: lineno,
                    message: format!("expected 4 fields, found {}", f.len()),
                });
            }
            let a = intern(f[0], lineno, 1)?;
            let value_a = parse_bit(f[1], lineno, 2)?;
            let b = intern(f[2], lineno, 3)?;
            let value_b = parse_bit(f[3], lineno, 4)?;
            if a == b {
                return Err(FormatError::Parse {
                    line: lineno,
                    column: 3,
                    message: format!("observable `{}` paired with itself", f[2]),
                });
            }
            entries.push(PairEntry {
                a,
                value_a,
                b,
                value_b,
            });
        }
        if ids.is_empty() {
            return Err(FormatError::Observable(ObservableError::Empty));
        }
        let set = ObservableSet::from_ids(ids, source)?;
        Ok(PairLogDataset::new(set, entries))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 12 + 32);
        out.push_str(&PAIRLOG_HEADER.join(","));
        out.push('\n');
        let name = |i: usize| self.observables.get(i).map(|o| o.id.as_str()).unwrap_or("");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", name(e.a), e.value_a, name(e.b), e.value_b);
        }
        out
    }
}

impl PairCounter for PairLogDataset {
    fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    fn counts_by_index(&self, a: usize, b: usize) -> [[u64; 2]; 2] {
        let idx = self.counts_index();
        let mut c = idx.get(&(a, b)).copied().unwrap_or_default();
        if let Some(rev) = idx.get(&(b, a)) {
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] += rev[j][i];
                }
            }
        }
        c
    }
}

impl PairSource for PairLogDataset {
    fn observable_set(&self) -> &ObservableSet {
        &self.observables
    }

    fn transition(
        &self,
        conditioning: &str,
        conditioned: &str,
        tol: &Tolerances,
    ) -> Result<TransitionMatrix, ProbError> {
        transition_from_counts(self, conditioning, conditioned, tol)
    }
}

/// One target table `table[i][j] = P(a = i, b = j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub a: String,
    pub b: String,
    pub table: Vec<Vec<f64>>,
}

/// Explicit pairwise joint tables, the exact (infinite-sample) counterpart of
/// a dataset. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTables {
    pub observables: Vec<String>,
    /// Outcomes per observable.
    pub values: usize,
    pub pairs: Vec<PairTable>,
    /// Full distribution over all outcomes when known, observable `k` being
    /// digit `k` (least significant first) of the outcome index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<f64>>,
    #[serde(skip)]
    set: Option<ObservableSet>,
}

impl PairTables {
    pub fn new(
        observables: Vec<String>,
        values: usize,
        pairs: Vec<PairTable>,
        joint: Option<Vec<f64>>,
    ) -> Result<Self, ObservableError> {
        let mut t = PairTables {
            observables,
            values,
            pairs,
            joint,
            set: None,
        };
        t.index()?;
        Ok(t)
    }

    fn index(&mut self) -> Result<(), ObservableError> {
        self.set = Some(ObservableSet::from_ids(self.observables.iter().cloned(), "pair tables")?);
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let mut t: PairTables = serde_json::from_str(text).map_err(|e| FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        t.index()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("pair tables serialize");
        s.push('\n');
        s
    }

    fn find(&self, a: &str, b: &str) -> Option<[[f64; 2]; 2]> {
        let grab = |t: &Vec<Vec<f64>>| -> Option<[[f64; 2]; 2]> {
            if t.len() != 2 || t.iter().any(|r| r.len() != 2) {
                return None;
            }
            Some([[t[0][0], t[0][1]], [t[1][0], t[1][1]]])
        };
        if let Some(p) = self.pairs.iter().find(|p| p.a == a && p.b == b) {
            return grab(&p.table);
        }
        self.pairs
            .iter()
            .find(|p| p.a == b && p.b == a)
            .and_then(|p| grab(&p.table))
            .map(|t| [[t[0][0], t[1][0]], [t[0][1], t[1][1]]])
    }

    /// Builds the marginal problem with every listed pair as a constraint.
    pub fn to_problem(&self, tolerance: f64) -> Result<JointFeasibilityProblem, LpError> {
        let set = self.observable_set();
        let mut problem = JointFeasibilityProblem::new(set.len(), self.values, tolerance)?;
        for p in &self.pairs {
            let (a, b) = resolve_pair(set, &p.a, &p.b)?;
            problem.add_pair(a, b, p.table.clone()).map_err(|e| match e {
                LpError::InconsistentOrientations { discrepancy, .. } => {
                    LpError::InconsistentOrientations {
                        a: p.a.clone(),
                        b: p.b.clone(),
                        discrepancy,
                    }
                }
                LpError::InvalidTable(_, _, why) => LpError::InvalidTable(p.a.clone(), p.b.clone(), why),
                other => other,
            })?;
        }
        Ok(problem)
    }
}

impl PairSource for PairTables {
    fn observable_set(&self) -> &ObservableSet {
        self.set.as_ref().expect("pair tables are indexed on construction")
    }

    /// Smoothing does not apply to exact tables.
    fn transition(
        &self,
        conditioning: &str,
        conditioned: &str,
        tol: &Tolerances,
    ) -> Result<TransitionMatrix, ProbError> {
        resolve_pair(self.observable_set(), conditioning, conditioned)?;
        let joint = self
            .find(conditioning, conditioned)
            .ok_or_else(|| ProbError::EmptyPairData(conditioning.to_string(), conditioned.to_string()))?;
        TransitionMatrix::from_joint(conditioning, conditioned, joint, tol.tol_b)
    }
}

pub fn read_pair_tables(path: &Path) -> Result<PairTables, FormatError> {
    PairTables::from_json(&read_text(path)?)
}

pub fn read_joint(path: &Path) -> Result<JointRecordDataset, FormatError> {
    JointRecordDataset::parse(&read_text(path)?, &path.display().to_string())
}

pub fn read_pairlog(path: &Path) -> Result<PairLogDataset, FormatError> {
    PairLogDataset::parse(&read_text(path)?, &path.display().to_string())
}
