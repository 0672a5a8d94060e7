//! Dense two-phase simplex for small systems `A x = b, x >= 0`.
//!
//! Phase one minimises the sum of one artificial variable per row; its optimum
//! is zero exactly when the system is feasible. Pivoting follows Bland's rule,
//! so degenerate marginal problems cannot cycle.

use thiserror::Error;

/// Reduced costs below `-COST_TOL` are improving.
const COST_TOL: f64 = 1e-11;
/// Smallest admissible pivot magnitude.
const PIVOT_TOL: f64 = 1e-9;
/// Basic values this far below zero indicate numerical breakdown.
const NEGATIVE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("constraint matrix is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
struct Tableau {
    rows: usize,
    /// Structural plus artificial columns; the right-hand side sits after them.
    cols: usize,
    structural: usize,
    data: Vec<f64>,
    /// Reduced costs, with minus the objective value in the last slot.
    cost: Vec<f64>,
    basis: Vec<usize>,
    allowed: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(r, c);
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v *= inv;
        }
        prow[c] = 1.0;
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (x, p) in self.cost.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn optimize(&mut self, max_pivots: usize) -> Result<(), SimplexError> {
        for _ in 0..max_pivots {
            let Some(enter) = (0..self.cols).find(|&j| self.allowed[j] && self.cost[j] < -COST_TOL)
            else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, enter);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14
                            || ((ratio - lr).abs() <= 1e-14 && self.basis[i] < self.basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(SimplexError::Unbounded);
            };
            self.pivot(r, enter);
            if !self.cost[self.cols].is_finite() {
                return Err(SimplexError::NumericalBreakdown("non-finite objective".into()));
            }
        }
        Err(SimplexError::IterationLimit(max_pivots))
    }

    fn structural_point(&self) -> Result<Vec<f64>, SimplexError> {
        let mut x = vec![0.0; self.structural];
        for i in 0..self.rows {
            let j = self.basis[i];
            if j < self.structural {
                let v = self.rhs(i);
                if v < -NEGATIVE_TOL || !v.is_finite() {
                    return Err(SimplexError::NumericalBreakdown(format!(
                        "basic variable {j} has value {v}"
                    )));
                }
                x[j] = v.max(0.0);
            }
        }
        Ok(x)
    }

    fn max_pivots(&self) -> usize {
        1000 + 100 * (self.rows + self.cols)
    }
}

/// Result of the phase-one solve.
#[derive(Debug, Clone)]
pub struct PhaseOne {
    tableau: Tableau,
    residual: f64,
    point: Vec<f64>,
}

impl PhaseOne {
    /// Optimal sum of artificial variables.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The structural part of the final basic solution.
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Hands over a feasible basis for further optimisation, provided the
    /// residual is within `tol`.
    pub fn into_feasible(self, tol: f64) -> Option<FeasibleRegion> {
        if self.residual > tol {
            return None;
        }
        let mut t = self.tableau;
        // Drive zero-level artificials out of the basis, dropping redundant rows.
        let mut keep = vec![true; t.rows];
        for i in 0..t.rows {
            if t.basis[i] < t.structural {
                continue;
            }
            let candidate = (0..t.structural)
                .filter(|&j| t.at(i, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| t.at(i, a).abs().total_cmp(&t.at(i, b).abs()));
            match candidate {
                Some(j) => t.pivot(i, j),
                None => keep[i] = false,
            }
        }
        if keep.iter().any(|k| !k) {
            let w = t.width();
            let mut data = Vec::with_capacity(t.data.len());
            let mut basis = Vec::with_capacity(t.rows);
            for i in (0..t.rows).filter(|&i| keep[i]) {
                data.extend_from_slice(&t.data[i * w..(i + 1) * w]);
                basis.push(t.basis[i]);
            }
            t.rows = basis.len();
            t.data = data;
            t.basis = basis;
        }
        for j in t.structural..t.cols {
            t.allowed[j] = false;
        }
        Some(FeasibleRegion { tableau: t })
    }
}

/// A feasible basis over which linear objectives can be minimised.
#[derive(Debug, Clone)]
pub struct FeasibleRegion {
    tableau: Tableau,
}

impl FeasibleRegion {
    /// Minimises `objective . x` over the feasible set and returns the minimiser.
    pub fn minimize(&self, objective: &[f64]) -> Result<Vec<f64>, SimplexError> {
        let mut t = self.tableau.clone();
        if objective.len() != t.structural {
            return Err(SimplexError::Malformed(format!(
                "objective has {} entries, expected {}",
                objective.len(),
                t.structural
            )));
        }
        let cost_of = |j: usize| if j < t.structural { objective[j] } else { 0.0 };
        let mut cost = vec![0.0; t.width()];
        cost[..t.structural].copy_from_slice(objective);
        for i in 0..t.rows {
            let cb = cost_of(t.basis[i]);
            if cb != 0.0 {
                let row = &t.data[i * t.width()..(i + 1) * t.width()];
                for (c, a) in cost.iter_mut().zip(row) {
                    *c -= cb * a;
                }
            }
        }
        for i in 0..t.rows {
            cost[t.basis[i]] = 0.0;
        }
        t.cost = cost;
        let limit = t.max_pivots();
        t.optimize(limit)?;
        t.structural_point()
    }
}

/// Runs phase one on `a x = b, x >= 0`.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Result<PhaseOne, SimplexError> {
    let rows = a.len();
    if b.len() != rows {
        return Err(SimplexError::Malformed(format!(
            "{rows} rows but {} right-hand sides",
            b.len()
        )));
    }
    let structural = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != structural) {
        return Err(SimplexError::Malformed("ragged constraint rows".into()));
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return Err(SimplexError::Malformed("non-finite coefficient".into()));
    }
    let cols = structural + rows;
    let width = cols + 1;
    let mut data = vec![0.0; rows * width];
    let mut cost = vec![0.0; width];
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let dst = &mut data[i * width..(i + 1) * width];
        for (d, v) in dst.iter_mut().zip(row) {
            *d = sign * v;
        }
        dst[structural + i] = 1.0;
        dst[cols] = sign * rhs;
        for (c, d) in cost.iter_mut().zip(dst.iter()).take(structural) {
            *c -= d;
        }
        cost[cols] -= dst[cols];
    }
    let mut tableau = Tableau {
        rows,
        cols,
        structural,
        data,
        cost,
        basis: (structural..cols).collect(),
        allowed: vec![true; cols],
    };
    let limit = tableau.max_pivots();
    tableau.optimize(limit)?;
    let residual: f64 = (0..rows)
        .filter(|&i| tableau.basis[i] >= structural)
        .map(|i| tableau.rhs(i).max(0.0))
        .sum();
    let point = tableau.structural_point()?;
    Ok(PhaseOne {
        tableau,
        residual,
        point,
    })
}
