//! Dense two-phase simplex.
//!
//! Problems are `maximize c·v` subject to `A v = b`, `0 <= v_i <= u_i` (upper
//! bounds optional). Upper bounds become explicit slack rows, every row is
//! scaled to unit Euclidean norm, and both phases pivot with Bland's rule so
//! the solver terminates on degenerate programs and always returns the same
//! vertex for the same input.

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_VARIABLES: usize = 500;
pub const MAX_ROWS: usize = 500;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Per-variable upper bound; lower bounds are always zero.
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, eq_matrix: Vec::new(), eq_rhs: Vec::new(), upper: vec![None; n] }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn set_upper(&mut self, var: usize, bound: f64) {
        self.upper[var] = Some(bound);
    }

    /// `max_i |(A v - b)_i|` in the original, unscaled rows.
    pub fn equality_residual(&self, values: &[f64]) -> f64 {
        self.eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (row.iter().zip(values).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::Dimension("linear program has no variables".into()));
        }
        if n > MAX_VARIABLES || self.eq_matrix.len() > MAX_ROWS {
            return Err(Error::Dimension(format!(
                "{n} variables / {} rows exceed the dense solver limits",
                self.eq_matrix.len()
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.upper.len() != n {
            return Err(Error::Dimension("constraint arrays disagree in length".into()));
        }
        if self.eq_matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("constraint row length differs from variable count".into()));
        }
        let finite = self.objective.iter().chain(self.eq_rhs.iter()).chain(self.eq_matrix.iter().flatten());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear program", "non-finite coefficient"));
        }
        if let Some(u) = self.upper.iter().flatten().find(|u| !u.is_finite() || **u < 0.0) {
            return Err(Error::invalid("linear program", format!("upper bound {u} below the zero lower bound")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    fn without_values(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            values: vec![0.0; n],
            objective_value: match status {
                LpStatus::Unbounded => f64::INFINITY,
                _ => f64::NAN,
            },
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced-cost row; last entry holds minus the objective value.
    cost: Vec<f64>,
    cols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn price(&mut self, c: &[f64]) {
        let mut cost = c.to_vec();
        cost.push(0.0);
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = c[bv];
            if cb != 0.0 {
                for (r, a) in cost.iter_mut().zip(row) {
                    *r -= cb * a;
                }
            }
        }
        self.cost = cost;
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, a) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * a;
                }
                row[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, a) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * a;
            }
            self.cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Bland's rule: lowest-index improving column, then the lowest-index basic
    /// variable among the minimum-ratio rows.
    fn run(&mut self, allowed: &[bool]) -> Result<Outcome> {
        for _ in 0..MAX_PIVOTS {
            let Some(col) = (0..self.cols).find(|&j| allowed[j] && self.cost[j] > COST_TOL) else {
                return Ok(Outcome::Optimal);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = best else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, col);
        }
        Err(Error::Lp("pivot limit reached".into()))
    }
}

/// Solves `lp`. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; `Err` is reserved for malformed input.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.variables();

    // Standard form: originals, then one slack per upper bound.
    let bounded: Vec<(usize, f64)> = lp.upper.iter().enumerate().filter_map(|(i, u)| u.map(|u| (i, u))).collect();
    let total = n + bounded.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lp.eq_matrix.len() + bounded.len());
    for (row, &b) in lp.eq_matrix.iter().zip(&lp.eq_rhs) {
        let mut r = row.clone();
        r.resize(total, 0.0);
        rows.push((r, b));
    }
    for (k, &(i, u)) in bounded.iter().enumerate() {
        let mut r = vec![0.0; total];
        r[i] = 1.0;
        r[n + k] = 1.0;
        rows.push((r, u));
    }

    let mut kept = Vec::with_capacity(rows.len());
    for (mut r, mut b) in rows {
        let norm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            if b.abs() > FEAS_TOL {
                return Ok(LpSolution::without_values(LpStatus::Infeasible, n));
            }
            continue;
        }
        r.iter_mut().for_each(|a| *a /= norm);
        b /= norm;
        if b < 0.0 {
            r.iter_mut().for_each(|a| *a = -*a);
            b = -b;
        }
        kept.push((r, b));
    }

    let m = kept.len();
    let cols = total + m;
    let mut tab = Tableau {
        rows: kept
            .into_iter()
            .enumerate()
            .map(|(i, (mut r, b))| {
                r.resize(cols, 0.0);
                r[total + i] = 1.0;
                r.push(b);
                r
            })
            .collect(),
        basis: (total..cols).collect(),
        cost: Vec::new(),
        cols,
    };

    // Phase 1: maximize -Σ artificials.
    let mut phase1 = vec![0.0; cols];
    phase1[total..].iter_mut().for_each(|c| *c = -1.0);
    tab.price(&phase1);
    let all = vec![true; cols];
    tab.run(&all)?;
    let infeasibility: f64 = tab.rows.iter().zip(&tab.basis).filter(|(_, &bv)| bv >= total).map(|(r, _)| r[cols]).sum();
    if infeasibility > FEAS_TOL {
        return Ok(LpSolution::without_values(LpStatus::Infeasible, n));
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and dropped.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= total {
            match (0..total).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2 on the original objective with artificials frozen out.
    let mut phase2 = lp.objective.clone();
    phase2.resize(cols, 0.0);
    tab.price(&phase2);
    let allowed: Vec<bool> = (0..cols).map(|j| j < total).collect();
    if let Outcome::Unbounded = tab.run(&allowed)? {
        return Ok(LpSolution::without_values(LpStatus::Unbounded, n));
    }

    let mut values = vec![0.0; n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        if bv < n {
            values[bv] = row[cols].max(0.0);
        }
    }
    for (v, u) in values.iter_mut().zip(&lp.upper) {
        if let Some(u) = u {
            *v = v.min(*u);
        }
    }
    let objective_value = values.iter().zip(&lp.objective).map(|(v, c)| v * c).sum();
    Ok(LpSolution { status: LpStatus::Optimal, values, objective_value })
}
