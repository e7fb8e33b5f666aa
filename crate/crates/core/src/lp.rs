//! Small dense linear-programming core: `min c.x` subject to `G x <= h` with
//! free variables, solved by a two-phase tableau simplex using Bland's rule.
//!
//! The solver targets problems with at most a few dozen variables. Free
//! variables are split as `x = u - v` with `u, v >= 0`, each inequality gets a
//! slack, and rows with a negative right-hand side get an artificial variable
//! for phase one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Feasibility and reduced-cost tolerance.
pub const LP_TOL: f64 = 1e-9;
/// Default cap on the number of decision variables.
pub const DEFAULT_MAX_DIM: usize = 64;

const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

/// `min objective . x` subject to `constraints * x <= bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: DVector<f64>,
    constraints: DMatrix<f64>,
    bounds: DVector<f64>,
}

impl LinearProgram {
    pub fn new(objective: DVector<f64>, constraints: DMatrix<f64>, bounds: DVector<f64>) -> Result<Self> {
        if constraints.ncols() != objective.len() {
            return Err(Error::DimensionMismatch {
                what: "constraint columns",
                expected: objective.len(),
                found: constraints.ncols(),
            });
        }
        if constraints.nrows() != bounds.len() {
            return Err(Error::DimensionMismatch {
                what: "constraint bounds",
                expected: constraints.nrows(),
                found: bounds.len(),
            });
        }
        let finite = objective
            .iter()
            .chain(constraints.iter())
            .chain(bounds.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Numeric("linear program has non-finite entries".into()));
        }
        Ok(Self {
            objective,
            constraints,
            bounds,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.bounds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: DVector<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_dim: usize,
    pub tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            tol: LP_TOL,
        }
    }
}

pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp_solve_with(lp, &SimplexOptions::default())
}

pub fn lp_solve_with(lp: &LinearProgram, options: &SimplexOptions) -> Result<LpOutcome> {
    let n = lp.dim();
    if n > options.max_dim {
        return Err(Error::DimensionCap {
            dim: n,
            cap: options.max_dim,
        });
    }
    let mut tableau = Tableau::build(lp);
    let scale = 1.0 + lp.bounds.amax();

    // Phase one: drive the artificial variables to zero.
    if tableau.num_artificial > 0 {
        let costs: Vec<f64> = (0..tableau.width())
            .map(|j| if tableau.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        match tableau.optimize(&costs, false, options.tol)? {
            Phase::Optimal => {}
            Phase::Unbounded => return Err(Error::Numeric("phase one reported unbounded".into())),
        }
        let infeasibility: f64 = (0..tableau.rows)
            .filter(|&i| tableau.is_artificial(tableau.basis[i]))
            .map(|i| tableau.rhs(i))
            .sum();
        if infeasibility > options.tol * scale {
            return Ok(LpOutcome::Infeasible);
        }
        tableau.evict_artificials();
    }

    let mut costs = vec![0.0; tableau.width()];
    for j in 0..n {
        costs[j] = lp.objective[j];
        costs[n + j] = -lp.objective[j];
    }
    match tableau.optimize(&costs, true, options.tol)? {
        Phase::Unbounded => Ok(LpOutcome::Unbounded),
        Phase::Optimal => {
            let point = tableau.primal(n);
            let value = lp.objective.dot(&point);
            Ok(LpOutcome::Optimal { value, point })
        }
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

/// Dense canonical-form tableau. Column layout: `u (n) | v (n) | slack (m) |
/// artificial (k) | rhs`.
struct Tableau {
    rows: usize,
    cols: usize,
    n: usize,
    num_artificial: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.dim();
        let m = lp.constraints.nrows();
        let num_artificial = lp.bounds.iter().filter(|&&h| h < 0.0).count();
        let cols = 2 * n + m + num_artificial + 1;
        let mut data = vec![0.0; m * cols];
        let mut basis = vec![0; m];
        let mut next_art = 2 * n + m;
        for i in 0..m {
            let sign = if lp.bounds[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[i * cols..(i + 1) * cols];
            for j in 0..n {
                let g = lp.constraints[(i, j)] * sign;
                row[j] = g;
                row[n + j] = -g;
            }
            row[2 * n + i] = sign;
            row[cols - 1] = lp.bounds[i] * sign;
            if sign < 0.0 {
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = 2 * n + i;
            }
        }
        Self {
            rows: m,
            cols,
            n,
            num_artificial,
            data,
            basis,
        }
    }

    /// Number of variable columns (excludes the rhs).
    fn width(&self) -> usize {
        self.cols - 1
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.width() - self.num_artificial && j < self.width()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols - 1)
    }

    fn pivot(&mut self, r: usize, q: usize, objective: &mut [f64]) {
        let cols = self.cols;
        let p = self.at(r, q);
        for x in &mut self.data[r * cols..(r + 1) * cols] {
            *x /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f != 0.0 {
                for (x, &pr) in self.data[i * cols..(i + 1) * cols].iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                self.data[i * cols + q] = 0.0;
            }
        }
        let f = objective[q];
        if f != 0.0 {
            for (x, &pr) in objective.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            objective[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// Runs the simplex method with Bland's rule on the given column costs.
    /// When `skip_artificial` is set artificial columns never enter.
    fn optimize(&mut self, costs: &[f64], skip_artificial: bool, tol: f64) -> Result<Phase> {
        // Reduced-cost row in canonical form; the last entry is -objective.
        let mut objective = vec![0.0; self.cols];
        objective[..costs.len()].copy_from_slice(costs);
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.cols {
                    objective[j] -= cb * self.at(i, j);
                }
            }
        }
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.width())
                .filter(|&j| !(skip_artificial && self.is_artificial(j)))
                .find(|&j| objective[j] < -tol);
            let Some(q) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(r, q, &mut objective);
        }
        Err(Error::Numeric("simplex pivot limit reached".into()))
    }

    /// After phase one, pivots zero-level artificials out of the basis and
    /// drops rows that turn out to be redundant.
    fn evict_artificials(&mut self) {
        let mut scratch = vec![0.0; self.cols];
        let mut i = 0;
        while i < self.rows {
            if !self.is_artificial(self.basis[i]) {
                i += 1;
                continue;
            }
            let replacement = (0..self.width())
                .filter(|&j| !self.is_artificial(j))
                .find(|&j| self.at(i, j).abs() > PIVOT_TOL);
            match replacement {
                Some(q) => {
                    self.pivot(i, q, &mut scratch);
                    i += 1;
                }
                None => {
                    self.data.drain(i * self.cols..(i + 1) * self.cols);
                    self.basis.remove(i);
                    self.rows -= 1;
                }
            }
        }
    }

    fn primal(&self, n: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        for i in 0..self.rows {
            let b = self.basis[i];
            let value = self.rhs(i);
            if b < n {
                x[b] += value;
            } else if b < 2 * n {
                x[b - n] -= value;
            }
        }
        debug_assert_eq!(self.n, n);
        x
    }
}
