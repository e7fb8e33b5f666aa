//! Polytopes in H-representation and combinatorial vertex enumeration.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default dimension cap for vertex enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;
/// A basic solution is kept if it violates no row by more than this.
pub const VERTEX_FEASIBILITY_TOL: f64 = 1e-8;
/// Vertices closer than this in the max-norm are merged.
pub const VERTEX_DEDUP_TOL: f64 = 1e-7;

const INDEPENDENCE_TOL: f64 = 1e-9;

/// `{x : a x <= b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl HPolytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "polytope bounds",
                expected: a.nrows(),
                found: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    /// The box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        let mut a = DMatrix::zeros(2 * dim, dim);
        let mut b = DVector::zeros(2 * dim);
        for k in 0..dim {
            a[(2 * k, k)] = 1.0;
            b[2 * k] = hi;
            a[(2 * k + 1, k)] = -1.0;
            b[2 * k + 1] = -lo;
        }
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.b
    }

    /// Largest value of `a_i x - b_i` over all rows (negative inside).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let lhs = &self.a * x;
        lhs.iter()
            .zip(self.b.iter())
            .map(|(l, b)| l - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.num_rows() == 0 || self.max_violation(x) <= tol
    }

    /// Appends the rows of `other` (same dimension).
    pub fn intersect(&self, other: &HPolytope) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "polytope dimension",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let rows = self.num_rows() + other.num_rows();
        let mut a = DMatrix::zeros(rows, self.dim());
        let mut b = DVector::zeros(rows);
        a.rows_mut(0, self.num_rows()).copy_from(&self.a);
        a.rows_mut(self.num_rows(), other.num_rows()).copy_from(&other.a);
        b.rows_mut(0, self.num_rows()).copy_from(&self.b);
        b.rows_mut(self.num_rows(), other.num_rows()).copy_from(&other.b);
        Ok(Self { a, b })
    }

    /// Keeps the rows whose index satisfies `keep`.
    pub fn select_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.num_rows()).filter(|&i| keep(i)).collect();
        Self {
            a: self.a.select_rows(idx.iter()),
            b: self.b.select_rows(idx.iter()),
        }
    }

    /// Indices of the first occurrence of every distinct `(a_i, b_i)` row.
    pub fn distinct_row_indices(&self) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        for i in 0..self.num_rows() {
            let dup = kept
                .iter()
                .any(|&k| self.b[k] == self.b[i] && self.a.row(k) == self.a.row(i));
            if !dup {
                kept.push(i);
            }
        }
        kept
    }

    /// Removes exact duplicate rows.
    pub fn without_duplicate_rows(&self) -> Self {
        let kept = self.distinct_row_indices();
        Self {
            a: self.a.select_rows(kept.iter()),
            b: self.b.select_rows(kept.iter()),
        }
    }
}

/// Enumerates every vertex of a bounded polytope by solving the linear system
/// of each linearly independent `d`-subset of rows and keeping the feasible
/// solutions. Refuses dimensions above `cap`.
pub fn enumerate_vertices(p: &HPolytope, cap: usize) -> Result<Vec<DVector<f64>>> {
    let d = p.dim();
    if d > cap {
        return Err(Error::DimensionCap { dim: d, cap });
    }
    let p = p.without_duplicate_rows();
    let m = p.num_rows();
    if d == 0 {
        return Ok(if p.b.iter().all(|&b| b >= -VERTEX_FEASIBILITY_TOL) {
            vec![DVector::zeros(0)]
        } else {
            vec![]
        });
    }
    if m < d {
        return Ok(Vec::new());
    }
    let rows: Vec<Vec<f64>> = (0..m).map(|i| p.a.row(i).iter().copied().collect()).collect();
    let found: Vec<Vec<DVector<f64>>> = (0..=m - d)
        .into_par_iter()
        .map(|first| {
            let mut search = Search {
                p: &p,
                rows: &rows,
                d,
                chosen: Vec::with_capacity(d),
                basis: Vec::with_capacity(d),
                out: Vec::new(),
            };
            if let Some(q) = orthogonal_residual(&rows[first], &search.basis) {
                search.chosen.push(first);
                search.basis.push(q);
                search.descend(first + 1);
            }
            search.out
        })
        .collect();
    Ok(dedup_points(found.into_iter().flatten().collect(), VERTEX_DEDUP_TOL))
}

struct Search<'a> {
    p: &'a HPolytope,
    rows: &'a [Vec<f64>],
    d: usize,
    chosen: Vec<usize>,
    basis: Vec<Vec<f64>>,
    out: Vec<DVector<f64>>,
}

impl Search<'_> {
    fn descend(&mut self, start: usize) {
        if self.chosen.len() == self.d {
            self.solve_leaf();
            return;
        }
        let need = self.d - self.chosen.len();
        let m = self.rows.len();
        for i in start..m {
            if m - i < need {
                break;
            }
            if let Some(q) = orthogonal_residual(&self.rows[i], &self.basis) {
                self.chosen.push(i);
                self.basis.push(q);
                self.descend(i + 1);
                self.chosen.pop();
                self.basis.pop();
            }
        }
    }

    fn solve_leaf(&mut self) {
        let d = self.d;
        let a = DMatrix::from_fn(d, d, |r, c| self.rows[self.chosen[r]][c]);
        let b = DVector::from_fn(d, |r, _| self.p.b[self.chosen[r]]);
        if let Some(x) = a.lu().solve(&b) {
            if x.iter().all(|v| v.is_finite()) && self.p.max_violation(&x) <= VERTEX_FEASIBILITY_TOL {
                self.out.push(x);
            }
        }
    }
}

/// Component of `row` orthogonal to the orthonormal `basis`, normalised, or
/// `None` when `row` lies in their span.
fn orthogonal_residual(row: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let mut w: Vec<f64> = row.iter().map(|x| x / norm).collect();
    // Two Gram-Schmidt passes for stability.
    for _ in 0..2 {
        for q in basis {
            let dot: f64 = w.iter().zip(q).map(|(x, y)| x * y).sum();
            for (x, y) in w.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
    }
    let rest = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rest < INDEPENDENCE_TOL {
        return None;
    }
    Some(w.into_iter().map(|x| x / rest).collect())
}

/// Merges points closer than `tol` in the max-norm, keeping first
/// occurrences in order.
pub fn dedup_points(mut points: Vec<DVector<f64>>, tol: f64) -> Vec<DVector<f64>> {
    if points.is_empty() {
        return points;
    }
    // Sort on the first coordinate so only a window needs comparing.
    points.sort_by(|x, y| x[0].total_cmp(&y[0]).then_with(|| lexicographic(x, y)));
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| p[0] - k[0] <= tol)
            .any(|k| (k - &p).amax() <= tol);
        if !dup {
            kept.push(p);
        }
    }
    kept
}

fn lexicographic(x: &DVector<f64>, y: &DVector<f64>) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y.iter()) {
        match a.total_cmp(b) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}
