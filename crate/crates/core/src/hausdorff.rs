//! Max-norm distances between feasible reward sets.
//!
//! The point-to-set distance `x -> inf_{y in P} |x - y|_inf` is convex, so
//! its supremum over a polytope is attained at a vertex. Exact mode
//! therefore enumerates the vertices of each set and measures them against
//! the other set; lower-bound mode only measures the vertices reached by a
//! seeded sequence of random linear objectives.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{polytope_h_rep, RewardPolytope, DEFAULT_TOL};
use crate::lp::{lp_solve, LinearProgram, LpOutcome};
use crate::mdp::{flatten, StateActionTable};
use crate::polytope::{enumerate_vertices, HPolytope, DEFAULT_ENUMERATION_CAP, VERTEX_DEDUP_TOL};
use crate::problem::IrlSeProblem;
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffMode {
    /// Every vertex of both sets is measured.
    Exact,
    /// Vertices found by random objectives; the value never exceeds the
    /// true distance.
    LowerBound,
}

impl HausdorffMode {
    pub fn tag(self) -> &'static str {
        match self {
            HausdorffMode::Exact => "exact",
            HausdorffMode::LowerBound => "lower",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "exact" => Some(HausdorffMode::Exact),
            "lower" | "lower_bound" => Some(HausdorffMode::LowerBound),
            _ => None,
        }
    }
}

impl fmt::Display for HausdorffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Distance from a point to a polytope with the closest point found.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub distance: f64,
    pub nearest: DVector<f64>,
}

/// `inf_{y in P} |x - y|_inf` as one LP in `(y, t)`. Points inside `P`
/// within `inside_tol` get distance exactly 0, as do LP values below it.
pub fn project(x: &DVector<f64>, p: &HPolytope, inside_tol: f64) -> Result<Projection> {
    let d = p.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            what: "point",
            expected: d,
            found: x.len(),
        });
    }
    if p.contains(x, inside_tol) {
        return Ok(Projection {
            distance: 0.0,
            nearest: x.clone(),
        });
    }
    let m = p.num_rows();
    let mut g = DMatrix::zeros(m + 2 * d, d + 1);
    let mut h = DVector::zeros(m + 2 * d);
    g.view_mut((0, 0), (m, d)).copy_from(p.matrix());
    h.rows_mut(0, m).copy_from(p.bounds());
    for k in 0..d {
        // x_k - y_k <= t and y_k - x_k <= t
        g[(m + 2 * k, k)] = -1.0;
        g[(m + 2 * k, d)] = -1.0;
        h[m + 2 * k] = -x[k];
        g[(m + 2 * k + 1, k)] = 1.0;
        g[(m + 2 * k + 1, d)] = -1.0;
        h[m + 2 * k + 1] = x[k];
    }
    let mut c = DVector::zeros(d + 1);
    c[d] = 1.0;
    match lp_solve(&LinearProgram::new(c, g, h)?)? {
        LpOutcome::Optimal { value, point } => Ok(Projection {
            distance: if value <= inside_tol { 0.0 } else { value },
            nearest: point.rows(0, d).into_owned(),
        }),
        LpOutcome::Infeasible => Err(Error::EmptyPolytope),
        LpOutcome::Unbounded => Err(Error::Numeric("distance LP reported unbounded".into())),
    }
}

/// `inf_{r' in P} |r0 - r'|_inf` for a reward table.
pub fn directed_distance(r0: &StateActionTable, p: &RewardPolytope) -> Result<f64> {
    Ok(project(&flatten(r0), p.h_rep(), p.tol())?.distance)
}

/// Largest distance from a set of points of one polytope into another.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedReport {
    pub value: f64,
    /// Point attaining `value`.
    pub witness: DVector<f64>,
    /// Its closest point in the target set.
    pub nearest: DVector<f64>,
    pub points_checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HausdorffReport {
    /// `max(forward.value, backward.value)`.
    pub value: f64,
    pub mode: HausdorffMode,
    /// From the first set into the second.
    pub forward: DirectedReport,
    /// From the second set into the first.
    pub backward: DirectedReport,
}

impl HausdorffReport {
    /// The directed report attaining the value.
    pub fn witness(&self) -> &DirectedReport {
        if self.forward.value >= self.backward.value {
            &self.forward
        } else {
            &self.backward
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffOptions {
    pub mode: HausdorffMode,
    /// Random objectives per set in lower-bound mode.
    pub budget: usize,
    pub seed: u64,
    /// Largest dimension accepted by exact mode.
    pub enumeration_cap: usize,
    /// Points within this of a set count as members.
    pub tol: f64,
}

impl Default for HausdorffOptions {
    fn default() -> Self {
        Self {
            mode: HausdorffMode::Exact,
            budget: 64,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            tol: DEFAULT_TOL,
        }
    }
}

impl HausdorffOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn lower_bound(budget: usize, seed: u64) -> Self {
        Self {
            mode: HausdorffMode::LowerBound,
            budget,
            seed,
            ..Self::default()
        }
    }
}

/// Vertices reached by minimising `budget` standard-normal objectives. The
/// direction sequence depends only on `seed`, so a larger budget extends
/// the same sequence.
pub fn sampled_vertices(p: &HPolytope, budget: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.dim();
    let directions: Vec<DVector<f64>> = (0..budget)
        .map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let points = directions
        .into_par_iter()
        .map(|c| match lp_solve(&LinearProgram::new(c, p.matrix().clone(), p.bounds().clone())?)? {
            LpOutcome::Optimal { point, .. } => Ok(point),
            LpOutcome::Infeasible => Err(Error::EmptyPolytope),
            LpOutcome::Unbounded => Err(Error::Numeric("vertex LP unbounded; polytope is not bounded".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dedup_in_order(points, VERTEX_DEDUP_TOL))
}

/// Keeps the first point of every cluster in sampling order, so the points
/// kept for a budget are a prefix of those kept for any larger budget.
fn dedup_in_order(points: Vec<DVector<f64>>, tol: f64) -> Vec<DVector<f64>> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !kept.iter().any(|k| (k - &p).amax() <= tol) {
            kept.push(p);
        }
    }
    kept
}

fn directed_over(points: &[DVector<f64>], target: &HPolytope, tol: f64) -> Result<DirectedReport> {
    let projections = points
        .par_iter()
        .map(|x| project(x, target, tol))
        .collect::<Result<Vec<_>>>()?;
    // First maximiser in index order keeps the witness deterministic.
    let mut best = 0;
    for (i, pr) in projections.iter().enumerate() {
        if pr.distance > projections[best].distance {
            best = i;
        }
    }
    Ok(DirectedReport {
        value: projections[best].distance,
        witness: points[best].clone(),
        nearest: projections[best].nearest.clone(),
        points_checked: points.len(),
    })
}

/// Hausdorff distance in the max-norm between two polytopes.
pub fn hausdorff_polytopes(p1: &HPolytope, p2: &HPolytope, options: &HausdorffOptions) -> Result<HausdorffReport> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            what: "polytope dimension",
            expected: p1.dim(),
            found: p2.dim(),
        });
    }
    let (v1, v2) = match options.mode {
        HausdorffMode::Exact => (
            enumerate_vertices(p1, options.enumeration_cap)?,
            enumerate_vertices(p2, options.enumeration_cap)?,
        ),
        HausdorffMode::LowerBound => {
            if options.budget == 0 {
                return Err(Error::InvalidParameter {
                    name: "budget",
                    reason: "lower-bound mode needs at least one direction".into(),
                });
            }
            (
                sampled_vertices(p1, options.budget, mix_seed(options.seed, 0))?,
                sampled_vertices(p2, options.budget, mix_seed(options.seed, 1))?,
            )
        }
    };
    if v1.is_empty() || v2.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let forward = directed_over(&v1, p2, options.tol)?;
    let backward = directed_over(&v2, p1, options.tol)?;
    Ok(HausdorffReport {
        value: forward.value.max(backward.value),
        mode: options.mode,
        forward,
        backward,
    })
}

/// Hausdorff distance between two feasible reward sets.
pub fn hausdorff_distance(p1: &RewardPolytope, p2: &RewardPolytope, options: &HausdorffOptions) -> Result<HausdorffReport> {
    hausdorff_polytopes(p1.h_rep(), p2.h_rep(), options)
}

/// Builds and reduces both feasible sets, then measures their distance.
pub fn hausdorff_problems(a: &IrlSeProblem, b: &IrlSeProblem, options: &HausdorffOptions) -> Result<HausdorffReport> {
    if a.reward_dim() != b.reward_dim() {
        return Err(Error::DimensionMismatch {
            what: "reward dimension",
            expected: a.reward_dim(),
            found: b.reward_dim(),
        });
    }
    let pa = polytope_h_rep(a, options.tol)?.reduced()?;
    let pb = polytope_h_rep(b, options.tol)?.reduced()?;
    hausdorff_distance(&pa, &pb, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example_fig1, lb_subopt};
    use approx::assert_abs_diff_eq;

    fn band(xi: f64) -> HPolytope {
        HPolytope::cube(2, 0.0, 1.0)
            .intersect(
                &HPolytope::new(
                    DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
                    DVector::from_vec(vec![xi, 0.0]),
                )
                .unwrap(),
            )
            .unwrap()
    }

    #[test]
    fn box_clamp_distance() {
        let cube = HPolytope::cube(3, 0.0, 1.0);
        let pr = project(&DVector::from_element(3, 1.5), &cube, 1e-9).unwrap();
        assert_abs_diff_eq!(pr.distance, 0.5, epsilon = 1e-9);
        let inside = DVector::from_vec(vec![0.2, 0.9, 1.0]);
        assert_eq!(project(&inside, &cube, 1e-9).unwrap().distance, 0.0);
    }

    #[test]
    fn empty_target_is_reported() {
        let empty = HPolytope::cube(1, 1.0, 0.0);
        let err = project(&DVector::from_element(1, 0.5), &empty, 1e-9).unwrap_err();
        assert_eq!(err, Error::EmptyPolytope);
    }

    #[test]
    fn fig1_witness_into_tighter_set() {
        let loose = polytope_h_rep(&example_fig1(0.9, 0.5).unwrap(), DEFAULT_TOL).unwrap();
        let tight = polytope_h_rep(&example_fig1(0.9, 0.1).unwrap(), DEFAULT_TOL).unwrap();
        let r0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.0]);
        assert_eq!(directed_distance(&r0, &loose).unwrap(), 0.0);
        assert_abs_diff_eq!(directed_distance(&r0, &tight).unwrap(), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn band_distances() {
        let (a, b) = (band(0.5), band(0.1));
        let exact = hausdorff_polytopes(&a, &b, &HausdorffOptions::exact()).unwrap();
        assert_abs_diff_eq!(exact.value, 0.2, epsilon = 1e-9);
        assert_eq!(exact.backward.value, 0.0);
        let swapped = hausdorff_polytopes(&b, &a, &HausdorffOptions::exact()).unwrap();
        assert_eq!(exact.value, swapped.value);
        assert_eq!(hausdorff_polytopes(&a, &a, &HausdorffOptions::exact()).unwrap().value, 0.0);
    }

    #[test]
    fn lower_bound_is_monotone_and_below_exact() {
        let (a, b) = (band(0.5), band(0.1));
        let exact = hausdorff_polytopes(&a, &b, &HausdorffOptions::exact()).unwrap().value;
        let mut last = 0.0;
        for budget in [1, 2, 4, 8, 32] {
            let lb = hausdorff_polytopes(&a, &b, &HausdorffOptions::lower_bound(budget, 3)).unwrap();
            assert_eq!(lb.mode, HausdorffMode::LowerBound);
            assert!(lb.value >= last && lb.value <= exact + 1e-9);
            last = lb.value;
        }
        assert!(hausdorff_polytopes(&a, &b, &HausdorffOptions::lower_bound(0, 3)).is_err());
    }

    #[test]
    fn exact_mode_respects_cap() {
        let big = HPolytope::cube(11, 0.0, 1.0);
        let err = hausdorff_polytopes(&big, &big, &HausdorffOptions::exact()).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 11, cap: 10 }));
    }

    #[test]
    fn saturated_experts_give_the_single_agent_set() {
        let p = example_fig1(0.9, 20.0).unwrap();
        let r = hausdorff_problems(&p, &p.single_agent(), &HausdorffOptions::exact()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn subopt_pair_gap() {
        let base = lb_subopt(1, 0.9, 0.1, 0.25, 2.0, None).unwrap();
        let alt = lb_subopt(1, 0.9, 0.1, 0.25, 2.0, Some(1)).unwrap();
        let r = hausdorff_problems(&base, &alt, &HausdorffOptions::exact()).unwrap();
        assert_abs_diff_eq!(r.value, 0.1, epsilon = 1e-7);
    }
}
