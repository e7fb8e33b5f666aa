//! Feasible reward sets: membership tests, the `(zeta, V)` parametrisation,
//! caps on `zeta`, volume bounds and the linear-inequality description of
//! the set.
//!
//! All conditions are affine in the reward, so the set is a polytope inside
//! the unit box. Three routes decide membership and are cross-checked in the
//! tests:
//!
//! * [`membership_implicit`] compares `Q` and `V` of the optimal expert and
//!   the value gap to every sub-optimal expert,
//! * [`membership_q`] uses the stronger Q-level gap `Q^{pi_1} <= V^{pi_i} + xi`,
//! * [`RewardPolytope::contains`] evaluates the explicit inequality rows.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpOutcome};
use crate::mdp::{
    apply_policy, apply_transition, expand_state, flatten, mask_unsupported, occupancy_matrix,
    policy_selector, policy_value, unflatten, value_functions, StateActionTable, StateTable,
};
use crate::polytope::HPolytope;
use crate::problem::{ConstraintMode, IrlSeProblem};

/// Default tolerance of the membership tests.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Which condition a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `Q^{pi_1}(s,a) = V^{pi_1}(s)` on actions the optimal expert plays.
    Equality,
    /// `Q^{pi_1}(s,a) <= V^{pi_1}(s)` on actions it never plays.
    Optimality,
    /// Performance-gap constraint of sub-optimal expert `expert` (0-based).
    ExpertGap { expert: usize },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Equality => write!(f, "(i) equality"),
            Condition::Optimality => write!(f, "(ii) optimality"),
            Condition::ExpertGap { expert } => write!(f, "(iii) expert {expert} gap"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub state: usize,
    pub action: Option<usize>,
    /// Amount by which the condition fails, before the tolerance.
    pub margin: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Some(a) => write!(f, "{} at (s={}, a={}): margin {:.3e}", self.condition, self.state, a, self.margin),
            None => write!(f, "{} at s={}: margin {:.3e}", self.condition, self.state, self.margin),
        }
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MembershipReport {
    pub violations: Vec<Violation>,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_box(problem: &IrlSeProblem, r: &StateActionTable, tol: f64) -> Result<()> {
    problem.mdp().check_state_action_table("reward", r)?;
    for s in 0..r.nrows() {
        for a in 0..r.ncols() {
            let v = r[(s, a)];
            if !(v >= -tol && v <= 1.0 + tol) {
                return Err(Error::RewardOutOfBox {
                    state: s,
                    action: a,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Optimality conditions (i) and (ii) of the optimal expert.
fn optimality_violations(
    problem: &IrlSeProblem,
    q: &StateActionTable,
    v: &StateTable,
    tol: f64,
    out: &mut Vec<Violation>,
) {
    let pi = problem.optimal();
    for s in 0..problem.num_states() {
        for a in 0..problem.num_actions() {
            let adv = q[(s, a)] - v[s];
            if pi.supports(s, a) {
                if adv.abs() > tol {
                    out.push(Violation {
                        condition: Condition::Equality,
                        state: s,
                        action: Some(a),
                        margin: adv.abs(),
                    });
                }
            } else if adv > tol {
                out.push(Violation {
                    condition: Condition::Optimality,
                    state: s,
                    action: Some(a),
                    margin: adv,
                });
            }
        }
    }
}

/// Signed excess of a value gap over its constraint (positive = violated).
fn gap_excess(mode: ConstraintMode, gap: f64, xi: f64) -> f64 {
    match mode {
        ConstraintMode::Upper => gap - xi,
        ConstraintMode::Lower => xi - gap,
        ConstraintMode::Exact => (gap - xi).abs(),
    }
}

/// Membership through the `Q`/`V` conditions of the optimal expert and the
/// per-state value gaps of the sub-optimal experts.
pub fn membership_implicit(problem: &IrlSeProblem, r: &StateActionTable, tol: f64) -> Result<MembershipReport> {
    check_box(problem, r, tol)?;
    let m = problem.mdp();
    let opt = value_functions(m, r, problem.optimal())?;
    let mut violations = Vec::new();
    optimality_violations(problem, &opt.q, &opt.v, tol, &mut violations);
    for (i, expert) in problem.experts().iter().enumerate() {
        let v_i = policy_value(m, r, &expert.policy)?;
        for s in 0..problem.num_states() {
            let excess = gap_excess(expert.mode, opt.v[s] - v_i[s], expert.xi);
            if excess > tol {
                violations.push(Violation {
                    condition: Condition::ExpertGap { expert: i },
                    state: s,
                    action: None,
                    margin: excess,
                });
            }
        }
    }
    Ok(MembershipReport { violations })
}

/// Membership through the Q-level gap `Q^{pi_1}(s,a) <= V^{pi_i}(s) + xi_i`
/// for every pair. Only defined for upper-bound experts.
pub fn membership_q(problem: &IrlSeProblem, r: &StateActionTable, tol: f64) -> Result<MembershipReport> {
    check_box(problem, r, tol)?;
    if problem.experts().iter().any(|e| e.mode != ConstraintMode::Upper) {
        return Err(Error::UnsupportedMode("ge/eq in Q-level membership"));
    }
    let m = problem.mdp();
    let opt = value_functions(m, r, problem.optimal())?;
    let mut violations = Vec::new();
    optimality_violations(problem, &opt.q, &opt.v, tol, &mut violations);
    for (i, expert) in problem.experts().iter().enumerate() {
        let v_i = policy_value(m, r, &expert.policy)?;
        for s in 0..problem.num_states() {
            let worst = (0..problem.num_actions())
                .map(|a| opt.q[(s, a)] - v_i[s] - expert.xi)
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > tol {
                violations.push(Violation {
                    condition: Condition::ExpertGap { expert: i },
                    state: s,
                    action: None,
                    margin: worst,
                });
            }
        }
    }
    Ok(MembershipReport { violations })
}

/// `(zeta, V)` such that `r = -Bbar zeta + (E - gamma P) V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParams {
    pub zeta: StateActionTable,
    pub v: StateTable,
}

/// Reward produced from parameters, flagged when it leaves the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamReward {
    pub values: StateActionTable,
    pub within_box: bool,
}

/// `r = -Bbar^{pi_1} zeta + (E - gamma P) V`.
pub fn reward_from_params(problem: &IrlSeProblem, params: &CanonicalParams) -> Result<ParamReward> {
    let m = problem.mdp();
    m.check_state_action_table("zeta", &params.zeta)?;
    if params.v.len() != m.num_states() {
        return Err(Error::DimensionMismatch {
            what: "V",
            expected: m.num_states(),
            found: params.v.len(),
        });
    }
    if let Some(z) = params.zeta.iter().find(|&&z| z < 0.0) {
        return Err(Error::InvalidParameter {
            name: "zeta",
            reason: format!("entries must be non-negative, found {z}"),
        });
    }
    let shaping = expand_state(&params.v, m.num_actions()) - apply_transition(m, &params.v)? * m.discount();
    let values = shaping - mask_unsupported(problem.optimal(), &params.zeta);
    let within_box = values.iter().all(|&x| (0.0..=1.0).contains(&x));
    Ok(ParamReward { values, within_box })
}

/// Canonical witness of a member reward: `V = V^{pi_1}` and `zeta` the
/// negated advantage on actions the optimal expert never plays.
pub fn params_from_reward(problem: &IrlSeProblem, r: &StateActionTable, tol: f64) -> Result<CanonicalParams> {
    let report = membership_implicit(problem, r, tol)?;
    if !report.is_member() {
        return Err(Error::NotMember {
            violations: report.violations.len(),
        });
    }
    let opt = value_functions(problem.mdp(), r, problem.optimal())?;
    let zeta = mask_unsupported(problem.optimal(), &(-opt.advantage)).map(|z| z.max(0.0));
    Ok(CanonicalParams { zeta, v: opt.v })
}

/// Per-expert outcome of the linear constraints on `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertZetaCheck {
    pub expert: usize,
    pub mode: ConstraintMode,
    /// `y_i = d^{pi_i} pi_i Bbar^{pi_1} zeta`.
    pub load: StateTable,
    /// `xi_i - y_i`.
    pub slack: StateTable,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaCheck {
    pub experts: Vec<ExpertZetaCheck>,
}

impl ZetaCheck {
    pub fn satisfied(&self) -> bool {
        self.experts.iter().all(|e| e.satisfied)
    }

    /// Smallest slack across experts and states (`+inf` without experts).
    pub fn min_slack(&self) -> f64 {
        self.experts
            .iter()
            .flat_map(|e| e.slack.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Tests `d^{pi_i} pi_i Bbar^{pi_1} zeta` against `xi_i` for every expert,
/// according to its mode.
pub fn check_zeta_constraints(problem: &IrlSeProblem, zeta: &StateActionTable, tol: f64) -> Result<ZetaCheck> {
    let m = problem.mdp();
    m.check_state_action_table("zeta", zeta)?;
    let masked = mask_unsupported(problem.optimal(), zeta);
    let mut experts = Vec::with_capacity(problem.num_experts());
    for (i, e) in problem.experts().iter().enumerate() {
        let d = occupancy_matrix(m, &e.policy)?;
        let load = d * apply_policy(&e.policy, &masked)?;
        let slack = load.map(|y| e.xi - y);
        let satisfied = slack.iter().all(|&sl| match e.mode {
            ConstraintMode::Upper => sl >= -tol,
            ConstraintMode::Lower => sl <= tol,
            ConstraintMode::Exact => sl.abs() <= tol,
        });
        experts.push(ExpertZetaCheck {
            expert: i,
            mode: e.mode,
            load,
            slack,
            satisfied,
        });
    }
    Ok(ZetaCheck { experts })
}

/// Upper bounds on `zeta(s,a)` implied by the expert constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaCaps {
    /// `g(s,a) = min{k(s,a), 1/(1-gamma)}`.
    pub g: StateActionTable,
    /// Expert-induced cap, `+inf` where no expert constrains the pair.
    pub k: StateActionTable,
    /// Experts playing `a` in `s`, for pairs the optimal expert never plays.
    pub contributing: Vec<Vec<Vec<usize>>>,
}

/// Caps on `zeta` from the constraint rows of each expert. Terms whose
/// occupancy coefficient is zero impose nothing and are skipped.
pub fn zeta_caps(problem: &IrlSeProblem) -> Result<ZetaCaps> {
    let (s_count, a_count) = (problem.num_states(), problem.num_actions());
    let horizon = 1.0 / (1.0 - problem.discount());
    let occupancies = problem
        .experts()
        .iter()
        .map(|e| occupancy_matrix(problem.mdp(), &e.policy))
        .collect::<Result<Vec<_>>>()?;
    let mut k = DMatrix::from_element(s_count, a_count, f64::INFINITY);
    let mut contributing = vec![vec![Vec::new(); a_count]; s_count];
    for s in 0..s_count {
        for a in 0..a_count {
            if problem.optimal().supports(s, a) {
                continue;
            }
            for (i, e) in problem.experts().iter().enumerate() {
                let p = e.policy.prob(s, a);
                if p <= 0.0 {
                    continue;
                }
                contributing[s][a].push(i);
                for from in 0..s_count {
                    let visits = occupancies[i][(from, s)];
                    if visits > 0.0 {
                        k[(s, a)] = f64::min(k[(s, a)], e.xi / (visits * p));
                    }
                }
            }
        }
    }
    let g = k.map(|kk| kk.min(horizon));
    Ok(ZetaCaps { g, k, contributing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeBounds {
    /// Product of `1/(1-gamma)` over pairs the optimal expert never plays.
    pub single_agent: f64,
    /// Product of `g(s,a)` over the same pairs.
    pub multi_expert: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// Upper bounds on the volume of admissible `zeta` with and without the
/// sub-optimal experts.
pub fn volume_upper_bounds(problem: &IrlSeProblem) -> Result<VolumeBounds> {
    let caps = zeta_caps(problem)?;
    let horizon = 1.0 / (1.0 - problem.discount());
    let mut pairs = Vec::new();
    let (mut single_agent, mut multi_expert) = (1.0, 1.0);
    for s in 0..problem.num_states() {
        for a in 0..problem.num_actions() {
            if !problem.optimal().supports(s, a) {
                pairs.push((s, a));
                single_agent *= horizon;
                multi_expert *= caps.g[(s, a)];
            }
        }
    }
    Ok(VolumeBounds {
        single_agent,
        multi_expert,
        pairs,
    })
}

/// Origin of an inequality row of a [`RewardPolytope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    /// `r(s,a) <= 1`.
    BoxUpper { state: usize, action: usize },
    /// `-r(s,a) <= 0`.
    BoxLower { state: usize, action: usize },
    /// `Q(s,a) - V(s) <= 0` for an action the optimal expert never plays.
    Optimality { state: usize, action: usize },
    /// One half of `Q(s,a) = V(s)` for a played action of a stochastic
    /// optimal expert; `upper` selects the `<=` half.
    Equality { state: usize, action: usize, upper: bool },
    /// Value-gap row of expert `expert` at `state`; `upper` selects
    /// `gap <= xi` (otherwise `-gap <= -xi`).
    ExpertGap { expert: usize, state: usize, upper: bool },
}

impl RowLabel {
    pub fn is_box(&self) -> bool {
        matches!(self, RowLabel::BoxUpper { .. } | RowLabel::BoxLower { .. })
    }
}

/// Feasible reward set as linear inequalities over `vec(r)` (row-major
/// `s*A + a`).
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPolytope {
    num_states: usize,
    num_actions: usize,
    polytope: HPolytope,
    labels: Vec<RowLabel>,
    tol: f64,
}

impl RewardPolytope {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn h_rep(&self) -> &HPolytope {
        &self.polytope
    }

    pub fn labels(&self) -> &[RowLabel] {
        &self.labels
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Every row satisfied within the polytope's tolerance.
    pub fn contains(&self, r: &StateActionTable) -> bool {
        self.polytope.contains(&flatten(r), self.tol)
    }

    pub fn contains_with(&self, r: &StateActionTable, tol: f64) -> bool {
        self.polytope.contains(&flatten(r), tol)
    }

    /// Labels of rows violated by more than the tolerance.
    pub fn violated_rows(&self, r: &StateActionTable) -> Vec<(RowLabel, f64)> {
        let x = flatten(r);
        let lhs = self.polytope.matrix() * &x;
        (0..self.polytope.num_rows())
            .filter_map(|i| {
                let excess = lhs[i] - self.polytope.bounds()[i];
                (excess > self.tol).then_some((self.labels[i], excess))
            })
            .collect()
    }

    /// Drops rows that are implied by the others. Zero rows, rows implied by
    /// the box alone, and exact or positively scaled duplicates go first;
    /// each remaining non-box row is then tested with one LP against all
    /// rows still kept.
    pub fn reduced(&self) -> Result<RewardPolytope> {
        let a = self.polytope.matrix();
        let b = self.polytope.bounds();
        let m = a.nrows();
        let tol = self.tol;
        let mut keep = vec![true; m];

        for i in 0..m {
            if self.labels[i].is_box() {
                continue;
            }
            let row = a.row(i);
            let box_max: f64 = row.iter().map(|&c| c.max(0.0)).sum();
            if box_max <= b[i] + tol {
                keep[i] = false;
            }
        }

        // Scaled duplicates: keep the tightest normalised copy.
        let normalised: Vec<Option<(DVector<f64>, f64)>> = (0..m)
            .map(|i| {
                let scale = a.row(i).amax();
                (scale > 0.0).then(|| (a.row(i).transpose() / scale, b[i] / scale))
            })
            .collect();
        for i in 0..m {
            if !keep[i] || self.labels[i].is_box() {
                continue;
            }
            let Some((ri, bi)) = &normalised[i] else { continue };
            for j in 0..m {
                if i == j || !keep[j] {
                    continue;
                }
                if let Some((rj, bj)) = &normalised[j] {
                    let tighter = *bj < *bi - 1e-15 || (*bj <= *bi + 1e-15 && (j < i || self.labels[j].is_box()));
                    if tighter && (ri - rj).amax() <= 1e-12 {
                        keep[i] = false;
                        break;
                    }
                }
            }
        }

        for i in 0..m {
            if !keep[i] || self.labels[i].is_box() {
                continue;
            }
            let others: Vec<usize> = (0..m).filter(|&j| j != i && keep[j]).collect();
            let lp = LinearProgram::new(
                -a.row(i).transpose(),
                a.select_rows(others.iter()),
                b.select_rows(others.iter()),
            )?;
            if let LpOutcome::Optimal { value, .. } = lp_solve(&lp)? {
                if -value <= b[i] + tol {
                    keep[i] = false;
                }
            }
        }

        Ok(RewardPolytope {
            num_states: self.num_states,
            num_actions: self.num_actions,
            polytope: self.polytope.select_rows(|i| keep[i]),
            labels: (0..m).filter(|&i| keep[i]).map(|i| self.labels[i]).collect(),
            tol,
        })
    }
}

/// Linear inequalities describing the feasible set. Value functions are
/// linear in `r`, so each condition becomes a row built from the occupancy
/// matrices of the experts.
pub fn polytope_h_rep(problem: &IrlSeProblem, tol: f64) -> Result<RewardPolytope> {
    let m = problem.mdp();
    let (s_count, a_count) = (problem.num_states(), problem.num_actions());
    let dim = s_count * a_count;
    let gamma = m.discount();

    // V^{pi} = D^{pi} Pi x, as S x dim matrices.
    let value_map = |pi| -> Result<DMatrix<f64>> { Ok(occupancy_matrix(m, pi)? * policy_selector(pi)) };
    let v_opt = value_map(problem.optimal())?;
    // Q^{pi_1} = x + gamma P V^{pi_1}.
    let q_opt = DMatrix::<f64>::identity(dim, dim) + m.kernel() * &v_opt * gamma;

    let mut rows: Vec<(DVector<f64>, f64, RowLabel)> = Vec::new();
    for s in 0..s_count {
        for a in 0..a_count {
            let idx = s * a_count + a;
            let mut e = DVector::zeros(dim);
            e[idx] = 1.0;
            rows.push((e.clone(), 1.0, RowLabel::BoxUpper { state: s, action: a }));
            rows.push((-e, 0.0, RowLabel::BoxLower { state: s, action: a }));
        }
    }
    let deterministic = problem.optimal().is_deterministic();
    for s in 0..s_count {
        for a in 0..a_count {
            let adv = (q_opt.row(s * a_count + a) - v_opt.row(s)).transpose();
            if !problem.optimal().supports(s, a) {
                rows.push((adv, 0.0, RowLabel::Optimality { state: s, action: a }));
            } else if !deterministic {
                rows.push((adv.clone(), 0.0, RowLabel::Equality { state: s, action: a, upper: true }));
                rows.push((-adv, 0.0, RowLabel::Equality { state: s, action: a, upper: false }));
            }
        }
    }
    for (i, e) in problem.experts().iter().enumerate() {
        let gap = &v_opt - value_map(&e.policy)?;
        for s in 0..s_count {
            let g = gap.row(s).transpose();
            if matches!(e.mode, ConstraintMode::Upper | ConstraintMode::Exact) {
                rows.push((g.clone(), e.xi, RowLabel::ExpertGap { expert: i, state: s, upper: true }));
            }
            if matches!(e.mode, ConstraintMode::Lower | ConstraintMode::Exact) {
                rows.push((-g, -e.xi, RowLabel::ExpertGap { expert: i, state: s, upper: false }));
            }
        }
    }

    let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    Ok(RewardPolytope {
        num_states: s_count,
        num_actions: a_count,
        polytope: HPolytope::new(a, b)?,
        labels: rows.into_iter().map(|r| r.2).collect(),
        tol,
    })
}

/// Reward table from its row-major flattening.
pub fn reward_from_flat(problem: &IrlSeProblem, x: &DVector<f64>) -> StateActionTable {
    unflatten(x, problem.num_states(), problem.num_actions())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::example_fig1;
    use crate::mdp::{MdpNoReward, Policy};
    use crate::problem::ExpertSpec;
    use approx::assert_abs_diff_eq;

    fn fig1_reward(r00: f64, r01: f64) -> StateActionTable {
        DMatrix::from_row_slice(2, 2, &[r00, r01, 0.0, 0.0])
    }

    #[test]
    fn example_two_memberships() {
        let p = example_fig1(0.9, 0.5).unwrap();
        assert!(membership_implicit(&p, &fig1_reward(1.0, 0.6), DEFAULT_TOL).unwrap().is_member());

        let report = membership_implicit(&p, &fig1_reward(1.0, 0.0), DEFAULT_TOL).unwrap();
        assert!(!report.is_member());
        assert!(report
            .violations
            .iter()
            .all(|v| v.condition == Condition::ExpertGap { expert: 0 }));
        assert_eq!(report.violations[0].state, 0);
        assert_abs_diff_eq!(report.violations[0].margin, 0.5, epsilon = 1e-12);

        let report = membership_q(&p, &fig1_reward(0.2, 0.6), DEFAULT_TOL).unwrap();
        assert!(!report.is_member());
        assert!(report.violations.iter().any(|v| v.condition == Condition::Optimality));
        assert!(membership_q(&p, &DMatrix::zeros(2, 2), DEFAULT_TOL).unwrap().is_member());
    }

    #[test]
    fn constant_rewards_are_members() {
        let p = example_fig1(0.9, 0.05).unwrap();
        for c in [0.0, 0.3, 1.0] {
            let r = DMatrix::from_element(2, 2, c);
            assert!(membership_implicit(&p, &r, DEFAULT_TOL).unwrap().is_member());
            assert!(membership_q(&p, &r, DEFAULT_TOL).unwrap().is_member());
        }
    }

    #[test]
    fn out_of_box_rewards_are_rejected() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let err = membership_implicit(&p, &fig1_reward(1.1, 0.0), DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::RewardOutOfBox { state: 0, action: 0, .. }));
    }

    #[test]
    fn params_round_trip_on_fig1() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let params = CanonicalParams {
            zeta: DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.0, 0.0]),
            v: DVector::from_vec(vec![1.0, 0.0]),
        };
        let r = reward_from_params(&p, &params).unwrap();
        assert!(r.within_box);
        assert_abs_diff_eq!(r.values[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[(0, 1)], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[(1, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[(1, 1)], 0.0, epsilon = 1e-12);
        assert!(membership_implicit(&p, &r.values, DEFAULT_TOL).unwrap().is_member());

        let back = params_from_reward(&p, &r.values, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(back.zeta[(0, 1)], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(back.v[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trivial_params() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let zero = CanonicalParams {
            zeta: DMatrix::zeros(2, 2),
            v: DVector::zeros(2),
        };
        assert!(reward_from_params(&p, &zero).unwrap().values.iter().all(|&x| x == 0.0));
        let shaped = CanonicalParams {
            zeta: DMatrix::zeros(2, 2),
            v: DVector::from_element(2, 2.0),
        };
        for x in reward_from_params(&p, &shaped).unwrap().values.iter() {
            assert_abs_diff_eq!(*x, 0.2, epsilon = 1e-12);
        }
        let outside = CanonicalParams {
            zeta: DMatrix::zeros(2, 2),
            v: DVector::from_element(2, 20.0),
        };
        assert!(!reward_from_params(&p, &outside).unwrap().within_box);

        let r1 = DMatrix::from_element(2, 2, 1.0);
        let params = params_from_reward(&p, &r1, DEFAULT_TOL).unwrap();
        assert!(params.zeta.iter().all(|&z| z == 0.0));
        assert!(params.v.iter().all(|&v| (v - 10.0).abs() < 1e-9));

        let err = params_from_reward(&p, &fig1_reward(1.0, 0.0), DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::NotMember { .. }));
    }

    #[test]
    fn zeta_constraints_on_fig1() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let zero = check_zeta_constraints(&p, &DMatrix::zeros(2, 2), DEFAULT_TOL).unwrap();
        assert!(zero.satisfied());
        assert!(zero.experts[0].slack.iter().all(|&s| s == 0.5));

        // The only active coordinate is zeta(S0, A2): load at S0 equals it.
        for (z, ok) in [(0.49, true), (0.5, true), (0.51, false)] {
            let zeta = DMatrix::from_row_slice(2, 2, &[0.0, z, 0.0, 0.0]);
            let check = check_zeta_constraints(&p, &zeta, DEFAULT_TOL).unwrap();
            assert_eq!(check.satisfied(), ok, "zeta = {z}");
            assert_abs_diff_eq!(check.experts[0].load[0], z, epsilon = 1e-12);
            assert_abs_diff_eq!(check.experts[0].load[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_mode_with_zero_zeta_is_violated() {
        let base = example_fig1(0.9, 0.5).unwrap();
        let mut experts = base.experts().to_vec();
        experts[0].mode = ConstraintMode::Exact;
        let p = IrlSeProblem::new(base.mdp().clone(), base.optimal().clone(), experts).unwrap();
        assert!(!check_zeta_constraints(&p, &DMatrix::zeros(2, 2), DEFAULT_TOL).unwrap().satisfied());
    }

    #[test]
    fn caps_and_volumes_on_fig1() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let caps = zeta_caps(&p).unwrap();
        assert_abs_diff_eq!(caps.k[(0, 1)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(caps.g[(0, 1)], 0.5, epsilon = 1e-12);
        assert!(caps.k[(1, 1)].is_infinite());
        assert_abs_diff_eq!(caps.g[(1, 1)], 10.0, epsilon = 1e-12);
        assert_eq!(caps.contributing[0][1], vec![0]);

        let vol = volume_upper_bounds(&p).unwrap();
        assert_eq!(vol.pairs, vec![(0, 1), (1, 1)]);
        assert_abs_diff_eq!(vol.single_agent, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(vol.multi_expert, 5.0, epsilon = 1e-9);

        let single = volume_upper_bounds(&p.single_agent()).unwrap();
        assert_eq!(single.single_agent, single.multi_expert);

        let saturated = example_fig1(0.9, 25.0).unwrap();
        let vol = volume_upper_bounds(&saturated).unwrap();
        assert_abs_diff_eq!(vol.single_agent, vol.multi_expert, epsilon = 1e-9);
    }

    #[test]
    fn identical_expert_leaves_caps_at_horizon() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let same = ExpertSpec::upper(p.optimal().clone(), 0.1).unwrap();
        let q = IrlSeProblem::new(p.mdp().clone(), p.optimal().clone(), vec![same]).unwrap();
        let caps = zeta_caps(&q).unwrap();
        assert!(caps.g.iter().all(|&g| (g - 10.0).abs() < 1e-12));
    }

    #[test]
    fn deterministic_disagreement_caps() {
        // Example 3: deterministic experts disagreeing at a pair whose state
        // is only visited once from itself (absorbing elsewhere).
        let m = MdpNoReward::from_nested(
            &[
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            0.5,
        )
        .unwrap();
        let opt = Policy::deterministic(2, &[0, 0]).unwrap();
        for xi in [0.3, 5.0] {
            let e = ExpertSpec::upper(Policy::deterministic(2, &[1, 0]).unwrap(), xi).unwrap();
            let p = IrlSeProblem::new(m.clone(), opt.clone(), vec![e]).unwrap();
            let caps = zeta_caps(&p).unwrap();
            assert_abs_diff_eq!(caps.g[(0, 1)], f64::min(xi, 2.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn polytope_on_fig1_reduces_to_gap_band() {
        let xi = 0.5;
        let p = example_fig1(0.9, xi).unwrap();
        let poly = polytope_h_rep(&p, DEFAULT_TOL).unwrap().reduced().unwrap();
        let non_box: Vec<(DVector<f64>, f64, RowLabel)> = (0..poly.h_rep().num_rows())
            .filter(|&i| !poly.labels()[i].is_box())
            .map(|i| {
                let row = poly.h_rep().matrix().row(i).transpose();
                let scale = row.amax();
                (row / scale, poly.h_rep().bounds()[i] / scale, poly.labels()[i])
            })
            .collect();
        // S0 rows: r00 - r01 <= xi and r01 - r00 <= 0; S1 optimality: r11 - r10 <= 0.
        let on_s0: Vec<_> = non_box.iter().filter(|(r, _, _)| r[2] == 0.0 && r[3] == 0.0).collect();
        assert_eq!(on_s0.len(), 2);
        let mut found_upper = false;
        let mut found_lower = false;
        for (row, b, _) in on_s0 {
            if (row[0] - 1.0).abs() < 1e-12 && (row[1] + 1.0).abs() < 1e-12 {
                assert_abs_diff_eq!(*b, xi, epsilon = 1e-12);
                found_upper = true;
            }
            if (row[0] + 1.0).abs() < 1e-12 && (row[1] - 1.0).abs() < 1e-12 {
                assert_abs_diff_eq!(*b, 0.0, epsilon = 1e-12);
                found_lower = true;
            }
        }
        assert!(found_upper && found_lower);
    }

    #[test]
    fn single_state_polytope_is_argmax_cone() {
        let m = MdpNoReward::from_nested(&[vec![vec![1.0], vec![1.0], vec![1.0]]], 0.7).unwrap();
        let opt = Policy::deterministic(3, &[1]).unwrap();
        let p = IrlSeProblem::new(m, opt, vec![]).unwrap();
        let poly = polytope_h_rep(&p, DEFAULT_TOL).unwrap();
        for (r, member) in [
            ([0.2, 0.9, 0.9], true),
            ([0.2, 0.9, 0.1], true),
            ([0.95, 0.9, 0.1], false),
            ([0.2, 0.5, 0.6], false),
        ] {
            let table = DMatrix::from_row_slice(1, 3, &r);
            assert_eq!(poly.contains(&table), member, "{r:?}");
            assert_eq!(membership_implicit(&p, &table, DEFAULT_TOL).unwrap().is_member(), member);
        }
        let reduced = poly.reduced().unwrap();
        assert_eq!(reduced.labels().iter().filter(|l| !l.is_box()).count(), 2);
    }
}
