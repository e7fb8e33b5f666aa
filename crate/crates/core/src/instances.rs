//! Illustrative and lower-bound problem families, plus seeded random
//! problems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpNoReward, Policy};
use crate::problem::{ConstraintMode, ExpertSpec, IrlSeProblem};

/// A generator together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceSpec {
    Fig1 {
        gamma: f64,
        xi: f64,
    },
    LbChain {
        s_bar: usize,
        num_actions: usize,
        gamma: f64,
        eps: f64,
        /// `(j, k)`: action `k` at chain state `j` is perturbed.
        variant: Option<(usize, usize)>,
    },
    LbTree {
        s_bar: usize,
        num_actions: usize,
        gamma: f64,
        eps: f64,
        signs: Vec<i8>,
    },
    LbSubopt {
        s_bar: usize,
        gamma: f64,
        xi: f64,
        pi_min: f64,
        alpha: f64,
        variant_state: Option<usize>,
    },
    Random {
        num_states: usize,
        num_actions: usize,
        num_experts: usize,
        gamma: f64,
        seed: u64,
        xi_range: (f64, f64),
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<IrlSeProblem> {
        match self {
            InstanceSpec::Fig1 { gamma, xi } => example_fig1(*gamma, *xi),
            InstanceSpec::LbChain {
                s_bar,
                num_actions,
                gamma,
                eps,
                variant,
            } => lb_chain(*s_bar, *num_actions, *gamma, *eps, *variant),
            InstanceSpec::LbTree {
                s_bar,
                num_actions,
                gamma,
                eps,
                signs,
            } => lb_tree(*s_bar, *num_actions, *gamma, *eps, signs),
            InstanceSpec::LbSubopt {
                s_bar,
                gamma,
                xi,
                pi_min,
                alpha,
                variant_state,
            } => lb_subopt(*s_bar, *gamma, *xi, *pi_min, *alpha, *variant_state),
            InstanceSpec::Random {
                num_states,
                num_actions,
                num_experts,
                gamma,
                seed,
                xi_range,
            } => random_problem(*num_states, *num_actions, *num_experts, *gamma, *seed, *xi_range),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            InstanceSpec::Fig1 { .. } => "fig1",
            InstanceSpec::LbChain { .. } => "lb_chain",
            InstanceSpec::LbTree { .. } => "lb_tree",
            InstanceSpec::LbSubopt { .. } => "lb_subopt",
            InstanceSpec::Random { .. } => "random",
        }
    }
}

/// Row normalisation used by [`lb_tree`] for perturbed actions.
pub const LB_TREE_NORMALISATION: &str = "p(s'_i|s_j,a_k) = (1 + eps * v_i) / s_bar for k >= 2";

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn kernel(num_states: usize, num_actions: usize) -> DMatrix<f64> {
    DMatrix::zeros(num_states * num_actions, num_states)
}

/// Two states `S0`, `S1`. Both actions in `S0` lead to `S1`, which loops on
/// itself. The optimal expert plays `A1` everywhere; the sub-optimal one
/// plays `A2` in `S0` and agrees with the optimal expert in `S1`.
pub fn example_fig1(gamma: f64, xi: f64) -> Result<IrlSeProblem> {
    let mdp = MdpNoReward::from_nested(
        &[
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        ],
        gamma,
    )?;
    let optimal = Policy::deterministic(2, &[0, 0])?;
    let expert = ExpertSpec::upper(Policy::deterministic(2, &[1, 0])?, xi)?;
    IrlSeProblem::new(mdp, optimal, vec![expert])
}

fn check_eps(eps: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { eps >= 0.0 } else { eps > 0.0 };
    if !(ok && eps <= 0.5) {
        return Err(invalid("eps", format!("must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

/// Root, chain states `s_1..s_{s_bar}`, and absorbing `s_-`, `s_+` (indices
/// `0`, `1..=s_bar`, `s_bar+1`, `s_bar+2`). Every action of the root leads
/// uniformly to the chain states; each chain action splits evenly between
/// `s_-` and `s_+`, except the variant `(j, k)` (1-based `j`, 0-based `k`)
/// which reaches `s_+` with probability `1/2 + eps`. All experts play the
/// first action. One sub-optimal expert equal to the optimal one is
/// attached so that the problem has `n = 1`; its constraint is vacuous.
pub fn lb_chain(
    s_bar: usize,
    num_actions: usize,
    gamma: f64,
    eps: f64,
    variant: Option<(usize, usize)>,
) -> Result<IrlSeProblem> {
    if s_bar == 0 || num_actions == 0 {
        return Err(invalid("s_bar", "need at least one chain state and one action"));
    }
    check_eps(eps, true)?;
    if let Some((j, k)) = variant {
        if !(1..=s_bar).contains(&j) || k >= num_actions {
            return Err(invalid("variant", format!("({j}, {k}) outside 1..={s_bar} x 0..{num_actions}")));
        }
    }
    let s_count = s_bar + 3;
    let (minus, plus) = (s_bar + 1, s_bar + 2);
    let mut p = kernel(s_count, num_actions);
    for a in 0..num_actions {
        for j in 1..=s_bar {
            p[(a, j)] = 1.0 / s_bar as f64;
        }
        for j in 1..=s_bar {
            let up = if variant == Some((j, a)) { 0.5 + eps } else { 0.5 };
            p[(j * num_actions + a, plus)] = up;
            p[(j * num_actions + a, minus)] = 1.0 - up;
        }
        p[(minus * num_actions + a, minus)] = 1.0;
        p[(plus * num_actions + a, plus)] = 1.0;
    }
    let mdp = MdpNoReward::new(s_count, num_actions, p, gamma)?;
    let optimal = Policy::deterministic(num_actions, &vec![0; s_count])?;
    let mirror = ExpertSpec::upper(optimal.clone(), 1.0)?;
    IrlSeProblem::new(mdp, optimal, vec![mirror])
}

/// Root, `s_1..s_{s_bar}` and absorbing `s'_1..s'_{s_bar}` (indices `0`,
/// `1..=s_bar`, `s_bar+1..=2 s_bar`). The root leads uniformly to the `s_j`.
/// From `s_j`, the first action is uniform over the `s'_i` and every other
/// action reaches `s'_i` with probability `(1 + eps v_i) / s_bar`. The signs
/// must be `+-1` and sum to zero. As in [`lb_chain`], a vacuous sub-optimal
/// expert is attached.
pub fn lb_tree(s_bar: usize, num_actions: usize, gamma: f64, eps: f64, signs: &[i8]) -> Result<IrlSeProblem> {
    if s_bar == 0 || !s_bar.is_multiple_of(2) {
        return Err(invalid("s_bar", format!("must be positive and even, got {s_bar}")));
    }
    if num_actions == 0 {
        return Err(invalid("num_actions", "need at least one action"));
    }
    check_eps(eps, false)?;
    if signs.len() != s_bar {
        return Err(Error::DimensionMismatch {
            what: "sign vector",
            expected: s_bar,
            found: signs.len(),
        });
    }
    if signs.iter().any(|&v| v != 1 && v != -1) {
        return Err(invalid("signs", "entries must be +1 or -1"));
    }
    if signs.iter().map(|&v| v as i64).sum::<i64>() != 0 {
        return Err(invalid("signs", "entries must sum to zero"));
    }
    let s_count = 2 * s_bar + 1;
    let mut p = kernel(s_count, num_actions);
    let share = 1.0 / s_bar as f64;
    for a in 0..num_actions {
        for j in 1..=s_bar {
            p[(a, j)] = share;
        }
        for j in 1..=s_bar {
            for (i, &v) in signs.iter().enumerate() {
                let weight = if a == 0 { share } else { (1.0 + eps * v as f64) * share };
                p[(j * num_actions + a, s_bar + 1 + i)] = weight;
            }
        }
        for i in 0..s_bar {
            let s = s_bar + 1 + i;
            p[(s * num_actions + a, s)] = 1.0;
        }
    }
    let mdp = MdpNoReward::new(s_count, num_actions, p, gamma)?;
    let optimal = Policy::deterministic(num_actions, &vec![0; s_count])?;
    let mirror = ExpertSpec::upper(optimal.clone(), 1.0)?;
    IrlSeProblem::new(mdp, optimal, vec![mirror])
}

/// Root, `s_1..s_{s_bar}` and an absorbing sink, two actions. The root leads
/// uniformly to the `s_j` and every `s_j` leads to the sink. The optimal
/// expert plays `a_1`; the sub-optimal one plays `a_2` with probability
/// `pi_min` in every `s_j` (`alpha * pi_min` in the 1-based variant state)
/// and `a_1` at the root and the sink.
pub fn lb_subopt(
    s_bar: usize,
    gamma: f64,
    xi: f64,
    pi_min: f64,
    alpha: f64,
    variant_state: Option<usize>,
) -> Result<IrlSeProblem> {
    if s_bar == 0 {
        return Err(invalid("s_bar", "need at least one middle state"));
    }
    if !(pi_min > 0.0 && pi_min < 1.0) {
        return Err(invalid("pi_min", format!("must lie in (0, 1), got {pi_min}")));
    }
    if !(alpha > 1.0 && alpha * pi_min < 1.0) {
        return Err(invalid("alpha", format!("need alpha > 1 and alpha * pi_min < 1, got alpha = {alpha}")));
    }
    if let Some(j) = variant_state {
        if !(1..=s_bar).contains(&j) {
            return Err(Error::IndexOutOfRange {
                what: "variant state",
                index: j,
                bound: s_bar + 1,
            });
        }
    }
    let s_count = s_bar + 2;
    let sink = s_bar + 1;
    let mut p = kernel(s_count, 2);
    for a in 0..2 {
        for j in 1..=s_bar {
            p[(a, j)] = 1.0 / s_bar as f64;
            p[(j * 2 + a, sink)] = 1.0;
        }
        p[(sink * 2 + a, sink)] = 1.0;
    }
    let mdp = MdpNoReward::new(s_count, 2, p, gamma)?;
    let optimal = Policy::deterministic(2, &vec![0; s_count])?;
    let mut rows = vec![vec![1.0, 0.0]; s_count];
    for (j, row) in rows.iter_mut().enumerate().take(s_bar + 1).skip(1) {
        let q = if variant_state == Some(j) { alpha * pi_min } else { pi_min };
        *row = vec![1.0 - q, q];
    }
    let expert = ExpertSpec::upper(Policy::from_rows(&rows)?, xi)?;
    IrlSeProblem::new(mdp, optimal, vec![expert])
}

/// Symmetric Dirichlet(1) draw: normalised unit exponentials.
fn dirichlet_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Random problem with Dirichlet(1) transition rows, a uniformly random
/// deterministic optimal policy, Dirichlet(1) sub-optimal policies and
/// `xi_i` uniform in `xi_range`.
pub fn random_problem(
    num_states: usize,
    num_actions: usize,
    num_experts: usize,
    gamma: f64,
    seed: u64,
    xi_range: (f64, f64),
) -> Result<IrlSeProblem> {
    if num_states < 2 || num_actions < 2 {
        return Err(invalid("num_states", "random problems need S >= 2 and A >= 2"));
    }
    let (lo, hi) = xi_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(invalid("xi_range", format!("need 0 < lo <= hi, got ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = kernel(num_states, num_actions);
    for row in 0..num_states * num_actions {
        for (col, x) in dirichlet_row(&mut rng, num_states).into_iter().enumerate() {
            p[(row, col)] = x;
        }
    }
    let mdp = MdpNoReward::new(num_states, num_actions, p, gamma)?;
    let actions: Vec<usize> = (0..num_states).map(|_| rng.random_range(0..num_actions)).collect();
    let optimal = Policy::deterministic(num_actions, &actions)?;
    let mut experts = Vec::with_capacity(num_experts);
    for _ in 0..num_experts {
        let rows: Vec<Vec<f64>> = (0..num_states).map(|_| dirichlet_row(&mut rng, num_actions)).collect();
        let xi = if lo == hi { lo } else { rng.random_range(lo..hi) };
        experts.push(ExpertSpec::new(Policy::from_rows(&rows)?, xi, ConstraintMode::Upper)?);
    }
    IrlSeProblem::new(mdp, optimal, experts)
}
