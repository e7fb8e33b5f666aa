//! Tabular environments without a reward, policies, and the linear operators
//! built on top of them.
//!
//! Tables are dense `nalgebra` matrices. A state-action table has one row per
//! state and one column per action. The transition kernel is stored as an
//! `(S*A) x S` matrix whose row `s*A + a` is `p(.|s,a)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real table indexed by state.
pub type StateTable = DVector<f64>;
/// Real table indexed by (state, action), shape `S x A`.
pub type StateActionTable = DMatrix<f64>;

/// Tolerance on the row sums of stochastic tables.
pub const SIMPLEX_TOL: f64 = 1e-12;

fn check_row(what: &str, row: String, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDistribution {
                what: what.to_string(),
                row,
                reason: format!("entry {v} is negative or not finite"),
            });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            row,
            reason: format!("entries sum to {sum}"),
        });
    }
    Ok(())
}

/// Markov decision process without a reward function.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpNoReward {
    num_states: usize,
    num_actions: usize,
    transition: DMatrix<f64>,
    discount: f64,
}

impl MdpNoReward {
    /// Builds an environment from an `(S*A) x S` kernel.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: DMatrix<f64>,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::InvalidParameter {
                name: "num_states",
                reason: "must be positive".into(),
            });
        }
        if num_actions == 0 {
            return Err(Error::InvalidParameter {
                name: "num_actions",
                reason: "must be positive".into(),
            });
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidDiscount(discount));
        }
        if transition.nrows() != num_states * num_actions {
            return Err(Error::DimensionMismatch {
                what: "transition rows",
                expected: num_states * num_actions,
                found: transition.nrows(),
            });
        }
        if transition.ncols() != num_states {
            return Err(Error::DimensionMismatch {
                what: "transition columns",
                expected: num_states,
                found: transition.ncols(),
            });
        }
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = transition.row(s * num_actions + a);
                check_row("transition", format!("[{s}][{a}]"), row.iter().copied())?;
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            transition,
            discount,
        })
    }

    /// Builds an environment from a nested `p[s][a][s']` table.
    pub fn from_nested(transition: &[Vec<Vec<f64>>], discount: f64) -> Result<Self> {
        let num_states = transition.len();
        let num_actions = transition.first().map_or(0, Vec::len);
        let mut kernel = DMatrix::zeros(num_states * num_actions, num_states);
        for (s, per_action) in transition.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(Error::DimensionMismatch {
                    what: "actions per state",
                    expected: num_actions,
                    found: per_action.len(),
                });
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != num_states {
                    return Err(Error::DimensionMismatch {
                        what: "successor states",
                        expected: num_states,
                        found: row.len(),
                    });
                }
                for (next, &p) in row.iter().enumerate() {
                    kernel[(s * num_actions + a, next)] = p;
                }
            }
        }
        Self::new(num_states, num_actions, kernel, discount)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// The `(S*A) x S` kernel.
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.transition[(state * self.num_actions + action, next)]
    }

    /// `p(.|s,a)` as an owned vector.
    pub fn next_state_distribution(&self, state: usize, action: usize) -> Vec<f64> {
        self.transition
            .row(state * self.num_actions + action)
            .iter()
            .copied()
            .collect()
    }

    /// Nested `p[s][a][s']` copy of the kernel.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| self.next_state_distribution(s, a))
                    .collect()
            })
            .collect()
    }

    /// Same dynamics under a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.transition.clone(),
            discount,
        )
    }

    pub(crate) fn check_state_action_table(&self, what: &'static str, g: &StateActionTable) -> Result<()> {
        if g.nrows() != self.num_states {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.num_states,
                found: g.nrows(),
            });
        }
        if g.ncols() != self.num_actions {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.num_actions,
                found: g.ncols(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_policy(&self, pi: &Policy) -> Result<()> {
        self.check_state_action_table("policy", pi.probs())
    }
}

/// Stationary stochastic policy `pi[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        for s in 0..probs.nrows() {
            check_row("policy", format!("[{s}]"), probs.row(s).iter().copied())?;
        }
        Ok(Self { probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != num_actions) {
            return Err(Error::DimensionMismatch {
                what: "policy actions",
                expected: num_actions,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), num_actions, |s, a| rows[s][a]))
    }

    /// Point mass on `actions[s]` in every state.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = DMatrix::zeros(actions.len(), num_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::IndexOutOfRange {
                    what: "action",
                    index: a,
                    bound: num_actions,
                });
            }
            probs[(s, a)] = 1.0;
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: DMatrix::from_element(num_states, num_actions, 1.0 / num_actions as f64),
        }
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[(state, action)]
    }

    pub fn num_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn supports(&self, state: usize, action: usize) -> bool {
        self.probs[(state, action)] > 0.0
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// Reward with every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFunction {
    values: StateActionTable,
}

impl RewardFunction {
    pub fn new(values: StateActionTable) -> Result<Self> {
        for s in 0..values.nrows() {
            for a in 0..values.ncols() {
                let v = values[(s, a)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::RewardOutOfBox {
                        state: s,
                        action: a,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn constant(num_states: usize, num_actions: usize, c: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(num_states, num_actions, c))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != num_actions) {
            return Err(Error::DimensionMismatch {
                what: "reward actions",
                expected: num_actions,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), num_actions, |s, a| rows[s][a]))
    }

    pub fn values(&self) -> &StateActionTable {
        &self.values
    }

    pub fn into_values(self) -> StateActionTable {
        self.values
    }
}

/// Flattens a state-action table in row-major `s*A + a` order.
pub fn flatten(g: &StateActionTable) -> DVector<f64> {
    let (rows, cols) = g.shape();
    DVector::from_fn(rows * cols, |i, _| g[(i / cols, i % cols)])
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &DVector<f64>, num_states: usize, num_actions: usize) -> StateActionTable {
    DMatrix::from_fn(num_states, num_actions, |s, a| v[s * num_actions + a])
}

/// `(P f)(s,a) = sum_{s'} p(s'|s,a) f(s')`.
pub fn apply_transition(m: &MdpNoReward, f: &StateTable) -> Result<StateActionTable> {
    if f.len() != m.num_states {
        return Err(Error::DimensionMismatch {
            what: "state table",
            expected: m.num_states,
            found: f.len(),
        });
    }
    let flat = &m.transition * f;
    Ok(unflatten(&flat, m.num_states, m.num_actions))
}

/// `(pi g)(s) = sum_a pi(a|s) g(s,a)`.
pub fn apply_policy(pi: &Policy, g: &StateActionTable) -> Result<StateTable> {
    if g.shape() != pi.probs.shape() {
        return Err(Error::DimensionMismatch {
            what: "state-action table",
            expected: pi.probs.len(),
            found: g.len(),
        });
    }
    Ok(pi.probs.component_mul(g).column_sum())
}

/// `(E f)(s,a) = f(s)`.
pub fn expand_state(f: &StateTable, num_actions: usize) -> StateActionTable {
    DMatrix::from_fn(f.len(), num_actions, |s, _| f[s])
}

/// Keeps `g(s,a)` where `pi(a|s) = 0` and zeroes the rest. The zero test is
/// exact on the stored probabilities.
pub fn mask_unsupported(pi: &Policy, g: &StateActionTable) -> StateActionTable {
    g.zip_map(&pi.probs, |v, p| if p == 0.0 { v } else { 0.0 })
}

/// Keeps `g(s,a)` where `pi(a|s) > 0`.
pub fn mask_supported(pi: &Policy, g: &StateActionTable) -> StateActionTable {
    g.zip_map(&pi.probs, |v, p| if p > 0.0 { v } else { 0.0 })
}

/// State-to-state kernel `pi P` induced by a policy.
pub fn policy_kernel(m: &MdpNoReward, pi: &Policy) -> Result<DMatrix<f64>> {
    m.check_policy(pi)?;
    let (s_count, a_count) = (m.num_states, m.num_actions);
    let mut out = DMatrix::zeros(s_count, s_count);
    for s in 0..s_count {
        for a in 0..a_count {
            let w = pi.probs[(s, a)];
            if w != 0.0 {
                let row = m.transition.row(s * a_count + a);
                for next in 0..s_count {
                    out[(s, next)] += w * row[next];
                }
            }
        }
    }
    Ok(out)
}

/// Matrix selecting `pi g` from a flattened `g`: shape `S x (S*A)`.
pub fn policy_selector(pi: &Policy) -> DMatrix<f64> {
    let (s_count, a_count) = pi.probs.shape();
    let mut out = DMatrix::zeros(s_count, s_count * a_count);
    for s in 0..s_count {
        for a in 0..a_count {
            out[(s, s * a_count + a)] = pi.probs[(s, a)];
        }
    }
    out
}

fn resolvent_system(m: &MdpNoReward, pi: &Policy) -> Result<DMatrix<f64>> {
    let kernel = policy_kernel(m, pi)?;
    Ok(DMatrix::identity(m.num_states, m.num_states) - kernel * m.discount)
}

/// Discounted occupancy matrix `D = (I - gamma pi P)^{-1}`. Entry `[s'][s]`
/// is the expected discounted number of visits to `s` starting from `s'`.
pub fn occupancy_matrix(m: &MdpNoReward, pi: &Policy) -> Result<DMatrix<f64>> {
    let system = resolvent_system(m, pi)?;
    system
        .lu()
        .solve(&DMatrix::identity(m.num_states, m.num_states))
        .ok_or_else(|| Error::Numeric("occupancy system is singular".into()))
}

/// `V^pi = (I - gamma pi P)^{-1} (pi r)`.
pub fn policy_value(m: &MdpNoReward, r: &StateActionTable, pi: &Policy) -> Result<StateTable> {
    m.check_state_action_table("reward", r)?;
    m.check_policy(pi)?;
    let system = resolvent_system(m, pi)?;
    let immediate = apply_policy(pi, r)?;
    system
        .lu()
        .solve(&immediate)
        .ok_or_else(|| Error::Numeric("policy evaluation system is singular".into()))
}

/// Q, V and advantage of a policy under a reward.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    pub q: StateActionTable,
    pub v: StateTable,
    pub advantage: StateActionTable,
}

/// Computes `V = (I - gamma pi P)^{-1} pi r`, `Q = r + gamma P V` and
/// `Adv = Q - E V`.
pub fn value_functions(m: &MdpNoReward, r: &StateActionTable, pi: &Policy) -> Result<ValueFunctions> {
    let v = policy_value(m, r, pi)?;
    let q = r + apply_transition(m, &v)? * m.discount;
    let advantage = &q - expand_state(&v, m.num_actions);
    Ok(ValueFunctions { q, v, advantage })
}
