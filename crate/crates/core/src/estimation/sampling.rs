use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpNoReward, Policy};
use crate::problem::{ExpertSpec, IrlSeProblem};

/// Plug-in problem built from sample counts.
pub type EmpiricalProblem = IrlSeProblem;

/// Cumulative distribution whose last positive entry is pinned to exactly 1
/// so every uniform draw in `[0, 1)` resolves to a supported index.
fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let mut last = cdf.len() - 1;
    while last > 0 && cdf[last] == cdf[last - 1] {
        last -= 1;
    }
    for c in &mut cdf[last..] {
        *c = 1.0;
    }
    cdf
}

fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// One query answer: the next state and one action per expert, the optimal
/// expert first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub next_state: usize,
    pub actions: Vec<usize>,
}

/// Seeded generative model of a problem. Each query consumes exactly
/// `n + 2` words of the stream (one per draw).
#[derive(Debug, Clone)]
pub struct GenerativeModel {
    truth: IrlSeProblem,
    seed: u64,
    rng: ChaCha8Rng,
    transition_cdfs: Vec<Vec<f64>>,
    /// Indexed by expert (optimal first), then state.
    policy_cdfs: Vec<Vec<Vec<f64>>>,
    draws: u64,
}

impl GenerativeModel {
    pub fn new(truth: IrlSeProblem, seed: u64) -> Self {
        let m = truth.mdp();
        let transition_cdfs = (0..m.num_states() * m.num_actions())
            .map(|row| cumulative(m.kernel().row(row).iter().copied()))
            .collect();
        let policy_rows = |pi: &Policy| -> Vec<Vec<f64>> {
            (0..pi.num_states())
                .map(|s| cumulative(pi.probs().row(s).iter().copied()))
                .collect()
        };
        let policy_cdfs = std::iter::once(truth.optimal())
            .chain(truth.experts().iter().map(|e| &e.policy))
            .map(policy_rows)
            .collect();
        Self {
            truth,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            transition_cdfs,
            policy_cdfs,
            draws: 0,
        }
    }

    pub fn truth(&self) -> &IrlSeProblem {
        &self.truth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of random draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sample(&mut self, state: usize, action: usize) -> Result<Sample> {
        let (s_count, a_count) = (self.truth.num_states(), self.truth.num_actions());
        if state >= s_count {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: state,
                bound: s_count,
            });
        }
        if action >= a_count {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                bound: a_count,
            });
        }
        let u = self.uniform();
        let next_state = inverse_cdf(&self.transition_cdfs[state * a_count + action], u);
        let mut actions = Vec::with_capacity(self.policy_cdfs.len());
        for i in 0..self.policy_cdfs.len() {
            let u = self.uniform();
            actions.push(inverse_cdf(&self.policy_cdfs[i][state], u));
        }
        Ok(Sample { next_state, actions })
    }
}

/// Transition counts `N(s,a,s')` and per-expert action counts `N_i(s,a)`
/// (expert 0 is the optimal one).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<u64>,
    actions: Vec<Vec<u64>>,
}

impl Dataset {
    /// Empty dataset for `num_policies` experts including the optimal one.
    pub fn new(num_states: usize, num_actions: usize, num_policies: usize) -> Self {
        Self {
            num_states,
            num_actions,
            transitions: vec![0; num_states * num_actions * num_states],
            actions: vec![vec![0; num_states * num_actions]; num_policies],
        }
    }

    pub fn for_problem(problem: &IrlSeProblem) -> Self {
        Self::new(problem.num_states(), problem.num_actions(), problem.num_experts() + 1)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_policies(&self) -> usize {
        self.actions.len()
    }

    /// `N(s,a,s')`.
    pub fn count(&self, s: usize, a: usize, next: usize) -> u64 {
        self.transitions[(s * self.num_actions + a) * self.num_states + next]
    }

    /// `N(s,a)`.
    pub fn visits(&self, s: usize, a: usize) -> u64 {
        let start = (s * self.num_actions + a) * self.num_states;
        self.transitions[start..start + self.num_states].iter().sum()
    }

    /// `N(s)`.
    pub fn state_visits(&self, s: usize) -> u64 {
        (0..self.num_actions).map(|a| self.visits(s, a)).sum()
    }

    /// `N_i(s,a)`: times expert `i` chose `a` when queried at `s`.
    pub fn action_count(&self, expert: usize, s: usize, a: usize) -> u64 {
        self.actions[expert][s * self.num_actions + a]
    }

    /// Total number of queries recorded.
    pub fn total(&self) -> u64 {
        self.transitions.iter().sum()
    }

    /// Records one query answer.
    pub fn update_counts(&mut self, s: usize, a: usize, next: usize, actions: &[usize]) -> Result<()> {
        let check = |what, index, bound| {
            if index >= bound {
                Err(Error::IndexOutOfRange { what, index, bound })
            } else {
                Ok(())
            }
        };
        check("state", s, self.num_states)?;
        check("action", a, self.num_actions)?;
        check("next state", next, self.num_states)?;
        if actions.len() != self.actions.len() {
            return Err(Error::DimensionMismatch {
                what: "expert actions",
                expected: self.actions.len(),
                found: actions.len(),
            });
        }
        for &b in actions {
            check("expert action", b, self.num_actions)?;
        }
        self.transitions[(s * self.num_actions + a) * self.num_states + next] += 1;
        for (counts, &b) in self.actions.iter_mut().zip(actions) {
            counts[s * self.num_actions + b] += 1;
        }
        Ok(())
    }

    /// `p_hat(.|s,a)`, uniform when the pair was never queried.
    pub fn transition_estimate(&self, s: usize, a: usize) -> Vec<f64> {
        let n = self.visits(s, a);
        (0..self.num_states)
            .map(|next| {
                if n == 0 {
                    1.0 / self.num_states as f64
                } else {
                    self.count(s, a, next) as f64 / n as f64
                }
            })
            .collect()
    }

    /// `pi_hat_i(.|s)`, uniform when the state was never queried.
    pub fn policy_estimate(&self, expert: usize, s: usize) -> Vec<f64> {
        let n = self.state_visits(s);
        (0..self.num_actions)
            .map(|a| {
                if n == 0 {
                    1.0 / self.num_actions as f64
                } else {
                    self.action_count(expert, s, a) as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Plug-in problem: empirical transitions and expert policies, with the
/// truth's discount, `xi` values and modes.
pub fn empirical_problem(dataset: &Dataset, truth: &IrlSeProblem) -> Result<EmpiricalProblem> {
    let (s_count, a_count) = (truth.num_states(), truth.num_actions());
    if dataset.num_states() != s_count || dataset.num_actions() != a_count {
        return Err(Error::DimensionMismatch {
            what: "dataset shape",
            expected: s_count * a_count,
            found: dataset.num_states() * dataset.num_actions(),
        });
    }
    if dataset.num_policies() != truth.num_experts() + 1 {
        return Err(Error::DimensionMismatch {
            what: "dataset experts",
            expected: truth.num_experts() + 1,
            found: dataset.num_policies(),
        });
    }
    let mut p = DMatrix::zeros(s_count * a_count, s_count);
    for s in 0..s_count {
        for a in 0..a_count {
            for (next, x) in dataset.transition_estimate(s, a).into_iter().enumerate() {
                p[(s * a_count + a, next)] = x;
            }
        }
    }
    let mdp = MdpNoReward::new(s_count, a_count, p, truth.discount())?;
    let policy = |i: usize| -> Result<Policy> {
        let rows: Vec<Vec<f64>> = (0..s_count).map(|s| dataset.policy_estimate(i, s)).collect();
        Policy::from_rows(&rows)
    };
    let experts = truth
        .experts()
        .iter()
        .enumerate()
        .map(|(i, e)| ExpertSpec::new(policy(i + 1)?, e.xi, e.mode))
        .collect::<Result<Vec<_>>>()?;
    IrlSeProblem::new(mdp, policy(0)?, experts)
}

/// Uniform sampling: `m` rounds, each querying every pair once.
pub fn us_irl_se(model: &mut GenerativeModel, m: u64) -> Result<(EmpiricalProblem, Dataset)> {
    let mut dataset = Dataset::for_problem(model.truth());
    let (s_count, a_count) = (model.truth().num_states(), model.truth().num_actions());
    for _ in 0..m {
        for s in 0..s_count {
            for a in 0..a_count {
                let sample = model.sample(s, a)?;
                dataset.update_counts(s, a, sample.next_state, &sample.actions)?;
            }
        }
    }
    let problem = empirical_problem(&dataset, model.truth())?;
    Ok((problem, dataset))
}
