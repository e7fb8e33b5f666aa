use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpNoReward, Policy};

/// How an expert's performance gap `V^{pi_1} - V^{pi_i}` relates to its `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConstraintMode {
    /// Gap at most `xi` in every state.
    #[default]
    Upper,
    /// Gap at least `xi` in every state.
    Lower,
    /// Gap exactly `xi` in every state.
    Exact,
}

impl ConstraintMode {
    /// Short tag used by the problem file format.
    pub fn tag(self) -> &'static str {
        match self {
            ConstraintMode::Upper => "le",
            ConstraintMode::Lower => "ge",
            ConstraintMode::Exact => "eq",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "le" => Some(ConstraintMode::Upper),
            "ge" => Some(ConstraintMode::Lower),
            "eq" => Some(ConstraintMode::Exact),
            _ => None,
        }
    }
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A sub-optimal expert together with its known degree of sub-optimality.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSpec {
    pub policy: Policy,
    pub xi: f64,
    pub mode: ConstraintMode,
}

impl ExpertSpec {
    pub fn new(policy: Policy, xi: f64, mode: ConstraintMode) -> Result<Self> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::InvalidParameter {
                name: "xi",
                reason: format!("must be positive and finite, got {xi}"),
            });
        }
        Ok(Self { policy, xi, mode })
    }

    pub fn upper(policy: Policy, xi: f64) -> Result<Self> {
        Self::new(policy, xi, ConstraintMode::Upper)
    }
}

/// Inverse RL problem with one optimal expert and `n >= 0` sub-optimal ones.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlSeProblem {
    mdp: MdpNoReward,
    optimal: Policy,
    experts: Vec<ExpertSpec>,
}

impl IrlSeProblem {
    pub fn new(mdp: MdpNoReward, optimal: Policy, experts: Vec<ExpertSpec>) -> Result<Self> {
        mdp.check_policy(&optimal)?;
        for (i, e) in experts.iter().enumerate() {
            mdp.check_policy(&e.policy)?;
            if !(e.xi.is_finite() && e.xi > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "xi",
                    reason: format!("expert {i} has xi = {}", e.xi),
                });
            }
        }
        Ok(Self {
            mdp,
            optimal,
            experts,
        })
    }

    pub fn mdp(&self) -> &MdpNoReward {
        &self.mdp
    }

    pub fn optimal(&self) -> &Policy {
        &self.optimal
    }

    pub fn experts(&self) -> &[ExpertSpec] {
        &self.experts
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    /// Number of sub-optimal experts `n`.
    pub fn num_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn discount(&self) -> f64 {
        self.mdp.discount()
    }

    /// Dimension of the reward space, `S*A`.
    pub fn reward_dim(&self) -> usize {
        self.num_states() * self.num_actions()
    }

    /// Copy of the problem without sub-optimal expert `index`.
    pub fn without_expert(&self, index: usize) -> Result<Self> {
        if index >= self.experts.len() {
            return Err(Error::IndexOutOfRange {
                what: "expert",
                index,
                bound: self.experts.len(),
            });
        }
        let mut experts = self.experts.clone();
        experts.remove(index);
        Ok(Self {
            mdp: self.mdp.clone(),
            optimal: self.optimal.clone(),
            experts,
        })
    }

    /// Copy of the problem with no sub-optimal experts.
    pub fn single_agent(&self) -> Self {
        Self {
            mdp: self.mdp.clone(),
            optimal: self.optimal.clone(),
            experts: Vec::new(),
        }
    }

    pub fn largest_xi(&self) -> Option<f64> {
        self.experts.iter().map(|e| e.xi).reduce(f64::max)
    }
}
