//! Inverse reinforcement learning with sub-optimal experts: feasible reward
//! sets, their estimation from a generative model, and Hausdorff distances
//! between them.

pub mod error;
pub mod estimation;
pub mod feasible;
pub mod hausdorff;
pub mod instances;
pub mod io;
pub mod lp;
pub mod mdp;
pub mod polytope;
pub mod problem;
pub mod seed;
pub mod sweep;

pub use error::{Error, Result};
pub use mdp::{MdpNoReward, Policy, RewardFunction, StateActionTable, StateTable};
pub use problem::{ConstraintMode, ExpertSpec, IrlSeProblem};
