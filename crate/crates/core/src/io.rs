//! JSON problem and reward files.
//!
//! A problem file holds `gamma`, `num_states`, `num_actions`, the
//! `transitions` as an `S x A x S` array and a list of `experts`, each with
//! an `S x A` `policy`, an optional `xi` and a `mode` (`"le"`, `"ge"` or
//! `"eq"`). Exactly one expert has no `xi`: that one is optimal. An optional
//! `metadata` object is carried through untouched. Numbers are written in
//! the shortest form that parses back to the same `f64`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mdp::{MdpNoReward, Policy, StateActionTable};
use crate::problem::{ConstraintMode, ExpertSpec, IrlSeProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertEntry {
    pub policy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: String,
}

fn default_mode() -> String {
    ConstraintMode::Upper.tag().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub gamma: f64,
    pub num_states: usize,
    pub num_actions: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub experts: Vec<ExpertEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn check_table(what: &str, table: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if table.len() != rows {
        return Err(format_err(format!("{what}: expected {rows} rows, found {}", table.len())));
    }
    for (s, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(format_err(format!("{what}[{s}]: expected {cols} entries, found {}", row.len())));
        }
    }
    Ok(())
}

impl ProblemFile {
    /// The optimal expert is written first.
    pub fn from_problem(problem: &IrlSeProblem, metadata: Option<Value>) -> Self {
        let mut experts = vec![ExpertEntry {
            policy: problem.optimal().to_rows(),
            xi: None,
            mode: default_mode(),
        }];
        experts.extend(problem.experts().iter().map(|e| ExpertEntry {
            policy: e.policy.to_rows(),
            xi: Some(e.xi),
            mode: e.mode.tag().to_string(),
        }));
        Self {
            gamma: problem.discount(),
            num_states: problem.num_states(),
            num_actions: problem.num_actions(),
            transitions: problem.mdp().to_nested(),
            experts,
            metadata,
        }
    }

    /// Validates the document and builds the problem, reporting the first
    /// violated requirement.
    pub fn to_problem(&self) -> Result<IrlSeProblem> {
        let (s, a) = (self.num_states, self.num_actions);
        if s == 0 || a == 0 {
            return Err(format_err("num_states and num_actions must be positive"));
        }
        if self.transitions.len() != s {
            return Err(format_err(format!(
                "transitions: expected {s} states, found {}",
                self.transitions.len()
            )));
        }
        for (i, per_action) in self.transitions.iter().enumerate() {
            check_table(&format!("transitions[{i}]"), per_action, a, s)?;
        }
        let mdp = MdpNoReward::from_nested(&self.transitions, self.gamma)?;

        let optimal: Vec<usize> = (0..self.experts.len()).filter(|&i| self.experts[i].xi.is_none()).collect();
        if optimal.len() != 1 {
            return Err(format_err(format!(
                "exactly one expert must omit xi (the optimal one), found {}",
                optimal.len()
            )));
        }
        let mut optimal_policy = None;
        let mut experts = Vec::new();
        for (i, e) in self.experts.iter().enumerate() {
            check_table(&format!("experts[{i}].policy"), &e.policy, s, a)?;
            let policy = Policy::from_rows(&e.policy)
                .map_err(|err| format_err(format!("experts[{i}].policy: {err}")))?;
            let mode = ConstraintMode::from_tag(&e.mode)
                .ok_or_else(|| format_err(format!("experts[{i}].mode: unknown mode {:?}", e.mode)))?;
            match e.xi {
                None => optimal_policy = Some(policy),
                Some(xi) => experts.push(
                    ExpertSpec::new(policy, xi, mode).map_err(|err| format_err(format!("experts[{i}].xi: {err}")))?,
                ),
            }
        }
        IrlSeProblem::new(mdp, optimal_policy.expect("checked above"), experts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| format_err(format!("line {} column {}: {e}", e.line(), e.column())))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_problem_file(path: &Path) -> Result<ProblemFile> {
    ProblemFile::from_json(&read_text(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_problem(path: &Path) -> Result<IrlSeProblem> {
    read_problem_file(path)?.to_problem()
}

pub fn write_problem(path: &Path, problem: &IrlSeProblem, metadata: Option<Value>) -> Result<()> {
    write_text(path, &ProblemFile::from_problem(problem, metadata).to_json())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RewardDoc {
    Wrapped { reward: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

/// Parses `{"reward": [[...], ...]}` or a bare `S x A` array.
pub fn parse_reward(text: &str) -> Result<StateActionTable> {
    let rows = match serde_json::from_str::<RewardDoc>(text).map_err(|e| format_err(format!("reward: {e}")))? {
        RewardDoc::Wrapped { reward } => reward,
        RewardDoc::Bare(rows) => rows,
    };
    let cols = rows.first().map_or(0, Vec::len);
    check_table("reward", &rows, rows.len(), cols)?;
    Ok(DMatrix::from_fn(rows.len(), cols, |s, a| rows[s][a]))
}

pub fn read_reward(path: &Path) -> Result<StateActionTable> {
    parse_reward(&read_text(path)?)
}

pub fn reward_to_json(r: &StateActionTable) -> String {
    let rows: Vec<Vec<f64>> = (0..r.nrows()).map(|s| r.row(s).iter().copied().collect()).collect();
    serde_json::to_string_pretty(&serde_json::json!({ "reward": rows })).expect("reward serialises")
}

pub fn write_reward(path: &Path, r: &StateActionTable) -> Result<()> {
    write_text(path, &reward_to_json(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example_fig1, random_problem};

    #[test]
    fn round_trip_is_bit_exact() {
        for seed in 0..5 {
            let p = random_problem(4, 3, 2, 0.9, seed, (0.1, 1.0)).unwrap();
            let json = ProblemFile::from_problem(&p, None).to_json();
            assert_eq!(ProblemFile::from_json(&json).unwrap().to_problem().unwrap(), p);
        }
    }

    #[test]
    fn metadata_survives() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let meta = serde_json::json!({"family": "fig1"});
        let f = ProblemFile::from_json(&ProblemFile::from_problem(&p, Some(meta.clone())).to_json()).unwrap();
        assert_eq!(f.metadata, Some(meta));
    }

    #[test]
    fn errors_name_the_location() {
        let p = example_fig1(0.9, 0.5).unwrap();
        let mut f = ProblemFile::from_problem(&p, None);
        f.transitions[1][0] = vec![0.5, 0.6];
        assert!(f.to_problem().is_err());

        let mut f = ProblemFile::from_problem(&p, None);
        f.experts[1].policy[1].pop();
        let err = f.to_problem().unwrap_err().to_string();
        assert!(err.contains("experts[1].policy[1]"), "{err}");

        let mut f = ProblemFile::from_problem(&p, None);
        f.experts[1].xi = None;
        assert!(f.to_problem().unwrap_err().to_string().contains("exactly one"));

        let mut f = ProblemFile::from_problem(&p, None);
        f.experts[1].mode = "lt".into();
        assert!(f.to_problem().unwrap_err().to_string().contains("experts[1].mode"));

        let mut f = ProblemFile::from_problem(&p, None);
        f.experts[1].xi = Some(-1.0);
        assert!(f.to_problem().is_err());

        assert!(ProblemFile::from_json("{ not json").unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn rewards_in_both_layouts() {
        let wrapped = parse_reward(r#"{"reward": [[1.0, 0.6], [0, 0]]}"#).unwrap();
        let bare = parse_reward("[[1.0, 0.6], [0, 0]]").unwrap();
        assert_eq!(wrapped, bare);
        assert_eq!(wrapped[(0, 1)], 0.6);
        assert_eq!(parse_reward(&reward_to_json(&wrapped)).unwrap(), wrapped);
        assert!(parse_reward("[[1.0], [0, 0]]").is_err());
    }
}
