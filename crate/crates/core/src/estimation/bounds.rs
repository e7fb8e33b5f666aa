//! Concentration radii, the high-probability error bound and the sample
//! size needed to reach a target accuracy.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::sampling::Dataset;
use crate::error::{Error, Result};
use crate::problem::{ConstraintMode, IrlSeProblem};

/// Right-hand sides of the closed-form sample conditions are inflated by
/// this factor to absorb rounding.
pub const SAFETY_INFLATION: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConstants {
    /// Smallest positive probability of any sub-optimal expert.
    pub pi_min: f64,
    /// Smallest, over experts, of the largest probability they assign in a
    /// state (reported only).
    pub pi_min_max: f64,
    pub max_xi: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    /// No sub-optimal experts: the constants take their single-agent values.
    pub single_agent: bool,
}

/// Constants of the sample-complexity analysis. Only upper-bound experts
/// are covered.
pub fn complexity_constants(problem: &IrlSeProblem) -> Result<ComplexityConstants> {
    if problem.experts().iter().any(|e| e.mode != ConstraintMode::Upper) {
        return Err(Error::UnsupportedMode("ge/eq in sample-complexity bounds"));
    }
    let horizon = 1.0 / (1.0 - problem.discount());
    if problem.num_experts() == 0 {
        return Ok(ComplexityConstants {
            pi_min: 1.0,
            pi_min_max: 1.0,
            max_xi: 0.0,
            q0: 0.0,
            q1: 0.0,
            q2: 1.0,
            single_agent: true,
        });
    }
    let mut pi_min = f64::INFINITY;
    let mut pi_min_max = f64::INFINITY;
    for e in problem.experts() {
        let probs = e.policy.probs();
        for s in 0..probs.nrows() {
            let row = probs.row(s);
            pi_min = row.iter().copied().filter(|&p| p > 0.0).fold(pi_min, f64::min);
            pi_min_max = pi_min_max.min(row.max());
        }
    }
    let max_xi = problem.largest_xi().unwrap_or(0.0);
    let q0 = max_xi / pi_min;
    let q1 = q0.min(horizon);
    Ok(ComplexityConstants {
        pi_min,
        pi_min_max,
        max_xi,
        q0,
        q1,
        q2: q1.max(1.0),
        single_agent: false,
    })
}

/// Everything the bound formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_experts: usize,
    pub gamma: f64,
    pub delta: f64,
    pub pi_min: f64,
    pub max_xi: f64,
}

impl BoundInputs {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_experts: usize,
        gamma: f64,
        delta: f64,
        pi_min: f64,
        max_xi: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidParameter {
                name: "num_states",
                reason: "need at least one state and one action".into(),
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidDiscount(gamma));
        }
        check_delta(delta)?;
        check_pi_min(pi_min)?;
        if !(max_xi >= 0.0 && max_xi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "max_xi",
                reason: format!("must be finite and non-negative, got {max_xi}"),
            });
        }
        Ok(Self {
            num_states,
            num_actions,
            num_experts,
            gamma,
            delta,
            pi_min,
            max_xi,
        })
    }

    pub fn from_problem(problem: &IrlSeProblem, delta: f64) -> Result<Self> {
        let c = complexity_constants(problem)?;
        Self::new(
            problem.num_states(),
            problem.num_actions(),
            problem.num_experts(),
            problem.discount(),
            delta,
            c.pi_min,
            c.max_xi,
        )
    }

    /// `log(3 S A n / delta)`, with `n` taken as 1 when there are no
    /// sub-optimal experts.
    pub fn log_term(&self) -> f64 {
        let n = self.num_experts.max(1) as f64;
        (3.0 * self.num_states as f64 * self.num_actions as f64 * n / self.delta).ln()
    }

    /// `min{max_xi / pi_min, 1/(1-gamma)}`.
    pub fn q1(&self) -> f64 {
        (self.max_xi / self.pi_min).min(1.0 / (1.0 - self.gamma))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must lie in (0, 1), got {delta}"),
        });
    }
    Ok(())
}

fn check_pi_min(pi_min: f64) -> Result<()> {
    if !(pi_min > 0.0 && pi_min <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "pi_min",
            reason: format!("must lie in (0, 1], got {pi_min}"),
        });
    }
    Ok(())
}

/// `k log(e (1 + x / k))`, extended by its limit 0 at `k = 0`.
fn growth(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * (E * (1.0 + x / k)).ln()
    }
}

/// `k (sqrt(e) + sqrt(1/k))^2 = (sqrt(e k) + 1)^2`, equal to 1 at `k = 0`.
fn spread(k: f64) -> f64 {
    ((E * k).sqrt() + 1.0).powi(2)
}

/// `prefix [L + k log(scale (L + spread(k)))]`, the shape of every
/// sufficient condition derived from the radii. Zero when `prefix` is zero.
fn inverted_radius(prefix: f64, scale: f64, k: f64, log_term: f64) -> f64 {
    if prefix == 0.0 {
        return 0.0;
    }
    let inner = if k == 0.0 {
        0.0
    } else {
        k * (scale * (log_term + spread(k))).ln()
    };
    prefix * (log_term + inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRadii {
    pub beta: f64,
    pub alpha: f64,
    pub rho: f64,
}

pub fn concentration_radii(
    t: u64,
    num_states: usize,
    num_actions: usize,
    num_experts: usize,
    delta: f64,
    pi_min: f64,
) -> Result<ConcentrationRadii> {
    let inputs = BoundInputs::new(num_states, num_actions, num_experts, 0.0, delta, pi_min, 0.0)?;
    radii(t, &inputs)
}

fn radii(t: u64, inputs: &BoundInputs) -> Result<ConcentrationRadii> {
    if t == 0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "radii need t >= 1".into(),
        });
    }
    let l = inputs.log_term();
    let t = t as f64;
    let s1 = inputs.num_states as f64 - 1.0;
    let a = inputs.num_actions as f64;
    let a1 = a - 1.0;
    Ok(ConcentrationRadii {
        beta: ((l + growth(s1, t)) / t).sqrt(),
        alpha: ((l + growth(a1, t * a)) / (t * a)).sqrt(),
        rho: (3.0 * l / (inputs.pi_min * t * a)).sqrt(),
    })
}

/// Smallest `t` (as reals) for which the error bound holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityThresholds {
    pub time_pi: f64,
    pub time_s: f64,
    pub time_a: f64,
}

impl ValidityThresholds {
    pub fn holds(&self, t: u64) -> bool {
        let t = t as f64;
        t >= 1.0 && t >= self.time_pi && t >= self.time_s && t >= self.time_a
    }

    /// Smallest integer satisfying all three.
    pub fn min_t(&self) -> u64 {
        self.time_pi.max(self.time_s).max(self.time_a).max(1.0).ceil() as u64
    }
}

pub fn validity_thresholds(inputs: &BoundInputs) -> ValidityThresholds {
    let l = inputs.log_term();
    let g = inputs.gamma;
    let a = inputs.num_actions as f64;
    let prefix = 8.0 * g * g / (1.0 - g).powi(2);
    let scale = 64.0 * g.powi(4) / (1.0 - g).powi(4);
    ValidityThresholds {
        time_pi: 3.0 * l / (a * inputs.pi_min),
        time_s: inverted_radius(prefix, scale, inputs.num_states as f64 - 1.0, l),
        time_a: inverted_radius(prefix / a, scale, a - 1.0, l),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    pub value: f64,
    /// `t` meets every validity threshold; otherwise `value` is only the
    /// formula evaluated outside its regime.
    pub valid: bool,
    pub radii: ConcentrationRadii,
    pub thresholds: ValidityThresholds,
}

/// `c beta + (rho + c (alpha + beta)) q1` with `c = 2 sqrt(2) gamma / (1 - gamma)`.
pub fn error_bound(t: u64, inputs: &BoundInputs) -> Result<ErrorBound> {
    let r = radii(t, inputs)?;
    let c = 2.0 * 2f64.sqrt() * inputs.gamma / (1.0 - inputs.gamma);
    let value = c * r.beta + (r.rho + c * (r.alpha + r.beta)) * inputs.q1();
    let thresholds = validity_thresholds(inputs);
    Ok(ErrorBound {
        value,
        valid: thresholds.holds(t),
        radii: r,
        thresholds,
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must lie in (0, 1), got {epsilon}"),
        });
    }
    Ok(())
}

/// Smallest `t` at which the error bound is valid and at most `epsilon`.
/// The radii decrease in `t`, so doubling followed by bisection finds it.
pub fn required_m(epsilon: f64, inputs: &BoundInputs) -> Result<u64> {
    check_epsilon(epsilon)?;
    let ok = |t: u64| -> Result<bool> {
        let b = error_bound(t, inputs)?;
        Ok(b.valid && b.value <= epsilon)
    };
    let mut hi = validity_thresholds(inputs).min_t();
    let mut lo = hi - 1;
    while !ok(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| Error::Numeric("sample size overflow".into()))?;
    }
    // Invariant: lo fails (or is below the validity threshold), hi succeeds.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Thresholds of the closed-form sufficient conditions on `t`, before the
/// safety inflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormConditions {
    /// `rho_t q1 <= epsilon/4`.
    pub rho: f64,
    /// `c beta_t <= epsilon/4`.
    pub beta: f64,
    /// `c q1 beta_t <= epsilon/4`.
    pub beta_q1: f64,
    /// `c q1 alpha_t <= epsilon/4`.
    pub alpha_q1: f64,
    pub validity: ValidityThresholds,
}

impl ClosedFormConditions {
    pub fn max(&self) -> f64 {
        [
            self.rho,
            self.beta,
            self.beta_q1,
            self.alpha_q1,
            self.validity.time_pi,
            self.validity.time_s,
            self.validity.time_a,
            1.0,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn closed_form_conditions(epsilon: f64, inputs: &BoundInputs) -> Result<ClosedFormConditions> {
    check_epsilon(epsilon)?;
    let l = inputs.log_term();
    let g = inputs.gamma;
    let a = inputs.num_actions as f64;
    let s1 = inputs.num_states as f64 - 1.0;
    let q1 = inputs.q1();
    let e2 = epsilon * epsilon;
    let prefix = 128.0 * g * g / ((1.0 - g).powi(2) * e2);
    let scale = 16384.0 * g.powi(4) / ((1.0 - g).powi(4) * e2 * e2);
    let q1_inner = |s: f64| if q1 == 0.0 { 0.0 } else { s };
    Ok(ClosedFormConditions {
        rho: 48.0 * q1 * q1 * l / (inputs.pi_min * e2) / a,
        beta: inverted_radius(prefix, scale, s1, l),
        beta_q1: inverted_radius(q1 * q1 * prefix, q1_inner(q1.powi(4) * scale), s1, l),
        // The logarithm carries q1^2 here, not q1^4.
        alpha_q1: inverted_radius(q1 * q1 * prefix, q1_inner(q1 * q1 * scale), a - 1.0, l) / a,
        validity: validity_thresholds(inputs),
    })
}

/// Smallest integer `t` meeting every closed-form condition with the right
/// hand sides inflated by [`SAFETY_INFLATION`]. Never below [`required_m`].
pub fn closed_form_m(epsilon: f64, inputs: &BoundInputs) -> Result<u64> {
    let c = closed_form_conditions(epsilon, inputs)?;
    Ok((c.max() * SAFETY_INFLATION).ceil().max(1.0) as u64)
}

/// `sum p log(p/q)` with `0 log 0 = 0`. Fails where `p > 0 = q`.
pub fn kl_categorical(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution length",
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::InvalidDistribution {
                    what: "KL reference".into(),
                    row: i.to_string(),
                    reason: format!("p = {pi} has no support under q"),
                });
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Which parts of the high-probability good event hold for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodEvent {
    pub transitions: bool,
    pub policies: bool,
    pub pi_min: bool,
    /// Every multiplicative radius is below one (the regime in which the
    /// event is guaranteed with probability `1 - delta`).
    pub regime: bool,
}

impl GoodEvent {
    pub fn holds(&self) -> bool {
        self.transitions && self.policies && self.pi_min
    }
}

pub fn good_event(truth: &IrlSeProblem, dataset: &Dataset, delta: f64) -> Result<GoodEvent> {
    check_delta(delta)?;
    let inputs = BoundInputs::new(
        truth.num_states(),
        truth.num_actions(),
        truth.num_experts(),
        truth.discount(),
        delta,
        1.0,
        0.0,
    )?;
    let l = inputs.log_term();
    let (s_count, a_count) = (truth.num_states(), truth.num_actions());
    let mut out = GoodEvent {
        transitions: true,
        policies: true,
        pi_min: true,
        regime: true,
    };
    for s in 0..s_count {
        for a in 0..a_count {
            let n = dataset.visits(s, a) as f64;
            let p = truth.mdp().next_state_distribution(s, a);
            let kl = kl_categorical(&dataset.transition_estimate(s, a), &p)?;
            if n * kl > l + growth(s_count as f64 - 1.0, n) {
                out.transitions = false;
            }
        }
        let n = dataset.state_visits(s) as f64;
        for (i, e) in truth.experts().iter().enumerate() {
            let pi: Vec<f64> = e.policy.probs().row(s).iter().copied().collect();
            let pi_hat = dataset.policy_estimate(i + 1, s);
            if n * kl_categorical(&pi_hat, &pi)? > l + growth(a_count as f64 - 1.0, n) {
                out.policies = false;
            }
            for a in 0..a_count {
                if pi[a] <= 0.0 {
                    continue;
                }
                let radius = (3.0 * l / (pi[a] * n)).sqrt();
                if radius >= 1.0 {
                    out.regime = false;
                }
                if n > 0.0 && pi_hat[a] > pi[a] * (1.0 + radius) {
                    out.pi_min = false;
                }
            }
        }
    }
    Ok(out)
}
