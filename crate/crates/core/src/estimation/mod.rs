//! Learning feasible sets from a generative model: uniform sampling, the
//! plug-in problem and the accompanying sample-complexity bounds.

mod bounds;
mod sampling;

pub use bounds::{
    closed_form_conditions, closed_form_m, complexity_constants, concentration_radii, error_bound, good_event,
    kl_categorical, required_m, validity_thresholds, BoundInputs, ClosedFormConditions, ComplexityConstants,
    ConcentrationRadii, ErrorBound, GoodEvent, ValidityThresholds, SAFETY_INFLATION,
};
pub use sampling::{empirical_problem, us_irl_se, Dataset, EmpiricalProblem, GenerativeModel, Sample};
