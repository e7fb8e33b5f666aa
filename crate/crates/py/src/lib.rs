//! Python module `irlse`. Tables cross the boundary as nested lists indexed
//! `[state][action]`; flat reward vectors use the index `s * A + a`.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use irlse_core::estimation::{self as est, BoundInputs, GenerativeModel};
use irlse_core::feasible::{self, DEFAULT_TOL};
use irlse_core::hausdorff::{self, HausdorffMode, HausdorffOptions};
use irlse_core::instances;
use irlse_core::io::ProblemFile;
use irlse_core::{Error, IrlSeProblem};

type Table = Vec<Vec<f64>>;

create_exception!(irlse, IrlseError, PyException);
create_exception!(irlse, DimensionCapError, IrlseError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::DimensionCap { .. } => DimensionCapError::new_err(e.to_string()),
        _ => IrlseError::new_err(e.to_string()),
    }
}

fn table(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows of unequal length"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// An inverse RL problem: transition model, optimal expert and sub-optimal
/// experts with their constraints.
#[pyclass(name = "Problem", frozen, module = "irlse", skip_from_py_object)]
#[derive(Clone)]
pub struct PyProblem {
    inner: IrlSeProblem,
}

impl From<IrlSeProblem> for PyProblem {
    fn from(inner: IrlSeProblem) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ProblemFile::from_json(text).map_err(py_err)?;
        Ok(file.to_problem().map_err(py_err)?.into())
    }

    fn to_json(&self) -> String {
        ProblemFile::from_problem(&self.inner, None).to_json()
    }

    #[staticmethod]
    #[pyo3(signature = (gamma = 0.9, xi = 0.5))]
    fn fig1(gamma: f64, xi: f64) -> PyResult<Self> {
        Ok(instances::example_fig1(gamma, xi).map_err(py_err)?.into())
    }

    /// `variant` is `(j, k)` with `j` 1-based and `k` 0-based.
    #[staticmethod]
    #[pyo3(signature = (s_bar, num_actions, gamma, eps, variant = None))]
    fn lb_chain(
        s_bar: usize,
        num_actions: usize,
        gamma: f64,
        eps: f64,
        variant: Option<(usize, usize)>,
    ) -> PyResult<Self> {
        Ok(instances::lb_chain(s_bar, num_actions, gamma, eps, variant).map_err(py_err)?.into())
    }

    #[staticmethod]
    fn lb_tree(s_bar: usize, num_actions: usize, gamma: f64, eps: f64, signs: Vec<i8>) -> PyResult<Self> {
        Ok(instances::lb_tree(s_bar, num_actions, gamma, eps, &signs).map_err(py_err)?.into())
    }

    #[staticmethod]
    #[pyo3(signature = (s_bar, gamma, xi, pi_min, alpha, variant_state = None))]
    fn lb_subopt(
        s_bar: usize,
        gamma: f64,
        xi: f64,
        pi_min: f64,
        alpha: f64,
        variant_state: Option<usize>,
    ) -> PyResult<Self> {
        Ok(instances::lb_subopt(s_bar, gamma, xi, pi_min, alpha, variant_state).map_err(py_err)?.into())
    }

    #[staticmethod]
    #[pyo3(signature = (num_states, num_actions, num_experts, gamma, seed, xi_range = (0.1, 1.0)))]
    fn random(
        num_states: usize,
        num_actions: usize,
        num_experts: usize,
        gamma: f64,
        seed: u64,
        xi_range: (f64, f64),
    ) -> PyResult<Self> {
        Ok(instances::random_problem(num_states, num_actions, num_experts, gamma, seed, xi_range)
            .map_err(py_err)?
            .into())
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    #[getter]
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.discount()
    }

    /// `transitions[s][a][s']`.
    #[getter]
    fn transitions(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.mdp().to_nested()
    }

    #[getter]
    fn optimal_policy(&self) -> Vec<Vec<f64>> {
        self.inner.optimal().to_rows()
    }

    /// `(policy, xi, mode)` for each sub-optimal expert.
    #[getter]
    fn experts(&self) -> Vec<(Vec<Vec<f64>>, f64, &'static str)> {
        self.inner
            .experts()
            .iter()
            .map(|e| (e.policy.to_rows(), e.xi, e.mode.tag()))
            .collect()
    }

    #[pyo3(signature = (reward, tol = DEFAULT_TOL))]
    fn is_member(&self, reward: Vec<Vec<f64>>, tol: f64) -> PyResult<bool> {
        let r = table(&reward)?;
        Ok(feasible::membership_implicit(&self.inner, &r, tol).map_err(py_err)?.is_member())
    }

    /// Human-readable violated conditions; empty for members.
    #[pyo3(signature = (reward, tol = DEFAULT_TOL))]
    fn violations(&self, reward: Vec<Vec<f64>>, tol: f64) -> PyResult<Vec<String>> {
        let r = table(&reward)?;
        let report = feasible::membership_implicit(&self.inner, &r, tol).map_err(py_err)?;
        Ok(report.violations.iter().map(ToString::to_string).collect())
    }

    /// Distance in the max norm from `reward` to the feasible set.
    fn distance(&self, reward: Vec<Vec<f64>>) -> PyResult<f64> {
        let r = table(&reward)?;
        let set = feasible::polytope_h_rep(&self.inner, DEFAULT_TOL).map_err(py_err)?;
        hausdorff::directed_distance(&r, &set).map_err(py_err)
    }

    /// `(g, k)` tables of caps on the advantage parameter.
    fn zeta_caps(&self) -> PyResult<(Table, Table)> {
        let caps = feasible::zeta_caps(&self.inner).map_err(py_err)?;
        Ok((rows(&caps.g), rows(&caps.k)))
    }

    /// `(single_agent, multi_expert)` volume bounds.
    fn volume_bounds(&self) -> PyResult<(f64, f64)> {
        let v = feasible::volume_upper_bounds(&self.inner).map_err(py_err)?;
        Ok((v.single_agent, v.multi_expert))
    }

    /// Half-space form `(A, b, labels)` of the feasible set over flat rewards.
    fn h_rep(&self) -> PyResult<(Table, Vec<f64>, Vec<String>)> {
        let set = feasible::polytope_h_rep(&self.inner, DEFAULT_TOL).map_err(py_err)?;
        let h = set.h_rep();
        let labels = set.labels().iter().map(|l| format!("{l:?}")).collect();
        Ok((rows(h.matrix()), h.bounds().iter().copied().collect(), labels))
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(num_states={}, num_actions={}, num_experts={}, gamma={})",
            self.inner.num_states(),
            self.inner.num_actions(),
            self.inner.num_experts(),
            self.inner.discount()
        )
    }
}

/// Hausdorff distance between the feasible sets of two problems.
#[pyfunction]
#[pyo3(signature = (a, b, mode = "exact", budget = 64, seed = 0))]
fn hausdorff_distance<'py>(
    py: Python<'py>,
    a: &PyProblem,
    b: &PyProblem,
    mode: &str,
    budget: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = HausdorffMode::from_tag(mode).ok_or_else(|| PyValueError::new_err(format!("unknown mode {mode:?}")))?;
    let options = HausdorffOptions {
        mode,
        budget,
        seed,
        ..HausdorffOptions::default()
    };
    let report = py
        .detach(|| hausdorff::hausdorff_problems(&a.inner, &b.inner, &options))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", report.value)?;
    d.set_item("mode", report.mode.tag())?;
    d.set_item("forward", report.forward.value)?;
    d.set_item("backward", report.backward.value)?;
    d.set_item("witness", report.witness().witness.as_slice().to_vec())?;
    d.set_item("nearest", report.witness().nearest.as_slice().to_vec())?;
    Ok(d)
}

/// Runs `m` rounds of uniform sampling and returns the plug-in problem
/// together with the number of generative-model queries spent.
#[pyfunction]
#[pyo3(signature = (truth, m, seed = 0))]
fn estimate(py: Python<'_>, truth: &PyProblem, m: u64, seed: u64) -> PyResult<(PyProblem, u64)> {
    let (problem, dataset) = py
        .detach(|| est::us_irl_se(&mut GenerativeModel::new(truth.inner.clone(), seed), m))
        .map_err(py_err)?;
    Ok((problem.into(), dataset.total()))
}

#[pyfunction]
fn error_bound<'py>(py: Python<'py>, problem: &PyProblem, t: u64, delta: f64) -> PyResult<Bound<'py, PyDict>> {
    let inputs = BoundInputs::from_problem(&problem.inner, delta).map_err(py_err)?;
    let b = est::error_bound(t, &inputs).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", b.value)?;
    d.set_item("valid", b.valid)?;
    d.set_item("beta", b.radii.beta)?;
    d.set_item("alpha", b.radii.alpha)?;
    d.set_item("rho", b.radii.rho)?;
    d.set_item("min_valid_t", b.thresholds.min_t())?;
    Ok(d)
}

/// Smallest number of sampling rounds whose error bound is valid and at
/// most `epsilon`.
#[pyfunction]
fn required_m(problem: &PyProblem, epsilon: f64, delta: f64) -> PyResult<u64> {
    let inputs = BoundInputs::from_problem(&problem.inner, delta).map_err(py_err)?;
    est::required_m(epsilon, &inputs).map_err(py_err)
}

#[pymodule]
fn irlse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IrlseError", m.py().get_type::<IrlseError>())?;
    m.add("DimensionCapError", m.py().get_type::<DimensionCapError>())?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(hausdorff_distance, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(required_m, m)?)?;
    Ok(())
}
