//! Python bindings. Lengths `S` are passed as strings (`"p/q"` or `"2^-v"`),
//! sequences as `poly:...`, `linear`, `lacunary:b`, and alphas as `golden`,
//! `sqrt2m1`, `rat:p/q` or `hex:...`.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use numvar_core::arithmetic::{self as arith, GcdRoute, GcdVariant};
use numvar_core::baselines;
use numvar_core::scan;
use numvar_core::{Alpha, Budget, Dyadic, Error, SequenceSpec};

create_exception!(numvar, BudgetError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Budget { .. } => BudgetError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for numvar_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn dyadic(s: &str) -> PyResult<Dyadic> {
    s.parse().py()
}

fn alpha(s: &str) -> PyResult<Alpha> {
    s.parse().py()
}

fn terms(sequence: &str, n: usize) -> PyResult<Vec<i64>> {
    let spec: SequenceSpec = sequence.parse().py()?;
    numvar_core::generate_terms(&spec, n).py()
}

fn budget(pairs: Option<u64>) -> Budget {
    let mut b = Budget::default();
    if let Some(p) = pairs {
        b.pairs = p;
    }
    b
}

/// Sorted points on the circle at 128-bit fixed-point resolution.
#[pyclass(name = "PointSet", frozen)]
struct PyPointSet(numvar_core::PointSet);

#[pymethods]
impl PyPointSet {
    /// Points from floats in `[0, 1)`.
    #[new]
    fn new(values: Vec<f64>) -> Self {
        PyPointSet(numvar_core::PointSet::from_f64(&values))
    }

    /// `{alpha x_n}` for `n = 1..=N`.
    #[staticmethod]
    fn dilation(sequence: &str, n: usize, alpha_spec: &str) -> PyResult<Self> {
        let t = terms(sequence, n)?;
        Ok(PyPointSet(numvar_core::dilate_mod1(&t, alpha(alpha_spec)?).py()?))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.to_f64()
    }

    /// Raw phases as integers in units of `2^-128`.
    fn phases(&self) -> Vec<u128> {
        self.0.as_slice().to_vec()
    }

    #[pyo3(signature = (s, route = "pairwise"))]
    fn variance(&self, s: &str, route: &str) -> PyResult<f64> {
        let s = dyadic(s)?;
        match route {
            "pairwise" => Ok(numvar_core::variance_pairwise(&self.0, s)),
            "sweep" => Ok(numvar_core::variance_sweep(&self.0, s)),
            other => Err(PyValueError::new_err(format!("unknown route '{other}'"))),
        }
    }

    /// Number of points in `[y - S/2, y + S/2)`.
    fn count(&self, s: &str, y: f64) -> PyResult<usize> {
        Ok(numvar_core::counting_function(&self.0, dyadic(s)?, numvar_core::fixed::frac_from_f64(y)))
    }

    fn __repr__(&self) -> String {
        format!("PointSet(len={})", self.0.len())
    }
}

/// A parsed scan configuration.
#[pyclass(name = "ExperimentConfig", frozen)]
struct PyConfig(numvar_core::ExperimentConfig);

#[pymethods]
impl PyConfig {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyConfig(numvar_core::ExperimentConfig::parse(text, None).py()?))
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyConfig(numvar_core::ExperimentConfig::from_file(&path).py()?))
    }

    fn hash(&self) -> String {
        self.0.hash()
    }

    fn alphas(&self) -> Vec<String> {
        self.0.alpha_values().iter().map(|a| a.to_hex()).collect()
    }

    /// Runs the scan and returns the serialized result (`csv` or `json`).
    #[pyo3(signature = (format = "csv", skip_over_budget = false))]
    fn run(&self, py: Python<'_>, format: &str, skip_over_budget: bool) -> PyResult<String> {
        let fmt: numvar_core::OutputFormat = format.parse().py()?;
        let cfg = self.0.clone();
        let bytes = py
            .detach(move || scan::run_scan(&cfg, skip_over_budget).and_then(|r| scan::emit(&r, fmt)))
            .py()?;
        Ok(String::from_utf8(bytes).expect("emitted text is UTF-8"))
    }
}

/// Binary digits, plateau offsets and retained levels of `S`.
#[pyfunction]
#[pyo3(signature = (s, v_max = 64))]
fn decompose<'py>(py: Python<'py>, s: &str, v_max: u32) -> PyResult<Bound<'py, PyDict>> {
    let e = numvar_core::decompose(dyadic(s)?, v_max).py()?;
    let d = PyDict::new(py);
    d.set_item("digits", e.digits.clone())?;
    d.set_item("coeffs", e.coeffs.clone())?;
    let levels: Vec<(u32, u128)> = e.kernels().iter().map(|k| (k.v(), k.c())).collect();
    d.set_item("levels", levels)?;
    d.set_item("truncated", e.truncated)?;
    d.set_item("scalar_identity", e.scalar_identity_holds())?;
    Ok(d)
}

/// `#{(a, b, c, d) in [1, N]^4 : x_a - x_b = x_c - x_d}`.
#[pyfunction]
#[pyo3(signature = (sequence, n, budget_pairs = None))]
fn additive_energy(sequence: &str, n: usize, budget_pairs: Option<u64>) -> PyResult<u128> {
    arith::additive_energy(&terms(sequence, n)?, n, &budget(budget_pairs)).py()
}

/// `[(u, Rep(u))]` for positive differences `x_i - x_j` with `n1 <= j < i <= n2`.
#[pyfunction]
#[pyo3(signature = (sequence, n1, n2, budget_pairs = None))]
fn rep_table(sequence: &str, n1: usize, n2: usize, budget_pairs: Option<u64>) -> PyResult<Vec<(u64, u64)>> {
    let t = terms(sequence, n2)?;
    Ok(arith::rep_table(&t, n1, n2, &budget(budget_pairs)).py()?.entries().to_vec())
}

/// Weighted GCD sum over `Rep_{1,N}`; `variant` is `half`, `one_over_max` or `squared`.
#[pyfunction]
#[pyo3(signature = (sequence, n, variant = "one_over_max", filter = None, budget_pairs = None))]
fn gcd_sum(sequence: &str, n: usize, variant: &str, filter: Option<u64>, budget_pairs: Option<u64>) -> PyResult<f64> {
    let variant: GcdVariant = variant.parse().py()?;
    let b = budget(budget_pairs);
    let table = arith::rep_table(&terms(sequence, n)?, 1, n, &b).py()?;
    arith::gcd_sum_with(table.entries(), variant, filter, GcdRoute::Auto, &b).py()
}

#[pyfunction]
fn tau_moment_sum(x: usize, beta: u32) -> PyResult<u128> {
    arith::tau_moment_sum(x, beta, &Budget::default()).py()
}

/// `(count, rad, bound, ok)` for elements of the difference set divisible by `ell`.
#[pyfunction]
fn divisibility_check(coeffs: Vec<i64>, n: usize, ell: u64) -> PyResult<(usize, u64, f64, bool)> {
    let degree = coeffs.len().saturating_sub(1) as u32;
    let set = arith::difference_set(&coeffs, n, &Budget::default()).py()?;
    let c = arith::divisibility_bound_check(&set, ell, degree, n).py()?;
    Ok((c.count, c.rad, c.bound, c.ok))
}

#[pyfunction]
fn congruence_solution_count(coeffs: Vec<i64>, q: u64) -> PyResult<u64> {
    arith::congruence_solution_count(&coeffs, q).py()
}

/// `V(N, S)` for each of `replicates` uniform samples.
#[pyfunction]
fn random_variances(py: Python<'_>, n: usize, s: &str, replicates: u64, seed: u64) -> PyResult<Vec<f64>> {
    let s = dyadic(s)?;
    let exp = py
        .detach(move || baselines::random_variance_experiment(n, s, replicates, seed, &Budget::default()))
        .py()?;
    Ok(exp.records.iter().map(|r| r.v).collect())
}

/// Bridge path values `B(k / M)`, `k = 0..=M`.
#[pyfunction]
fn bridge_path(m: usize, seed: u64, index: u64) -> PyResult<Vec<f64>> {
    Ok(baselines::bridge_path(m, seed, index).py()?.values().to_vec())
}

/// Bridge functional `N / M sum (B(t + S) - B(t))^2` for `paths` independent paths.
#[pyfunction]
fn bridge_functionals(m: usize, s: &str, n: usize, paths: u64, seed: u64) -> PyResult<Vec<f64>> {
    let s = dyadic(s)?;
    (0..paths)
        .map(|i| baselines::bridge_functional(&baselines::bridge_path(m, seed, i)?, s, n))
        .collect::<numvar_core::Result<Vec<_>>>()
        .py()
}

/// `[(q, max_S V(q, S, alpha))]` over convergent denominators `q <= max_n`.
#[pyfunction]
fn kronecker_max(alpha_spec: &str, s_grid: &str, max_n: usize) -> PyResult<Vec<(usize, f64)>> {
    let grid = scan::parse_s_grid(s_grid).py()?;
    let report = baselines::kronecker_experiment(alpha(alpha_spec)?, &grid, max_n).py()?;
    Ok(report.records.iter().map(|r| (r.n, r.max_v)).collect())
}

/// Convergents `(p, q)` of `alpha`.
#[pyfunction]
#[pyo3(signature = (alpha_spec, count = 20))]
fn convergents(alpha_spec: &str, count: usize) -> PyResult<Vec<(u128, u128)>> {
    Ok(numvar_core::continued_fraction_convergents(alpha(alpha_spec)?, count).pairs)
}

#[pymodule]
fn numvar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyPointSet>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(additive_energy, m)?)?;
    m.add_function(wrap_pyfunction!(rep_table, m)?)?;
    m.add_function(wrap_pyfunction!(gcd_sum, m)?)?;
    m.add_function(wrap_pyfunction!(tau_moment_sum, m)?)?;
    m.add_function(wrap_pyfunction!(divisibility_check, m)?)?;
    m.add_function(wrap_pyfunction!(congruence_solution_count, m)?)?;
    m.add_function(wrap_pyfunction!(random_variances, m)?)?;
    m.add_function(wrap_pyfunction!(bridge_path, m)?)?;
    m.add_function(wrap_pyfunction!(bridge_functionals, m)?)?;
    m.add_function(wrap_pyfunction!(kronecker_max, m)?)?;
    m.add_function(wrap_pyfunction!(convergents, m)?)?;
    Ok(())
}
