use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quadrics::families;
use quadrics::lemma::{self, RationalLinear};
use quadrics::mesh;
use quadrics::report::{self, RunConfig};
use quadrics::spectral;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(module = "pyquadrics", frozen)]
pub struct CliffordSpec {
    inner: families::CliffordSpec,
}

#[pymethods]
impl CliffordSpec {
    #[new]
    fn new(n: usize, k: usize, r: f64) -> PyResult<Self> {
        let inner = families::CliffordSpec::new(n, k, r);
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn minimal(n: usize, k: usize) -> PyResult<Self> {
        Self::new(n, k, families::CliffordSpec::minimal(n, k).r)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    fn principal_curvatures(&self) -> (f64, f64) {
        self.inner.principal_curvatures()
    }

    fn mean_curvature(&self) -> f64 {
        self.inner.mean_curvature()
    }

    fn norm_a_sq(&self) -> f64 {
        self.inner.norm_a_sq()
    }

    fn jacobi_threshold(&self) -> f64 {
        self.inner.jacobi_threshold()
    }

    #[pyo3(signature = (j_max=None))]
    fn index_counts(&self, j_max: Option<usize>) -> PyResult<IndexReport> {
        let inner = spectral::index_counts(&self.inner, j_max).map_err(value_error)?;
        Ok(IndexReport { inner })
    }

    fn test_constants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        index_test_constants(py, self.inner.mean_curvature(), self.inner.norm_a_sq(), self.inner.n)
    }

    /// Finite-difference check on a `grid x grid` torus; `n = 2` only.
    #[pyo3(signature = (grid=32))]
    fn mesh_check<'py>(&self, py: Python<'py>, grid: usize) -> PyResult<Bound<'py, PyDict>> {
        let study = mesh::convergence_study(&self.inner, grid).map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("grid", grid)?;
        d.set_item("constant_mode", study.coarse.constant_mode)?;
        d.set_item("max_rel_error", study.coarse.max_rel_error)?;
        d.set_item("fitted_c", study.coarse.fitted_c)?;
        d.set_item("ratios", study.ratios)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("CliffordSpec(n={}, k={}, r={})", self.inner.n, self.inner.k, self.inner.r)
    }
}

#[pyclass(module = "pyquadrics", frozen)]
pub struct UmbilicalSpec {
    inner: families::UmbilicalSpec,
}

#[pymethods]
impl UmbilicalSpec {
    #[new]
    fn new(v: Vec<f64>, c: f64) -> PyResult<Self> {
        let inner = families::UmbilicalSpec::new(v, c);
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn principal_curvature(&self) -> f64 {
        self.inner.principal_curvature()
    }

    fn mean_curvature(&self) -> f64 {
        self.inner.mean_curvature()
    }

    fn norm_a_sq(&self) -> f64 {
        self.inner.norm_a_sq()
    }
}

#[pyclass(module = "pyquadrics", frozen)]
pub struct IndexReport {
    inner: spectral::IndexReport,
}

#[pymethods]
impl IndexReport {
    #[getter]
    fn weak_index(&self) -> u64 {
        self.inner.weak_index
    }

    #[getter]
    fn strong_index(&self) -> u64 {
        self.inner.strong_index
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[getter]
    fn j_max(&self) -> usize {
        self.inner.j_max
    }

    /// `(p, q, eigenvalue, multiplicity)` per negative line.
    #[getter]
    fn negative_lines(&self) -> Vec<(usize, usize, f64, u64)> {
        lines(&self.inner.negative_lines)
    }

    #[getter]
    fn kernel_lines(&self) -> Vec<(usize, usize, f64, u64)> {
        lines(&self.inner.kernel_lines)
    }

    fn __repr__(&self) -> String {
        format!(
            "IndexReport(weak_index={}, strong_index={})",
            self.inner.weak_index, self.inner.strong_index
        )
    }
}

fn lines(ls: &[spectral::SpectralLine]) -> Vec<(usize, usize, f64, u64)> {
    ls.iter()
        .map(|l| (l.label.0, l.label.1, l.eigenvalue, l.multiplicity))
        .collect()
}

#[pyfunction]
fn index_test_constants<'py>(py: Python<'py>, h: f64, norm_a_sq: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let t = spectral::index_test_constants(h, norm_a_sq, n).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("alpha_plus", t.alpha_plus)?;
    d.set_item("alpha_minus", t.alpha_minus)?;
    d.set_item("mu_plus", t.mu_plus)?;
    d.set_item("mu_minus", t.mu_minus)?;
    d.set_item("jac_plus", t.jac_plus)?;
    d.set_item("jac_minus", t.jac_minus)?;
    d.set_item("disc_d", t.disc_d)?;
    Ok(d)
}

#[pyclass(module = "pyquadrics", frozen)]
pub struct RunResult {
    #[pyo3(get)]
    exit_code: i32,
    #[pyo3(get)]
    json: String,
    #[pyo3(get)]
    summary: String,
    #[pyo3(get)]
    artifacts: Vec<(String, String)>,
}

/// Runs a command from `key=value` options, the same keys as the config file.
#[pyfunction]
#[pyo3(signature = (command, options=None))]
fn run(command: &str, options: Option<Vec<(String, String)>>) -> PyResult<RunResult> {
    let mut pairs = options.unwrap_or_default();
    pairs.push(("command".into(), command.into()));
    let config = RunConfig::from_sources(None, &pairs).map_err(value_error)?;
    let out = report::run(&config).map_err(value_error)?;
    Ok(RunResult {
        exit_code: out.exit_code(),
        json: out.report.to_json(),
        summary: out.report.summary(),
        artifacts: out.artifacts.into_iter().map(|a| (a.name, a.contents)).collect(),
    })
}

/// Exact rank test for `q_i = prod_{j != i} (b_j X + c_j)`; factors as `(b, c)`.
#[pyfunction]
fn factors_independent(factors: Vec<(i64, i64)>) -> PyResult<bool> {
    let ps: Vec<RationalLinear> = factors.iter().map(|&(b, c)| RationalLinear::from_ints(b, c)).collect();
    let qs = lemma::build_q(&ps).map_err(value_error)?;
    Ok(lemma::independence_verdict(&qs).independent())
}

/// Whether the curvature identity holds; inputs are rationalized first.
#[pyfunction]
fn curvature_identity_holds(lam: f64, groups: Vec<(f64, usize)>, d: f64) -> PyResult<bool> {
    let lam = lemma::rationalize(lam).map_err(value_error)?;
    let d = lemma::rationalize(d).map_err(value_error)?;
    let groups = groups
        .into_iter()
        .map(|(l, m)| lemma::rationalize(l).map(|q| (q, m)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_error)?;
    let verdict = lemma::curvature_identity(&lam, &groups, &d).map_err(value_error)?;
    Ok(verdict.holds())
}

#[pymodule]
fn pyquadrics(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CliffordSpec>()?;
    m.add_class::<UmbilicalSpec>()?;
    m.add_class::<IndexReport>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(index_test_constants, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(factors_independent, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_identity_holds, m)?)?;
    m.add("SCHEMA", report::SCHEMA)?;
    Ok(())
}
