//! Python bindings for `sepkit`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sepkit::decomp::{self, FourierFamily, SeparableDecomposition};
use sepkit::matkit::{CMatrix, SubspaceBasis, C64};
use sepkit::sepcrit::{self, SamplingBudget, SeparabilityReport, Tolerances};
use sepkit::statefab::{self, BipartiteState, Family};

create_exception!(sepkit, SepkitError, PyValueError);

fn err(e: sepkit::Error) -> PyErr {
    SepkitError::new_err(e.to_string())
}

fn rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// A validated bipartite density matrix.
#[pyclass(name = "State", module = "sepkit", frozen)]
pub struct PyState {
    inner: BipartiteState,
}

#[pymethods]
impl PyState {
    /// Named family, e.g. `State.family("rho_a", 0.5)` or
    /// `State.family("eps_mix(rho_a(0.5),0.05)")`.
    #[staticmethod]
    #[pyo3(signature = (name, param=None))]
    fn family(name: &str, param: Option<f64>) -> PyResult<Self> {
        let f = if name.contains('(') {
            name.parse::<Family>()
        } else {
            Family::from_name(name, param)
        };
        Ok(Self { inner: f.and_then(|f| f.build()).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (dim_a, dim_b, matrix, label=None))]
    fn from_matrix(dim_a: usize, dim_b: usize, matrix: Vec<Vec<C64>>, label: Option<String>) -> PyResult<Self> {
        let n = matrix.len();
        let data: Vec<C64> = matrix.into_iter().flatten().collect();
        let m = CMatrix::new(n, if n == 0 { 0 } else { data.len() / n }, data).map_err(err)?;
        let s = BipartiteState::new(dim_a, dim_b, m).map_err(err)?;
        Ok(Self { inner: match label { Some(l) => s.with_label(l), None => s } })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: statefab::read_state(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        statefab::write_state(&self.inner)
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    #[getter]
    fn label(&self) -> Option<String> {
        self.inner.label().map(str::to_owned)
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        rows(self.inner.rho())
    }

    fn partial_transpose(&self) -> Vec<Vec<C64>> {
        rows(&self.inner.partial_transpose())
    }

    /// `(1 − eps)·ρ + eps·I/d`.
    fn eps_mix(&self, eps: f64) -> PyResult<Self> {
        Ok(Self { inner: statefab::eps_mix(&self.inner, eps).map_err(err)? })
    }

    /// The partial transpose as a state.
    fn pt_dual(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.pt_dual().map_err(err)? })
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.inner.dims();
        format!("State({}, dims={a}x{b})", self.inner.label().unwrap_or("unlabelled"))
    }
}

/// Outcome of `analyze`.
#[pyclass(name = "Report", module = "sepkit", frozen)]
pub struct PyReport {
    inner: SeparabilityReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.as_str()
    }

    #[getter]
    fn min_eig_pt(&self) -> f64 {
        self.inner.min_eig_pt
    }

    #[getter]
    fn rank_rho(&self) -> usize {
        self.inner.rank_rho
    }

    #[getter]
    fn rank_pt(&self) -> usize {
        self.inner.rank_pt
    }

    #[getter]
    fn witness(&self) -> Option<Vec<C64>> {
        self.inner.witness.clone()
    }

    /// `"rho"` or `"rho_T2"`: the range the witness lies in.
    #[getter]
    fn witness_range(&self) -> Option<String> {
        self.inner.witness_range.map(|w| serde_json::to_value(w).expect("enum").as_str().unwrap_or_default().to_owned())
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("report serialises")
    }

    fn __repr__(&self) -> String {
        format!("Report(verdict={}, min_eig_pt={:.3e})", self.inner.verdict, self.inner.min_eig_pt)
    }
}

/// Finite separable decomposition.
#[pyclass(name = "Decomposition", module = "sepkit", frozen)]
pub struct PyDecomposition {
    inner: SeparableDecomposition,
}

#[pymethods]
impl PyDecomposition {
    #[staticmethod]
    fn fourier(which: &str, n_points: usize) -> PyResult<Self> {
        let which: FourierFamily = which.parse().map_err(err)?;
        Ok(Self { inner: decomp::fourier_decomposition(which, n_points).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: decomp::read_decomposition(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        decomp::write_decomposition(&self.inner)
    }

    /// `[(weight, phi, chi), ...]`.
    fn terms(&self) -> Vec<(f64, Vec<C64>, Vec<C64>)> {
        self.inner.terms().iter().map(|t| (t.weight, t.phi.clone(), t.chi.clone())).collect()
    }

    /// `(verified, max_deviation)`.
    #[pyo3(signature = (state, tol=1e-10))]
    fn verify(&self, state: &PyState, tol: f64) -> PyResult<(bool, f64)> {
        let v = decomp::verify_decomposition(&state.inner, &self.inner, tol).map_err(err)?;
        Ok((v.verified, v.deviation))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// `(is_ppt, min_eig, eigvec)` for the partial transpose.
#[pyfunction]
#[pyo3(signature = (state, tol_eig=1e-9))]
fn ppt_check(state: &PyState, tol_eig: f64) -> (bool, f64, Vec<C64>) {
    let p = sepcrit::ppt_check(&state.inner, tol_eig);
    (p.is_ppt, p.min_eig, p.eigvec)
}

#[pyfunction]
#[pyo3(signature = (state, seed=42, samples=25, tol_eig=1e-9, tol_rank=1e-8, tol_member=1e-7))]
fn analyze(
    py: Python<'_>,
    state: &PyState,
    seed: u64,
    samples: usize,
    tol_eig: f64,
    tol_rank: f64,
    tol_member: f64,
) -> PyResult<PyReport> {
    let tol = Tolerances { tol_eig, tol_rank, tol_member };
    let budget = SamplingBudget { samples_per_param: samples, seed, ..SamplingBudget::default() };
    let s = state.inner.clone();
    let inner = py.detach(move || sepcrit::analyze(&s, &tol, &budget)).map_err(err)?;
    Ok(PyReport { inner })
}

/// Orthonormal basis of the range of `ρ` (or of `ρ^T2` with `pt=True`).
#[pyfunction]
#[pyo3(signature = (state, pt=false, tol_rank=1e-8))]
fn range_basis(state: &PyState, pt: bool, tol_rank: f64) -> Vec<Vec<C64>> {
    let m = if pt { state.inner.partial_transpose() } else { state.inner.rho().clone() };
    sepcrit::range_of(&m, tol_rank).vectors().to_vec()
}

/// Product vectors `(phi, chi)` in the span of orthonormal `basis`.
#[pyfunction]
#[pyo3(signature = (basis, dim_a, dim_b, seed=42, samples=25))]
fn product_vectors_in_subspace(
    basis: Vec<Vec<C64>>,
    dim_a: usize,
    dim_b: usize,
    seed: u64,
    samples: usize,
) -> PyResult<Vec<(Vec<C64>, Vec<C64>)>> {
    let v = SubspaceBasis::from_orthonormal(dim_a * dim_b, basis).map_err(err)?;
    let budget = SamplingBudget { samples_per_param: samples, seed, ..SamplingBudget::default() };
    let set = sepcrit::product_vectors_in_subspace(&v, dim_a, dim_b, &budget).map_err(err)?;
    Ok(set.samples.into_iter().map(|p| (p.phi, p.chi)).collect())
}

/// `(phi, conj(chi))`.
#[pyfunction]
fn partial_conjugate(phi: Vec<C64>, chi: Vec<C64>) -> (Vec<C64>, Vec<C64>) {
    let chi = chi.iter().map(|z| z.conj()).collect();
    (phi, chi)
}

#[pyfunction]
fn ensemble_in_range(state: &PyState, vectors: Vec<Vec<C64>>) -> Vec<bool> {
    decomp::ensemble_in_range(&state.inner, &vectors)
}

#[pyfunction]
fn family_names() -> Vec<&'static str> {
    statefab::FAMILY_NAMES.to_vec()
}

/// Adds the classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SepkitError", m.py().get_type::<SepkitError>())?;
    m.add_class::<PyState>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_function(wrap_pyfunction!(ppt_check, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(range_basis, m)?)?;
    m.add_function(wrap_pyfunction!(product_vectors_in_subspace, m)?)?;
    m.add_function(wrap_pyfunction!(partial_conjugate, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_in_range, m)?)?;
    m.add_function(wrap_pyfunction!(family_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "sepkit")]
fn sepkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
