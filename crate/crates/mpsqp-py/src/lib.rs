//! Python bindings (`pympsqp`).
//!
//! Validation errors raise `ValueError`, numerical failures `RuntimeError`.
//! Matrices cross the boundary as nested lists of complex numbers.

use mpsqp::channel::{channel_spectrum, choi_cp_check, spectrum_feasibility, transfer_matrix, QuantumChannel};
use mpsqp::excitations::{normal_dispersion, one_particle_modes, Series};
use mpsqp::glauber::{correlation_check, simulate_ensemble, tau_table};
use mpsqp::linalg::CMat;
use mpsqp::localization::{family_channel, lambda_schedule, xi_metric, DisorderFamily};
use mpsqp::mps::{aklt_tensor, canonicalize, pauli_tensor, state_vector, MpsTensor};
use mpsqp::parent::ed_report;
use mpsqp::{Error, ErrorKind};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Validation => PyValueError::new_err(format!("[{}] {e}", e.code())),
        ErrorKind::Numerical => PyRuntimeError::new_err(format!("[{}] {e}", e.code())),
    }
}

fn to_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMat, Error> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if r == 0 || rows.iter().any(|x| x.len() != c) {
        return Err(Error::Shape("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Translation-invariant MPS tensor `{A^i}`.
#[pyclass(name = "Mps", frozen)]
pub struct PyMps {
    inner: MpsTensor,
}

#[pymethods]
impl PyMps {
    /// From a list of `D×D` complex matrices, one per physical index.
    #[new]
    fn new(matrices: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let mats = matrices.iter().map(|m| from_rows(m)).collect::<Result<Vec<_>, _>>().map_err(py_err)?;
        Ok(PyMps { inner: MpsTensor::new(mats).map_err(py_err)? })
    }

    #[staticmethod]
    fn pauli(p: [f64; 4]) -> Self {
        PyMps { inner: pauli_tensor(p) }
    }

    #[staticmethod]
    #[pyo3(signature = (lam = 2.0 / 3.0))]
    fn aklt(lam: f64) -> Self {
        PyMps { inner: aklt_tensor(lam) }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyMps { inner: mpsqp::io::parse_mps(text).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&mpsqp::io::MpsFile::from_tensor(&self.inner)).map_err(|e| py_err(e.into()))
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn bond(&self) -> usize {
        self.inner.bond
    }

    fn matrices(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.mats.iter().map(to_rows).collect()
    }

    /// Canonical gauge and the fixed point `ρ`.
    fn canonical(&self) -> PyResult<(PyMps, Vec<Vec<Complex64>>)> {
        let (g, rho) = canonicalize(&self.inner).map_err(py_err)?;
        Ok((PyMps { inner: g }, to_rows(&rho)))
    }

    fn channel(&self) -> PyChannel {
        PyChannel { inner: transfer_matrix(&self.inner) }
    }

    /// Amplitudes on a ring of `n` sites, site 0 most significant.
    fn state_vector(&self, n: usize) -> PyResult<Vec<Complex64>> {
        Ok(state_vector(&self.inner, n).map_err(py_err)?.amps)
    }

    /// Lowest `count` levels `(energy, momentum)` of the parent Hamiltonian.
    #[pyo3(signature = (n, l, count = 4))]
    fn parent_levels(&self, n: usize, l: usize, count: usize) -> PyResult<Vec<(f64, f64)>> {
        let r = ed_report(&self.inner, n, l, count).map_err(py_err)?;
        Ok(r.levels.iter().map(|lv| (lv.energy, lv.momentum)).collect())
    }
}

/// Superoperator on `D×D` matrices in the row-major vectorization.
#[pyclass(name = "Channel", frozen)]
pub struct PyChannel {
    inner: QuantumChannel,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(dim: usize, matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let m = from_rows(&matrix).map_err(py_err)?;
        Ok(PyChannel { inner: QuantumChannel::from_matrix(dim, m).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyChannel { inner: mpsqp::io::parse_channel(text).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(&self.inner.matrix)
    }

    /// Eigenvalues sorted by modulus, descending.
    fn spectrum(&self) -> Vec<Complex64> {
        channel_spectrum(&self.inner).eigenvalues
    }

    fn is_normal_unital(&self) -> bool {
        channel_spectrum(&self.inner).is_normal_unital()
    }

    /// Smallest eigenvalue of the Choi matrix.
    fn choi_min_eigenvalue(&self) -> f64 {
        choi_cp_check(&self.inner).min_eigenvalue
    }

    /// `(epsilon, energy)` of the one-particle modes at momentum `k`.
    #[pyo3(signature = (k, l, resummed = true))]
    fn modes(&self, k: f64, l: usize, resummed: bool) -> PyResult<Vec<(f64, f64)>> {
        let series = if resummed { Series::Resummed } else { Series::Truncated };
        let modes = one_particle_modes(&self.inner, k, l, series).map_err(py_err)?;
        Ok(modes.iter().map(|m| (m.epsilon, m.energy)).collect())
    }
}

/// `E = 2L − 2 Re 1/(1 − e^{i(k−φ)}|λ|)`
#[pyfunction]
fn dispersion_energy(abs: f64, phi: f64, k: f64, l: usize) -> PyResult<f64> {
    Ok(normal_dispersion(abs, phi, k, l).map_err(py_err)?.energy)
}

/// Ξ along the schedule `λ(t)` for the disordered AKLT family.
#[pyfunction]
#[pyo3(signature = (w, t, n = 100))]
fn xi_curve(w: f64, t: Vec<f64>, n: usize) -> PyResult<Vec<f64>> {
    let fam = DisorderFamily::aklt(w);
    t.iter()
        .map(|&tv| {
            let lam = lambda_schedule(tv)?;
            xi_metric(&family_channel(&fam, lam)?, n)
        })
        .collect::<Result<_, _>>()
        .map_err(py_err)
}

/// `(feasible, margin, agrees_with_choi)` for a clock spectrum.
#[pyfunction]
fn cp_feasibility(moduli: Vec<f64>, kappas: Vec<i64>, d: usize) -> PyResult<(bool, f64, bool)> {
    let r = spectrum_feasibility(&moduli, &kappas, d).map_err(py_err)?;
    Ok((r.feasible, r.margin, r.agrees_with_choi))
}

/// Hop coefficient of the Glauber rate table at inverse temperature `beta`.
#[pyfunction]
fn glauber_hop(beta: f64) -> PyResult<f64> {
    Ok(tau_table(beta).map_err(py_err)?.hop())
}

/// `(lambda_hat, std_error, rms_z)` from a single-particle ensemble.
#[pyfunction]
#[pyo3(signature = (beta, sites, horizon, trajectories, seed = 0, grid_points = 41))]
fn glauber_fit(beta: f64, sites: usize, horizon: f64, trajectories: usize, seed: u64, grid_points: usize) -> PyResult<(f64, f64, f64)> {
    let run = || -> Result<(f64, f64, f64), Error> {
        if grid_points < 3 {
            return Err(Error::Invalid("grid_points must be at least 3".into()));
        }
        let table = tau_table(beta)?;
        let grid: Vec<f64> = (0..grid_points).map(|i| horizon * i as f64 / (grid_points - 1) as f64).collect();
        let ens = simulate_ensemble(&table, sites, horizon, &grid, trajectories, seed)?;
        let r = correlation_check(&ens, table.hop())?;
        Ok((r.lambda_hat, r.std_error, r.rms_z))
    };
    run().map_err(py_err)
}

#[pymodule]
fn pympsqp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMps>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(dispersion_energy, m)?)?;
    m.add_function(wrap_pyfunction!(xi_curve, m)?)?;
    m.add_function(wrap_pyfunction!(cp_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(glauber_hop, m)?)?;
    m.add_function(wrap_pyfunction!(glauber_fit, m)?)?;
    Ok(())
}
