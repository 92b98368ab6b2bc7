//! Python module `rydberg_energy`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use rydberg_energy::circuit::{build_qft_with, build_qpe, Circuit, OpaqueBlock, QftOptions};
use rydberg_energy::classical::{fft_energy, find_crossover, MachineCatalog};
use rydberg_energy::compiler::{compile, CostMode};
use rydberg_energy::energetics::{golden_cells, reproduce_qpe_experiment, run_energy, MeasuredRun, GoldenTable};
use rydberg_energy::hwmodel::HardwareProfile;
use rydberg_energy::layout::{simulate_transports, SimulationConfig, TransportPolicy};
use rydberg_energy::scaling::{fit_exponent, ScalingModel, ScalingOptions};
use rydberg_energy::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Serializable value → plain Python objects via the json module.
fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_mode(mode: Option<&str>, p: &HardwareProfile) -> PyResult<CostMode> {
    match mode {
        None => Ok(p.default_mode()),
        Some(m) => m.parse().map_err(err),
    }
}

#[pyclass(name = "Profile", module = "rydberg_energy", frozen)]
struct PyProfile {
    inner: HardwareProfile,
}

#[pymethods]
impl PyProfile {
    /// The built-in profile.
    #[new]
    fn new() -> Self {
        Self { inner: HardwareProfile::builtin() }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: HardwareProfile::load(path).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: HardwareProfile::from_toml_str(text).map_err(err)? })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    /// Power at the source in watts (what gets billed).
    fn power(&self, source: &str) -> PyResult<f64> {
        Ok(self.inner.billing_power(source).map_err(err)?.0)
    }

    fn power_at_target(&self, source: &str) -> PyResult<f64> {
        Ok(self.inner.source(source).map_err(err)?.power_at_target().0)
    }

    fn sources(&self) -> Vec<String> {
        self.inner.sources.keys().cloned().collect()
    }

    fn __repr__(&self) -> String {
        format!("Profile(sources={:?})", self.sources())
    }
}

#[pyclass(name = "Circuit", module = "rydberg_energy", frozen)]
struct PyCircuit {
    inner: Circuit,
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Circuit::from_text(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn gate_counts(&self) -> std::collections::BTreeMap<String, usize> {
        self.inner.gate_count_summary().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn inverse(&self) -> Self {
        Self { inner: self.inner.inverse() }
    }

    fn __repr__(&self) -> String {
        format!("Circuit(n_qubits={}, gates={})", self.inner.n_qubits(), self.inner.len())
    }
}

fn profile_or_default(p: Option<&PyProfile>) -> HardwareProfile {
    p.map(|p| p.inner.clone()).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (n, swaps = false, phase_correction = false))]
fn build_qft(n: usize, swaps: bool, phase_correction: bool) -> PyResult<PyCircuit> {
    let opts = QftOptions { final_swaps: swaps, exact_phase_correction: phase_correction };
    Ok(PyCircuit { inner: build_qft_with(n, opts).map_err(err)? })
}

/// Phase estimation with zero-cost controlled-U placeholders.
#[pyfunction]
#[pyo3(signature = (t, phase_register = 1))]
fn build_qpe_skeleton(t: usize, phase_register: usize) -> PyResult<PyCircuit> {
    let u = OpaqueBlock::new("U", Vec::new());
    Ok(PyCircuit { inner: build_qpe(t, phase_register, Some(&u)).map_err(err)? })
}

/// Per-source on-times and wall clock, in seconds.
#[pyfunction(name = "compile")]
#[pyo3(signature = (circuit, profile = None, mode = None))]
fn compile_py<'py>(
    py: Python<'py>,
    circuit: &PyCircuit,
    profile: Option<&PyProfile>,
    mode: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = profile_or_default(profile);
    let s = compile(&circuit.inner, &p, parse_mode(mode, &p)?).map_err(err)?;
    to_py(py, &s.duration())
}

/// Ledger as {"categories": {category: {source: J}}, "total_J": J}.
#[pyfunction(name = "run_energy")]
#[pyo3(signature = (circuit, shots = 1, profile = None, mode = None))]
fn run_energy_py<'py>(
    py: Python<'py>,
    circuit: &PyCircuit,
    shots: u64,
    profile: Option<&PyProfile>,
    mode: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = profile_or_default(profile);
    let ledger = run_energy(&circuit.inner, &p, shots, parse_mode(mode, &p)?).map_err(err)?;
    to_py(py, &ledger.to_json())
}

/// The measured H2 run: ledgers plus the published-table cells.
#[pyfunction]
#[pyo3(signature = (profile = None))]
fn reproduce<'py>(py: Python<'py>, profile: Option<&PyProfile>) -> PyResult<Bound<'py, PyAny>> {
    let p = profile_or_default(profile);
    let rep = reproduce_qpe_experiment(&MeasuredRun::h2_experiment(), &p).map_err(err)?;
    let cells: Vec<_> = golden_cells(&p, GoldenTable::All)
        .map_err(err)?
        .into_iter()
        .map(|c| {
            serde_json::json!({
                "table": c.table, "row": c.row, "column": c.column,
                "published": c.published, "computed": c.computed, "pass": c.passes(),
            })
        })
        .collect();
    to_py(
        py,
        &serde_json::json!({
            "per_shot": rep.per_shot.to_json(),
            "total": rep.ledger.to_json(),
            "trap_time_s": rep.trap_time.0,
            "cells": cells,
        }),
    )
}

/// Component breakdown rows for each n.
#[pyfunction]
#[pyo3(signature = (ns, profile = None, shots = 1, transport_extends_trap_time = false))]
fn scaling_curve<'py>(
    py: Python<'py>,
    ns: Vec<usize>,
    profile: Option<&PyProfile>,
    shots: u64,
    transport_extends_trap_time: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = profile_or_default(profile);
    let opts = ScalingOptions { shots, transport_extends_trap_time, ..ScalingOptions::for_profile(&p) };
    let curve = ScalingModel::new(&p, opts).map_err(err)?.curve(&ns).map_err(err)?;
    to_py(py, &curve.rows)
}

#[pyfunction(name = "fit_exponent")]
fn fit_exponent_py(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    fit_exponent(&pts).map_err(err)
}

#[pyfunction(name = "fft_energy")]
#[pyo3(signature = (n, machine = "jedi"))]
fn fft_energy_py(n: usize, machine: &str) -> PyResult<f64> {
    let cat = MachineCatalog::builtin();
    Ok(fft_energy(cat.get(machine).map_err(err)?, n).map_err(err)?.0)
}

#[pyfunction]
#[pyo3(signature = (machine = "jedi", n_max = 60, profile = None))]
fn crossover(machine: &str, n_max: usize, profile: Option<&PyProfile>) -> PyResult<Option<usize>> {
    let p = profile_or_default(profile);
    let cat = MachineCatalog::builtin();
    find_crossover(&p, ScalingOptions::for_profile(&p), cat.get(machine).map_err(err)?, n_max).map_err(err)
}

#[pyfunction]
fn mean_pair_distance(n: usize) -> f64 {
    rydberg_energy::layout::mean_pair_distance(n)
}

/// Summary of a seeded transport simulation.
#[pyfunction(name = "simulate_transports")]
#[pyo3(signature = (n, gates, policy = "move_adjacent_stay", blockade_radius = 1, seed = 42))]
fn simulate_transports_py<'py>(
    py: Python<'py>,
    n: usize,
    gates: usize,
    policy: &str,
    blockade_radius: u32,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let policy: TransportPolicy = policy.parse().map_err(err)?;
    let cfg = SimulationConfig { policy, blockade_radius, ..SimulationConfig::new(n, gates, seed) };
    let slope = HardwareProfile::builtin().transport.transports_per_gate_slope;
    let res = py.detach(|| simulate_transports(&cfg, slope)).map_err(err)?;
    to_py(py, &res.summary)
}

#[pymodule]
#[pyo3(name = "rydberg_energy")]
fn rydberg_energy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(build_qft, m)?)?;
    m.add_function(wrap_pyfunction!(build_qpe_skeleton, m)?)?;
    m.add_function(wrap_pyfunction!(compile_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_energy_py, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_curve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent_py, m)?)?;
    m.add_function(wrap_pyfunction!(fft_energy_py, m)?)?;
    m.add_function(wrap_pyfunction!(crossover, m)?)?;
    m.add_function(wrap_pyfunction!(mean_pair_distance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_transports_py, m)?)?;
    Ok(())
}
