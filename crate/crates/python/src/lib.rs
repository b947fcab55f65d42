//! Python bindings: the `rppg` extension module.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rppg_core::bench::{emit_report, evaluate as run_evaluate, BenchConfig, ReportFormat};
use rppg_core::dataset::classify_rgb;
use rppg_core::methods::{run_method as run_core_method, MethodConfig, MethodId, MethodInput};
use rppg_core::metrics::{bland_altman as core_bland_altman, MetricSet};
use rppg_core::synth::{generate_trace as synth_trace, SynthSpec};
use rppg_core::{signal::DEFAULT_BAND, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Per-frame mean skin colour.
#[pyclass(name = "RgbTrace", module = "rppg", frozen)]
struct PyRgbTrace {
    inner: rppg_core::RgbTrace,
}

#[pymethods]
impl PyRgbTrace {
    #[new]
    fn new(samples: Vec<[f64; 3]>, fs: f64) -> PyResult<Self> {
        let inner = rppg_core::RgbTrace::new(samples, fs).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs()
    }

    #[getter]
    fn samples(&self) -> Vec<[f64; 3]> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn subject_id(&self) -> String {
        self.inner.subject_id().to_string()
    }

    fn scaled(&self, gain: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.scaled(gain).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RgbTrace(len={}, fs={})", self.inner.len(), self.inner.fs())
    }
}

/// Blood-volume-pulse waveform.
#[pyclass(name = "BvpSignal", module = "rppg", frozen)]
struct PyBvpSignal {
    inner: rppg_core::BvpSignal,
}

#[pymethods]
impl PyBvpSignal {
    #[new]
    #[pyo3(signature = (samples, fs, method_tag = "external".to_string()))]
    fn new(samples: Vec<f64>, fs: f64, method_tag: String) -> PyResult<Self> {
        let inner = rppg_core::BvpSignal::new(samples, fs, method_tag).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    #[getter]
    fn method_tag(&self) -> String {
        self.inner.method_tag.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "BvpSignal(len={}, fs={}, method={})",
            self.inner.len(),
            self.inner.fs,
            self.inner.method_tag
        )
    }
}

/// Synthetic trace and its ground-truth pulse.
#[pyfunction]
#[pyo3(signature = (hr_bpm = 72.0, seed = 0, noisy = false, duration_s = 30.0, fs = 30.0))]
fn generate_trace(hr_bpm: f64, seed: u64, noisy: bool, duration_s: f64, fs: f64) -> PyResult<(PyRgbTrace, PyBvpSignal)> {
    let base = if noisy {
        SynthSpec::noisy(hr_bpm, seed)
    } else {
        SynthSpec::clean(hr_bpm, seed)
    };
    let spec = SynthSpec { duration_s, fs, ..base };
    let (trace, truth) = synth_trace(&spec).map_err(py_err)?;
    Ok((PyRgbTrace { inner: trace }, PyBvpSignal { inner: truth.pulse }))
}

/// Runs a trace-based method (GREEN, ICA, PCA, CHROM, PBV, POS, LGI).
#[pyfunction]
fn run_method(method: &str, trace: &PyRgbTrace) -> PyResult<PyBvpSignal> {
    let id: MethodId = method.parse().map_err(PyValueError::new_err)?;
    let bvp = run_core_method(id, MethodInput::Trace(&trace.inner), &MethodConfig::default()).map_err(py_err)?;
    Ok(PyBvpSignal { inner: bvp })
}

/// Windowed FFT heart rate; `None` where a window has no estimate.
#[pyfunction]
#[pyo3(signature = (bvp, window_s = 10.0))]
fn hr_fft(bvp: &PyBvpSignal, window_s: f64) -> PyResult<Vec<Option<f64>>> {
    let s = rppg_core::hr_fft(&bvp.inner, window_s, DEFAULT_BAND).map_err(py_err)?;
    Ok(s.values())
}

/// Windowed peak-interval heart rate; `None` where too few peaks were found.
#[pyfunction]
#[pyo3(signature = (bvp, window_s = 10.0))]
fn hr_peaks(bvp: &PyBvpSignal, window_s: f64) -> PyResult<Vec<Option<f64>>> {
    let s = rppg_core::hr_peaks(&bvp.inner, window_s, DEFAULT_BAND).map_err(py_err)?;
    Ok(s.values())
}

/// MAE, RMSE, MAPE (%) and Pearson r of paired heart rates.
#[pyfunction]
fn metrics<'py>(py: Python<'py>, pred: Vec<f64>, truth: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let m = MetricSet::compute(&pred, &truth, &[]).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mae", m.mae_bpm)?;
    d.set_item("rmse", m.rmse_bpm)?;
    d.set_item("mape", m.mape_pct)?;
    d.set_item("pearson", m.pearson_r)?;
    d.set_item("n", m.n_windows)?;
    Ok(d)
}

#[pyfunction]
fn bland_altman<'py>(py: Python<'py>, pred: Vec<f64>, truth: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let ba = core_bland_altman(&pred, &truth).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("bias", ba.bias)?;
    d.set_item("loa_lo", ba.loa_lo)?;
    d.set_item("loa_hi", ba.loa_hi)?;
    d.set_item("pairs", ba.pairs)?;
    Ok(d)
}

/// Fitzpatrick type from a mean sRGB skin colour (0-255 per channel).
#[pyfunction]
fn classify_fitzpatrick<'py>(py: Python<'py>, rgb: [f64; 3]) -> PyResult<Bound<'py, PyDict>> {
    let f = classify_rgb(rgb).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("type", f.skin_type)?;
    d.set_item("ita_degrees", f.ita_degrees)?;
    d.set_item("lab", f.mean_skin_lab)?;
    Ok(d)
}

/// Runs a benchmark config file and returns the canonical report JSON.
/// Report files are written too when `output_dir` is given.
#[pyfunction]
#[pyo3(signature = (config_path, output_dir = None))]
fn evaluate(py: Python<'_>, config_path: &str, output_dir: Option<&str>) -> PyResult<String> {
    let cfg = BenchConfig::from_file(config_path.as_ref()).map_err(py_err)?;
    let report = py.detach(|| run_evaluate(&cfg)).map_err(py_err)?;
    if let Some(dir) = output_dir {
        emit_report(&report, dir.as_ref(), &ReportFormat::ALL).map_err(py_err)?;
    }
    Ok(report.canonical_json())
}

#[pymodule]
fn rppg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRgbTrace>()?;
    m.add_class::<PyBvpSignal>()?;
    m.add_function(wrap_pyfunction!(generate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(run_method, m)?)?;
    m.add_function(wrap_pyfunction!(hr_fft, m)?)?;
    m.add_function(wrap_pyfunction!(hr_peaks, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(bland_altman, m)?)?;
    m.add_function(wrap_pyfunction!(classify_fitzpatrick, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
