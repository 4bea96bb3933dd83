//! Python bindings: `import hprnnpb_py`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hprnnpb::harness::experiment::{self, Experiment};
use hprnnpb::harness::{load_state, save_state, write_report, ExperimentConfig};
use hprnnpb::modes::{self, TrainConfig};
use hprnnpb::net::Vector;
use hprnnpb::trajectories::{make_dataset as make, DatasetSpec};
use hprnnpb::{Error, LabeledSequence, NetworkConfig, NetworkState, ObservationSequence, SequenceLabel, Shape};

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        Error::Config(_) | Error::Data(_) | Error::Shape(_) => PyValueError::new_err(msg),
        Error::Io { .. } | Error::Persistence(_) | Error::Version { .. } => PyIOError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn to_sequence(frames: Vec<Vec<f64>>) -> PyResult<ObservationSequence> {
    let frames: Vec<Vector> = frames.into_iter().map(Vector::from).collect();
    ObservationSequence::from_frames(&frames).map_err(py_err)
}

fn to_rows(seq: &ObservationSequence) -> Vec<Vec<f64>> {
    seq.frames().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn sequence_dict<'py>(py: Python<'py>, item: &LabeledSequence) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("label", item.label.to_string())?;
    d.set_item("shape", item.label.shape.as_str())?;
    d.set_item("color", item.label.color.as_str())?;
    d.set_item("repeat", item.label.repeat)?;
    d.set_item("frames", to_rows(&item.sequence))?;
    Ok(d)
}

fn from_dict(d: &Bound<'_, PyDict>) -> PyResult<LabeledSequence> {
    let get = |k: &str| {
        d.get_item(k)?
            .ok_or_else(|| PyValueError::new_err(format!("sequence dict is missing {k:?}")))
    };
    let shape: String = get("shape")?.extract()?;
    let color: String = get("color")?.extract()?;
    Ok(LabeledSequence {
        label: SequenceLabel {
            shape: shape.parse().map_err(py_err)?,
            color: color.parse().map_err(py_err)?,
            repeat: get("repeat")?.extract()?,
        },
        sequence: to_sequence(get("frames")?.extract()?)?,
    })
}

/// Scaled tanh used by hidden and PB units.
#[pyfunction]
fn transfer(x: f64) -> f64 {
    hprnnpb::transfer(x)
}

/// Max relative error between BPTT and finite differences on a random small network.
#[pyfunction]
fn gradient_check(seed: u64) -> PyResult<f64> {
    hprnnpb::gradient_check(seed).map_err(py_err)
}

/// Synthetic trajectories as a list of dicts with `label`, `shape`, `color`, `repeat`, `frames`.
#[pyfunction]
#[pyo3(signature = (seed=0, shapes=None, repeats=5, speed_factor=1.0, noise_sigma=0.005))]
fn make_dataset(
    py: Python<'_>,
    seed: u64,
    shapes: Option<Vec<String>>,
    repeats: usize,
    speed_factor: f64,
    noise_sigma: f64,
) -> PyResult<Vec<Bound<'_, PyDict>>> {
    let mut spec = DatasetSpec {
        seed,
        repeats,
        speed_factor,
        noise_sigma,
        ..DatasetSpec::default()
    };
    if let Some(names) = shapes {
        spec.shapes = names
            .iter()
            .map(|s| s.parse::<Shape>())
            .collect::<Result<_, _>>()
            .map_err(py_err)?;
    }
    let data = make(&spec).map_err(py_err)?;
    data.iter().map(|item| sequence_dict(py, item)).collect()
}

/// Runs an experiment pipeline (fig4..fig8); returns the check list and writes the report if `out` is given.
#[pyfunction]
#[pyo3(signature = (experiment, seed=1, epochs=None, out=None))]
fn reproduce<'py>(
    py: Python<'py>,
    experiment: &str,
    seed: u64,
    epochs: Option<usize>,
    out: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let name: Experiment = experiment.parse().map_err(py_err)?;
    let mut cfg = ExperimentConfig::default().with_seed(seed);
    if let Some(e) = epochs {
        cfg.train.max_epochs = e;
    }
    let report = py
        .allow_threads(|| experiment::reproduce_experiment(name, &cfg))
        .map_err(py_err)?;
    if let Some(dir) = out {
        write_report(&report, &cfg, &dir).map_err(py_err)?;
    }
    report
        .checks
        .iter()
        .map(|c| {
            let d = PyDict::new_bound(py);
            d.set_item("name", &c.name)?;
            d.set_item("passed", c.passed)?;
            d.set_item("informational", c.informational)?;
            d.set_item("detail", &c.detail)?;
            Ok(d)
        })
        .collect()
}

/// Network weights, learning rates and current PB values.
#[pyclass]
#[derive(Clone)]
struct Network {
    state: NetworkState,
}

#[pymethods]
impl Network {
    /// `config` is TOML with network fields, e.g. `"n_d = 5\nn_v = 5"`;
    /// `experiment=True` starts from the experiment settings instead of the defaults.
    #[new]
    #[pyo3(signature = (seed=0, config=None, experiment=false))]
    fn new(seed: u64, config: Option<&str>, experiment: bool) -> PyResult<Self> {
        let mut cfg = if experiment {
            hprnnpb::harness::experiment_network()
        } else {
            NetworkConfig::default()
        };
        if let Some(text) = config {
            cfg = overlay_config(cfg, text)?;
        }
        let state = NetworkState::init(cfg, seed).map_err(py_err)?;
        Ok(Self { state })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            state: load_state(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_state(&self.state, &path).map_err(py_err)
    }

    #[getter]
    fn n_d(&self) -> usize {
        self.state.config.n_d
    }

    #[getter]
    fn n_v(&self) -> usize {
        self.state.config.n_v
    }

    #[getter]
    fn rho(&self) -> (Vec<f64>, Vec<f64>) {
        (self.state.rho_d.to_vec(), self.state.rho_v.to_vec())
    }

    #[setter]
    fn set_rho(&mut self, rho: (Vec<f64>, Vec<f64>)) -> PyResult<()> {
        let (d, v) = rho;
        if d.len() != self.state.rho_d.len() || v.len() != self.state.rho_v.len() {
            return Err(PyValueError::new_err("PB sizes do not match the network"));
        }
        self.state.rho_d = Vector::from(d);
        self.state.rho_v = Vector::from(v);
        Ok(())
    }

    /// All weights flattened in a fixed order.
    fn weights(&self) -> Vec<f64> {
        self.state.weights.iter().copied().collect()
    }

    /// One-step outputs for every input frame, with the current PB values.
    fn forward(&self, frames: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let seq = to_sequence(frames)?;
        let caches = self.state.run_sequence_open_loop(&seq).map_err(py_err)?;
        Ok(caches.iter().map(|c| c.output.to_vec()).collect())
    }

    fn cost(&self, frames: Vec<Vec<f64>>) -> PyResult<f64> {
        let seq = to_sequence(frames)?;
        hprnnpb::gradients::cost_of(&self.state, &seq).map_err(py_err)
    }

    /// Trains in place; returns `{"cost_curve": [...], "pb_table": [{"label", "rho_d", "rho_v", "pb"}]}`.
    #[pyo3(signature = (dataset, epochs=20000, seed=0, shuffle=false))]
    fn train<'py>(
        &mut self,
        py: Python<'py>,
        dataset: Vec<Bound<'py, PyDict>>,
        epochs: usize,
        seed: u64,
        shuffle: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let data: Vec<LabeledSequence> = dataset.iter().map(from_dict).collect::<PyResult<_>>()?;
        let cfg = TrainConfig {
            max_epochs: epochs,
            shuffle,
            seed,
            ..TrainConfig::default()
        };
        let state = &mut self.state;
        let outcome = py
            .allow_threads(|| modes::train(state, &data, &cfg))
            .map_err(py_err)?;
        let out = PyDict::new_bound(py);
        out.set_item("cost_curve", outcome.cost_curve.clone())?;
        let rows = outcome
            .pb_table
            .entries()
            .iter()
            .map(|e| {
                let d = PyDict::new_bound(py);
                d.set_item("label", e.label.to_string())?;
                d.set_item("rho_d", e.rho_d.to_vec())?;
                d.set_item("rho_v", e.rho_v.to_vec())?;
                d.set_item("pb", e.activation().to_vec())?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        out.set_item("pb_table", rows)?;
        out.set_item("separable", modes::axis_separability(&outcome.pb_table).is_some())?;
        Ok(out)
    }

    /// Fits PB values to `frames` with frozen weights; returns `(rho_d, rho_v, costs)`.
    #[pyo3(signature = (frames, epochs=3000, window=None))]
    fn recognize(
        &self,
        frames: Vec<Vec<f64>>,
        epochs: usize,
        window: Option<usize>,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let seq = to_sequence(frames)?;
        let window = window.unwrap_or(seq.len());
        let trace = modes::recognize(&self.state, &seq, window, epochs).map_err(py_err)?;
        let (d, v) = trace.final_rho(self.state.config.n_pb_d, self.state.config.n_pb_v);
        Ok((d.to_vec(), v.to_vec(), trace.epochs.iter().map(|e| e.cost).collect()))
    }

    /// Closed-loop generation from `first_frame`; returns `steps + 1` frames.
    fn predict(
        &self,
        rho_d: Vec<f64>,
        rho_v: Vec<f64>,
        first_frame: Vec<f64>,
        steps: usize,
    ) -> PyResult<Vec<Vec<f64>>> {
        let first = Vector::from(first_frame);
        let seq = modes::predict(&self.state, &Vector::from(rho_d), &Vector::from(rho_v), first.view(), steps)
            .map_err(py_err)?;
        Ok(to_rows(&seq))
    }
}

/// Overlays the TOML keys in `text` on `base`; unknown keys are rejected.
fn overlay_config(base: NetworkConfig, text: &str) -> PyResult<NetworkConfig> {
    let overrides: toml::Table = toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mut merged = toml::Table::try_from(&base).map_err(|e| PyValueError::new_err(e.to_string()))?;
    merged.extend(overrides);
    let cfg: NetworkConfig = merged.try_into().map_err(|e: toml::de::Error| PyValueError::new_err(e.to_string()))?;
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

#[pymodule]
fn hprnnpb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_function(wrap_pyfunction!(transfer, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_check, m)?)?;
    m.add_function(wrap_pyfunction!(make_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
