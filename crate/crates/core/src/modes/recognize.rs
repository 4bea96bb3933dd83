//! Recognition mode: weights frozen, only the PB internal values move.

use serde::Serialize;

use super::pb::{classify_pb, concat_activation, PbTable};
use crate::error::{Error, Result};
use crate::gradients::backward;
use crate::net::{NetworkState, Vector};
use crate::sequence::{ClassLabel, ObservationSequence};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecognitionEpoch {
    /// Cost over the window before this epoch's PB step.
    pub cost: f64,
    /// PB internal values after the step.
    pub rho_d: Vector,
    pub rho_v: Vector,
}

impl RecognitionEpoch {
    /// Concatenated PB activations, dorsal-attached group first.
    pub fn activation(&self) -> Vector {
        concat_activation(&self.rho_d, &self.rho_v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RecognitionTrace {
    pub epochs: Vec<RecognitionEpoch>,
    pub label: Option<ClassLabel>,
}

impl RecognitionTrace {
    /// Final PB internal values (zeros of the given sizes if no epoch ran).
    pub fn final_rho(&self, n_pb_d: usize, n_pb_v: usize) -> (Vector, Vector) {
        self.epochs.last().map_or_else(
            || (Vector::zeros(n_pb_d), Vector::zeros(n_pb_v)),
            |e| (e.rho_d.clone(), e.rho_v.clone()),
        )
    }

    pub fn final_activation(&self) -> Option<Vector> {
        self.epochs.last().map(RecognitionEpoch::activation)
    }

    /// Nearest-centroid label of the final PB activation; stored in `label`.
    pub fn classify(&mut self, table: &PbTable) -> Result<ClassLabel> {
        let act = self
            .final_activation()
            .ok_or_else(|| Error::Data("recognition ran for zero epochs".into()))?;
        let label = classify_pb(&act, table)?;
        self.label = Some(label);
        Ok(label)
    }

    /// Whether every PB internal value settled over the last `tail` epochs:
    /// its standard deviation is below `rel_tol·|final|` or below `abs_tol`.
    pub fn converged(&self, tail: usize, rel_tol: f64, abs_tol: f64) -> bool {
        if self.epochs.len() < tail || tail == 0 {
            return false;
        }
        let window = &self.epochs[self.epochs.len() - tail..];
        let last = window.last().expect("tail > 0");
        let finals: Vec<f64> = last.rho_d.iter().chain(last.rho_v.iter()).copied().collect();
        (0..finals.len()).all(|i| {
            let xs: Vec<f64> = window
                .iter()
                .map(|e| *e.rho_d.iter().chain(e.rho_v.iter()).nth(i).expect("fixed width"))
                .collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            let sd = var.sqrt();
            sd < rel_tol * finals[i].abs() || sd < abs_tol
        })
    }
}

/// Fits PB values to `seq` from the origin with fixed rate `gamma_recognition`,
/// scoring only targets among the last `window_len` frames.
pub fn recognize(
    state: &NetworkState,
    seq: &ObservationSequence,
    window_len: usize,
    epochs: usize,
) -> Result<RecognitionTrace> {
    if window_len > seq.len() {
        return Err(Error::Data(format!(
            "window length {window_len} exceeds sequence length {}",
            seq.len()
        )));
    }
    let mut probe = state.clone();
    probe.rho_d.fill(0.0);
    probe.rho_v.fill(0.0);
    let gamma = state.config.gamma_recognition;
    let mut trace = RecognitionTrace::default();
    for _ in 0..epochs {
        let b = backward(&probe, seq, window_len)?;
        if !b.cost.is_finite() {
            return Err(Error::Data("recognition cost became non-finite".into()));
        }
        probe.rho_d.scaled_add(gamma, &b.grads.delta_pb_d);
        probe.rho_v.scaled_add(gamma, &b.grads.delta_pb_v);
        trace.epochs.push(RecognitionEpoch {
            cost: b.cost,
            rho_d: probe.rho_d.clone(),
            rho_v: probe.rho_v.clone(),
        });
    }
    Ok(trace)
}
