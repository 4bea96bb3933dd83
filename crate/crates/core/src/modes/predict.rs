//! Prediction mode: closed-loop generation with fixed PB values.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::net::{NetworkState, Vector};
use crate::sequence::ObservationSequence;

/// Generates `steps` frames after `first_frame`, feeding each output back as
/// the next input. The hidden state starts at zero; the result has
/// `steps + 1` frames, `first_frame` first.
pub fn predict(
    state: &NetworkState,
    rho_d: &Vector,
    rho_v: &Vector,
    first_frame: ArrayView1<'_, f64>,
    steps: usize,
) -> Result<ObservationSequence> {
    let cfg = &state.config;
    if rho_d.len() != cfg.n_pb_d || rho_v.len() != cfg.n_pb_v {
        return Err(Error::Shape(format!(
            "PB sizes ({}, {}) do not match network ({}, {})",
            rho_d.len(),
            rho_v.len(),
            cfg.n_pb_d,
            cfg.n_pb_v
        )));
    }
    if first_frame.len() != cfg.n_input {
        return Err(Error::Shape(format!(
            "first frame has {} values, expected {}",
            first_frame.len(),
            cfg.n_input
        )));
    }
    let mut probe = state.clone();
    probe.rho_d.assign(rho_d);
    probe.rho_v.assign(rho_v);
    let (into_d, into_v) = probe.pb_inputs();

    let mut frames: Vec<Vector> = Vec::with_capacity(steps + 1);
    frames.push(first_frame.to_owned());
    let mut hidden = probe.zero_hidden();
    for _ in 0..steps {
        let input = frames.last().expect("at least the first frame");
        let cache = probe.step_with_pb(input.view(), &hidden, &into_d, &into_v);
        hidden = cache.hidden;
        frames.push(cache.output);
    }
    ObservationSequence::from_frames(&frames)
}

/// Mean squared error per output unit between `generated` and `truth`,
/// over frames `1..n` (the shared first frame is excluded).
pub fn per_unit_mse(generated: &ObservationSequence, truth: &ObservationSequence) -> Result<Vector> {
    let n = generated.len().min(truth.len());
    if n < 2 || generated.width() != truth.width() {
        return Err(Error::Data("need two comparable sequences of length ≥ 2".into()));
    }
    let mut acc = Vector::zeros(truth.width());
    for t in 1..n {
        let d = &generated.frame(t) - &truth.frame(t);
        acc += &(&d * &d);
    }
    Ok(acc / (n - 1) as f64)
}

/// Squared error summed over units at each generated step `1..n`.
pub fn step_errors(generated: &ObservationSequence, truth: &ObservationSequence) -> Vec<f64> {
    let n = generated.len().min(truth.len());
    (1..n)
        .map(|t| {
            let d = &generated.frame(t) - &truth.frame(t);
            d.dot(&d)
        })
        .collect()
}
