//! Learning mode: shared weights plus one PB pair per training sequence.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pb::{PbEntry, PbTable};
use super::update::{apply_weight_update, update_learning_rates, update_pb_learning};
use crate::error::{Error, Result};
use crate::gradients::backward;
use crate::net::{NetworkState, Params, Vector};
use crate::sequence::LabeledSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Stop once the summed epoch cost is at or below this value.
    pub target_cost: f64,
    /// Present sequences in a fresh random order every epoch.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 20_000,
            target_cost: 0.0,
            shuffle: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.target_cost >= 0.0) {
            return Err(Error::Config("target_cost must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-epoch record handed to progress observers.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    pub cost: f64,
    pub lr_min: f64,
    pub lr_max: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub pb_table: PbTable,
    /// Summed cost over all sequences, one entry per epoch.
    pub cost_curve: Vec<f64>,
    /// `(min, max)` learning rate over all weights after each epoch.
    pub lr_range: Vec<(f64, f64)>,
}

impl TrainOutcome {
    pub fn epochs_run(&self) -> usize {
        self.cost_curve.len()
    }
}

pub fn train(
    state: &mut NetworkState,
    dataset: &[LabeledSequence],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(state, dataset, cfg, |_| {})
}

/// Trains `state` in place, calling `observe` after every epoch.
///
/// Each epoch presents every sequence once. Per sequence: forward pass, BPTT,
/// weight step with the current per-weight rates, then a PB step on that
/// sequence's own `rho` pair. After the epoch the learning rates adapt by
/// comparing the epoch's summed gradient with the previous epoch's.
///
/// On return `state.rho_*` are reset to zero; the trained PB values live in
/// the returned table.
pub fn train_with(
    state: &mut NetworkState,
    dataset: &[LabeledSequence],
    cfg: &TrainConfig,
    mut observe: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    state.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("training dataset is empty".into()));
    }
    let mut seen = HashSet::new();
    for item in dataset {
        if !seen.insert(item.label) {
            return Err(Error::Data(format!("duplicate sequence label {}", item.label)));
        }
    }

    let n_pb_d = state.config.n_pb_d;
    let n_pb_v = state.config.n_pb_v;
    let mut rhos: Vec<(Vector, Vector)> = vec![(Vector::zeros(n_pb_d), Vector::zeros(n_pb_v)); dataset.len()];
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cost_curve = Vec::new();
    let mut lr_range = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_grad: Params = state.weights.zeros_like();
        let mut epoch_cost = 0.0;
        for &i in &order {
            let seq = &dataset[i].sequence;
            state.rho_d.assign(&rhos[i].0);
            state.rho_v.assign(&rhos[i].1);
            let b = backward(state, seq, seq.len())?;
            epoch_cost += b.cost;
            apply_weight_update(state, &b.grads.weights);
            update_pb_learning(state, &b.grads, seq.len())?;
            rhos[i].0.assign(&state.rho_d);
            rhos[i].1.assign(&state.rho_v);
            epoch_grad.add_assign(&b.grads.weights);
        }
        if !epoch_cost.is_finite() || !state.weights.iter().all(|w| w.is_finite()) {
            state.rho_d.fill(0.0);
            state.rho_v.fill(0.0);
            return Err(Error::Divergence {
                epoch,
                reason: format!("epoch cost is {epoch_cost}"),
            });
        }
        update_learning_rates(state, &epoch_grad);
        let (lr_min, lr_max) = state
            .lr
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        cost_curve.push(epoch_cost);
        lr_range.push((lr_min, lr_max));
        observe(&EpochStats {
            epoch,
            cost: epoch_cost,
            lr_min,
            lr_max,
        });
        if epoch_cost <= cfg.target_cost {
            break;
        }
    }

    state.rho_d.fill(0.0);
    state.rho_v.fill(0.0);
    let entries = dataset
        .iter()
        .zip(rhos)
        .map(|(item, (rho_d, rho_v))| PbEntry {
            label: item.label,
            rho_d,
            rho_v,
        })
        .collect();
    Ok(TrainOutcome {
        pb_table: PbTable::new(entries)?,
        cost_curve,
        lr_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetworkConfig;
    use crate::sequence::{Color, ObservationSequence, SequenceLabel, Shape};
    use ndarray::Array2;

    fn labeled(shape: Shape, color: Color, repeat: usize, frames: Array2<f64>) -> LabeledSequence {
        LabeledSequence {
            label: SequenceLabel { shape, color, repeat },
            sequence: ObservationSequence::new(frames),
        }
    }

    fn small_config() -> NetworkConfig {
        NetworkConfig {
            n_d: 8,
            n_v: 8,
            eta_dorsal: 0.05,
            eta_ventral: 0.05,
            weight_init_range: 0.5,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn constant_sequence_is_learned() {
        let mut frames = Array2::zeros((10, 4));
        frames.column_mut(0).fill(0.5);
        frames.column_mut(1).fill(0.3);
        let data = vec![labeled(Shape::Cosine, Color::Yellow, 0, frames)];
        let mut state = NetworkState::init(small_config(), 7).unwrap();
        let out = train(
            &mut state,
            &data,
            &TrainConfig {
                max_epochs: 3000,
                target_cost: 1e-5,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let last = *out.cost_curve.last().unwrap();
        assert!(last < 1e-4, "final cost {last}");
        assert!(last < out.cost_curve[0]);
        assert_eq!(out.pb_table.entries().len(), 1);
        assert_eq!(state.rho_d[0], 0.0);
    }

    #[test]
    fn constant_rate_descent_is_monotone() {
        let frames = Array2::from_shape_fn((6, 4), |(t, k)| 0.2 + 0.1 * (t as f64 + k as f64).cos());
        let data = vec![labeled(Shape::Square, Color::Green, 0, frames)];
        let cfg = NetworkConfig {
            n_d: 5,
            n_v: 5,
            eta_dorsal: 1e-5,
            eta_ventral: 1e-5,
            xi_plus: 1.0 + f64::EPSILON,
            xi_minus: 1.0 - f64::EPSILON,
            m_gamma: 0.0,
            weight_init_range: 0.5,
            ..NetworkConfig::default()
        };
        let mut state = NetworkState::init(cfg, 2).unwrap();
        let out = train(
            &mut state,
            &data,
            &TrainConfig {
                max_epochs: 200,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        for w in out.cost_curve.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn learning_rates_stay_in_bounds() {
        let frames = Array2::from_shape_fn((6, 4), |(t, k)| 0.5 * ((t * 3 + k) as f64).sin());
        let data = vec![
            labeled(Shape::Cosine, Color::Yellow, 0, frames.clone()),
            labeled(Shape::Cosine, Color::Yellow, 1, frames * 0.5),
        ];
        let cfg = NetworkConfig {
            xi_plus: 1.5,
            xi_minus: 0.5,
            eta_max: 0.02,
            eta_dorsal: 0.01,
            eta_ventral: 0.01,
            ..small_config()
        };
        let mut state = NetworkState::init(cfg.clone(), 3).unwrap();
        let out = train(
            &mut state,
            &data,
            &TrainConfig {
                max_epochs: 100,
                shuffle: true,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        for &(lo, hi) in &out.lr_range {
            assert!(lo >= cfg.eta_min && hi <= cfg.eta_max);
        }
        assert_eq!(out.lr_range.len(), 100);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut state = NetworkState::init(small_config(), 0).unwrap();
        let cfg = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        };
        let frames = Array2::zeros((4, 4));
        let data = vec![labeled(Shape::Cosine, Color::Green, 0, frames)];
        assert!(matches!(train(&mut state, &data, &cfg), Err(Error::Config(_))));
        assert!(matches!(
            train(&mut state, &[], &TrainConfig::default()),
            Err(Error::Data(_))
        ));
        let dup = vec![data[0].clone(), data[0].clone()];
        assert!(matches!(
            train(&mut state, &dup, &TrainConfig::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = NetworkConfig {
            eta_max: 1e3,
            eta_dorsal: 1e3,
            eta_ventral: 1e3,
            ..small_config()
        };
        let mut state = NetworkState::init(cfg, 0).unwrap();
        let frames = Array2::from_elem((5, 4), 50.0);
        let data = vec![labeled(Shape::Cosine, Color::Green, 0, frames)];
        let err = train(
            &mut state,
            &data,
            &TrainConfig {
                max_epochs: 50,
                ..TrainConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }
}
