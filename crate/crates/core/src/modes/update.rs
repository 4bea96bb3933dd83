//! Per-epoch and per-sequence parameter updates.

use ndarray::Zip;

use crate::error::{Error, Result};
use crate::gradients::GradientSet;
use crate::net::{NetworkState, Params, Vector};

/// Sign-agreement learning-rate adaptation.
///
/// For every weight, `sigma = prev_grad · grad`: a positive product grows the
/// rate by `xi_plus` (capped at `eta_max`), a negative one shrinks it by
/// `xi_minus` (floored at `eta_min`), zero leaves it alone. `prev_grad` is then
/// replaced by `grad`.
pub fn update_learning_rates(state: &mut NetworkState, grads: &Params) {
    let cfg = &state.config;
    let (up, down, lo, hi) = (cfg.xi_plus, cfg.xi_minus, cfg.eta_min, cfg.eta_max);
    for ((lr, prev), g) in state
        .lr
        .matrices_mut()
        .into_iter()
        .zip(state.prev_grad.matrices_mut())
        .zip(grads.matrices())
    {
        Zip::from(lr).and(&*prev).and(g).for_each(|eta, &p, &g| {
            let sigma = p * g;
            if sigma > 0.0 {
                *eta = (*eta * up).min(hi);
            } else if sigma < 0.0 {
                *eta = (*eta * down).max(lo);
            }
        });
        prev.assign(g);
    }
}

/// `w -= lr ⊙ grad` for every weight. PB values and learning rates are untouched.
pub fn apply_weight_update(state: &mut NetworkState, grads: &Params) {
    for ((w, lr), g) in state
        .weights
        .matrices_mut()
        .into_iter()
        .zip(state.lr.matrices())
        .zip(grads.matrices())
    {
        Zip::from(w).and(lr).and(g).for_each(|w, &eta, &g| *w -= eta * g);
    }
}

/// Adaptive PB rates for one sequence: `gamma_i = m_gamma · |delta_i| / len`.
pub fn pb_rates(m_gamma: f64, delta: &Vector, len: usize) -> Result<Vector> {
    if len == 0 {
        return Err(Error::Data("PB update over an empty sequence".into()));
    }
    Ok(delta.mapv(|d| m_gamma * d.abs() / len as f64))
}

/// Learning-mode PB step: `rho_i += gamma_i · delta_i` with adaptive `gamma_i`.
///
/// `len` is the number of frames in the sequence the deltas were accumulated
/// over. Returns the rates used, dorsal-attached group first.
pub fn update_pb_learning(
    state: &mut NetworkState,
    grads: &GradientSet,
    len: usize,
) -> Result<(Vector, Vector)> {
    let m = state.config.m_gamma;
    let gamma_d = pb_rates(m, &grads.delta_pb_d, len)?;
    let gamma_v = pb_rates(m, &grads.delta_pb_v, len)?;
    state.rho_d += &(&gamma_d * &grads.delta_pb_d);
    state.rho_v += &(&gamma_v * &grads.delta_pb_v);
    Ok((gamma_d, gamma_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradients::{bptt, cost_of};
    use crate::net::NetworkConfig;
    use crate::sequence::ObservationSequence;
    use ndarray::{array, Array2};

    fn small() -> NetworkState {
        NetworkState::init(
            NetworkConfig {
                n_d: 3,
                n_v: 3,
                ..NetworkConfig::default()
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn first_epoch_keeps_rates() {
        let mut s = small();
        let before = s.lr.clone();
        let mut g = s.weights.zeros_like();
        for m in g.matrices_mut() {
            m.fill(0.3);
        }
        update_learning_rates(&mut s, &g);
        assert_eq!(s.lr, before);
        assert_eq!(s.prev_grad, g);
    }

    #[test]
    fn agreeing_signs_grow_rate() {
        let mut s = small();
        let mut g = s.weights.zeros_like();
        for m in g.matrices_mut() {
            m.fill(-0.2);
        }
        update_learning_rates(&mut s, &g);
        update_learning_rates(&mut s, &g);
        // dorsal rate 1e-3 times xi_plus = 1.000001
        assert!((s.lr.w_d[[0, 0]] - 1.000001e-3).abs() < 1e-18);
        assert!((s.lr.w_v[[0, 0]] - 1.000001e-5).abs() < 1e-20);
    }

    #[test]
    fn rates_clamp_at_bounds() {
        let mut s = small();
        s.lr.w_d.fill(s.config.eta_max);
        s.lr.w_v.fill(s.config.eta_min);
        let mut g = s.weights.zeros_like();
        g.w_d.fill(1.0);
        g.w_v.fill(1.0);
        s.prev_grad.w_d.fill(1.0);
        s.prev_grad.w_v.fill(-1.0);
        update_learning_rates(&mut s, &g);
        assert!(s.lr.w_d.iter().all(|&e| e == s.config.eta_max));
        assert!(s.lr.w_v.iter().all(|&e| e == s.config.eta_min));
    }

    #[test]
    fn opposing_signs_shrink_rate() {
        let mut s = small();
        let mut g = s.weights.zeros_like();
        g.u_d.fill(1.0);
        s.prev_grad.u_d.fill(-2.0);
        update_learning_rates(&mut s, &g);
        assert!((s.lr.u_d[[0, 0]] - 1e-3 * 0.999999).abs() < 1e-18);
        // untouched matrices with zero gradient keep their rate
        assert_eq!(s.lr.v_d[[0, 0]], 1e-3);
    }

    #[test]
    fn weight_update_arithmetic() {
        let mut s = small();
        let zero = s.weights.zeros_like();
        let before = s.clone();
        apply_weight_update(&mut s, &zero);
        assert_eq!(s, before);

        s.weights.w_d[[0, 0]] = 1.0;
        s.lr.w_d[[0, 0]] = 0.1;
        s.rho_d[0] = 0.4;
        let mut g = s.weights.zeros_like();
        g.w_d[[0, 0]] = 2.0;
        let lr_before = s.lr.clone();
        apply_weight_update(&mut s, &g);
        assert!((s.weights.w_d[[0, 0]] - 0.8).abs() < 1e-15);
        assert_eq!(s.lr, lr_before);
        assert_eq!(s.rho_d[0], 0.4);
    }

    #[test]
    fn pb_rate_examples() {
        let mut s = small();
        let mut g = GradientSet::zeros_like(&s);
        let (gd, gv) = update_pb_learning(&mut s, &g, 20).unwrap();
        assert_eq!((gd[0], gv[0], s.rho_d[0], s.rho_v[0]), (0.0, 0.0, 0.0, 0.0));

        g.delta_pb_d[0] = 0.6;
        g.delta_pb_v[0] = -1.2;
        let (gd, gv) = update_pb_learning(&mut s, &g, 20).unwrap();
        assert!((gd[0] - 1e-2 * 0.6 / 20.0).abs() < 1e-18);
        assert!((gv[0] - 1e-2 * 1.2 / 20.0).abs() < 1e-18);
        assert!((s.rho_d[0] - gd[0] * 0.6).abs() < 1e-18);
        assert!((s.rho_v[0] + gv[0] * 1.2).abs() < 1e-18);
        assert!(gv[0] > gd[0]);
        assert!(update_pb_learning(&mut s, &g, 0).is_err());
    }

    #[test]
    fn pb_step_descends_for_small_rates() {
        // Line-search oracle: for each candidate m_gamma the step must not raise
        // the cost, and the smallest one must strictly lower it.
        let seq = ObservationSequence::new(Array2::from_shape_fn((8, 4), |(t, k)| {
            0.5 + 0.3 * ((t as f64) * 0.7 + k as f64).sin()
        }));
        let mut base = NetworkState::init(
            NetworkConfig {
                n_d: 6,
                n_v: 6,
                weight_init_range: 0.6,
                ..NetworkConfig::default()
            },
            4,
        )
        .unwrap();
        base.rho_d = array![0.2];
        base.rho_v = array![-0.3];
        let c0 = cost_of(&base, &seq).unwrap();
        let g = bptt(&base, &seq).unwrap();
        for m_gamma in [1e-4, 1e-3, 1e-2] {
            let mut s = base.clone();
            s.config.m_gamma = m_gamma;
            update_pb_learning(&mut s, &g, seq.len()).unwrap();
            let c1 = cost_of(&s, &seq).unwrap();
            assert!(c1 < c0, "m_gamma {m_gamma}: {c1} !< {c0}");
        }
    }
}
