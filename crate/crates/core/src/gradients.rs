//! Sequence cost, back-propagation through time and a finite-difference oracle.
//!
//! Cost over a sequence of `T` frames, with frame `t+1` the target of the
//! output at step `t`:
//!
//! ```text
//! C = ½ Σ_{t=0}^{T-2} Σ_k (in_k(t+1) − out_k(t))²
//! ```
//!
//! The PB error `delta_pb` is reported as the descent direction for the PB
//! internal values, `−∂C/∂rho`, so that `rho += gamma · delta_pb` lowers the cost.

use ndarray::{Array2, ArrayView1, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::net::{check_sequence, transfer_deriv, Matrix, NetworkConfig, NetworkState, Params, StepCache, Vector};
use crate::sequence::ObservationSequence;

/// `∂C/∂w` for every weight plus the accumulated PB error.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub weights: Params,
    /// `−∂C/∂rho_d`, summed over all scored time steps.
    pub delta_pb_d: Vector,
    /// `−∂C/∂rho_v`, summed over all scored time steps.
    pub delta_pb_v: Vector,
}

impl GradientSet {
    pub fn zeros_like(state: &NetworkState) -> Self {
        Self {
            weights: state.weights.zeros_like(),
            delta_pb_d: Vector::zeros(state.rho_d.len()),
            delta_pb_v: Vector::zeros(state.rho_v.len()),
        }
    }

    /// Iterates over every entry: weights in [`Params::NAMES`] order, then `delta_pb_d`, `delta_pb_v`.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .chain(self.delta_pb_d.iter())
            .chain(self.delta_pb_v.iter())
    }
}

/// Cost of a cached open-loop pass against the sequence it was computed from.
pub fn sequence_cost(caches: &[StepCache], targets: &ObservationSequence) -> Result<f64> {
    if caches.len() != targets.len() {
        return Err(Error::Data(format!(
            "{} caches for a {}-frame target sequence",
            caches.len(),
            targets.len()
        )));
    }
    let mut cost = 0.0;
    for (t, cache) in caches.iter().take(caches.len().saturating_sub(1)).enumerate() {
        let target = targets.frame(t + 1);
        if target.len() != cache.output.len() {
            return Err(Error::Shape(format!(
                "target width {} vs output width {}",
                target.len(),
                cache.output.len()
            )));
        }
        cost += squared_residual(target, &cache.output);
    }
    Ok(0.5 * cost)
}

fn squared_residual(target: ArrayView1<'_, f64>, output: &Vector) -> f64 {
    target
        .iter()
        .zip(output.iter())
        .map(|(b, o)| (b - o) * (b - o))
        .sum()
}

/// Output of a backward pass.
#[derive(Debug, Clone)]
pub struct Backward {
    pub grads: GradientSet,
    /// Cost over the scored steps.
    pub cost: f64,
    /// Number of scored prediction steps.
    pub scored_steps: usize,
}

/// Exact gradients of the whole-sequence cost.
pub fn bptt(state: &NetworkState, seq: &ObservationSequence) -> Result<GradientSet> {
    Ok(backward(state, seq, seq.len())?.grads)
}

/// Back-propagation through time where only the targets among the last
/// `window_len` frames contribute to the cost.
///
/// The forward pass always runs over the full sequence from a zero hidden
/// state; `window_len == seq.len()` scores every prediction step.
pub fn backward(state: &NetworkState, seq: &ObservationSequence, window_len: usize) -> Result<Backward> {
    check_sequence(&state.config, seq)?;
    if window_len == 0 || window_len > seq.len() {
        return Err(Error::Data(format!(
            "window length {window_len} must be in 1..={}",
            seq.len()
        )));
    }
    let caches = state.run_sequence_open_loop(seq)?;
    let steps = seq.len() - 1;
    // Prediction step t targets frame t+1; score it if t+1 is inside the window.
    let first_scored = (seq.len() - window_len).saturating_sub(1);

    let w = &state.weights;
    let cfg = &state.config;
    let (pb_into_d, pb_into_v) = state.pb_inputs();
    let zero = state.zero_hidden();

    let mut g = w.zeros_like();
    let mut g_pb_into_d = Vector::zeros(pb_into_d.len());
    let mut g_pb_into_v = Vector::zeros(pb_into_v.len());
    let mut carry_d = Vector::zeros(cfg.n_d);
    let mut carry_v = Vector::zeros(cfg.n_v);
    let mut cost = 0.0;

    for t in (0..steps).rev() {
        let c = &caches[t];
        let prev = if t == 0 { &zero } else { &caches[t - 1].hidden };

        // dC/dout = −(target − out); split by the product rule of out = x_d ⊙ x_v.
        let (dx_d, dx_v) = if t >= first_scored {
            let target = seq.frame(t + 1);
            let resid = &target - &c.output;
            cost += 0.5 * resid.dot(&resid);
            (-(&resid * &c.x_v), -(&resid * &c.x_d))
        } else {
            (Vector::zeros(cfg.n_output), Vector::zeros(cfg.n_output))
        };

        add_outer(&mut g.u_d, &dx_d, c.hidden.s_d.view());
        add_outer(&mut g.u_v, &dx_v, c.hidden.s_v.view());

        let mut dpre_d = w.u_d.t().dot(&dx_d) + &carry_d;
        Zip::from(&mut dpre_d)
            .and(&c.pre_d)
            .for_each(|d, &y| *d *= transfer_deriv(y));
        let mut dpre_v = w.u_v.t().dot(&dx_v) + &carry_v;
        Zip::from(&mut dpre_v)
            .and(&c.pre_v)
            .for_each(|d, &y| *d *= transfer_deriv(y));

        add_outer(&mut g.w_d, &dpre_d, c.input.view());
        add_outer(&mut g.w_v, &dpre_v, c.input.view());
        add_outer(&mut g.v_d, &dpre_d, prev.s_d.view());
        add_outer(&mut g.v_v, &dpre_v, prev.s_v.view());
        add_outer(&mut g.wbar_d, &dpre_d, pb_into_d.view());
        add_outer(&mut g.wbar_v, &dpre_v, pb_into_v.view());

        g_pb_into_d += &w.wbar_d.t().dot(&dpre_d);
        g_pb_into_v += &w.wbar_v.t().dot(&dpre_v);

        carry_d = w.v_d.t().dot(&dpre_d);
        carry_v = w.v_v.t().dot(&dpre_v);
    }

    let (g_pb_d, g_pb_v) = if cfg.same_stream_pb {
        (g_pb_into_d, g_pb_into_v)
    } else {
        (g_pb_into_v, g_pb_into_d)
    };
    let descent = |g_pb: Vector, rho: &Vector| -> Vector {
        Zip::from(&g_pb)
            .and(rho)
            .map_collect(|&g, &r| -g * transfer_deriv(r))
    };
    Ok(Backward {
        grads: GradientSet {
            weights: g,
            delta_pb_d: descent(g_pb_d, &state.rho_d),
            delta_pb_v: descent(g_pb_v, &state.rho_v),
        },
        cost,
        scored_steps: steps - first_scored,
    })
}

fn add_outer(m: &mut Matrix, col: &Vector, row: ArrayView1<'_, f64>) {
    for (mut r, &a) in m.rows_mut().into_iter().zip(col.iter()) {
        if a != 0.0 {
            r.scaled_add(a, &row);
        }
    }
}

/// Whole-sequence cost of the state as it stands.
pub fn cost_of(state: &NetworkState, seq: &ObservationSequence) -> Result<f64> {
    let caches = state.run_sequence_open_loop(seq)?;
    sequence_cost(&caches, seq)
}

/// Central-difference estimate of every entry of [`bptt`]'s result.
///
/// `delta_pb_*` entries come from perturbing `rho` directly and carry the
/// same sign convention as the analytic version (`−∂C/∂rho`).
pub fn finite_diff_gradient(
    state: &NetworkState,
    seq: &ObservationSequence,
    epsilon: f64,
) -> Result<GradientSet> {
    if !(epsilon > 0.0) {
        return Err(Error::Data(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut probe = state.clone();
    let mut out = GradientSet::zeros_like(state);

    let mut slots = Vec::new();
    for (m, matrix) in state.weights.matrices().into_iter().enumerate() {
        let (rows, cols) = matrix.dim();
        for i in 0..rows {
            for j in 0..cols {
                slots.push(Slot::Weight(m, i, j));
            }
        }
    }
    slots.extend((0..state.rho_d.len()).map(Slot::RhoD));
    slots.extend((0..state.rho_v.len()).map(Slot::RhoV));

    for slot in slots {
        let orig = *slot.get_mut(&mut probe);
        *slot.get_mut(&mut probe) = orig + epsilon;
        let up = cost_of(&probe, seq)?;
        *slot.get_mut(&mut probe) = orig - epsilon;
        let down = cost_of(&probe, seq)?;
        *slot.get_mut(&mut probe) = orig;
        let slope = (up - down) / (2.0 * epsilon);
        match slot {
            Slot::RhoD(_) | Slot::RhoV(_) => *slot.get_mut_grads(&mut out) = -slope,
            Slot::Weight(..) => *slot.get_mut_grads(&mut out) = slope,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Weight(usize, usize, usize),
    RhoD(usize),
    RhoV(usize),
}

impl Slot {
    fn get_mut(self, s: &mut NetworkState) -> &mut f64 {
        match self {
            Slot::Weight(m, i, j) => &mut s.weights.matrix_mut(m)[[i, j]],
            Slot::RhoD(i) => &mut s.rho_d[i],
            Slot::RhoV(i) => &mut s.rho_v[i],
        }
    }

    fn get_mut_grads(self, g: &mut GradientSet) -> &mut f64 {
        match self {
            Slot::Weight(m, i, j) => &mut g.weights.matrix_mut(m)[[i, j]],
            Slot::RhoD(i) => &mut g.delta_pb_d[i],
            Slot::RhoV(i) => &mut g.delta_pb_v[i],
        }
    }
}

/// Relative error between two estimates, treating differences below `abs_floor` as exact.
pub fn relative_error(a: f64, b: f64, abs_floor: f64) -> f64 {
    let diff = (a - b).abs();
    if diff <= abs_floor {
        0.0
    } else {
        diff / a.abs().max(b.abs())
    }
}

/// Largest [`relative_error`] over all entries of two gradient sets.
pub fn max_relative_error(a: &GradientSet, b: &GradientSet, abs_floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| relative_error(x, y, abs_floor))
        .fold(0.0, f64::max)
}

/// Absolute floor used by [`gradient_check`].
pub const CHECK_ABS_FLOOR: f64 = 1e-8;
/// Central-difference step used by [`gradient_check`].
pub const CHECK_EPSILON: f64 = 1e-5;

/// Random small network (`n_d = n_v = 5`) and a random 6-frame sequence, both drawn from `seed`.
pub fn random_check_case(seed: u64) -> Result<(NetworkState, ObservationSequence)> {
    let cfg = NetworkConfig {
        n_d: 5,
        n_v: 5,
        weight_init_range: 0.8,
        ..NetworkConfig::default()
    };
    let mut state = NetworkState::init(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000));
    state.rho_d.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    state.rho_v.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    let seq = ObservationSequence::new(Array2::from_shape_simple_fn((6, 4), || rng.gen_range(0.0..1.0)));
    Ok((state, seq))
}

/// Max relative error between [`bptt`] and [`finite_diff_gradient`] on [`random_check_case`].
pub fn gradient_check(seed: u64) -> Result<f64> {
    let (state, seq) = random_check_case(seed)?;
    let analytic = bptt(&state, &seq)?;
    let numeric = finite_diff_gradient(&state, &seq, CHECK_EPSILON)?;
    Ok(max_relative_error(&analytic, &numeric, CHECK_ABS_FLOOR))
}
