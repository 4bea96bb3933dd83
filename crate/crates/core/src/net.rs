//! Network data model and forward dynamics.
//!
//! Two hidden streams (dorsal `d`, ventral `v`) read the same input frame.
//! Each stream is an Elman layer with its own recurrent weights and receives
//! the activation of the *other* stream's parametric-bias (PB) group:
//!
//! ```text
//! pre_d = w_d·in + v_d·s_d(t-1) + wbar_d·pb_v      s_d = f(pre_d)    x_d = u_d·s_d
//! pre_v = w_v·in + v_v·s_v(t-1) + wbar_v·pb_d      s_v = f(pre_v)    x_v = u_v·s_v
//! out   = x_d ⊙ x_v
//! f(y)  = 1.7159·tanh(2y/3),  pb = f(rho)
//! ```

use ndarray::{Array1, Array2, ArrayView1, Zip};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::ObservationSequence;

pub type Matrix = Array2<f64>;
pub type Vector = Array1<f64>;

/// Amplitude of the scaled tanh.
pub const TRANSFER_SCALE: f64 = 1.7159;
/// Slope factor inside the scaled tanh.
pub const TRANSFER_SLOPE: f64 = 2.0 / 3.0;

/// Scaled hyperbolic tangent used by hidden and PB units.
#[inline]
pub fn transfer(pre: f64) -> f64 {
    TRANSFER_SCALE * (TRANSFER_SLOPE * pre).tanh()
}

/// Derivative of [`transfer`] evaluated at the pre-activation.
#[inline]
pub fn transfer_deriv(pre: f64) -> f64 {
    let th = (TRANSFER_SLOPE * pre).tanh();
    TRANSFER_SCALE * TRANSFER_SLOPE * (1.0 - th * th)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_input: usize,
    pub n_output: usize,
    /// Dorsal hidden units.
    pub n_d: usize,
    /// Ventral hidden units.
    pub n_v: usize,
    /// PB units feeding the ventral hidden layer (dorsal-attached group).
    pub n_pb_d: usize,
    /// PB units feeding the dorsal hidden layer (ventral-attached group).
    pub n_pb_v: usize,
    pub eta_dorsal: f64,
    pub eta_ventral: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub m_gamma: f64,
    pub gamma_recognition: f64,
    pub weight_init_range: f64,
    /// Ablation: feed each PB group into its own stream instead of the other one.
    pub same_stream_pb: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_input: 4,
            n_output: 4,
            n_d: 50,
            n_v: 50,
            n_pb_d: 1,
            n_pb_v: 1,
            eta_dorsal: 1.0e-3,
            eta_ventral: 1.0e-5,
            eta_min: 1.0e-7,
            eta_max: 1.0e-1,
            xi_plus: 1.000001,
            xi_minus: 0.999999,
            m_gamma: 1.0e-2,
            gamma_recognition: 0.1,
            weight_init_range: 0.1,
            same_stream_pb: false,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_input", self.n_input),
            ("n_output", self.n_output),
            ("n_d", self.n_d),
            ("n_v", self.n_v),
            ("n_pb_d", self.n_pb_d),
            ("n_pb_v", self.n_pb_v),
        ];
        for (name, n) in counts {
            if n == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_output != self.n_input {
            return Err(Error::Config(format!(
                "n_output ({}) must equal n_input ({})",
                self.n_output, self.n_input
            )));
        }
        if !(self.eta_min > 0.0) {
            return Err(Error::Config("eta_min must be positive".into()));
        }
        if self.eta_min > self.eta_max {
            return Err(Error::Config(format!(
                "eta_min ({}) exceeds eta_max ({})",
                self.eta_min, self.eta_max
            )));
        }
        for (name, eta) in [
            ("eta_dorsal", self.eta_dorsal),
            ("eta_ventral", self.eta_ventral),
        ] {
            if !(self.eta_min <= eta && eta <= self.eta_max) {
                return Err(Error::Config(format!(
                    "{name} ({eta}) outside [eta_min, eta_max] = [{}, {}]",
                    self.eta_min, self.eta_max
                )));
            }
        }
        if !(self.xi_minus < 1.0 && 1.0 < self.xi_plus) {
            return Err(Error::Config(format!(
                "need xi_minus < 1 < xi_plus, got xi_minus={} xi_plus={}",
                self.xi_minus, self.xi_plus
            )));
        }
        if self.xi_minus <= 0.0 {
            return Err(Error::Config("xi_minus must be positive".into()));
        }
        if !(self.m_gamma >= 0.0) || !(self.gamma_recognition >= 0.0) {
            return Err(Error::Config(
                "m_gamma and gamma_recognition must be non-negative".into(),
            ));
        }
        if !(self.weight_init_range >= 0.0 && self.weight_init_range.is_finite()) {
            return Err(Error::Config(
                "weight_init_range must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Width of the PB vector entering the dorsal hidden layer.
    pub fn pb_width_into_dorsal(&self) -> usize {
        if self.same_stream_pb {
            self.n_pb_d
        } else {
            self.n_pb_v
        }
    }

    /// Width of the PB vector entering the ventral hidden layer.
    pub fn pb_width_into_ventral(&self) -> usize {
        if self.same_stream_pb {
            self.n_pb_v
        } else {
            self.n_pb_d
        }
    }
}

/// Which hidden stream a weight matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Dorsal,
    Ventral,
}

/// One value per connection in the network, in the shape of the weight matrices.
///
/// Used for the weights themselves, their gradients, per-weight learning
/// rates and the previous-epoch gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w_d: Matrix,
    pub w_v: Matrix,
    pub v_d: Matrix,
    pub v_v: Matrix,
    pub wbar_d: Matrix,
    pub wbar_v: Matrix,
    pub u_d: Matrix,
    pub u_v: Matrix,
}

impl Params {
    pub const NAMES: [&'static str; 8] =
        ["w_d", "w_v", "v_d", "v_v", "wbar_d", "wbar_v", "u_d", "u_v"];

    pub const STREAMS: [Stream; 8] = [
        Stream::Dorsal,
        Stream::Ventral,
        Stream::Dorsal,
        Stream::Ventral,
        Stream::Dorsal,
        Stream::Ventral,
        Stream::Dorsal,
        Stream::Ventral,
    ];

    pub fn shapes(cfg: &NetworkConfig) -> [(usize, usize); 8] {
        [
            (cfg.n_d, cfg.n_input),
            (cfg.n_v, cfg.n_input),
            (cfg.n_d, cfg.n_d),
            (cfg.n_v, cfg.n_v),
            (cfg.n_d, cfg.pb_width_into_dorsal()),
            (cfg.n_v, cfg.pb_width_into_ventral()),
            (cfg.n_output, cfg.n_d),
            (cfg.n_output, cfg.n_v),
        ]
    }

    /// Builds a parameter set by calling `f(stream, shape)` for each matrix in [`Params::NAMES`] order.
    pub fn build(cfg: &NetworkConfig, mut f: impl FnMut(Stream, (usize, usize)) -> Matrix) -> Self {
        let s = Self::shapes(cfg);
        let st = Self::STREAMS;
        Self {
            w_d: f(st[0], s[0]),
            w_v: f(st[1], s[1]),
            v_d: f(st[2], s[2]),
            v_v: f(st[3], s[3]),
            wbar_d: f(st[4], s[4]),
            wbar_v: f(st[5], s[5]),
            u_d: f(st[6], s[6]),
            u_v: f(st[7], s[7]),
        }
    }

    pub fn zeros(cfg: &NetworkConfig) -> Self {
        Self::build(cfg, |_, shape| Matrix::zeros(shape))
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.raw_dim());
        Self {
            w_d: z(&self.w_d),
            w_v: z(&self.w_v),
            v_d: z(&self.v_d),
            v_v: z(&self.v_v),
            wbar_d: z(&self.wbar_d),
            wbar_v: z(&self.wbar_v),
            u_d: z(&self.u_d),
            u_v: z(&self.u_v),
        }
    }

    pub fn matrices(&self) -> [&Matrix; 8] {
        [
            &self.w_d,
            &self.w_v,
            &self.v_d,
            &self.v_v,
            &self.wbar_d,
            &self.wbar_v,
            &self.u_d,
            &self.u_v,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.w_d,
            &mut self.w_v,
            &mut self.v_d,
            &mut self.v_v,
            &mut self.wbar_d,
            &mut self.wbar_v,
            &mut self.u_d,
            &mut self.u_v,
        ]
    }

    /// Matrix by its index in [`Params::NAMES`].
    pub fn matrix_mut(&mut self, idx: usize) -> &mut Matrix {
        match idx {
            0 => &mut self.w_d,
            1 => &mut self.w_v,
            2 => &mut self.v_d,
            3 => &mut self.v_v,
            4 => &mut self.wbar_d,
            5 => &mut self.wbar_v,
            6 => &mut self.u_d,
            7 => &mut self.u_v,
            _ => panic!("parameter index {idx} out of range"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.matrices().into_iter().flat_map(|m| m.iter())
    }

    pub fn len(&self) -> usize {
        self.matrices().iter().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += other`, entry-wise.
    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.matrices_mut().into_iter().zip(other.matrices()) {
            *a += b;
        }
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.matrices()
            .iter()
            .zip(other.matrices())
            .all(|(a, b)| a.dim() == b.dim())
    }

    fn check_shapes(&self, cfg: &NetworkConfig, what: &str) -> Result<()> {
        for ((name, m), expected) in Self::NAMES
            .iter()
            .zip(self.matrices())
            .zip(Self::shapes(cfg))
        {
            if m.dim() != expected {
                return Err(Error::Shape(format!(
                    "{what}.{name} is {:?}, expected {:?}",
                    m.dim(),
                    expected
                )));
            }
        }
        Ok(())
    }
}

/// Weights, PB internal values and adaptive learning-rate bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub config: NetworkConfig,
    pub weights: Params,
    /// Internal values of the dorsal-attached PB group (`n_pb_d`).
    pub rho_d: Vector,
    /// Internal values of the ventral-attached PB group (`n_pb_v`).
    pub rho_v: Vector,
    /// Per-weight learning rates.
    pub lr: Params,
    /// Previous epoch's gradient per weight.
    pub prev_grad: Params,
}

impl NetworkState {
    /// Uniform weights in `[-weight_init_range, weight_init_range]`, PB at the origin,
    /// learning rates at the per-stream initial values.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = config.weight_init_range;
        let weights = Params::build(&config, |_, shape| {
            if r == 0.0 {
                Matrix::zeros(shape)
            } else {
                let dist = Uniform::new_inclusive(-r, r);
                Matrix::from_shape_simple_fn(shape, || dist.sample(&mut rng))
            }
        });
        let lr = Params::build(&config, |stream, shape| {
            let eta = match stream {
                Stream::Dorsal => config.eta_dorsal,
                Stream::Ventral => config.eta_ventral,
            };
            Matrix::from_elem(shape, eta)
        });
        let prev_grad = Params::zeros(&config);
        Ok(Self {
            rho_d: Vector::zeros(config.n_pb_d),
            rho_v: Vector::zeros(config.n_pb_v),
            weights,
            lr,
            prev_grad,
            config,
        })
    }

    /// Checks matrix shapes against the configuration.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.weights.check_shapes(&self.config, "weights")?;
        self.lr.check_shapes(&self.config, "lr")?;
        self.prev_grad.check_shapes(&self.config, "prev_grad")?;
        if self.rho_d.len() != self.config.n_pb_d || self.rho_v.len() != self.config.n_pb_v {
            return Err(Error::Shape(format!(
                "rho sizes ({}, {}) do not match PB counts ({}, {})",
                self.rho_d.len(),
                self.rho_v.len(),
                self.config.n_pb_d,
                self.config.n_pb_v
            )));
        }
        Ok(())
    }

    /// PB activations `(f(rho_d), f(rho_v))`.
    pub fn pb_activation(&self) -> (Vector, Vector) {
        (self.rho_d.mapv(transfer), self.rho_v.mapv(transfer))
    }

    /// PB activations routed to the dorsal and ventral hidden layers respectively.
    pub(crate) fn pb_inputs(&self) -> (Vector, Vector) {
        let (pb_d, pb_v) = self.pb_activation();
        if self.config.same_stream_pb {
            (pb_d, pb_v)
        } else {
            (pb_v, pb_d)
        }
    }

    pub fn zero_hidden(&self) -> HiddenState {
        HiddenState {
            s_d: Vector::zeros(self.config.n_d),
            s_v: Vector::zeros(self.config.n_v),
        }
    }

    /// One time step of the open-loop dynamics.
    pub fn forward_step(&self, input: ArrayView1<'_, f64>, prev: &HiddenState) -> Result<StepCache> {
        if input.len() != self.config.n_input {
            return Err(Error::Shape(format!(
                "input frame has {} values, expected {}",
                input.len(),
                self.config.n_input
            )));
        }
        if prev.s_d.len() != self.config.n_d || prev.s_v.len() != self.config.n_v {
            return Err(Error::Shape("previous hidden state has wrong size".into()));
        }
        let (into_d, into_v) = self.pb_inputs();
        Ok(self.step_with_pb(input, prev, &into_d, &into_v))
    }

    pub(crate) fn step_with_pb(
        &self,
        input: ArrayView1<'_, f64>,
        prev: &HiddenState,
        pb_into_d: &Vector,
        pb_into_v: &Vector,
    ) -> StepCache {
        let w = &self.weights;
        let pre_d = w.w_d.dot(&input) + w.v_d.dot(&prev.s_d) + w.wbar_d.dot(pb_into_d);
        let pre_v = w.w_v.dot(&input) + w.v_v.dot(&prev.s_v) + w.wbar_v.dot(pb_into_v);
        let s_d = pre_d.mapv(transfer);
        let s_v = pre_v.mapv(transfer);
        let x_d = w.u_d.dot(&s_d);
        let x_v = w.u_v.dot(&s_v);
        let mut output = Vector::zeros(x_d.len());
        Zip::from(&mut output)
            .and(&x_d)
            .and(&x_v)
            .for_each(|o, &a, &b| *o = a * b);
        StepCache {
            input: input.to_owned(),
            pre_d,
            pre_v,
            hidden: HiddenState { s_d, s_v },
            x_d,
            x_v,
            output,
        }
    }

    /// Feeds every frame of `seq` in order, starting from a zero hidden state.
    ///
    /// Returns one cache per frame; the last frame's cache has no target.
    pub fn run_sequence_open_loop(&self, seq: &ObservationSequence) -> Result<Vec<StepCache>> {
        check_sequence(&self.config, seq)?;
        let (into_d, into_v) = self.pb_inputs();
        let mut caches: Vec<StepCache> = Vec::with_capacity(seq.len());
        let zero = self.zero_hidden();
        for t in 0..seq.len() {
            let prev = caches.last().map_or(&zero, |c| &c.hidden);
            let cache = self.step_with_pb(seq.frame(t), prev, &into_d, &into_v);
            caches.push(cache);
        }
        Ok(caches)
    }
}

pub(crate) fn check_sequence(cfg: &NetworkConfig, seq: &ObservationSequence) -> Result<()> {
    if seq.len() < 2 {
        return Err(Error::Data(format!(
            "sequence has {} frames; at least 2 are needed",
            seq.len()
        )));
    }
    if seq.width() != cfg.n_input {
        return Err(Error::Shape(format!(
            "sequence frames have {} values, network expects {}",
            seq.width(),
            cfg.n_input
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub s_d: Vector,
    pub s_v: Vector,
}

/// Everything computed during one forward step, kept for back-propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub input: Vector,
    pub pre_d: Vector,
    pub pre_v: Vector,
    pub hidden: HiddenState,
    pub x_d: Vector,
    pub x_v: Vector,
    pub output: Vector,
}
