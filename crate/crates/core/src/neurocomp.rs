//! Online neural disturbance compensator.
//!
//! A single hidden layer with a fixed random feature map (`W_in`, `b_in`
//! drawn once from the seed) and trainable output weights. Only the output
//! weights learn, driven by the global sliding surface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INPUT_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub rng_seed: u64,
}

impl Default for NnParams {
    fn default() -> Self {
        Self {
            input_size: INPUT_SIZE,
            hidden_size: 10,
            eta_min: 3e-4,
            eta_max: 1.2e-3,
            rng_seed: 7,
        }
    }
}

impl NnParams {
    pub fn validate(&self) -> Result<()> {
        if self.input_size != INPUT_SIZE {
            return Err(Error::invalid(
                "input_size",
                format!("the compensator reads {INPUT_SIZE} states, got {}", self.input_size),
            ));
        }
        if self.hidden_size == 0 {
            return Err(Error::invalid("hidden_size", "must be >= 1"));
        }
        if !(self.eta_min >= 0.0 && self.eta_max >= self.eta_min && self.eta_max.is_finite()) {
            return Err(Error::invalid(
                "eta_max",
                format!("need 0 <= eta_min <= eta_max, got {} / {}", self.eta_min, self.eta_max),
            ));
        }
        Ok(())
    }
}

/// Measured states fed to the network.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NnInput {
    pub x: f64,
    pub x_dot: f64,
    pub w_tip: f64,
    pub w_dot_tip: f64,
}

impl NnInput {
    pub fn as_array(&self) -> [f64; INPUT_SIZE] {
        [self.x, self.x_dot, self.w_tip, self.w_dot_tip]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnCompensator {
    /// Row-major `hidden_size × INPUT_SIZE`.
    pub w_in: Vec<f64>,
    pub b_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Learning-rate switching threshold, shared with the controller's δ.
    pub delta: f64,
    pub rng_seed: u64,
}

impl NnCompensator {
    /// Draws the feature map uniformly in `[-0.5, 0.5]`; output weights start at zero.
    pub fn new(params: &NnParams, delta: f64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        let h = params.hidden_size;
        let w_in = (0..h * INPUT_SIZE)
            .map(|_| rng.random_range(-0.5..=0.5))
            .collect();
        let b_in = (0..h).map(|_| rng.random_range(-0.5..=0.5)).collect();
        Ok(Self {
            w_in,
            b_in,
            w_out: vec![0.0; h],
            eta_min: params.eta_min,
            eta_max: params.eta_max,
            delta,
            rng_seed: params.rng_seed,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.b_in.len()
    }

    /// Hidden activations `tanh(W_in · input + b_in)`.
    pub fn hidden(&self, input: &NnInput) -> Vec<f64> {
        let z = input.as_array();
        self.w_in
            .chunks_exact(INPUT_SIZE)
            .zip(&self.b_in)
            .map(|(row, b)| {
                let pre: f64 = row.iter().zip(&z).map(|(w, z)| w * z).sum::<f64>() + b;
                pre.tanh()
            })
            .collect()
    }

    pub fn forward(&self, input: &NnInput) -> f64 {
        self.hidden(input)
            .iter()
            .zip(&self.w_out)
            .map(|(h, w)| h * w)
            .sum()
    }

    /// `∂u/∂w_out`, i.e. the hidden activation vector.
    pub fn grad_output_weights(&self, input: &NnInput) -> Vec<f64> {
        self.hidden(input)
    }

    pub fn learning_rate(&self, s0: f64) -> f64 {
        if s0.abs() > self.delta {
            self.eta_max
        } else {
            self.eta_min
        }
    }

    /// Euler step of `dW/dt = −η(s0) s0 ∇_W u`.
    pub fn weight_update(&mut self, s0: f64, input: &NnInput, dt: f64) {
        let step = self.learning_rate(s0) * s0 * dt;
        if step == 0.0 {
            return;
        }
        let grad = self.grad_output_weights(input);
        for (w, g) in self.w_out.iter_mut().zip(grad) {
            *w -= step * g;
        }
    }

    /// Flat weight snapshot: `W_in` row-major, then `b_in`, then `w_out`.
    pub fn snapshot(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w_in.len() + 2 * self.b_in.len());
        out.extend_from_slice(&self.w_in);
        out.extend_from_slice(&self.b_in);
        out.extend_from_slice(&self.w_out);
        out
    }
}
