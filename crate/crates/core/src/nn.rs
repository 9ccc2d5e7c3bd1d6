//! Dense feedforward networks in double precision, with just enough
//! machinery for Q-learning: forward evaluation, backprop of a squared error
//! on one selected output, plain SGD, and soft target-network blending.
//!
//! No autodiff, no adaptive optimizers. Gradients are derived by hand and
//! pinned by central-difference checks in the tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`; the rectifier kink at 0 takes subgradient 0.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer: `out = act(W x + b)` with `W` stored row-major,
/// one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    in_width: usize,
    out_width: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(
        in_width: usize,
        out_width: usize,
        activation: Activation,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Layer, NnError> {
        let layer = Layer {
            in_width,
            out_width,
            activation,
            weights,
            bias,
        };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<(), NnError> {
        if self.in_width == 0 || self.out_width == 0 {
            return Err(NnError::Empty);
        }
        if self.weights.len() != self.in_width * self.out_width
            || self.bias.len() != self.out_width
        {
            return Err(NnError::GradientShape);
        }
        if self.weights.iter().chain(&self.bias).any(|p| !p.is_finite()) {
            return Err(NnError::NonFinite("layer parameter"));
        }
        Ok(())
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn forward_into(&self, x: &[f64], z_out: &mut Vec<f64>, a_out: &mut Vec<f64>) {
        z_out.clear();
        a_out.clear();
        for o in 0..self.out_width {
            let row = &self.weights[o * self.in_width..(o + 1) * self.in_width];
            let z = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias[o];
            z_out.push(z);
            a_out.push(self.activation.apply(z));
        }
    }
}

/// Gradients of a scalar loss, shape-congruent with one [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerGrads {
    dw: Vec<f64>,
    db: Vec<f64>,
}

impl GradientSet {
    /// Gradient slices for layer `l` as (weights, bias).
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        (&self.layers[l].dw, &self.layers[l].db)
    }

    pub fn scaled(&self, c: f64) -> GradientSet {
        GradientSet {
            layers: self
                .layers
                .iter()
                .map(|lg| LayerGrads {
                    dw: lg.dw.iter().map(|g| g * c).collect(),
                    db: lg.db.iter().map(|g| g * c).collect(),
                })
                .collect(),
        }
    }

    /// Elementwise sum with another gradient of the same shape, for
    /// averaging per-item gradients into one minibatch step.
    pub fn accumulate(&mut self, other: &GradientSet) -> Result<(), NnError> {
        if self.layers.len() != other.layers.len() {
            return Err(NnError::GradientShape);
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            if mine.dw.len() != theirs.dw.len() || mine.db.len() != theirs.db.len() {
                return Err(NnError::GradientShape);
            }
            for (g, o) in mine.dw.iter_mut().zip(&theirs.dw) {
                *g += o;
            }
            for (g, o) in mine.db.iter_mut().zip(&theirs.db) {
                *g += o;
            }
        }
        Ok(())
    }
}

/// A stack of [`Layer`]s with chained widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    /// Build a net with the given unit counts, e.g. `[80, 128, 128, 68]`.
    /// Hidden layers use the rectifier, the output layer is linear. Weights
    /// draw from a uniform fan-in scaled range, biases start at zero.
    pub fn new<R: Rng>(widths: &[usize], rng: &mut R) -> Result<DenseNet, NnError> {
        if widths.len() < 2 {
            return Err(NnError::Empty);
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (l, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(NnError::Empty);
            }
            let activation = if l + 2 == widths.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let bound = (6.0 / fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(Layer::new(
                fan_in,
                fan_out,
                activation,
                weights,
                vec![0.0; fan_out],
            )?);
        }
        Ok(DenseNet { layers })
    }

    /// Assemble a net from prebuilt layers, checking that widths chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<DenseNet, NnError> {
        if layers.is_empty() {
            return Err(NnError::Empty);
        }
        for pair in layers.windows(2) {
            if pair[0].out_width != pair[1].in_width {
                return Err(NnError::ShapeMismatch);
            }
        }
        for layer in &layers {
            layer.validate()?;
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].out_width
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Evaluate the network. Pure: equal inputs give bit-identical outputs.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.input_width() {
            return Err(NnError::InputWidth {
                expected: self.input_width(),
                found: x.len(),
            });
        }
        let mut activation = x.to_vec();
        let mut z = Vec::new();
        let mut a = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&activation, &mut z, &mut a);
            std::mem::swap(&mut activation, &mut a);
        }
        Ok(activation)
    }

    /// Gradients of `(target - forward(x)[action_index])²` with respect to
    /// every weight and bias. Only the selected output feeds the loss.
    pub fn backward_mse(
        &self,
        x: &[f64],
        target: f64,
        action_index: usize,
    ) -> Result<GradientSet, NnError> {
        if x.len() != self.input_width() {
            return Err(NnError::InputWidth {
                expected: self.input_width(),
                found: x.len(),
            });
        }
        if action_index >= self.output_width() {
            return Err(NnError::OutputIndex {
                index: action_index,
                width: self.output_width(),
            });
        }
        if !target.is_finite() {
            return Err(NnError::NonFinite("target"));
        }

        // Forward pass keeping every layer's pre-activation and activation.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut z = Vec::new();
            let mut a = Vec::new();
            layer.forward_into(acts.last().expect("non-empty"), &mut z, &mut a);
            pre.push(z);
            acts.push(a);
        }
        let output = acts.last().expect("non-empty");

        // d loss / d output: nonzero only at the selected index.
        let mut d_out = vec![0.0; self.output_width()];
        d_out[action_index] = 2.0 * (output[action_index] - target);

        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        let mut delta: Vec<f64> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // delta = d loss / d z of this layer.
            let upstream: &[f64] = if l + 1 == self.layers.len() {
                &d_out
            } else {
                &delta
            };
            let local: Vec<f64> = upstream
                .iter()
                .zip(&pre[l])
                .map(|(u, &z)| u * layer.activation.derivative(z))
                .collect();
            let input = &acts[l];
            let mut dw = vec![0.0; layer.weights.len()];
            for o in 0..layer.out_width {
                for i in 0..layer.in_width {
                    dw[o * layer.in_width + i] = local[o] * input[i];
                }
            }
            let db = local.clone();
            // Propagate to the previous layer: d loss / d activation[l].
            if l > 0 {
                let mut prev = vec![0.0; layer.in_width];
                for (o, lo) in local.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_width..(o + 1) * layer.in_width];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * lo;
                    }
                }
                delta = prev;
            }
            grads.push(LayerGrads { dw, db });
        }
        grads.reverse();
        Ok(GradientSet { layers: grads })
    }

    /// One plain gradient-descent step: `θ ← θ − lr · ∇`.
    ///
    /// `lr` must be finite and non-negative; zero leaves the net unchanged.
    pub fn sgd_step(&mut self, grads: &GradientSet, lr: f64) -> Result<(), NnError> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(NnError::NonFinite("learning rate"));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NnError::GradientShape);
        }
        for (layer, lg) in self.layers.iter_mut().zip(&grads.layers) {
            if lg.dw.len() != layer.weights.len() || lg.db.len() != layer.bias.len() {
                return Err(NnError::GradientShape);
            }
            for (w, g) in layer.weights.iter_mut().zip(&lg.dw) {
                *w -= lr * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(&lg.db) {
                *b -= lr * g;
            }
        }
        Ok(())
    }

    /// Blend online parameters into this (target) net:
    /// `θ' ← τ·θ + (1−τ)·θ'`, elementwise.
    pub fn soft_update_from(&mut self, online: &DenseNet, tau: f64) -> Result<(), NnError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(NnError::TauRange(tau));
        }
        if self.layers.len() != online.layers.len() {
            return Err(NnError::ShapeMismatch);
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            if t.in_width != o.in_width || t.out_width != o.out_width {
                return Err(NnError::ShapeMismatch);
            }
            for (tp, op) in t.weights.iter_mut().zip(&o.weights) {
                *tp = tau * op + (1.0 - tau) * *tp;
            }
            for (tp, op) in t.bias.iter_mut().zip(&o.bias) {
                *tp = tau * op + (1.0 - tau) * *tp;
            }
        }
        Ok(())
    }

    /// Re-run the shape and finiteness checks, e.g. after deserializing.
    pub fn validate(&self) -> Result<(), NnError> {
        if self.layers.is_empty() {
            return Err(NnError::Empty);
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_width != pair[1].in_width {
                return Err(NnError::ShapeMismatch);
            }
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        Ok(())
    }
}
