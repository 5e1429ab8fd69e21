//! Dense feedforward networks with tanh hidden layers and per-unit sigmoid
//! outputs, used for both the policy and the critic.
//!
//! Gradients are computed by hand-written backpropagation for two loss
//! families: per-element weighted binary cross-entropy (supervised critic and
//! baselines) and reward-scaled action log-probability (REINFORCE).
//! [`finite_diff_check`] compares either against central differences.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{MlpacError, Result};
use crate::rewards::ActionVector;
use crate::rng::{substream, tag};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// One affine layer. `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseModel {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// Parameter-shaped container for derivatives (or any other per-parameter
/// quantity, e.g. momentum velocity).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(MlpacError::Config(format!(
            "need at least an input and an output layer, got dims {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(MlpacError::Config(format!(
            "layer sizes must be positive, got {layer_dims:?}"
        )));
    }
    Ok(())
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Trace {
    // activations[0] is the input, activations[l] the output of hidden layer l
    activations: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

impl DenseModel {
    /// Random initialisation: weights uniform in `±1/sqrt(fan_in)`, zero biases.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = substream(seed, &[tag::INIT]);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                Layer {
                    weights: (0..fan_in * fan_out)
                        .map(|_| dist.sample(&mut rng))
                        .collect(),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(DenseModel {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(DenseModel {
            layer_dims: layer_dims.to_vec(),
            layers: layer_dims
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        })
    }

    pub fn from_layers(layer_dims: &[usize], layers: Vec<Layer>) -> Result<Self> {
        validate_dims(layer_dims)?;
        if layers.len() != layer_dims.len() - 1 {
            return Err(MlpacError::Input(format!(
                "{} layers given for dims {layer_dims:?}",
                layers.len()
            )));
        }
        for (l, (layer, w)) in layers.iter().zip(layer_dims.windows(2)).enumerate() {
            if layer.weights.len() != w[0] * w[1] || layer.bias.len() != w[1] {
                return Err(MlpacError::Input(format!(
                    "layer {l}: expected {}x{} weights and {} biases, got {} and {}",
                    w[1],
                    w[0],
                    w[1],
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
        }
        Ok(DenseModel {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn param(&self, k: usize) -> f64 {
        *slot(&self.layers, k)
    }

    pub fn set_param(&mut self, k: usize, v: f64) {
        *slot_mut(&mut self.layers, k) = v;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(MlpacError::Input(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        let mut logits = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let input = &activations[l];
            let n_in = input.len();
            let z: Vec<f64> = layer
                .bias
                .iter()
                .enumerate()
                .map(|(o, b)| {
                    let row = &layer.weights[o * n_in..(o + 1) * n_in];
                    b + row.iter().zip(input).map(|(w, h)| w * h).sum::<f64>()
                })
                .collect();
            if l == last {
                logits = z;
            } else {
                activations.push(z.into_iter().map(f64::tanh).collect());
            }
        }
        Trace {
            activations,
            logits,
        }
    }

    /// Output-layer pre-activations.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).logits)
    }

    /// Per-class probabilities, clamped to `[1e-7, 1 - 1e-7]`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .logits(x)?
            .into_iter()
            .map(|z| crate::clamp_prob(sigmoid(z)))
            .collect())
    }

    /// Accumulate `dL/dparams` given `dL/dlogits` for one input.
    fn backprop_into(&self, trace: &Trace, dlogits: &[f64], grads: &mut Gradients) {
        let mut delta = dlogits.to_vec();
        for l in (0..self.layers.len()).rev() {
            let input = &trace.activations[l];
            let n_in = input.len();
            let g = &mut grads.layers[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * n_in..(o + 1) * n_in];
                for (gw, h) in row.iter_mut().zip(input) {
                    *gw += d * h;
                }
            }
            if l > 0 {
                let w = &self.layers[l].weights;
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * w[o * n_in + i])
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }

    /// Weighted BCE averaged over the batch, with exact gradients.
    ///
    /// `loss = (1/B) Σ_i Σ_c weight[i][c] · BCE(p[i][c], target[i][c])`.
    pub fn backward_weighted_bce(
        &self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        weights: &[Vec<f64>],
    ) -> Result<(f64, Gradients)> {
        self.check_bce_batch(xs, targets, weights)?;
        let mut grads = Gradients::zeros_like(self);
        if xs.is_empty() {
            return Ok((0.0, grads));
        }
        let inv_b = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for ((x, t), w) in xs.iter().zip(targets).zip(weights) {
            let trace = self.trace(x);
            let mut dlogits = vec![0.0; trace.logits.len()];
            let mut any = false;
            for (c, &z) in trace.logits.iter().enumerate() {
                if w[c] == 0.0 {
                    continue;
                }
                // BCE(σ(z), t) = softplus(z) - t·z
                loss += w[c] * (softplus(z) - t[c] * z) * inv_b;
                dlogits[c] = w[c] * (sigmoid(z) - t[c]) * inv_b;
                any = true;
            }
            if any {
                self.backprop_into(&trace, &dlogits, &mut grads);
            }
        }
        if !loss.is_finite() {
            return Err(MlpacError::Numeric(
                "weighted BCE loss is not finite".into(),
            ));
        }
        Ok((loss, grads))
    }

    /// Loss value of [`Self::backward_weighted_bce`] without gradients.
    pub fn weighted_bce_loss(
        &self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        weights: &[Vec<f64>],
    ) -> Result<f64> {
        self.check_bce_batch(xs, targets, weights)?;
        if xs.is_empty() {
            return Ok(0.0);
        }
        let inv_b = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for ((x, t), w) in xs.iter().zip(targets).zip(weights) {
            for (c, z) in self.trace(x).logits.into_iter().enumerate() {
                loss += w[c] * (softplus(z) - t[c] * z) * inv_b;
            }
        }
        Ok(loss)
    }

    fn check_bce_batch(
        &self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        weights: &[Vec<f64>],
    ) -> Result<()> {
        if xs.len() != targets.len() || xs.len() != weights.len() {
            return Err(MlpacError::Input(format!(
                "batch sizes differ: {} inputs, {} targets, {} weight rows",
                xs.len(),
                targets.len(),
                weights.len()
            )));
        }
        let out = self.output_dim();
        for (i, ((x, t), w)) in xs.iter().zip(targets).zip(weights).enumerate() {
            self.check_input(x)?;
            if t.len() != out || w.len() != out {
                return Err(MlpacError::Input(format!(
                    "row {i}: targets/weights must have length {out}"
                )));
            }
            if x.iter().chain(t).chain(w).any(|v| !v.is_finite()) {
                return Err(MlpacError::Numeric(format!("row {i}: non-finite input")));
            }
            if w.iter().any(|&v| v < 0.0) {
                return Err(MlpacError::Input(format!("row {i}: negative loss weight")));
            }
        }
        Ok(())
    }

    /// `scale · ∇ Σ_c ln π(a_c | x)`, computed in logit space.
    pub fn backward_scaled_logprob(
        &self,
        x: &[f64],
        actions: &ActionVector,
        scale: f64,
    ) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_scaled_logprob(x, actions, scale, &mut grads)?;
        Ok(grads)
    }

    /// In-place form of [`Self::backward_scaled_logprob`]: adds into `grads`.
    pub fn accumulate_scaled_logprob(
        &self,
        x: &[f64],
        actions: &ActionVector,
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_input(x)?;
        if actions.len() != self.output_dim() {
            return Err(MlpacError::Input(format!(
                "action vector has length {}, model has {} outputs",
                actions.len(),
                self.output_dim()
            )));
        }
        if !scale.is_finite() {
            return Err(MlpacError::Numeric(format!(
                "non-finite reward scale {scale}"
            )));
        }
        if scale == 0.0 {
            return Ok(());
        }
        let trace = self.trace(x);
        // d/dz ln σ(z) = 1 - σ(z);  d/dz ln(1 - σ(z)) = -σ(z)
        let dlogits: Vec<f64> = trace
            .logits
            .iter()
            .zip(actions.iter())
            .map(|(&z, pos)| scale * (if pos { 1.0 } else { 0.0 } - sigmoid(z)))
            .collect();
        self.backprop_into(&trace, &dlogits, grads);
        Ok(())
    }

    /// Add `∂/∂θ Σ_c dlogits[c] · z_c(x)` into `grads`.
    pub fn accumulate_logit_grad(
        &self,
        x: &[f64],
        dlogits: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_input(x)?;
        grads.check_shape(&self.layer_dims)?;
        if dlogits.len() != self.output_dim() {
            return Err(MlpacError::Input("logit gradient length mismatch".into()));
        }
        self.backprop_into(&self.trace(x), dlogits, grads);
        Ok(())
    }

    /// Unclamped `ln π(a | x)` in logit space, the function differentiated by
    /// [`Self::backward_scaled_logprob`].
    pub fn log_prob_exact(&self, x: &[f64], actions: &ActionVector) -> Result<f64> {
        let z = self.logits(x)?;
        if actions.len() != z.len() {
            return Err(MlpacError::Input("action/output length mismatch".into()));
        }
        Ok(z.iter()
            .zip(actions.iter())
            .map(|(&z, pos)| if pos { -softplus(-z) } else { -softplus(z) })
            .sum())
    }

    /// `θ ± step · grads`.
    pub fn apply_update(&self, grads: &Gradients, step: f64, direction: Direction) -> Result<Self> {
        grads.check_shape(&self.layer_dims)?;
        let s = match direction {
            Direction::Ascend => step,
            Direction::Descend => -step,
        };
        let mut next = self.clone();
        for (layer, g) in next.layers.iter_mut().zip(&grads.layers) {
            for (p, d) in layer.weights.iter_mut().zip(&g.weights) {
                *p += s * d;
            }
            for (p, d) in layer.bias.iter_mut().zip(&g.bias) {
                *p += s * d;
            }
        }
        Ok(next)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            layer_dims: self.layer_dims.clone(),
            layers: self.layers.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(MlpacError::Input(format!(
                "unsupported checkpoint format_version {}",
                ckpt.format_version
            )));
        }
        DenseModel::from_layers(&ckpt.layer_dims, ckpt.layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(s).map_err(|e| MlpacError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        DenseModel::from_checkpoint(ckpt)
    }
}

/// On-disk model representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

fn slot(layers: &[Layer], mut k: usize) -> &f64 {
    for l in layers {
        if k < l.weights.len() {
            return &l.weights[k];
        }
        k -= l.weights.len();
        if k < l.bias.len() {
            return &l.bias[k];
        }
        k -= l.bias.len();
    }
    panic!("parameter index out of range");
}

fn slot_mut(layers: &mut [Layer], mut k: usize) -> &mut f64 {
    for l in layers {
        if k < l.weights.len() {
            return &mut l.weights[k];
        }
        k -= l.weights.len();
        if k < l.bias.len() {
            return &mut l.bias[k];
        }
        k -= l.bias.len();
    }
    panic!("parameter index out of range");
}

impl Gradients {
    pub fn zeros_like(model: &DenseModel) -> Self {
        Gradients {
            layer_dims: model.layer_dims.clone(),
            layers: model
                .layer_dims
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    fn check_shape(&self, dims: &[usize]) -> Result<()> {
        if self.layer_dims != dims {
            return Err(MlpacError::Input(format!(
                "gradient shape {:?} does not match model shape {dims:?}",
                self.layer_dims
            )));
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn get(&self, k: usize) -> f64 {
        *slot(&self.layers, k)
    }

    pub fn set(&mut self, k: usize, v: f64) {
        *slot_mut(&mut self.layers, k) = v;
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &Gradients, s: f64) -> Result<()> {
        other.check_shape(&self.layer_dims)?;
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += s * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += s * y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|x| *x *= s);
        }
    }

    pub fn dot(&self, other: &Gradients) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// Plain gradient steps with an optional heavy-ball momentum term.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub step: f64,
    pub momentum: f64,
    velocity: Option<Gradients>,
}

impl Optimizer {
    pub fn new(step: f64, momentum: f64) -> Self {
        Optimizer {
            step,
            momentum,
            velocity: None,
        }
    }

    pub fn apply(
        &mut self,
        model: &DenseModel,
        grads: &Gradients,
        direction: Direction,
    ) -> Result<DenseModel> {
        if self.momentum == 0.0 {
            return model.apply_update(grads, self.step, direction);
        }
        let v = match self.velocity.take() {
            Some(mut v) => {
                v.scale(self.momentum);
                v.add_scaled(grads, 1.0)?;
                v
            }
            None => grads.clone(),
        };
        let next = model.apply_update(&v, self.step, direction)?;
        self.velocity = Some(v);
        Ok(next)
    }
}

/// Objective differentiated by [`finite_diff_check`].
#[derive(Clone, Debug)]
pub enum LossKind {
    WeightedBce {
        targets: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
    /// `Σ_i scale · ln π(actions[i] | x_i)`.
    ScaledLogProb {
        actions: Vec<ActionVector>,
        scale: f64,
    },
}

impl LossKind {
    pub fn value(&self, model: &DenseModel, xs: &[Vec<f64>]) -> Result<f64> {
        match self {
            LossKind::WeightedBce { targets, weights } => {
                model.weighted_bce_loss(xs, targets, weights)
            }
            LossKind::ScaledLogProb { actions, scale } => {
                if actions.len() != xs.len() {
                    return Err(MlpacError::Input("one action vector per input".into()));
                }
                let mut total = 0.0;
                for (x, a) in xs.iter().zip(actions) {
                    total += scale * model.log_prob_exact(x, a)?;
                }
                Ok(total)
            }
        }
    }

    pub fn gradient(&self, model: &DenseModel, xs: &[Vec<f64>]) -> Result<Gradients> {
        match self {
            LossKind::WeightedBce { targets, weights } => {
                Ok(model.backward_weighted_bce(xs, targets, weights)?.1)
            }
            LossKind::ScaledLogProb { actions, scale } => {
                if actions.len() != xs.len() {
                    return Err(MlpacError::Input("one action vector per input".into()));
                }
                let mut g = Gradients::zeros_like(model);
                for (x, a) in xs.iter().zip(actions) {
                    model.accumulate_scaled_logprob(x, a, *scale, &mut g)?;
                }
                Ok(g)
            }
        }
    }
}

/// Max relative error between the analytic gradient and central differences.
pub fn finite_diff_check(
    model: &DenseModel,
    xs: &[Vec<f64>],
    loss: &LossKind,
    eps: f64,
) -> Result<f64> {
    let analytic = loss.gradient(model, xs)?;
    finite_diff_check_against(model, xs, loss, &analytic, eps)
}

/// As [`finite_diff_check`], comparing against a caller-supplied gradient.
///
/// Relative error per parameter is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn finite_diff_check_against(
    model: &DenseModel,
    xs: &[Vec<f64>],
    loss: &LossKind,
    analytic: &Gradients,
    eps: f64,
) -> Result<f64> {
    analytic.check_shape(model.layer_dims())?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for k in 0..model.num_params() {
        let orig = model.param(k);
        probe.set_param(k, orig + eps);
        let up = loss.value(&probe, xs)?;
        probe.set_param(k, orig - eps);
        let down = loss.value(&probe, xs)?;
        probe.set_param(k, orig);
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.get(k);
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

/// Random feature vector helper shared by tests and the acceptance suite.
pub fn random_inputs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, &[tag::FEATURES]);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}
