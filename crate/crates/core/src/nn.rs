//! Small dense feedforward networks with hand-written reverse mode.
//!
//! Both policy levels are built from [`Mlp`]. Backward passes return gradients
//! for every parameter *and* for the input, since the high-level update needs
//! the sensitivity of the critic to its incoming-weight inputs.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    /// Normalized exponential over the whole layer output.
    Softmax,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Softmax => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Softmax),
            t => Err(Error::Checkpoint(format!("unknown activation tag {t}"))),
        }
    }
}

/// Weight initialization scheme. Biases always start at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    UniformFanIn,
    /// `N(0, std^2)`.
    Normal { std: f64 },
    Zeros,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
            activation,
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.n_in).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
        }));
    }

    fn activate(&self, z: &mut [f64]) {
        match self.activation {
            Activation::Identity => {}
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Softmax => softmax_in_place(z),
        }
    }
}

pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

/// Per-layer activations recorded during a forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace is never empty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient buffer shaped like an [`Mlp`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn scale(&mut self, k: f64) {
        self.values_mut().for_each(|v| *v *= k);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    pub fn dot(&self, other: &Gradients) -> f64 {
        self.values().zip(other.values()).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }
}

/// Multilayer perceptron.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// `sizes = [input, hidden.., output]`; `hidden` applies to all but the last layer.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        init: Init,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least one layer");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let act = if l + 1 == n { output } else { hidden };
                let mut layer = Layer::zeros(sizes[l], sizes[l + 1], act);
                match init {
                    Init::Zeros => {}
                    Init::UniformFanIn => {
                        let bound = 1.0 / (sizes[l].max(1) as f64).sqrt();
                        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                        layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
                    }
                    Init::Normal { std } => {
                        let dist = Normal::new(0.0, std).expect("non-negative std");
                        layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
                    }
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Param("an MLP needs at least one layer".into()));
        }
        for l in &layers {
            dim("layer weights", l.n_in * l.n_out, l.weights.len())?;
            dim("layer bias", l.n_out, l.bias.len())?;
        }
        for pair in layers.windows(2) {
            dim("layer chain", pair[0].n_out, pair[1].n_in)?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.n_out).unwrap_or(0)
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim("network input", self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.affine(&cur, &mut next);
            layer.activate(&mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        dim("network input", self.input_dim(), x.len())?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.affine(acts.last().expect("nonempty"), &mut z);
            layer.activate(&mut z);
            acts.push(z);
        }
        Ok(Trace { acts })
    }

    /// Gradients of `<upstream, output>` w.r.t. parameters and input.
    pub fn backward(&self, trace: &Trace, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let dx = self.backward_into(trace, upstream, &mut grads)?;
        Ok((grads, dx))
    }

    /// Like [`Mlp::backward`] but accumulates parameter gradients into `grads`.
    pub fn backward_into(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        dim("upstream gradient", self.output_dim(), upstream.len())?;
        dim("trace depth", self.layers.len() + 1, trace.acts.len())?;
        let mut delta = upstream.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.acts[l + 1];
            match layer.activation {
                Activation::Identity => {}
                Activation::Relu => {
                    for (d, &y) in delta.iter_mut().zip(out) {
                        if y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Softmax => {
                    let inner: f64 = delta.iter().zip(out).map(|(d, y)| d * y).sum();
                    for (d, &y) in delta.iter_mut().zip(out) {
                        *d = y * (*d - inner);
                    }
                }
            }
            let input = &trace.acts[l];
            let g = &mut grads.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                for (gw, &x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            let mut prev = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        out.write_all(&(self.input_dim() as u32).to_le_bytes())?;
        for l in &self.layers {
            out.write_all(&(l.n_out as u32).to_le_bytes())?;
        }
        for l in &self.layers {
            out.write_all(&[l.activation.tag()])?;
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let n_layers = read_u32(input)? as usize;
        if n_layers == 0 || n_layers > 64 {
            return Err(Error::Checkpoint(format!("implausible layer count {n_layers}")));
        }
        let sizes = (0..=n_layers)
            .map(|_| read_u32(input).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut tags = vec![0u8; n_layers];
        input.read_exact(&mut tags)?;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let mut layer = Layer::zeros(sizes[l], sizes[l + 1], Activation::from_tag(tags[l])?);
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                let mut buf = [0u8; 8];
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
            layers.push(layer);
        }
        Self::from_layers(layers)
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn check_shapes(net: &Mlp, grads: &Gradients) -> Result<()> {
    dim("gradient layers", net.layers.len(), grads.layers.len())?;
    for (l, g) in net.layers.iter().zip(&grads.layers) {
        dim("gradient weights", l.weights.len(), g.weights.len())?;
        dim("gradient bias", l.bias.len(), g.bias.len())?;
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradients".into()));
    }
    Ok(())
}

/// Plain descent: `p <- p - lr * g`.
pub fn sgd_step(net: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
    check_shapes(net, grads)?;
    for (p, g) in net.params_mut().zip(grads.values()) {
        *p -= lr * g;
    }
    Ok(())
}

/// First and second moment estimates for Adam.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Gradients,
    v: Gradients,
    t: u32,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self::with_betas(net, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(net: &Mlp, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }
}

/// Bias-corrected Adam descent step.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, lr: f64, state: &mut AdamState) -> Result<()> {
    check_shapes(net, grads)?;
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, g), m), v) in net
        .params_mut()
        .zip(grads.values())
        .zip(state.m.values_mut())
        .zip(state.v.values_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer bound to one network's parameter shapes.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub lr: f64,
    adam: Option<AdamState>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Mlp) -> Self {
        Self {
            lr,
            adam: match kind {
                OptimizerKind::Sgd => None,
                OptimizerKind::Adam => Some(AdamState::new(net)),
            },
        }
    }

    /// Descends along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        match &mut self.adam {
            Some(state) => adam_step(net, grads, self.lr, state),
            None => sgd_step(net, grads, self.lr),
        }
    }
}

/// `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Param(format!("tau = {tau} outside [0, 1]")));
    }
    dim("soft update parameters", online.n_params(), target.n_params())?;
    for (t, o) in target.params_mut().zip(online.params()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

/// Online network and its slowly tracking target copy.
#[derive(Clone, Debug)]
pub struct TargetPair {
    pub online: Mlp,
    pub target: Mlp,
}

impl TargetPair {
    pub fn new(online: Mlp) -> Self {
        let target = online.clone();
        Self { online, target }
    }

    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        soft_update(&mut self.target, &self.online, tau)
    }
}
