//! Minimal feed-forward networks with hand-written backward passes, an Adam
//! optimizer, and finite-difference gradient verification.
//!
//! Forward/backward are pure functions of their inputs; each forward pass
//! produces a [`GradientTape`] that the matching backward pass consumes.

use crate::error::{Error, Result};
use crate::math::{sigmoid, Matrix};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative with respect to the pre-activation, given both the
    /// pre-activation and the activated output.
    #[inline]
    pub fn grad(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - post * post,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Activation::Linear,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Sigmoid,
            _ => return Err(Error::Checkpoint(format!("unknown activation tag {tag}"))),
        })
    }
}

/// One dense layer: y = act(W x + b), W is (out x in).
#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub act: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }
    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }
}

/// Layered weight/bias parameters for one network.
#[derive(Debug, Clone)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Build a network over `dims = [in, hidden.., out]` with weights drawn
    /// from N(0, 1/fan_in) and zero biases. Hidden layers use `hidden_act`,
    /// the final layer `out_act`.
    pub fn new(
        dims: &[usize],
        hidden_act: Activation,
        out_act: Activation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config("mlp needs at least [in, out] dims"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[k], dims[k + 1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(Error::config("mlp layer dims must be positive"));
            }
            let std = (1.0 / fan_in as f64).sqrt();
            let mut w = Matrix::zeros(fan_out, fan_in);
            for v in w.as_mut_slice() {
                *v = rng.normal() * std;
            }
            let act = if k + 1 == dims.len() - 1 { out_act } else { hidden_act };
            layers.push(Layer { w, b: vec![0.0; fan_out], act });
        }
        Ok(MlpParams { layers })
    }

    pub fn zeros(dims: &[usize], hidden_act: Activation, out_act: Activation) -> Result<Self> {
        let mut rng = SeededRng::new(0);
        let mut p = Self::new(dims, hidden_act, out_act, &mut rng)?;
        for l in &mut p.layers {
            for v in l.w.as_mut_slice() {
                *v = 0.0;
            }
        }
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.rows() * l.w.cols() + l.b.len())
            .sum()
    }

    fn check_tape(&self, tape: &GradientTape) -> Result<()> {
        if tape.pre.len() != self.layers.len() {
            return Err(Error::dim(format!(
                "stale tape: {} layers recorded, params have {}",
                tape.pre.len(),
                self.layers.len()
            )));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if tape.pre[k].len() != l.out_dim() {
                return Err(Error::dim(format!(
                    "stale tape: layer {k} recorded {} outputs, params have {}",
                    tape.pre[k].len(),
                    l.out_dim()
                )));
            }
        }
        if tape.input.len() != self.input_dim() {
            return Err(Error::dim("stale tape: input dim mismatch"));
        }
        Ok(())
    }

    /// Forward pass returning the output and the tape needed for backward.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        if x.len() != self.input_dim() {
            return Err(Error::dim(format!(
                "mlp forward: input length {} != {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for l in &self.layers {
            let mut z = l.w.matvec(&h)?;
            for (zi, &bi) in z.iter_mut().zip(&l.b) {
                *zi += bi;
            }
            let a: Vec<f64> = z.iter().map(|&zi| l.act.apply(zi)).collect();
            pre.push(z);
            h = a.clone();
            post.push(a);
        }
        let out = post.last().unwrap().clone();
        Ok((out, GradientTape { input: x.to_vec(), pre, post }))
    }

    /// Forward without recording a tape.
    pub fn forward_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::dim(format!(
                "mlp forward: input length {} != {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = x.to_vec();
        for l in &self.layers {
            let mut z = l.w.matvec(&h)?;
            for (zi, &bi) in z.iter_mut().zip(&l.b) {
                *zi += bi;
            }
            h = z.iter().map(|&zi| l.act.apply(zi)).collect();
        }
        Ok(h)
    }

    /// Backward pass. Consumes the tape and returns parameter gradients plus
    /// the gradient with respect to the input.
    pub fn backward(&self, tape: GradientTape, out_grad: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        self.check_tape(&tape)?;
        if out_grad.len() != self.output_dim() {
            return Err(Error::dim("mlp backward: out_grad length mismatch"));
        }
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta: Vec<f64> = Vec::new();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let upstream: &[f64] = if k == self.layers.len() - 1 { out_grad } else { &delta };
            // d loss / d pre_k
            let dpre: Vec<f64> = upstream
                .iter()
                .zip(&tape.pre[k])
                .zip(&tape.post[k])
                .map(|((&g, &z), &a)| g * l.act.grad(z, a))
                .collect();
            let layer_in: &[f64] = if k == 0 { &tape.input } else { &tape.post[k - 1] };
            grads.w[k].add_outer(&dpre, layer_in, 1.0);
            for (gb, &d) in grads.b[k].iter_mut().zip(&dpre) {
                *gb += d;
            }
            delta = l.w.matvec_transpose(&dpre)?;
        }
        Ok((grads, delta))
    }

    /// Backward pass that only propagates to the input, treating all
    /// parameters as constants. Used where a loss term must not update the
    /// network it flows through.
    pub fn backward_input_only(&self, tape: &GradientTape, out_grad: &[f64]) -> Result<Vec<f64>> {
        self.check_tape(tape)?;
        if out_grad.len() != self.output_dim() {
            return Err(Error::dim("mlp backward: out_grad length mismatch"));
        }
        let mut delta: Vec<f64> = Vec::new();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let upstream: &[f64] = if k == self.layers.len() - 1 { out_grad } else { &delta };
            let dpre: Vec<f64> = upstream
                .iter()
                .zip(&tape.pre[k])
                .zip(&tape.post[k])
                .map(|((&g, &z), &a)| g * l.act.grad(z, a))
                .collect();
            delta = l.w.matvec_transpose(&dpre)?;
        }
        Ok(delta)
    }

    /// Flatten all parameters: per layer, row-major weights then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::dim("assign_from_flat: length mismatch"));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.w.rows() * l.w.cols();
            l.w.as_mut_slice().copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.as_slice().iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }
}

/// Cached pre-activations and activations from one forward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl GradientTape {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("tape has at least one layer")
    }
}

/// Parameter gradients, shaped like the network they belong to.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            w: params
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.w.rows(), l.w.cols()))
                .collect(),
            b: params.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGrads, scale: f64) {
        for (a, bm) in self.w.iter_mut().zip(&other.w) {
            a.add_scaled(bm, scale);
        }
        for (a, bv) in self.b.iter_mut().zip(&other.b) {
            for (x, &y) in a.iter_mut().zip(bv) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.w {
            for v in m.as_mut_slice() {
                *v *= s;
            }
        }
        for bv in &mut self.b {
            for v in bv {
                *v *= s;
            }
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0))
            && self.b.iter().all(|b| b.iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam state: first/second-moment accumulators over the flattened
/// parameters plus the step count used for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(param_count: usize, hyper: AdamHyper) -> Self {
        AdamState { m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0, hyper }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpGrads) -> Result<()> {
        if params.param_count() != self.m.len() {
            return Err(Error::dim("adam: parameter count mismatch"));
        }
        if grads.w.len() != params.layers.len() {
            return Err(Error::dim("adam: gradient layer count mismatch"));
        }
        self.t += 1;
        let bc1 = 1.0 - self.hyper.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.hyper.beta2.powi(self.t as i32);
        let mut off = 0;
        for (l, (gw, gb)) in params.layers.iter_mut().zip(grads.w.iter().zip(&grads.b)) {
            if gw.rows() != l.w.rows() || gw.cols() != l.w.cols() || gb.len() != l.b.len() {
                return Err(Error::dim("adam: gradient shape mismatch"));
            }
            for (p, &g) in l.w.as_mut_slice().iter_mut().chain(l.b.iter_mut()).zip(
                gw.as_slice().iter().chain(gb.iter()),
            ) {
                let m = &mut self.m[off];
                let v = &mut self.v[off];
                *m = self.hyper.beta1 * *m + (1.0 - self.hyper.beta1) * g;
                *v = self.hyper.beta2 * *v + (1.0 - self.hyper.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= self.hyper.lr * m_hat / (v_hat.sqrt() + self.hyper.eps);
                off += 1;
            }
        }
        if !params.is_finite() {
            return Err(Error::numerical("non-finite parameters after optimizer step"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Compare an analytic gradient against central finite differences of `f`
/// around `theta`. `f` must be a deterministic function of its argument.
pub fn grad_check<F: FnMut(&[f64]) -> f64>(
    theta: &[f64],
    analytic: &[f64],
    mut f: F,
    h: f64,
) -> GradCheckReport {
    assert_eq!(theta.len(), analytic.len());
    let mut work = theta.to_vec();
    let mut max_rel_err: f64 = 0.0;
    let mut worst_index = 0;
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let fp = f(&work);
        work[i] = orig - h;
        let fm = f(&work);
        work[i] = orig;
        let num = (fp - fm) / (2.0 * h);
        let denom = analytic[i].abs().max(num.abs()).max(1e-6);
        let rel = (analytic[i] - num).abs() / denom;
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = i;
        }
    }
    GradCheckReport { max_rel_err, worst_index, checked: theta.len() }
}
