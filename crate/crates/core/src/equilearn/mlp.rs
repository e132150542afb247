//! Fully connected network with all parameters in one flat vector, so the
//! optimiser can treat them uniformly.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
    }

    /// Derivative expressed through the activation's output.
    fn scale_by_derivative(self, delta: &mut Array2<f64>, out: &Array2<f64>) {
        if self == Activation::Tanh {
            delta.zip_mut_with(out, |d, &a| *d *= 1.0 - a * a);
        }
    }
}

/// Layer `k` maps `sizes[k]` to `sizes[k+1]`; hidden layers use `activation`,
/// the last layer is affine. Each layer stores `W` (out x in, row-major) then `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub params: Vec<f64>,
}

/// Layer activations kept for the backward pass.
pub struct Cache {
    acts: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        Mlp { sizes: sizes.to_vec(), activation, params: vec![0.0; Self::param_count(sizes)] }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        let mut m = Self::zeros(sizes, activation);
        let mut off = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut m.params[off..off + fan_in * fan_out] {
                *p = rng.gen_range(-bound..bound);
            }
            off += fan_in * fan_out + fan_out;
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least one layer")
    }

    fn layer(&self, k: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let off: usize = self.sizes[..=k].windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        let (i, o) = (self.sizes[k], self.sizes[k + 1]);
        let w = ArrayView2::from_shape((o, i), &self.params[off..off + o * i]).expect("layer layout");
        let b = ArrayView1::from(&self.params[off + o * i..off + o * i + o]);
        (w, b)
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if self.sizes.len() < 2 || self.params.len() != Self::param_count(&self.sizes) {
            return Err(Error::ShapeMismatch(format!("parameter vector does not fit sizes {:?}", self.sizes)));
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!("input width {} for a {}-input net", x.ncols(), self.input_dim())));
        }
        Ok(())
    }

    /// Row-wise forward pass on a batch.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Cache)> {
        self.check(&x)?;
        let layers = self.sizes.len() - 1;
        let mut acts = vec![x.to_owned()];
        for k in 0..layers {
            let (w, b) = self.layer(k);
            let mut z = acts[k].dot(&w.t()) + &b;
            if k + 1 < layers {
                self.activation.apply(&mut z);
            }
            acts.push(z);
        }
        let out = acts.last().expect("output").clone();
        Ok((out, Cache { acts }))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward(x)?.0.into_raw_vec_and_offset().0)
    }

    /// Gradient of `sum(upstream * output)` with respect to the parameters.
    pub fn gradients(&self, cache: &Cache, upstream: ArrayView2<f64>) -> Vec<f64> {
        let layers = self.sizes.len() - 1;
        let mut grads = vec![0.0; self.params.len()];
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[1] * w[0] + w[1];
        }
        let mut delta = upstream.to_owned();
        for k in (0..layers).rev() {
            let (w, _) = self.layer(k);
            let a_prev = &cache.acts[k];
            let gw = delta.t().dot(a_prev);
            let gb = delta.sum_axis(Axis(0));
            let (o, i) = (self.sizes[k + 1], self.sizes[k]);
            let base = offsets[k];
            grads[base..base + o * i].copy_from_slice(gw.as_standard_layout().as_slice().expect("contiguous"));
            grads[base + o * i..base + o * i + o].copy_from_slice(gb.as_slice().expect("contiguous"));
            if k > 0 {
                let mut d = delta.dot(&w);
                self.activation.scale_by_derivative(&mut d, a_prev);
                delta = d;
            }
        }
        grads
    }
}
