use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::NetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
    /// Raw head outputs consumed by the actor's sigmoid action mapping.
    ActionMap,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::ActionMap => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            2 => Some(Activation::ActionMap),
            _ => None,
        }
    }
}

/// Dense layer computing `act(x W + b)` for a batch of row vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `inputs x outputs`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer inputs and pre-activations recorded by [`Mlp::forward`].
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

/// Gradients with the same shapes as an [`Mlp`]'s parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.weight.len() * 2);
        for (w, b) in self.weight.iter().zip(&self.bias) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

impl Mlp {
    /// Layer sizes `[in, h1, ..., out]`. Hidden layers use ReLU, the last uses
    /// `output`. Weights and biases are uniform in +-1/sqrt(fan_in); the last
    /// layer is further scaled by `final_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least one layer");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let last = i + 1 == n;
                let bound = (1.0 / (fan_in as f64).sqrt()) * if last { final_scale } else { 1.0 };
                let weight = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound));
                let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..=bound));
                Layer {
                    weight,
                    bias,
                    activation: if last { output } else { Activation::Relu },
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn zeros(sizes: &[usize], output: Activation) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Layer {
                weight: Array2::zeros((sizes[i], sizes[i + 1])),
                bias: Array1::zeros(sizes[i + 1]),
                activation: if i + 1 == n { output } else { Activation::Relu },
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Layer::outputs).unwrap_or(0)
    }

    /// `[in, h1, ..., out]`
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache), NetError> {
        if input.ncols() != self.input_dim() {
            return Err(NetError::shape(
                format!("{} input columns", self.input_dim()),
                input.ncols(),
            ));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for layer in &self.layers {
            let z = x.dot(&layer.weight) + &layer.bias;
            let out = match layer.activation {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Linear | Activation::ActionMap => z.clone(),
            };
            inputs.push(x);
            pre.push(z);
            x = out;
        }
        Ok((x, MlpCache { inputs, pre }))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, input: ArrayView2<f64>) -> Result<Array2<f64>, NetError> {
        self.forward(input).map(|(y, _)| y)
    }

    /// Backpropagates `upstream = dL/d(output)`.
    pub fn backward(
        &self,
        cache: &MlpCache,
        upstream: ArrayView2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>), NetError> {
        if cache.pre.len() != self.layers.len() {
            return Err(NetError::shape(
                format!("cache for {} layers", self.layers.len()),
                cache.pre.len(),
            ));
        }
        let last = cache.pre.last().expect("non-empty");
        if upstream.dim() != last.dim() {
            return Err(NetError::shape(format!("{:?}", last.dim()), format!("{:?}", upstream.dim())));
        }
        let n = self.layers.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut grad = upstream.to_owned();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            if layer.activation == Activation::Relu {
                grad.zip_mut_with(&cache.pre[i], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            gw.push(cache.inputs[i].t().dot(&grad).as_standard_layout().into_owned());
            gb.push(grad.sum_axis(Axis(0)));
            grad = grad.dot(&layer.weight.t()).as_standard_layout().into_owned();
        }
        gw.reverse();
        gb.reverse();
        Ok((MlpGrads { weight: gw, bias: gb }, grad))
    }

    /// Parameter slices in a fixed order: w0, b0, w1, b1, ...
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), NetError> {
        if flat.len() != self.num_params() {
            return Err(NetError::shape(self.num_params(), flat.len()));
        }
        let mut rest = flat;
        for s in self.param_slices_mut() {
            let (head, tail) = rest.split_at(s.len());
            s.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// `target <- tau * source + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<(), NetError> {
    if target.sizes() != source.sizes() {
        return Err(NetError::shape(format!("{:?}", source.sizes()), format!("{:?}", target.sizes())));
    }
    for (t, s) in target.param_slices_mut().into_iter().zip(source.param_slices()) {
        for (tv, &sv) in t.iter_mut().zip(s) {
            *tv = tau * sv + (1.0 - tau) * *tv;
        }
    }
    Ok(())
}
