use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::env::{ACTION_DIM, OBS_DIM};
use crate::error::NetError;
use crate::netcore::mlp::{Activation, Mlp, MlpCache, MlpGrads};

/// Anything that scores state-action pairs and can report `dQ/da`.
pub trait ActionValue {
    /// Returns `Q` (length B) and `dQ/da` (`B x 12`).
    fn value_and_action_grad(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), NetError>;
}

/// Q-network over the concatenated `[state, action]` input.
#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub net: Mlp,
}

pub struct CriticCache {
    net: MlpCache,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![OBS_DIM + ACTION_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Critic {
            net: Mlp::new(&sizes, Activation::Linear, 0.1, rng),
        }
    }

    pub fn from_net(net: Mlp) -> Result<Self, NetError> {
        if net.input_dim() != OBS_DIM + ACTION_DIM || net.output_dim() != 1 {
            return Err(NetError::shape(
                format!("{} -> 1", OBS_DIM + ACTION_DIM),
                format!("{} -> {}", net.input_dim(), net.output_dim()),
            ));
        }
        Ok(Critic { net })
    }

    pub fn forward(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, CriticCache), NetError> {
        if states.ncols() != OBS_DIM || actions.ncols() != ACTION_DIM || states.nrows() != actions.nrows() {
            return Err(NetError::shape(
                format!("B x {OBS_DIM} and B x {ACTION_DIM}"),
                format!("{:?} and {:?}", states.dim(), actions.dim()),
            ));
        }
        let input = concatenate(Axis(1), &[states, actions]).expect("row counts checked");
        let (q, net) = self.net.forward(input.view())?;
        Ok((q.column(0).to_owned(), CriticCache { net }))
    }

    pub fn q(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>, NetError> {
        self.forward(states, actions).map(|(q, _)| q)
    }

    /// Parameter gradients and input gradients (`B x 39`) given `dL/dQ`.
    pub fn backward(&self, cache: &CriticCache, d_q: &Array1<f64>) -> Result<(MlpGrads, Array2<f64>), NetError> {
        let up = d_q.view().insert_axis(Axis(1));
        self.net.backward(&cache.net, up)
    }
}

impl ActionValue for Critic {
    fn value_and_action_grad(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), NetError> {
        let (q, cache) = self.forward(states, actions)?;
        let (_, d_in) = self.backward(&cache, &Array1::ones(q.len()))?;
        Ok((q, d_in.slice(s![.., OBS_DIM..]).as_standard_layout().into_owned()))
    }
}
