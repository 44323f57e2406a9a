//! Policy network.
//!
//! A ReLU trunk feeds a final layer of 20 raw head outputs per state:
//!
//! | range    | head                                         |
//! |----------|----------------------------------------------|
//! | 0..6     | pre-activations `x_i` of the six channels    |
//! | 6..12    | raw steepness, `k_i = softplus(raw) + 1e-3`  |
//! | 12..18   | offsets `x0_i`                               |
//! | 18..20   | raw coordination, `C_j = 2 sigmoid(raw)`     |
//!
//! Channels are `(LR_l, MR_l, SR, IR, SO, IO)`. Each channel is squashed by
//! `1 / (1 + exp(-k (x - x0)))`, then the twelve excitations are assembled:
//! right LR = `C1 * MR_l`, right MR = `C2 * LR_l` (clamped to [0, 1]), and
//! the vertical/oblique channels drive both eyes.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::env::{clamp_unit, ActionVector, Observation, ACTION_DIM, OBS_DIM};
use crate::error::NetError;
use crate::netcore::mlp::{Activation, Mlp, MlpCache, MlpGrads};

pub const CHANNELS: usize = 6;
pub const HEAD_DIM: usize = 3 * CHANNELS + 2;
pub const K_FLOOR: f64 = 1e-3;
pub const C_MAX: f64 = 2.0;

const HEAD_X: usize = 0;
const HEAD_K: usize = CHANNELS;
const HEAD_X0: usize = 2 * CHANNELS;
const HEAD_C: usize = 3 * CHANNELS;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-k (x - x0)))`
pub fn sigmoid_action_map(x: f64, k: f64, x0: f64) -> f64 {
    sigmoid(k * (x - x0))
}

/// Twelve-excitation vector from the six channel excitations and the
/// coordination constants.
pub fn assemble_action_vector(left6: &[f64; CHANNELS], c1: f64, c2: f64) -> ActionVector {
    let mut a = [0.0; ACTION_DIM];
    a[0] = c1 * left6[1];
    a[1] = c2 * left6[0];
    a[2..6].copy_from_slice(&left6[2..6]);
    a[6..12].copy_from_slice(left6);
    ActionVector::new(a.map(clamp_unit))
}

/// Per-state intermediate values of the mapping head.
#[derive(Clone, Debug)]
pub struct MappingCache {
    pub heads: Array2<f64>,
    /// Channel excitations, `B x 6`.
    pub channels: Array2<f64>,
    /// `B x 2`, (C1, C2).
    pub coordination: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct ActorCache {
    trunk: MlpCache,
    pub mapping: MappingCache,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    pub net: Mlp,
}

impl Actor {
    /// `hidden` sizes of the ReLU trunk; the head layer is scaled by 0.1.
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![OBS_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(HEAD_DIM);
        Actor {
            net: Mlp::new(&sizes, Activation::ActionMap, 0.1, rng),
        }
    }

    pub fn from_net(net: Mlp) -> Result<Self, NetError> {
        if net.input_dim() != OBS_DIM || net.output_dim() != HEAD_DIM {
            return Err(NetError::shape(
                format!("{OBS_DIM} -> {HEAD_DIM}"),
                format!("{} -> {}", net.input_dim(), net.output_dim()),
            ));
        }
        Ok(Actor { net })
    }

    /// Actions for a batch of states (`B x 27` -> `B x 12`).
    pub fn forward(&self, states: ArrayView2<f64>) -> Result<(Array2<f64>, ActorCache), NetError> {
        let (heads, trunk) = self.net.forward(states)?;
        let b = heads.nrows();
        let mut channels = Array2::zeros((b, CHANNELS));
        let mut coordination = Array2::zeros((b, 2));
        let mut actions = Array2::zeros((b, ACTION_DIM));
        for r in 0..b {
            let h = heads.row(r);
            let mut left6 = [0.0; CHANNELS];
            for (i, e) in left6.iter_mut().enumerate() {
                let k = softplus(h[HEAD_K + i]) + K_FLOOR;
                *e = sigmoid_action_map(h[HEAD_X + i], k, h[HEAD_X0 + i]);
                channels[[r, i]] = *e;
            }
            let c1 = C_MAX * sigmoid(h[HEAD_C]);
            let c2 = C_MAX * sigmoid(h[HEAD_C + 1]);
            coordination[[r, 0]] = c1;
            coordination[[r, 1]] = c2;
            let a = assemble_action_vector(&left6, c1, c2);
            actions.row_mut(r).assign(&ndarray::ArrayView1::from(&a.0[..]));
        }
        Ok((
            actions,
            ActorCache {
                trunk,
                mapping: MappingCache {
                    heads,
                    channels,
                    coordination,
                },
            },
        ))
    }

    /// Greedy action for one observation.
    pub fn act(&self, obs: &Observation) -> Result<ActionVector, NetError> {
        let x = ArrayView2::from_shape((1, OBS_DIM), &obs.0[..]).expect("fixed shape");
        let (a, _) = self.forward(x)?;
        Ok(ActionVector::from_slice(a.row(0).as_slice().expect("contiguous row")).expect("12 wide"))
    }

    /// Parameter gradients given `dL/d(action)` (`B x 12`).
    pub fn backward(&self, cache: &ActorCache, d_actions: ArrayView2<f64>) -> Result<MlpGrads, NetError> {
        let m = &cache.mapping;
        if d_actions.dim() != (m.heads.nrows(), ACTION_DIM) {
            return Err(NetError::shape(
                format!("({}, {ACTION_DIM})", m.heads.nrows()),
                format!("{:?}", d_actions.dim()),
            ));
        }
        let mut d_heads = Array2::zeros(m.heads.dim());
        for r in 0..m.heads.nrows() {
            let g = d_actions.row(r);
            let e = m.channels.row(r);
            let (c1, c2) = (m.coordination[[r, 0]], m.coordination[[r, 1]]);
            let mut d_e = [0.0; CHANNELS];
            let (mut d_c1, mut d_c2) = (0.0, 0.0);
            // right LR = C1 * MR_l, right MR = C2 * LR_l; clamped entries pass no gradient
            if c1 * e[1] < 1.0 {
                d_e[1] += g[0] * c1;
                d_c1 = g[0] * e[1];
            }
            if c2 * e[0] < 1.0 {
                d_e[0] += g[1] * c2;
                d_c2 = g[1] * e[0];
            }
            for j in 2..CHANNELS {
                d_e[j] += g[j];
            }
            for j in 0..CHANNELS {
                d_e[j] += g[CHANNELS + j];
            }
            let h = m.heads.row(r);
            for i in 0..CHANNELS {
                let raw_k = h[HEAD_K + i];
                let k = softplus(raw_k) + K_FLOOR;
                let diff = h[HEAD_X + i] - h[HEAD_X0 + i];
                let slope = e[i] * (1.0 - e[i]) * d_e[i];
                d_heads[[r, HEAD_X + i]] = slope * k;
                d_heads[[r, HEAD_X0 + i]] = -slope * k;
                d_heads[[r, HEAD_K + i]] = slope * diff * sigmoid(raw_k);
            }
            for (j, d_c) in [d_c1, d_c2].into_iter().enumerate() {
                let s = sigmoid(h[HEAD_C + j]);
                d_heads[[r, HEAD_C + j]] = d_c * C_MAX * s * (1.0 - s);
            }
        }
        let (grads, _) = self.net.backward(&cache.trunk, d_heads.view())?;
        Ok(grads)
    }
}

/// Views a slice of observations as a `B x 27` matrix.
pub fn stack_observations<'a, I>(obs: I) -> Array2<f64>
where
    I: IntoIterator<Item = &'a Observation>,
{
    let rows: Vec<f64> = obs.into_iter().flat_map(|o| o.0).collect();
    let n = rows.len() / OBS_DIM;
    Array2::from_shape_vec((n, OBS_DIM), rows).expect("whole observations")
}

#[cfg(test)]
fn head_slice(heads: &Array2<f64>, row: usize) -> ndarray::ArrayView1<'_, f64> {
    heads.slice(ndarray::s![row, ..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::gradcheck::gradient_check;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_states(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, OBS_DIM), |(_, j)| {
            if j >= 15 {
                rng.random_range(0.0..1.0)
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
    }

    #[test]
    fn sigmoid_map_cases() {
        for k in [0.1, 1.0, 7.5] {
            assert_eq!(sigmoid_action_map(0.3, k, 0.3), 0.5);
        }
        assert_abs_diff_eq!(sigmoid_action_map(1.0, 2.0, 0.0), 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid_action_map(1.0, 2.0, 0.0), 0.8808, epsilon = 1e-4);
        let xs = [-3.0, -1.0, -0.2, 0.0, 0.4, 2.0, 5.0];
        for w in xs.windows(2) {
            assert!(sigmoid_action_map(w[0], 1.3, 0.1) < sigmoid_action_map(w[1], 1.3, 0.1));
        }
    }

    #[test]
    fn sigmoid_map_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (x, k, x0) = (rng.random_range(-3.0..3.0), rng.random_range(0.1..4.0), rng.random_range(-1.0..1.0));
            let s = sigmoid_action_map(x, k, x0);
            let h = 1e-6;
            let fd = (sigmoid_action_map(x + h, k, x0) - sigmoid_action_map(x - h, k, x0)) / (2.0 * h);
            assert!((k * s * (1.0 - s) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn assembly_cases() {
        let a = assemble_action_vector(&[0.3, 0.5, 0.1, 0.2, 0.7, 0.9], 1.0, 1.0);
        assert_eq!(a.0, [0.5, 0.3, 0.1, 0.2, 0.7, 0.9, 0.3, 0.5, 0.1, 0.2, 0.7, 0.9]);
        let a = assemble_action_vector(&[0.0, 0.8, 0.0, 0.0, 0.0, 0.0], 1.5, 1.0);
        assert_eq!(a.0[0], 1.0);
        assert_eq!(assemble_action_vector(&[0.0; 6], 1.3, 0.4).0, [0.0; 12]);
    }

    #[test]
    fn outputs_stay_in_unit_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..10 {
            let mut actor = Actor::new(&[32, 32, 32], &mut rng);
            // blow up the head layer on some trials to reach saturation
            if trial % 2 == 1 {
                for v in actor.net.layers.last_mut().unwrap().weight.iter_mut() {
                    *v *= 100.0;
                }
            }
            let states = random_states(&mut rng, 100);
            let (a, cache) = actor.forward(states.view()).unwrap();
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
            let m = &cache.mapping;
            for r in 0..100 {
                let (c1, c2) = (m.coordination[[r, 0]], m.coordination[[r, 1]]);
                assert!(c1 > 0.0 && c1 <= 2.0 && c2 > 0.0 && c2 <= 2.0);
                let h = head_slice(&m.heads, r);
                for i in 0..CHANNELS {
                    assert!(softplus(h[HEAD_K + i]) + K_FLOOR > 0.0);
                }
                // coupling by construction, before clamping
                let e = m.channels.row(r);
                assert_eq!(a[[r, 0]], (c1 * e[1]).min(1.0));
                assert_eq!(a[[r, 1]], (c2 * e[0]).min(1.0));
                assert_eq!(a[[r, 6]], e[0]);
                for j in 2..6 {
                    assert_eq!(a[[r, j]], a[[r, 6 + j]]);
                }
            }
        }
    }

    #[test]
    fn initial_actions_are_moderate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let actor = Actor::new(&[64, 64, 64], &mut rng);
        let states = random_states(&mut rng, 20);
        let (a, _) = actor.forward(states.view()).unwrap();
        assert!(a.iter().all(|&v| (0.3..0.7).contains(&v)), "{a}");
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let actor = Actor::new(&[16, 16, 16], &mut rng);
        let states = random_states(&mut rng, 4);
        let proj = Array2::from_shape_fn((4, ACTION_DIM), |_| rng.random_range(-1.0..1.0));
        let (_, cache) = actor.forward(states.view()).unwrap();
        let g = actor.backward(&cache, proj.view()).unwrap();
        let flat = actor.net.flatten();
        let coords: Vec<usize> = (0..flat.len()).collect();
        let err = gradient_check(
            |p| {
                let mut a = actor.clone();
                a.net.set_flat(p).unwrap();
                (&a.forward(states.view()).unwrap().0 * &proj).sum()
            },
            &flat,
            &g.flatten(),
            1e-5,
            &coords,
        );
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn act_matches_batch_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actor = Actor::new(&[8, 8, 8], &mut rng);
        let obs = Observation(std::array::from_fn(|i| (i as f64 * 0.37).sin()));
        let single = actor.act(&obs).unwrap();
        let (batch, _) = actor.forward(stack_observations([&obs, &obs]).view()).unwrap();
        assert_eq!(&single.0[..], batch.row(1).as_slice().unwrap());
    }
}
