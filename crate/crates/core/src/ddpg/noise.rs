use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::ACTION_DIM;

/// Ornstein-Uhlenbeck process per action channel:
/// `x' = x + theta (mu - x) dt + sigma sqrt(dt) N(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuNoise {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub state: [f64; ACTION_DIM],
}

impl OuNoise {
    pub fn new(theta: f64, sigma: f64, dt: f64) -> Self {
        OuNoise {
            theta,
            mu: 0.0,
            sigma,
            dt,
            state: [0.0; ACTION_DIM],
        }
    }

    pub fn reset(&mut self) {
        self.state = [self.mu; ACTION_DIM];
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [f64; ACTION_DIM] {
        let sq = self.dt.sqrt();
        for x in self.state.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *x += self.theta * (self.mu - *x) * self.dt + self.sigma * sq * n;
        }
        self.state
    }
}

/// Exploration scale for a given episode under geometric decay.
pub fn decayed_sigma(sigma0: f64, decay: f64, episode: u64) -> f64 {
    sigma0 * decay.powf(episode as f64)
}
