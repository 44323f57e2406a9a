use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::error::TrainError;
use crate::netcore::{soft_update, ActionValue, Actor, Adam, Critic};

use super::replay::Batch;

/// Main and target networks with their optimisers.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub actor: Actor,
    pub critic: Critic,
    pub actor_target: Actor,
    pub critic_target: Critic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub gamma: f64,
    pub tau: f64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        actor_hidden: &[usize],
        critic_hidden: &[usize],
        lr_actor: f64,
        lr_critic: f64,
        gamma: f64,
        tau: f64,
        rng: &mut R,
    ) -> Self {
        let actor = Actor::new(actor_hidden, rng);
        let critic = Critic::new(critic_hidden, rng);
        Self::from_nets(actor, critic, lr_actor, lr_critic, gamma, tau)
    }

    /// Targets start as copies of the main networks.
    pub fn from_nets(actor: Actor, critic: Critic, lr_actor: f64, lr_critic: f64, gamma: f64, tau: f64) -> Self {
        Agent {
            actor_opt: Adam::for_params(&actor.net.param_slices(), lr_actor),
            critic_opt: Adam::for_params(&critic.net.param_slices(), lr_critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            gamma,
            tau,
        }
    }

    /// Bootstrapped targets `r + gamma (1 - done) Q'(s', mu'(s'))`.
    pub fn td_targets(&self, batch: &Batch) -> Result<Array1<f64>, TrainError> {
        let (next_a, _) = self.actor_target.forward(batch.next_states.view())?;
        let q_next = self.critic_target.q(batch.next_states.view(), next_a.view())?;
        Ok(&batch.rewards + &(self.gamma * (1.0 - &batch.dones) * q_next))
    }

    /// One Adam step on the mean squared TD error; returns the pre-step loss.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        let y = self.td_targets(batch)?;
        let (q, cache) = self.critic.forward(batch.states.view(), batch.actions.view())?;
        let err = &q - &y;
        let n = batch.len() as f64;
        let loss = err.mapv(|e| e * e).sum() / n;
        if !loss.is_finite() {
            return Err(diverged(format!("critic loss {loss}")));
        }
        let (grads, _) = self.critic.backward(&cache, &(err * (2.0 / n)))?;
        self.critic_opt
            .step(self.critic.net.param_slices_mut(), &grads.slices())?;
        Ok(loss)
    }

    /// One Adam ascent step on the critic's value of the actor's actions;
    /// returns the pre-step mean Q.
    pub fn actor_update(&mut self, states: ArrayView2<f64>) -> Result<f64, TrainError> {
        actor_update_with(&mut self.actor, &mut self.actor_opt, &self.critic, states)
    }

    pub fn soft_update_targets(&mut self) -> Result<(), TrainError> {
        soft_update(&mut self.actor_target.net, &self.actor.net, self.tau)?;
        soft_update(&mut self.critic_target.net, &self.critic.net, self.tau)?;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.actor.net.is_finite()
            && self.critic.net.is_finite()
            && self.actor_target.net.is_finite()
            && self.critic_target.net.is_finite()
            && self.actor_opt.is_finite()
            && self.critic_opt.is_finite()
    }
}

/// Deterministic policy gradient step against any action-value function.
pub fn actor_update_with<Q: ActionValue + ?Sized>(
    actor: &mut Actor,
    opt: &mut Adam,
    critic: &Q,
    states: ArrayView2<f64>,
) -> Result<f64, TrainError> {
    let (actions, cache) = actor.forward(states)?;
    let (q, dq_da) = critic.value_and_action_grad(states, actions.view())?;
    let n = states.nrows() as f64;
    let mean_q = q.sum() / n;
    if !mean_q.is_finite() {
        return Err(diverged(format!("actor objective {mean_q}")));
    }
    let d_actions: Array2<f64> = dq_da * (-1.0 / n);
    let grads = actor.backward(&cache, d_actions.view())?;
    opt.step(actor.net.param_slices_mut(), &grads.slices())?;
    Ok(mean_q)
}

fn diverged(reason: String) -> TrainError {
    TrainError::Diverged {
        episode: 0,
        reason,
        dump: None,
    }
}
