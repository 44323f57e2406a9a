//! Fixed-architecture networks for the actor-critic pair.

pub mod actor;
pub mod adam;
pub mod critic;
pub mod gradcheck;
pub mod mlp;

pub use actor::{assemble_action_vector, sigmoid_action_map, Actor, ActorCache};
pub use adam::Adam;
pub use critic::{ActionValue, Critic};
pub use gradcheck::gradient_check;
pub use mlp::{soft_update, Activation, Layer, Mlp, MlpGrads};
