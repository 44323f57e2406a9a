/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod checkpoint;
pub mod config;
pub mod ddpg;
pub mod env;
pub mod evalkit;
pub mod error;
pub mod muscle;
pub mod netcore;
pub mod plant;
pub mod seeding;
pub mod selfcheck;
pub mod vecmath;
