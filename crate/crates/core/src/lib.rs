pub mod agent;
pub mod batch;
pub mod cli;
pub mod env;
pub mod envs;
pub mod error;
pub mod generators;
pub mod io;
pub mod registry;
pub mod render;
pub mod rng;
pub mod spec;

pub use env::{auto_reset_wrap, AutoReset, Environment, StepType, TimeStep, Transition};
pub use envs::{AnyEnv, AnyState};
pub use error::{Error, Result};
pub use rng::RngKey;
pub use spec::{Spec, Value};
