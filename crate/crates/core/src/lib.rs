//! Distributed K-serial stable coalition formation for multi-robot teams,
//! with a territory-defense simulator and brute-force reference checks.
//!
//! The coalition model, engine and oracle are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix `f64`.

pub mod coalition;
pub mod engine;
pub mod experiments;
pub mod fixtures;
pub mod geometry;
pub mod netsim;
pub mod oracle;
pub mod tasks;
pub mod world;
mod scalar;

pub use coalition::{
    Assignment, ChainTransformation, CoalitionError, CoalitionStructure, RobotId, Switch, TaskDescriptor,
    TaskId, TaskKind, UtilityModel,
};
pub use scalar::Scalar;

pub type Structure = CoalitionStructure<f64>;
pub type Structure32 = CoalitionStructure<f32>;
pub type Config = engine::EngineConfig<f64>;
pub type Stats = engine::RunStats<f64>;
