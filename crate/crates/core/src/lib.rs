//! Trajectory-feedback regret minimization for two-player zero-sum
//! imperfect-information games.

pub mod error;
pub mod estimators;
pub mod game;
pub mod games;
pub mod learners;
pub mod report;
pub mod selfplay;
pub mod treeplex;

pub use error::{Error, Result};
