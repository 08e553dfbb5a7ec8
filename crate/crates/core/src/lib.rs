//! Simulation and verification of learning-rate-schedule effects on
//! generalization for early-stopped linear regression.
//!
//! A train loss and a population loss share eigenvectors but not
//! curvatures. Gradient flow and annealed gradient descent (a large step
//! that oscillates on the top train direction, then flow) stop on the same
//! train-loss level set at points with different population loss.
//!
//! - [`quadratic`]: diagonal train/population problems, losses, datasets.
//! - [`optimizers`]: closed-form flow, descent, annealing, Euler oracle.
//! - [`lemma`]: hypotheses and bounds of the gap lemma, checked against
//!   realized runs.
//! - [`experiment`]: sampled three-point datasets and Monte Carlo summaries.

pub mod error;
pub mod experiment;
pub mod lemma;
pub mod optimizers;
pub mod quadratic;

pub use error::{Error, Result};
pub use quadratic::{DiagonalProblem, Phase, ResidualState};
