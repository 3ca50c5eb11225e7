//! Gridworld, instruction language, verifier, levels, expert bot and
//! sample-efficiency estimation.

pub mod grid;
pub mod lang;
pub mod verifier;
pub mod bot;
pub mod levels;
pub mod env;
pub mod harness;
pub mod sample_eff;

pub type GpModel32 = sample_eff::GpModel<f32>;
pub type GpModel64 = sample_eff::GpModel<f64>;
pub type KminPosterior32 = sample_eff::KminPosterior<f32>;
pub type KminPosterior64 = sample_eff::KminPosterior<f64>;
pub type CredibleInterval32 = sample_eff::CredibleInterval<f32>;
pub type CredibleInterval64 = sample_eff::CredibleInterval<f64>;
pub type Hyper32 = sample_eff::Hyper<f32>;
pub type Hyper64 = sample_eff::Hyper<f64>;
