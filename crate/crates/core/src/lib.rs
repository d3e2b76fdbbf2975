//! Linear-feedback inner codes for the K-user Gaussian broadcast channel with
//! noisy feedback, their concatenation with open-loop outer codes, and
//! Monte-Carlo validation of the analytic rates.
//!
//! Analytic code is generic over [`Real`] (`f32`/`f64`); the aliases below fix
//! `f64`. Simulation and DMC estimation are `f64`-only.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod numerics;
pub mod scalar;
pub mod single_feedback;
pub mod symmetric;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type ChannelParams = channel::ChannelParams<f64>;
pub type FeedbackNoise = channel::FeedbackNoise<f64>;
pub type LinearFeedbackCode = channel::LinearFeedbackCode<f64>;
pub type RatePoint = channel::RatePoint<f64>;
pub type SymmetricParams = symmetric::SymmetricParams<f64>;
pub type FeedbackGains = symmetric::FeedbackGains<f64>;
pub type TwoUserParams = single_feedback::TwoUserParams<f64>;
pub type SkCode = single_feedback::SkCode<f64>;
