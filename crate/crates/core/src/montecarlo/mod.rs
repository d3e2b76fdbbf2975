//! Monte-Carlo transmission of linear feedback codes.

pub mod rng;
mod sim;

pub use sim::{
    pam_levels, q_function, simulate, simulate_concatenated_ser, verify_nulling_empirical, Estimate, NullingReport,
    SerEstimate, SimConfig, SimReport,
};
