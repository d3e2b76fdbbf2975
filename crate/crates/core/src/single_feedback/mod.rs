//! Two-user channel where only receiver 1 has a (noisy) feedback link.

mod blahut;
mod dmc;
mod sk;
mod waterfill;
mod witness;

pub use blahut::{blahut_arimoto, Capacity};
pub use dmc::{estimate_dmc, Codebook, DmcModel, Receiver2Channel, MAX_CODEWORDS};
pub use sk::{build_sk_code, concatenated_r1, interference_subtraction_fraction, noisy_sk_snr, SkCode};
pub use waterfill::{
    g_integral, interference_psd, r1_pf, r2_pf, r2_pf_with_tol, rate_region, solve_waterlevel, Branch, InterferencePsd,
    R2Result, RegionPoint, QUAD_TOL,
};
pub use witness::{concatenated_witness, WitnessAttempt, WitnessReport, WitnessSearch};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoUserParams<T> {
    pub power: T,
    /// Share of the power given to user 1.
    pub delta: T,
    pub forward_noise1: T,
    pub forward_noise2: T,
    pub feedback_noise1: T,
}

impl<T: Real> TwoUserParams<T> {
    pub fn new(power: T, delta: T, forward_noise1: T, forward_noise2: T, feedback_noise1: T) -> Result<Self> {
        let p = Self { power, delta, forward_noise1, forward_noise2, feedback_noise1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= T::zero()) || !self.power.is_finite() {
            return Err(invalid(format!("power must be >= 0, got {}", self.power)));
        }
        if !(self.delta >= T::zero() && self.delta <= T::one()) {
            return Err(invalid(format!("delta must lie in [0,1], got {}", self.delta)));
        }
        for (name, v) in [("sigma_z1", self.forward_noise1), ("sigma_z2", self.forward_noise2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(format!("{name}^2 must be positive, got {v}")));
            }
        }
        if !(self.feedback_noise1 >= T::zero()) || !self.feedback_noise1.is_finite() {
            return Err(invalid(format!("sigma_n1^2 must be >= 0, got {}", self.feedback_noise1)));
        }
        Ok(())
    }

    pub fn p1(&self) -> T {
        self.delta * self.power
    }

    pub fn p2(&self) -> T {
        (T::one() - self.delta) * self.power
    }

    /// `σ_z1² + σ_n1²`, the noise the feedback encoder designs for.
    pub fn sigma_eff2(&self) -> T {
        self.forward_noise1 + self.feedback_noise1
    }

    pub fn with_delta(self, delta: T) -> Self {
        Self { delta, ..self }
    }

    pub fn with_feedback_noise(self, feedback_noise1: T) -> Self {
        Self { feedback_noise1, ..self }
    }
}
