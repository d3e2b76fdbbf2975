use serde::{Deserialize, Serialize};

use super::blahut::blahut_arimoto;
use super::dmc::{estimate_dmc, Codebook, Receiver2Channel};
use super::sk::{build_sk_code, interference_subtraction_fraction, noisy_sk_snr};
use super::waterfill::{r1_pf, r2_pf};
use super::TwoUserParams;
use crate::channel::rate_from_snr;
use crate::error::{domain, invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSearch {
    /// Feedback noise levels tried, in order.
    pub noise_levels: Vec<f64>,
    pub blocklengths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub capacity_tol: f64,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        Self {
            noise_levels: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            blocklengths: (2..=8).collect(),
            trials: 50_000,
            seed: 0x5eed,
            capacity_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessAttempt {
    pub sigma_n1: f64,
    pub blocklength: usize,
    pub delta_is: f64,
    pub r1: f64,
    pub dmc_capacity: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub r1_target: f64,
    pub r2_target: f64,
    pub witness: Option<WitnessAttempt>,
    pub trivial: bool,
    pub attempts: Vec<WitnessAttempt>,
}

/// Finds `δ_IS` consistent with the code it parameterises: rebuild the code
/// until the codebook's cancellation energy fits in the reserved share.
fn settle_delta_is(l: usize, params: &TwoUserParams<f64>, codebook: &Codebook) -> Result<f64> {
    let mut delta = 0.0;
    for _ in 0..100 {
        let code = build_sk_code(l, params.p1(), params.sigma_eff2(), delta)?;
        let need = interference_subtraction_fraction(&code, codebook)?;
        if need <= delta {
            return Ok(delta);
        }
        delta = need;
    }
    Ok(delta)
}

fn attempt(l: usize, sigma_n1: f64, base: &TwoUserParams<f64>, cfg: &WitnessSearch) -> Result<WitnessAttempt> {
    let params = base.with_feedback_noise(sigma_n1);
    let codebook = Codebook::antipodal(l, params.p2())?;
    let delta_is = settle_delta_is(l, &params, &codebook)?;
    let code = build_sk_code(l, params.p1(), params.sigma_eff2(), delta_is)?;
    let r1 = rate_from_snr(noisy_sk_snr(&code, params.forward_noise1, sigma_n1), l);
    let channel = Receiver2Channel::from_sk(&code, params.sigma_eff2(), params.forward_noise2)?;
    let dmc = estimate_dmc(&codebook, &channel, cfg.trials, cfg.seed ^ ((l as u64) << 32))?;
    let cap = blahut_arimoto(&dmc.transition, cfg.capacity_tol)?;
    Ok(WitnessAttempt { sigma_n1, blocklength: l, delta_is, r1, dmc_capacity: cap.bits, r2: cap.bits / l as f64 })
}

/// Searches feedback noise levels and blocklengths for a concrete code pair
/// beating `(R1, R2)` with user 1's feedback corrupted by noise.
pub fn concatenated_witness(r1: f64, r2: f64, params: &TwoUserParams<f64>, cfg: &WitnessSearch) -> Result<WitnessReport> {
    params.validate()?;
    if r1 < 0.0 || r2 < 0.0 {
        return Err(invalid("target rates must be >= 0"));
    }
    let base = params.with_feedback_noise(0.0);
    let lim1 = r1_pf(base.p1(), base.forward_noise1);
    let lim2 = r2_pf(&base)?.rate;
    if r1 > 0.0 && r1 >= lim1 {
        return Err(domain(format!("R1 = {r1} is not below R1pf = {lim1}")));
    }
    if r2 > 0.0 && r2 >= lim2 {
        return Err(domain(format!("R2 = {r2} is not below R2pf = {lim2}")));
    }
    if cfg.noise_levels.is_empty() || cfg.blocklengths.is_empty() {
        return Err(invalid("search grid is empty"));
    }
    if r1 == 0.0 && r2 == 0.0 {
        let w = WitnessAttempt {
            sigma_n1: cfg.noise_levels[0],
            blocklength: cfg.blocklengths[0],
            delta_is: 0.0,
            r1: 0.0,
            dmc_capacity: 0.0,
            r2: 0.0,
        };
        return Ok(WitnessReport { r1_target: r1, r2_target: r2, witness: Some(w), trivial: true, attempts: vec![] });
    }
    let mut attempts = Vec::new();
    for &s in &cfg.noise_levels {
        for &l in &cfg.blocklengths {
            let a = attempt(l, s, params, cfg)?;
            let ok = a.r1 > r1 && a.r2 > r2;
            attempts.push(a.clone());
            if ok {
                return Ok(WitnessReport { r1_target: r1, r2_target: r2, witness: Some(a), trivial: false, attempts });
            }
        }
    }
    Ok(WitnessReport { r1_target: r1, r2_target: r2, witness: None, trivial: false, attempts })
}
