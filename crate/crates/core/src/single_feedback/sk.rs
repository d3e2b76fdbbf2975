use serde::{Deserialize, Serialize};

use super::dmc::Codebook;
use super::TwoUserParams;
use crate::channel::{rate_from_snr, ChannelParams, FeedbackNoise, LinearFeedbackCode};
use crate::error::{domain, invalid, Result};
use crate::linalg::{dot, sub, sum_sq, unit, Matrix};
use crate::scalar::Real;

/// Single-user feedback code in matrix form.
///
/// Slot 1 carries `θ`; slot `ℓ ≥ 2` carries `c_ℓ·ε_{ℓ−1}`, the transmitter's
/// replica of the receiver's running estimation error, scaled to the per-use
/// power `(1−δ_IS)P`. The combiner applies the same recursive gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkCode<T> {
    pub blocklength: usize,
    pub power: T,
    pub design_noise: T,
    pub delta_is: T,
    pub gain: Vec<T>,
    pub filter: Matrix<T>,
    pub combiner: Vec<T>,
    /// `qᵀ(I+F)`, accumulated multiplicatively (no cancellation).
    pub error_response: Vec<T>,
}

impl<T: Real> SkCode<T> {
    /// `E[θ²] = (1−δ_IS)P`.
    pub fn msg_power(&self) -> T {
        (T::one() - self.delta_is) * self.power
    }

    pub fn to_linear_code(&self) -> Result<LinearFeedbackCode<T>> {
        LinearFeedbackCode::new(
            vec![self.gain.clone()],
            vec![self.filter.clone()],
            vec![self.combiner.clone()],
            vec![self.msg_power()],
        )
    }

    pub fn channel(&self, sigma_z1: T, sigma_n1: T) -> Result<ChannelParams<T>> {
        ChannelParams::new(self.power, vec![sigma_z1], vec![FeedbackNoise::Finite(sigma_n1)])
    }

    /// Total transmit energy `E[θ²] + σ_eff²‖F‖_F²` at the design noise.
    pub fn energy(&self) -> T {
        self.msg_power() * sum_sq(&self.gain) + self.design_noise * self.filter.frobenius_sq()
    }
}

pub fn build_sk_code<T: Real>(blocklength: usize, power: T, sigma_eff2: T, delta_is: T) -> Result<SkCode<T>> {
    if blocklength == 0 {
        return Err(invalid("blocklength must be >= 1"));
    }
    if !(power >= T::zero()) || !(sigma_eff2 > T::zero()) {
        return Err(invalid(format!("need power >= 0 and sigma_eff2 > 0, got {power}, {sigma_eff2}")));
    }
    if !(delta_is >= T::zero() && delta_is <= T::one()) {
        return Err(invalid(format!("delta_IS must lie in [0,1], got {delta_is}")));
    }
    let l = blocklength;
    let p = (T::one() - delta_is) * power;
    let rho = sigma_eff2 / (p + sigma_eff2);
    let mut filter = Matrix::zeros(l, l);
    let mut combiner = unit::<T>(l, 0);
    let mut err = unit::<T>(l, 0);
    let mut var = sigma_eff2;
    for ell in 1..l {
        if p.is_zero() {
            break;
        }
        let c = (p / var).sqrt();
        for (m, &a) in err.iter().enumerate().take(ell) {
            filter.set(ell, m, c * a);
        }
        let k = c * var / (p + sigma_eff2);
        for a in err.iter_mut().take(ell) {
            *a = *a * rho;
        }
        err[ell] = -k;
        combiner[ell] = -k;
        var = var * rho;
        if !(var >= T::min_positive_value()) {
            return Err(domain(format!(
                "error variance underflows at slot {}; blocklength {l} too long for SNR {}",
                ell + 1,
                p / sigma_eff2
            )));
        }
    }
    Ok(SkCode {
        blocklength: l,
        power,
        design_noise: sigma_eff2,
        delta_is,
        gain: unit(l, 0),
        filter,
        combiner,
        error_response: err,
    })
}

/// `(q₁ᵀg₁)²E[θ²] / (σ_z1²‖q₁ᵀ(I+F₁)‖² + σ_n1²‖q₁ᵀF₁‖²)`.
pub fn noisy_sk_snr<T: Real>(code: &SkCode<T>, sigma_z1: T, sigma_n1: T) -> T {
    let a = &code.error_response;
    let qf = sub(a, &code.combiner);
    let s = dot(&code.combiner, &code.gain);
    s * s * code.msg_power() / (sigma_z1 * sum_sq(a) + sigma_n1 * sum_sq(&qf))
}

/// `(1/2L)log2(1+SNR)` of the feedback code for user 1 at its true feedback noise.
pub fn concatenated_r1<T: Real>(blocklength: usize, params: &TwoUserParams<T>, delta_is: T) -> Result<T> {
    params.validate()?;
    if params.p1().is_zero() {
        return Ok(T::zero());
    }
    let code = build_sk_code(blocklength, params.p1(), params.sigma_eff2(), delta_is)?;
    Ok(rate_from_snr(noisy_sk_snr(&code, params.forward_noise1, params.feedback_noise1), blocklength))
}

/// Average over codewords of `(q₁ᵀx₂)²/(L·P1)`, clamped to 1: the share of
/// user 1's energy needed to cancel user 2's codeword from its estimate.
pub fn interference_subtraction_fraction<T: Real>(code: &SkCode<T>, codebook: &Codebook) -> Result<T> {
    if codebook.blocklength() != code.blocklength {
        return Err(invalid(format!(
            "codebook length {} differs from code length {}",
            codebook.blocklength(),
            code.blocklength
        )));
    }
    if code.power.is_zero() {
        return Ok(T::one());
    }
    let q: Vec<f64> = code.combiner.iter().map(|v| v.as_f64()).collect();
    let mean = codebook.words().iter().map(|w| dot(&q, w).powi(2)).sum::<f64>() / codebook.len() as f64;
    let frac = mean / (code.blocklength as f64 * code.power.as_f64());
    Ok(T::lit(frac.min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_is_plain_awgn() {
        let c = build_sk_code(1, 4.0f64, 1.0, 0.25).unwrap();
        assert!((noisy_sk_snr(&c, 1.0, 0.3) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_closed_form() {
        let p = 3.0f64;
        for l in [2usize, 5, 12] {
            let c = build_sk_code(l, p, 1.0, 0.0).unwrap();
            let want = p * (1.0 + p).powi(l as i32 - 1);
            let got = noisy_sk_snr(&c, 1.0, 0.0);
            assert!(((got - want) / want).abs() < 1e-12, "L={l}");
        }
    }

    #[test]
    fn power_is_tight() {
        let c = build_sk_code(30, 5.0f64, 1.1, 0.1).unwrap();
        let budget = 30.0 * 0.9 * 5.0;
        assert!(((c.energy() - budget) / budget).abs() < 1e-9);
        assert!(c.filter.is_strictly_lower());
    }

    #[test]
    fn underflow_is_reported() {
        assert!(build_sk_code(2000, 100.0f64, 1.0, 0.0).is_err());
    }
}
