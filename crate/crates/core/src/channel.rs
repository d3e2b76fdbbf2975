//! K-user Gaussian broadcast channel with per-receiver feedback links and the
//! general linear feedback code `(g_k, F_k, q_k)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, dot2, sum_sq, Matrix};
use crate::scalar::Real;

/// Variance of a feedback link, or no link at all.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackNoise<T> {
    Finite(T),
    Absent,
}

impl<T: Real> FeedbackNoise<T> {
    pub fn finite(&self) -> Option<T> {
        match *self {
            Self::Finite(v) => Some(v),
            Self::Absent => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    power: T,
    forward_noise: Vec<T>,
    feedback_noise: Vec<FeedbackNoise<T>>,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(power: T, forward_noise: Vec<T>, feedback_noise: Vec<FeedbackNoise<T>>) -> Result<Self> {
        if forward_noise.is_empty() {
            return Err(invalid("at least one user required"));
        }
        if forward_noise.len() != feedback_noise.len() {
            return Err(Error::Dimension(format!(
                "{} forward noise variances but {} feedback entries",
                forward_noise.len(),
                feedback_noise.len()
            )));
        }
        if !(power > T::zero()) || !power.is_finite() {
            return Err(invalid(format!("power must be positive and finite, got {power}")));
        }
        if let Some(v) = forward_noise.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
            return Err(invalid(format!("forward noise variance must be positive, got {v}")));
        }
        for n in &feedback_noise {
            if let FeedbackNoise::Finite(v) = n {
                if !(*v >= T::zero()) || !v.is_finite() {
                    return Err(invalid(format!("feedback noise variance must be >= 0, got {v}")));
                }
            }
        }
        Ok(Self { power, forward_noise, feedback_noise })
    }

    /// `K` users with identical forward and feedback noise.
    pub fn symmetric(users: usize, power: T, forward: T, feedback: T) -> Result<Self> {
        Self::new(power, vec![forward; users], vec![FeedbackNoise::Finite(feedback); users])
    }

    pub fn users(&self) -> usize {
        self.forward_noise.len()
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn forward_noise(&self) -> &[T] {
        &self.forward_noise
    }

    pub fn feedback_noise(&self) -> &[FeedbackNoise<T>] {
        &self.feedback_noise
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFeedbackCode<T> {
    len: usize,
    gains: Vec<Vec<T>>,
    filters: Vec<Matrix<T>>,
    combiners: Vec<Vec<T>>,
    msg_power: Vec<T>,
}

impl<T: Real> LinearFeedbackCode<T> {
    /// Checks shapes only; causality and power are reported by [`validate_code`].
    pub fn new(gains: Vec<Vec<T>>, filters: Vec<Matrix<T>>, combiners: Vec<Vec<T>>, msg_power: Vec<T>) -> Result<Self> {
        let k = gains.len();
        if k == 0 {
            return Err(Error::Dimension("code has no users".into()));
        }
        if filters.len() != k || combiners.len() != k || msg_power.len() != k {
            return Err(Error::Dimension(format!(
                "user count differs: g {k}, F {}, q {}, E[theta^2] {}",
                filters.len(),
                combiners.len(),
                msg_power.len()
            )));
        }
        let len = gains[0].len();
        if len == 0 {
            return Err(Error::Dimension("blocklength must be >= 1".into()));
        }
        for u in 0..k {
            if gains[u].len() != len || combiners[u].len() != len {
                return Err(Error::Dimension(format!("user {u}: vectors must have length {len}")));
            }
            if filters[u].rows() != len || filters[u].cols() != len {
                return Err(Error::Dimension(format!(
                    "user {u}: F is {}x{}, expected {len}x{len}",
                    filters[u].rows(),
                    filters[u].cols()
                )));
            }
        }
        if let Some(p) = msg_power.iter().find(|p| !(**p >= T::zero())) {
            return Err(invalid(format!("message power must be >= 0, got {p}")));
        }
        Ok(Self { len, gains, filters, combiners, msg_power })
    }

    pub fn blocklength(&self) -> usize {
        self.len
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }

    pub fn gain(&self, k: usize) -> &[T] {
        &self.gains[k]
    }

    pub fn filter(&self, k: usize) -> &Matrix<T> {
        &self.filters[k]
    }

    pub fn combiner(&self, k: usize) -> &[T] {
        &self.combiners[k]
    }

    pub fn msg_power(&self, k: usize) -> T {
        self.msg_power[k]
    }

    pub fn with_filter(mut self, k: usize, f: Matrix<T>) -> Result<Self> {
        if f.rows() != self.len || f.cols() != self.len {
            return Err(Error::Dimension("replacement filter has wrong shape".into()));
        }
        self.filters[k] = f;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport<T> {
    /// Per user, the `(row, col)` entries of `F_k` on or above the diagonal that are nonzero.
    pub causality_violations: Vec<Vec<(usize, usize)>>,
    pub power_used: T,
    pub power_budget: T,
}

impl<T: Real> ValidationReport<T> {
    pub fn causal(&self) -> bool {
        self.causality_violations.iter().all(Vec::is_empty)
    }

    pub fn power_ok(&self) -> bool {
        self.power_used <= self.power_budget * (T::one() + T::epsilon() * T::lit(64.0))
    }

    /// `power_used − budget` when positive.
    pub fn excess(&self) -> T {
        (self.power_used - self.power_budget).max(T::zero())
    }

    pub fn is_valid(&self) -> bool {
        self.causal() && self.power_ok()
    }
}

fn check_users<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>) -> Result<()> {
    if code.users() != params.users() {
        return Err(Error::Dimension(format!(
            "code has {} users, channel has {}",
            code.users(),
            params.users()
        )));
    }
    Ok(())
}

/// `σ_z² + σ_n²` for user `j`, or an error when the link is absent but `F_j ≠ 0`.
fn effective_feedback<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>, j: usize) -> Result<Option<T>> {
    match params.feedback_noise[j] {
        FeedbackNoise::Finite(n) => Ok(Some(params.forward_noise[j] + n)),
        FeedbackNoise::Absent if code.filters[j].is_zero() => Ok(None),
        FeedbackNoise::Absent => Err(Error::Configuration(format!(
            "user {j} has no feedback link but a nonzero feedback filter"
        ))),
    }
}

/// Transmit power `Σ_k ‖g_k‖²E[θ_k²] + Σ_k (σ_zk²+σ_nk²)‖F_k‖_F²` over the whole block.
pub fn total_power<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>) -> Result<T> {
    check_users(code, params)?;
    let mut total = T::zero();
    for k in 0..code.users() {
        total = total + sum_sq(&code.gains[k]) * code.msg_power[k];
        if let Some(v) = effective_feedback(code, params, k)? {
            total = total + v * code.filters[k].frobenius_sq();
        }
    }
    Ok(total)
}

pub fn validate_code<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>) -> Result<ValidationReport<T>> {
    check_users(code, params)?;
    Ok(ValidationReport {
        causality_violations: code.filters.iter().map(Matrix::causality_violations).collect(),
        power_used: total_power(code, params)?,
        power_budget: T::count(code.len) * params.power,
    })
}

fn snr_terms<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>, k: usize, with_interference: bool) -> Result<T> {
    check_users(code, params)?;
    if k >= code.users() {
        return Err(invalid(format!("user index {k} out of range")));
    }
    let q = &code.combiners[k];
    let signal = dot2(q, &code.gains[k]);
    let numerator = signal * signal * code.msg_power[k];

    let mut denom = T::zero();
    for j in 0..code.users() {
        let eff = effective_feedback(code, params, j)?;
        let qf = code.filters[j].vec_mul(q);
        if j == k {
            let mut resid = qf.clone();
            for (r, &qi) in resid.iter_mut().zip(q) {
                *r = *r + qi;
            }
            denom = denom + params.forward_noise[k] * sum_sq(&resid);
            if let FeedbackNoise::Finite(n) = params.feedback_noise[k] {
                denom = denom + n * sum_sq(&qf);
            }
        } else {
            if with_interference {
                let cross = dot2(q, &code.gains[j]);
                denom = denom + cross * cross * code.msg_power[j];
            }
            if let Some(v) = eff {
                denom = denom + v * sum_sq(&qf);
            }
        }
    }
    if denom <= T::zero() {
        return Err(Error::Degenerate(format!("receiver {k} has zero noise in its estimate")));
    }
    Ok(numerator / denom)
}

/// Post-combining SNR of receiver `k`.
///
/// The cross-user message term enters squared, `(q_kᵀg_i)²E[θ_i²]`.
pub fn snr_receiver<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>, k: usize) -> Result<T> {
    snr_terms(code, params, k, true)
}

/// SNR of receiver `k` with the other users' message terms dropped.
pub fn snr_without_interference<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>, k: usize) -> Result<T> {
    snr_terms(code, params, k, false)
}

/// `log2(1 + snr) / (2L)` in bits per channel use.
pub fn rate_from_snr<T: Real>(snr: T, blocklength: usize) -> T {
    snr.ln_1p() / (T::LN_2() * T::count(2 * blocklength))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub rates: Vec<T>,
    pub snrs: Vec<T>,
    pub blocklength: usize,
}

impl<T: Real> RatePoint<T> {
    pub fn sum_rate(&self) -> T {
        self.rates.iter().copied().sum()
    }
}

pub fn achievable_rate_tuple<T: Real>(code: &LinearFeedbackCode<T>, params: &ChannelParams<T>) -> Result<RatePoint<T>> {
    let snrs = (0..code.users())
        .map(|k| {
            // A zero combiner response gives a zero rate rather than a degenerate error.
            if dot(code.combiner(k), code.gain(k)).is_zero() {
                Ok(T::zero())
            } else {
                snr_receiver(code, params, k)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let rates = snrs.iter().map(|&s| rate_from_snr(s, code.len)).collect();
    Ok(RatePoint { rates, snrs, blocklength: code.len })
}

/// Upper bound `((σ_z²+σ_n²)/(σ_z²σ_n²))·L·P` on the interference-free SNR of
/// any power-feasible linear code for receiver `k`; at unit forward noise this
/// is `((1+σ_n²)/σ_n²)·L·P`.
pub fn linear_snr_ceiling<T: Real>(params: &ChannelParams<T>, k: usize, blocklength: usize) -> Result<T> {
    let lp = T::count(blocklength) * params.power;
    match params.feedback_noise.get(k) {
        None => Err(invalid(format!("user index {k} out of range"))),
        Some(FeedbackNoise::Absent) => Ok(lp / params.forward_noise[k]),
        Some(FeedbackNoise::Finite(n)) if n.is_zero() => Err(Error::Domain(
            "ceiling is infinite for noiseless feedback".into(),
        )),
        Some(FeedbackNoise::Finite(n)) => {
            let z = params.forward_noise[k];
            Ok((z + *n) / (z * *n) * lp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(p: f64, sz: f64) -> (LinearFeedbackCode<f64>, ChannelParams<f64>) {
        let code = LinearFeedbackCode::new(vec![vec![1.0]], vec![Matrix::zeros(1, 1)], vec![vec![1.0]], vec![p]).unwrap();
        let params = ChannelParams::new(p, vec![sz], vec![FeedbackNoise::Finite(0.0)]).unwrap();
        (code, params)
    }

    #[test]
    fn scalar_awgn() {
        let (code, params) = scalar(10.0, 2.0);
        let rep = validate_code(&code, &params).unwrap();
        assert!(rep.is_valid());
        assert_eq!(rep.power_used, 10.0);
        assert_eq!(snr_receiver(&code, &params, 0).unwrap(), 5.0);
        let rp = achievable_rate_tuple(&code, &params).unwrap();
        assert!((rp.rates[0] - 0.5 * 6f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_entry_is_a_violation() {
        let (code, params) = scalar(1.0, 1.0);
        let mut f = Matrix::zeros(1, 1);
        f.set(0, 0, 0.5);
        let code = code.with_filter(0, f).unwrap();
        let rep = validate_code(&code, &params).unwrap();
        assert!(!rep.causal());
        assert_eq!(rep.causality_violations[0], vec![(0, 0)]);
    }

    #[test]
    fn absent_link_with_filter_is_rejected() {
        let mut f = Matrix::zeros(2, 2);
        f.set(1, 0, 1.0);
        let code = LinearFeedbackCode::new(vec![vec![1.0, 0.0]], vec![f], vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        let params = ChannelParams::new(1.0, vec![1.0], vec![FeedbackNoise::Absent]).unwrap();
        assert!(matches!(snr_receiver(&code, &params, 0), Err(Error::Configuration(_))));
    }

    #[test]
    fn zero_combiner_gives_zero_rate() {
        let code = LinearFeedbackCode::new(vec![vec![1.0, 0.0]], vec![Matrix::zeros(2, 2)], vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        let params = ChannelParams::symmetric(1, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(achievable_rate_tuple(&code, &params).unwrap().rates, vec![0.0]);
    }

    #[test]
    fn ceiling_values() {
        let p = ChannelParams::symmetric(1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(linear_snr_ceiling(&p, 0, 10).unwrap(), 20.0);
        let absent = ChannelParams::new(1.0, vec![1.0], vec![FeedbackNoise::Absent]).unwrap();
        assert_eq!(linear_snr_ceiling(&absent, 0, 10).unwrap(), 10.0);
        let noiseless = ChannelParams::symmetric(1, 1.0, 1.0, 0.0).unwrap();
        assert!(linear_snr_ceiling(&noiseless, 0, 10).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::symmetric(2, 0.0, 1.0, 0.0).is_err());
        assert!(ChannelParams::symmetric(2, 1.0, 0.0, 0.0).is_err());
        assert!(ChannelParams::symmetric(2, 1.0, 1.0, -1.0).is_err());
        assert!(ChannelParams::<f64>::new(1.0, vec![1.0], vec![]).is_err());
    }
}
