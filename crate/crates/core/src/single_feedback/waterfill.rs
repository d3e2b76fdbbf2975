use serde::{Deserialize, Serialize};

use super::TwoUserParams;
use crate::error::{invalid, Error, Result};
use crate::numerics::{adaptive_simpson, bisect, Bracket};
use crate::scalar::Real;

/// Absolute tolerance of every frequency-domain integral.
pub const QUAD_TOL: f64 = 1e-9;

/// `½log2(1 + P1/σ_z1²)`.
pub fn r1_pf<T: Real>(p1: T, sigma_z1: T) -> T {
    (p1 / sigma_z1).ln_1p() / (T::lit(2.0) * T::LN_2())
}

/// Receiver-2 noise-plus-interference spectrum when user 1 runs the feedback
/// code with power `P1` designed for noise `σ_eff²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferencePsd<T> {
    pub p1: T,
    pub sigma_eff2: T,
    pub sigma_z2: T,
}

impl<T: Real> InterferencePsd<T> {
    pub fn new(p1: T, sigma_eff2: T, sigma_z2: T) -> Result<Self> {
        if !(p1 >= T::zero()) || !(sigma_eff2 > T::zero()) || !(sigma_z2 > T::zero()) {
            return Err(invalid(format!(
                "need P1 >= 0 and positive variances, got {p1}, {sigma_eff2}, {sigma_z2}"
            )));
        }
        Ok(Self { p1, sigma_eff2, sigma_z2 })
    }

    pub fn from_params(p: &TwoUserParams<T>) -> Result<Self> {
        Self::new(p.p1(), p.sigma_eff2(), p.forward_noise2)
    }

    /// `α = √(1 + P1/σ_eff²)`.
    pub fn alpha(&self) -> T {
        (T::one() + self.p1 / self.sigma_eff2).sqrt()
    }

    pub fn value(&self, f: T) -> T {
        if self.p1.is_zero() {
            return self.sigma_z2;
        }
        let a = self.alpha();
        let a2m1 = self.p1 / self.sigma_eff2;
        let two = T::lit(2.0);
        let c = (two * T::PI() * f).cos();
        self.sigma_z2 + self.p1 * a2m1 / (a2m1 + two - two * a * c)
    }
}

pub fn interference_psd<T: Real>(f: T, p1: T, sigma_eff2: T, sigma_z2: T) -> Result<T> {
    Ok(InterferencePsd::new(p1, sigma_eff2, sigma_z2)?.value(f))
}

fn half<T: Real>() -> T {
    T::lit(0.5)
}

/// `g(x) = ∫ₓ^{1/2} σ̃²(f) df`.
pub fn g_integral<T: Real>(x: T, psd: &InterferencePsd<T>) -> T {
    g_integral_tol(x, psd, T::lit(QUAD_TOL))
}

fn g_integral_tol<T: Real>(x: T, psd: &InterferencePsd<T>, tol: T) -> T {
    adaptive_simpson(|f| psd.value(f), x, half(), tol)
}

fn level_residual<T: Real>(a: T, psd: &InterferencePsd<T>, p2: T, tol: T) -> T {
    (T::one() - T::lit(2.0) * a) * psd.value(a) - T::lit(2.0) * g_integral_tol(a, psd, tol) - p2
}

/// Cut-off frequency `a` with `(1−2a)σ̃²(a) − 2g(a) = P2`.
pub fn solve_waterlevel<T: Real>(psd: &InterferencePsd<T>, p2: T) -> Result<T> {
    solve_waterlevel_tol(psd, p2, T::lit(QUAD_TOL))
}

fn solve_waterlevel_tol<T: Real>(psd: &InterferencePsd<T>, p2: T, tol: T) -> Result<T> {
    if !(p2 >= T::zero()) {
        return Err(invalid(format!("P2 must be >= 0, got {p2}")));
    }
    let a = bisect(|a| level_residual(a, psd, p2, tol), Bracket::new(T::zero(), half()))?;
    let resid = level_residual(a, psd, p2, tol).abs();
    if resid > T::lit(1e-9) {
        return Err(Error::Solver(format!("water level residual {resid} above 1e-9")));
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The water level covers the whole band.
    Full,
    /// Only `[a, ½]` receives power.
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct R2Result<T> {
    pub rate: T,
    pub branch: Branch,
    /// Water level `2g(0)+P2` or `σ̃²(a)`.
    pub level: T,
    /// Cut-off frequency on the partial branch.
    pub cutoff: Option<T>,
}

/// Open-loop rate of receiver 2 treating user 1's feedback signal as colored noise.
pub fn r2_pf<T: Real>(params: &TwoUserParams<T>) -> Result<R2Result<T>> {
    r2_pf_with_tol(params, T::lit(QUAD_TOL))
}

pub fn r2_pf_with_tol<T: Real>(params: &TwoUserParams<T>, tol: T) -> Result<R2Result<T>> {
    params.validate()?;
    let psd = InterferencePsd::from_params(params)?;
    let p2 = params.p2();
    let two = T::lit(2.0);
    let full = two * g_integral_tol(T::zero(), &psd, tol) + p2;
    let log2 = |x: T| x.log2();
    if full > psd.value(T::zero()) {
        let rate = adaptive_simpson(|f| log2(full / psd.value(f)), T::zero(), half(), tol);
        return Ok(R2Result { rate, branch: Branch::Full, level: full, cutoff: None });
    }
    let a = solve_waterlevel_tol(&psd, p2, tol)?;
    let level = psd.value(a);
    let rate = adaptive_simpson(|f| log2(level / psd.value(f)), a, half(), tol);
    Ok(R2Result { rate: rate.max(T::zero()), branch: Branch::Partial, level, cutoff: Some(a) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint<T> {
    pub delta: T,
    pub r1: T,
    pub r2: T,
    pub branch: Branch,
}

/// Sweeps `δ` uniformly over `[0, 1]`.
pub fn rate_region<T: Real>(params: &TwoUserParams<T>, n_delta: usize) -> Result<Vec<RegionPoint<T>>> {
    if n_delta < 2 {
        return Err(invalid("rate region needs at least 2 delta points"));
    }
    (0..n_delta)
        .map(|i| {
            let delta = T::count(i) / T::count(n_delta - 1);
            let p = params.with_delta(delta);
            let r2 = r2_pf(&p)?;
            Ok(RegionPoint { delta, r1: r1_pf(p.p1(), p.forward_noise1), r2: r2.rate, branch: r2.branch })
        })
        .collect()
}
