//! Design-space mathematics for the symmetric scheme: `f(β)`, the φ equation,
//! blocklength bounds and the sum-rate optimizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inner::{
    a_lb, active_columns, build_q, feedback_power_e, g_sum, h_sum, response_vectors, solve_lambda, spread_ratio,
    SymmetricParams,
};
use crate::error::{domain, invalid, Error, Result};
use crate::linalg::sum_sq;
use crate::numerics::{bisect, golden_section_max, lambert_w0, Bracket};
use crate::scalar::Real;

/// `f(β) = (1−β^{2K})² / (K(1−β²)β^{2K})`.
pub fn f_of_beta<T: Real>(beta: T, users: usize) -> Result<T> {
    if !(beta > T::zero() && beta < T::one()) {
        return Err(domain(format!("f(beta) needs beta in (0,1), got {beta}")));
    }
    let b2k = beta.powi(2 * users as i32);
    Ok((T::one() - b2k).powi(2) / (T::count(users) * (T::one() - beta * beta) * b2k))
}

/// Inverse of [`f_of_beta`] on `(0, ∞)`.
pub fn f_inverse<T: Real>(y: T, users: usize) -> Result<T> {
    if !(y > T::zero()) || !y.is_finite() {
        return Err(domain(format!("f_inverse needs y > 0, got {y}")));
    }
    let half = T::lit(0.5);
    let g = |b: T| f_of_beta(b, users).map(|v| v - y);
    let mut lo = half;
    while g(lo)? <= T::zero() {
        lo = lo * half;
        if lo < T::min_positive_value().sqrt() {
            return Err(Error::Solver(format!("f_inverse: {y} too large to bracket")));
        }
    }
    let mut hi = half;
    while g(hi)? >= T::zero() {
        hi = T::one() - (T::one() - hi) * half;
        if T::one() - hi <= T::epsilon() {
            return Err(Error::Solver(format!("f_inverse: {y} too small to bracket")));
        }
    }
    bisect(|b| g(b).unwrap_or(T::nan()), Bracket::new(lo.min(hi), hi.max(lo)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSolution<T> {
    pub phi: T,
    pub residual: T,
}

/// `(1+Pφ)^{K−1} − [1+(P/K)φ(K−φ)]^K`.
pub fn phi_equation<T: Real>(phi: T, power: T, users: usize) -> T {
    let k = T::count(users);
    (T::one() + power * phi).powi(users as i32 - 1) - (T::one() + power / k * phi * (k - phi)).powi(users as i32)
}

/// Root of the φ equation in `[1, K]`.
pub fn solve_phi<T: Real>(power: T, users: usize) -> Result<PhiSolution<T>> {
    if users < 2 {
        return Err(invalid("phi equation needs K >= 2"));
    }
    if !(power >= T::lit(1e-8)) || !power.is_finite() {
        return Err(domain(format!(
            "phi equation degenerates for P = {power} (both sides tend to 1 below 1e-8)"
        )));
    }
    let fun = |p: T| phi_equation(p, power, users);
    let phi = bisect(fun, Bracket::new(T::one(), T::count(users)))?;
    Ok(PhiSolution { phi, residual: fun(phi) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiselessBound<T> {
    /// `½log2(1+Pφ)`.
    pub rate: T,
    /// `β*` with `β*^{−2K} = 1+Pφ`.
    pub beta: T,
    pub phi: PhiSolution<T>,
}

pub fn noiseless_sum_rate_bound<T: Real>(power: T, users: usize) -> Result<NoiselessBound<T>> {
    let phi = solve_phi(power, users)?;
    let snr = power * phi.phi;
    let rate = snr.ln_1p() / (T::lit(2.0) * T::LN_2());
    let beta = (T::one() + snr).powf(-T::one() / T::count(2 * users));
    Ok(NoiselessBound { rate, beta, phi })
}

/// `½log2(1+P)`.
pub fn no_feedback_sum_rate<T: Real>(power: T) -> T {
    power.ln_1p() / (T::lit(2.0) * T::LN_2())
}

/// `γ_lb = f(2^{−R/K})/P` for `½log2(1+P) < R < ½log2(1+Pφ)`.
pub fn gamma_lower_bound<T: Real>(rate: T, power: T, users: usize) -> Result<T> {
    let lo = no_feedback_sum_rate(power);
    let hi = noiseless_sum_rate_bound(power, users)?.rate;
    if !(rate > lo && rate < hi) {
        return Err(domain(format!("rate {rate} outside the window ({lo}, {hi})")));
    }
    let beta = T::lit(2.0).powf(-rate / T::count(users));
    Ok(f_of_beta(beta, users)? / power)
}

/// `(K/(2(L̃+K−1)))·log2(1+snr)`.
pub fn sum_rate_from_snr<T: Real>(snr: T, ltilde: usize, users: usize) -> T {
    T::count(users) * snr.ln_1p() / (T::lit(2.0) * T::LN_2() * T::count(ltilde + users - 1))
}

/// Sum-rate implied by the SNR lower bound at noiseless feedback.
pub fn lb_sum_rate<T: Real>(ltilde: usize, users: usize, power: T, gamma: T, beta: T) -> T {
    let l = T::count(ltilde + users - 1);
    let snr = a_lb(beta, users) * (T::one() - gamma) * l * power / T::count(users) / (beta * beta).powi(ltilde as i32);
    sum_rate_from_snr(snr, ltilde, users)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlocklengthBound<T> {
    /// Real-valued solution before rounding.
    pub raw: T,
    /// `⌈raw⌉`.
    pub ceiled: u64,
    /// `max{K+1, ⌈raw⌉}`.
    pub bound: u64,
}

/// Lambert-W bound on the inner blocklength needed to reach sum-rate `R`.
///
/// With `A = a_lb(1−γ)P/K`, `a = 2(R/K + log2 β)`, `b = A·2^{−2R(K−1)/K}` and
/// `c = (K−1)b`, the solution of `2^{aL̃} = bL̃ + c` is
/// `−W₀(−(a ln2/b)·2^{−ac/b})/(a ln2) − c/b`.
pub fn blocklength_upper_bound<T: Real>(rate: T, power: T, users: usize, gamma: T, beta: T) -> Result<BlocklengthBound<T>> {
    if !(beta > T::zero() && beta < T::one()) {
        return Err(domain(format!("beta must lie in (0,1), got {beta}")));
    }
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(domain(format!("gamma must lie in [0,1), got {gamma}")));
    }
    let k = T::count(users);
    let ceiling = -k * beta.log2();
    let floor = no_feedback_sum_rate(power);
    if !(rate > floor && rate < ceiling) {
        return Err(domain(format!("rate {rate} outside the window ({floor}, {ceiling}) set by P and beta")));
    }
    let two = T::lit(2.0);
    let a = two * (rate / k + beta.log2());
    let big_a = a_lb(beta, users) * (T::one() - gamma) * power / k;
    let b = big_a * two.powf(-two * rate * (k - T::one()) / k);
    let c = (k - T::one()) * b;
    let ln2 = T::LN_2();
    let x = -(a * ln2 / b) * two.powf(-a * c / b);
    let w = lambert_w0(x).map_err(|_| domain(format!("no real solution: Lambert argument {x} < -1/e")))?;
    let raw = -w / (a * ln2) - c / b;
    let ceiled = raw.ceil().to_u64().unwrap_or(0);
    Ok(BlocklengthBound { raw, ceiled, bound: ceiled.max(users as u64 + 1) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlocklengthRow {
    pub rate: f64,
    pub gamma: f64,
    pub beta: f64,
    pub ltilde_ub: u64,
}

/// `n` evenly spaced window fractions from 0.01 to 0.9.
pub fn blocklength_fractions(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.01],
        _ => (0..n).map(|i| 0.01 + 0.89 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One point of the blocklength curve: `γ = γ_lb + margin·(1−γ_lb)`, `β = f⁻¹(γP)`.
pub fn blocklength_point(power: f64, users: usize, fraction: f64, margin: f64) -> Result<BlocklengthRow> {
    let lo = no_feedback_sum_rate(power);
    let hi = noiseless_sum_rate_bound(power, users)?.rate;
    let rate = lo + fraction * (hi - lo);
    let glb = gamma_lower_bound(rate, power, users)?;
    let gamma = glb + margin * (1.0 - glb);
    let beta = f_inverse(gamma * power, users)?;
    let b = blocklength_upper_bound(rate, power, users, gamma, beta)?;
    Ok(BlocklengthRow { rate, gamma, beta, ltilde_ub: b.bound })
}

pub fn blocklength_curve(power: f64, users: usize, n_points: usize) -> Result<Vec<BlocklengthRow>> {
    blocklength_fractions(n_points).into_iter().map(|fr| blocklength_point(power, users, fr, 0.2)).collect()
}

/// Constructive sum-rate witness at noisy feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyWitness {
    pub rate: f64,
    pub gamma: f64,
    pub beta: f64,
    pub beta0: f64,
    pub ltilde0: usize,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub epsilon: f64,
    /// Sum-rate with gains from the noiseless limit at feedback noise `epsilon`.
    pub achieved: f64,
}

fn closed_form_rate(ltilde: usize, users: usize, power: f64, gamma: f64, beta: f64, s2: f64) -> f64 {
    let l = (ltilde + users - 1) as f64;
    let num = (1.0 - gamma) * l * power / users as f64;
    let snr = num / (g_sum(ltilde, users, beta) + s2 * h_sum(ltilde, users, beta));
    sum_rate_from_snr(snr, ltilde, users)
}

/// Follows the existence argument step by step: pick `γ` with headroom, then
/// `β`, a slightly larger `β₀`, a blocklength, and a feedback-noise level.
pub fn noisy_feedback_witness(rate: f64, power: f64, users: usize, max_ltilde: usize) -> Result<NoisyWitness> {
    let floor = no_feedback_sum_rate(power);
    let top = noiseless_sum_rate_bound(power, users)?.rate;
    if !(rate > 0.0 && rate < top) {
        return Err(domain(format!("rate {rate} outside (0, {top})")));
    }
    let target = 0.5 * (rate.max(floor) + top);
    let headroom = |g: f64| -> f64 {
        match noiseless_sum_rate_bound(power * g, users) {
            Ok(b) => b.rate - target,
            Err(_) => f64::NAN,
        }
    };
    let gamma = bisect(headroom, Bracket::new(1e-6, 1.0).tol(1e-14))?;
    let beta = f_inverse(power * gamma, users)?;
    let k = users as f64;
    let mid = 0.5 * (-k * beta.log2() + rate);
    let beta0 = 2f64.powf(-mid / k);
    let epsilon1 = power * gamma / f_of_beta(beta0, users)? - 1.0;
    let ltilde0 = (users + 1..=max_ltilde)
        .find(|&lt| closed_form_rate(lt, users, power, gamma, beta0, 0.0) > rate)
        .ok_or_else(|| Error::Solver(format!("no Ltilde <= {max_ltilde} exceeds rate {rate}")))?;
    let mut epsilon2 = 1.0;
    while closed_form_rate(ltilde0, users, power, gamma, beta0, epsilon2) <= rate {
        epsilon2 *= 0.5;
        if epsilon2 < 1e-300 {
            return Err(Error::Solver("feedback noise level underflow".into()));
        }
    }
    let epsilon = epsilon1.min(epsilon2);
    Ok(NoisyWitness {
        rate,
        gamma,
        beta,
        beta0,
        ltilde0,
        epsilon1,
        epsilon2,
        epsilon,
        achieved: closed_form_rate(ltilde0, users, power, gamma, beta0, epsilon),
    })
}

/// Feedback power `K(1+σ_n²)e(L̃,β)` of the noiseless-limit gains fits in `γLP`.
pub fn noiseless_gains_fit(params: &SymmetricParams<f64>) -> bool {
    let k = params.users as f64;
    let e = feedback_power_e(params.ltilde, params.beta, params.users);
    k * (1.0 + params.feedback_noise) * e <= params.gamma * params.blocklength() as f64 * params.power
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub lmin: usize,
    pub lmax: usize,
    pub beta_grid: usize,
    pub gamma_grid: usize,
    pub refine_rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { lmin: 1, lmax: 64, beta_grid: 64, gamma_grid: 33, refine_rounds: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtildeBest {
    pub ltilde: usize,
    pub sum_rate: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub users: usize,
    pub power: f64,
    pub sigma_n2: f64,
    /// Sum-rate the point was searched for; the optimizer sets it to the supremum found.
    pub r_target: f64,
    pub ltilde: usize,
    pub beta: f64,
    pub gamma: f64,
    pub snr: f64,
    pub achieved_sum_rate: f64,
    pub evaluations: usize,
    pub trace: Vec<LtildeBest>,
}

/// `q` and `‖v_i‖²` for one `(L̃, β)`; reused across `γ`.
struct Responses {
    q: Vec<f64>,
    norms: Vec<f64>,
    f_norm: f64,
}

impl Responses {
    fn new(ltilde: usize, users: usize, beta: f64) -> Self {
        let b = spread_ratio(beta);
        let q = build_q(ltilde, b);
        let norms = response_vectors(ltilde, users, b).iter().map(|v| sum_sq(v)).collect();
        let f_norm = sum_sq(&super::inner::build_f(users, b));
        Self { q, norms, f_norm }
    }

    /// SNR with optimal gains, evaluated from column responses.
    fn snr(&self, ltilde: usize, users: usize, gamma: f64, power: f64, s2: f64) -> f64 {
        let l = (ltilde + users - 1) as f64;
        let k = users as f64;
        let num = (1.0 - gamma) * l * power / k;
        let cols = active_columns(ltilde, users);
        let tail: f64 = self.q[cols..].iter().map(|x| x * x).sum();
        let budget = gamma * l * power / (k * (1.0 + s2) * self.f_norm);
        if cols == 0 || budget <= 0.0 {
            return num / (tail + self.q[..cols].iter().map(|x| x * x).sum::<f64>());
        }
        let s1 = 1.0 + s2;
        let lambda = solve_lambda(&self.q[..cols], &self.norms, s1, budget).unwrap_or(f64::INFINITY);
        let mut den = tail;
        for (i, &n) in self.norms.iter().enumerate() {
            let qi = self.q[i];
            let r = if lambda.is_finite() { -qi * n / (s1 * n + lambda) } else { 0.0 };
            den += (qi + r) * (qi + r) + s2 * r * r;
        }
        num / den
    }
}

fn optimize_ltilde(ltilde: usize, users: usize, power: f64, s2: f64, cfg: &SearchConfig) -> (LtildeBest, usize) {
    let mut evals = 0usize;
    let objective = |beta: f64, gamma: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        let r = Responses::new(ltilde, users, beta);
        sum_rate_from_snr(r.snr(ltilde, users, gamma, power, s2), ltilde, users)
    };
    let nb = cfg.beta_grid.max(1);
    let ng = cfg.gamma_grid.max(2);
    let mut best = LtildeBest { ltilde, sum_rate: f64::NEG_INFINITY, beta: 0.5, gamma: 0.0 };
    for i in 0..nb {
        let beta = (i + 1) as f64 / (nb + 1) as f64;
        let resp = Responses::new(ltilde, users, beta);
        for j in 0..ng {
            let gamma = j as f64 / (ng - 1) as f64;
            evals += 1;
            let r = sum_rate_from_snr(resp.snr(ltilde, users, gamma, power, s2), ltilde, users);
            if r > best.sum_rate {
                best = LtildeBest { ltilde, sum_rate: r, beta, gamma };
            }
        }
    }
    let mut db = 1.0 / (nb + 1) as f64;
    let mut dg = 1.0 / (ng - 1) as f64;
    let (bmin, bmax) = (1e-9, 1.0 - 1e-9);
    for _ in 0..cfg.refine_rounds {
        let g0 = best.gamma;
        let (b, v) = golden_section_max(
            |b| objective(b, g0, &mut evals),
            (best.beta - db).max(bmin),
            (best.beta + db).min(bmax),
            1e-10,
        );
        if v > best.sum_rate {
            best.beta = b;
            best.sum_rate = v;
        }
        let b0 = best.beta;
        let (g, v) = golden_section_max(
            |g| objective(b0, g, &mut evals),
            (best.gamma - dg).max(0.0),
            (best.gamma + dg).min(1.0),
            1e-10,
        );
        if v > best.sum_rate {
            best.gamma = g;
            best.sum_rate = v;
        }
        db *= 0.5;
        dg *= 0.5;
    }
    (best, evals)
}

/// Supremum of the achievable sum-rate over `(L̃, β, γ)` using optimal gains.
///
/// Deterministic: ties go to the smallest `L̃`, then `β`, then `γ`.
pub fn optimize_sum_rate(power: f64, users: usize, sigma_n2: f64, cfg: &SearchConfig) -> Result<DesignPoint> {
    if users < 2 || !users.is_power_of_two() {
        return Err(Error::UnsupportedUsers(users));
    }
    if !(power > 0.0) || !(sigma_n2 >= 0.0) {
        return Err(invalid(format!("need P > 0 and sigma_n2 >= 0, got {power}, {sigma_n2}")));
    }
    if cfg.lmin == 0 || cfg.lmax < cfg.lmin {
        return Err(invalid(format!("Ltilde range {}..={} is empty", cfg.lmin, cfg.lmax)));
    }
    let per: Vec<(LtildeBest, usize)> = (cfg.lmin..=cfg.lmax)
        .into_par_iter()
        .map(|lt| optimize_ltilde(lt, users, power, sigma_n2, cfg))
        .collect();
    let mut best = per[0].0;
    for (b, _) in &per[1..] {
        if b.sum_rate > best.sum_rate {
            best = *b;
        }
    }
    let snr = Responses::new(best.ltilde, users, best.beta).snr(best.ltilde, users, best.gamma, power, sigma_n2);
    Ok(DesignPoint {
        users,
        power,
        sigma_n2,
        r_target: best.sum_rate,
        ltilde: best.ltilde,
        beta: best.beta,
        gamma: best.gamma,
        snr,
        achieved_sum_rate: best.sum_rate,
        evaluations: per.iter().map(|(_, e)| e).sum(),
        trace: per.into_iter().map(|(b, _)| b).collect(),
    })
}
