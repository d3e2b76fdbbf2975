//! Symmetric K-user inner code: Hadamard spreading, geometric combiner `q`,
//! structured feedback filter `F` and its gains.
//!
//! Exponent convention: the design parameter `β` of [`SymmetricParams`] is the
//! one appearing in `f(β)`, the SNR closed form and its bounds. The combiner is
//! `q = [1, β, β², …]` and the spreading vector is `f = [1, β⁻¹, …, β^{−(K−1)}]`.
//! [`build_q`] and [`build_f`] are written in terms of `b = √β`, i.e.
//! `q = [1, b², b⁴, …]`, `f = [1, b⁻², …]`; the scheme always calls them with
//! [`spread_ratio`]`(β)`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LinearFeedbackCode};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot2, sum_sq, Matrix};
use crate::numerics::{bisect, Bracket};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams<T> {
    pub users: usize,
    pub ltilde: usize,
    pub beta: T,
    pub gamma: T,
    pub power: T,
    /// Feedback noise variance; forward noise is normalised to 1.
    pub feedback_noise: T,
}

impl<T: Real> SymmetricParams<T> {
    pub fn new(users: usize, ltilde: usize, beta: T, gamma: T, power: T, feedback_noise: T) -> Result<Self> {
        let p = Self { users, ltilde, beta, gamma, power, feedback_noise };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 2 || !self.users.is_power_of_two() {
            return Err(Error::UnsupportedUsers(self.users));
        }
        if self.ltilde == 0 {
            return Err(invalid("Ltilde must be >= 1"));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(invalid(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(invalid(format!("gamma must lie in [0,1], got {}", self.gamma)));
        }
        if !(self.power > T::zero()) || !self.power.is_finite() {
            return Err(invalid(format!("power must be positive, got {}", self.power)));
        }
        if !(self.feedback_noise >= T::zero()) || !self.feedback_noise.is_finite() {
            return Err(invalid(format!("feedback noise must be >= 0, got {}", self.feedback_noise)));
        }
        Ok(())
    }

    /// `L = L̃ + K − 1`.
    pub fn blocklength(&self) -> usize {
        self.ltilde + self.users - 1
    }

    /// Per-user message power `(1−γ)LP/K`.
    pub fn msg_power(&self) -> T {
        (T::one() - self.gamma) * T::count(self.blocklength()) * self.power / T::count(self.users)
    }

    /// `(1−γ)LP/K`, the SNR numerator (`q[1] = 1`).
    pub fn snr_numerator(&self) -> T {
        self.msg_power()
    }

    /// Upper limit on `Σ_i ‖μ_i‖²`.
    pub fn gain_budget(&self) -> T {
        let f = build_f(self.users, spread_ratio(self.beta));
        self.gamma * T::count(self.blocklength()) * self.power
            / (T::count(self.users) * (T::one() + self.feedback_noise) * sum_sq(&f))
    }

    /// Equivalent general channel: K users, unit forward noise.
    pub fn channel(&self) -> Result<ChannelParams<T>> {
        ChannelParams::symmetric(self.users, self.power, T::one(), self.feedback_noise)
    }
}

/// `√β`, the argument expected by [`build_q`] and [`build_f`].
pub fn spread_ratio<T: Real>(beta: T) -> T {
    beta.sqrt()
}

/// Sylvester Hadamard matrix of order `k`.
pub fn hadamard<T: Real>(k: usize) -> Result<Matrix<T>> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::UnsupportedUsers(k));
    }
    let mut h = Matrix::from_diagonal(&[T::one()]);
    while h.rows() < k {
        let n = h.rows();
        let mut next = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = h.get(i, j);
                next.set(i, j, v);
                next.set(i, j + n, v);
                next.set(i + n, j, v);
                next.set(i + n, j + n, -v);
            }
        }
        h = next;
    }
    Ok(h)
}

/// Column `k` (0-based) of `hadamard(users)`.
pub fn hadamard_column<T: Real>(users: usize, k: usize) -> Result<Vec<T>> {
    let h = hadamard::<T>(users)?;
    if k >= users {
        return Err(invalid(format!("column {k} out of range for K = {users}")));
    }
    Ok((0..users).map(|i| h.get(i, k)).collect())
}

/// Diagonal of `C_k`: entry `i` (0-based) is `c_k[i mod K]`.
pub fn build_c<T: Real>(ltilde: usize, column: &[T]) -> Vec<T> {
    (0..ltilde).map(|i| column[i % column.len()]).collect()
}

/// `[1, b², b⁴, …, b^{2(L̃−1)}]`.
pub fn build_q<T: Real>(ltilde: usize, b: T) -> Vec<T> {
    let b2 = b * b;
    let mut out = Vec::with_capacity(ltilde);
    let mut v = T::one();
    for _ in 0..ltilde {
        out.push(v);
        v = v * b2;
    }
    out
}

/// `[1, b⁻², …, b^{−2(K−1)}]`.
pub fn build_f<T: Real>(users: usize, b: T) -> Vec<T> {
    let inv = (b * b).recip();
    let mut out = Vec::with_capacity(users);
    let mut v = T::one();
    for _ in 0..users {
        out.push(v);
        v = v * inv;
    }
    out
}

/// Number of `f` copies in column `i` (0-based) of `F`: `⌊(L̃−i−1)/K⌋`.
#[inline]
pub fn copies(ltilde: usize, users: usize, i: usize) -> usize {
    (ltilde - i - 1) / users
}

/// Active feedback columns, `L̃ − K` (zero when `L̃ ≤ K`).
#[inline]
pub fn active_columns(ltilde: usize, users: usize) -> usize {
    ltilde.saturating_sub(users)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains<T> {
    /// `mu[i][j]`: copy `j` of `f` in column `i` (both 0-based).
    pub mu: Vec<Vec<T>>,
    pub lambda: T,
}

impl<T: Real> FeedbackGains<T> {
    pub fn zeros(ltilde: usize, users: usize) -> Self {
        let mu = (0..active_columns(ltilde, users))
            .map(|i| vec![T::zero(); copies(ltilde, users, i)])
            .collect();
        Self { mu, lambda: T::zero() }
    }

    pub fn energy(&self) -> T {
        self.mu.iter().map(|m| sum_sq(m)).sum()
    }

    fn check_shape(&self, ltilde: usize, users: usize) -> Result<()> {
        let cols = active_columns(ltilde, users);
        if self.mu.len() != cols {
            return Err(Error::Dimension(format!("gains have {} columns, expected {cols}", self.mu.len())));
        }
        for (i, m) in self.mu.iter().enumerate() {
            if m.len() != copies(ltilde, users, i) {
                return Err(Error::Dimension(format!(
                    "column {i} has {} gains, expected {}",
                    m.len(),
                    copies(ltilde, users, i)
                )));
            }
        }
        Ok(())
    }
}

/// Strictly lower-triangular `L̃×L̃` filter with `μ_{i,j}·f` blocks below the diagonal.
pub fn assemble_f<T: Real>(ltilde: usize, users: usize, b: T, gains: &FeedbackGains<T>) -> Result<Matrix<T>> {
    gains.check_shape(ltilde, users)?;
    let f = build_f(users, b);
    let mut m = Matrix::zeros(ltilde, ltilde);
    for (i, col) in gains.mu.iter().enumerate() {
        for (j, &mu) in col.iter().enumerate() {
            let r0 = i + 1 + j * users;
            for (t, &ft) in f.iter().enumerate() {
                m.set(r0 + t, i, mu * ft);
            }
        }
    }
    Ok(m)
}

/// `v_i[j] = Σ_t q[i+jK+t+1]·f[t]`, the coefficient of `μ_{i,j}` in `qᵀF`.
pub fn response_vectors<T: Real>(ltilde: usize, users: usize, b: T) -> Vec<Vec<T>> {
    let q = build_q(ltilde, b);
    let f = build_f(users, b);
    (0..active_columns(ltilde, users))
        .map(|i| {
            (0..copies(ltilde, users, i))
                .map(|j| {
                    let r0 = i + 1 + j * users;
                    dot2(&q[r0..r0 + users], &f)
                })
                .collect()
        })
        .collect()
}

/// Gains minimising `‖qᵀ(I+F)‖² + σ_n²‖qᵀF‖²` under the feedback power budget.
pub fn optimal_gains<T: Real>(params: &SymmetricParams<T>) -> Result<FeedbackGains<T>> {
    params.validate()?;
    let (lt, k) = (params.ltilde, params.users);
    if lt <= k {
        return Ok(FeedbackGains::zeros(lt, k));
    }
    let budget = params.gain_budget();
    if budget.is_zero() {
        return Ok(FeedbackGains { lambda: T::infinity(), ..FeedbackGains::zeros(lt, k) });
    }
    let b = spread_ratio(params.beta);
    let q = build_q(lt, b);
    let vs = response_vectors(lt, k, b);
    let norms: Vec<T> = vs.iter().map(|v| sum_sq(v)).collect();
    let s1 = T::one() + params.feedback_noise;
    let lambda = solve_lambda(&q, &norms, s1, budget)?;
    let mu = vs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let a = -q[i] / (s1 * norms[i] + lambda);
            v.iter().map(|&x| a * x).collect()
        })
        .collect();
    Ok(FeedbackGains { mu, lambda })
}

/// Smallest `λ ≥ 0` with `Σ_i q_i²‖v_i‖²/((1+σ²)‖v_i‖²+λ)² ≤ budget`.
pub(crate) fn solve_lambda<T: Real>(q: &[T], norms: &[T], s1: T, budget: T) -> Result<T> {
    let used = |lam: T| -> T {
        norms
            .iter()
            .zip(q)
            .map(|(&n, &qi)| {
                let d = s1 * n + lam;
                qi * qi * n / (d * d)
            })
            .sum()
    };
    if used(T::zero()) <= budget {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    let mut hi = norms.iter().copied().fold(T::zero(), T::max).max(T::min_positive_value());
    while used(hi) > budget {
        hi = hi * two;
        if !hi.is_finite() {
            return Err(Error::Solver("lambda bracket overflow".into()));
        }
    }
    let root = bisect(|l| used(l) - budget, Bracket::new(T::zero(), hi).tol(T::lit(1e-14)))?;
    // Step to the feasible side so the budget is never exceeded.
    let mut lam = root;
    let mut step = root.abs().max(T::min_positive_value()) * T::epsilon();
    while used(lam) > budget {
        lam = lam + step;
        step = step * two;
    }
    Ok(lam)
}

/// Which closed-form limit of the optimal gains to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticForm {
    /// `μ_{i,j} = −(1−β^{2K})/(Kβ)·β^{K(j−1)}`; nulls the residual except for the tail.
    NoiselessLimit,
    /// The `λ → 0` limit at noise `σ_n²`: the above divided by `1+σ_n²`.
    LargeBlocklength,
}

pub fn asymptotic_gains<T: Real>(params: &SymmetricParams<T>, form: AsymptoticForm) -> FeedbackGains<T> {
    let (lt, k, beta) = (params.ltilde, params.users, params.beta);
    let mut base = -(T::one() - beta.powi(2 * k as i32)) / (T::count(k) * beta);
    if form == AsymptoticForm::LargeBlocklength {
        base = base / (T::one() + params.feedback_noise);
    }
    let ratio = beta.powi(k as i32);
    let mu = (0..active_columns(lt, k))
        .map(|i| {
            let mut v = base;
            (0..copies(lt, k, i))
                .map(|_| {
                    let out = v;
                    v = v * ratio;
                    out
                })
                .collect()
        })
        .collect();
    FeedbackGains { mu, lambda: T::zero() }
}

/// `max_{k≠i} ‖qᵀC_kC_iF‖²` for the assembled code.
pub fn interference_leakage<T: Real>(params: &SymmetricParams<T>, gains: &FeedbackGains<T>) -> Result<T> {
    let b = spread_ratio(params.beta);
    let f = assemble_f(params.ltilde, params.users, b, gains)?;
    leakage_of(params, &build_q(params.ltilde, b), &f)
}

/// Leakage of an arbitrary `F` (used to probe perturbed filters).
pub fn leakage_of<T: Real>(params: &SymmetricParams<T>, q: &[T], f: &Matrix<T>) -> Result<T> {
    let k = params.users;
    let h = hadamard::<T>(k)?;
    let mut worst = T::zero();
    for a in 0..k {
        for c in (a + 1)..k {
            let prod: Vec<T> = (0..k).map(|i| h.get(i, a) * h.get(i, c)).collect();
            let d = build_c(params.ltilde, &prod);
            let w: Vec<T> = q.iter().zip(&d).map(|(&x, &y)| x * y).collect();
            worst = worst.max(sum_sq(&f.vec_mul(&w)));
        }
    }
    Ok(worst)
}

/// Relative nulling tolerance used by [`snr_matrix`].
pub fn leakage_limit<T: Real>(q: &[T], f: &Matrix<T>) -> T {
    T::lit(1e-12) * sum_sq(q) * f.frobenius_sq()
}

/// SNR at any receiver from the assembled `q`, `F`.
pub fn snr_matrix<T: Real>(params: &SymmetricParams<T>, gains: &FeedbackGains<T>) -> Result<T> {
    params.validate()?;
    let b = spread_ratio(params.beta);
    let q = build_q(params.ltilde, b);
    let f = assemble_f(params.ltilde, params.users, b, gains)?;
    let leak = leakage_of(params, &q, &f)?;
    let limit = leakage_limit(&q, &f);
    if leak > limit {
        return Err(Error::Leakage { leakage: leak.as_f64(), limit: limit.as_f64() });
    }
    let qf = f.vec_mul(&q);
    let resid: Vec<T> = qf.iter().zip(&q).map(|(&a, &b)| a + b).collect();
    let denom = sum_sq(&resid) + params.feedback_noise * sum_sq(&qf);
    Ok(params.snr_numerator() / denom)
}

/// Denominator of the SNR from column responses, without forming `F`.
pub fn structured_denominator<T: Real>(params: &SymmetricParams<T>, gains: &FeedbackGains<T>) -> Result<T> {
    gains.check_shape(params.ltilde, params.users)?;
    let b = spread_ratio(params.beta);
    let q = build_q(params.ltilde, b);
    let vs = response_vectors(params.ltilde, params.users, b);
    let cols = vs.len();
    let mut denom: T = q[cols..].iter().map(|&x| x * x).sum();
    for (i, (v, mu)) in vs.iter().zip(&gains.mu).enumerate() {
        let r = dot2(v, mu);
        let e = q[i] + r;
        denom = denom + e * e + params.feedback_noise * r * r;
    }
    Ok(denom)
}

/// `g(L̃,β)`: residual energy of the noiseless-limit gains.
pub fn g_sum<T: Real>(ltilde: usize, users: usize, beta: T) -> T {
    let b2 = beta * beta;
    let head = active_columns(ltilde, users);
    let mut s = T::zero();
    for i in head..ltilde {
        s = s + b2.powi(i as i32);
    }
    for i in 0..head {
        let n = copies(ltilde, users, i);
        s = s + b2.powi(i as i32) * beta.powi((4 * users * n) as i32);
    }
    s
}

/// `h(L̃,β)`: feedback-noise gain of the noiseless-limit gains.
pub fn h_sum<T: Real>(ltilde: usize, users: usize, beta: T) -> T {
    let b2 = beta * beta;
    (0..active_columns(ltilde, users))
        .map(|i| {
            let n = copies(ltilde, users, i);
            let t = T::one() - beta.powi((2 * users * n) as i32);
            b2.powi(i as i32) * t * t
        })
        .sum()
}

/// `e(L̃,β) = ‖F‖_F²` for the noiseless-limit gains.
pub fn feedback_power_e<T: Real>(ltilde: usize, beta: T, users: usize) -> T {
    let k = users as i32;
    let b2k = beta.powi(2 * k);
    let lead = (T::one() - b2k).powi(2) / (T::count(users * users) * (T::one() - beta * beta) * b2k);
    let cols = active_columns(ltilde, users);
    let tail: T = (0..cols).map(|i| beta.powi((2 * users * copies(ltilde, users, i)) as i32)).sum();
    lead * (T::count(cols) - tail)
}

/// Closed-form SNR with noiseless-limit gains.
pub fn snr_closed_form<T: Real>(params: &SymmetricParams<T>) -> Result<T> {
    params.validate()?;
    if params.ltilde <= params.users {
        return snr_matrix(params, &FeedbackGains::zeros(params.ltilde, params.users));
    }
    let (lt, k, beta) = (params.ltilde, params.users, params.beta);
    Ok(params.snr_numerator() / (g_sum(lt, k, beta) + params.feedback_noise * h_sum(lt, k, beta)))
}

/// `(K/(2L))·log2(1+SNR)` for the closed-form SNR, evaluated in the log
/// domain so that long blocks (where `β^{2L̃}` underflows) stay finite.
pub fn closed_form_sum_rate<T: Real>(params: &SymmetricParams<T>) -> Result<T> {
    params.validate()?;
    let (lt, k, beta) = (params.ltilde, params.users, params.beta);
    let scale = T::count(k) / (T::lit(2.0) * T::LN_2() * T::count(params.blocklength()));
    if lt <= k {
        return Ok(scale * snr_closed_form(params)?.ln_1p());
    }
    let lb = beta.ln();
    let s2 = params.feedback_noise;
    let head = active_columns(lt, k);
    let mut logs: Vec<T> = (head..lt).map(|i| T::count(2 * i) * lb).collect();
    for i in 0..head {
        let n = copies(lt, k, i);
        logs.push(T::count(2 * i + 4 * k * n) * lb);
        if s2 > T::zero() {
            let t = T::one() - beta.powi((2 * k * n) as i32);
            logs.push(s2.ln() + T::count(2 * i) * lb + T::lit(2.0) * t.ln());
        }
    }
    let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let ln_den = top + logs.iter().map(|&x| (x - top).exp()).sum::<T>().ln();
    let x = params.snr_numerator().ln() - ln_den;
    // log(1+e^x) without overflow.
    let ln1p_exp = x.max(T::zero()) + (-x.abs()).exp().ln_1p();
    Ok(scale * ln1p_exp)
}

/// `a_lb = (1−β²)/(β^{−2K}(1+β²) − 1)`.
pub fn a_lb<T: Real>(beta: T, users: usize) -> T {
    let b2 = beta * beta;
    (T::one() - b2) / (beta.powi(-2 * users as i32) * (T::one() + b2) - T::one())
}

/// Lower and upper bounds on the noiseless-feedback SNR.
///
/// The upper bound's last denominator term carries `β^{2(L̃+K−1)}`; with
/// `β^{2(L̃−K−1)}` the bound is violated on most of the grid.
pub fn snr_bounds<T: Real>(params: &SymmetricParams<T>) -> Result<(T, T)> {
    params.validate()?;
    if !params.feedback_noise.is_zero() {
        return Err(Error::NotApplicable("bounds hold for noiseless feedback only".into()));
    }
    let (lt, k, beta) = (params.ltilde as i32, params.users as i32, params.beta);
    if lt <= k {
        return Err(Error::NotApplicable("bounds need Ltilde > K".into()));
    }
    let num = params.snr_numerator();
    let b2 = beta * beta;
    let lb = a_lb(beta, params.users) * num / b2.powi(lt);
    let den = b2.powi(lt - k) - b2.powi(lt) + b2.powi(lt + k - 1) * (T::one() - b2.powi(lt - k));
    let ub = (T::one() - b2) * num / den;
    Ok((lb, ub))
}

/// Embeds the scheme into the general `(g_k, F_k, q_k)` form.
///
/// User `k` owns slot `k`; inner positions `1..L̃` map to slots `K..L`. The
/// per-user filter is `C_k F C_k`, which keeps the SNR identical across users.
pub fn to_general_code<T: Real>(params: &SymmetricParams<T>, gains: &FeedbackGains<T>) -> Result<LinearFeedbackCode<T>> {
    params.validate()?;
    let (lt, k) = (params.ltilde, params.users);
    let l = params.blocklength();
    let b = spread_ratio(params.beta);
    let q = build_q(lt, b);
    let f = assemble_f(lt, k, b, gains)?;
    let h = hadamard::<T>(k)?;
    let slot = |user: usize, r: usize| if r == 0 { user } else { k + r - 1 };

    let mut g_all = Vec::with_capacity(k);
    let mut f_all = Vec::with_capacity(k);
    let mut q_all = Vec::with_capacity(k);
    for user in 0..k {
        let col: Vec<T> = (0..k).map(|i| h.get(i, user)).collect();
        let c = build_c(lt, &col);
        let fk = f.sandwich_diag(&c);
        let mut big = Matrix::zeros(l, l);
        let mut qk = vec![T::zero(); l];
        for r in 0..lt {
            qk[slot(user, r)] = c[r] * q[r];
            for s in 0..lt {
                let v = fk.get(r, s);
                if !v.is_zero() {
                    big.set(slot(user, r), slot(user, s), v);
                }
            }
        }
        let mut gk = vec![T::zero(); l];
        gk[user] = T::one();
        g_all.push(gk);
        f_all.push(big);
        q_all.push(qk);
    }
    LinearFeedbackCode::new(g_all, f_all, q_all, vec![params.msg_power(); k])
}
