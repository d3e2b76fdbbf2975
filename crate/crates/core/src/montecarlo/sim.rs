use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use super::rng::{lane, stream_rng, Role};
use crate::channel::{snr_receiver, validate_code};
use crate::{ChannelParams, FeedbackNoise, LinearFeedbackCode};
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;

const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    /// PAM order per user.
    pub pam_order: Vec<usize>,
    pub hard_decision: bool,
}

impl SimConfig {
    pub fn new(trials: usize, seed: u64, users: usize) -> Self {
        Self { trials, seed, pam_order: vec![2; users], hard_decision: false }
    }

    fn validate(&self, users: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.pam_order.len() != users {
            return Err(Error::Dimension(format!(
                "{} PAM orders for {users} users",
                self.pam_order.len()
            )));
        }
        if self.pam_order.iter().any(|&m| m < 2) {
            return Err(invalid("PAM order must be >= 2"));
        }
        Ok(())
    }
}

/// Zero-mean, equally spaced `M`-PAM points with second moment `energy`.
pub fn pam_levels(order: usize, energy: f64) -> Vec<f64> {
    let m = order as f64;
    let step = (3.0 * energy / (m * m - 1.0)).sqrt();
    (0..order).map(|i| (2.0 * i as f64 + 1.0 - m) * step).collect()
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value − target| ≤ k·stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub ser: Estimate,
    /// `2(1−1/M)·Q(√(3·SNR/(M²−1)))` at the analytic SNR.
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: usize,
    pub seed: u64,
    pub empirical_snr: Vec<Estimate>,
    pub analytic_snr: Vec<f64>,
    /// Kurtosis of each receiver's estimation error.
    pub error_kurtosis: Vec<Estimate>,
    /// Mean `xᵀx/L` per block.
    pub empirical_power: Estimate,
    pub power_budget: f64,
    /// `max |corr|` between each receiver's estimation error and any other
    /// user's message or fed-back noise sample.
    pub empirical_leakage: Vec<f64>,
    pub leakage_threshold: f64,
    pub symbol_error_rate: Option<Vec<SerEstimate>>,
}

impl SimReport {
    /// All receivers' empirical SNRs within `k` standard errors of the analytic value.
    pub fn snr_consistent(&self, k: f64) -> bool {
        self.empirical_snr.iter().zip(&self.analytic_snr).all(|(e, &a)| e.within(a, k))
    }

    /// Mean power within `k` standard errors of the budget (plus rounding slack,
    /// since constant-envelope codes have zero spread).
    pub fn power_ok(&self, k: f64) -> bool {
        self.empirical_power.value <= self.power_budget * (1.0 + 1e-12) + k * self.empirical_power.stderr
    }

    pub fn nulling_ok(&self) -> bool {
        self.empirical_leakage.iter().all(|&c| c < self.leakage_threshold)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullingReport {
    pub max_abs_corr: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Running sums for one chunk of trials.
#[derive(Clone, Debug)]
struct Acc {
    n: f64,
    // Per receiver: Σs², Σe², Σs⁴, Σe⁴, Σs²e², symbol errors.
    s2: Vec<f64>,
    e2: Vec<f64>,
    s4: Vec<f64>,
    e4: Vec<f64>,
    s2e2: Vec<f64>,
    errs: Vec<f64>,
    pw: f64,
    pw2: f64,
    // Cross terms, indexed [receiver][source]: Σe·x, Σe, Σx, Σx².
    ex: Vec<Vec<f64>>,
    e1: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
}

impl Acc {
    fn new(users: usize, sources: usize) -> Self {
        Self {
            n: 0.0,
            s2: vec![0.0; users],
            e2: vec![0.0; users],
            s4: vec![0.0; users],
            e4: vec![0.0; users],
            s2e2: vec![0.0; users],
            errs: vec![0.0; users],
            pw: 0.0,
            pw2: 0.0,
            ex: vec![vec![0.0; sources]; users],
            e1: vec![0.0; users],
            x1: vec![0.0; sources],
            x2: vec![0.0; sources],
        }
    }

    fn merge(mut self, o: &Self) -> Self {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.n += o.n;
        add(&mut self.s2, &o.s2);
        add(&mut self.e2, &o.e2);
        add(&mut self.s4, &o.s4);
        add(&mut self.e4, &o.e4);
        add(&mut self.s2e2, &o.s2e2);
        add(&mut self.errs, &o.errs);
        self.pw += o.pw;
        self.pw2 += o.pw2;
        for (a, b) in self.ex.iter_mut().zip(&o.ex) {
            add(a, b);
        }
        add(&mut self.e1, &o.e1);
        add(&mut self.x1, &o.x1);
        add(&mut self.x2, &o.x2);
        self
    }
}

fn pairwise(parts: &[Acc]) -> Acc {
    match parts.len() {
        1 => parts[0].clone(),
        n => pairwise(&parts[..n / 2]).merge(&pairwise(&parts[n / 2..])),
    }
}

struct Setup<'a> {
    code: &'a LinearFeedbackCode,
    params: &'a ChannelParams,
    levels: Vec<Vec<f64>>,
    /// `q_kᵀg_k`.
    signal_gain: Vec<f64>,
    hard: bool,
}

impl Setup<'_> {
    fn users(&self) -> usize {
        self.code.users()
    }

    fn len(&self) -> usize {
        self.code.blocklength()
    }

    /// Sources per user: message plus `L` fed-back noise samples.
    fn sources(&self) -> usize {
        self.users() * (self.len() + 1)
    }

    fn run_chunk(&self, seed: u64, first: usize, count: usize) -> Acc {
        let (k, l) = (self.users(), self.len());
        let mut acc = Acc::new(k, self.sources());
        let mut theta = vec![0.0; k];
        let mut idx = vec![0usize; k];
        let mut z = vec![vec![0.0; l]; k];
        let mut w = vec![vec![0.0; l]; k];
        let mut x = vec![0.0; l];
        let mut src = vec![0.0; self.sources()];
        for t in first..first + count {
            let t64 = t as u64;
            for u in 0..k {
                let mut r = stream_rng(seed, t64, lane(u, Role::Message));
                idx[u] = r.random_range(0..self.levels[u].len());
                theta[u] = self.levels[u][idx[u]];
                let sz = self.params.forward_noise()[u].sqrt();
                let mut rz = stream_rng(seed, t64, lane(u, Role::Forward));
                for v in z[u].iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rz);
                    *v = sz * g;
                }
                let sn = match self.params.feedback_noise()[u] {
                    FeedbackNoise::Finite(s) => s.sqrt(),
                    FeedbackNoise::Absent => 0.0,
                };
                let mut rn = stream_rng(seed, t64, lane(u, Role::Feedback));
                for (wv, &zv) in w[u].iter_mut().zip(&z[u]) {
                    let g: f64 = StandardNormal.sample(&mut rn);
                    *wv = zv + sn * g;
                }
                src[u * (l + 1)] = theta[u];
                src[u * (l + 1) + 1..(u + 1) * (l + 1)].copy_from_slice(&w[u]);
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            for u in 0..k {
                let g = self.code.gain(u);
                let fw = self.code.filter(u).mul_vec(&w[u]);
                for i in 0..l {
                    x[i] += g[i] * theta[u] + fw[i];
                }
            }
            let p = x.iter().map(|v| v * v).sum::<f64>() / l as f64;
            acc.pw += p;
            acc.pw2 += p * p;
            for (i, &s) in src.iter().enumerate() {
                acc.x1[i] += s;
                acc.x2[i] += s * s;
            }
            for u in 0..k {
                let q = self.code.combiner(u);
                let est: f64 = q.iter().zip(&x).zip(&z[u]).map(|((qi, xi), zi)| qi * (xi + zi)).sum();
                let s = self.signal_gain[u] * theta[u];
                let e = est - s;
                let (s2, e2) = (s * s, e * e);
                acc.s2[u] += s2;
                acc.e2[u] += e2;
                acc.s4[u] += s2 * s2;
                acc.e4[u] += e2 * e2;
                acc.s2e2[u] += s2 * e2;
                acc.e1[u] += e;
                for (j, &sv) in src.iter().enumerate() {
                    acc.ex[u][j] += e * sv;
                }
                if self.hard && self.signal_gain[u] != 0.0 {
                    let y = est / self.signal_gain[u];
                    if nearest(&self.levels[u], y) != idx[u] {
                        acc.errs[u] += 1.0;
                    }
                }
            }
            acc.n += 1.0;
        }
        acc
    }
}

fn nearest(levels: &[f64], y: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in levels.iter().enumerate() {
        let d = (y - v).abs();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn run(code: &LinearFeedbackCode, params: &ChannelParams, cfg: &SimConfig, hard: bool) -> Result<SimReport> {
    cfg.validate(code.users())?;
    let report = validate_code(code, params)?;
    if !report.causal() {
        return Err(Error::Configuration("feedback filters must be strictly lower triangular".into()));
    }
    let k = code.users();
    let analytic = (0..k).map(|u| snr_receiver(code, params, u)).collect::<Result<Vec<_>>>()?;
    let setup = Setup {
        code,
        params,
        levels: (0..k).map(|u| pam_levels(cfg.pam_order[u], code.msg_power(u))).collect(),
        signal_gain: (0..k).map(|u| dot(code.combiner(u), code.gain(u))).collect(),
        hard,
    };
    let chunks = cfg.trials.div_ceil(CHUNK);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| setup.run_chunk(cfg.seed, c * CHUNK, CHUNK.min(cfg.trials - c * CHUNK)))
        .collect();
    let acc = pairwise(&parts);
    let n = acc.n;

    let mut snr = Vec::with_capacity(k);
    let mut kurt = Vec::with_capacity(k);
    for u in 0..k {
        let (s, e) = (acc.s2[u] / n, acc.e2[u] / n);
        let var_s = acc.s4[u] / n - s * s;
        let var_e = acc.e4[u] / n - e * e;
        let cov = acc.s2e2[u] / n - s * e;
        let ratio = s / e;
        let var_ratio = (var_s / (e * e) + s * s * var_e / e.powi(4) - 2.0 * s * cov / e.powi(3)) / n;
        snr.push(Estimate { value: ratio, stderr: var_ratio.max(0.0).sqrt() });
        kurt.push(Estimate { value: acc.e4[u] / n / (e * e), stderr: (24.0 / n).sqrt() });
    }
    let pm = acc.pw / n;
    let power = Estimate { value: pm, stderr: ((acc.pw2 / n - pm * pm).max(0.0) / n).sqrt() };

    let l1 = code.blocklength() + 1;
    let leakage = (0..k)
        .map(|u| {
            let e_mean = acc.e1[u] / n;
            let e_var = acc.e2[u] / n - e_mean * e_mean;
            let mut worst: f64 = 0.0;
            for j in 0..setup.sources() {
                if j / l1 == u {
                    continue;
                }
                let x_mean = acc.x1[j] / n;
                let x_var = acc.x2[j] / n - x_mean * x_mean;
                if x_var <= 0.0 || e_var <= 0.0 {
                    continue;
                }
                let cov = acc.ex[u][j] / n - e_mean * x_mean;
                worst = worst.max((cov / (e_var * x_var).sqrt()).abs());
            }
            worst
        })
        .collect();

    let ser = hard.then(|| {
        (0..k)
            .map(|u| {
                let p = acc.errs[u] / n;
                let m = cfg.pam_order[u] as f64;
                let predicted = 2.0 * (1.0 - 1.0 / m) * q_function((3.0 * analytic[u] / (m * m - 1.0)).sqrt());
                SerEstimate { ser: Estimate { value: p, stderr: (p * (1.0 - p) / n).sqrt() }, predicted }
            })
            .collect()
    });

    Ok(SimReport {
        trials: cfg.trials,
        seed: cfg.seed,
        empirical_snr: snr,
        analytic_snr: analytic,
        error_kurtosis: kurt,
        empirical_power: power,
        power_budget: params.power(),
        empirical_leakage: leakage,
        leakage_threshold: 4.0 / n.sqrt(),
        symbol_error_rate: ser,
    })
}

/// Transmits `cfg.trials` blocks and measures per-receiver SNR, power and leakage.
pub fn simulate(code: &LinearFeedbackCode, params: &ChannelParams, cfg: &SimConfig) -> Result<SimReport> {
    run(code, params, cfg, cfg.hard_decision)
}

/// As [`simulate`], with hard PAM decisions on `θ̂_k/(q_kᵀg_k)`.
pub fn simulate_concatenated_ser(code: &LinearFeedbackCode, params: &ChannelParams, cfg: &SimConfig) -> Result<SimReport> {
    run(code, params, cfg, true)
}

/// Largest empirical correlation between a receiver's estimation error and
/// another user's message or fed-back noise, against `4/√trials`.
pub fn verify_nulling_empirical(code: &LinearFeedbackCode, params: &ChannelParams, cfg: &SimConfig) -> Result<NullingReport> {
    let r = run(code, params, cfg, false)?;
    let max_abs_corr = r.empirical_leakage.iter().copied().fold(0.0, f64::max);
    Ok(NullingReport { max_abs_corr, threshold: r.leakage_threshold, passed: max_abs_corr < r.leakage_threshold })
}
