use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sk::SkCode;
use crate::error::{invalid, Error, Result};
use crate::montecarlo::rng::stream_rng;

pub const MAX_CODEWORDS: usize = 64;
const CHUNK: usize = 4096;

/// Receiver-2 codebook. Every codeword is zero in slot 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    words: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(words: Vec<Vec<f64>>) -> Result<Self> {
        if words.is_empty() || words.len() > MAX_CODEWORDS {
            return Err(invalid(format!("codebook needs 1..={MAX_CODEWORDS} words, got {}", words.len())));
        }
        let l = words[0].len();
        if l < 2 {
            return Err(invalid("codewords need at least 2 slots"));
        }
        for (i, w) in words.iter().enumerate() {
            if w.len() != l {
                return Err(Error::Dimension(format!("codeword {i} has length {}, expected {l}", w.len())));
            }
            if w[0] != 0.0 {
                return Err(invalid(format!("codeword {i} must be zero in slot 1")));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("codeword {i} has non-finite entries")));
            }
        }
        Ok(Self { words })
    }

    /// Two words `±a·[0, 1, …, 1]` with average power `p2` per channel use.
    pub fn antipodal(blocklength: usize, p2: f64) -> Result<Self> {
        if blocklength < 2 {
            return Err(invalid("antipodal codebook needs L >= 2"));
        }
        let l = blocklength as f64;
        let a = (l * p2 / (l - 1.0)).sqrt();
        let mut w = vec![a; blocklength];
        w[0] = 0.0;
        let neg = w.iter().map(|v| -v).collect();
        Self::new(vec![w, neg])
    }

    pub fn words(&self) -> &[Vec<f64>] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn blocklength(&self) -> usize {
        self.words[0].len()
    }

    /// Mean energy per channel use over the codebook.
    pub fn average_power(&self) -> f64 {
        let e: f64 = self.words.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
        e / (self.len() * self.blocklength()) as f64
    }
}

/// Gaussian noise seen by receiver 2 on slots `2..L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Receiver2Channel {
    covariance: DMatrix<f64>,
}

impl Receiver2Channel {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(Error::Dimension("covariance must be square and non-empty".into()));
        }
        Ok(Self { covariance })
    }

    pub fn white(dim: usize, variance: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * variance)
    }

    /// Interference from user 1's feedback transmissions plus white noise:
    /// `σ_w² F₂ F₂ᵀ + σ_z2² I`, with `F₂` the rows of `F` for slots `2..L`
    /// and `σ_w²` the true forward-plus-feedback noise variance of user 1.
    pub fn from_sk(code: &SkCode<f64>, sigma_w2: f64, sigma_z2: f64) -> Result<Self> {
        let l = code.blocklength;
        if l < 2 {
            return Err(invalid("receiver-2 channel needs L >= 2"));
        }
        let f = DMatrix::from_fn(l - 1, l, |i, j| code.filter.get(i + 1, j));
        Self::new(&f * f.transpose() * sigma_w2 + DMatrix::identity(l - 1, l - 1) * sigma_z2)
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmcModel {
    pub n_symbols: usize,
    /// `transition[j][i] = Pr{decide i | sent j}`.
    pub transition: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u64>>,
    pub trials: usize,
    pub precision_warning: Option<String>,
}

impl DmcModel {
    /// Largest binomial standard error over all entries.
    pub fn max_stderr(&self) -> f64 {
        let n = self.trials as f64;
        self.transition
            .iter()
            .flatten()
            .map(|&p| (p * (1.0 - p) / n).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Monte-Carlo transition law of the ML decoder for `codebook` over `channel`.
///
/// Input word `j`, trial chunk `c` draw from stream `(seed, j, c)`, so the
/// estimate does not depend on the thread count.
pub fn estimate_dmc(codebook: &Codebook, channel: &Receiver2Channel, trials: usize, seed: u64) -> Result<DmcModel> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let dim = codebook.blocklength() - 1;
    if channel.dim() != dim {
        return Err(Error::Dimension(format!(
            "channel covers {} slots, codebook {}",
            channel.dim(),
            dim
        )));
    }
    let chol = channel
        .covariance
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("noise covariance is not positive definite".into()))?;
    let lower = chol.l();
    let whitened: Vec<DVector<f64>> = codebook
        .words()
        .iter()
        .map(|w| {
            let v = DVector::from_column_slice(&w[1..]);
            lower.solve_lower_triangular(&v).expect("Cholesky factor is invertible")
        })
        .collect();
    let n = codebook.len();
    let chunks = trials.div_ceil(CHUNK);
    let counts: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            let partial: Vec<Vec<u64>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream_rng(seed, j as u64, c as u64);
                    let mut local = vec![0u64; n];
                    let mut r = DVector::<f64>::zeros(dim);
                    let todo = CHUNK.min(trials - c * CHUNK);
                    for _ in 0..todo {
                        for (x, &s) in r.iter_mut().zip(whitened[j].iter()) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *x = s + z;
                        }
                        local[decide(&r, &whitened)] += 1;
                    }
                    local
                })
                .collect();
            partial.into_iter().fold(vec![0u64; n], |mut acc, p| {
                acc.iter_mut().zip(p).for_each(|(a, b)| *a += b);
                acc
            })
        })
        .collect();
    let transition = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / trials as f64).collect())
        .collect();
    let precision_warning = (trials < 1000)
        .then(|| format!("only {trials} trials per input; transition entries are imprecise"));
    Ok(DmcModel { n_symbols: n, transition, counts, trials, precision_warning })
}

/// Nearest whitened codeword; ties go to the smaller index.
fn decide(r: &DVector<f64>, words: &[DVector<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, w) in words.iter().enumerate() {
        let d = (r - w).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}
