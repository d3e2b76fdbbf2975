use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    /// Bits per channel symbol.
    pub bits: f64,
    pub input: Vec<f64>,
    /// `max_x D(W_x ‖ q)` at termination.
    pub upper: f64,
    pub iterations: usize,
    /// Mutual information after each iteration.
    pub lower_trace: Vec<f64>,
}

const MAX_ITER: usize = 200_000;

fn check_stochastic(w: &[Vec<f64>]) -> Result<usize> {
    let rows = w.len();
    if rows == 0 {
        return Err(Error::NotStochastic("empty matrix".into()));
    }
    let cols = w[0].len();
    for (i, row) in w.iter().enumerate() {
        if row.len() != cols || cols == 0 {
            return Err(Error::NotStochastic(format!("row {i} has {} entries, expected {cols}", row.len())));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotStochastic(format!("row {i} has entry {v}")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
    }
    Ok(cols)
}

/// `D(W_x ‖ q)` in bits for every input row.
fn divergences(w: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|row| {
            row.iter()
                .zip(q)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &qy)| p * (p.log2() - qy.log2()))
                .sum()
        })
        .collect()
}

/// Capacity of the channel with `transition[x][y] = p(y|x)`, to within `tol` bits.
pub fn blahut_arimoto(transition: &[Vec<f64>], tol: f64) -> Result<Capacity> {
    let cols = check_stochastic(transition)?;
    let n = transition.len();
    let mut p = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    for it in 1..=MAX_ITER {
        let mut q = vec![0.0; cols];
        for (px, row) in p.iter().zip(transition) {
            for (qy, &w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        let d = divergences(transition, &q);
        let lower: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        trace.push(lower);
        if upper - lower < tol {
            return Ok(Capacity { bits: lower.max(0.0), input: p, upper, iterations: it, lower_trace: trace });
        }
        let dmax = upper;
        let mut z = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= (dx - dmax).exp2();
            z += *px;
        }
        p.iter_mut().for_each(|v| *v /= z);
    }
    Err(Error::Solver(format!("Blahut-Arimoto did not reach {tol} in {MAX_ITER} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_useless_channels() {
        for n in [2usize, 4, 8] {
            let w: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
            assert_eq!(blahut_arimoto(&w, 1e-12).unwrap().bits, (n as f64).log2());
        }
        let same = vec![vec![0.2, 0.8]; 3];
        assert_eq!(blahut_arimoto(&same, 1e-12).unwrap().bits, 0.0);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(blahut_arimoto(&[vec![0.5, 0.6]], 1e-9), Err(Error::NotStochastic(_))));
        assert!(matches!(blahut_arimoto(&[vec![1.5, -0.5]], 1e-9), Err(Error::NotStochastic(_))));
    }
}
