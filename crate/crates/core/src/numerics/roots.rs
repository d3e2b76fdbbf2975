use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stopping rule for [`bisect`].
#[derive(Clone, Copy, Debug)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    /// Stop once the bracket width falls below `x_tol · max(1, |mid|)`.
    pub x_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Bracket<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi, x_tol: T::epsilon() * T::lit(4.0), max_iter: 400 }
    }

    pub fn tol(mut self, x_tol: T) -> Self {
        self.x_tol = x_tol;
        self
    }
}

/// Root of a continuous `f` with a sign change on `[lo, hi]`.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, b: Bracket<T>) -> Result<T> {
    let (mut lo, mut hi) = (b.lo, b.hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.is_zero() {
        return Ok(lo);
    }
    if fhi.is_zero() {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}"
        )));
    }
    let two = T::lit(2.0);
    for _ in 0..b.max_iter {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= b.x_tol * mid.abs().max(T::one()) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.is_zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / two)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. Endpoints are included in the comparison so a
/// monotone objective returns its boundary.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}
