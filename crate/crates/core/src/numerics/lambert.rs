use crate::error::{domain, Result};
use crate::scalar::Real;

/// Principal branch `W₀(x)` of the Lambert W function, `x ≥ −1/e`.
pub fn lambert_w0<T: Real>(x: T) -> Result<T> {
    let e = T::one().exp();
    let branch = -T::one() / e;
    if x.is_nan() || x < branch - T::epsilon() * T::lit(4.0) {
        return Err(domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x <= branch {
        return Ok(-T::one());
    }
    if x.is_zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(x);
    }
    let one = T::one();
    let two = T::lit(2.0);
    // Starting guesses: branch-point series near -1/e, log asymptotics for large x.
    let mut w = if x < T::lit(-0.25) {
        let p = (two * (e * x + one)).sqrt();
        -one + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
    } else if x < T::lit(3.0) {
        let l = x.ln_1p();
        l * (one - l.ln_1p() / (two + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + one;
        let denom = ew * wp1 - (w + two) * f / (two * wp1);
        let step = f / denom;
        w = w - step;
        if step.abs() <= T::epsilon() * T::lit(4.0) * (one + w.abs()) {
            break;
        }
    }
    Ok(w)
}
