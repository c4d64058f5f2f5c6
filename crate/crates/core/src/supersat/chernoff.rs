use crate::error::{Error, Result};

/// `min{(1+ε) ln(1+ε) - ε, ε²/2}`, the exponent constant of the two-sided
/// bound `P[|Y - μ| > εμ] <= 2 exp(-c_ε μ)`.
pub fn two_sided_constant(eps: f64) -> f64 {
    let entropy = (1.0 + eps) * eps.ln_1p() - eps;
    entropy.min(eps * eps / 2.0)
}

/// Upper bound on `P[Y > h]` for a sum `Y` of independent indicators with
/// mean `mu`: `2 exp(-h/2)` once `h >= 20 mu`, the two-sided bound with
/// `ε = h/mu - 1` below that, and the trivial bound 1 for `h <= mu`.
pub fn chernoff_tail_bound(mu: f64, h: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidConstant {
            name: "mu",
            value: mu,
        });
    }
    if h.is_nan() {
        return Err(Error::InvalidConstant { name: "h", value: h });
    }
    if h >= 20.0 * mu {
        return Ok((2.0 * (-h / 2.0).exp()).min(1.0));
    }
    if h <= mu {
        return Ok(1.0);
    }
    let eps = h / mu - 1.0;
    Ok((2.0 * (-two_sided_constant(eps) * mu).exp()).min(1.0))
}
