//! Exact constant algebra of the tensor-tomography estimate.
//!
//! Everything here is `BigRational`; no floating point is involved.

use crate::par::{self, Execution};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("need m >= 1, n >= 2 and m + n >= 4, got (m, n) = ({m}, {n})")]
    Precondition { m: u32, n: u32 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn r(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `a₋ᵏ = 1/(n+k−3)`.
pub fn a_minus(k: u32, n: u32) -> BigRational {
    r(1, n as i64 + k as i64 - 3)
}

/// `a₀ᵏ = (n−2)/(k(k+n−2))`.
pub fn a_zero(k: u32, n: u32) -> BigRational {
    let (k, n) = (k as i64, n as i64);
    r(n - 2, k * (k + n - 2))
}

/// `a₊ᵏ = 1/(k+1)`.
pub fn a_plus(k: u32) -> BigRational {
    r(1, k as i64 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomoCoeffs {
    pub m: u32,
    pub n: u32,
    pub a_minus: BigRational,
    pub a_zero: BigRational,
    pub a_plus: BigRational,
    pub alpha: BigRational,
    pub beta: BigRational,
    pub gamma: BigRational,
    pub c: BigRational,
}

fn check(m: u32, n: u32) -> Result<(), TomoError> {
    if m >= 1 && n >= 2 && m + n >= 4 {
        Ok(())
    } else {
        Err(TomoError::Precondition { m, n })
    }
}

/// Coefficients of the quadratic form `α‖P‖² + β⟨P,Q⟩ + γ‖Q‖²` and
/// `C = β²/(4α) − γ`.
pub fn coeffs(m: u32, n: u32) -> Result<TomoCoeffs, TomoError> {
    check(m, n)?;
    let k = int(m as i64 * (m as i64 + n as i64 - 2));
    let up = a_minus(m + 1, n);
    let a0 = a_zero(m, n);
    let one = BigRational::one();
    let lifted = &one + &up;
    let shift = &up + &a0;
    let alpha = &k * (&lifted * &lifted - &one) + int(n as i64 - 1);
    let beta = -int(2) * &k * &lifted * &shift;
    let gamma = &k * &shift * &shift;
    let c = &beta * &beta / (int(4) * &alpha) - &gamma;
    Ok(TomoCoeffs {
        m,
        n,
        a_minus: a_minus(m, n),
        a_zero: a0,
        a_plus: a_plus(m),
        alpha,
        beta,
        gamma,
        c,
    })
}

/// `m(m−1)/(2m+n−2) + (n−2)(m−1)/m`.
pub fn c_closed(m: u32, n: u32) -> BigRational {
    let (m, n) = (m as i64, n as i64);
    r(m * (m - 1), 2 * m + n - 2) + r((n - 2) * (m - 1), m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CCheck {
    pub quadratic: BigRational,
    pub closed: BigRational,
    pub equal: bool,
}

pub fn verify_c(m: u32, n: u32) -> Result<CCheck, TomoError> {
    let quadratic = coeffs(m, n)?.c;
    let closed = c_closed(m, n);
    let equal = quadratic == closed;
    Ok(CCheck { quadratic, closed, equal })
}

/// The `m = 2` form `n/2 − 1 + 2/(n+2)`.
pub fn intro_specialization(n: u32) -> Result<BigRational, TomoError> {
    check(2, n)?;
    let n = n as i64;
    Ok(r(n, 2) - int(1) + r(2, n + 2))
}

/// `(m−1)(m+n−3)(1+a₋ᵐ)² + (n−1) ≥ (m−1)(m+n−3)`.
pub fn dropped_term_bound(m: u32, n: u32) -> Result<bool, TomoError> {
    check(m, n)?;
    let w = int((m as i64 - 1) * (m as i64 + n as i64 - 3));
    let l = BigRational::one() + a_minus(m, n);
    Ok(&w * &l * &l + int(n as i64 - 1) >= w)
}

/// One row of the sweep, rendered for CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub m: u32,
    pub n: u32,
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
    #[serde(rename = "C")]
    pub c: String,
    pub closed_form_equal: bool,
    pub signs_ok: bool,
}

impl SweepRow {
    fn from_coeffs(t: &TomoCoeffs) -> Self {
        SweepRow {
            m: t.m,
            n: t.n,
            alpha: t.alpha.to_string(),
            beta: t.beta.to_string(),
            gamma: t.gamma.to_string(),
            c: t.c.to_string(),
            closed_form_equal: t.c == c_closed(t.m, t.n),
            signs_ok: t.alpha.is_positive() && !t.beta.is_positive() && !t.gamma.is_negative(),
        }
    }
}

/// All admissible `(m, n)` with `m ≤ m_max`, `n ≤ n_max`.
pub fn sweep(m_max: u32, n_max: u32, exec: Execution) -> Vec<SweepRow> {
    let pairs: Vec<(u32, u32)> = (1..=m_max)
        .flat_map(|m| (2..=n_max).map(move |n| (m, n)))
        .filter(|&(m, n)| m + n >= 4)
        .collect();
    par::map(exec, &pairs, |&(m, n)| {
        SweepRow::from_coeffs(&coeffs(m, n).expect("pairs are admissible"))
    })
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), TomoError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn preconditions() {
        assert!(coeffs(1, 2).is_err());
        assert!(coeffs(0, 5).is_err());
        assert!(coeffs(2, 1).is_err());
        assert!(coeffs(1, 3).is_ok());
        assert!(BigRational::zero() == coeffs(1, 3).unwrap().c);
    }
}
