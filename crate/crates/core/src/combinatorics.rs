//! Exact integer factorials and binomials for the chaos prefactors.

use crate::error::{Error, Result};

pub fn factorial(n: u32) -> Result<u128> {
    (1..=n as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .ok_or_else(|| overflow("factorial", n))
}

pub fn binomial(n: u32, k: u32) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul(n as u128 - i)
            .ok_or_else(|| overflow("binomial", n))?
            / (i + 1);
    }
    Ok(acc)
}

/// Product of exact factors, overflow checked.
pub fn product(factors: &[u128]) -> Result<u128> {
    factors
        .iter()
        .try_fold(1u128, |acc, &f| acc.checked_mul(f))
        .ok_or_else(|| Error::InvalidArgument("integer prefactor overflows u128".into()))
}

fn overflow(what: &str, n: u32) -> Error {
    Error::InvalidArgument(format!("{what}({n}) overflows u128"))
}

/// 2^{p-1} (p-1)!, the factor linking second-chaos cumulants to traces.
pub fn second_chaos_cumulant_factor(p: u32) -> Result<u128> {
    if p == 0 {
        return Err(Error::InvalidArgument("cumulant order must be >= 1".into()));
    }
    product(&[1u128 << (p - 1), factorial(p - 1)?])
}
