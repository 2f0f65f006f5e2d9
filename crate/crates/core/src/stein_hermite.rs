//! Hermite polynomials, Gaussian CDF derivatives and the solution of the
//! Stein equation f'(x) - x f(x) = 1{x <= z} - Φ(z).

use statrs::function::erf;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_1d_breaks, Quadrature, DEFAULT_MAX_EVALS};
use crate::real::Real;

pub const MAX_HERMITE_ORDER: usize = 30;
pub const MAX_PAIRING_ORDER: usize = 10;

/// Beyond this |x| the Gaussian tail is evaluated through the Mills ratio
/// continued fraction.
const MILLS_SWITCH: f64 = 8.0;

/// √(2π)/4, the sup norm bound of every f_z.
pub const STEIN_SUP_BOUND: f64 = 0.626_657_068_657_750_1;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn normal_pdf<T: Real>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / T::lit(SQRT_2PI)
}

/// Φ(x), from the complementary error function.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let x = x.to_f64_lossy();
    T::lit(0.5 * erfc(-x / std::f64::consts::SQRT_2))
}

/// Below this argument erfc is 1 - erf from the positive series; above it
/// the Mills ratio continued fraction takes over.
const ERFC_SERIES_LIMIT: f64 = 1.0;

/// Complementary error function to near double precision.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERFC_SERIES_LIMIT {
        return 1.0 - erf_series(x);
    }
    // erfc(x) = 2 (1 - Φ(x√2)) = 2 φ(x√2) R(x√2).
    let t = x * std::f64::consts::SQRT_2;
    2.0 * (-x * x).exp() / SQRT_2PI * mills_ratio_cf(t)
}

/// erf(x) = 2/√π e^{-x²} Σ_n 2^n x^{2n+1} / (1·3·…·(2n+1)); every term is
/// positive so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// 1 - Φ(x) without cancellation.
pub fn normal_sf<T: Real>(x: T) -> T {
    normal_cdf(-x)
}

/// Φ⁻¹(u) for u in (0, 1).
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * u)
}

/// Mills ratio (1 - Φ(x))/φ(x) for large positive x by Lentz's evaluation of
/// 1/(x + 1/(x + 2/(x + 3/(x + …)))).
fn mills_ratio_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 2e-16 {
            break;
        }
    }
    1.0 / f
}

/// e^{x²/2} (1 - Φ(x)).
pub fn scaled_upper_tail<T: Real>(x: T) -> T {
    let xf = x.to_f64_lossy();
    let v = if xf > MILLS_SWITCH {
        mills_ratio_cf(xf) / SQRT_2PI
    } else {
        (0.5 * xf * xf).exp() * normal_sf(xf)
    };
    T::lit(v)
}

/// Probabilists' Hermite polynomial H_q(z) by forward recurrence
/// H_{k+1} = z H_k - k H_{k-1}.
pub fn hermite<T: Real>(q: usize, z: T) -> Result<T> {
    if q > MAX_HERMITE_ORDER {
        return Err(Error::OutOfRange {
            what: "hermite order",
            value: q.to_string(),
            range: "0..=30",
        });
    }
    Ok(hermite_unchecked(q, z))
}

#[inline]
pub(crate) fn hermite_unchecked<T: Real>(q: usize, z: T) -> T {
    let mut prev = T::one();
    if q == 0 {
        return prev;
    }
    let mut cur = z;
    for k in 1..q {
        let next = z * cur - T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Φ^{(q)}(z) = (-1)^{q-1} H_{q-1}(z) φ(z).
pub fn phi_cdf_derivative<T: Real>(q: usize, z: T) -> Result<T> {
    if !(1..=MAX_HERMITE_ORDER).contains(&q) {
        return Err(Error::OutOfRange {
            what: "derivative order",
            value: q.to_string(),
            range: "1..=30",
        });
    }
    let sign = if (q - 1).is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    };
    Ok(sign * hermite_unchecked(q - 1, z) * normal_pdf(z))
}

/// f_z(x), the bounded solution of the Stein equation for the indicator of
/// (-∞, z]. Every branch is arranged so the exponential factor never
/// exceeds one.
pub fn stein_solution<T: Real>(z: T, x: T) -> T {
    let s2pi = T::lit(SQRT_2PI);
    let half = T::lit(0.5);
    if x <= z {
        if x <= T::zero() {
            // e^{x²/2}Φ(x) = e^{x²/2}(1 - Φ(-x)).
            s2pi * scaled_upper_tail(-x) * normal_sf(z)
        } else {
            s2pi * normal_cdf(x) * ((x * x - z * z) * half).exp() * scaled_upper_tail(z)
        }
    } else if x >= T::zero() {
        s2pi * scaled_upper_tail(x) * normal_cdf(z)
    } else {
        s2pi * scaled_upper_tail(-z) * ((x * x - z * z) * half).exp() * normal_sf(x)
    }
}

/// Which one-sided limit to take at the jump x = z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// f'_z(x) = x f_z(x) + 1{x <= z} - Φ(z). At x = z the indicator follows
/// `side`; elsewhere `side` is ignored.
pub fn stein_derivative<T: Real>(z: T, x: T, side: Side) -> T {
    let below = if x < z {
        true
    } else if x > z {
        false
    } else {
        side == Side::Left
    };
    let ind = if below { T::one() } else { T::zero() };
    x * stein_solution(z, x) + ind - normal_cdf(z)
}

/// Closed form H_{q+1}(z) φ(z)/(q + 2) of ∫ f'_z(x) H_q(x) φ(x) dx.
pub fn stein_hermite_pairing<T: Real>(q: usize, z: T) -> Result<T> {
    check_pairing_order(q)?;
    Ok(hermite_unchecked(q + 1, z) * normal_pdf(z) / T::from_usize_lossy(q + 2))
}

fn check_pairing_order(q: usize) -> Result<()> {
    if !(1..=MAX_PAIRING_ORDER).contains(&q) {
        return Err(Error::OutOfRange {
            what: "pairing order",
            value: q.to_string(),
            range: "1..=10",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct PairingCheck<T> {
    pub q: usize,
    pub z: T,
    pub closed_form: T,
    pub quadrature: Quadrature<T>,
}

impl<T: Real> PairingCheck<T> {
    pub fn abs_error(&self) -> T {
        (self.closed_form - self.quadrature.value).abs()
    }
}

/// Computes both sides of the pairing identity; the left side by adaptive
/// quadrature split at the jump of f'_z.
pub fn verify_stein_hermite_pairing<T: Real>(q: usize, z: T, tol: T) -> Result<PairingCheck<T>> {
    let closed_form = stein_hermite_pairing(q, z)?;
    let reach = T::lit(16.0) + z.abs();
    let integrand = |x: T| {
        let side = if x <= z { Side::Left } else { Side::Right };
        stein_derivative(z, x, side) * hermite_unchecked(q, x) * normal_pdf(x)
    };
    let quadrature = integrate_1d_breaks(integrand, &[-reach, z, reach], tol, DEFAULT_MAX_EVALS);
    Ok(PairingCheck {
        q,
        z,
        closed_form,
        quadrature,
    })
}
