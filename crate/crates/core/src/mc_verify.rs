//! Empirical distribution tools: exact Kolmogorov distance to N(0, 1), DKW
//! radii, and the normalized ratio curve (P̂(F ≤ z) − Φ(z))/φ.

use crate::chaos2::edgeworth_cdf;
use crate::error::{invalid, Result};
use crate::stein_hermite::{normal_cdf, normal_pdf};

/// sup_z |F̂_n(z) − Φ(z)| over a sample, evaluated at the jumps.
pub fn kolmogorov_distance(sample: &[f64]) -> Result<f64> {
    Ok(EmpiricalStudy::new(sample.to_vec())?.d_kol())
}

/// Radius r with P(sup|F̂_n − F| > r) ≤ δ.
pub fn dkw_radius(n: usize, delta: f64) -> Result<f64> {
    if n == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("DKW radius needs n >= 1 and delta in (0, 1)"));
    }
    Ok(((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub z: f64,
    /// (P̂(F ≤ z) − Φ(z))/φ.
    pub ratio: f64,
    /// Binomial standard error √(Φ(z)(1 − Φ(z))/n)/φ.
    pub std_error: f64,
    /// (ρ/3)(z² − 1)φ(z) when ρ is known.
    pub predicted: Option<f64>,
}

impl RatioPoint {
    /// |ratio − predicted| in standard errors.
    pub fn z_score(&self) -> Option<f64> {
        self.predicted
            .map(|p| (self.ratio - p).abs() / self.std_error)
    }
}

/// Predicted limit (ρ/3)(z² − 1)φ(z) of the ratio curve.
pub fn predicted_ratio(rho: f64, z: f64) -> f64 {
    rho / 3.0 * (z * z - 1.0) * normal_pdf(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeworthCheck {
    /// max_z |P̂(F ≤ z) − Φ(z) + (κ₃/6)Φ'''(z)| over the grid.
    pub residual_max: f64,
    /// max_z |P̂(F ≤ z) − Φ(z)| over the grid.
    pub plain_max: f64,
    /// DKW radius at δ = 0.01, a uniform bound on the MC error of both maxima.
    pub mc_radius: f64,
}

impl EdgeworthCheck {
    pub fn improved(&self) -> bool {
        self.residual_max <= 0.5 * self.plain_max
    }

    /// The MC error is too large to resolve a factor-of-two improvement.
    pub fn underpowered(&self) -> bool {
        self.mc_radius >= 0.25 * self.plain_max
    }
}

/// A sorted sample with its ECDF against N(0, 1).
#[derive(Debug, Clone)]
pub struct EmpiricalStudy {
    sorted: Vec<f64>,
    d_kol: f64,
}

impl EmpiricalStudy {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid("empty sample"));
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(invalid("sample contains NaN"));
        }
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        let d_kol = sample
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let p = normal_cdf(x);
                ((i as f64 + 1.0) / n - p)
                    .abs()
                    .max((i as f64 / n - p).abs())
            })
            .fold(0.0, f64::max);
        Ok(Self {
            sorted: sample,
            d_kol,
        })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn d_kol(&self) -> f64 {
        self.d_kol
    }

    pub fn dkw_radius(&self, delta: f64) -> Result<f64> {
        dkw_radius(self.n(), delta)
    }

    /// F̂_n(z) = #{x ≤ z}/n.
    pub fn ecdf(&self, z: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= z) as f64 / self.n() as f64
    }

    pub fn ratio_curve(&self, phi: f64, zs: &[f64], rho: Option<f64>) -> Result<Vec<RatioPoint>> {
        if !(phi > 0.0) {
            return Err(invalid("ratio curve needs phi > 0"));
        }
        let n = self.n() as f64;
        Ok(zs
            .iter()
            .map(|&z| {
                let p = normal_cdf(z);
                RatioPoint {
                    z,
                    ratio: (self.ecdf(z) - p) / phi,
                    std_error: (p * (1.0 - p) / n).sqrt() / phi,
                    predicted: rho.map(|r| predicted_ratio(r, z)),
                }
            })
            .collect())
    }

    pub fn edgeworth_check(&self, kappa3: f64, zs: &[f64]) -> Result<EdgeworthCheck> {
        if zs.is_empty() {
            return Err(invalid("empty z grid"));
        }
        let (mut residual_max, mut plain_max) = (0.0f64, 0.0f64);
        for &z in zs {
            let e = self.ecdf(z);
            residual_max = residual_max.max((e - edgeworth_cdf(kappa3, z)).abs());
            plain_max = plain_max.max((e - normal_cdf(z)).abs());
        }
        Ok(EdgeworthCheck {
            residual_max,
            plain_max,
            mc_radius: self.dkw_radius(0.01)?,
        })
    }
}

/// Uniform grid of `count` points on [lo, hi].
pub fn z_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
