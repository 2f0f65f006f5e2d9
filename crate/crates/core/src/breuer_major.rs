//! Breuer–Major sums of fractional Brownian motion increments:
//! Z_T = (σ(T)√T)^{−1}∫_0^T H_q(B_{u+1} − B_u) du for even q and H < 1/2.
//!
//! Constants are computed by adaptive quadrature. Both multiple integrals
//! reduce to iterated one-dimensional ones through the autocorrelation
//! A_c(y) = ∫c(x)c(x + y)dx of a power c = ρ^p:
//! the per-s integral equals ∫A_{ρ^s}(y)A_{ρ^{q−s}}(y)dy and the skewness
//! integral equals ∫ρ^{q/2}(x)A_{ρ^{q/2}}(x)dx.

use rayon::prelude::*;

use crate::chaos2::{normal_approx_report, Chaos2Spectrum, NormalApproxReport};
use crate::chaos_tensor::phi_weight;
use crate::combinatorics::{binomial, factorial, product};
use crate::error::{invalid, Error, Result};
use crate::mc_verify::{predicted_ratio, EmpiricalStudy};
use crate::numerics::matrix::dot;
use crate::numerics::quadrature::{integrate_1d_breaks, DEFAULT_MAX_EVALS};
use crate::numerics::random::par_fill_blocks;
use crate::numerics::{
    eigenvalues_symmetric, DenseMatrix, Quadrature, RandomSource, SymmetricMatrix,
};
use crate::stein_hermite::{hermite, normal_cdf};
use crate::toeplitz::covariance_root;

/// Largest number of grid points in a simulated field (T/δ + 1/δ).
pub const MAX_FIELD_POINTS: usize = 8000;
/// |ρ|^p below which the tail of a power is dropped.
pub const TAIL_CUTOFF: f64 = 1e-12;
/// Upper cap on the truncation radius.
pub const MAX_RADIUS: f64 = 2.0e4;
pub const MAX_ORDER: u32 = 10;

/// ρ(x) = ½(|x+1|^{2H} + |x−1|^{2H} − 2|x|^{2H}).
pub fn fbm_rho(hurst: f64, x: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * ((x + 1.0).abs().powf(e) + (x - 1.0).abs().powf(e) - 2.0 * x.abs().powf(e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmModel {
    pub hurst: f64,
    pub q: u32,
    pub horizon: f64,
    pub delta: f64,
}

impl FbmModel {
    /// H ∈ (0, 1/2] (the endpoint gives Brownian increments), even q ≥ 2,
    /// and T/δ integral.
    pub fn new(hurst: f64, q: u32, horizon: f64, delta: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(Error::OutOfRange {
                what: "Hurst index",
                value: hurst.to_string(),
                range: "(0, 1/2]",
            });
        }
        if q < 2 || !q.is_multiple_of(2) || q > MAX_ORDER {
            return Err(Error::OutOfRange {
                what: "Hermite order",
                value: q.to_string(),
                range: "even, 2..=10",
            });
        }
        if !(horizon > 0.0 && delta > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon and mesh must be positive"));
        }
        let n = (horizon / delta).round();
        if n < 1.0 || (n * delta - horizon).abs() > 1e-9 * horizon {
            return Err(invalid(format!(
                "T/delta = {} is not an integer",
                horizon / delta
            )));
        }
        Ok(Self {
            hurst,
            q,
            horizon,
            delta,
        })
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.hurst, self.q, horizon, self.delta)
    }

    /// Number of Riemann nodes u_i = iδ in [0, T).
    pub fn nodes(&self) -> usize {
        (self.horizon / self.delta).round() as usize
    }

    pub fn rho(&self, x: f64) -> f64 {
        fbm_rho(self.hurst, x)
    }

    /// Leading coefficient of ρ(x) ~ H(2H−1)|x|^{2H−2}.
    fn tail_coefficient(&self) -> f64 {
        self.hurst * (2.0 * self.hurst - 1.0)
    }

    /// Radius beyond which |ρ|^p < `TAIL_CUTOFF`, capped at `MAX_RADIUS`.
    pub fn truncation_radius(&self, p: u32) -> f64 {
        let c = self.tail_coefficient().abs();
        if c == 0.0 {
            return 1.0;
        }
        let r = (TAIL_CUTOFF.powf(1.0 / p as f64) / c).powf(1.0 / (2.0 * self.hurst - 2.0));
        r.clamp(2.0, MAX_RADIUS)
    }

    /// ∫_R^∞ |ρ|^p from the leading tail term.
    fn tail_estimate(&self, p: u32, radius: f64) -> f64 {
        let c = self.tail_coefficient().abs();
        let e = p as f64 * (2.0 - 2.0 * self.hurst) - 1.0;
        if c == 0.0 || e <= 0.0 {
            return 0.0;
        }
        c.powi(p as i32) * radius.powf(-e) / e
    }
}

/// Kinks of ρ at 0, ±1, plus geometric points out to the radius.
fn breaks_on(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi, 0.0];
    let mut x = 1.0;
    while x < hi.max(-lo) {
        pts.push(x);
        pts.push(-x);
        x *= 2.0;
    }
    pts.extend_from_slice(extra);
    pts.retain(|&p| p >= lo && p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// q!·∫_{−T}^{T}(1 − |x|/T)ρ^q(x)dx.
fn sigma2_finite(model: &FbmModel, tol: f64) -> Quadrature<f64> {
    let qf = factorial(model.q).expect("q <= 10") as f64;
    let t = model.horizon;
    let pts = breaks_on(0.0, t, &[1.0]);
    integrate_1d_breaks(
        |x| (1.0 - x / t) * model.rho(x).powi(model.q as i32),
        &pts,
        tol,
        DEFAULT_MAX_EVALS,
    )
    .scaled(2.0 * qf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceConstants {
    pub sigma2_t: Quadrature<f64>,
    pub sigma2_inf: Quadrature<f64>,
    pub radius: f64,
    /// Analytic tail ∫_{|x|>R} q!ρ^q included in `sigma2_inf`.
    pub tail: f64,
}

pub fn variance_constants(model: &FbmModel) -> VarianceConstants {
    let qf = factorial(model.q).expect("q <= 10") as f64;
    let radius = model.truncation_radius(model.q);
    let head = integrate_1d_breaks(
        |x| model.rho(x).powi(model.q as i32),
        &breaks_on(0.0, radius, &[1.0]),
        1e-13,
        DEFAULT_MAX_EVALS,
    );
    let tail = model.tail_estimate(model.q, radius);
    let sigma2_inf = Quadrature {
        value: 2.0 * qf * (head.value + tail),
        error: 2.0 * qf * (head.error + 0.1 * tail),
        ..head
    };
    VarianceConstants {
        sigma2_t: sigma2_finite(model, 1e-12),
        sigma2_inf,
        radius,
        tail: 2.0 * qf * tail,
    }
}

/// (δ²q!/T)Σ_{i,k}ρ((i−k)δ)^q, the exact variance of the Riemann sum.
pub fn discrete_sigma2(model: &FbmModel) -> f64 {
    let n = model.nodes();
    let qf = factorial(model.q).expect("q <= 10") as f64;
    let mut s = 1.0 * n as f64;
    for k in 1..n {
        s += 2.0 * (n - k) as f64 * model.rho(k as f64 * model.delta).powi(model.q as i32);
    }
    model.delta * model.delta * qf * s / model.horizon
}

/// Truncated autocorrelation A(y) = ∫_{−R}^{R} c(x)c(x + y)dx for c = ρ^p.
fn autocorrelation(model: &FbmModel, p: u32, y: f64, radius: f64, tol: f64) -> Quadrature<f64> {
    let c = |x: f64| {
        if x.abs() > radius {
            0.0
        } else {
            model.rho(x).powi(p as i32)
        }
    };
    let pts = breaks_on(-radius, radius, &[-y, -y - 1.0, -y + 1.0, 1.0, -1.0]);
    integrate_1d_breaks(|x| c(x) * c(x + y), &pts, tol, DEFAULT_MAX_EVALS)
}

/// ∫_ℝ a(y)b(y)dy with a, b autocorrelations of ρ^s and ρ^{q−s}, all
/// powers cut at `radius`.
fn per_s_integral(model: &FbmModel, s: u32, radius: f64, tol: f64) -> Quadrature<f64> {
    let q = model.q;
    let inner_tol = tol * 1e-2;
    let mut inner_ok = true;
    let mut inner_err: f64 = 0.0;
    let outer = integrate_1d_breaks(
        |y| {
            let a = autocorrelation(model, s, y, radius, inner_tol);
            let b = if q - s == s {
                a
            } else {
                autocorrelation(model, q - s, y, radius, inner_tol)
            };
            inner_ok &= a.converged && b.converged;
            inner_err = inner_err.max(a.error * b.value.abs() + b.error * a.value.abs());
            a.value * b.value
        },
        &breaks_on(0.0, 2.0 * radius, &[1.0, 2.0]),
        tol,
        DEFAULT_MAX_EVALS,
    );
    Quadrature {
        converged: outer.converged && inner_ok,
        error: outer.error + inner_err * 4.0 * radius,
        ..outer
    }
    .scaled(2.0)
}

/// ∫ρ^{q/2}(x)A_{ρ^{q/2}}(x)dx, the double integral in the skewness constant.
fn skewness_integral(model: &FbmModel, radius: f64, tol: f64) -> Quadrature<f64> {
    let p = model.q / 2;
    let inner_tol = tol * 1e-2;
    let mut inner_ok = true;
    let mut inner_err: f64 = 0.0;
    let outer = integrate_1d_breaks(
        |x| {
            let c = model.rho(x).powi(p as i32);
            if c == 0.0 {
                return 0.0;
            }
            let a = autocorrelation(model, p, x, radius, inner_tol);
            inner_ok &= a.converged;
            inner_err = inner_err.max(a.error * c.abs());
            c * a.value
        },
        &breaks_on(0.0, radius, &[1.0, 2.0]),
        tol,
        DEFAULT_MAX_EVALS,
    );
    Quadrature {
        converged: outer.converged && inner_ok,
        error: outer.error + inner_err * 2.0 * radius,
        ..outer
    }
    .scaled(2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreuerMajorConstants {
    pub sigma2_t: f64,
    pub sigma2_inf: f64,
    /// (s, exact weight (s−1)!²C(q−1,s−1)⁴(2q−2s)!, triple integral).
    pub per_s: Vec<(u32, u128, Quadrature<f64>)>,
    /// σ̂²(∞) = q²/σ⁴(∞)·Σ_s weight_s·integral_s.
    pub sigma_hat2: f64,
    /// Exact q!(q/2)!C(q, q/2)², the numerator of the skewness prefactor.
    pub gamma_prefactor: u128,
    pub gamma_integral: Quadrature<f64>,
    /// γ̂(∞) = −prefactor/(2σ³(∞))·integral.
    pub gamma_hat: f64,
    pub radius: f64,
    /// Relative changes of σ̂² and γ̂ when the radius is doubled.
    pub sigma_hat2_stability: Option<f64>,
    pub gamma_hat_stability: Option<f64>,
    pub converged: bool,
}

impl BreuerMajorConstants {
    /// γ̂(∞)/3, the coefficient of (z² − 1)φ(z) in the limit curve.
    pub fn curve_coefficient(&self) -> f64 {
        self.gamma_hat / 3.0
    }

    /// Predicted limit of √T(P(Z_T ≤ z) − Φ(z)).
    pub fn limit_curve(&self, z: f64) -> f64 {
        predicted_ratio(self.gamma_hat, z)
    }

    /// Largest relative change under doubling the radius.
    pub fn stability(&self) -> Option<f64> {
        Some(self.sigma_hat2_stability?.max(self.gamma_hat_stability?))
    }
}

/// q!(q/2)!C(q, q/2)².
pub fn gamma_prefactor(q: u32) -> Result<u128> {
    let b = binomial(q, q / 2)?;
    product(&[factorial(q)?, factorial(q / 2)?, b, b])
}

struct RawConstants {
    per_s: Vec<(u32, u128, Quadrature<f64>)>,
    sigma_hat2: f64,
    gamma_integral: Quadrature<f64>,
    gamma_hat: f64,
}

fn raw_constants(model: &FbmModel, sigma2_inf: f64, radius: f64, tol: f64) -> Result<RawConstants> {
    let q = model.q;
    let per_s = (1..q)
        .map(|s| Ok((s, phi_weight(q, s)?, per_s_integral(model, s, radius, tol))))
        .collect::<Result<Vec<_>>>()?;
    let weighted: f64 = per_s.iter().map(|(_, w, i)| *w as f64 * i.value).sum();
    let sigma_hat2 = (q * q) as f64 / (sigma2_inf * sigma2_inf) * weighted;
    let gamma_integral = skewness_integral(model, radius, tol);
    let gamma_hat =
        -(gamma_prefactor(q)? as f64) / (2.0 * sigma2_inf.powf(1.5)) * gamma_integral.value;
    Ok(RawConstants {
        per_s,
        sigma_hat2,
        gamma_integral,
        gamma_hat,
    })
}

/// σ̂²(∞) and γ̂(∞) with powers of ρ cut beyond the truncation radius, plus
/// the same computation at twice the radius as a stability check.
pub fn limit_constants(model: &FbmModel, tol: f64) -> Result<BreuerMajorConstants> {
    let v = variance_constants(model);
    let sigma2_inf = v.sigma2_inf.value;
    let radius = if model.hurst == 0.5 {
        2.0
    } else {
        model.truncation_radius(model.q / 2).min(MAX_RADIUS / 2.0)
    };
    let base = raw_constants(model, sigma2_inf, radius, tol)?;
    let (s_stab, g_stab) = if model.hurst == 0.5 {
        (Some(0.0), Some(0.0))
    } else {
        let wide = raw_constants(model, sigma2_inf, 2.0 * radius, tol)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        (
            Some(rel(base.sigma_hat2, wide.sigma_hat2)),
            Some(rel(base.gamma_hat, wide.gamma_hat)),
        )
    };
    let converged = v.sigma2_inf.converged
        && v.sigma2_t.converged
        && base.gamma_integral.converged
        && base.per_s.iter().all(|(_, _, i)| i.converged);
    Ok(BreuerMajorConstants {
        sigma2_t: v.sigma2_t.value,
        sigma2_inf,
        per_s: base.per_s,
        sigma_hat2: base.sigma_hat2,
        gamma_prefactor: gamma_prefactor(model.q)?,
        gamma_integral: base.gamma_integral,
        gamma_hat: base.gamma_hat,
        radius,
        sigma_hat2_stability: s_stab,
        gamma_hat_stability: g_stab,
        converged,
    })
}

/// Toeplitz covariance [ρ((i−k)δ)] of the increments X_i = B_{iδ+1} − B_{iδ}.
pub fn increment_covariance(model: &FbmModel) -> Result<SymmetricMatrix<f64>> {
    let n = model.nodes();
    if n + (1.0 / model.delta).ceil() as usize > MAX_FIELD_POINTS {
        return Err(Error::Budget(format!(
            "{n} nodes exceed the dense factorization budget"
        )));
    }
    let col: Vec<f64> = (0..n).map(|k| model.rho(k as f64 * model.delta)).collect();
    Ok(SymmetricMatrix::toeplitz(&col)?.with_name("fBm increment covariance"))
}

/// Dense factor of the increment covariance, reusable across replicas.
#[derive(Debug, Clone)]
pub struct IncrementField {
    model: FbmModel,
    root: DenseMatrix<f64>,
}

impl IncrementField {
    pub fn new(model: &FbmModel) -> Result<Self> {
        let (root, _) = covariance_root(&increment_covariance(model)?)?;
        Ok(Self {
            model: *model,
            root,
        })
    }

    pub fn model(&self) -> &FbmModel {
        &self.model
    }

    pub fn sample_into(&self, src: &mut RandomSource, xi: &mut [f64], out: &mut [f64]) {
        src.fill_standard_normals(xi);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.root.row(i), xi);
        }
    }

    pub fn sample(&self, src: &mut RandomSource) -> Vec<f64> {
        let n = self.model.nodes();
        let mut xi = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.sample_into(src, &mut xi, &mut out);
        out
    }
}

/// One stationary increment field on the mesh.
pub fn simulate_increment_field(model: &FbmModel, src: &mut RandomSource) -> Result<Vec<f64>> {
    Ok(IncrementField::new(model)?.sample(src))
}

/// Scale used to standardize the Riemann sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// σ(T) of the continuous-time integral.
    Continuous,
    /// Exact standard deviation of the Riemann sum, so Var Z_T = 1.
    Discrete,
}

fn sigma_for(model: &FbmModel, normalization: Normalization) -> f64 {
    match normalization {
        Normalization::Continuous => sigma2_finite(model, 1e-12).value.sqrt(),
        Normalization::Discrete => discrete_sigma2(model).sqrt(),
    }
}

/// For q = 2 the Riemann sum δΣ(X_i² − 1)/(σ√T) is a quadratic form; its
/// second-chaos spectrum is δμ_j/(σ√T) with μ_j the covariance eigenvalues.
pub fn quadratic_spectrum(
    model: &FbmModel,
    normalization: Normalization,
) -> Result<Chaos2Spectrum<f64>> {
    if model.q != 2 {
        return Err(invalid("the spectral representation needs q = 2"));
    }
    let mu = eigenvalues_symmetric(&increment_covariance(model)?)?;
    let scale = model.delta / (sigma_for(model, normalization) * model.horizon.sqrt());
    Chaos2Spectrum::from_eigenvalues(mu.into_iter().map(|m| m * scale).collect(), model.delta)
}

/// `n` draws of the discretized Z_T. q = 2 samples exactly through the
/// spectrum; larger q evaluates Hermite sums of dense-factor fields.
pub fn sample_zt(
    model: &FbmModel,
    src: &RandomSource,
    n: usize,
    normalization: Normalization,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    if model.q == 2 {
        return Ok(quadratic_spectrum(model, normalization)?.sample(src, n));
    }
    let field = IncrementField::new(model)?;
    let scale = model.delta / (sigma_for(model, normalization) * model.horizon.sqrt());
    let nodes = model.nodes();
    let q = model.q as usize;
    let mut out = vec![0.0; n];
    par_fill_blocks(src, &mut out, 256, |s, chunk| {
        let mut xi = vec![0.0; nodes];
        let mut x = vec![0.0; nodes];
        for v in chunk {
            field.sample_into(s, &mut xi, &mut x);
            *v = scale
                * x.iter()
                    .map(|&u| hermite(q, u).expect("q <= 10"))
                    .sum::<f64>();
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPoint {
    pub z: f64,
    /// √T(P̂(Z_T ≤ z) − Φ(z)).
    pub measured: f64,
    pub std_error: f64,
    pub predicted: f64,
    pub underpowered: bool,
}

#[derive(Debug, Clone)]
pub struct LimitRow {
    pub horizon: f64,
    pub n: usize,
    pub points: Vec<LimitPoint>,
    pub d_kol: f64,
    /// √T·d̂_Kol.
    pub scaled_d_kol: f64,
    /// Cumulants of the discretized Z_T (q = 2 only).
    pub normal: Option<NormalApproxReport<f64>>,
    /// Exact E[Z_T·√T(½‖DZ_T‖² − 1)] = √T·κ₃/2 of the discretized Z_T
    /// (q = 2), whose limit is −γ̂(∞).
    pub derivative_covariance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub constants: BreuerMajorConstants,
    pub rows: Vec<LimitRow>,
}

impl LimitReport {
    /// max/min of √T·d̂_Kol along the ladder.
    pub fn boundedness_ratio(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.scaled_d_kol).collect();
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    }
}

/// Measures √T(P̂(Z_T ≤ z) − Φ(z)) along a horizon ladder against the
/// predicted curve (γ̂(∞)/3)(z² − 1)φ(z). Each horizon uses its own random
/// stream `src.stream() + k`.
pub fn verify_limit(
    model: &FbmModel,
    horizons: &[f64],
    zs: &[f64],
    src: &RandomSource,
    n: usize,
    constants: BreuerMajorConstants,
) -> Result<LimitReport> {
    if horizons.is_empty() {
        return Err(invalid("empty horizon ladder"));
    }
    let rows = horizons
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let m = model.with_horizon(t)?;
            let rs = RandomSource::new(src.seed(), src.stream().wrapping_add(k as u64));
            let (sample, normal) = if m.q == 2 {
                let spec = quadratic_spectrum(&m, Normalization::Discrete)?;
                (spec.sample(&rs, n), Some(normal_approx_report(&spec)))
            } else {
                (sample_zt(&m, &rs, n, Normalization::Discrete)?, None)
            };
            let study = EmpiricalStudy::new(sample)?;
            let root_t = t.sqrt();
            let points = zs
                .iter()
                .map(|&z| {
                    let p = normal_cdf(z);
                    let predicted = constants.limit_curve(z);
                    let std_error = root_t * (p * (1.0 - p) / n as f64).sqrt();
                    LimitPoint {
                        z,
                        measured: root_t * (study.ecdf(z) - p),
                        std_error,
                        predicted,
                        underpowered: predicted.abs() > 1e-12 && std_error > 0.5 * predicted.abs(),
                    }
                })
                .collect();
            Ok(LimitRow {
                horizon: t,
                n,
                points,
                d_kol: study.d_kol(),
                scaled_d_kol: root_t * study.d_kol(),
                derivative_covariance: normal.as_ref().map(|r| root_t * r.kappa3 / 2.0),
                normal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport { constants, rows })
}

/// Per-horizon σ²(T) ladder.
pub fn sigma2_ladder(model: &FbmModel, horizons: &[f64]) -> Result<Vec<(f64, f64)>> {
    horizons
        .par_iter()
        .map(|&t| Ok((t, sigma2_finite(&model.with_horizon(t)?, 1e-12).value)))
        .collect()
}
