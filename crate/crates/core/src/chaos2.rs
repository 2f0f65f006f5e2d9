//! Second-chaos engine. A variable F = I_2(f) is equal in law to
//! Σ_j λ_j(ξ_j² − 1) where λ_j are the eigenvalues of the kernel operator,
//! so cumulants, the Kolmogorov bound, the Edgeworth term and exact samples
//! all come from the spectrum.

use rayon::prelude::*;

use crate::chaos_tensor::GridTensor;
use crate::combinatorics::second_chaos_cumulant_factor;
use crate::error::{invalid, Error, Result};
use crate::numerics::random::{par_fill_blocks, DEFAULT_BLOCK_LEN};
use crate::numerics::{eigenvalues_symmetric, DenseMatrix, RandomSource, SymmetricMatrix};
use crate::real::Real;
use crate::stein_hermite::{normal_cdf, normal_pdf, phi_cdf_derivative};

/// κ₂ below which standardization is refused.
pub const MIN_STANDARDIZE_VARIANCE: f64 = 1e-14;
/// Highest cumulant order served by the trace route.
pub const MAX_TRACE_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Chaos2Spectrum<T> {
    eigenvalues: Vec<T>,
    mesh: T,
}

fn sort_by_magnitude<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

impl<T: Real> Chaos2Spectrum<T> {
    pub fn from_eigenvalues(mut eigenvalues: Vec<T>, mesh: T) -> Result<Self> {
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite eigenvalue"));
        }
        if !(mesh > T::zero()) {
            return Err(invalid("mesh must be positive"));
        }
        sort_by_magnitude(&mut eigenvalues);
        Ok(Self { eigenvalues, mesh })
    }

    /// Eigenvalues of h·F for an order-2 kernel with value matrix F.
    pub fn from_kernel(f: &GridTensor<T>) -> Result<Self> {
        Self::from_matrix(&operator_matrix(f)?, f.mesh())
    }

    /// Spectrum of an already weighted operator matrix.
    pub fn from_matrix(m: &SymmetricMatrix<T>, mesh: T) -> Result<Self> {
        Self::from_eigenvalues(eigenvalues_symmetric(m)?, mesh)
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn mesh(&self) -> T {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn power_sum(&self, p: u32) -> T {
        self.eigenvalues.iter().map(|&l| l.powi(p as i32)).sum()
    }

    /// κ_p = 2^{p-1}(p-1)!·Σλ^p; κ₁ = 0 (centered), p = 0 rejected.
    pub fn cumulant(&self, p: u32) -> Result<T> {
        match p {
            0 => Err(invalid("cumulant order must be >= 1")),
            1 => Ok(T::zero()),
            _ => Ok(T::lit(second_chaos_cumulant_factor(p)? as f64) * self.power_sum(p)),
        }
    }

    pub fn cumulants(&self, pmax: u32) -> Result<Vec<T>> {
        (1..=pmax).map(|p| self.cumulant(p)).collect()
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut eigenvalues: Vec<T> = self.eigenvalues.iter().map(|&l| l * c).collect();
        sort_by_magnitude(&mut eigenvalues);
        Self {
            eigenvalues,
            mesh: self.mesh,
        }
    }

    /// Rescaled so that κ₂ = 1.
    pub fn standardized(&self) -> Result<Self> {
        let k2 = self.cumulant(2)?;
        if k2 < T::lit(MIN_STANDARDIZE_VARIANCE) {
            return Err(Error::OutOfRange {
                what: "kappa_2",
                value: k2.to_string(),
                range: ">= 1e-14",
            });
        }
        Ok(self.scaled(T::one() / k2.sqrt()))
    }

    /// Eigenvalues of the product kernel f ⊗ g: all pairwise products.
    pub fn kronecker(&self, other: &Self) -> Result<Self> {
        let vals = self
            .eigenvalues
            .iter()
            .flat_map(|&a| other.eigenvalues.iter().map(move |&b| a * b))
            .collect();
        Self::from_eigenvalues(vals, self.mesh * other.mesh)
    }
}

/// The symmetric matrix h·F representing the kernel operator.
pub fn operator_matrix<T: Real>(f: &GridTensor<T>) -> Result<SymmetricMatrix<T>> {
    if f.order() != 2 {
        return Err(Error::Shape(format!(
            "second-chaos kernel has order {}",
            f.order()
        )));
    }
    let a = f.as_array();
    let h = f.mesh();
    Ok(
        SymmetricMatrix::from_fn(f.grid_size(), |i, j| a.get(&[i, j]) * h)?
            .with_name("kernel operator"),
    )
}

/// Tr(P^p) for p = 1..=pmax (pmax ≤ 8) with three matrix products.
pub fn trace_powers<T: Real>(p: &DenseMatrix<T>, pmax: usize) -> Result<Vec<T>> {
    if pmax > MAX_TRACE_ORDER {
        return Err(Error::OutOfRange {
            what: "trace power",
            value: pmax.to_string(),
            range: "0..=8",
        });
    }
    let mut out = Vec::with_capacity(pmax);
    if pmax == 0 {
        return Ok(out);
    }
    out.push(p.trace());
    if pmax == 1 {
        return Ok(out);
    }
    let p2 = p.matmul(p)?;
    out.push(p2.trace());
    if pmax >= 3 {
        out.push(p2.trace_of_product(p)?);
    }
    if pmax >= 4 {
        let p4 = p2.matmul(&p2)?;
        out.push(p4.trace());
        if pmax >= 5 {
            out.push(p4.trace_of_product(p)?);
        }
        if pmax >= 6 {
            out.push(p4.trace_of_product(&p2)?);
        }
        if pmax >= 7 {
            let p3 = p2.matmul(p)?;
            out.push(p4.trace_of_product(&p3)?);
        }
        if pmax >= 8 {
            out.push(p4.trace_of_product(&p4)?);
        }
    }
    Ok(out)
}

/// Cumulants κ_1..κ_pmax by the trace route 2^{p-1}(p-1)!·Tr((hF)^p).
pub fn trace_cumulants<T: Real>(f: &GridTensor<T>, pmax: usize) -> Result<Vec<T>> {
    let traces = trace_powers(&operator_matrix(f)?.to_dense(), pmax)?;
    traces
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let p = k as u32 + 1;
            if p == 1 {
                Ok(T::zero())
            } else {
                Ok(T::lit(second_chaos_cumulant_factor(p)? as f64) * t)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalApproxReport<T> {
    pub kappa2: T,
    pub kappa3: T,
    pub kappa4: T,
    pub kappa8: T,
    pub phi: T,
    pub kolmogorov_bound: T,
    /// κ₃/φ; `None` when φ = 0.
    pub alpha: Option<T>,
    /// κ₈/φ⁴; `None` when φ = 0.
    pub eighth_ratio: Option<T>,
    /// −κ₃/6, the weight of Φ'''(z) in the one-term expansion.
    pub edgeworth_coefficient: T,
}

impl<T: Real> NormalApproxReport<T> {
    /// Skewness limit ρ = −κ₃/(2φ).
    pub fn rho(&self) -> Option<T> {
        self.alpha.map(|a| -a / T::lit(2.0))
    }

    /// Φ(z) − (κ₃/6)Φ'''(z).
    pub fn edgeworth_cdf(&self, z: T) -> T {
        edgeworth_cdf(self.kappa3, z)
    }
}

pub fn normal_approx_report<T: Real>(s: &Chaos2Spectrum<T>) -> NormalApproxReport<T> {
    let k = |p| s.cumulant(p).expect("orders 2..=8 are valid");
    let (kappa2, kappa3, kappa4, kappa8) = (k(2), k(3), k(4), k(8));
    let phi = (kappa4 / T::lit(6.0) + (kappa2 - T::one()).powi(2)).sqrt();
    let positive = phi > T::zero();
    NormalApproxReport {
        kappa2,
        kappa3,
        kappa4,
        kappa8,
        phi,
        kolmogorov_bound: phi,
        alpha: positive.then(|| kappa3 / phi),
        eighth_ratio: positive.then(|| kappa8 / phi.powi(4)),
        edgeworth_coefficient: -kappa3 / T::lit(6.0),
    }
}

/// (α/6)(1 − z²)φ(z): the limit of (P(F ≤ z) − Φ(z))/φ.
pub fn limit_curve<T: Real>(alpha: T, z: T) -> T {
    alpha / T::lit(6.0) * (T::one() - z * z) * normal_pdf(z)
}

pub fn edgeworth_cdf<T: Real>(kappa3: T, z: T) -> T {
    let d3 = phi_cdf_derivative(3, z).expect("order 3 in range");
    normal_cdf(z) - kappa3 / T::lit(6.0) * d3
}

/// Σλ(ξ² − 1) for one draw.
#[inline]
fn draw_one(eig: &[f64], src: &mut RandomSource) -> f64 {
    eig.iter()
        .map(|&l| {
            let x = src.standard_normal();
            l * (x * x - 1.0)
        })
        .sum()
}

/// Exact Monte Carlo moment check of E[F^s‖DF‖²] = (2/(s+1))E[F^{s+2}].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub s: u32,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    /// Standard error of the paired per-draw difference.
    pub diff_se: f64,
}

impl MomentCheck {
    /// |lhs − rhs| in units of the paired standard error.
    pub fn z_score(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if self.diff_se > 0.0 {
            d / self.diff_se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    lhs: [f64; 2],
    rhs: [f64; 2],
    diff: [f64; 2],
}

impl Moments {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.lhs[0] += a;
        self.lhs[1] += a * a;
        self.rhs[0] += b;
        self.rhs[1] += b * b;
        self.diff[0] += a - b;
        self.diff[1] += (a - b) * (a - b);
    }

    fn merge(mut self, o: Self) -> Self {
        self.n += o.n;
        for k in 0..2 {
            self.lhs[k] += o.lhs[k];
            self.rhs[k] += o.rhs[k];
            self.diff[k] += o.diff[k];
        }
        self
    }

    fn mean_se(&self, s: [f64; 2]) -> (f64, f64) {
        let mean = s[0] / self.n;
        let var = ((s[1] - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        (mean, (var / self.n).sqrt())
    }
}

impl Chaos2Spectrum<f64> {
    /// `n` independent draws of Σλ_j(ξ_j² − 1) using every eigenvalue.
    /// Draws are produced in fixed blocks so the output does not depend on
    /// the size of the rayon pool.
    pub fn sample(&self, src: &RandomSource, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if self.eigenvalues.iter().all(|&l| l == 0.0) {
            return out;
        }
        let eig = &self.eigenvalues;
        let block = (DEFAULT_BLOCK_LEN * 64 / eig.len().max(1)).clamp(64, DEFAULT_BLOCK_LEN);
        par_fill_blocks(src, &mut out, block, |s, chunk| {
            for v in chunk {
                *v = draw_one(eig, s);
            }
        });
        out
    }

    pub fn malliavin_moment_check(
        &self,
        src: &RandomSource,
        n: usize,
        s: u32,
    ) -> Result<MomentCheck> {
        if s > 3 {
            return Err(Error::OutOfRange {
                what: "moment exponent",
                value: s.to_string(),
                range: "0..=3",
            });
        }
        if n < 2 {
            return Err(invalid("moment check needs n >= 2"));
        }
        let eig = &self.eigenvalues;
        let w = 2.0 / (s as f64 + 1.0);
        let block = DEFAULT_BLOCK_LEN;
        let blocks = n.div_ceil(block);
        let parts: Vec<Moments> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rs = src.block(b as u64);
                let mut m = Moments::default();
                for _ in (b * block)..((b + 1) * block).min(n) {
                    let (mut f, mut d) = (0.0, 0.0);
                    for &l in eig {
                        let x = rs.standard_normal();
                        let x2 = x * x;
                        f += l * (x2 - 1.0);
                        d += 4.0 * l * l * x2;
                    }
                    let fs = f.powi(s as i32);
                    m.push(fs * d, w * fs * f * f);
                }
                m
            })
            .collect();
        let tot = parts.into_iter().fold(Moments::default(), Moments::merge);
        let (lhs, lhs_se) = tot.mean_se(tot.lhs);
        let (rhs, rhs_se) = tot.mean_se(tot.rhs);
        let (_, diff_se) = tot.mean_se(tot.diff);
        Ok(MomentCheck {
            s,
            n,
            lhs,
            rhs,
            lhs_se,
            rhs_se,
            diff_se,
        })
    }
}
