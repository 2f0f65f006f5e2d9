//! Quadratic functionals Q_T = ∬_{[0,T]²} ĝ(t − s) X_t X_s ds dt of a
//! stationary Gaussian process with spectral density f: truncated Toeplitz
//! operators, trace cumulants, their asymptotic constants and an exact
//! second-chaos embedding for simulation.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;

use crate::chaos2::{trace_powers, Chaos2Spectrum};
use crate::combinatorics::second_chaos_cumulant_factor;
use crate::error::{invalid, Error, Result};
use crate::numerics::quadrature::{
    cosine_transform, integrate_1d_breaks, integrate_semi_infinite, DEFAULT_MAX_EVALS,
};
use crate::numerics::{eigen_symmetric, DenseMatrix, Quadrature, SymmetricMatrix};

/// Tolerance for every ψ̂ entry of the operator matrices.
pub const TRANSFORM_TOL: f64 = 1e-9;
/// Largest grid accepted by [`toeplitz_cumulants`].
pub const MAX_GRID: usize = 3000;
/// Relative floor below which negative covariance eigenvalues are clipped.
pub const PSD_FLOOR: f64 = 1e-8;

/// Names and one-line descriptions of the built-in spectral pairs.
pub const BUILTIN_PAIRS: &[(&str, &str)] = &[
    ("cauchy-pair", "f = g = 1/(pi (1 + l^2))"),
    ("gaussian-pair", "f = g = exp(-l^2/2)/sqrt(2 pi)"),
    (
        "sign-change-pair",
        "f = 1/4 on |l| < 2; g = 1 on |l| < 1, -1 on 1 <= |l| < 2 (int f^3 g^3 = 0)",
    ),
];

/// Piecewise-linear table on λ ≥ 0, extended evenly, with an optional
/// power-law tail v_n (λ/λ_n)^{-α} beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    lambda: Vec<f64>,
    value: Vec<f64>,
    tail_exponent: Option<f64>,
}

impl Tabulated {
    pub fn new(lambda: Vec<f64>, value: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        if lambda.len() < 2 || lambda.len() != value.len() {
            return Err(invalid("table needs at least two (lambda, value) rows"));
        }
        if lambda[0] < 0.0 || lambda.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("lambda must be >= 0 and strictly increasing"));
        }
        if lambda.iter().chain(&value).any(|v| !v.is_finite()) {
            return Err(invalid("table entries must be finite"));
        }
        if let Some(a) = tail_exponent {
            if !(a > 1.0) {
                return Err(Error::OutOfRange {
                    what: "tail exponent",
                    value: a.to_string(),
                    range: "> 1",
                });
            }
        }
        Ok(Self {
            lambda,
            value,
            tail_exponent,
        })
    }

    /// Reads a CSV with header `lambda,value`.
    pub fn from_csv<R: Read>(reader: R, tail_exponent: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "value" {
            return Err(Error::Parse(format!(
                "expected header `lambda,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut lambda, mut value) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let num = |k: usize| {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))
            };
            lambda.push(num(0)?);
            value.push(num(1)?);
        }
        Self::new(lambda, value, tail_exponent)
    }

    pub fn from_path(path: &Path, tail_exponent: Option<f64>) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv(file, tail_exponent)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let n = self.lambda.len();
        if x < self.lambda[0] {
            return self.value[0];
        }
        if x >= self.lambda[n - 1] {
            return match self.tail_exponent {
                Some(a) if x > self.lambda[n - 1] => {
                    self.value[n - 1] * (x / self.lambda[n - 1]).powf(-a)
                }
                _ if x == self.lambda[n - 1] => self.value[n - 1],
                _ => 0.0,
            };
        }
        let k = self.lambda.partition_point(|&l| l <= x) - 1;
        let (x0, x1) = (self.lambda[k], self.lambda[k + 1]);
        let w = (x - x0) / (x1 - x0);
        self.value[k] * (1.0 - w) + self.value[k + 1] * w
    }
}

/// An even function on ℝ, given on λ ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFunction {
    Zero,
    /// 1/(π(1 + λ²)).
    Cauchy,
    /// e^{-λ²/2}/√(2π).
    Gaussian,
    /// `height` on |λ| < `half_width`.
    Box {
        half_width: f64,
        height: f64,
    },
    /// 1 on |λ| < 1, −1 on 1 ≤ |λ| < 2.
    SignStep,
    Tabulated(Tabulated),
}

impl SpectralFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Self::Zero => 0.0,
            Self::Cauchy => 1.0 / (PI * (1.0 + a * a)),
            Self::Gaussian => (-0.5 * a * a).exp() / (2.0 * PI).sqrt(),
            Self::Box { half_width, height } => {
                if a < *half_width {
                    *height
                } else {
                    0.0
                }
            }
            Self::SignStep => {
                if a < 1.0 {
                    1.0
                } else if a < 2.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Self::Tabulated(t) => t.eval(a),
        }
    }

    /// Points on λ > 0 where the function has kinks or jumps.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            Self::Box { half_width, .. } => vec![*half_width],
            Self::SignStep => vec![1.0, 2.0],
            Self::Tabulated(t) => t.lambda.iter().copied().filter(|&l| l > 0.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Closed-form ψ̂(t) where one is known.
    pub fn exact_transform(&self, t: f64) -> Option<f64> {
        let t = t.abs();
        let sinc = |a: f64| if t == 0.0 { a } else { (a * t).sin() / t };
        match self {
            Self::Zero => Some(0.0),
            Self::Cauchy => Some((-t).exp()),
            Self::Gaussian => Some((-0.5 * t * t).exp()),
            Self::Box { half_width, height } => Some(2.0 * height * sinc(*half_width)),
            Self::SignStep => Some(2.0 * (2.0 * sinc(1.0) - sinc(2.0))),
            Self::Tabulated(_) => None,
        }
    }

    pub fn transform(&self, t: f64, tol: f64) -> Quadrature<f64> {
        if *self == Self::Zero {
            return Quadrature {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
                converged: true,
            };
        }
        fourier_transform(|x| self.eval(x), &self.breaks(), t, tol)
    }
}

/// ψ̂(t) = ∫ e^{iλt} ψ(λ) dλ = 2∫_0^∞ cos(λt) ψ(λ) dλ for an even ψ.
pub fn fourier_transform<F: FnMut(f64) -> f64>(
    psi: F,
    breaks: &[f64],
    t: f64,
    tol: f64,
) -> Quadrature<f64> {
    cosine_transform(psi, t, breaks, tol)
}

/// Spectral density f and generator g with integrability exponents:
/// f ∈ L^p ∩ L¹, g ∈ L^q ∩ L¹.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub name: String,
    pub f: SpectralFunction,
    pub g: SpectralFunction,
    pub p: f64,
    pub q: f64,
}

impl SpectralPair {
    pub fn new(
        name: impl Into<String>,
        f: SpectralFunction,
        g: SpectralFunction,
        p: f64,
        q: f64,
    ) -> Result<Self> {
        let pair = Self {
            name: name.into(),
            f,
            g,
            p,
            q,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let inf = f64::INFINITY;
        match name {
            "cauchy-pair" => Self::new(
                name,
                SpectralFunction::Cauchy,
                SpectralFunction::Cauchy,
                inf,
                inf,
            ),
            "gaussian-pair" => Self::new(
                name,
                SpectralFunction::Gaussian,
                SpectralFunction::Gaussian,
                inf,
                inf,
            ),
            "sign-change-pair" => Self::new(
                name,
                SpectralFunction::Box {
                    half_width: 2.0,
                    height: 0.25,
                },
                SpectralFunction::SignStep,
                inf,
                inf,
            ),
            _ => Err(invalid(format!("unknown spectral pair `{name}`"))),
        }
    }

    /// Evenness and positivity on a probe grid, and 1/p + 1/q ≤ 1/2.
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0) || 1.0 / self.p + 1.0 / self.q > 0.5 {
            return Err(invalid(format!(
                "integrability exponents p = {}, q = {} need 1/p + 1/q <= 1/2",
                self.p, self.q
            )));
        }
        for k in 0..=400 {
            let x = 0.05 * k as f64;
            let (fp, fm) = (self.f.eval(x), self.f.eval(-x));
            if (fp - fm).abs() > 1e-12 || (self.g.eval(x) - self.g.eval(-x)).abs() > 1e-12 {
                return Err(invalid(format!("pair `{}` is not even at {x}", self.name)));
            }
            if fp < 0.0 {
                return Err(invalid(format!("spectral density negative at {x}")));
            }
        }
        Ok(())
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = self.f.breaks();
        b.extend(self.g.breaks());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// ∫_ℝ f^j g^j.
    pub fn power_integral(&self, j: u32, tol: f64) -> Quadrature<f64> {
        let h = |x: f64| (self.f.eval(x) * self.g.eval(x)).powi(j as i32);
        let mut pts = vec![0.0];
        pts.extend(self.breaks());
        let last = *pts.last().expect("non-empty");
        let head = if pts.len() > 1 {
            integrate_1d_breaks(h, &pts, tol * 0.25, DEFAULT_MAX_EVALS)
        } else {
            Quadrature {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
                converged: true,
            }
        };
        head.combine(integrate_semi_infinite(h, last, tol * 0.25))
            .scaled(2.0)
    }
}

/// ψ̂ at the lags k·h, k = 0..m−1.
#[derive(Debug, Clone)]
pub struct TransformTable {
    pub values: Vec<f64>,
    pub max_error: f64,
    pub converged: bool,
}

pub fn transform_table(psi: &SpectralFunction, h: f64, m: usize, tol: f64) -> TransformTable {
    let q: Vec<Quadrature<f64>> = (0..m)
        .into_par_iter()
        .map(|k| psi.transform(k as f64 * h, tol))
        .collect();
    TransformTable {
        values: q.iter().map(|r| r.value).collect(),
        max_error: q.iter().map(|r| r.error).fold(0.0, f64::max),
        converged: q.iter().all(|r| r.converged),
    }
}

/// Discretized B_T(ψ): the Toeplitz matrix [ψ̂(t_i − t_k)·h].
pub fn toeplitz_operator(table: &TransformTable, h: f64) -> Result<SymmetricMatrix<f64>> {
    let col: Vec<f64> = table.values.iter().map(|v| v * h).collect();
    Ok(SymmetricMatrix::toeplitz(&col)?.with_name("truncated Toeplitz operator"))
}

#[derive(Debug, Clone)]
pub struct ToeplitzReport {
    pub horizon: f64,
    pub m: usize,
    /// κ̃_j for j = 1..=jmax (κ̃₁ = 0).
    pub cumulants: Vec<f64>,
    /// κ̃_j/κ̃₂^{j/2}, the cumulants of the unit-variance functional.
    pub standardized: Vec<f64>,
    /// σ²(T) = κ̃₂.
    pub sigma2: f64,
    pub transform_error: f64,
    pub transforms_converged: bool,
}

impl ToeplitzReport {
    /// κ̌_j·T^{j/2−1}, which tends to the standardized constant of order j.
    pub fn scaled_standardized(&self, j: usize) -> f64 {
        self.standardized[j - 1] * self.horizon.powf(j as f64 / 2.0 - 1.0)
    }
}

fn check_grid(horizon: f64, m: usize) -> Result<f64> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon T must be positive"));
    }
    if m == 0 || m > MAX_GRID {
        return Err(Error::OutOfRange {
            what: "grid size",
            value: m.to_string(),
            range: "1..=3000",
        });
    }
    Ok(horizon / m as f64)
}

struct Operators {
    bf: SymmetricMatrix<f64>,
    bg: SymmetricMatrix<f64>,
    error: f64,
    converged: bool,
}

fn operators(pair: &SpectralPair, horizon: f64, m: usize) -> Result<Operators> {
    let h = check_grid(horizon, m)?;
    let tf = transform_table(&pair.f, h, m, TRANSFORM_TOL);
    let tg = if pair.g == pair.f {
        tf.clone()
    } else {
        transform_table(&pair.g, h, m, TRANSFORM_TOL)
    };
    Ok(Operators {
        bf: toeplitz_operator(&tf, h)?,
        bg: toeplitz_operator(&tg, h)?,
        error: tf.max_error.max(tg.max_error),
        converged: tf.converged && tg.converged,
    })
}

/// κ̃_j = T^{−j/2}·2^{j−1}(j−1)!·Tr[(B_T(f)B_T(g))^j], j ≥ 2, on a uniform
/// midpoint grid of [0, T].
pub fn toeplitz_cumulants(
    pair: &SpectralPair,
    horizon: f64,
    m: usize,
    jmax: usize,
) -> Result<ToeplitzReport> {
    if !(2..=8).contains(&jmax) {
        return Err(Error::OutOfRange {
            what: "jmax",
            value: jmax.to_string(),
            range: "2..=8",
        });
    }
    let ops = operators(pair, horizon, m)?;
    let prod = ops.bf.to_dense().matmul(&ops.bg.to_dense())?;
    let traces = trace_powers(&prod, jmax)?;
    let mut cumulants = vec![0.0];
    for (k, &tr) in traces.iter().enumerate().skip(1) {
        let j = k as u32 + 1;
        cumulants
            .push(horizon.powf(-(j as f64) / 2.0) * second_chaos_cumulant_factor(j)? as f64 * tr);
    }
    let sigma2 = cumulants[1];
    let standardized = cumulants
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if sigma2 > 0.0 {
                c / sigma2.powf((k + 1) as f64 / 2.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ToeplitzReport {
        horizon,
        m,
        cumulants,
        standardized,
        sigma2,
        transform_error: ops.error,
        transforms_converged: ops.converged,
    })
}

#[derive(Debug, Clone)]
pub struct AsymptoticConstants {
    /// (j, limit of κ̌_j·T^{j/2−1}) for j = 2..=jmax.
    pub standardized: Vec<(usize, f64)>,
    /// (j, limit of κ̃_j·T^{j/2−1}) = 2^{j−1}(j−1)!(2π)^{2j−1}∫f^j g^j.
    pub raw: Vec<(usize, f64)>,
    /// ∫f^j g^j for j = 2..=jmax with their quadrature results.
    pub integrals: Vec<(usize, Quadrature<f64>)>,
    /// 16π³∫f²g².
    pub sigma2_inf: f64,
    /// √(2/3)·∫f³g³/(∫f²g²)^{3/2}, multiplying (1 − z²)e^{−z²/2}.
    pub limit_constant: f64,
    /// κ̌₃√T/(6√(2π)) in the same normalization, i.e. (√2/3)·∫f³g³/(∫f²g²)^{3/2}.
    pub limit_constant_from_cumulants: f64,
    pub converged: bool,
}

impl AsymptoticConstants {
    /// Predicted limit of √T(P(Q̌_T ≤ z) − Φ(z)) using the third cumulant.
    pub fn limit_curve(&self, z: f64) -> f64 {
        self.limit_constant_from_cumulants * (1.0 - z * z) * (-0.5 * z * z).exp()
    }
}

pub fn asymptotic_constants(pair: &SpectralPair, jmax: usize) -> Result<AsymptoticConstants> {
    let jmax = jmax.max(3);
    if jmax > 8 {
        return Err(Error::OutOfRange {
            what: "jmax",
            value: jmax.to_string(),
            range: "2..=8",
        });
    }
    let integrals: Vec<(usize, Quadrature<f64>)> = (2..=jmax)
        .map(|j| {
            // Relative target: scale the absolute tolerance by a coarse pass.
            let coarse = pair.power_integral(j as u32, 1e-6).value.abs();
            (
                j,
                pair.power_integral(j as u32, (1e-12 * coarse).max(1e-300)),
            )
        })
        .collect();
    let i2 = integrals[0].1.value;
    let i3 = integrals[1].1.value;
    if !(i2 > 0.0) {
        return Err(invalid(
            "int f^2 g^2 vanishes; the functional is degenerate",
        ));
    }
    let sigma2_inf = 16.0 * PI.powi(3) * i2;
    let mut raw = Vec::new();
    let mut standardized = Vec::new();
    for &(j, ref q) in &integrals {
        let c = second_chaos_cumulant_factor(j as u32)? as f64 * (2.0 * PI).powi(2 * j as i32 - 1);
        raw.push((j, c * q.value));
        standardized.push((j, c * q.value / sigma2_inf.powf(j as f64 / 2.0)));
    }
    let ratio = i3 / i2.powf(1.5);
    Ok(AsymptoticConstants {
        standardized,
        raw,
        sigma2_inf,
        limit_constant: (2.0f64 / 3.0).sqrt() * ratio,
        limit_constant_from_cumulants: 2f64.sqrt() / 3.0 * ratio,
        converged: integrals.iter().all(|(_, q)| q.converged),
        integrals,
    })
}

/// How the embedded quadratic form is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingNormalization {
    /// (Q_T − E Q_T)/√T.
    Tilde,
    /// (Q_T − E Q_T)/(√T σ(T)), unit variance.
    Check,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub spectrum: Chaos2Spectrum<f64>,
    /// Smallest covariance eigenvalue when the Cholesky factorization failed.
    pub repaired_min_eigenvalue: Option<f64>,
    pub transform_error: f64,
    pub transforms_converged: bool,
}

/// Second-chaos spectrum of the discretized Q_T = h²Σ ĝ(t_i − t_k)X_iX_k,
/// Cov(X) = [f̂(t_i − t_k)]: the eigenvalues of Sᵀ(h²G)S with SSᵀ = Cov.
pub fn chaos2_embedding(
    pair: &SpectralPair,
    horizon: f64,
    m: usize,
    normalization: EmbeddingNormalization,
) -> Result<Embedding> {
    let h = check_grid(horizon, m)?;
    let ops = operators(pair, horizon, m)?;
    // Covariance r(t) = f̂(t) = B_f/h; G-weighted form h²ĝ = h·B_g.
    let mut cov = ops.bf.clone();
    cov.scale(1.0 / h);
    let cov = cov.with_name("process covariance");
    let mut a = ops.bg.to_dense();
    a.scale(h);
    let (root, repaired) = covariance_root(&cov)?;
    let form = root.transpose().matmul(&a.matmul(&root)?)?;
    let sym = SymmetricMatrix::from_dense(&form, 1e-9)?.with_name("embedded quadratic form");
    let spectrum = Chaos2Spectrum::from_matrix(&sym, h)?;
    let spectrum = match normalization {
        EmbeddingNormalization::Tilde => spectrum.scaled(1.0 / horizon.sqrt()),
        EmbeddingNormalization::Check => spectrum.standardized()?,
    };
    Ok(Embedding {
        spectrum,
        repaired_min_eigenvalue: repaired,
        transform_error: ops.error,
        transforms_converged: ops.converged,
    })
}

/// A factor S with S Sᵀ = `cov`: Cholesky when it succeeds, otherwise
/// V·diag(√max(μ, 0)) after clipping eigenvalues in [−1e−8·max, 0).
pub fn covariance_root(cov: &SymmetricMatrix<f64>) -> Result<(DenseMatrix<f64>, Option<f64>)> {
    let dense = cov.to_dense();
    if let Some(l) = dense.cholesky() {
        return Ok((l, None));
    }
    let eig = eigen_symmetric(cov, true)?;
    let top = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = -PSD_FLOOR * top;
    if min < floor {
        return Err(Error::Indefinite {
            name: cov.name().to_string(),
            min,
            floor,
        });
    }
    let vt = eig.vectors.expect("vectors requested");
    let n = cov.dim();
    let root = DenseMatrix::from_fn(n, n, |i, k| vt.get(k, i) * eig.values[k].max(0.0).sqrt());
    Ok((root, Some(min)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        assert_eq!(SpectralFunction::Zero.transform(1.0, 1e-9).value, 0.0);
        for t in [0.0f64, 0.3, 1.0, 4.0, 17.5] {
            let q = SpectralFunction::Cauchy.transform(t, 1e-10);
            assert!((q.value - (-t).exp()).abs() < 1e-9, "t={t}: {}", q.value);
            let g = SpectralFunction::Gaussian.transform(t, 1e-10);
            assert!((g.value - (-0.5 * t * t).exp()).abs() < 1e-9);
            let s = SpectralFunction::SignStep.transform(t, 1e-10);
            assert!(
                (s.value - SpectralFunction::SignStep.exact_transform(t).unwrap()).abs() < 1e-9
            );
        }
        let b = SpectralFunction::Box {
            half_width: 2.0,
            height: 0.25,
        };
        assert!((b.transform(0.0, 1e-10).value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_parse_and_eval() {
        let csv = "lambda,value\n0,1\n1,0.5\n2,0.25\n";
        let t = Tabulated::from_csv(csv.as_bytes(), Some(2.0)).unwrap();
        assert_eq!(t.eval(0.5), 0.75);
        assert_eq!(t.eval(-1.5), 0.375);
        assert_eq!(t.eval(4.0), 0.0625);
        let no_tail = Tabulated::from_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(no_tail.eval(3.0), 0.0);
        assert!(Tabulated::from_csv("x,y\n0,1\n1,2\n".as_bytes(), None).is_err());
        assert!(Tabulated::from_csv("lambda,value\n0,1\n0,2\n".as_bytes(), None).is_err());
        assert!(Tabulated::from_csv("lambda,value\n-1,1\n0,2\n".as_bytes(), None).is_err());
        assert!(Tabulated::from_csv("lambda,value\n0,1\n1,abc\n".as_bytes(), None).is_err());
    }

    #[test]
    fn builtins_validate() {
        for (name, _) in BUILTIN_PAIRS {
            SpectralPair::builtin(name).unwrap();
        }
        assert!(SpectralPair::builtin("nope").is_err());
        let bad = SpectralPair::new(
            "neg",
            SpectralFunction::SignStep,
            SpectralFunction::Cauchy,
            f64::INFINITY,
            f64::INFINITY,
        );
        assert!(bad.is_err());
        let lrd = SpectralPair::new(
            "lrd",
            SpectralFunction::Cauchy,
            SpectralFunction::Cauchy,
            2.0,
            3.0,
        );
        assert!(lrd.is_err());
    }

    #[test]
    fn cauchy_constants() {
        let c = asymptotic_constants(&SpectralPair::builtin("cauchy-pair").unwrap(), 4).unwrap();
        assert!((c.sigma2_inf - 5.0).abs() < 1e-9, "{}", c.sigma2_inf);
        // ∫f⁶/(∫f⁴)^{3/2} = (63/(256π⁵))/(5/(16π³))^{3/2}.
        let ratio = 63.0 / (256.0 * PI.powi(5)) / (5.0 / (16.0 * PI.powi(3))).powf(1.5);
        assert!((c.limit_constant - (2.0f64 / 3.0).sqrt() * ratio).abs() < 1e-9);
        assert!((c.limit_constant - 0.6489).abs() < 1e-3);
        assert!((c.standardized[0].1 - 1.0).abs() < 1e-9);
        assert!(c.converged);
    }

    #[test]
    fn sign_change_constant_vanishes() {
        let c =
            asymptotic_constants(&SpectralPair::builtin("sign-change-pair").unwrap(), 3).unwrap();
        assert!(c.limit_constant.abs() < 1e-12);
        assert!((c.integrals[0].1.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_generator_gives_zero_cumulants() {
        let pair = SpectralPair::new(
            "zero-g",
            SpectralFunction::Cauchy,
            SpectralFunction::Zero,
            f64::INFINITY,
            f64::INFINITY,
        )
        .unwrap();
        let r = toeplitz_cumulants(&pair, 10.0, 50, 4).unwrap();
        assert!(r.cumulants.iter().all(|&c| c == 0.0));
        let e = chaos2_embedding(&pair, 10.0, 50, EmbeddingNormalization::Tilde).unwrap();
        assert!(e.spectrum.eigenvalues().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trace_and_embedding_routes_agree() {
        let pair = SpectralPair::builtin("cauchy-pair").unwrap();
        let r = toeplitz_cumulants(&pair, 20.0, 200, 4).unwrap();
        assert_eq!(r.cumulants[0], 0.0);
        let e = chaos2_embedding(&pair, 20.0, 200, EmbeddingNormalization::Tilde).unwrap();
        for j in 2..=4 {
            let a = e.spectrum.cumulant(j as u32).unwrap();
            assert!((a - r.cumulants[j - 1]).abs() < 1e-8 * a.abs(), "j={j}");
        }
        let chk = chaos2_embedding(&pair, 20.0, 200, EmbeddingNormalization::Check).unwrap();
        assert!((chk.spectrum.cumulant(2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_covariance_needs_repair() {
        let pair = SpectralPair::builtin("gaussian-pair").unwrap();
        let r = toeplitz_cumulants(&pair, 10.0, 100, 3).unwrap();
        let e = chaos2_embedding(&pair, 10.0, 100, EmbeddingNormalization::Tilde).unwrap();
        let k2 = e.spectrum.cumulant(2).unwrap();
        assert!((k2 - r.cumulants[1]).abs() < 1e-6 * k2);
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let m = SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 }).unwrap();
        assert!(matches!(covariance_root(&m), Err(Error::Indefinite { .. })));
    }
}
