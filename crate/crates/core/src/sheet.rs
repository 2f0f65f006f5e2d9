//! Quadratic functionals of the Brownian sheet that explode as ε → 0. The
//! one-dimensional kernel is
//! f_ε(x, y) = (4 log 1/ε)^{−1/2}[(x ∨ y ∨ ε)^{−1} − 1] on [0, 1]²,
//! and the d-dimensional kernel is its d-fold tensor power, so every
//! cumulant factorizes.

use crate::chaos2::{normal_approx_report, Chaos2Spectrum, NormalApproxReport};
use crate::chaos_tensor::GridTensor;
use crate::combinatorics::second_chaos_cumulant_factor;
use crate::error::{invalid, Error, Result};
use crate::mc_verify::{dkw_radius, EmpiricalStudy};
use crate::numerics::{RandomSource, SymmetricMatrix};

/// ε values e^{−k} of the standard ladder.
pub const EPS_LADDER_EXPONENTS: [u32; 5] = [3, 4, 5, 6, 7];
/// Grid refinement ladder.
pub const M_LADDER: [usize; 3] = [200, 400, 800];
/// ε at or above which the normalization is considered singular.
pub const EPS_MAX: f64 = 0.9;
pub const MAX_DIMENSION: u32 = 4;
/// Largest Kronecker spectrum built explicitly.
pub const MAX_KRONECKER_LEN: usize = 4_000_000;

pub fn eps_ladder() -> Vec<f64> {
    EPS_LADDER_EXPONENTS
        .iter()
        .map(|&k| (-(k as f64)).exp())
        .collect()
}

/// How the 1-d kernel operator is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// Midpoint values on a uniform grid of [0, 1].
    Uniform,
    /// Piecewise-constant Galerkin projection on one cell [0, ε] followed by
    /// m − 1 geometrically graded cells on [ε, 1], with exact cell integrals.
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetModel {
    pub d: u32,
    pub eps: f64,
    pub m: usize,
    pub discretization: Discretization,
}

impl SheetModel {
    pub fn new(d: u32, eps: f64, m: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::OutOfRange {
                what: "sheet dimension",
                value: d.to_string(),
                range: "1..=4",
            });
        }
        if !(eps > 0.0 && eps < EPS_MAX) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: eps.to_string(),
                range: "(0, 0.9)",
            });
        }
        if m < 2 {
            return Err(invalid("grid size must be at least 2"));
        }
        Ok(Self {
            d,
            eps,
            m,
            discretization: Discretization::Graded,
        })
    }

    pub fn with_discretization(mut self, discretization: Discretization) -> Self {
        self.discretization = discretization;
        self
    }

    pub fn log_inv_eps(&self) -> f64 {
        -self.eps.ln()
    }

    /// (4 log 1/ε)^{−1/2}.
    pub fn normalization(&self) -> f64 {
        (4.0 * self.log_inv_eps()).sqrt().recip()
    }

    /// Reference rate (log 1/ε)^{−d/2}.
    pub fn reference_rate(&self) -> f64 {
        self.log_inv_eps().powf(-(self.d as f64) / 2.0)
    }

    pub fn spectrum_1d(&self) -> Result<Chaos2Spectrum<f64>> {
        match self.discretization {
            Discretization::Uniform => {
                Chaos2Spectrum::from_kernel(&sheet_kernel_1d(self.eps, self.m)?)
            }
            Discretization::Graded => graded_spectrum(self.eps, self.m),
        }
    }

    /// Spectrum of the d-dimensional kernel, when it fits the budget.
    pub fn spectrum(&self) -> Result<Chaos2Spectrum<f64>> {
        let one = self.spectrum_1d()?;
        let len = one
            .len()
            .checked_pow(self.d)
            .filter(|&l| l <= MAX_KRONECKER_LEN);
        if len.is_none() {
            return Err(Error::Budget(format!(
                "Kronecker spectrum of {}^{} values",
                one.len(),
                self.d
            )));
        }
        let mut s = one.clone();
        for _ in 1..self.d {
            s = s.kronecker(&one)?;
        }
        Ok(s)
    }
}

/// f_ε(x, y) without validation of ε.
pub fn sheet_kernel_value(eps: f64, x: f64, y: f64) -> f64 {
    let norm = (4.0 * (-eps.ln())).sqrt().recip();
    norm * (1.0 / x.max(y).max(eps) - 1.0)
}

/// f_ε at the midpoints of a uniform m-grid on [0, 1].
pub fn sheet_kernel_1d(eps: f64, m: usize) -> Result<GridTensor<f64>> {
    SheetModel::new(1, eps, m.max(2))?;
    GridTensor::from_point_fn(2, m, 1.0, |p| sheet_kernel_value(eps, p[0], p[1]))
}

/// Cell edges: [0, ε] then m − 1 geometric cells up to 1.
fn graded_edges(eps: f64, m: usize) -> Vec<f64> {
    let l = -eps.ln();
    let mut e = vec![0.0];
    for k in 0..m {
        e.push((-l * (1.0 - k as f64 / (m - 1) as f64)).exp());
    }
    *e.last_mut().expect("non-empty") = 1.0;
    e
}

/// Galerkin matrix of f_ε in the orthonormal cell-indicator basis.
pub fn graded_operator(eps: f64, m: usize) -> Result<SymmetricMatrix<f64>> {
    SheetModel::new(1, eps, m)?;
    let edges = graded_edges(eps, m);
    let w: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
    // ∫_cell (1/x − 1) dx for cells above ε; the plateau never sits above
    // another cell.
    let upper: Vec<f64> = edges
        .windows(2)
        .enumerate()
        .map(|(i, e)| {
            if i == 0 {
                (1.0 / eps - 1.0) * eps
            } else {
                (e[1] / e[0]).ln() - (e[1] - e[0])
            }
        })
        .collect();
    let diag: Vec<f64> = edges
        .windows(2)
        .enumerate()
        .map(|(i, e)| {
            let (a, b) = (e[0], e[1]);
            let w = b - a;
            if i == 0 {
                (1.0 / eps - 1.0) * eps * eps
            } else {
                2.0 * w - 2.0 * a * (b / a).ln() - w * w
            }
        })
        .collect();
    let norm = (4.0 * (-eps.ln())).sqrt().recip();
    Ok(SymmetricMatrix::from_fn(m, |i, j| {
        // from_fn fills the lower triangle, i ≥ j.
        let v = if i == j { diag[i] } else { upper[i] * w[j] };
        norm * v / (w[i] * w[j]).sqrt()
    })?
    .with_name("graded sheet kernel"))
}

pub fn graded_spectrum(eps: f64, m: usize) -> Result<Chaos2Spectrum<f64>> {
    Chaos2Spectrum::from_matrix(&graded_operator(eps, m)?, 1.0 / m as f64)
}

/// Exact κ₂(1, ε) = 2‖f_ε‖² = (log 1/ε − 1 + ε)/log 1/ε.
pub fn exact_kappa2(eps: f64) -> f64 {
    let l = -eps.ln();
    (l - 1.0 + eps) / l
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheetCumulants {
    /// κ_j(1, ε), j = 1..=jmax.
    pub one_dimensional: Vec<f64>,
    /// κ_j(d, ε) from the product identity.
    pub lifted: Vec<f64>,
    /// κ_j(d, ε) from the explicit Kronecker spectrum (d = 2 only).
    pub kronecker: Option<Vec<f64>>,
}

impl SheetCumulants {
    pub fn max_route_discrepancy(&self) -> Option<f64> {
        let k = self.kronecker.as_ref()?;
        Some(
            self.lifted
                .iter()
                .zip(k)
                .skip(1)
                .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max),
        )
    }
}

/// (2^{j−1}(j−1)!)^{−1}κ_j(d) = [(2^{j−1}(j−1)!)^{−1}κ_j(1)]^d.
pub fn lift_cumulant(kappa_1d: f64, j: u32, d: u32) -> Result<f64> {
    let c = second_chaos_cumulant_factor(j)? as f64;
    Ok(c * (kappa_1d / c).powi(d as i32))
}

pub fn sheet_cumulants(model: &SheetModel, jmax: u32) -> Result<SheetCumulants> {
    if !(1..=8).contains(&jmax) {
        return Err(Error::OutOfRange {
            what: "jmax",
            value: jmax.to_string(),
            range: "1..=8",
        });
    }
    let one = model.spectrum_1d()?;
    let one_dimensional = one.cumulants(jmax)?;
    let lifted = one_dimensional
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if k == 0 {
                Ok(0.0)
            } else {
                lift_cumulant(c, k as u32 + 1, model.d)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let kronecker = if model.d == 2 {
        Some(one.kronecker(&one)?.cumulants(jmax)?)
    } else {
        None
    };
    Ok(SheetCumulants {
        one_dimensional,
        lifted,
        kronecker,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConvergence {
    pub rows: Vec<ConvergenceRow>,
    /// Richardson extrapolation of κ_2..κ_jmax from the last two rows,
    /// assuming second-order convergence.
    pub extrapolated: Vec<f64>,
    /// Observed order log₂((κ_1 − κ_2)/(κ_2 − κ_3)) from the last three rows.
    pub observed_order: Vec<Option<f64>>,
}

/// Cumulants κ_2..κ_jmax of the 1-d kernel along a grid ladder.
pub fn grid_convergence(
    eps: f64,
    ms: &[usize],
    jmax: u32,
    discretization: Discretization,
) -> Result<GridConvergence> {
    if ms.len() < 2 {
        return Err(invalid("grid ladder needs at least two sizes"));
    }
    let rows = ms
        .iter()
        .map(|&m| {
            let s = SheetModel::new(1, eps, m)?
                .with_discretization(discretization)
                .spectrum_1d()?;
            Ok(ConvergenceRow {
                m,
                kappa: (2..=jmax).map(|j| s.cumulant(j)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    let (a, b) = (&rows[n - 2].kappa, &rows[n - 1].kappa);
    let extrapolated = a.iter().zip(b).map(|(x, y)| y + (y - x) / 3.0).collect();
    let observed_order = (0..a.len())
        .map(|k| {
            if n < 3 {
                return None;
            }
            let (x, y, z) = (rows[n - 3].kappa[k], a[k], b[k]);
            let r = (x - y) / (y - z);
            (r > 0.0 && r.is_finite()).then(|| r.log2())
        })
        .collect();
    Ok(GridConvergence {
        rows,
        extrapolated,
        observed_order,
    })
}

#[derive(Debug, Clone)]
pub struct SheetRateReport {
    pub model: SheetModel,
    pub n: usize,
    pub normal: NormalApproxReport<f64>,
    pub d_kol: f64,
    pub dkw_radius: f64,
    pub reference_rate: f64,
    /// d̂_Kol/φ.
    pub ratio_to_phi: f64,
    /// d̂_Kol·(log 1/ε)^{d/2}.
    pub scaled_distance: f64,
    /// DKW radius above φ/3: the sample cannot resolve the bound.
    pub underpowered: bool,
}

impl SheetRateReport {
    pub fn within_upper_bound(&self) -> bool {
        self.d_kol <= self.normal.phi + self.dkw_radius
    }
}

pub fn sheet_rate_study(
    model: &SheetModel,
    src: &RandomSource,
    n: usize,
) -> Result<(SheetRateReport, EmpiricalStudy)> {
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    let spectrum = model.spectrum()?;
    let normal = normal_approx_report(&spectrum);
    let study = EmpiricalStudy::new(spectrum.sample(src, n))?;
    let radius = dkw_radius(n, 0.01)?;
    let d_kol = study.d_kol();
    let report = SheetRateReport {
        model: *model,
        n,
        d_kol,
        dkw_radius: radius,
        reference_rate: model.reference_rate(),
        ratio_to_phi: d_kol / normal.phi,
        scaled_distance: d_kol / model.reference_rate(),
        underpowered: radius > normal.phi / 3.0,
        normal,
    };
    Ok((report, study))
}

pub fn sheet_rate_report(
    model: &SheetModel,
    src: &RandomSource,
    n: usize,
) -> Result<SheetRateReport> {
    Ok(sheet_rate_study(model, src, n)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let eps = (-3.0f64).exp();
        let plateau = sheet_kernel_value(eps, 0.01, 0.02);
        assert!((plateau - (1.0 / eps - 1.0) / 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(sheet_kernel_value(eps, 1.0, 0.3), 0.0);
        assert!(sheet_kernel_1d(0.95, 10).is_err());
        assert!(sheet_kernel_1d(0.0, 10).is_err());
        let k = sheet_kernel_1d(eps, 20).unwrap();
        assert!(k.as_array().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn graded_matches_exact_kappa2() {
        for k in [3.0f64, 5.0, 7.0] {
            let eps = (-k).exp();
            let s = graded_spectrum(eps, 400).unwrap();
            let k2 = s.cumulant(2).unwrap();
            assert!(
                (k2 - exact_kappa2(eps)).abs() < 1e-4 * exact_kappa2(eps),
                "k={k}: {k2}"
            );
        }
    }

    #[test]
    fn graded_trace_matches_frobenius() {
        // Σλ² must equal the squared Frobenius norm of the Galerkin matrix.
        let a = graded_operator((-4.0f64).exp(), 60).unwrap();
        let fro: f64 = (0..60)
            .flat_map(|i| (0..60).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        let s = Chaos2Spectrum::from_matrix(&a, 1.0).unwrap();
        assert!((s.power_sum(2) - fro).abs() < 1e-12 * fro);
    }

    #[test]
    fn kappa2_increases_along_ladder() {
        let v: Vec<f64> = eps_ladder()
            .iter()
            .map(|&e| graded_spectrum(e, 200).unwrap().cumulant(2).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
        assert!(v.iter().all(|&k| k < 1.0));
    }

    #[test]
    fn lift_is_identity_at_d1() {
        let m = SheetModel::new(1, (-4.0f64).exp(), 100).unwrap();
        let c = sheet_cumulants(&m, 6).unwrap();
        assert_eq!(c.lifted, c.one_dimensional);
        assert!(c.kronecker.is_none());
    }

    #[test]
    fn product_identity_d2() {
        let m = SheetModel::new(2, (-4.0f64).exp(), 60).unwrap();
        let c = sheet_cumulants(&m, 6).unwrap();
        assert!(c.max_route_discrepancy().unwrap() < 1e-10);
    }

    #[test]
    fn convergence_ladder_is_second_order() {
        let g =
            grid_convergence((-5.0f64).exp(), &[50, 100, 200], 3, Discretization::Graded).unwrap();
        for o in g.observed_order.iter().flatten() {
            assert!((o - 2.0).abs() < 0.3, "{o}");
        }
    }

    #[test]
    fn rejects_bad_models() {
        assert!(SheetModel::new(0, 0.1, 10).is_err());
        assert!(SheetModel::new(5, 0.1, 10).is_err());
        let m = SheetModel::new(1, 0.1, 10).unwrap();
        assert!(sheet_rate_report(&m, &RandomSource::new(1, 0), 0).is_err());
    }
}
