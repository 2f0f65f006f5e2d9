//! Discretized kernels of order q on a uniform midpoint grid: contractions,
//! symmetrization, multiplication-formula coefficients, and the variance
//! quantity φ of a q-th chaos element with its skewness limit ρ.
//!
//! Values are stored raw; the mesh h is metadata and every inner product
//! over k indices carries the weight h^k.

use crate::combinatorics::{binomial, factorial, product};
use crate::error::{Error, Result};
use crate::real::Real;

/// Largest number of entries any array produced here may hold.
pub const MAX_ENTRIES: usize = 10_000_000;
/// Largest order accepted by [`symmetrize`].
pub const MAX_SYMMETRIZE_ORDER: usize = 6;
/// Largest order accepted for [`GridTensor`].
pub const MAX_KERNEL_ORDER: usize = 4;

/// Dense array of order k over an m-point grid on an interval of length L.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorArray<T> {
    order: usize,
    m: usize,
    length: T,
    values: Vec<T>,
}

fn checked_size(order: usize, m: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..order {
        n = n
            .checked_mul(m)
            .filter(|&n| n <= MAX_ENTRIES)
            .ok_or_else(|| {
                Error::Budget(format!("m^k = {m}^{order} exceeds {MAX_ENTRIES} entries"))
            })?;
    }
    Ok(n)
}

impl<T: Real> TensorArray<T> {
    pub fn from_values(order: usize, m: usize, length: T, values: Vec<T>) -> Result<Self> {
        if m == 0 || !(length > T::zero()) {
            return Err(Error::InvalidArgument("grid needs m >= 1 and L > 0".into()));
        }
        let n = checked_size(order, m)?;
        if values.len() != n {
            return Err(Error::Shape(format!(
                "{} values for {m}^{order} entries",
                values.len()
            )));
        }
        Ok(Self {
            order,
            m,
            length,
            values,
        })
    }

    pub fn zeros(order: usize, m: usize, length: T) -> Result<Self> {
        let n = checked_size(order, m)?;
        Self::from_values(order, m, length, vec![T::zero(); n])
    }

    /// Fills entries from their multi-index (row-major, last index fastest).
    pub fn from_index_fn(
        order: usize,
        m: usize,
        length: T,
        mut f: impl FnMut(&[usize]) -> T,
    ) -> Result<Self> {
        let n = checked_size(order, m)?;
        let mut idx = vec![0usize; order];
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f(&idx));
            increment(&mut idx, m);
        }
        Self::from_values(order, m, length, values)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn mesh(&self) -> T {
        self.length / T::from_usize_lossy(self.m)
    }

    /// Midpoint of grid cell `i`.
    pub fn node(&self, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.mesh()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.values[linear_index(idx, self.m)]
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * c).collect(),
            ..self.clone()
        }
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.m != other.m || (self.length - other.length).abs() > T::epsilon() * self.length {
            return Err(Error::Shape(format!(
                "grid mismatch: m {} vs {}, L {} vs {}",
                self.m, other.m, self.length, other.length
            )));
        }
        Ok(())
    }

    /// ⟨f, g⟩ with weight h^k.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        if self.order != other.order {
            return Err(Error::Shape(format!(
                "orders {} and {} differ",
                self.order, other.order
            )));
        }
        let raw: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum();
        Ok(raw * self.mesh().powi(self.order as i32))
    }

    pub fn norm_squared(&self) -> T {
        self.inner(self).expect("same grid")
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Largest deviation between an entry and any transposition of its
    /// indices.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        let mut idx = vec![0usize; self.order];
        let mut swapped = vec![0usize; self.order];
        for &v in &self.values {
            for a in 0..self.order {
                for b in (a + 1)..self.order {
                    swapped.copy_from_slice(&idx);
                    swapped.swap(a, b);
                    worst = worst.max((v - self.get(&swapped)).abs());
                }
            }
            increment(&mut idx, self.m);
        }
        worst
    }
}

fn increment(idx: &mut [usize], m: usize) {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < m {
            return;
        }
        idx[d] = 0;
    }
}

fn linear_index(idx: &[usize], m: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * m + i)
}

/// Symmetric kernel of order q (an element of the q-th symmetric tensor
/// power), validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor<T> {
    array: TensorArray<T>,
}

impl<T: Real> GridTensor<T> {
    /// Accepts `array` if its symmetry defect is within `tol` times its
    /// largest entry.
    pub fn new(array: TensorArray<T>, tol: T) -> Result<Self> {
        if array.order == 0 || array.order > MAX_KERNEL_ORDER {
            return Err(Error::OutOfRange {
                what: "kernel order",
                value: array.order.to_string(),
                range: "1..=4",
            });
        }
        let scale = array.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let defect = array.symmetry_defect();
        if defect > tol * scale.max(T::min_positive_value()) {
            return Err(Error::InvalidArgument(format!(
                "kernel not symmetric: defect {defect}"
            )));
        }
        Ok(Self { array })
    }

    /// Evaluates a symmetric function at the grid midpoints.
    pub fn from_point_fn(order: usize, m: usize, length: T, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let h = length / T::from_usize_lossy(m);
        let mut pts = vec![T::zero(); order];
        let array = TensorArray::from_index_fn(order, m, length, |idx| {
            for (p, &i) in pts.iter_mut().zip(idx) {
                *p = (T::from_usize_lossy(i) + T::lit(0.5)) * h;
            }
            f(&pts)
        })?;
        Self::new(array, T::lit(1e-12))
    }

    pub fn zeros(order: usize, m: usize, length: T) -> Result<Self> {
        Self::new(TensorArray::zeros(order, m, length)?, T::zero())
    }

    pub fn as_array(&self) -> &TensorArray<T> {
        &self.array
    }

    pub fn into_array(self) -> TensorArray<T> {
        self.array
    }

    pub fn order(&self) -> usize {
        self.array.order
    }

    pub fn mesh(&self) -> T {
        self.array.mesh()
    }

    pub fn grid_size(&self) -> usize {
        self.array.m
    }

    pub fn norm_squared(&self) -> T {
        self.array.norm_squared()
    }
}

/// f ⊗_r g: sums the last r indices of f against the last r indices of g
/// with weight h^r. r = 0 is the tensor product, r = p = q the scalar
/// ⟨f, g⟩ (returned as an order-0 array).
pub fn contract<T: Real>(
    f: &TensorArray<T>,
    g: &TensorArray<T>,
    r: usize,
) -> Result<TensorArray<T>> {
    f.same_grid(g)?;
    if r > f.order.min(g.order) {
        return Err(Error::Shape(format!(
            "contraction index {r} exceeds orders {} and {}",
            f.order, g.order
        )));
    }
    let m = f.m;
    let inner = checked_size(r, m)?;
    let rows_f = checked_size(f.order - r, m)?;
    let rows_g = checked_size(g.order - r, m)?;
    let out_order = f.order + g.order - 2 * r;
    checked_size(out_order, m)?;
    let weight = f.mesh().powi(r as i32);
    let mut values = Vec::with_capacity(rows_f * rows_g);
    for i in 0..rows_f {
        let fi = &f.values[i * inner..(i + 1) * inner];
        for j in 0..rows_g {
            let gj = &g.values[j * inner..(j + 1) * inner];
            let s: T = fi.iter().zip(gj).map(|(&a, &b)| a * b).sum();
            values.push(s * weight);
        }
    }
    TensorArray::from_values(out_order, m, f.length, values)
}

/// ‖f ⊗_r f‖² without materializing the contraction, via the Gram matrix of
/// the smaller unfolding: ‖M Mᵀ‖_F = ‖Mᵀ M‖_F.
pub fn self_contraction_norm_squared<T: Real>(f: &TensorArray<T>, r: usize) -> Result<T> {
    if r > f.order {
        return Err(Error::Shape(format!(
            "contraction index {r} exceeds order {}",
            f.order
        )));
    }
    let m = f.m;
    let cols = checked_size(r, m)?;
    let rows = checked_size(f.order - r, m)?;
    let mut acc = T::zero();
    if rows <= cols {
        // M Mᵀ, rows × rows.
        for i in 0..rows {
            let fi = &f.values[i * cols..(i + 1) * cols];
            for j in 0..rows {
                let fj = &f.values[j * cols..(j + 1) * cols];
                let s: T = fi.iter().zip(fj).map(|(&a, &b)| a * b).sum();
                acc = acc + s * s;
            }
        }
    } else {
        // Mᵀ M, cols × cols.
        let mut gram = vec![T::zero(); cols * cols];
        for i in 0..rows {
            let fi = &f.values[i * cols..(i + 1) * cols];
            for a in 0..cols {
                let va = fi[a];
                if va == T::zero() {
                    continue;
                }
                let row = &mut gram[a * cols..(a + 1) * cols];
                for (g, &vb) in row.iter_mut().zip(fi) {
                    *g = *g + va * vb;
                }
            }
        }
        acc = gram.iter().map(|&v| v * v).sum();
    }
    Ok(acc * f.mesh().powi(2 * f.order as i32))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    // Heap's algorithm.
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = vec![perm.clone()];
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Average of `t` over all k! permutations of its indices.
pub fn symmetrize<T: Real>(t: &TensorArray<T>) -> Result<TensorArray<T>> {
    let k = t.order;
    if k > MAX_SYMMETRIZE_ORDER {
        return Err(Error::OutOfRange {
            what: "symmetrization order",
            value: k.to_string(),
            range: "0..=6",
        });
    }
    if k <= 1 {
        return Ok(t.clone());
    }
    let m = t.m;
    let strides: Vec<usize> = (0..k).map(|d| m.pow((k - 1 - d) as u32)).collect();
    let perms = permutations(k);
    let inv = T::one() / T::from_usize_lossy(perms.len());
    let mut out = vec![T::zero(); t.values.len()];
    let mut idx = vec![0usize; k];
    let mut orbit = Vec::with_capacity(perms.len());
    for _ in 0..t.values.len() {
        // Each orbit is handled once, from its non-decreasing representative,
        // and every member receives the same value. An orbit that is already
        // constant keeps its value bit for bit, so the map is idempotent.
        if idx.windows(2).all(|w| w[0] <= w[1]) {
            orbit.clear();
            orbit.extend(
                perms
                    .iter()
                    .map(|p| (0..k).map(|d| idx[p[d]] * strides[d]).sum::<usize>()),
            );
            let first = t.values[orbit[0]];
            let v = if orbit.iter().all(|&l| t.values[l] == first) {
                first
            } else {
                orbit.iter().map(|&l| t.values[l]).sum::<T>() * inv
            };
            for &l in &orbit {
                out[l] = v;
            }
        }
        increment(&mut idx, m);
    }
    TensorArray::from_values(k, m, t.length, out)
}

/// Coefficients r!·C(p,r)·C(q,r), r = 0..=min(p, q), of the product formula
/// for two multiple integrals.
pub fn multiplication_coefficients(p: u32, q: u32) -> Result<Vec<(u32, u128)>> {
    if p > 12 || q > 12 {
        return Err(Error::OutOfRange {
            what: "chaos order",
            value: format!("({p}, {q})"),
            range: "0..=12",
        });
    }
    (0..=p.min(q))
        .map(|r| {
            Ok((
                r,
                product(&[factorial(r)?, binomial(p, r)?, binomial(q, r)?])?,
            ))
        })
        .collect()
}

/// Integer weight (2q-2r)!·((r-1)!)²·C(q-1, r-1)⁴ of ‖f ⊗̃_r f‖² in φ².
pub fn phi_weight(q: u32, r: u32) -> Result<u128> {
    let b = binomial(q - 1, r - 1)?;
    let f = factorial(r - 1)?;
    product(&[factorial(2 * q - 2 * r)?, f, f, b, b, b, b])
}

/// q·q!·(q/2-1)!·C(q-1, q/2-1)², the prefactor of ⟨f, f ⊗̃_{q/2} f⟩ in ρ.
pub fn rho_weight(q: u32) -> Result<u128> {
    if !q.is_multiple_of(2) || q == 0 {
        return Err(Error::InvalidArgument(format!(
            "rho weight needs even q, got {q}"
        )));
    }
    let b = binomial(q - 1, q / 2 - 1)?;
    product(&[q as u128, factorial(q)?, factorial(q / 2 - 1)?, b, b])
}

/// Per-contraction diagnostics. `sym_self_norms[l-1]` is
/// ‖(f ⊗̃_r f) ⊗_l (f ⊗̃_r f)‖ when the unfolding fits the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionDiagnostics<T> {
    pub r: usize,
    pub raw_norm: T,
    pub sym_norm: T,
    pub sym_self_norms: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rho<T> {
    /// q odd: the limit is zero.
    Zero,
    Value(T),
    /// q even with φ = 0.
    Undefined,
}

impl<T: Real> Rho<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Rho::Zero => Some(T::zero()),
            Rho::Value(v) => Some(*v),
            Rho::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVarianceReport<T> {
    pub q: usize,
    /// q!‖f‖², the variance of I_q(f).
    pub chaos_norm: T,
    pub contractions: Vec<ContractionDiagnostics<T>>,
    pub phi: T,
    /// ⟨f, f ⊗̃_{q/2} f⟩ for even q.
    pub middle_pairing: Option<T>,
    pub rho: Rho<T>,
}

impl<T: Real> ChaosVarianceReport<T> {
    /// φ² rebuilt from the stored pieces.
    pub fn phi_squared_from_parts(&self) -> T {
        let q = self.q as u32;
        let mut s = (T::one() - self.chaos_norm).powi(2);
        for c in &self.contractions {
            let w = T::lit(phi_weight(q, c.r as u32).expect("weight computed before") as f64);
            s = s + T::from_usize_lossy(self.q * self.q) * w * c.sym_norm * c.sym_norm;
        }
        s
    }

    /// (1 - q!‖f‖²)/φ, the ratio that must vanish for the limit to hold.
    pub fn variance_defect_ratio(&self) -> Option<T> {
        (self.phi > T::zero()).then(|| (T::one() - self.chaos_norm) / self.phi)
    }
}

pub fn chaos_variance_report<T: Real>(f: &GridTensor<T>) -> Result<ChaosVarianceReport<T>> {
    let q = f.order();
    if q < 2 {
        return Err(Error::InvalidArgument(
            "variance report needs q >= 2".into(),
        ));
    }
    let qu = q as u32;
    let arr = f.as_array();
    let chaos_norm = T::lit(factorial(qu)? as f64) * arr.norm_squared();
    let mut contractions = Vec::with_capacity(q - 1);
    let mut phi2 = (T::one() - chaos_norm).powi(2);
    let mut middle = None;
    for r in 1..q {
        let raw = contract(arr, arr, r)?;
        let sym = symmetrize(&raw)?;
        let k = sym.order();
        let sym_self_norms = (1..k)
            .map(|l| {
                self_contraction_norm_squared(&sym, l)
                    .ok()
                    .map(|v| v.max(T::zero()).sqrt())
            })
            .collect();
        let sym_norm = sym.norm();
        let w = T::lit(phi_weight(qu, r as u32)? as f64);
        phi2 = phi2 + T::from_usize_lossy(q * q) * w * sym_norm * sym_norm;
        if 2 * r == q {
            middle = Some(arr.inner(&sym)?);
        }
        contractions.push(ContractionDiagnostics {
            r,
            raw_norm: raw.norm(),
            sym_norm,
            sym_self_norms,
        });
    }
    let phi = phi2.max(T::zero()).sqrt();
    let rho = if q % 2 == 1 {
        Rho::Zero
    } else if phi == T::zero() {
        Rho::Undefined
    } else {
        let w = T::lit(rho_weight(qu)? as f64);
        Rho::Value(-w * middle.expect("even q sets the middle pairing") / phi)
    };
    Ok(ChaosVarianceReport {
        q,
        chaos_norm,
        contractions,
        phi,
        middle_pairing: middle,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rand_unit(rng: &mut ChaCha8Rng) -> f64 {
        rng.next_u64() as f64 / u64::MAX as f64 * 2.0 - 1.0
    }

    fn random_array(order: usize, m: usize, seed: u64) -> TensorArray<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TensorArray::from_index_fn(order, m, 1.0, |_| rand_unit(&mut rng)).unwrap()
    }

    fn random_symmetric(order: usize, m: usize, seed: u64) -> GridTensor<f64> {
        GridTensor::new(symmetrize(&random_array(order, m, seed)).unwrap(), 1e-12).unwrap()
    }

    #[test]
    fn order_one_full_contraction_is_weighted_dot() {
        let f = TensorArray::from_values(1, 4, 2.0f64, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = TensorArray::from_values(1, 4, 2.0, vec![0.5, -1.0, 2.0, 1.0]).unwrap();
        let c = contract(&f, &g, 1).unwrap();
        assert_eq!(c.order(), 0);
        assert!((c.values()[0] - 0.5 * (0.5 - 2.0 + 6.0 + 4.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_contraction_is_outer_product() {
        let f = random_array(2, 3, 1);
        let g = random_array(1, 3, 2);
        let c = contract(&f, &g, 0).unwrap();
        assert_eq!(c.order(), 3);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(c.get(&[i, j, k]), f.get(&[i, j]) * g.get(&[k]));
                }
            }
        }
    }

    #[test]
    fn identity_contraction_by_brute_force() {
        let id = TensorArray::from_index_fn(2, 2, 2.0, |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 })
            .unwrap();
        let c = contract(&id, &id, 1).unwrap();
        assert_eq!(c, id);
    }

    #[test]
    fn contraction_matches_brute_force_summation() {
        let f = random_array(3, 3, 3);
        let g = random_array(2, 3, 4);
        let h = f.mesh();
        let c = contract(&f, &g, 1).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    let brute: f64 = (0..3)
                        .map(|s| f.get(&[a, b, s]) * g.get(&[d, s]))
                        .sum::<f64>()
                        * h;
                    assert!((c.get(&[a, b, d]) - brute).abs() < 1e-14);
                }
            }
        }
        assert!(contract(&f, &random_array(2, 4, 5), 1).is_err());
        assert!(contract(&f, &g, 3).is_err());
    }

    #[test]
    fn bilinear_and_quadratic_scaling() {
        let f = random_array(2, 4, 6);
        let g = random_array(2, 4, 7);
        let c = contract(&f.scaled(2.5), &g, 1).unwrap();
        let base = contract(&f, &g, 1).unwrap();
        for (a, b) in c.values().iter().zip(base.values()) {
            assert!((a - 2.5 * b).abs() < 1e-13);
        }
        let ff = contract(&f.scaled(-3.0), &f.scaled(-3.0), 1).unwrap();
        let ff0 = contract(&f, &f, 1).unwrap();
        for (a, b) in ff.values().iter().zip(ff0.values()) {
            assert!((a - 9.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_examples() {
        let a = random_array(2, 4, 8);
        let s = symmetrize(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = (a.get(&[i, j]) + a.get(&[j, i])) / 2.0;
                assert!((s.get(&[i, j]) - want).abs() < 1e-15);
            }
        }
        let t = random_array(3, 3, 9);
        let st = symmetrize(&t).unwrap();
        for p in permutations(3) {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let idx = [i, j, k];
                        let moved = [idx[p[0]], idx[p[1]], idx[p[2]]];
                        assert!((st.get(&idx) - st.get(&moved)).abs() < 1e-15);
                    }
                }
            }
        }
        assert_eq!(symmetrize(&st).unwrap(), st);
        assert!(symmetrize(&TensorArray::<f64>::zeros(7, 2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn permutation_count() {
        for k in 0..=6 {
            let p = permutations(k);
            assert_eq!(p.len(), (1..=k).product::<usize>().max(1));
        }
    }

    #[test]
    fn multiplication_coefficient_examples() {
        assert_eq!(multiplication_coefficients(0, 0).unwrap(), vec![(0, 1)]);
        assert_eq!(
            multiplication_coefficients(2, 2).unwrap(),
            vec![(0, 1), (1, 4), (2, 2)]
        );
        assert_eq!(
            multiplication_coefficients(1, 3).unwrap(),
            vec![(0, 1), (1, 3)]
        );
        assert!(multiplication_coefficients(13, 1).is_err());
    }

    #[test]
    fn zero_kernel_report() {
        for q in 2..=4 {
            let f = GridTensor::<f64>::zeros(q, 3, 1.0).unwrap();
            let rep = chaos_variance_report(&f).unwrap();
            assert_eq!(rep.phi, 1.0);
            assert_eq!(rep.rho.value(), Some(0.0));
        }
    }

    #[test]
    fn equal_spectrum_kernel() {
        // Diagonal kernel with h = 1 has eigenvalues equal to its entries.
        let m = 8;
        let lam = 1.0 / (2.0 * m as f64).sqrt();
        let arr =
            TensorArray::from_index_fn(2, m, m as f64, |ix| if ix[0] == ix[1] { lam } else { 0.0 })
                .unwrap();
        let f = GridTensor::new(arr, 0.0).unwrap();
        let rep = chaos_variance_report(&f).unwrap();
        assert!((rep.phi * rep.phi - 2.0 / m as f64).abs() < 1e-14);
        assert!((rep.phi_squared_from_parts() - rep.phi * rep.phi).abs() < 1e-12);
    }

    #[test]
    fn symmetrized_norm_never_exceeds_raw() {
        for q in 2..=4 {
            let m = if q == 4 { 4 } else { 5 };
            let f = random_symmetric(q, m, 10 + q as u64);
            let rep = chaos_variance_report(&f).unwrap();
            for c in &rep.contractions {
                assert!(c.sym_norm <= c.raw_norm * (1.0 + 1e-12));
            }
            assert!(
                (rep.phi_squared_from_parts() - rep.phi * rep.phi).abs()
                    <= 1e-12 * rep.phi * rep.phi
            );
            match q {
                3 => assert_eq!(rep.rho, Rho::Zero),
                _ => assert!(matches!(rep.rho, Rho::Value(_))),
            }
        }
    }

    #[test]
    fn gram_norm_matches_materialized_contraction() {
        let f = random_array(3, 4, 11);
        for r in 0..=3 {
            let direct = contract(&f, &f, r).unwrap().norm_squared();
            let gram = self_contraction_norm_squared(&f, r).unwrap();
            assert!((direct - gram).abs() < 1e-12 * direct.max(1.0), "r={r}");
        }
    }

    #[test]
    fn weights() {
        // q = 2: 2!·1·1 = 2; q = 4, r = 2: 4!·1·3⁴ = 1944.
        assert_eq!(phi_weight(2, 1).unwrap(), 2);
        assert_eq!(phi_weight(4, 2).unwrap(), 1944);
        assert_eq!(rho_weight(2).unwrap(), 4);
        assert!(rho_weight(3).is_err());
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let arr = TensorArray::from_values(2, 2, 1.0, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(GridTensor::new(arr, 1e-12).is_err());
        let arr = TensorArray::<f64>::zeros(5, 2, 1.0).unwrap();
        assert!(GridTensor::new(arr, 1e-12).is_err());
    }
}
