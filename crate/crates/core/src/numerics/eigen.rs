//! Dense symmetric eigensolvers.
//!
//! Small matrices go through cyclic Jacobi rotations. Larger ones are reduced
//! to tridiagonal form with Householder reflections and finished with the
//! implicit-shift QL iteration; Jacobi's O(n³) cost per sweep is too slow
//! beyond a few hundred rows.

use super::matrix::{dot, DenseMatrix, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::real::Real;

/// Dimension up to which [`eigen_symmetric`] uses cyclic Jacobi.
pub const JACOBI_MAX_DIM: usize = 96;

const JACOBI_MAX_SWEEPS: usize = 60;
const QL_MAX_ITER_PER_VALUE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Jacobi,
    HouseholderQl,
}

/// Eigenvalues, and optionally eigenvectors, of a symmetric matrix.
///
/// `vectors`, when present, holds eigenvector `k` in row `k` (so it is Vᵀ).
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Option<DenseMatrix<T>>,
}

impl<T: Real> Eigen<T> {
    /// Reorders pairs by descending absolute eigenvalue.
    fn sort_by_magnitude(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .abs()
                .partial_cmp(&self.values[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&k| self.values[k]).collect();
        if let Some(v) = &self.vectors {
            let n = v.cols();
            let mut data = Vec::with_capacity(order.len() * n);
            for &k in &order {
                data.extend_from_slice(v.row(k));
            }
            self.vectors = Some(DenseMatrix::from_row_major(order.len(), n, data).expect("shape"));
        }
        self.values = values;
        self
    }

    /// Σ_k λ_k v_k v_kᵀ; requires eigenvectors.
    pub fn reconstruct(&self) -> Option<DenseMatrix<T>> {
        let v = self.vectors.as_ref()?;
        let n = v.cols();
        let mut out = DenseMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let vk = v.row(k);
            for i in 0..n {
                let a = lam * vk[i];
                let row = out.row_mut(i);
                for j in 0..n {
                    row[j] = row[j] + a * vk[j];
                }
            }
        }
        Some(out)
    }
}

/// Eigenvalues sorted by descending absolute value. Nothing is truncated.
pub fn eigenvalues_symmetric<T: Real>(m: &SymmetricMatrix<T>) -> Result<Vec<T>> {
    Ok(eigen_symmetric(m, false)?.values)
}

pub fn eigen_symmetric<T: Real>(m: &SymmetricMatrix<T>, want_vectors: bool) -> Result<Eigen<T>> {
    let method = if m.dim() <= JACOBI_MAX_DIM {
        EigenMethod::Jacobi
    } else {
        EigenMethod::HouseholderQl
    };
    eigen_symmetric_with(m, want_vectors, method)
}

pub fn eigen_symmetric_with<T: Real>(
    m: &SymmetricMatrix<T>,
    want_vectors: bool,
    method: EigenMethod,
) -> Result<Eigen<T>> {
    let out = match method {
        EigenMethod::Jacobi => jacobi(m, want_vectors)?,
        EigenMethod::HouseholderQl => householder_ql(m, want_vectors)?,
    };
    Ok(out.sort_by_magnitude())
}

fn jacobi<T: Real>(m: &SymmetricMatrix<T>, want_vectors: bool) -> Result<Eigen<T>> {
    let n = m.dim();
    let mut a = m.to_dense();
    // vt holds Vᵀ: row k accumulates eigenvector k.
    let mut vt = want_vectors.then(|| DenseMatrix::identity(n));
    let eps = T::epsilon();

    let off_norm = |a: &DenseMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..i {
                s = s + a.get(i, j) * a.get(i, j);
            }
        }
        s
    };
    let total: T = {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + a.get(i, j) * a.get(i, j);
            }
        }
        s
    };
    if total == T::zero() {
        return Ok(Eigen {
            values: vec![T::zero(); n],
            vectors: vt,
        });
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= eps * eps * total {
            let values = (0..n).map(|i| a.get(i, i)).collect();
            return Ok(Eigen {
                values,
                vectors: vt,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                if apq.abs() <= eps * T::lit(0.01) * (app.abs().min(aqq.abs())) {
                    a.set(p, q, T::zero());
                    a.set(q, p, T::zero());
                    continue;
                }
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                if let Some(vt) = vt.as_mut() {
                    for k in 0..n {
                        let vp = vt.get(p, k);
                        let vq = vt.get(q, k);
                        vt.set(p, k, c * vp - s * vq);
                        vt.set(q, k, s * vp + c * vq);
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence {
        name: m.name().to_string(),
        dim: n,
        budget: JACOBI_MAX_SWEEPS,
    })
}

/// Householder tridiagonalization (full symmetric storage, row-contiguous
/// updates) followed by implicit QL.
fn householder_ql<T: Real>(m: &SymmetricMatrix<T>, want_vectors: bool) -> Result<Eigen<T>> {
    let n = m.dim();
    let mut a = m.to_dense();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    let mut reflectors: Vec<(usize, T, Vec<T>)> = Vec::new();
    let two = T::lit(2.0);

    for i in (1..n).rev() {
        let l = i - 1;
        let x: Vec<T> = a.row(i)[..i].to_vec();
        let scale = x.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        let tail_sq: T = if scale == T::zero() {
            T::zero()
        } else {
            x[..l].iter().map(|v| (*v / scale) * (*v / scale)).sum()
        };
        if tail_sq == T::zero() {
            e[i] = x[l];
            d[i] = a.get(i, i);
            continue;
        }
        let xl = x[l] / scale;
        let norm = (tail_sq + xl * xl).sqrt();
        let alpha = if xl >= T::zero() { -norm } else { norm };
        let mut v: Vec<T> = x.iter().map(|&xi| xi / scale).collect();
        v[l] = v[l] - alpha;
        let vtv = dot(&v, &v);
        let beta = two / vtv;
        e[i] = alpha * scale;
        d[i] = a.get(i, i);

        // p = β A v over the leading i×i block.
        let p: Vec<T> = (0..i).map(|r| beta * dot(&a.row(r)[..i], &v)).collect();
        let k = beta * dot(&v, &p) / two;
        let w: Vec<T> = p.iter().zip(&v).map(|(&pi, &vi)| pi - k * vi).collect();
        for r in 0..i {
            let (vr, wr) = (v[r], w[r]);
            let row = &mut a.row_mut(r)[..i];
            for c in 0..i {
                row[c] = row[c] - vr * w[c] - wr * v[c];
            }
        }
        if want_vectors {
            reflectors.push((i, beta, v));
        }
    }
    d[0] = a.get(0, 0);

    // Qᵀ = H_1 H_2 ⋯ H_{n-1}; rows of qt are the columns of Q.
    let mut qt = if want_vectors {
        let mut qt = DenseMatrix::identity(n);
        for (i, beta, v) in reflectors.iter().rev() {
            for r in 0..n {
                let row = &mut qt.row_mut(r)[..*i];
                let t = *beta * dot(row, v);
                for (c, vc) in row.iter_mut().zip(v) {
                    *c = *c - t * *vc;
                }
            }
        }
        Some(qt)
    } else {
        None
    };

    // Shift off-diagonal so e[i] couples i and i+1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    tridiagonal_ql(&mut d, &mut e, qt.as_mut(), m.name())?;
    Ok(Eigen {
        values: d,
        vectors: qt,
    })
}

fn tridiagonal_ql<T: Real>(
    d: &mut [T],
    e: &mut [T],
    mut zt: Option<&mut DenseMatrix<T>>,
    name: &str,
) -> Result<()> {
    let n = d.len();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER_PER_VALUE {
                return Err(Error::NoConvergence {
                    name: name.to_string(),
                    dim: n,
                    budget: QL_MAX_ITER_PER_VALUE,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let cols = z.cols();
                    for k in 0..cols {
                        let zi1 = z.get(i + 1, k);
                        let zi = z.get(i, k);
                        z.set(i + 1, k, s * zi + c * zi1);
                        z.set(i, k, c * zi - s * zi1);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
