//! Adaptive Gauss–Kronrod quadrature in one dimension, iterated and
//! quasi-random cubature on boxes in two and three dimensions, and an
//! oscillatory cosine transform over the half line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::real::Real;

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae in
// decreasing order, the last one is the centre).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Polynomial degree integrated exactly by one Kronrod panel.
pub const KRONROD_EXACT_DEGREE: usize = 22;

pub const DEFAULT_MAX_EVALS: usize = 2_000_000;

/// Quadrature result with its error estimate. `converged` is false when the
/// evaluation budget ran out before the tolerance was met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: Real> Quadrature<T> {
    fn exact(value: T) -> Self {
        Self {
            value,
            error: T::zero(),
            evaluations: 0,
            converged: true,
        }
    }

    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, c: T) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
            ..self
        }
    }
}

fn kronrod_panel<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let centre = (a + b) * T::lit(0.5);
    let fc = f(centre);
    let mut resk = fc * T::lit(WGK[7]);
    let mut resg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(centre - dx) + f(centre + dx);
        resk = resk + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            resg = resg + s * T::lit(WG[j / 2]);
        }
    }
    let value = resk * half;
    let err = ((resk - resg) * half).abs();
    (value, err)
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss–Kronrod over `[a, b]`, bisecting the panel with
/// the largest error until the summed error estimate drops below `tol`.
pub fn integrate_1d<T: Real, F: FnMut(T) -> T>(f: F, a: T, b: T, tol: T) -> Quadrature<T> {
    integrate_1d_breaks(f, &[a, b], tol, DEFAULT_MAX_EVALS)
}

/// Like [`integrate_1d`] but starts from the panels delimited by `points`
/// (sorted, first and last are the limits), so kinks and jumps at known
/// locations never sit inside a panel.
pub fn integrate_1d_breaks<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    tol: T,
    max_evals: usize,
) -> Quadrature<T> {
    assert!(points.len() >= 2, "need at least the two limits");
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = T::zero();
    let mut total_err = T::zero();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let (value, error) = kronrod_panel(&mut f, a, b);
        evals += 15;
        total = total + value;
        total_err = total_err + error;
        heap.push(Panel { a, b, value, error });
    }
    if heap.is_empty() {
        return Quadrature::exact(T::zero());
    }
    let min_width = T::epsilon() * T::lit(64.0);
    loop {
        if total_err <= tol {
            return Quadrature {
                value: total,
                error: total_err,
                evaluations: evals,
                converged: true,
            };
        }
        if evals + 30 > max_evals {
            break;
        }
        let worst = heap.pop().expect("non-empty");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        let scale = worst.a.abs().max(worst.b.abs()).max(T::one());
        if (worst.b - worst.a) <= min_width * scale {
            // Cannot refine further; keep the panel as is.
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod_panel(&mut f, worst.a, mid);
        let (v2, e2) = kronrod_panel(&mut f, mid, worst.b);
        evals += 30;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Re-sum periodically to stop drift from the running updates.
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value = heap.iter().map(|p| p.value).sum();
    let error: T = heap.iter().map(|p| p.error).sum();
    Quadrature {
        value,
        error,
        evaluations: evals,
        converged: error <= tol,
    }
}

/// ∫_a^∞ f via the map x = a + t/(1 - t), t ∈ [0, 1).
pub fn integrate_semi_infinite<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, tol: T) -> Quadrature<T> {
    let g = |t: T| {
        let one = T::one();
        if t >= one {
            return T::zero();
        }
        let s = one - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    integrate_1d(g, T::zero(), T::one(), tol)
}

/// ∫_{-∞}^{∞} f, split at zero.
pub fn integrate_real_line<T: Real, F: FnMut(T) -> T>(mut f: F, tol: T) -> Quadrature<T> {
    let half = tol * T::lit(0.5);
    let right = integrate_semi_infinite(&mut f, T::zero(), half);
    let left = integrate_semi_infinite(|x: T| f(-x), T::zero(), half);
    right.combine(left)
}

/// How a 2–3 dimensional box integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cubature {
    /// Nested adaptive 1-d rules; accurate when the integrand is smooth
    /// along each axis (or factorizes).
    Iterated,
    /// Rank-1 quasi-random points, doubling the point count until two
    /// consecutive estimates agree within the tolerance.
    QuasiRandom { max_points: usize },
}

/// Integral of `f` over the box `domain` (1 to 3 axes, each `(lo, hi)`).
pub fn integrate<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    domain: &[(T, T)],
    tol: T,
    method: Cubature,
) -> Quadrature<T> {
    assert!(
        (1..=3).contains(&domain.len()),
        "integrate supports 1 to 3 dimensions"
    );
    if domain.len() == 1 {
        let (a, b) = domain[0];
        return integrate_1d(|x| f(&[x]), a, b, tol);
    }
    match method {
        Cubature::Iterated => iterated(&f, domain, &mut Vec::with_capacity(domain.len()), tol),
        Cubature::QuasiRandom { max_points } => quasi_random(&f, domain, tol, max_points),
    }
}

fn iterated<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    domain: &[(T, T)],
    prefix: &mut Vec<T>,
    tol: T,
) -> Quadrature<T> {
    let depth = prefix.len();
    let (a, b) = domain[depth];
    if depth + 1 == domain.len() {
        return integrate_1d(
            |x| {
                prefix.push(x);
                let v = f(prefix);
                prefix.pop();
                v
            },
            a,
            b,
            tol,
        );
    }
    let width = (b - a).abs().max(T::epsilon());
    let inner_tol = tol / (width * T::lit(4.0));
    let mut converged = true;
    let mut evals = 0;
    let outer = integrate_1d(
        |x| {
            prefix.push(x);
            let q = iterated(f, domain, prefix, inner_tol);
            prefix.pop();
            converged &= q.converged;
            evals += q.evaluations;
            q.value
        },
        a,
        b,
        tol * T::lit(0.5),
    );
    Quadrature {
        value: outer.value,
        error: outer.error + inner_tol * width,
        evaluations: evals,
        converged: converged && outer.converged,
    }
}

/// Generalized golden-ratio (R_d) sequence: the unique positive root of
/// x^{d+1} = x + 1 gives the additive recurrence constants.
fn rd_alphas(d: usize) -> Vec<f64> {
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|k| (1.0 / g.powi(k as i32)).fract()).collect()
}

fn quasi_random<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    domain: &[(T, T)],
    tol: T,
    max_points: usize,
) -> Quadrature<T> {
    let d = domain.len();
    let alphas = rd_alphas(d);
    let volume: T = domain.iter().fold(T::one(), |v, (a, b)| v * (*b - *a));
    let mut point = vec![T::zero(); d];
    let mut sum = 0.0f64;
    let mut taken = 0usize;
    let mut n = 4096usize.min(max_points.max(1));
    let mut previous: Option<f64> = None;
    loop {
        while taken < n {
            let k = (taken + 1) as f64;
            for ax in 0..d {
                let u = (0.5 + alphas[ax] * k).fract();
                let (a, b) = domain[ax];
                point[ax] = a + (b - a) * T::lit(u);
            }
            sum += f(&point).to_f64_lossy();
            taken += 1;
        }
        let estimate = sum / n as f64 * volume.to_f64_lossy();
        if let Some(prev) = previous {
            let err = (estimate - prev).abs();
            if err <= tol.to_f64_lossy() || n * 2 > max_points {
                return Quadrature {
                    value: T::lit(estimate),
                    error: T::lit(err),
                    evaluations: taken,
                    converged: err <= tol.to_f64_lossy(),
                };
            }
        }
        previous = Some(estimate);
        n *= 2;
    }
}

/// Half-line cosine transform 2∫_0^∞ cos(ω x) g(x) dx.
///
/// For ω ≠ 0 the half line is cut at multiples of π/|ω|, each half period
/// is integrated adaptively, and the partial sums are accelerated with
/// Wynn's epsilon algorithm. `breaks` lists points where g has kinks or
/// jumps.
pub fn cosine_transform<T: Real, F: FnMut(T) -> T>(
    mut g: F,
    omega: T,
    breaks: &[T],
    tol: T,
) -> Quadrature<T> {
    let two = T::lit(2.0);
    if omega == T::zero() {
        let mut pts = vec![T::zero()];
        pts.extend(breaks.iter().copied().filter(|&b| b > T::zero()));
        let last = *pts.last().expect("non-empty");
        let head = if pts.len() > 1 {
            integrate_1d_breaks(&mut g, &pts, tol * T::lit(0.25), DEFAULT_MAX_EVALS)
        } else {
            Quadrature::exact(T::zero())
        };
        let tail = integrate_semi_infinite(&mut g, last, tol * T::lit(0.25));
        return head.combine(tail).scaled(two);
    }
    let w = omega.abs();
    let period = T::PI() / w;
    let max_terms = 400usize;
    let term_tol = tol / T::lit(64.0);
    let mut partial = Vec::with_capacity(max_terms);
    let mut running = T::zero();
    let mut evals = 0usize;
    let mut all_converged = true;
    let mut best: Option<(T, T)> = None;
    // Exact kinks of g always become panel boundaries.
    let interior = |lo: T, hi: T| -> Vec<T> {
        let mut pts = vec![lo];
        pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        pts.push(hi);
        pts
    };
    let last_break = breaks.iter().copied().fold(T::zero(), T::max);
    let mut stable_hits = 0;
    for k in 0..max_terms {
        let lo = period * T::from_usize_lossy(k);
        let hi = lo + period;
        let q = integrate_1d_breaks(
            |x: T| (w * x).cos() * g(x),
            &interior(lo, hi),
            term_tol,
            DEFAULT_MAX_EVALS,
        );
        evals += q.evaluations;
        all_converged &= q.converged;
        running = running + q.value;
        partial.push(running);
        if hi <= last_break || partial.len() < 4 {
            continue;
        }
        // A zero term past every kink means g has compact support.
        if q.value == T::zero() && q.error == T::zero() {
            best = Some((running, T::zero()));
            break;
        }
        let (estimate, err) = wynn_epsilon(&partial);
        let err = err.max(q.error);
        if let Some((prev, _)) = best {
            let change = (estimate - prev).abs();
            best = Some((estimate, err.max(change)));
            if err.max(change) <= tol * T::lit(0.25) {
                stable_hits += 1;
                if stable_hits >= 2 {
                    break;
                }
            } else {
                stable_hits = 0;
            }
        } else {
            best = Some((estimate, err));
        }
    }
    let (value, error) = best.unwrap_or((running, T::infinity()));
    Quadrature {
        value: value * two,
        error: error * two,
        evaluations: evals,
        converged: all_converged && error * two <= tol,
    }
}

/// Wynn's epsilon extrapolation of a sequence of partial sums, returning the
/// highest-order even-column estimate and the difference to its neighbour.
fn wynn_epsilon<T: Real>(sums: &[T]) -> (T, T) {
    let n = sums.len();
    let tiny = T::min_positive_value().sqrt();
    let mut prev: Vec<T> = vec![T::zero(); n + 1];
    let mut cur: Vec<T> = sums.to_vec();
    let mut best = *sums.last().expect("non-empty");
    let mut best_err = if n >= 2 {
        (sums[n - 1] - sums[n - 2]).abs()
    } else {
        T::infinity()
    };
    let mut col = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let inv = if diff.abs() < tiny {
                T::max_value().sqrt()
            } else {
                T::one() / diff
            };
            next.push(prev[i + 1] + inv);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 && cur.len() >= 2 {
            let last = cur[cur.len() - 1];
            let before = cur[cur.len() - 2];
            let err = (last - before).abs();
            if last.is_finite() && err < best_err {
                best = last;
                best_err = err;
            }
        }
    }
    (best, best_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness_single_panel() {
        for deg in 0..=KRONROD_EXACT_DEGREE {
            let mut f = |x: f64| x.powi(deg as i32);
            let (v, _) = kronrod_panel(&mut f, 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}: {v} vs {exact}");
        }
    }

    #[test]
    fn x_squared_on_unit_interval() {
        let q = integrate_1d(|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((q.value - 1.0 / 3.0).abs() < 1e-15);
        assert!(q.converged);
    }

    #[test]
    fn gaussian_normalization() {
        let q = integrate_1d(
            |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -8.0,
            8.0,
            1e-12,
        );
        assert!((q.value - 1.0).abs() < 1e-10, "{}", q.value);
    }

    #[test]
    fn zero_integrand() {
        let q = integrate(
            |_x: &[f64]| 0.0,
            &[(0.0, 1.0), (0.0, 2.0)],
            1e-10,
            Cubature::Iterated,
        );
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn kink_handled_with_breakpoint() {
        let q = integrate_1d_breaks(
            |x: f64| (x - 0.3).abs().sqrt(),
            &[0.0, 0.3, 1.0],
            1e-11,
            100_000,
        );
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((q.value - exact).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_and_real_line() {
        let q = integrate_semi_infinite(|x: f64| (-x).exp(), 0.0, 1e-12);
        assert!((q.value - 1.0).abs() < 1e-11);
        let q = integrate_real_line(|x: f64| 1.0 / (1.0 + x * x), 1e-10);
        assert!((q.value - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn iterated_and_quasi_random_cubature() {
        let f = |p: &[f64]| p[0] * p[1] * p[1] + p[2];
        let dom = [(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)];
        // ∫x dx ∫y² dy ∫dz + ∫∫ dx dy ∫z dz = 1/2 * 8/3 * 2 = 8/3.
        let q = integrate(f, &dom, 1e-10, Cubature::Iterated);
        assert!((q.value - 8.0 / 3.0).abs() < 1e-9);
        let q = integrate(
            f,
            &dom,
            1e-4,
            Cubature::QuasiRandom {
                max_points: 1 << 22,
            },
        );
        assert!((q.value - 8.0 / 3.0).abs() < 1e-3, "{}", q.value);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let q = integrate_1d_breaks(|x: f64| 1.0 / x.sqrt(), &[1e-300, 1.0], 1e-15, 300);
        assert!(!q.converged);
        assert!(q.error > 0.0);
    }

    #[test]
    fn cosine_transform_of_cauchy() {
        let g = |x: f64| 1.0 / (std::f64::consts::PI * (1.0 + x * x));
        for t in [0.0, 0.05, 0.5, 1.0, 3.0, 10.0] {
            let q = cosine_transform(g, t, &[], 1e-10);
            assert!(
                (q.value - (-t).exp()).abs() < 1e-9,
                "t={t}: {} vs {}",
                q.value,
                (-t).exp()
            );
        }
    }

    #[test]
    fn cosine_transform_of_indicator() {
        // 2∫_0^1 cos(tx) dx = 2 sin(t)/t.
        let g = |x: f64| if x < 1.0 { 1.0 } else { 0.0 };
        for t in [0.0, 0.7, 5.0, 40.0] {
            let q = cosine_transform(g, t, &[1.0], 1e-10);
            let exact = if t == 0.0 { 2.0 } else { 2.0 * t.sin() / t };
            assert!(
                (q.value - exact).abs() < 1e-9,
                "t={t}: {} vs {exact}",
                q.value
            );
        }
    }
}
