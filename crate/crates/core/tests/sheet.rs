use approx::assert_relative_eq;
use chaos_bounds::numerics::RandomSource;
use chaos_bounds::sheet::*;

#[test]
fn ladder_values() {
    let l = eps_ladder();
    assert_eq!(l.len(), EPS_LADDER_EXPONENTS.len());
    assert_relative_eq!(l[0], (-3.0f64).exp());
}

#[test]
fn exact_variance_along_ladder() {
    // κ₂(1, e⁻⁵) = (5 - 1 + e⁻⁵)/5.
    assert_relative_eq!(
        exact_kappa2((-5.0f64).exp()),
        0.801_347_589_399_817,
        max_relative = 1e-12
    );
    for k in [3.0f64, 6.0] {
        let eps = (-k).exp();
        let m = SheetModel::new(1, eps, 300).unwrap();
        let k2 = m.spectrum().unwrap().cumulant(2).unwrap();
        assert_relative_eq!(k2, exact_kappa2(eps), max_relative = 1e-3);
    }
}

#[test]
fn uniform_and_graded_agree_at_moderate_eps() {
    let eps = (-3.0f64).exp();
    let g = SheetModel::new(1, eps, 400).unwrap().spectrum().unwrap();
    let u = SheetModel::new(1, eps, 400)
        .unwrap()
        .with_discretization(Discretization::Uniform)
        .spectrum()
        .unwrap();
    for p in 2..=4 {
        assert_relative_eq!(
            g.cumulant(p).unwrap(),
            u.cumulant(p).unwrap(),
            max_relative = 0.02
        );
    }
}

#[test]
fn product_identity_at_d2() {
    let m = SheetModel::new(2, (-4.0f64).exp(), 120).unwrap();
    let c = sheet_cumulants(&m, 6).unwrap();
    assert!(c.max_route_discrepancy().unwrap() < 1e-8);
}

#[test]
fn third_cumulant_decays_like_root_log() {
    // κ₃(1, ε)·L^{1/2} settles along the ladder.
    let v: Vec<f64> = [3.0f64, 4.0, 5.0, 6.0]
        .iter()
        .map(|&k| {
            let s = SheetModel::new(1, (-k).exp(), 300)
                .unwrap()
                .spectrum()
                .unwrap();
            s.cumulant(3).unwrap() * k.sqrt()
        })
        .collect();
    let last = v[3] / v[2];
    assert!((last - 1.0).abs() < 0.1, "{v:?}");
}

#[test]
fn small_sample_report_is_consistent() {
    let m = SheetModel::new(1, (-3.0f64).exp(), 100).unwrap();
    let r = sheet_rate_report(&m, &RandomSource::new(4, 0), 20_000).unwrap();
    assert!(r.within_upper_bound());
    assert_relative_eq!(
        r.scaled_distance,
        r.d_kol * 3f64.sqrt(),
        max_relative = 1e-12
    );
}
