use std::f64::consts::PI;
use std::io::Write;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use chaos_bounds::toeplitz::*;

#[test]
fn cauchy_closed_forms() {
    let c = asymptotic_constants(&SpectralPair::builtin("cauchy-pair").unwrap(), 4).unwrap();
    // ∫(1 + λ²)^{-4} = 5π/16, so σ²(∞) = 16π³·5/(16π³) = 5.
    assert_abs_diff_eq!(c.sigma2_inf, 5.0, epsilon = 1e-9);
    // ∫(1 + λ²)^{-6} = 63π/256.
    let (_, i3) = &c.integrals[1];
    assert_relative_eq!(i3.value, 63.0 / 256.0 / PI.powi(5), max_relative = 1e-9);
    assert!(c.converged);
}

#[test]
fn gaussian_closed_forms() {
    let c = asymptotic_constants(&SpectralPair::builtin("gaussian-pair").unwrap(), 3).unwrap();
    // ∫f^j g^j = (2π)^{-j}√(π/j).
    for (j, q) in &c.integrals {
        let j = *j as f64;
        assert_relative_eq!(
            q.value,
            (2.0 * PI).powf(-j) * (PI / j).sqrt(),
            max_relative = 1e-9
        );
    }
    assert_relative_eq!(
        c.sigma2_inf,
        4.0 * PI * (PI / 2.0).sqrt(),
        max_relative = 1e-9
    );
}

#[test]
fn sign_change_pair_has_no_skewness_limit() {
    let c = asymptotic_constants(&SpectralPair::builtin("sign-change-pair").unwrap(), 3).unwrap();
    assert!(c.limit_constant.abs() < 1e-10);
    assert!(c.limit_constant_from_cumulants.abs() < 1e-10);
}

#[test]
fn moderate_horizon_trend_and_route_agreement() {
    let pair = SpectralPair::builtin("cauchy-pair").unwrap();
    let c = asymptotic_constants(&pair, 3).unwrap();
    let rep = toeplitz_cumulants(&pair, 20.0, 200, 3).unwrap();
    assert!(rep.transforms_converged);
    let (_, k3) = c.standardized[1];
    assert_relative_eq!(rep.scaled_standardized(3), k3, max_relative = 0.02);
    let emb = chaos2_embedding(&pair, 20.0, 200, EmbeddingNormalization::Tilde).unwrap();
    let ek = emb.spectrum.cumulants(3).unwrap();
    for j in 2..=3 {
        assert_relative_eq!(ek[j - 1], rep.cumulants[j - 1], max_relative = 1e-8);
    }
}

#[test]
fn tabulated_cauchy_reproduces_builtin() {
    let dir = tempdir();
    let path = dir.join("cauchy.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "lambda,value").unwrap();
    for k in 0..=4000 {
        let l = k as f64 * 0.01;
        writeln!(f, "{l},{}", 1.0 / (PI * (1.0 + l * l))).unwrap();
    }
    drop(f);
    let t = Tabulated::from_path(&path, Some(2.0)).unwrap();
    assert_relative_eq!(
        t.eval(0.505),
        1.0 / (PI * (1.0 + 0.505 * 0.505)),
        max_relative = 1e-4
    );
    assert_relative_eq!(t.eval(-0.505), t.eval(0.505));
    assert_relative_eq!(t.eval(80.0), 1.0 / (PI * 6401.0), max_relative = 1e-3);
    let tab = SpectralFunction::Tabulated(t);
    let pair = SpectralPair::new("tab", tab.clone(), tab, f64::INFINITY, f64::INFINITY).unwrap();
    assert_relative_eq!(
        16.0 * PI.powi(3) * pair.power_integral(2, 1e-12).value,
        5.0,
        max_relative = 1e-4
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn tabulated_rejects_bad_header() {
    assert!(Tabulated::from_csv("x,y\n0,1\n1,0.5\n".as_bytes(), None).is_err());
    assert!(Tabulated::from_csv("lambda,value\n0,1\n1,0.5\n".as_bytes(), None).is_ok());
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("chaos-bounds-toeplitz-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
