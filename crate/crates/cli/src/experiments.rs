//! One runner per experiment kind. Each parameter point is an independent
//! task with its own random stream, so output does not depend on scheduling.

use chaos_bounds::breuer_major::{
    limit_constants, sigma2_ladder, variance_constants, verify_limit, FbmModel,
};
use chaos_bounds::chaos2::{normal_approx_report, NormalApproxReport};
use chaos_bounds::mc_verify::{dkw_radius, EmpiricalStudy};
use chaos_bounds::numerics::RandomSource;
use chaos_bounds::sheet::{exact_kappa2, sheet_cumulants, sheet_rate_study, SheetModel};
use chaos_bounds::stein_hermite::{normal_cdf, verify_stein_hermite_pairing};
use chaos_bounds::toeplitz::{
    asymptotic_constants, chaos2_embedding, toeplitz_cumulants, EmbeddingNormalization,
    SpectralPair,
};
use chaos_bounds::Spectrum;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Plan, SpectrumPlan, Validated};
use crate::report::{by_order, estimate, int, measured, num, opt, quad, CurveRow};

/// Relative change under radius doubling above which constants are flagged.
pub const STABILITY_TOL: f64 = 1e-4;

const SRC_CUMULANT: &str =
    "second-chaos cumulant 2^(p-1)(p-1)! times the p-th eigenvalue power sum";
const SRC_PHI: &str = "Kolmogorov bound sqrt(kappa4/6 + (kappa2 - 1)^2)";
const SRC_ALPHA: &str = "skewness ratio kappa3/phi";
const SRC_RHO: &str = "skewness limit -kappa3/(2 phi)";
const SRC_EIGHTH: &str = "eighth-cumulant ratio kappa8/phi^4";
const SRC_EDGEWORTH: &str = "one-term Edgeworth weight -kappa3/6 of the third derivative of Phi";
const SRC_DKW: &str = "DKW radius sqrt(ln(2/delta)/(2n)) at delta = 0.01";
const SRC_RATIO: &str = "ratio limit (rho/3)(z^2 - 1) phi(z)";

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: Value,
    pub curves: Vec<CurveRow>,
    /// Unconverged numerics; any entry turns the exit status into 3.
    pub flags: Vec<String>,
}

pub fn run(v: &Validated) -> chaos_bounds::Result<Outcome> {
    let zs = v.z_grid.points();
    match &v.plan {
        Plan::SteinCheck { q_max, tol } => stein_check(*q_max, *tol, &zs),
        Plan::Chaos2Report {
            spectrum,
            moment_orders,
        } => chaos2_report(spectrum, moment_orders, v, &zs),
        Plan::Toeplitz {
            pair,
            horizons,
            jmax,
            embedding,
        } => toeplitz(pair, horizons, *jmax, *embedding, v, &zs),
        Plan::Sheet { models, jmax } => sheet(models, *jmax, v, &zs),
        Plan::BreuerMajor { models, tol } => breuer_major(models, *tol, v, &zs),
    }
}

fn stein_check(q_max: usize, tol: f64, zs: &[f64]) -> chaos_bounds::Result<Outcome> {
    let tasks: Vec<(usize, f64)> = (1..=q_max)
        .flat_map(|q| zs.iter().map(move |&z| (q, z)))
        .collect();
    let checks = tasks
        .par_iter()
        .map(|&(q, z)| verify_stein_hermite_pairing(q, z, tol))
        .collect::<chaos_bounds::Result<Vec<_>>>()?;
    let mut per_q = Map::new();
    let mut curves = Vec::with_capacity(checks.len());
    for q in 1..=q_max {
        let worst = checks
            .iter()
            .filter(|c| c.q == q)
            .map(|c| c.abs_error())
            .fold(0.0, f64::max);
        per_q.insert(q.to_string(), measured(worst));
    }
    for c in &checks {
        curves.push(CurveRow {
            series: "stein-hermite-pairing".into(),
            param: c.q as f64,
            z: c.z,
            measured: Some(c.quadrature.value),
            error: Some(c.abs_error()),
            predicted: Some(c.closed_form),
        });
    }
    let max_residual = checks.iter().map(|c| c.abs_error()).fold(0.0, f64::max);
    let flags = checks
        .iter()
        .filter(|c| !c.quadrature.converged)
        .map(|c| {
            format!(
                "pairing quadrature unconverged at q = {}, z = {} (error {:e})",
                c.q, c.z, c.quadrature.error
            )
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "max_residual": measured(max_residual),
            "max_residual_by_q": per_q,
            "closed_form": "H_(q+1)(z) phi(z)/(q+2)",
            "points": int(checks.len() as u128, "q range times z-grid size"),
        }),
        curves,
        flags,
    })
}

fn normal_json(r: &NormalApproxReport<f64>) -> Value {
    json!({
        "kappa2": num(r.kappa2, SRC_CUMULANT),
        "kappa3": num(r.kappa3, SRC_CUMULANT),
        "kappa4": num(r.kappa4, SRC_CUMULANT),
        "kappa8": num(r.kappa8, SRC_CUMULANT),
        "phi": num(r.phi, SRC_PHI),
        "kolmogorov_bound": num(r.kolmogorov_bound, SRC_PHI),
        "alpha": opt(r.alpha, SRC_ALPHA),
        "rho": opt(r.rho(), SRC_RHO),
        "eighth_ratio": opt(r.eighth_ratio, SRC_EIGHTH),
        "edgeworth_coefficient": num(r.edgeworth_coefficient, SRC_EDGEWORTH),
    })
}

/// Ratio curve (P̂ − Φ)/φ against its limit, plus the Edgeworth comparison.
fn empirical_json(
    study: &EmpiricalStudy,
    normal: &NormalApproxReport<f64>,
    zs: &[f64],
    series: &str,
    param: f64,
    curves: &mut Vec<CurveRow>,
) -> chaos_bounds::Result<Value> {
    let mut out = json!({
        "samples": int(study.n() as u128, "configured sample size"),
        "d_kol": measured(study.d_kol()),
        "dkw_radius": num(study.dkw_radius(0.01)?, SRC_DKW),
        "within_upper_bound": study.d_kol() <= normal.phi + study.dkw_radius(0.01)?,
    });
    if normal.phi > 0.0 {
        let ratio = study.ratio_curve(normal.phi, zs, normal.rho())?;
        let worst = ratio.iter().filter_map(|p| p.z_score()).fold(0.0, f64::max);
        out["max_ratio_z_score"] = measured(worst);
        out["ratio_prediction"] = json!(SRC_RATIO);
        curves.extend(ratio.iter().map(|p| CurveRow {
            series: format!("{series}-ratio"),
            param,
            z: p.z,
            measured: Some(p.ratio),
            error: Some(p.std_error),
            predicted: p.predicted,
        }));
    }
    let ew = study.edgeworth_check(normal.kappa3, zs)?;
    out["edgeworth"] = json!({
        "residual_max": measured(ew.residual_max),
        "plain_max": measured(ew.plain_max),
        "mc_radius": num(ew.mc_radius, SRC_DKW),
        "improved": ew.improved(),
        "underpowered": ew.underpowered(),
    });
    let n = study.n() as f64;
    curves.extend(zs.iter().map(|&z| {
        let p = normal_cdf(z);
        CurveRow {
            series: format!("{series}-edgeworth"),
            param,
            z,
            measured: Some(study.ecdf(z) - p),
            error: Some((p * (1.0 - p) / n).sqrt()),
            predicted: Some(normal.edgeworth_cdf(z) - p),
        }
    }));
    Ok(out)
}

fn predicted_only(
    normal: &NormalApproxReport<f64>,
    zs: &[f64],
    series: &str,
    param: f64,
) -> Vec<CurveRow> {
    zs.iter()
        .map(|&z| {
            let p = normal_cdf(z);
            CurveRow {
                series: format!("{series}-edgeworth"),
                param,
                z,
                measured: None,
                error: None,
                predicted: Some(normal.edgeworth_cdf(z) - p),
            }
        })
        .chain(normal.rho().into_iter().flat_map(|rho| {
            zs.iter().map(move |&z| CurveRow {
                series: format!("{series}-ratio"),
                param,
                z,
                measured: None,
                error: None,
                predicted: Some(chaos_bounds::mc_verify::predicted_ratio(rho, z)),
            })
        }))
        .collect()
}

fn chaos2_report(
    plan: &SpectrumPlan,
    orders: &[u32],
    v: &Validated,
    zs: &[f64],
) -> chaos_bounds::Result<Outcome> {
    let mut flags = Vec::new();
    let mut source = Map::new();
    let spectrum: Spectrum = match plan {
        SpectrumPlan::Eigenvalues(e) => Spectrum::from_eigenvalues(e.clone(), 1.0)?,
        SpectrumPlan::Sheet(model) => {
            source.insert("log_inv_eps".into(), num(model.log_inv_eps(), "log(1/eps)"));
            model.spectrum()?
        }
        SpectrumPlan::Toeplitz { pair, horizon, m } => {
            let e = chaos2_embedding(pair, *horizon, *m, EmbeddingNormalization::Check)?;
            if !e.transforms_converged {
                flags.push(format!(
                    "Fourier transforms unconverged (error {:e})",
                    e.transform_error
                ));
            }
            source.insert(
                "transform_error".into(),
                estimate(
                    e.transform_error,
                    "largest Fourier-transform error estimate",
                    e.transform_error,
                    e.transforms_converged,
                ),
            );
            e.spectrum
        }
    };
    source.insert(
        "eigenvalues".into(),
        int(spectrum.len() as u128, "spectrum size"),
    );
    let normal = normal_approx_report(&spectrum);
    let cumulants = spectrum.cumulants(8)?;
    let mut results = json!({
        "spectrum": source,
        "cumulants": by_order(cumulants.iter().copied().enumerate().skip(1).map(|(k, c)| (k + 1, c)), SRC_CUMULANT),
        "normal_approximation": normal_json(&normal),
    });
    let mut curves = Vec::new();
    if v.samples > 0 {
        let study = EmpiricalStudy::new(spectrum.sample(&RandomSource::new(v.seed, 0), v.samples))?;
        results["empirical"] = empirical_json(&study, &normal, zs, "chaos2", 0.0, &mut curves)?;
        let checks = orders
            .par_iter()
            .map(|&s| {
                spectrum.malliavin_moment_check(
                    &RandomSource::new(v.seed, 1 + s as u64),
                    v.samples,
                    s,
                )
            })
            .collect::<chaos_bounds::Result<Vec<_>>>()?;
        let mut m = Map::new();
        for c in checks {
            m.insert(
                c.s.to_string(),
                json!({
                    "lhs": measured(c.lhs),
                    "rhs": measured(c.rhs),
                    "lhs_std_error": measured(c.lhs_se),
                    "rhs_std_error": measured(c.rhs_se),
                    "difference_std_error": measured(c.diff_se),
                    "z_score": measured(c.z_score()),
                    "identity": "E[F^s |DF|^2] = (2/(s+1)) E[F^(s+2)]",
                }),
            );
        }
        results["moment_identity"] = Value::Object(m);
    } else {
        curves = predicted_only(&normal, zs, "chaos2", 0.0);
    }
    Ok(Outcome {
        results,
        curves,
        flags,
    })
}

fn toeplitz(
    pair: &SpectralPair,
    horizons: &[(f64, usize)],
    jmax: usize,
    embedding: bool,
    v: &Validated,
    zs: &[f64],
) -> chaos_bounds::Result<Outcome> {
    let mut flags = Vec::new();
    let c = asymptotic_constants(pair, jmax)?;
    if !c.converged {
        flags.push("power integrals of f g unconverged".to_string());
    }
    let integrals: Map<String, Value> = c
        .integrals
        .iter()
        .map(|(j, q)| {
            (
                j.to_string(),
                quad(q, "integral of f^j g^j over the real line"),
            )
        })
        .collect();
    let constants = json!({
        "sigma2_inf": num(c.sigma2_inf, "16 pi^3 times the integral of f^2 g^2"),
        "raw": by_order(c.raw.iter().copied(), "2^(j-1)(j-1)! (2 pi)^(2j-1) times the integral of f^j g^j"),
        "standardized": by_order(c.standardized.iter().copied(), "raw constant over sigma2_inf^(j/2)"),
        "integrals": integrals,
        "limit_constant": num(c.limit_constant, "sqrt(2/3) times int f^3 g^3 over (int f^2 g^2)^(3/2), multiplying (1 - z^2) exp(-z^2/2)"),
        "limit_constant_from_cumulants": num(c.limit_constant_from_cumulants, "standardized third-cumulant constant over 6 sqrt(2 pi), multiplying (1 - z^2) exp(-z^2/2)"),
    });
    let need_embedding = embedding || v.samples > 0;
    let rows = horizons
        .par_iter()
        .enumerate()
        .map(|(k, &(t, m))| {
            let rep = toeplitz_cumulants(pair, t, m, jmax)?;
            let emb = if need_embedding {
                Some(chaos2_embedding(pair, t, m, EmbeddingNormalization::Tilde)?)
            } else {
                None
            };
            let sample = match (&emb, v.samples) {
                (Some(e), n) if n > 0 => {
                    let s = e.spectrum.standardized()?;
                    Some(EmpiricalStudy::new(
                        s.sample(&RandomSource::new(v.seed, k as u64), n),
                    )?)
                }
                _ => None,
            };
            Ok((t, m, rep, emb, sample))
        })
        .collect::<chaos_bounds::Result<Vec<_>>>()?;
    let mut per_t = Vec::new();
    let mut curves = Vec::new();
    for (t, m, rep, emb, sample) in rows {
        if !rep.transforms_converged {
            flags.push(format!(
                "Fourier transforms unconverged at T = {t} (error {:e})",
                rep.transform_error
            ));
        }
        let scaled: Vec<(usize, f64)> = (2..=jmax)
            .map(|j| (j, rep.scaled_standardized(j)))
            .collect();
        let rel_to_limit: Vec<(usize, f64)> = scaled
            .iter()
            .zip(&c.standardized)
            .map(|(&(j, s), &(_, l))| (j, (s - l) / l))
            .collect();
        let mut row = json!({
            "horizon": num(t, "configured horizon"),
            "grid": int(m as u128, "horizon over mesh"),
            "sigma2": num(rep.sigma2, "2 T^(-1) trace of (B_f B_g)^2"),
            "cumulants": by_order(rep.cumulants.iter().copied().enumerate().skip(1).map(|(k, x)| (k + 1, x)),
                "T^(-j/2) 2^(j-1)(j-1)! trace of (B_f B_g)^j"),
            "scaled_standardized": by_order(scaled.iter().copied(), "standardized cumulant times T^(j/2 - 1)"),
            "relative_to_limit": by_order(rel_to_limit, "scaled standardized cumulant over its limit, minus one"),
            "transform_error": estimate(rep.transform_error, "largest Fourier-transform error estimate", rep.transform_error, rep.transforms_converged),
        });
        if let Some(e) = &emb {
            let ek = e.spectrum.cumulants(jmax as u32)?;
            let disc = (2..=jmax)
                .map(|j| {
                    (ek[j - 1] - rep.cumulants[j - 1]).abs()
                        / rep.cumulants[j - 1].abs().max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max);
            row["embedding"] = json!({
                "cumulants": by_order(ek.iter().copied().enumerate().skip(1).map(|(k, x)| (k + 1, x)), SRC_CUMULANT),
                "max_relative_route_discrepancy": measured(disc),
                "repaired_min_eigenvalue": opt(e.repaired_min_eigenvalue, "smallest covariance eigenvalue before clipping"),
            });
        }
        if let Some(study) = &sample {
            let n = study.n() as f64;
            let root_t = t.sqrt();
            row["empirical"] = json!({
                "d_kol": measured(study.d_kol()),
                "scaled_d_kol": measured(root_t * study.d_kol()),
                "dkw_radius": num(dkw_radius(study.n(), 0.01)?, SRC_DKW),
            });
            curves.extend(zs.iter().map(|&z| {
                let p = normal_cdf(z);
                CurveRow {
                    series: "toeplitz-limit".into(),
                    param: t,
                    z,
                    measured: Some(root_t * (study.ecdf(z) - p)),
                    error: Some(root_t * (p * (1.0 - p) / n).sqrt()),
                    predicted: Some(c.limit_curve(z)),
                }
            }));
        } else {
            curves.extend(zs.iter().map(|&z| CurveRow {
                series: "toeplitz-limit".into(),
                param: t,
                z,
                measured: None,
                error: None,
                predicted: Some(c.limit_curve(z)),
            }));
        }
        per_t.push(row);
    }
    Ok(Outcome {
        results: json!({ "pair": pair.name, "constants": constants, "horizons": per_t }),
        curves,
        flags,
    })
}

fn sheet(
    models: &[SheetModel],
    jmax: usize,
    v: &Validated,
    zs: &[f64],
) -> chaos_bounds::Result<Outcome> {
    let rows = models
        .par_iter()
        .enumerate()
        .map(|(k, model)| {
            let cum = sheet_cumulants(model, jmax as u32)?;
            let study = if v.samples > 0 {
                Some(sheet_rate_study(
                    model,
                    &RandomSource::new(v.seed, k as u64),
                    v.samples,
                )?)
            } else {
                None
            };
            let normal = match &study {
                Some((r, _)) => r.normal.clone(),
                None => normal_approx_report(&model.spectrum()?),
            };
            Ok((model, cum, normal, study))
        })
        .collect::<chaos_bounds::Result<Vec<_>>>()?;
    let mut per_eps = Vec::new();
    let mut curves = Vec::new();
    let mut scaled = Vec::new();
    for (model, cum, normal, study) in rows {
        let order = |v: &[f64]| {
            v.iter()
                .copied()
                .enumerate()
                .skip(1)
                .map(|(k, x)| (k + 1, x))
                .collect::<Vec<_>>()
        };
        let mut row = json!({
            "eps": num(model.eps, "configured ladder"),
            "log_inv_eps": num(model.log_inv_eps(), "log(1/eps)"),
            "reference_rate": num(model.reference_rate(), "(log 1/eps)^(-d/2)"),
            "cumulants_1d": by_order(order(&cum.one_dimensional), SRC_CUMULANT),
            "cumulants": by_order(order(&cum.lifted), "product identity: kappa_j(d)/c_j = (kappa_j(1)/c_j)^d with c_j = 2^(j-1)(j-1)!"),
            "normal_approximation": normal_json(&normal),
        });
        if model.d == 1 {
            row["exact_kappa2"] = num(
                exact_kappa2(model.eps),
                "(L - 1 + eps)/L with L = log(1/eps)",
            );
        }
        if let Some(k) = &cum.kronecker {
            row["cumulants_kronecker"] = by_order(order(k), SRC_CUMULANT);
            row["max_route_discrepancy"] = opt(cum.max_route_discrepancy(), MEASURED_REL);
        }
        match &study {
            Some((rep, st)) => {
                let mut e = empirical_json(st, &normal, zs, "sheet", model.eps, &mut curves)?;
                e["scaled_d_kol"] = measured(rep.scaled_distance);
                e["ratio_to_phi"] = measured(rep.ratio_to_phi);
                e["underpowered"] = json!(rep.underpowered);
                scaled.push(rep.scaled_distance);
                row["empirical"] = e;
            }
            None => curves.extend(predicted_only(&normal, zs, "sheet", model.eps)),
        }
        per_eps.push(row);
    }
    let mut results =
        json!({ "dimension": int(models[0].d as u128, "configured dimension"), "ladder": per_eps });
    if scaled.len() > 1 {
        let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
        let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
        results["scaled_d_kol_band"] = measured(hi / lo);
    }
    Ok(Outcome {
        results,
        curves,
        flags: Vec::new(),
    })
}

const MEASURED_REL: &str = "measured relative difference";

fn breuer_major(
    models: &[FbmModel],
    tol: f64,
    v: &Validated,
    zs: &[f64],
) -> chaos_bounds::Result<Outcome> {
    let base = models[0];
    let mut flags = Vec::new();
    let c = limit_constants(&base, tol)?;
    if !c.converged {
        flags.push("Breuer-Major integrals unconverged".to_string());
    }
    match c.stability() {
        Some(s) if s > STABILITY_TOL => {
            flags.push(format!("constants change by {s:e} under radius doubling"))
        }
        None => flags.push("radius-doubling check unavailable".to_string()),
        _ => {}
    }
    let var = variance_constants(&base);
    if !var.sigma2_inf.converged {
        flags.push("limit variance unconverged".to_string());
    }
    let horizons: Vec<f64> = models.iter().map(|m| m.horizon).collect();
    let ladder = sigma2_ladder(&base, &horizons)?;
    let per_s: Map<String, Value> = c
        .per_s
        .iter()
        .map(|(s, w, q)| {
            (
                s.to_string(),
                json!({
                    "weight": int(*w, "(s-1)!^2 C(q-1, s-1)^4 (2q-2s)!"),
                    "integral": quad(q, "triple integral of rho products, reduced through autocorrelations"),
                }),
            )
        })
        .collect();
    let stab = |x: Option<f64>| opt(x, "relative change under doubling the truncation radius");
    let mut results = json!({
        "hurst": num(base.hurst, "configured Hurst index"),
        "q": int(base.q as u128, "configured Hermite order"),
        "delta": num(base.delta, "configured mesh"),
        "constants": {
            "sigma2_inf": quad(&var.sigma2_inf, "q! times the integral of rho^q over the real line"),
            "sigma2_inf_tail": num(var.tail, "analytic power-law tail of q! rho^q beyond the radius"),
            "sigma_hat2": num(c.sigma_hat2, "q^2/sigma^4 times the weighted sum of contraction integrals"),
            "per_s": per_s,
            "gamma_prefactor": int(c.gamma_prefactor, "q!(q/2)! C(q, q/2)^2"),
            "gamma_integral": quad(&c.gamma_integral, "skewness triple integral of rho^(q/2) products"),
            "gamma_hat": num(c.gamma_hat, "-prefactor/(2 sigma^3) times the skewness integral"),
            "curve_coefficient": num(c.curve_coefficient(), "gamma_hat/3"),
            "limit_at_zero": num(c.limit_curve(0.0), "-gamma_hat/(3 sqrt(2 pi))"),
            "radius": num(c.radius, "truncation radius where |rho|^q falls below the cutoff"),
            "sigma_hat2_stability": stab(c.sigma_hat2_stability),
            "gamma_hat_stability": stab(c.gamma_hat_stability),
        },
        "sigma2_ladder": ladder.iter().map(|&(t, s)| json!({
            "horizon": num(t, "configured horizon"),
            "sigma2": num(s, "(q!/T) double integral of rho^q over [0, T]^2"),
        })).collect::<Vec<_>>(),
    });
    let mut curves = Vec::new();
    if v.samples > 0 {
        let rep = verify_limit(
            &base,
            &horizons,
            zs,
            &RandomSource::new(v.seed, 0),
            v.samples,
            c.clone(),
        )?;
        let mut rows = Vec::new();
        for r in &rep.rows {
            let mut row = json!({
                "horizon": num(r.horizon, "configured horizon"),
                "d_kol": measured(r.d_kol),
                "scaled_d_kol": measured(r.scaled_d_kol),
                "derivative_covariance": opt(r.derivative_covariance, "sqrt(T) kappa3/2 of the discretized sum"),
            });
            if let Some(nr) = &r.normal {
                row["normal_approximation"] = normal_json(nr);
            }
            rows.push(row);
            curves.extend(r.points.iter().map(|p| CurveRow {
                series: "breuer-major-limit".into(),
                param: r.horizon,
                z: p.z,
                measured: Some(p.measured),
                error: Some(p.std_error),
                predicted: Some(p.predicted),
            }));
        }
        results["empirical"] = json!({
            "rows": rows,
            "boundedness_ratio": measured(rep.boundedness_ratio()),
        });
    } else {
        for &t in &horizons {
            curves.extend(zs.iter().map(|&z| CurveRow {
                series: "breuer-major-limit".into(),
                param: t,
                z,
                measured: None,
                error: None,
                predicted: Some(c.limit_curve(z)),
            }));
        }
    }
    Ok(Outcome {
        results,
        curves,
        flags,
    })
}
