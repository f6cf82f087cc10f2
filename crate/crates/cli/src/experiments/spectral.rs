//! Spectrum, potentials, projector norms, quasimodes, Weyl sums, resolvent.

use anyhow::{bail, Result};
use rayon::prelude::*;

use qlab_core::dynamics::{point_kernel, source_point};
use qlab_core::estimators::{
    divergent_quasimode as quasimode_sums, local_weyl, projector_norm, quasimode_ratio, sigma,
    uniform_resolvent_probe, AscentOptions, Expectation, ExperimentReport,
};
use qlab_core::geometry::{build_basis, lp_norm, GradedOptions, ModelManifold, QuadratureGrid};
use qlab_core::operator::{assemble, band_projector, diagonalize, shift_for};
use qlab_core::orthopoly::sphere_volume;
use qlab_core::potentials::{
    counterexample_eigenfunction, counterexample_potential, counterexample_residual, eigenfunction_from_ln_distance, kato_report,
    lq_norm, KatoOptions, KatoReport, KatoThresholds, KatoVerdict, Potential,
};

use super::{default_lambdas, experiment, p_list, p_tag, Setup};
use crate::config::ExperimentConfig;
use crate::output::{fmt, Check, Outcome, Outputs};

pub fn spectrum(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let exp = experiment("spectrum");
    let manifold = cfg.manifold(exp.default_manifold)?;
    let v = cfg.potential(manifold)?;
    let basis = build_basis(manifold, cfg.truncation_or(16))?;
    let g = assemble(&v, &basis)?;
    let raw = diagonalize(&g)?;
    let shift = shift_for(raw.eigenvalue(0));
    let s = raw.with_shift(shift);
    out.write_pair("eigenvalues.csv", "eigenvectors.csv", |values, vectors| Ok(s.write_csv(values, vectors)?))?;
    let mut o = Outcome::default();
    let scale = 1.0 + g.max_abs();
    o.check(Check::at_most("max eigen-residual / (1 + max|A|)", s.max_residual(&g) / scale, 1e-8));
    o.check(Check::at_most("orthonormality error", s.orthonormality_error(), 1e-10));
    o.detail("shift", shift)?;
    o.detail("count", s.len())?;
    o.detail("lowest_eigenvalue", s.eigenvalue(0))?;
    o.detail("max_frequency", s.max_frequency())?;
    o.detail("basis", basis.metadata())?;
    Ok(o)
}

fn kato_csv(out: &mut Outputs, name: &str, r: &KatoReport) -> Result<()> {
    let rows: Vec<Vec<String>> = r
        .moduli
        .iter()
        .map(|m| {
            Ok(vec![
                fmt(m.radius),
                fmt(m.value),
                fmt(m.regularized),
                serde_json::to_value(m.status)?.as_str().unwrap_or_default().to_string(),
                fmt(m.center),
            ])
        })
        .collect::<Result<_, serde_json::Error>>()?;
    out.table(name, &["radius", "value", "regularized", "status", "center"], &rows)
}

fn kato_radii(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.params.radii.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3])
}

pub fn kato(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let manifold = cfg.manifold(experiment("kato").default_manifold)?;
    let v = cfg.potential(manifold)?;
    let r = kato_report(&v, manifold, &kato_radii(cfg), &KatoOptions::default(), &KatoThresholds::default())?;
    kato_csv(out, "kato.csv", &r)?;
    let mut o = Outcome::default();
    o.detail("kato", &r)?;
    Ok(o)
}

/// Largest eigenfunction value on a grid refined to log-depth `2^level`.
fn pole_max(n: usize, k: usize, level: u32) -> Result<f64> {
    let grid = QuadratureGrid::zonal_graded(n, &GradedOptions::pole_level(k, level))?;
    let z = grid.zonal().expect("zonal grid");
    Ok(z.ln_pole_distance.iter().map(|&l| eigenfunction_from_ln_distance(n, l)).fold(f64::MIN, f64::max))
}

fn eigenfunction_l2(n: usize, opts: &GradedOptions) -> Result<f64> {
    let grid = QuadratureGrid::zonal_graded(n, opts)?;
    let z = grid.zonal().expect("zonal grid");
    let f: Vec<f64> = z.ln_pole_distance.iter().map(|&l| eigenfunction_from_ln_distance(n, l)).collect();
    Ok(lp_norm(&grid, &f, 2.0)?)
}

pub fn counterexample(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let n = cfg.n.unwrap_or(3);
    let manifold = ModelManifold::sphere_zonal(n)?;
    if let Some(m) = &cfg.manifold {
        if m != "sphere-zonal" {
            bail!("the counterexample lives on sphere-zonal, not {m}");
        }
    }
    let k = cfg.truncation_or(128);
    let mut o = Outcome::default();

    // residual identity at the interior nodes of the working grid
    let basis = build_basis(manifold, k)?;
    let phis = basis.grid().zonal().expect("zonal grid").phi.clone();
    let mut rows = Vec::with_capacity(phis.len());
    let mut worst = 0.0f64;
    for &phi in &phis {
        let (res, lap) = counterexample_residual(n, phi)?;
        let rel = res.abs() / (1.0 + lap.abs());
        worst = worst.max(rel);
        rows.push(vec![
            fmt(phi),
            fmt(counterexample_eigenfunction(n, phi)?),
            fmt(counterexample_potential(n, phi)?),
            fmt(lap),
            fmt(res),
        ]);
    }
    out.table("profile.csv", &["phi", "f", "V", "laplacian_f", "residual"], &rows)?;
    o.check(Check::at_most("max |(−Δ+V)f| / (1+|Δf|)", worst, 1e-8));
    o.detail("residual_max", worst)?;

    // finite L² norm, stable under refinement
    let opts = GradedOptions::for_degree(k);
    let l2 = eigenfunction_l2(n, &opts)?;
    let l2_refined = eigenfunction_l2(n, &opts.refined())?;
    let l2_change = (l2 - l2_refined).abs() / l2_refined;
    o.check(Check::at_most("‖f‖₂ relative change under refinement", l2_change, 1e-2));
    o.detail("f_l2", l2)?;

    // unbounded: the grid maximum keeps growing as nodes approach the poles
    let levels = cfg.params.levels.clone().unwrap_or_else(|| vec![3, 6]);
    let mut growth_rows = Vec::new();
    let mut maxima = Vec::new();
    for &lv in &levels {
        let m = pole_max(n, k, lv)?;
        maxima.push(m);
        growth_rows.push(vec![lv.to_string(), fmt(2f64.powi(lv as i32)), fmt(m)]);
    }
    out.table("pole_growth.csv", &["level", "log_depth", "max_f"], &growth_rows)?;
    if maxima.len() >= 2 {
        let ratio = maxima[maxima.len() - 1] / maxima[0];
        o.check(Check::at_least(
            format!("max f at level {} / level {}", levels[levels.len() - 1], levels[0]),
            ratio,
            2.0,
        ));
    }

    // Kato modulus does not vanish
    let v = Potential::Counterexample { n };
    let kr = kato_report(&v, manifold, &kato_radii(cfg), &KatoOptions::default(), &KatoThresholds::default())?;
    kato_csv(out, "kato.csv", &kr)?;
    o.check(Check::at_least("Kato ratio m(r_min)/m(r_max)", kr.ratio, 0.3));
    o.check(Check::new(
        "Kato verdict",
        if kr.verdict == KatoVerdict::NotInKato { 1.0 } else { 0.0 },
        "not-in-kato",
        kr.verdict == KatoVerdict::NotInKato,
    ));
    o.detail("kato_verdict", kr.verdict)?;
    o.detail("kato_ratio", kr.ratio)?;

    // L^{n/2} finite (n ≥ 3), L^{n/2 + 1/4} divergent
    let half = &kr.ln_half_norm;
    let above = lq_norm(&v, manifold, n as f64 / 2.0 + 0.25)?;
    if n >= 3 {
        o.check(Check::new("‖V‖_{n/2} finite", half.value, "finite", !half.divergent && half.value.is_finite()));
    }
    o.check(Check::new("‖V‖_{n/2+1/4} divergent", above.value, "divergent", above.divergent));
    o.detail("ln_half_norm", half)?;
    o.detail("l_above_norm", &above)?;
    Ok(o)
}

fn ascent(cfg: &ExperimentConfig) -> AscentOptions {
    AscentOptions {
        restarts: cfg.params.restarts.unwrap_or(8),
        seed: cfg.seed,
        ..AscentOptions::default()
    }
}

pub fn projector_norms(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("projector-norms"))?;
    let n = st.manifold.dimension();
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas("projector-norms"));
    let ps = p_list(cfg, n, &[])?;
    let tol = cfg.slope_tolerance(0.1);
    let opts = ascent(cfg);
    let mut rows = Vec::new();
    let mut o = Outcome::default();
    for &p in &ps {
        let norms = lambdas
            .par_iter()
            .map(|&l| projector_norm(&band_projector(&st.spec, l)?, &st.basis, p, &opts))
            .collect::<qlab_core::Result<Vec<_>>>()?;
        for (l, r) in lambdas.iter().zip(&norms) {
            rows.push(vec![fmt(*l), fmt(p), fmt(r.lower), fmt(r.upper), r.rank.to_string(), r.stagnated.to_string()]);
        }
        let report = ExperimentReport::new(format!("projector-p{}", p_tag(p)), lambdas.clone(), norms.iter().map(|r| r.lower).collect())
            .with_column("upper", norms.iter().map(|r| r.upper).collect())
            .note(format!("potential {}, shift {}", st.potential.spec(), st.spec.shift()))
            .judge(
                Some(Expectation::Near {
                    target: sigma(p, n)?,
                    tolerance: tol,
                }),
                cfg.residual_cap(),
            )?;
        out.report_csv(&format!("fit_p{}.csv", p_tag(p)), &report)?;
        o.report(report);
    }
    out.table("projector_norms.csv", &["lambda", "p", "lower", "upper", "rank", "stagnated"], &rows)?;
    o.detail("shift", st.spec.shift())?;
    Ok(o)
}

pub fn quasimode(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("quasimode"))?;
    let n = st.manifold.dimension();
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas("quasimode"));
    let ps = p_list(cfg, n, &[])?;
    let tol = cfg.slope_tolerance(0.1);
    let freqs = st.spec.frequencies();
    let src = source_point(&st.basis);
    let mut o = Outcome::default();
    for &p in &ps {
        let mut point = Vec::with_capacity(lambdas.len());
        let mut eigen = Vec::with_capacity(lambdas.len());
        for &l in &lambdas {
            let u = point_kernel(&st.spec, &st.basis, &src, |x| if x >= l && x < l + 1.0 { 1.0 } else { 0.0 })?;
            point.push(quasimode_ratio(&u, &st.spec, &st.basis, l, p)?);
            let i = (0..freqs.len())
                .min_by(|&a, &b| (freqs[a] - l).abs().total_cmp(&(freqs[b] - l).abs()))
                .expect("nonempty spectrum");
            eigen.push(quasimode_ratio(&st.spec.vector(i), &st.spec, &st.basis, l, p)?);
        }
        let best: Vec<f64> = point.iter().zip(&eigen).map(|(a, b)| a.max(*b)).collect();
        let report = ExperimentReport::new(format!("quasimode-p{}", p_tag(p)), lambdas.clone(), best)
            .with_column("band_point_mass", point)
            .with_column("eigenfunction", eigen)
            .note("value is the larger ratio of the two test functions")
            .judge(Some(Expectation::AtMost { max: tol }), cfg.residual_cap())?;
        out.report_csv(&format!("quasimode_p{}.csv", p_tag(p)), &report)?;
        o.report(report);
    }
    Ok(o)
}

pub fn weyl(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("weyl"))?;
    let n = st.manifold.dimension();
    let mus = cfg.params.mu.clone().unwrap_or_else(|| qlab_core::estimators::geometric_grid(10.0, 40.0));
    let x0 = source_point(&st.basis);
    // flat density: |B^n| μ^n / (2π)^n
    let ball = sphere_volume(n - 1) / n as f64;
    let mut sums = Vec::with_capacity(mus.len());
    let mut ratios = Vec::with_capacity(mus.len());
    for &mu in &mus {
        let s = local_weyl(&st.spec, &st.basis, &x0, mu)?;
        sums.push(s);
        ratios.push(s / (ball * mu.powi(n as i32) / (2.0 * std::f64::consts::PI).powi(n as i32)));
    }
    let report = ExperimentReport::new("local-weyl", mus, sums)
        .with_column("ratio_to_flat_density", ratios.clone())
        .judge(
            Some(Expectation::Near {
                target: n as f64,
                tolerance: cfg.slope_tolerance(0.1),
            }),
            cfg.residual_cap(),
        )?;
    out.report_csv("weyl.csv", &report)?;
    let mut o = Outcome::default();
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    o.check(Check::within("min ratio to flat density", lo, 0.9, 1.1));
    o.check(Check::within("max ratio to flat density", hi, 0.9, 1.1));
    o.report(report);
    Ok(o)
}

pub fn divergent_quasimode(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let n = cfg.n.unwrap_or(4);
    let eps = cfg.params.epsilon.unwrap_or(0.25);
    let (k_min, k_max) = (cfg.params.k_min.unwrap_or(4), cfg.params.k_max.unwrap_or(14));
    let q = quasimode_sums(n, eps, k_min, k_max)?;
    let rows: Vec<Vec<String>> = q
        .ks
        .iter()
        .zip(q.summands.iter().zip(&q.partial_sums))
        .map(|(k, (s, p))| vec![k.to_string(), fmt(*s), fmt(*p)])
        .collect();
    out.table("partial_sums.csv", &["k", "summand", "partial_sum"], &rows)?;
    let mut o = Outcome::default();
    // n = 4 sums grow like k^{1/2−ε}; n ≥ 5 grows geometrically
    let min_growth = if n == 4 { 0.6 } else { 3.0 };
    o.check(Check::at_least("partial-sum growth S(k_max)/S(k_min) − 1", q.growth, min_growth));
    o.check(Check::within("λ^{-1}‖(−Δ−(λ+i)²)u‖₂ + ‖u‖₂", q.normalization, 0.5, 2.0));
    o.detail("quasimode", &q)?;
    Ok(o)
}

pub fn resolvent_probe(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let n = cfg.n.unwrap_or(3);
    if let Some(m) = &cfg.manifold {
        if m != "torus" {
            bail!("the resolvent probe runs on the torus, not {m}");
        }
    }
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas("resolvent-probe"));
    let p = cfg.p.as_ref().and_then(|p| p.first().copied());
    let report = uniform_resolvent_probe(n, &lambdas, p, cfg.slope_tolerance(0.1))?;
    out.report_csv("resolvent.csv", &report)?;
    let mut o = Outcome::default();
    o.report(report);
    Ok(o)
}
