//! Heat, wave, Bochner-Riesz, square function, multipliers, Strichartz.

use anyhow::{bail, Result};
use num_complex::Complex64;

use qlab_core::dynamics::{
    band_bound_probe, besov_check, br_norm_probe, cone_leakage, heat_smoothing_probe, hormander_multiplier, norm_equivalence_probe,
    source_point, strichartz_probe, BetaFamily, Battery,
};
use qlab_core::geometry::lp_norm;
use qlab_core::estimators::AscentOptions;

use super::{default_ks, default_lambdas, default_times, experiment, p_list, p_tag, Setup};
use crate::config::ExperimentConfig;
use crate::output::{fmt, Check, Outcome, Outputs};

pub fn bochner_riesz(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("bochner-riesz"))?;
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas("bochner-riesz"));
    let ps = p_list(cfg, st.manifold.dimension(), &[1.0])?;
    let deltas = cfg.params.deltas.clone().unwrap_or_else(|| vec![0.6, 0.3]);
    let mut o = Outcome::default();
    for &p in &ps {
        for &d in &deltas {
            let mut r = br_norm_probe(&st.spec, &st.basis, &lambdas, d, p)?;
            r.name = format!("{} p={} delta={}", r.name, p_tag(p), p_tag(d));
            out.report_csv(&format!("bochner_riesz_p{}_delta{}.csv", p_tag(p), p_tag(d)), &r)?;
            o.report(r);
        }
    }
    o.detail("shift", st.spec.shift())?;
    Ok(o)
}

/// Named battery from `params.battery`, or point masses plus seeded
/// random band-limited functions.
fn battery(cfg: &ExperimentConfig, st: &Setup) -> Result<Vec<(String, Vec<f64>)>> {
    let presets = match cfg.params.battery.as_deref() {
        Some(name) => vec![Battery::preset(name)?],
        None => vec![Battery::PointConcentrated, Battery::RandomBand { count: 4, seed: 0 }],
    };
    let mut out = Vec::new();
    for b in presets {
        let b = match b {
            Battery::RandomBand { count, .. } => Battery::RandomBand { count, seed: cfg.seed },
            other => other,
        };
        out.extend(b.functions(&st.spec, &st.basis)?);
    }
    Ok(out)
}

pub fn square_function(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("square-function"))?;
    let rs = p_list(cfg, st.manifold.dimension(), &[4.0 / 3.0, 2.0, 4.0])?;
    let fns = battery(cfg, &st)?;
    let family = BetaFamily::dyadic(st.spec.max_frequency());
    let (sq_lo, sq_hi) = family.square_sum_range(&st.spec.frequencies());
    let mut rows = Vec::new();
    let mut o = Outcome::default();
    let mut bands = Vec::new();
    for &r in &rs {
        let band = norm_equivalence_probe(&st.spec, &st.basis, r, &fns, &family)?;
        for (name, ratio) in &band.ratios {
            rows.push(vec![fmt(r), name.clone(), fmt(*ratio)]);
        }
        if r == 2.0 {
            // Σβ_j² ∈ [sq_lo, sq_hi] pins the L² ratio
            o.check(Check::within("r = 2 min ratio", band.min, sq_lo.sqrt() - 1e-12, sq_hi.sqrt() + 1e-12));
            o.check(Check::within("r = 2 max ratio", band.max, sq_lo.sqrt() - 1e-12, sq_hi.sqrt() + 1e-12));
        }
        o.check(Check::new(
            format!("r = {} band positive and finite", p_tag(r)),
            band.max / band.min,
            "0 < min <= max < inf",
            band.min > 0.0 && band.max.is_finite(),
        ));
        bands.push(band);
    }
    out.table("square_function.csv", &["r", "function", "ratio"], &rows)?;
    o.detail("bands", &bands)?;
    o.detail("square_sum_range", (sq_lo, sq_hi))?;
    o.detail("levels", family.len())?;
    Ok(o)
}

fn multiplier_fn(kind: &str, gamma: f64) -> Result<Box<dyn Fn(f64) -> Complex64 + Send + Sync>> {
    Ok(match kind {
        "imaginary-power" => Box::new(move |l: f64| Complex64::new(0.0, gamma * l.ln()).exp()),
        "sharp-cutoff" => Box::new(move |l: f64| Complex64::new(if l <= gamma { 1.0 } else { 0.0 }, 0.0)),
        "smooth-cutoff" => Box::new(move |l: f64| Complex64::new((-(l / gamma).powi(2)).exp(), 0.0)),
        other => bail!("unknown multiplier {other:?}; expected imaginary-power, sharp-cutoff or smooth-cutoff"),
    })
}

pub fn multiplier(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("multiplier"))?;
    let kind = cfg.params.multiplier.clone().unwrap_or_else(|| "imaginary-power".into());
    let gamma = cfg.params.gamma.unwrap_or(if kind == "imaginary-power" { 1.0 } else { 5.0 });
    let s = cfg.params.s.unwrap_or(1.0);
    let windows = cfg.params.windows.unwrap_or(4);
    let resolutions = cfg.params.resolutions.clone().unwrap_or_else(|| vec![256, 1024, 4096]);
    if resolutions.len() < 2 {
        bail!("params.resolutions needs at least two entries");
    }
    let m = multiplier_fn(&kind, gamma)?;
    let mut o = Outcome::default();

    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &res in &resolutions {
        let v = besov_check(&m, s, windows, res)?;
        rows.push(vec![kind.clone(), res.to_string(), fmt(v)]);
        values.push(v);
    }
    out.table("besov.csv", &["multiplier", "resolution", "windowed_norm"], &rows)?;
    let last = values.len() - 1;
    let growth = values[last] / values[last - 1];
    if kind == "sharp-cutoff" {
        // a jump violates the condition once s ≥ 1/2: the norm keeps growing
        o.check(Check::at_least("windowed norm growth per refinement (jump)", growth, 1.5));
    } else {
        o.check(Check::at_most("windowed norm change per refinement", (growth - 1.0).abs(), 1e-6));
    }

    let op = hormander_multiplier(&st.spec, &m, kind.clone())?;
    let l2 = op.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if kind == "imaginary-power" {
        o.check(Check::at_most("| ‖m(P)‖_{2→2} − 1 |", (l2 - 1.0).abs(), 1e-12));
    }
    let ps = p_list(cfg, st.manifold.dimension(), &[2.0, 4.0])?;
    let mut act = Vec::new();
    for (name, f) in battery(cfg, &st)? {
        let g = st.basis.synthesize(&f)?;
        let mg = st.basis.synthesize_complex(&op.apply_real_coeffs(&f)?)?;
        for &p in &ps {
            let ratio = lp_norm(st.basis.grid(), &mg, p)? / lp_norm(st.basis.grid(), &g, p)?;
            act.push(vec![name.clone(), fmt(p), fmt(ratio)]);
        }
    }
    out.table("action.csv", &["function", "p", "ratio"], &act)?;
    o.detail("l2_norm", l2)?;
    o.detail("multiplier", &kind)?;
    Ok(o)
}

pub fn heat(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("heat"))?;
    let times = cfg.params.times.clone().unwrap_or_else(default_times);
    let r = heat_smoothing_probe(&st.spec, &st.basis, &times, cfg.slope_tolerance(0.1))?;
    out.report_csv("heat.csv", &r)?;
    let mut o = Outcome::default();
    o.report(r);
    o.detail("shift", st.spec.shift())?;
    Ok(o)
}

pub fn wave_speed(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let exp = experiment("wave-speed");
    let manifold = cfg.manifold(exp.default_manifold)?;
    let potential = cfg.potential(manifold)?;
    let ks = cfg.params.truncations.clone().unwrap_or_else(|| vec![cfg.truncation_or(64)]);
    let t = cfg.params.t.unwrap_or(0.5);
    let mut rows = Vec::new();
    let mut leak = Vec::new();
    for &k in &ks {
        let st = Setup::at(manifold, potential.clone(), k)?;
        let l = cone_leakage(&st.spec, &st.basis, &source_point(&st.basis), t, cfg.params.scale)?;
        rows.push(vec![k.to_string(), fmt(t), fmt(st.spec.max_frequency()), fmt(l)]);
        leak.push(l);
    }
    out.table("wave_speed.csv", &["K", "t", "lambda_max", "leakage"], &rows)?;
    let mut o = Outcome::default();
    o.check(Check::at_most(
        format!("cone leakage at K = {}", ks[ks.len() - 1]),
        leak[leak.len() - 1],
        1e-3,
    ));
    if leak.len() > 1 {
        let worst = leak.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
        o.check(Check::new(
            "largest leakage increase between successive truncations",
            worst,
            "< 0 (monotone decrease)",
            worst < 0.0,
        ));
    }
    o.detail("leakage", &leak)?;
    Ok(o)
}

pub fn strichartz(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = Setup::build(cfg, experiment("strichartz"))?;
    let ks = cfg.params.ks.clone().unwrap_or_else(default_ks);
    let tol = cfg.slope_tolerance(0.1);
    let ladder = strichartz_probe(&st.spec, &st.basis, &ks, tol)?;
    out.report_csv("strichartz.csv", &ladder)?;
    let bands: Vec<f64> = ks.clone();
    let opts = AscentOptions {
        seed: cfg.seed,
        ..AscentOptions::default()
    };
    let band = band_bound_probe(&st.spec, &st.basis, &bands, &opts, tol)?;
    out.report_csv("band_bound.csv", &band)?;
    let mut o = Outcome::default();
    o.report(ladder);
    o.report(band);
    o.detail("shift", st.spec.shift())?;
    Ok(o)
}
