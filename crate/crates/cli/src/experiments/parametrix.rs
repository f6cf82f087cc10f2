//! Flat parametrix kernels.

use std::f64::consts::PI;

use anyhow::Result;
use num_complex::Complex64;

use qlab_core::estimators::geometric_grid;
use qlab_core::parametrix::{
    bessel_k, kernel_l6_check, kernel_l6_norm, kernel_regime_check, kernel_table, remainder_scale_check, write_kernel_csv,
    BesselEvaluator, HadamardKernel, RemainderOptions,
};

use super::default_lambdas;
use crate::config::ExperimentConfig;
use crate::output::{fmt, Check, Outcome, Outputs};

/// Arguments for the half-order identity: both sides of `|z| = 1`, on and
/// off the real axis.
fn half_order_points() -> Vec<Complex64> {
    let mut z = Vec::new();
    for r in [0.05, 0.3, 0.8, 1.0, 1.25, 3.0, 10.0, 40.0] {
        for a in [-1.2f64, -0.6, 0.0, 0.6, 1.2] {
            z.push(Complex64::from_polar(r, a));
        }
    }
    z
}

pub fn parametrix(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let mut o = Outcome::default();

    // K_{1/2}(z) = √(π/2z) e^{−z}
    let eval = BesselEvaluator::new(0.5)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for z in half_order_points() {
        let got = bessel_k(0.5, z)?;
        let want = (PI / (2.0 * z)).sqrt() * (-z).exp();
        worst = worst.max((got - want).norm() / want.norm());
        rows.push(vec![
            fmt(z.re),
            fmt(z.im),
            fmt(got.re),
            fmt(got.im),
            fmt(want.re),
            fmt(want.im),
            format!("{:?}", eval.method_for(z)).to_lowercase(),
        ]);
    }
    out.table("bessel_half_order.csv", &["re_z", "im_z", "re", "im", "closed_re", "closed_im", "method"], &rows)?;
    o.check(Check::at_most("K_{1/2} relative error", worst, 1e-10));

    // n = 3, ν = 0 against e^{i(λ+i)r}/(4πr)
    let radii = geometric_grid(0.05, 1.0);
    let table = kernel_table(3, 0, &radii, &[5.0, 50.0])?;
    let closed = table
        .iter()
        .map(|s| {
            let want = (Complex64::i() * Complex64::new(s.lambda, 1.0) * s.r).exp() / (4.0 * PI * s.r);
            (Complex64::new(s.re, s.im) - want).norm() / want.norm()
        })
        .fold(0.0, f64::max);
    out.write("kernel_n3.csv", |w| Ok(write_kernel_csv(&table, w)?))?;
    o.check(Check::at_most("n = 3 F₀ closed-form relative error", closed, 1e-8));

    // size regimes
    let near_lambda = cfg.params.near_lambda.unwrap_or(64.0);
    let far_r = cfg.params.far_r.unwrap_or(0.3);
    let far = geometric_grid(8.0, 256.0);
    for n in [2usize, 3] {
        let c = kernel_regime_check(n, near_lambda, far_r, &far)?;
        out.report_csv(&format!("regime_near_n{n}.csv"), &c.near)?;
        out.report_csv(&format!("regime_far_n{n}.csv"), &c.far)?;
        if n == 2 {
            let top = c.near.values.iter().cloned().fold(0.0, f64::max);
            o.detail("n2_near_log_ratio_max", top)?;
        }
        o.report(c.near);
        o.report(c.far);
    }

    // (−Δ_radial − (λ+i)²) F₁ = F₀
    let mut rec = Vec::new();
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        let f0 = HadamardKernel::new(n, 0, 5.0)?;
        let f1 = HadamardKernel::new(n, 1, 5.0)?;
        for j in 0..=10 {
            let r = 0.1 * 10f64.powf(j as f64 / 10.0);
            let res = f1.recursion_residual(r, &f0)?;
            worst = worst.max(res);
            rec.push(vec![n.to_string(), fmt(r), fmt(res)]);
        }
    }
    out.table("recursion.csv", &["n", "r", "relative_residual"], &rec)?;
    o.check(Check::at_most("F₁ → F₀ recursion residual", worst, 1e-4));

    // n = 2 kernel L⁶ bound
    let delta = cfg.params.delta.unwrap_or(0.5);
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas("parametrix"));
    let l6 = kernel_l6_check(&lambdas, delta)?;
    out.report_csv("kernel_l6.csv", &l6)?;
    o.report(l6);
    let top = lambdas.iter().cloned().fold(0.0, f64::max);
    let a = kernel_l6_norm(top, delta)?;
    let b = kernel_l6_norm(top, 2.0 * delta)?;
    o.check(Check::at_most(format!("L⁶ change when doubling δ at λ = {top}"), (a - b).abs() / a, 1e-2));

    if cfg.params.remainder.unwrap_or(true) {
        let n = cfg.n.unwrap_or(2);
        let ls = [16.0, 32.0, 64.0, 128.0];
        let r = remainder_scale_check(&ls, n, RemainderOptions::default())?;
        out.report_csv(&format!("remainder_n{n}.csv"), &r)?;
        let amp = (n as f64 - 1.0) / 2.0;
        let control = qlab_core::estimators::fit_exponent(&ls, &r.columns[0].1)?;
        o.check(Check::at_most("phase-removed slope − (n−1)/2", (control.slope - amp).abs(), 1e-9));
        if n == 2 {
            let s = r.slope().unwrap_or(f64::NAN);
            o.check(Check::new("remainder slope with phase", s, format!("< {amp}"), s < amp));
        }
        o.report(r);
    }
    Ok(o)
}
