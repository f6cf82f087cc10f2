//! Lower bounds for `‖(−Δ − (λ+i)²)^{−1}‖_{L^p → L^{p'}}` on the flat torus,
//! where the resolvent is diagonal in the Fourier basis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::estimators::report::{geometric_grid, Expectation, ExperimentReport};

/// The exponent `p = 2n/(n+2)`, for which `n(1/p − 1/p') = 2`.
pub fn resolvent_exponent(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain(format!("the uniform resolvent pair needs n >= 3, got {n}")));
    }
    Ok(2.0 * n as f64 / (n as f64 + 2.0))
}

/// A trigonometric polynomial on `T^n` given by its coefficients on the
/// cube `|m|_∞ ≤ cap`.
struct TrigPoly {
    n: usize,
    cap: i64,
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    fn from_fn(n: usize, cap: i64, f: impl Fn(&[i64]) -> Complex64) -> Self {
        let side = (2 * cap + 1) as usize;
        let total = side.pow(n as u32);
        let mut m = vec![0i64; n];
        let coeffs = (0..total)
            .map(|mut idx| {
                for mj in m.iter_mut() {
                    *mj = (idx % side) as i64 - cap;
                    idx /= side;
                }
                f(&m)
            })
            .collect();
        TrigPoly { n, cap, coeffs }
    }

    fn map(&self, f: impl Fn(&[i64], Complex64) -> Complex64) -> Self {
        let side = (2 * self.cap + 1) as usize;
        let mut m = vec![0i64; self.n];
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mut idx, &c)| {
                for mj in m.iter_mut() {
                    *mj = (idx % side) as i64 - self.cap;
                    idx /= side;
                }
                f(&m, c)
            })
            .collect();
        TrigPoly {
            n: self.n,
            cap: self.cap,
            coeffs,
        }
    }

    /// Values on the uniform grid with `per_axis` points, for the
    /// orthonormal modes `e^{im·x} / (2π)^{n/2}`.
    fn synthesize(&self, per_axis: usize) -> Vec<Complex64> {
        let side = (2 * self.cap + 1) as usize;
        let total = per_axis.pow(self.n as u32);
        let mut a = vec![Complex64::new(0.0, 0.0); total];
        for (mut idx, &c) in self.coeffs.iter().enumerate() {
            let mut flat = 0usize;
            let mut stride = 1usize;
            for _ in 0..self.n {
                let mj = (idx % side) as i64 - self.cap;
                idx /= side;
                flat += mj.rem_euclid(per_axis as i64) as usize * stride;
                stride *= per_axis;
            }
            a[flat] += c;
        }
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(per_axis);
        let mut line = vec![Complex64::new(0.0, 0.0); per_axis];
        let mut stride = 1usize;
        for _ in 0..self.n {
            for start in 0..total {
                // first element of each line along this axis
                if (start / stride) % per_axis != 0 {
                    continue;
                }
                for (j, l) in line.iter_mut().enumerate() {
                    *l = a[start + j * stride];
                }
                fft.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    a[start + j * stride] = *l;
                }
            }
            stride *= per_axis;
        }
        let scale = (2.0 * PI).powf(-(self.n as f64) / 2.0);
        a.iter_mut().for_each(|v| *v *= scale);
        a
    }
}

fn grid_lp(values: &[Complex64], n: usize, per_axis: usize, p: f64) -> f64 {
    let w = (2.0 * PI / per_axis as f64).powi(n as i32);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.norm() / top).powf(p)).sum();
    top * (w * s).powf(1.0 / p)
}

/// Names of the test functions in the probe battery.
pub const RESOLVENT_BATTERY: [&str; 3] = ["band", "point", "mode"];

/// `‖R f‖_{p'} / ‖f‖_p` for each battery member at one `λ`.
pub fn resolvent_ratios(n: usize, lambda: f64, p: f64) -> Result<[f64; 3]> {
    let q = p / (p - 1.0);
    let cap = lambda.ceil() as i64 + 2;
    let per_axis = ((5 * cap as usize) / 2 + 2) & !1;
    let z = Complex64::new(lambda, 1.0).powi(2);
    let norm2 = |m: &[i64]| m.iter().map(|x| x * x).sum::<i64>() as f64;
    let band = TrigPoly::from_fn(n, cap, |m| {
        if (norm2(m).sqrt() - lambda).abs() <= 0.5 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let point = TrigPoly::from_fn(n, cap, |m| {
        if norm2(m) <= lambda * lambda {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let k = lambda.round() as i64;
    let mode = TrigPoly::from_fn(n, cap, |m| {
        if m[0] == k && m[1..].iter().all(|&x| x == 0) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut out = [0.0; 3];
    for (slot, f) in out.iter_mut().zip([band, point, mode]) {
        let rf = f.map(|m, c| c / (Complex64::new(norm2(m), 0.0) - z));
        let num = grid_lp(&rf.synthesize(per_axis), n, per_axis, q);
        let den = grid_lp(&f.synthesize(per_axis), n, per_axis, p);
        *slot = num / den;
    }
    Ok(out)
}

/// Probe over `λ`: the best lower bound per `λ` and a no-growth verdict.
pub fn uniform_resolvent_probe(n: usize, lambdas: &[f64], p: Option<f64>, tolerance: f64) -> Result<ExperimentReport> {
    let pc = resolvent_exponent(n)?;
    let p = p.unwrap_or(pc);
    let q = p / (p - 1.0);
    if !((n as f64 * (1.0 / p - 1.0 / q) - 2.0).abs() < 1e-12) {
        return Err(Error::config(format!(
            "p = {p} violates n(1/p − 1/p') = 2; the pair for n = {n} is p = {pc}"
        )));
    }
    let rows: Vec<[f64; 3]> = lambdas.iter().map(|&l| resolvent_ratios(n, l, p)).collect::<Result<_>>()?;
    let best: Vec<f64> = rows.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).collect();
    let mut report = ExperimentReport::new("resolvent-probe", lambdas.to_vec(), best);
    for (j, name) in RESOLVENT_BATTERY.iter().enumerate() {
        report = report.with_column(*name, rows.iter().map(|r| r[j]).collect());
    }
    report
        .note(format!("n = {n}, p = {p}, p' = {q}"))
        .judge(
            Some(Expectation::Near {
                target: 0.0,
                tolerance,
            }),
            0.25,
        )
}

/// Default grid `λ ∈ [4, 64]`.
pub fn default_resolvent_grid() -> Vec<f64> {
    geometric_grid(4.0, 64.0)
}
