//! The flat radial kernels
//! `F_ν(r, λ) = ν! (2π)^{−n} ∫ e^{ix·ξ} (|ξ|² − (λ+i)²)^{−ν−1} dξ`, `|x| = r`.
//!
//! In Bessel form `F_ν = c_ν r^{−n/2+ν+1} z^{n/4−(ν+1)/2} K_{n/2−ν−1}(√z r)`
//! with `z = −(λ+i)²`, `√z = 1 − iλ` (the root with positive real part) and
//! `c_ν = (2π)^{−n/2} 2^{−ν}`; for `n = 3`, `F_0 = e^{i(λ+i)r} / (4πr)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parametrix::bessel::BesselEvaluator;

/// Largest `ν` accepted: the parametrix only ever needs a few terms past
/// `n/2`, and higher orders only stress the Bessel quadrature.
pub const MAX_NU: usize = 16;

#[derive(Debug, Clone)]
pub struct HadamardKernel {
    pub n: usize,
    pub nu: usize,
    pub lambda: f64,
    sqrt_z: Complex64,
    prefactor: Complex64,
    bessel: BesselEvaluator,
}

impl HadamardKernel {
    pub fn new(n: usize, nu: usize, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("kernel dimension must be >= 2, got {n}")));
        }
        if nu > MAX_NU {
            return Err(Error::domain(format!("ν must be <= {MAX_NU}, got {nu}")));
        }
        if !(lambda >= 1.0) {
            return Err(Error::domain(format!("λ must be >= 1, got {lambda}")));
        }
        let sqrt_z = Complex64::new(1.0, -lambda);
        let m = n as f64 / 2.0 - nu as f64 - 1.0;
        let c_nu = (2.0 * PI).powf(-(n as f64) / 2.0) * 2f64.powi(-(nu as i32));
        // z^{n/4 − (ν+1)/2} = (√z)^{m}, valid since arg √z ∈ (−π/2, π/2)
        let prefactor = c_nu * sqrt_z.powf(m);
        Ok(HadamardKernel {
            n,
            nu,
            lambda,
            sqrt_z,
            prefactor,
            bessel: BesselEvaluator::new(m)?,
        })
    }

    /// `√z = √(−(λ+i)²)` with positive real part.
    pub fn sqrt_z(&self) -> Complex64 {
        self.sqrt_z
    }

    pub fn eval(&self, r: f64) -> Result<Complex64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("kernel radius must be positive, got {r}")));
        }
        let m = self.n as f64 / 2.0 - self.nu as f64 - 1.0;
        Ok(self.prefactor * r.powf(-m) * self.bessel.eval(self.sqrt_z * r)?)
    }

    /// `(−Δ_radial + z) F_ν − ν F_{ν−1}` relative to `|ν F_{ν−1}|` at `r`,
    /// with `Δ_radial = ∂_r² + (n−1)/r ∂_r` by centered differences.
    pub fn recursion_residual(&self, r: f64, lower: &HadamardKernel) -> Result<f64> {
        if self.nu == 0 || lower.nu + 1 != self.nu || lower.n != self.n || lower.lambda != self.lambda {
            return Err(Error::domain("recursion needs F_ν and F_{ν−1} at the same n and λ"));
        }
        let h = 1e-3 * r.min(1.0 / self.lambda);
        let (fm, f0, fp) = (self.eval(r - h)?, self.eval(r)?, self.eval(r + h)?);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        let d1 = (fp - fm) / (2.0 * h);
        let lap = d2 + d1 * ((self.n - 1) as f64 / r);
        let z = self.sqrt_z * self.sqrt_z;
        let rhs = lower.eval(r)? * self.nu as f64;
        Ok((-lap + z * f0 - rhs).norm() / rhs.norm())
    }
}

/// `F_ν(r, λ)` in dimension `n`.
pub fn f_nu(n: usize, nu: usize, r: f64, lambda: f64) -> Result<Complex64> {
    HadamardKernel::new(n, nu, lambda)?.eval(r)
}

/// A row of a kernel table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub r: f64,
    pub lambda: f64,
    pub re: f64,
    pub im: f64,
}

/// `F_ν` on the product of a radius and a frequency grid.
pub fn kernel_table(n: usize, nu: usize, radii: &[f64], lambdas: &[f64]) -> Result<Vec<KernelSample>> {
    let mut out = Vec::with_capacity(radii.len() * lambdas.len());
    for &lambda in lambdas {
        let k = HadamardKernel::new(n, nu, lambda)?;
        for &r in radii {
            let v = k.eval(r)?;
            out.push(KernelSample {
                r,
                lambda,
                re: v.re,
                im: v.im,
            });
        }
    }
    Ok(out)
}

/// CSV with columns `r, lambda, re, im`.
pub fn write_kernel_csv<W: Write>(rows: &[KernelSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "lambda", "re", "im"])?;
    for s in rows {
        w.write_record([
            format!("{:e}", s.r),
            format!("{:e}", s.lambda),
            format!("{:e}", s.re),
            format!("{:e}", s.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_closed_form() {
        let v = f_nu(3, 0, 1.0, 10.0).unwrap();
        assert!((v.norm() - (-1.0f64).exp() / (4.0 * PI)).abs() < 1e-12);
        assert!((v.norm() - 0.029276).abs() < 5e-6);
        // phase e^{10i}
        let phase = v / v.norm();
        assert!((phase - Complex64::from_polar(1.0, 10.0)).norm() < 1e-10);
        for lambda in [5.0, 50.0] {
            let k = HadamardKernel::new(3, 0, lambda).unwrap();
            for j in 0..=20 {
                let r = 0.05 * 20f64.powf(j as f64 / 20.0);
                let want = (Complex64::new(0.0, 1.0) * Complex64::new(lambda, 1.0) * r).exp() / (4.0 * PI * r);
                let got = k.eval(r).unwrap();
                assert!((got - want).norm() < 1e-8 * want.norm(), "λ={lambda} r={r}");
            }
        }
    }

    #[test]
    fn root_has_positive_real_part() {
        for l in [1.0, 7.5, 300.0] {
            let k = HadamardKernel::new(2, 0, l).unwrap();
            let s = k.sqrt_z();
            assert!(s.re > 0.0);
            let z = -Complex64::new(l, 1.0).powi(2);
            assert!((s * s - z).norm() < 1e-12 * z.norm());
        }
    }

    #[test]
    fn recursion_lowers_the_order() {
        for (n, lambda) in [(3, 5.0), (2, 4.0), (4, 3.0)] {
            let f0 = HadamardKernel::new(n, 0, lambda).unwrap();
            let f1 = HadamardKernel::new(n, 1, lambda).unwrap();
            for j in 0..=6 {
                let r = 0.1 * 10f64.powf(j as f64 / 6.0);
                let res = f1.recursion_residual(r, &f0).unwrap();
                assert!(res <= 1e-4, "n={n} r={r}: {res}");
            }
        }
    }

    #[test]
    fn errors_and_csv() {
        assert!(f_nu(3, 0, 0.0, 2.0).is_err());
        assert!(f_nu(3, 0, 1.0, 0.5).is_err());
        let rows = kernel_table(3, 0, &[0.5, 1.0], &[2.0]).unwrap();
        let mut buf = Vec::new();
        write_kernel_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,lambda,re,im\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
