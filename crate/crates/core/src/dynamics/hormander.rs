//! Hörmander-type multipliers `m(P)` and a numerical check of the windowed
//! Sobolev condition `sup_μ ‖β(·) m(μ·)‖_{H^s(ℝ)} < ∞`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dyadic::lp_bump;
use crate::error::{Error, Result};
use crate::operator::{multiplier_complex, MultiplierOperator, SpectralDecomposition};

/// `m(P)` for a multiplier bounded on the spectrum.
pub fn hormander_multiplier(
    spec: &Arc<SpectralDecomposition>,
    m: impl Fn(f64) -> Complex64,
    label: impl Into<String>,
) -> Result<MultiplierOperator> {
    multiplier_complex(spec, m, label)
}

/// `sup_{j=0..windows} ‖β(ξ) m(2^j ξ)‖_{H^s}`, each window sampled at
/// `resolution` points on the support of `β` and measured through the
/// Fourier side, `∫(1+k²)^s |ĝ(k)|² dk / 2π`.
///
/// For smooth `m` the value is stable as `resolution` grows; a jump inside
/// a window makes it grow without bound once `s ≥ 1/2`.
pub fn besov_check(m: impl Fn(f64) -> Complex64, s: f64, windows: usize, resolution: usize) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!("Sobolev order must be >= 0, got {s}")));
    }
    if resolution < 16 {
        return Err(Error::domain(format!("window resolution must be >= 16, got {resolution}")));
    }
    // β lives on [0.6, 1.8]; sample [0, 2.4) and zero-pad by 4 so the
    // periodic extension does not wrap the window onto itself
    let h = 2.4 / resolution as f64;
    let len = 4 * resolution;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let dk = 2.0 * PI / (len as f64 * h);
    let mut sup = 0.0f64;
    for j in 0..=windows {
        let mu = 2f64.powi(j as i32);
        let mut buf: Vec<Complex64> = (0..len)
            .map(|i| {
                let x = i as f64 * h;
                let b = lp_bump(x);
                if i < resolution && b != 0.0 {
                    m(mu * x) * b
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        if let Some(i) = buf.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("multiplier not finite at {}", mu * i as f64 * h)));
        }
        fft.process(&mut buf);
        let norm2: f64 = buf
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = if i <= len / 2 { i as f64 } else { i as f64 - len as f64 } * dk;
                (1.0 + k * k).powf(s) * (v * h).norm_sqr()
            })
            .sum::<f64>()
            * dk
            / (2.0 * PI);
        sup = sup.max(norm2.sqrt());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::{assemble, diagonalize};
    use crate::orthopoly::Rule1d;
    use crate::potentials::Potential;

    fn one(_: f64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn identity_multiplier() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 6).unwrap();
        let s = Arc::new(diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap());
        let op = hormander_multiplier(&s, one, "1").unwrap();
        let f = vec![0.3, -1.0, 2.0, 0.0, 0.5, 0.1, 0.2];
        let g = op.apply_real_coeffs(&f).unwrap();
        assert!(g.iter().zip(&f).all(|(a, b)| (a.re - b).abs() < 1e-14 && a.im == 0.0));
        assert!(besov_check(one, 2.0, 6, 256).unwrap().is_finite());
    }

    #[test]
    fn constant_window_matches_quadrature() {
        // oracle: for s = 0 the H^0 norm is the L² norm of β, by Parseval
        let q = Rule1d::composite(&[0.6, 0.9, 1.2, 1.5, 1.8], 40).unwrap();
        let want = q.integrate(|x| lp_bump(x).powi(2)).sqrt();
        let got = besov_check(one, 0.0, 0, 4096).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
        // s = 1 adds ‖β'‖², estimated by difference quotients
        let h = 1e-5;
        let d = q.integrate(|x| ((lp_bump(x + h) - lp_bump(x - h)) / (2.0 * h)).powi(2));
        let want1 = (want * want + d).sqrt();
        let got1 = besov_check(one, 1.0, 0, 4096).unwrap();
        assert!((got1 - want1).abs() < 1e-4 * want1, "{got1} vs {want1}");
    }

    #[test]
    fn imaginary_power_is_admissible_and_unitary() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 8).unwrap();
        let s = Arc::new(diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap().with_shift(1));
        let m = |l: f64| Complex64::new(0.0, l.ln()).exp();
        let op = hormander_multiplier(&s, m, "P^i").unwrap();
        assert!(op.coefficients().iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));
        let a = besov_check(m, 3.0, 10, 1024).unwrap();
        let c = besov_check(m, 3.0, 10, 4096).unwrap();
        assert!((a - c).abs() < 1e-6 * c);
    }

    #[test]
    fn sharp_cutoff_fails_the_condition() {
        let cut = |l: f64| Complex64::new(if l <= 5.0 { 1.0 } else { 0.0 }, 0.0);
        let v: Vec<f64> = [256, 1024, 4096].iter().map(|&r| besov_check(cut, 1.0, 4, r).unwrap()).collect();
        // H^1 norm of a jump: ‖g'‖² grows like the inverse sample spacing
        assert!(v[1] > 1.8 * v[0] && v[2] > 1.8 * v[1], "{v:?}");
        let smooth = |l: f64| Complex64::new((-(l / 5.0).powi(2)).exp(), 0.0);
        let w: Vec<f64> = [256, 1024, 4096].iter().map(|&r| besov_check(smooth, 1.0, 4, r).unwrap()).collect();
        assert!((w[2] - w[1]).abs() < 1e-6 * w[2]);
    }
}
