//! Pointwise spectral sums: the local Weyl law and the divergent
//! quasimode built from dyadic spectral kernels at a point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::lp_bump;
use crate::error::{Error, Result};
use crate::geometry::{Basis, Point};
use crate::operator::SpectralDecomposition;
use crate::orthopoly::sphere_volume;

/// `Σ_{λ_j ≤ μ} |v_j(x₀)|²`.
pub fn local_weyl(spec: &SpectralDecomposition, basis: &Basis, x0: &Point, mu: f64) -> Result<f64> {
    // tolerate rounding when μ sits right at the top of the truncation
    if mu > spec.max_frequency() * (1.0 + 1e-6) {
        return Err(Error::Truncation(format!(
            "μ = {mu} exceeds the largest resolved frequency {}",
            spec.max_frequency()
        )));
    }
    let at = spec.project(&basis.eval_point(x0)?)?;
    Ok((0..spec.len())
        .filter(|&i| spec.frequency(i) <= mu)
        .map(|i| at[i] * at[i])
        .sum())
}

/// Dimension of the degree-`d` spherical harmonics on S^n.
pub fn harmonic_dimension(n: usize, d: usize) -> f64 {
    if d == 0 {
        return 1.0;
    }
    // (2d+n−1)/(n−1) · C(d+n−2, n−2)
    let mut c = 1.0;
    for i in 1..=(n - 2) {
        c *= (d + i) as f64 / i as f64;
    }
    (2 * d + n - 1) as f64 / (n - 1) as f64 * c
}

/// Partial sums of `u_λ(x₀) − e_λ(x₀)` and the `L²` diagnostics of the
/// construction, on S^n at a pole with `P = √(−Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergentQuasimode {
    pub n: usize,
    pub epsilon: f64,
    /// The eigenfrequency `λ` of `e_λ` (largest `√(d(d+n−1)) ≤ 2^{k_min}`).
    pub lambda: f64,
    pub degree: usize,
    pub ks: Vec<usize>,
    /// `2^{−(n/2+2)k} k^{−1/2−ε} β(P/2^k)(x₀, x₀)`.
    pub summands: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `S(k_max) / S(k_min) − 1`.
    pub growth: f64,
    /// `‖u_λ − e_λ‖₂`.
    pub l2_defect: f64,
    pub u_l2: f64,
    /// `λ^{−1} ‖(−Δ − (λ+i)²) u_λ‖₂`.
    pub resolvent_term: f64,
    /// `λ^{−1} ‖(−Δ − (λ+i)²) u_λ‖₂ + ‖u_λ‖₂`.
    pub normalization: f64,
}

pub fn divergent_quasimode(n: usize, epsilon: f64, k_min: usize, k_max: usize) -> Result<DivergentQuasimode> {
    if n < 4 {
        return Err(Error::domain(format!(
            "the pointwise sums only diverge for n >= 4, got n = {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::domain(format!("ε must lie in (0, 1/2), got {epsilon}")));
    }
    if k_min < 1 || k_max < k_min || k_max > 40 {
        return Err(Error::domain(format!("bad dyadic range [{k_min}, {k_max}]")));
    }
    let nf = n as f64;
    let vol = sphere_volume(n);
    let freq = |d: usize| ((d * (d + n - 1)) as f64).sqrt();
    // top degree with nonzero β(λ_d / 2^{k_max})
    let top = 1usize << (k_max + 1);
    let density: Vec<f64> = (0..=top).map(|d| harmonic_dimension(n, d) / vol).collect();
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let amp = |k: usize| 2f64.powf(-(nf / 2.0 + 2.0) * k as f64) * (k as f64).powf(-0.5 - epsilon);

    let summands: Vec<f64> = ks
        .iter()
        .map(|&k| {
            let s = 2f64.powi(k as i32);
            let diag: f64 = (0..=top).map(|d| lp_bump(freq(d) / s) * density[d]).sum();
            amp(k) * diag
        })
        .collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = summands
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect();

    let limit = 2f64.powi(k_min as i32);
    let degree = (0..=top).take_while(|&d| freq(d) <= limit).last().unwrap_or(0);
    let lambda = freq(degree);
    // u = Σ_d c_d Z_d with Z_d the degree-d zonal kernel at x₀, ‖Z_d‖² = density_d
    let z = Complex64::new(lambda, 1.0).powi(2);
    let (mut defect, mut u2, mut res) = (0.0, 0.0, 0.0);
    for d in 0..=top {
        let w: f64 = ks.iter().map(|&k| amp(k) * lp_bump(freq(d) / 2f64.powi(k as i32))).sum();
        let c = w + if d == degree { 1.0 / density[d].sqrt() } else { 0.0 };
        defect += w * w * density[d];
        u2 += c * c * density[d];
        res += (Complex64::new(freq(d).powi(2), 0.0) - z).norm_sqr() * c * c * density[d];
    }
    let resolvent_term = res.sqrt() / lambda.max(1.0);
    Ok(DivergentQuasimode {
        n,
        epsilon,
        lambda,
        degree,
        growth: partial_sums.last().unwrap() / partial_sums[0] - 1.0,
        ks,
        summands,
        partial_sums,
        l2_defect: defect.sqrt(),
        u_l2: u2.sqrt(),
        resolvent_term,
        normalization: resolvent_term + u2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::{assemble, diagonalize};
    use crate::potentials::Potential;
    use std::f64::consts::PI;

    #[test]
    fn dimensions() {
        assert_eq!(harmonic_dimension(2, 5), 11.0);
        assert_eq!(harmonic_dimension(3, 4), 25.0);
        // S⁴: (2d+3)(d+1)(d+2)/6
        assert_eq!(harmonic_dimension(4, 3), 9.0 * 4.0 * 5.0 / 6.0);
    }

    #[test]
    fn weyl_on_free_sphere() {
        let k = 10;
        let b = build_basis(ModelManifold::SphereFull2d, k).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        let x0 = Point::Sphere { theta: 0.7, azimuth: 1.3 };
        let full = local_weyl(&s, &b, &x0, ((k * (k + 1)) as f64).sqrt() * (1.0 + 1e-9)).unwrap();
        assert!((full - ((k + 1) * (k + 1)) as f64 / (4.0 * PI)).abs() < 1e-12);
        let low = local_weyl(&s, &b, &x0, 1.0).unwrap();
        assert!((low - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!(matches!(local_weyl(&s, &b, &x0, 100.0), Err(Error::Truncation(_))));
    }

    #[test]
    fn n4_sums_grow_slowly_n5_geometrically() {
        let q = divergent_quasimode(4, 0.25, 4, 14).unwrap();
        assert!(q.growth > 0.6);
        // oracle: direct summation of k^{−1/2−ε} against the computed diagonal
        // ≈ c 2^{4k}; the ratio of consecutive summands tends to ((k+1)/k)^{−3/4}
        let r = q.summands[10] / q.summands[9];
        assert!((r - (14.0f64 / 13.0).powf(-0.75)).abs() < 0.02);
        let q5 = divergent_quasimode(5, 0.25, 4, 14).unwrap();
        assert!(q5.partial_sums[10] / q5.partial_sums[0] > 4.0);
        assert!(q.l2_defect < 0.05);
        assert!(divergent_quasimode(3, 0.25, 4, 14).is_err());
    }
}
