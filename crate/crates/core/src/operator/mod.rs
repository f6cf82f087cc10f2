//! Galerkin discretization of `H_V = −Δ + V` in the Laplace eigenbasis,
//! its eigendecomposition, and the functional calculus `m(√(H_V + N))`.

mod galerkin;
mod multiplier;
mod spectral;

pub use galerkin::{assemble, Block, GalerkinMatrix, QuadratureInfo};
pub use multiplier::{
    band_projector, bernstein, bernstein_inverse, multiplier, multiplier_complex, multiplier_from_coefficients, spectral_cutoff, BumpProfile,
    MultiplierOperator, BERNSTEIN_C0,
};
pub use spectral::{diagonalize, SpectralDecomposition};

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::Basis;
use crate::potentials::Potential;

/// Smallest integer `N ≥ 0` with `μ_min + N ≥ 1`.
pub fn shift_for(lowest: f64) -> i64 {
    (1.0 - lowest).ceil().max(0.0) as i64
}

/// Smallest integer `N ≥ 0` such that the Galerkin matrix of `H_{V+N}`
/// has lowest eigenvalue at least 1.
pub fn positivity_shift(v: &Potential, basis: &Basis) -> Result<i64> {
    let s = diagonalize(&assemble(v, basis)?)?;
    Ok(shift_for(s.eigenvalue(0)))
}

/// Assemble, diagonalize and apply the positivity shift in one go.
pub fn shifted_spectrum(v: &Potential, basis: &Basis) -> Result<Arc<SpectralDecomposition>> {
    let s = diagonalize(&assemble(v, basis)?)?;
    let n = shift_for(s.eigenvalue(0));
    Ok(Arc::new(s.with_shift(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::linalg::symmetric_eigen;
    use proptest::prelude::*;

    #[test]
    fn shifts_for_constants() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 8).unwrap();
        assert_eq!(positivity_shift(&Potential::zero(), &b).unwrap(), 1);
        assert_eq!(positivity_shift(&Potential::Constant(-5.0), &b).unwrap(), 6);
        assert_eq!(positivity_shift(&Potential::Constant(3.0), &b).unwrap(), 0);
    }

    #[test]
    fn shift_for_cosine_matches_dense_oracle() {
        let s2 = ModelManifold::sphere_zonal(2).unwrap();
        let v = Potential::parse("10*cos(phi)", s2, false).unwrap();
        let n64 = positivity_shift(&v, &build_basis(s2, 64).unwrap()).unwrap();
        // oracle: dense diagonalization at doubled truncation
        let b = build_basis(s2, 128).unwrap();
        let dense = assemble(&v, &b).unwrap().to_dense();
        let lo = symmetric_eigen(&dense).unwrap().values[0];
        assert!((n64 - shift_for(lo)).abs() <= 1);
        assert!(n64 > 1);
    }

    #[test]
    fn free_sphere_frequencies() {
        let b = build_basis(ModelManifold::SphereFull2d, 4).unwrap();
        let s = shifted_spectrum(&Potential::zero(), &b).unwrap();
        assert_eq!(s.shift(), 1);
        // degree k has multiplicity 2k+1 and λ = √(k(k+1) + 1)
        let f = s.frequencies();
        assert_eq!(f.len(), 25);
        assert!((f[24] - 21f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn smooth_potential_converges_in_truncation() {
        let s2 = ModelManifold::sphere_zonal(2).unwrap();
        let v = Potential::parse("3*cos(phi)^2 - exp(cos(phi))", s2, false).unwrap();
        let k = 32;
        let a = diagonalize(&assemble(&v, &build_basis(s2, k).unwrap()).unwrap()).unwrap();
        let b = diagonalize(&assemble(&v, &build_basis(s2, 2 * k).unwrap()).unwrap()).unwrap();
        for i in 0..=k / 4 {
            assert!((a.eigenvalue(i) - b.eigenvalue(i)).abs() < 1e-6, "i={i}");
        }
    }

    #[test]
    fn heat_keeps_positive_data_positive() {
        // at K = 16 the jump of V at the cut still leaves a 1e-4 undershoot
        let b = build_basis(ModelManifold::SphereFull2d, 24).unwrap();
        let v = Potential::TruncatedCounterexample { n: 2, cut: 0.3 };
        let s = shifted_spectrum(&v, &b).unwrap();
        let heat = multiplier(&s, |l| (-0.05 * l * l).exp(), "heat").unwrap();
        let f: Vec<f64> = (0..b.grid().len())
            .map(|i| match b.grid().point(i) {
                crate::geometry::Point::Sphere { theta, .. } => (-4.0 * (theta - 1.0).powi(2)).exp(),
                _ => unreachable!(),
            })
            .collect();
        let g = heat.apply_grid(&b, &f).unwrap();
        let max = g.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let min = g.iter().map(|z| z.re).fold(f64::MAX, f64::min);
        assert!(min >= -1e-6 * max, "min {min} max {max}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn adding_nonnegative_potential_raises_eigenvalues(a in -3.0f64..3.0, c in 0.0f64..4.0) {
            let s2 = ModelManifold::sphere_zonal(2).unwrap();
            let b = build_basis(s2, 12).unwrap();
            let v = Potential::parse(&format!("{a}*cos(phi)"), s2, false).unwrap();
            let w = Potential::parse(&format!("{a}*cos(phi) + {c}*sin(phi)^2"), s2, false).unwrap();
            let ev = diagonalize(&assemble(&v, &b).unwrap()).unwrap().eigenvalues();
            let ew = diagonalize(&assemble(&w, &b).unwrap()).unwrap().eigenvalues();
            for (x, y) in ev.iter().zip(&ew) {
                prop_assert!(*y >= *x - 1e-10);
            }
        }

        #[test]
        fn galerkin_is_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let s2 = ModelManifold::SphereFull2d;
            let basis = build_basis(s2, 6).unwrap();
            let v = Potential::parse(&format!("{a}*cos(phi) + {b}*cos(phi)^3"), s2, false).unwrap();
            prop_assert!(assemble(&v, &basis).unwrap().asymmetry() <= 1e-12);
        }
    }
}
