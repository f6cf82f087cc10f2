//! The heat semigroup `e^{−tH_V}` and its kernel.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{Expectation, ExperimentReport};
use crate::geometry::{Basis, Point};
use crate::operator::{multiplier_from_coefficients, MultiplierOperator, SpectralDecomposition};

/// `e^{−tH_V}`: coefficients `e^{−tμ_i}` with `μ_i` the unshifted
/// eigenvalues.
pub fn heat(spec: &Arc<SpectralDecomposition>, t: f64) -> Result<MultiplierOperator> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat time must be positive, got {t}")));
    }
    let c = spec.eigenvalues().iter().map(|&mu| Complex64::new((-t * mu).exp(), 0.0)).collect();
    multiplier_from_coefficients(spec, c, format!("heat({t})"))
}

fn heat_weights(spec: &SpectralDecomposition, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat time must be positive, got {t}")));
    }
    Ok(spec.eigenvalues().iter().map(|&mu| (-t * mu).exp()).collect())
}

/// `Σ_i e^{−tμ_i} |v_i(x)|²`.
pub fn heat_kernel_diagonal(spec: &SpectralDecomposition, basis: &Basis, t: f64, x: &Point) -> Result<f64> {
    let w = heat_weights(spec, t)?;
    let v = spec.project(&basis.eval_point(x)?)?;
    Ok(v.iter().zip(&w).map(|(a, c)| c * a * a).sum())
}

/// Coarse sample of points: the probe points plus about `count` grid nodes.
fn coarse_points(basis: &Basis, count: usize) -> Vec<Point> {
    let g = basis.grid().len();
    let stride = (g / count.max(1)).max(1);
    let mut pts = basis.probe_points();
    pts.extend((0..g).step_by(stride).map(|i| basis.grid().point(i)));
    pts
}

/// `sup_{x,y} |Σ_i e^{−tμ_i} v_i(x) v_i(y)|` over a coarse point set, the
/// `L¹ → L^∞` norm of `e^{−tH_V}` at this resolution.
pub fn heat_kernel_sup(spec: &SpectralDecomposition, basis: &Basis, t: f64, coarse: usize) -> Result<f64> {
    let w = heat_weights(spec, t)?;
    let pts = coarse_points(basis, coarse);
    let rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|p| spec.project(&basis.eval_point(p)?))
        .collect::<Result<_>>()?;
    let mut e = Array2::<f64>::zeros((pts.len(), spec.len()));
    let mut ew = Array2::<f64>::zeros((spec.len(), pts.len()));
    for (r, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            e[[r, i]] = *v;
            ew[[i, r]] = v * w[i];
        }
    }
    Ok(e.dot(&ew).iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Sup of the heat kernel over `t`, with the expected slope `−n/2`.
pub fn heat_smoothing_probe(
    spec: &SpectralDecomposition,
    basis: &Basis,
    times: &[f64],
    tolerance: f64,
) -> Result<ExperimentReport> {
    let n = basis.manifold().dimension() as f64;
    // e^{−tλ²} must be negligible at the truncation edge for the smallest t
    let tmin = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let edge = spec.max_frequency();
    if tmin * edge * edge < 20.0 {
        return Err(Error::Resolution {
            what: format!("heat kernel at t = {tmin} (frequency cap for e^{{-t λ²}} < e^-20)"),
            required: (20.0 / tmin).sqrt().ceil() as usize,
            available: edge as usize,
        });
    }
    let values: Vec<f64> = times
        .iter()
        .map(|&t| heat_kernel_sup(spec, basis, t, 64))
        .collect::<Result<_>>()?;
    ExperimentReport::new("heat", times.to_vec(), values)
        .note(format!("sup of the heat kernel over a coarse grid, n = {n}"))
        .judge(
            Some(Expectation::Near {
                target: -n / 2.0,
                tolerance,
            }),
            0.25,
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_exponent;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::{assemble, diagonalize};
    use crate::potentials::Potential;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn free(m: ModelManifold, k: usize) -> (Basis, Arc<SpectralDecomposition>) {
        let b = build_basis(m, k).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        (b, Arc::new(s))
    }

    #[test]
    fn domain() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 4);
        assert!(heat(&s, 0.0).is_err());
        assert!(heat_kernel_sup(&s, &b, -1.0, 4).is_err());
    }

    #[test]
    fn short_time_is_first_order() {
        let (_, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 8);
        let f: Vec<f64> = (0..9).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let err = |t: f64| {
            let g = heat(&s, t).unwrap().apply_real_coeffs(&f).unwrap();
            g.iter().zip(&f).map(|(a, b)| (a.re - b).powi(2)).sum::<f64>().sqrt()
        };
        // e^{−tμ} − 1 ≈ −tμ: halving t halves the error
        let r = err(1e-6) / err(5e-7);
        assert!((r - 2.0).abs() < 1e-3);
    }

    #[test]
    fn sphere_diagonal_matches_flat_kernel() {
        let (b, s) = free(ModelManifold::SphereFull2d, 64);
        let x = Point::Sphere { theta: 1.1, azimuth: 0.4 };
        for t in [0.01, 0.02, 0.05, 0.1] {
            let d = heat_kernel_diagonal(&s, &b, t, &x).unwrap();
            // oracle: addition theorem, then the flat kernel 1/(4πt)
            let exact: f64 = (0..=64).map(|k| (2 * k + 1) as f64 * (-t * (k * (k + 1)) as f64).exp()).sum::<f64>() / (4.0 * PI);
            assert!((d - exact).abs() < 1e-10 * exact);
            assert!((exact * 4.0 * PI * t - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn sup_kernel_slope_is_minus_one_on_s2() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 64);
        let ts: Vec<f64> = (0..6).map(|j| 0.01 * 10f64.powf(j as f64 / 5.0)).collect();
        let r = heat_smoothing_probe(&s, &b, &ts, 0.1).unwrap();
        let f = fit_exponent(&ts, &r.values).unwrap();
        assert!((f.slope + 1.0).abs() < 0.1, "slope {}", f.slope);
        assert_eq!(r.verdict, crate::estimators::Verdict::Pass);
        // the sup sits at the pole, where the zonal sector carries every mode
        let pole = heat_kernel_diagonal(&s, &b, 0.05, &Point::Zonal(0.0)).unwrap();
        assert!((heat_kernel_sup(&s, &b, 0.05, 32).unwrap() - pole).abs() < 1e-12 * pole);
    }

    #[test]
    fn under_resolved_times_rejected() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 8);
        assert!(matches!(
            heat_smoothing_probe(&s, &b, &[0.01, 0.02, 0.04, 0.08], 0.1),
            Err(Error::Resolution { .. })
        ));
    }

    proptest! {
        #[test]
        fn semigroup(a in 0.001f64..1.0, c in 0.001f64..1.0) {
            let (_, s) = free(ModelManifold::sphere_zonal(3).unwrap(), 12);
            let lhs = heat(&s, a).unwrap().compose(&heat(&s, c).unwrap()).unwrap();
            let rhs = heat(&s, a + c).unwrap();
            for (x, y) in lhs.coefficients().iter().zip(rhs.coefficients()) {
                prop_assert!((x - y).norm() <= 1e-12 * y.norm());
            }
        }
    }
}
