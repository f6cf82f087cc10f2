//! Wave propagators `cos(tP)`, `sin(tP)/P` and finite propagation speed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Basis, ModelManifold, Point};
use crate::operator::{multiplier, MultiplierOperator, SpectralDecomposition};
use crate::orthopoly::Rule1d;

fn check_time(t: f64) -> Result<()> {
    if !(t.abs() <= FRAC_PI_2) {
        return Err(Error::domain(format!("wave time must satisfy |t| <= π/2, got {t}")));
    }
    Ok(())
}

/// `cos(tP)`.
pub fn wave_cosine(spec: &Arc<SpectralDecomposition>, t: f64) -> Result<MultiplierOperator> {
    check_time(t)?;
    multiplier(spec, |l| (t * l).cos(), format!("cos({t}P)"))
}

/// `sin(tP)/P`, equal to `t` on zero modes.
pub fn wave_sine(spec: &Arc<SpectralDecomposition>, t: f64) -> Result<MultiplierOperator> {
    check_time(t)?;
    multiplier(spec, |l| sine_over(t, l), format!("sin({t}P)/P"))
}

fn sine_over(t: f64, l: f64) -> f64 {
    if l == 0.0 {
        t
    } else {
        (t * l).sin() / l
    }
}

/// `u(t) = cos(tP)f₀ + sin(tP)P^{−1}f₁` for data in the Galerkin span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    /// Initial position and velocity as basis coefficients.
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
    /// Sample times on `[0, 1]`.
    pub times: Vec<f64>,
    frequencies: Vec<f64>,
    a0: Vec<f64>,
    a1: Vec<f64>,
    #[serde(skip)]
    spec: Option<Arc<SpectralDecomposition>>,
}

impl WaveSolution {
    /// `samples` uniform times on `[0, 1]`.
    pub fn new(spec: &Arc<SpectralDecomposition>, f0: &[f64], f1: &[f64], samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::domain("a time grid needs at least 2 samples"));
        }
        Ok(WaveSolution {
            a0: spec.project(f0)?,
            a1: spec.project(f1)?,
            f0: f0.to_vec(),
            f1: f1.to_vec(),
            times: (0..samples).map(|j| j as f64 / (samples - 1) as f64).collect(),
            frequencies: spec.frequencies(),
            spec: Some(Arc::clone(spec)),
        })
    }

    fn spec(&self) -> &SpectralDecomposition {
        self.spec.as_deref().expect("wave solution built with a spectral decomposition")
    }

    /// Eigen-coordinates of `u(t)`.
    pub fn eigen_at(&self, t: f64) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(self.a0.iter().zip(&self.a1))
            .map(|(&l, (a, b))| a * (t * l).cos() + b * sine_over(t, l))
            .collect()
    }

    /// Eigen-coordinates of `∂_t u(t)`.
    pub fn eigen_velocity(&self, t: f64) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(self.a0.iter().zip(&self.a1))
            .map(|(&l, (a, b))| -a * l * (t * l).sin() + b * (t * l).cos())
            .collect()
    }

    /// Basis coefficients of `u(t)`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        self.spec().reconstruct(&self.eigen_at(t))
    }

    pub fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        self.spec().reconstruct(&self.eigen_velocity(t))
    }

    /// `‖P u‖₂² + ‖∂_t u‖₂²`.
    pub fn energy(&self, t: f64) -> f64 {
        let u = self.eigen_at(t);
        let v = self.eigen_velocity(t);
        self.frequencies
            .iter()
            .zip(u.iter().zip(&v))
            .map(|(l, (a, b))| (l * a).powi(2) + b * b)
            .sum()
    }

    /// Largest frequency carrying data.
    pub fn active_frequency(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(self.a0.iter().zip(&self.a1))
            .filter(|(_, (a, b))| **a != 0.0 || **b != 0.0)
            .map(|(l, _)| *l)
            .fold(0.0, f64::max)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

/// Fraction of the `L²` mass of the mollified kernel
/// `Σ cos(tλ_i) e^{−(λ_i/Λ)²} v_i(y) v_i(x)` lying outside the cone
/// `d(x, y) ≤ |t| + 4/Λ`. `Λ` defaults to `λ_max/4`; larger scales leave
/// the Gaussian tail unresolved and fail.
pub fn cone_leakage(
    spec: &Arc<SpectralDecomposition>,
    basis: &Basis,
    source: &Point,
    t: f64,
    scale: Option<f64>,
) -> Result<f64> {
    check_time(t)?;
    let top = spec.max_frequency();
    let lam = scale.unwrap_or(top / 4.0);
    if !(lam > 0.0) || lam > top / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution {
            what: format!("mollifier scale Λ = {lam} (needs λ_max >= 4Λ)"),
            required: (4.0 * lam).ceil() as usize,
            available: top as usize,
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let op = multiplier(spec, |l| (t * l).cos() * (-(l / lam).powi(2)).exp(), "mollified-wave")?;
    let k: Vec<f64> = op
        .kernel_coeffs(&basis.eval_point(source)?)?
        .iter()
        .map(|c: &Complex64| c.re)
        .collect();
    let radius = t.abs() + 4.0 / lam;
    let (inside, outside) = match (basis.manifold(), source) {
        (ModelManifold::SphereZonal { n }, Point::Zonal(phi0)) if *phi0 == 0.0 => {
            zonal_split_mass(basis, &k, n, radius.min(PI), top)?
        }
        (m, _) => {
            // hard cut on the basis grid
            let values = basis.synthesize(&k)?;
            let (mut inside, mut outside) = (0.0, 0.0);
            for (i, (v, w)) in values.iter().zip(basis.grid().weights()).enumerate() {
                if m.distance(&basis.grid().point(i), source) <= radius {
                    inside += w * v * v;
                } else {
                    outside += w * v * v;
                }
            }
            (inside, outside)
        }
    };
    if inside + outside == 0.0 {
        return Err(Error::domain("mollified wave kernel vanishes at the source"));
    }
    Ok(outside / (inside + outside))
}

/// `∫|u|² sin^{n−1}φ dφ` over `[0, R]` and `[R, π]` for a zonal `u`, with
/// Gauss panels fine enough for frequency `top` and a break exactly at `R`.
fn zonal_split_mass(basis: &Basis, coeffs: &[f64], n: usize, radius: f64, top: f64) -> Result<(f64, f64)> {
    let side = |a: f64, b: f64| -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let panels = ((b - a) * top / 4.0).ceil() as usize + 2;
        let breaks: Vec<f64> = (0..=panels).map(|j| a + (b - a) * j as f64 / panels as f64).collect();
        let rule = Rule1d::composite(&breaks, 16)?;
        // collect before summing so the result does not depend on scheduling
        let terms: Vec<f64> = rule
            .nodes
            .par_iter()
            .zip(&rule.weights)
            .map(|(&phi, &w)| {
                let e = basis.eval_point(&Point::Zonal(phi))?;
                let v: f64 = e.iter().zip(coeffs).map(|(a, b)| a * b).sum();
                Ok(w * v * v * phi.sin().powi(n as i32 - 1))
            })
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum())
    };
    Ok((side(0.0, radius)?, side(radius, PI)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::{assemble, diagonalize, shifted_spectrum};
    use crate::potentials::Potential;
    use proptest::prelude::*;

    fn free(m: ModelManifold, k: usize) -> (Basis, Arc<SpectralDecomposition>) {
        let b = build_basis(m, k).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        (b, Arc::new(s))
    }

    #[test]
    fn time_domain_and_identity() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 6);
        assert!(wave_cosine(&s, 2.0).is_err());
        assert!(wave_cosine(&s, 0.0).unwrap().coefficients().iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        assert_eq!(cone_leakage(&s, &b, &Point::Zonal(0.0), 0.0, None).unwrap(), 0.0);
        assert!(matches!(
            cone_leakage(&s, &b, &Point::Zonal(0.0), 0.5, Some(10.0)),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn single_mode_action() {
        let (_, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 10);
        let mut f = vec![0.0; 11];
        f[7] = 1.0;
        let g = wave_cosine(&s, 0.3).unwrap().apply_real_coeffs(&f).unwrap();
        let want = (0.3 * 56f64.sqrt()).cos();
        for (k, c) in g.iter().enumerate() {
            let e = if k == 7 { want } else { 0.0 };
            assert!((c.re - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_mode_sine_limit() {
        let (_, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 4);
        let c = wave_sine(&s, 0.7).unwrap();
        assert_eq!(c.coefficients()[0].re, 0.7);
        let mut f1 = vec![0.0; 5];
        f1[0] = 1.0;
        let w = WaveSolution::new(&s, &[0.0; 5], &f1, 5).unwrap();
        assert!((w.at(0.5).unwrap()[0].abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_data_and_energy() {
        let b = build_basis(ModelManifold::sphere_zonal(3).unwrap(), 16).unwrap();
        let s = shifted_spectrum(&Potential::parse("2*cos(phi)", b.manifold(), false).unwrap(), &b).unwrap();
        let f0: Vec<f64> = (0..17).map(|k| (-(k as f64) / 3.0).exp()).collect();
        let f1: Vec<f64> = (0..17).map(|k| if k % 2 == 0 { 1.0 / (1.0 + k as f64) } else { 0.0 }).collect();
        let w = WaveSolution::new(&s, &f0, &f1, 33).unwrap();
        let u0 = w.at(0.0).unwrap();
        assert!(u0.iter().zip(&f0).all(|(a, b)| (a - b).abs() < 1e-12));
        // centered difference: O(h²) error with h = 1e-5
        let h = 1e-5;
        let (up, um) = (w.at(h).unwrap(), w.at(-h).unwrap());
        for j in 0..17 {
            assert!(((up[j] - um[j]) / (2.0 * h) - f1[j]).abs() < 1e-8);
        }
        let e0 = w.energy(0.0);
        for &t in &w.times {
            assert!((w.energy(t) - e0).abs() < 1e-12 * e0);
        }
    }

    #[test]
    fn leakage_is_small_and_grid_independent() {
        let m = ModelManifold::sphere_zonal(2).unwrap();
        let b = build_basis(m, 64).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        let s = Arc::new(s);
        let l = cone_leakage(&s, &b, &Point::Zonal(0.0), 0.5, None).unwrap();
        assert!(l > 0.0 && l < 1e-3, "leakage {l}");
        // the split quadrature ignores the basis grid
        let fine = Basis::with_grid(m, 64, crate::geometry::QuadratureGrid::zonal_gauss(2, 600).unwrap()).unwrap();
        let lf = cone_leakage(&s, &fine, &Point::Zonal(0.0), 0.5, None).unwrap();
        assert!((l - lf).abs() < 1e-12);
        // Λ and the margin both scale with the truncation, so the fraction
        // tends to a positive constant rather than to zero
        let b2 = build_basis(m, 128).unwrap();
        let s2 = Arc::new(diagonalize(&assemble(&Potential::zero(), &b2).unwrap()).unwrap());
        let l2 = cone_leakage(&s2, &b2, &Point::Zonal(0.0), 0.5, None).unwrap();
        assert!((l2 / l - 1.0).abs() < 0.02, "{l} vs {l2}");
    }

    #[test]
    fn grid_cut_on_full_sphere() {
        let b = build_basis(ModelManifold::SphereFull2d, 32).unwrap();
        let s = Arc::new(diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap());
        let src = Point::Sphere { theta: 0.9, azimuth: 0.3 };
        let l = cone_leakage(&s, &b, &src, 0.5, None).unwrap();
        assert!(l < 5e-3, "leakage {l}");
    }

    proptest! {
        #[test]
        fn double_angle(t in -0.78f64..0.78) {
            let (_, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 12);
            let c2 = wave_cosine(&s, 2.0 * t).unwrap();
            let c = wave_cosine(&s, t).unwrap();
            for (a, b) in c2.coefficients().iter().zip(c.coefficients()) {
                prop_assert!((a - (2.0 * b * b - 1.0)).norm() < 1e-14);
            }
        }
    }
}
