//! Time evolution and spectral multipliers built on a diagonalized `H_V`:
//! heat and wave propagators, Bochner-Riesz means, Hörmander multipliers,
//! the Littlewood-Paley square function and space-time Strichartz norms.

mod bochner_riesz;
mod heat;
mod hormander;
mod square;
mod strichartz;
mod wave;

pub use bochner_riesz::{bochner_riesz, br_norm_probe, BR_NO_GROWTH_TOLERANCE};
pub use heat::{heat, heat_kernel_diagonal, heat_kernel_sup, heat_smoothing_probe};
pub use hormander::{besov_check, hormander_multiplier};
pub use square::{norm_equivalence_probe, square_function, BetaFamily, NormBand, PARTITION_TOLERANCE};
pub use strichartz::{band_bound_probe, strichartz_probe, strichartz_ratio, TimeQuadrature};
pub use wave::{cone_leakage, wave_cosine, wave_sine, WaveSolution};

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dyadic::lp_bump;
use crate::error::{Error, Result};
use crate::geometry::{Basis, ModelManifold, Point};
use crate::operator::{multiplier, SpectralDecomposition};

/// The north pole on spheres, the origin on the torus.
pub fn source_point(basis: &Basis) -> Point {
    match basis.manifold() {
        ModelManifold::Torus { n } => Point::Torus(vec![0.0; n]),
        ModelManifold::SphereFull2d => Point::Sphere { theta: 0.0, azimuth: 0.0 },
        ModelManifold::SphereZonal { .. } => Point::Zonal(0.0),
    }
}

/// A point at distance `π/2` from [`source_point`].
pub fn equator_point(basis: &Basis) -> Point {
    use std::f64::consts::FRAC_PI_2;
    match basis.manifold() {
        ModelManifold::Torus { n } => {
            let mut x = vec![0.0; n];
            x[0] = FRAC_PI_2;
            Point::Torus(x)
        }
        ModelManifold::SphereFull2d => Point::Sphere {
            theta: FRAC_PI_2,
            azimuth: 0.0,
        },
        ModelManifold::SphereZonal { .. } => Point::Zonal(FRAC_PI_2),
    }
}

/// Basis coefficients of `m(P)δ_x = Σ_i m(λ_i) v_i(x) v_i`.
pub fn point_kernel(
    spec: &Arc<SpectralDecomposition>,
    basis: &Basis,
    x: &Point,
    m: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let op = multiplier(spec, m, "point-kernel")?;
    Ok(op.kernel_coeffs(&basis.eval_point(x)?)?.iter().map(|c| c.re).collect())
}

/// `e^{−(P/Λ)²}δ_x`: a point mass smoothed at the frequency scale `Λ`.
pub fn smoothed_point_mass(spec: &Arc<SpectralDecomposition>, basis: &Basis, x: &Point, scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!("smoothing scale must be positive, got {scale}")));
    }
    point_kernel(spec, basis, x, |l| (-(l / scale).powi(2)).exp())
}

/// Test-function families shared by the norm probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Battery {
    /// `β(P/k)δ_{x₀}` at the source point for each `k`: frequency-`k`
    /// data concentrated at a point, zonal on spheres.
    ZonalLadder { ks: Vec<f64> },
    /// Point masses smoothed at scale `λ_max/4`, at the source point and at
    /// distance `π/2` from it.
    PointConcentrated,
    /// `count` functions with seeded uniform coefficients on the eigenpairs
    /// with `λ_i ≤ λ_max/2`.
    RandomBand { count: usize, seed: u64 },
}

impl Battery {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "zonal-ladder" => Ok(Battery::ZonalLadder {
                ks: vec![4.0, 8.0, 16.0, 32.0],
            }),
            "point-concentrated" => Ok(Battery::PointConcentrated),
            "random-band" => Ok(Battery::RandomBand { count: 4, seed: 17 }),
            other => Err(Error::config(format!(
                "unknown battery {other:?}; expected zonal-ladder, point-concentrated or random-band"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Battery::ZonalLadder { .. } => "zonal-ladder",
            Battery::PointConcentrated => "point-concentrated",
            Battery::RandomBand { .. } => "random-band",
        }
    }

    /// Named members as basis coefficients.
    pub fn functions(&self, spec: &Arc<SpectralDecomposition>, basis: &Basis) -> Result<Vec<(String, Vec<f64>)>> {
        let top = spec.max_frequency();
        match self {
            Battery::ZonalLadder { ks } => ks
                .iter()
                .map(|&k| {
                    if 2.0 * k > top {
                        return Err(Error::Truncation(format!(
                            "ladder rung k = {k} needs frequencies up to {}, truncation reaches {top}",
                            2.0 * k
                        )));
                    }
                    let f = point_kernel(spec, basis, &source_point(basis), |l| lp_bump(l / k))?;
                    Ok((format!("ladder({k})"), f))
                })
                .collect(),
            Battery::PointConcentrated => {
                let scale = top / 4.0;
                Ok(vec![
                    ("point(source)".into(), smoothed_point_mass(spec, basis, &source_point(basis), scale)?),
                    ("point(equator)".into(), smoothed_point_mass(spec, basis, &equator_point(basis), scale)?),
                ])
            }
            Battery::RandomBand { count, seed } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|j| {
                        let a: Vec<f64> = (0..spec.len())
                            .map(|i| {
                                let x: f64 = rng.gen_range(-1.0..1.0);
                                if spec.frequency(i) <= top / 2.0 {
                                    x
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        Ok((format!("random({seed},{j})"), spec.reconstruct(&a)?))
                    })
                    .collect()
            }
        }
    }
}

pub(crate) fn real_coeffs(c: &[Complex64]) -> Vec<f64> {
    c.iter().map(|z| z.re).collect()
}
