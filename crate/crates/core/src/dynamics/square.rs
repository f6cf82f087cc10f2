//! The Littlewood-Paley square function `Sf = (Σ_j |β_j(P) f|²)^{1/2}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::lp_family;
use crate::error::{Error, Result};
use crate::geometry::{lp_norm, Basis};
use crate::operator::SpectralDecomposition;

/// Largest admissible deviation of `Σ_j β_j` from 1 on the spectrum.
pub const PARTITION_TOLERANCE: f64 = 1e-8;

type Member = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A finite family of multipliers `β_j` meant to sum to 1 on the spectrum.
#[derive(Clone)]
pub struct BetaFamily {
    members: Vec<Member>,
    label: String,
}

impl std::fmt::Debug for BetaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BetaFamily({}, {} members)", self.label, self.members.len())
    }
}

impl BetaFamily {
    /// `β_0, …, β_J` from the dyadic partition with `2^J ≥ top`, so the
    /// members sum to 1 on `[0, top]`.
    pub fn dyadic(top: f64) -> Self {
        let levels = top.max(1.0).log2().ceil() as usize + 1;
        BetaFamily {
            members: (0..=levels)
                .map(|j| Arc::new(move |x: f64| lp_family(j, x)) as Member)
                .collect(),
            label: format!("dyadic(J={levels})"),
        }
    }

    /// The single member `β_0 ≡ 1`.
    pub fn trivial() -> Self {
        BetaFamily {
            members: vec![Arc::new(|_| 1.0)],
            label: "trivial".into(),
        }
    }

    pub fn from_fns(members: Vec<Member>, label: impl Into<String>) -> Self {
        BetaFamily {
            members,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn eval(&self, j: usize, xi: f64) -> f64 {
        (self.members[j])(xi)
    }

    /// Largest `|Σ_j β_j(λ) − 1|` over the given frequencies.
    pub fn partition_defect(&self, frequencies: &[f64]) -> f64 {
        frequencies
            .iter()
            .map(|&l| (self.members.iter().map(|b| b(l)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Range of `Σ_j β_j²` over the given frequencies.
    pub fn square_sum_range(&self, frequencies: &[f64]) -> (f64, f64) {
        frequencies.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| {
            let s: f64 = self.members.iter().map(|b| b(l).powi(2)).sum();
            (lo.min(s), hi.max(s))
        })
    }
}

/// Grid values of `Sf` for `f` given by basis coefficients.
pub fn square_function(
    spec: &Arc<SpectralDecomposition>,
    basis: &Basis,
    f: &[f64],
    family: &BetaFamily,
) -> Result<Vec<f64>> {
    let freqs = spec.frequencies();
    let defect = family.partition_defect(&freqs);
    if defect > PARTITION_TOLERANCE {
        return Err(Error::config(format!(
            "β-family {} misses a partition of unity by {defect:.3e} on the spectrum",
            family.label
        )));
    }
    let a = spec.project(f)?;
    let pieces: Vec<Vec<f64>> = (0..family.len())
        .into_par_iter()
        .map(|j| {
            let aj: Vec<f64> = a.iter().zip(&freqs).map(|(x, &l)| x * family.eval(j, l)).collect();
            if aj.iter().all(|&x| x == 0.0) {
                return Ok(None);
            }
            basis.synthesize(&spec.reconstruct(&aj)?).map(Some)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let g = basis.grid().len();
    Ok((0..g)
        .map(|x| pieces.iter().map(|p| p[x] * p[x]).sum::<f64>().sqrt())
        .collect())
}

/// Smallest and largest `‖Sf‖_r / ‖f‖_r` over a battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBand {
    pub r: f64,
    pub min: f64,
    pub max: f64,
    /// Ratio per battery member, in battery order.
    pub ratios: Vec<(String, f64)>,
}

pub fn norm_equivalence_probe(
    spec: &Arc<SpectralDecomposition>,
    basis: &Basis,
    r: f64,
    battery: &[(String, Vec<f64>)],
    family: &BetaFamily,
) -> Result<NormBand> {
    if !(r > 1.0 && r < f64::INFINITY) {
        return Err(Error::domain(format!("square-function exponent must lie in (1, ∞), got {r}")));
    }
    if battery.is_empty() {
        return Err(Error::config("empty test-function battery"));
    }
    let ratios: Vec<(String, f64)> = battery
        .iter()
        .map(|(name, f)| {
            let sf = square_function(spec, basis, f, family)?;
            let fr = lp_norm(basis.grid(), &basis.synthesize(f)?, r)?;
            if fr == 0.0 {
                return Err(Error::domain(format!("battery member {name} vanishes")));
            }
            Ok((name.clone(), lp_norm(basis.grid(), &sf, r)? / fr))
        })
        .collect::<Result<_>>()?;
    let (min, max) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    Ok(NormBand { r, min, max, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Battery;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::{assemble, diagonalize, shifted_spectrum};
    use crate::potentials::Potential;

    fn free(k: usize) -> (Basis, Arc<SpectralDecomposition>) {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), k).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        (b, Arc::new(s))
    }

    #[test]
    fn trivial_family_gives_modulus() {
        let (b, s) = free(16);
        let f: Vec<f64> = (0..17).map(|k| ((k * 7 % 5) as f64) - 2.0).collect();
        let sf = square_function(&s, &b, &f, &BetaFamily::trivial()).unwrap();
        let g = b.synthesize(&f).unwrap();
        assert!(sf.iter().zip(&g).all(|(a, v)| (a - v.abs()).abs() < 1e-12));
    }

    #[test]
    fn mode_where_one_member_is_one() {
        // λ_7 = √56 ≈ 7.48 lies where β_4(ξ) = β(ξ/8) is exactly 1
        let (b, s) = free(40);
        let fam = BetaFamily::dyadic(s.max_frequency());
        let k = 7;
        let l = ((k * (k + 1)) as f64).sqrt();
        assert_eq!(fam.eval(4, l), 1.0);
        let mut f = vec![0.0; 41];
        f[k] = 1.0;
        let sf = square_function(&s, &b, &f, &fam).unwrap();
        let g = b.synthesize(&f).unwrap();
        assert!(sf.iter().zip(&g).all(|(a, v)| (a - v.abs()).abs() < 1e-12));
    }

    #[test]
    fn l2_ratio_within_square_sum_bounds() {
        let (b, s) = free(64);
        let fam = BetaFamily::dyadic(s.max_frequency());
        // oracle: at most two adjacent members overlap and they sum to 1, so
        // Σβ_j² ∈ [1/2, 1] pointwise and ‖Sf‖₂/‖f‖₂ ∈ [1/√2, 1]
        let (lo, hi) = fam.square_sum_range(&s.frequencies());
        assert!(lo >= 0.5 - 1e-15 && hi <= 1.0 + 1e-15);
        let bat = Battery::RandomBand { count: 3, seed: 5 }.functions(&s, &b).unwrap();
        let band = norm_equivalence_probe(&s, &b, 2.0, &bat, &fam).unwrap();
        assert!(band.min >= lo.sqrt() - 1e-10 && band.max <= hi.sqrt() + 1e-10);
        assert!(band.min >= 1.0 / 2f64.sqrt() - 1e-10 && band.max <= 2f64.sqrt());
    }

    #[test]
    fn partition_violation_is_config_error() {
        let (b, s) = free(16);
        let half = BetaFamily::from_fns(vec![Arc::new(|_| 0.5)], "half");
        assert!(matches!(square_function(&s, &b, &[1.0; 17], &half), Err(Error::Config(_))));
        // too few levels for the spectrum
        let short = BetaFamily::dyadic(2.0);
        assert!(matches!(square_function(&s, &b, &[1.0; 17], &short), Err(Error::Config(_))));
    }

    #[test]
    fn band_is_stable_across_potentials() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 64).unwrap();
        let free = shifted_spectrum(&Potential::zero(), &b).unwrap();
        let kato = shifted_spectrum(&Potential::TruncatedCounterexample { n: 2, cut: 0.3 }, &b).unwrap();
        for r in [4.0 / 3.0, 2.0, 4.0] {
            let run = |s: &Arc<SpectralDecomposition>| {
                let fam = BetaFamily::dyadic(s.max_frequency());
                let bat = Battery::PointConcentrated.functions(s, &b).unwrap();
                norm_equivalence_probe(s, &b, r, &bat, &fam).unwrap()
            };
            let (a, c) = (run(&free), run(&kato));
            assert!(a.min > 0.3 && a.max < 3.0, "{a:?}");
            assert!(c.min > 0.3 && c.max < 3.0, "{c:?}");
        }
    }
}
