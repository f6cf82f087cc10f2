//! Bochner-Riesz means `S_λ^δ = (1 − P²/λ²)_+^δ` and lower bounds for their
//! `L^p → L^p` norms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{equator_point, real_coeffs, smoothed_point_mass, source_point};
use crate::error::{Error, Result};
use crate::estimators::{delta_br, Expectation, ExperimentReport};
use crate::geometry::{lp_norm, Basis};
use crate::operator::{multiplier, MultiplierOperator, SpectralDecomposition};

/// Half-width of the no-growth band for the fitted slope when `δ > δ(p)`.
pub const BR_NO_GROWTH_TOLERANCE: f64 = 0.15;

/// Coefficients `(1 − λ_i²/λ²)^δ` for `λ_i ≤ λ`, else 0. At `δ = 0` this is
/// the sharp projector onto `[0, λ]`.
pub fn bochner_riesz(spec: &Arc<SpectralDecomposition>, lambda: f64, delta: f64) -> Result<MultiplierOperator> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("Bochner-Riesz index must be >= 0, got {delta}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("Bochner-Riesz cutoff must be positive, got {lambda}")));
    }
    multiplier(
        spec,
        |l| {
            if l <= lambda {
                (1.0 - (l / lambda).powi(2)).max(0.0).powf(delta)
            } else {
                0.0
            }
        },
        format!("bochner-riesz({lambda},{delta})"),
    )
}

/// Lower bounds for `‖S_λ^δ‖_{L^p→L^p}` over `λ`: the largest ratio
/// `‖S f‖_p / ‖f‖_p` over point masses (at the source and at distance π/2,
/// smoothed at scale `λ_max/4`) and an oscillatory eigenfunction at
/// frequency about `λ/2`.
///
/// The verdict expects no growth (slope within [`BR_NO_GROWTH_TOLERANCE`]
/// of 0) when `δ > δ(p)` and a slope of at least `(δ(p) − δ)/2` when
/// `δ < δ(p)`.
pub fn br_norm_probe(
    spec: &Arc<SpectralDecomposition>,
    basis: &Basis,
    lambdas: &[f64],
    delta: f64,
    p: f64,
) -> Result<ExperimentReport> {
    let n = basis.manifold().dimension();
    let top = spec.max_frequency();
    let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
    if 4.0 * lmax > top {
        return Err(Error::Truncation(format!(
            "λ = {lmax} needs frequencies up to {} for the smoothed point masses, truncation reaches {top}",
            4.0 * lmax
        )));
    }
    let scale = top / 4.0;
    let points = [
        ("point(source)", smoothed_point_mass(spec, basis, &source_point(basis), scale)?),
        ("point(equator)", smoothed_point_mass(spec, basis, &equator_point(basis), scale)?),
    ];
    let point_norms: Vec<f64> = points
        .iter()
        .map(|(_, f)| lp_norm(basis.grid(), &basis.synthesize(f)?, p))
        .collect::<Result<_>>()?;

    let rows: Vec<[f64; 3]> = lambdas
        .par_iter()
        .map(|&lam| -> Result<[f64; 3]> {
            let op = bochner_riesz(spec, lam, delta)?;
            let ratio = |f: &[f64], fp: f64| -> Result<f64> {
                let g = basis.synthesize(&real_coeffs(&op.apply_real_coeffs(f)?))?;
                Ok(lp_norm(basis.grid(), &g, p)? / fp)
            };
            let mut out = [0.0; 3];
            for (j, (_, f)) in points.iter().enumerate() {
                out[j] = ratio(f, point_norms[j])?;
            }
            let i = (0..spec.len())
                .min_by(|&a, &b| {
                    (spec.frequency(a) - lam / 2.0)
                        .abs()
                        .total_cmp(&(spec.frequency(b) - lam / 2.0).abs())
                })
                .unwrap_or(0);
            let mut e = vec![0.0; spec.len()];
            e[i] = 1.0;
            let f = spec.reconstruct(&e)?;
            out[2] = ratio(&f, lp_norm(basis.grid(), &basis.synthesize(&f)?, p)?)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let crit = delta_br(p, n)?;
    let expectation = if delta > crit {
        Some(Expectation::Near {
            target: 0.0,
            tolerance: BR_NO_GROWTH_TOLERANCE,
        })
    } else if delta < crit {
        Some(Expectation::AtLeast { min: (crit - delta) / 2.0 })
    } else {
        None
    };
    let best = rows.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).collect();
    let mut report = ExperimentReport::new("bochner-riesz", lambdas.to_vec(), best);
    for (j, name) in [points[0].0, points[1].0, "oscillatory"].iter().enumerate() {
        report = report.with_column(*name, rows.iter().map(|r| r[j]).collect());
    }
    report
        .note(format!("n = {n}, p = {p}, δ = {delta}, δ(p) = {crit}"))
        .judge(expectation, 0.25)
}
