//! The Kato modulus `m(r) = sup_x ∫_{B_r(x)} h_n(d(x, y)) |V(y)| dy` and
//! `L^q` norms of potentials, both with divergence detection.
//!
//! Pole-centred balls are integrated in geodesic polar coordinates with the
//! radial variable in log scale, `ρ = r e^{-s}`, so that the integrand can be
//! evaluated in log space down to radii far below `f64::MIN_POSITIVE`. The
//! radial integral is cut at an absolute radius `e^{-depth}`; an integral is
//! declared divergent when two successive 4× increases of `depth` each grow
//! it by more than 10%.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::{Error, Result};
use crate::geometry::grid::pole_rule;
use crate::geometry::{GradedOptions, ModelManifold, QuadratureGrid};
use crate::orthopoly::{sphere_volume, Rule1d};

/// Growth factor that marks a refinement step as divergent.
const DIVERGENCE_GROWTH: f64 = 1.10;

/// `|ln r|` for `n = 2`, `r^{2-n}` for `n ≥ 3`.
pub fn h_n(n: usize, r: f64) -> f64 {
    if n == 2 {
        r.ln().abs()
    } else {
        r.powi(2 - n as i32)
    }
}

fn ln_h_n(n: usize, ln_r: f64) -> f64 {
    if n == 2 {
        ln_r.abs().ln()
    } else {
        (2.0 - n as f64) * ln_r
    }
}

fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.into_iter().filter(|t| !t.is_nan()).collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    top + v.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoOptions {
    /// Regularization: radial integrals stop at `ρ = e^{-depth}`.
    pub depth: f64,
    /// Number of off-singularity centres (uniform in the polar angle).
    pub centers: usize,
    pub nodes_per_panel: usize,
}

impl Default for KatoOptions {
    fn default() -> Self {
        KatoOptions {
            depth: 64.0,
            centers: 64,
            nodes_per_panel: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoModulus {
    pub radius: f64,
    /// `+∞` when divergent.
    pub value: f64,
    /// Value with the radial cutoff `e^{-depth}`.
    pub regularized: f64,
    /// Values at depth, 4·depth and 16·depth for the maximizing centre.
    pub refinements: Vec<f64>,
    pub status: Status,
    /// Polar angle of the maximizing centre.
    pub center: f64,
}

/// Kato modulus with default options.
pub fn kato_modulus(v: &Potential, r: f64, n: usize) -> Result<KatoModulus> {
    kato_modulus_with(v, r, n, &KatoOptions::default())
}

pub fn kato_modulus_with(v: &Potential, r: f64, n: usize, opts: &KatoOptions) -> Result<KatoModulus> {
    if n < 2 {
        return Err(Error::domain("Kato modulus needs n >= 2"));
    }
    if let Potential::Torus { expr } = v {
        if !expr.is_constant() {
            return torus_modulus(v, r, n);
        }
    }
    if !(r > 0.0 && r < PI / 2.0) {
        return Err(Error::domain(format!("Kato radius must lie in (0, π/2), got {r}")));
    }
    if let Some(c) = v.constant_value() {
        if c == 0.0 {
            return Ok(KatoModulus {
                radius: r,
                value: 0.0,
                regularized: 0.0,
                refinements: vec![0.0; 3],
                status: Status::Converged,
                center: 0.0,
            });
        }
    }
    let depths = [opts.depth, 4.0 * opts.depth, 16.0 * opts.depth];

    // Candidates: both poles, then a uniform ring of centres.
    let mut centers = vec![0.0, PI];
    centers.extend((0..opts.centers).map(|j| PI * (j as f64 + 0.5) / opts.centers as f64));
    let rows: Vec<Result<Vec<f64>>> = centers
        .par_iter()
        .map(|&c| {
            depths
                .iter()
                .enumerate()
                .map(|(level, &d)| {
                    if c == 0.0 || c == PI {
                        pole_centered(v, n, r, c == 0.0, d, opts.nodes_per_panel)
                    } else {
                        off_pole(v, n, r, c, level, opts.nodes_per_panel)
                    }
                })
                .collect()
        })
        .collect();
    let mut best: Option<(usize, Vec<f64>, Status)> = None;
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        let st = classify(&row);
        let key = |row: &[f64], st: Status| if st == Status::Divergent { f64::INFINITY } else { row[0] };
        let better = match &best {
            None => true,
            Some((_, b, bst)) => key(&row, st) > key(b, *bst),
        };
        if better {
            best = Some((i, row, st));
        }
    }
    let (i, row, status) = best.expect("at least one centre");
    Ok(KatoModulus {
        radius: r,
        value: if status == Status::Divergent { f64::INFINITY } else { row[0] },
        regularized: row[0],
        refinements: row.clone(),
        status,
        center: centers[i],
    })
}

fn classify(row: &[f64]) -> Status {
    let grows = |a: f64, b: f64| b > DIVERGENCE_GROWTH * a && b > 0.0;
    if grows(row[0], row[1]) && grows(row[1], row[2]) {
        Status::Divergent
    } else if (row[2] - row[1]).abs() <= 1e-3 * row[2].abs().max(1e-300) || row[2] == 0.0 {
        Status::Converged
    } else {
        Status::Inconclusive
    }
}

/// Ball integral around a pole, radial cutoff `e^{-depth}`.
fn pole_centered(v: &Potential, n: usize, r: f64, north: bool, depth: f64, m: usize) -> Result<f64> {
    let s_max = (r.ln() + depth).max(1.0);
    let (s, w) = pole_rule(s_max, m)?;
    let ln_vol = sphere_volume(n - 1).ln();
    let nm1 = n as f64 - 1.0;
    let ln_r = r.ln();
    let terms = s.iter().zip(&w).map(|(&si, &wi)| {
        let ln_rho = ln_r - si;
        let (ln_v, sign) = v.zonal_ln_abs(north, ln_rho);
        if sign == 0.0 {
            return f64::NEG_INFINITY;
        }
        let rho = ln_rho.exp();
        let ln_sin = if rho > 1e-4 { rho.sin().ln() } else { ln_rho - rho * rho / 6.0 };
        ln_vol + ln_h_n(n, ln_rho) + ln_v + nm1 * ln_sin + ln_rho + wi.ln()
    });
    Ok(log_sum_exp(terms).exp())
}

/// Breaks on `[a, b]` graded geometrically toward each point in `focus`.
fn graded_breaks(a: f64, b: f64, focus: &[f64], levels: usize, base: usize) -> Vec<f64> {
    let mut br: Vec<f64> = (0..=base).map(|j| a + (b - a) * j as f64 / base as f64).collect();
    for &p in focus {
        if p < a || p > b {
            continue;
        }
        br.push(p);
        let h = (b - a) / base as f64;
        for j in 0..levels {
            let d = h * 0.5f64.powi(j as i32);
            for q in [p - d, p + d] {
                if q > a && q < b {
                    br.push(q);
                }
            }
        }
    }
    br.sort_by(f64::total_cmp);
    br.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    br
}

/// Ball integral around an ordinary centre `phi0` in polar coordinates
/// `(ρ, ψ)`, `ψ` measured from the direction of the north pole.
fn off_pole(v: &Potential, n: usize, r: f64, phi0: f64, level: usize, m: usize) -> Result<f64> {
    let levels = 24 + 8 * level;
    let base = 4 << level;
    let mut rho_focus = vec![0.0];
    let mut psi_focus = Vec::new();
    if phi0 < r {
        rho_focus.push(phi0);
        psi_focus.push(0.0);
    }
    if PI - phi0 < r {
        rho_focus.push(PI - phi0);
        psi_focus.push(PI);
    }
    for b in v.breakpoints() {
        if (b - phi0).abs() < r {
            rho_focus.push((b - phi0).abs());
        }
    }
    let rho_rule = Rule1d::composite(&graded_breaks(0.0, r, &rho_focus, levels, base), m)?;
    let psi_rule = Rule1d::composite(&graded_breaks(0.0, PI, &psi_focus, levels, base), m)?;
    let surf = sphere_volume(n - 2);
    let s0 = phi0.sin();
    let mut total = 0.0;
    for (&rho, &wr) in rho_rule.nodes.iter().zip(&rho_rule.weights) {
        let radial = wr * h_n(n, rho) * rho.sin().powi(n as i32 - 1);
        if radial == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (&psi, &wp) in psi_rule.nodes.iter().zip(&psi_rule.weights) {
            // stable distances to both poles
            let a = ((phi0 - rho) / 2.0).sin();
            let north2 = a * a + s0 * rho.sin() * (psi / 2.0).sin().powi(2);
            let b = ((phi0 + rho) / 2.0).cos();
            let south2 = b * b + s0 * rho.sin() * (psi / 2.0).cos().powi(2);
            let (north, d) = if north2 <= south2 {
                (true, 2.0 * north2.sqrt().min(1.0).asin())
            } else {
                (false, 2.0 * south2.sqrt().min(1.0).asin())
            };
            let val = v.zonal_value(north, d.ln()).abs();
            inner += wp * val * psi.sin().powi(n as i32 - 2);
        }
        total += radial * inner;
    }
    Ok(surf * total)
}

/// Flat bound on the torus: `sup |V| · ∫_{B_r} h_n(|y|) dy`.
fn torus_modulus(v: &Potential, r: f64, n: usize) -> Result<KatoModulus> {
    if !(r > 0.0 && r < PI) {
        return Err(Error::domain(format!("Kato radius must lie in (0, π), got {r}")));
    }
    let grid = QuadratureGrid::torus_uniform(n, if n <= 2 { 128 } else { 32 })?;
    let mut sup: f64 = 0.0;
    for i in 0..grid.len() {
        sup = sup.max(v.eval_point(&grid.point(i))?.abs());
    }
    let ball = if n == 2 {
        2.0 * PI * (-(r * r / 2.0) * r.ln() + r * r / 4.0)
    } else {
        sphere_volume(n - 1) * r * r / 2.0
    };
    let val = sup * ball;
    Ok(KatoModulus {
        radius: r,
        value: val,
        regularized: val,
        refinements: vec![val; 3],
        status: Status::Converged,
        center: 0.0,
    })
}

/// Engineering thresholds for the Kato verdict (recorded in every report).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoThresholds {
    /// In-Kato when `m(r_min) ≤ vanish · m(r_max)`.
    pub vanish: f64,
    /// Not-in-Kato when `m(r) ≥ floor · m(r_max)` for every radius over at
    /// least three dyadic scales, or when the modulus diverges.
    pub floor: f64,
}

impl Default for KatoThresholds {
    fn default() -> Self {
        KatoThresholds { vanish: 0.05, floor: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KatoVerdict {
    InKato,
    NotInKato,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub exponent: f64,
    /// `+∞` when divergent.
    pub value: f64,
    pub divergent: bool,
    /// `(depth, value)` at the finite log-depths used for the divergence test.
    pub depth_values: Vec<(f64, f64)>,
    /// Relative change of the full-depth value under a bulk refinement.
    pub refinement_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoReport {
    pub n: usize,
    pub potential: String,
    pub singularities: Vec<super::Singularity>,
    pub options: KatoOptions,
    pub thresholds: KatoThresholds,
    pub moduli: Vec<KatoModulus>,
    /// Regularized `m(r_min) / m(r_max)`.
    pub ratio: f64,
    pub verdict: KatoVerdict,
    pub ln_half_norm: NormEstimate,
    /// Positivity shift, filled in by callers that assemble the operator.
    pub shift: Option<i64>,
}

/// Kato moduli on `radii` (sorted to decreasing order), verdict and
/// `L^{n/2}` norm.
pub fn kato_report(
    v: &Potential,
    manifold: ModelManifold,
    radii: &[f64],
    opts: &KatoOptions,
    thresholds: &KatoThresholds,
) -> Result<KatoReport> {
    if radii.is_empty() {
        return Err(Error::config("Kato report needs at least one radius"));
    }
    let n = manifold.dimension();
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let moduli = radii
        .iter()
        .map(|&r| kato_modulus_with(v, r, n, opts))
        .collect::<Result<Vec<_>>>()?;
    let first = moduli[0].regularized;
    let last = moduli.last().unwrap().regularized;
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    let span = radii[0] / radii[radii.len() - 1];
    let all_divergent = moduli.iter().all(|m| m.status == Status::Divergent);
    let all_converged = moduli.iter().all(|m| m.status == Status::Converged);
    let stagnates = span >= 8.0 && moduli.iter().all(|m| m.regularized >= thresholds.floor * first) && first > 0.0;
    let verdict = if all_divergent || (stagnates && moduli.iter().all(|m| m.status != Status::Inconclusive)) {
        KatoVerdict::NotInKato
    } else if all_converged && last <= thresholds.vanish * first.max(f64::MIN_POSITIVE) {
        KatoVerdict::InKato
    } else {
        KatoVerdict::Inconclusive
    };
    Ok(KatoReport {
        n,
        potential: v.spec(),
        singularities: v.singularities(),
        options: opts.clone(),
        thresholds: thresholds.clone(),
        moduli,
        ratio,
        verdict,
        ln_half_norm: ln_half_norm(v, manifold)?,
        shift: None,
    })
}

/// `‖V‖_{L^{n/2}}`.
pub fn ln_half_norm(v: &Potential, manifold: ModelManifold) -> Result<NormEstimate> {
    lq_norm(v, manifold, manifold.dimension() as f64 / 2.0)
}

/// `(∫ |V|^q)^{1/q}` with pole-graded quadrature and divergence detection.
pub fn lq_norm(v: &Potential, manifold: ModelManifold, q: f64) -> Result<NormEstimate> {
    if !(q > 0.0) {
        return Err(Error::domain(format!("norm exponent must be positive, got {q}")));
    }
    v.check_manifold(manifold)?;
    let n = manifold.dimension();
    if !manifold.is_sphere() {
        let grid = QuadratureGrid::torus_uniform(n, if n <= 2 { 256 } else { 48 })?;
        let mut vals = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            vals.push(v.eval_point(&grid.point(i))?);
        }
        let s: f64 = vals.iter().zip(grid.weights()).map(|(x, w)| w * x.abs().powf(q)).sum();
        let val = s.powf(1.0 / q);
        return Ok(NormEstimate {
            exponent: q,
            value: val,
            divergent: false,
            depth_values: vec![],
            refinement_change: 0.0,
        });
    }
    let ln_integral = |opts: &GradedOptions| -> Result<f64> {
        let g = QuadratureGrid::zonal_graded(n, opts)?;
        let z = g.zonal().expect("zonal");
        let terms = (0..g.len()).map(|i| {
            let (lv, s) = v.zonal_ln_abs(z.is_north(i), z.ln_pole_distance[i]);
            if s == 0.0 {
                f64::NEG_INFINITY
            } else {
                g.ln_weights()[i] + q * lv
            }
        });
        Ok(log_sum_exp(terms))
    };
    let base = GradedOptions::for_degree(16).with_breakpoints(&v.breakpoints());
    let mut depth_values = Vec::new();
    let mut lns = Vec::new();
    let mut o = base.clone().with_depth(64.0);
    for _ in 0..3 {
        let l = ln_integral(&o)?;
        lns.push(l);
        depth_values.push((o.depth, (l / q).exp()));
        o = GradedOptions {
            depth: o.depth * 4.0,
            ..o
        };
    }
    let g = DIVERGENCE_GROWTH.ln();
    let divergent = lns[1] - lns[0] > g && lns[2] - lns[1] > g;
    let full = ln_integral(&base)?;
    let fine = ln_integral(&base.refined())?;
    let refinement_change = ((fine - full) / q).exp_m1().abs();
    Ok(NormEstimate {
        exponent: q,
        value: if divergent { f64::INFINITY } else { (full / q).exp() },
        divergent,
        depth_values,
        refinement_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize) -> ModelManifold {
        ModelManifold::sphere_zonal(n).unwrap()
    }

    #[test]
    fn zero_and_constant_potentials() {
        let z = kato_modulus(&Potential::zero(), 0.1, 3).unwrap();
        assert_eq!(z.value, 0.0);
        // V ≡ 1, n = 2: flat oracle 2π(−(r²/2)ln r + r²/4)
        let r: f64 = 0.1;
        let flat = 2.0 * PI * (-(r * r / 2.0) * r.ln() + r * r / 4.0);
        let m = kato_modulus(&Potential::Constant(1.0), r, 2).unwrap();
        assert_eq!(m.status, Status::Converged);
        assert!((m.value / flat - 1.0).abs() < 0.02, "{} vs {flat}", m.value);
    }

    #[test]
    fn radius_range() {
        assert!(kato_modulus(&Potential::Constant(1.0), 0.0, 3).is_err());
        assert!(kato_modulus(&Potential::Constant(1.0), 2.0, 3).is_err());
    }

    #[test]
    fn counterexample_is_not_kato() {
        let v = Potential::Counterexample { n: 3 };
        let rep = kato_report(&v, s(3), &[1e-1, 1e-2, 1e-3], &KatoOptions::default(), &KatoThresholds::default()).unwrap();
        assert_eq!(rep.verdict, KatoVerdict::NotInKato);
        assert!(rep.ratio > 0.3, "ratio {}", rep.ratio);
        assert!(rep.moduli.iter().all(|m| m.value.is_infinite()));
        assert!(!rep.ln_half_norm.divergent);
    }

    #[test]
    fn bounded_potential_is_kato() {
        let v = Potential::parse("10*cos(phi)", s(3), false).unwrap();
        let rep = kato_report(&v, s(3), &[1e-1, 1e-2, 1e-3], &KatoOptions::default(), &KatoThresholds::default()).unwrap();
        assert_eq!(rep.verdict, KatoVerdict::InKato);
        let w = Potential::TruncatedCounterexample { n: 2, cut: 0.3 };
        let rep = kato_report(&w, s(2), &[1e-1, 1e-2, 1e-3], &KatoOptions::default(), &KatoThresholds::default()).unwrap();
        assert_eq!(rep.verdict, KatoVerdict::InKato);
    }

    #[test]
    fn modulus_monotone_in_radius() {
        let v = Potential::parse("1 + cos(phi)^2", s(3), false).unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.4, 0.2, 0.1, 0.05] {
            let m = kato_modulus(&v, r, 3).unwrap().value;
            assert!(m <= prev * (1.0 + 1e-9));
            prev = m;
        }
    }

    #[test]
    fn constant_norm() {
        let e = lq_norm(&Potential::Constant(-2.0), s(3), 1.5).unwrap();
        let want = 2.0 * sphere_volume(3).powf(1.0 / 1.5);
        assert!((e.value - want).abs() < 1e-9 * want);
    }

    #[test]
    fn counterexample_norms() {
        for n in 3..=5 {
            let v = Potential::Counterexample { n };
            let e = ln_half_norm(&v, s(n)).unwrap();
            assert!(!e.divergent && e.value.is_finite(), "n={n} {e:?}");
            assert!(e.refinement_change < 0.01);
            let d = lq_norm(&v, s(n), n as f64 / 2.0 + 0.25).unwrap();
            assert!(d.divergent, "n={n} {d:?}");
        }
    }
}
