//! `L² → L^p` norms of finite-rank spectral multipliers and quasimode
//! ratios.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::exponents::sigma;
use crate::geometry::{lp_norm, Basis, ModelManifold, Point};
use crate::operator::{MultiplierOperator, SpectralDecomposition};

/// Projected-gradient settings for `2 < p < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop when the relative gain of one step drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 8,
            max_iterations: 400,
            tolerance: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorNorm {
    pub p: f64,
    /// Best value found: `‖T a‖_p` for a unit coefficient vector `a`.
    pub lower: f64,
    /// `‖T‖_{2→2}^{2/p} ‖T‖_{2→∞}^{1−2/p}`, valid by Hölder.
    pub upper: f64,
    /// No restart met the convergence tolerance.
    pub stagnated: bool,
    /// Value reached by each restart, in start order.
    pub restarts: Vec<f64>,
    pub best_start: String,
    pub rank: usize,
}

/// Eigenvectors with nonzero coefficient, sampled on the basis grid.
struct Range {
    weights: Vec<f64>,
    /// `|c_i|` per range vector.
    gains: Vec<f64>,
    /// Grid × range.
    values: Array2<f64>,
    indices: Vec<usize>,
}

fn range_on_grid(op: &MultiplierOperator, basis: &Basis) -> Result<Range> {
    let spec = op.spectral();
    if basis.len() != spec.dim() {
        return Err(Error::domain("basis and spectral decomposition differ in size"));
    }
    let indices: Vec<usize> = (0..spec.len()).filter(|&i| op.coefficients()[i].norm() > 0.0).collect();
    let cols: Vec<Vec<f64>> = indices
        .par_iter()
        .map(|&i| basis.synthesize(&spec.vector(i)))
        .collect::<Result<_>>()?;
    // probe points ride along as zero-weight rows: they only enter sup norms
    let probes: Vec<Vec<f64>> = basis
        .probe_points()
        .iter()
        .map(|p| basis.eval_point(p).and_then(|e| spec.project(&e)))
        .collect::<Result<_>>()?;
    let g = basis.grid().len();
    let mut values = Array2::<f64>::zeros((g + probes.len(), indices.len()));
    for (c, col) in cols.iter().enumerate() {
        for (x, v) in col.iter().enumerate() {
            values[[x, c]] = *v;
        }
        for (r, at) in probes.iter().enumerate() {
            values[[g + r, c]] = at[indices[c]];
        }
    }
    let mut weights = basis.grid().weights().to_vec();
    weights.resize(g + probes.len(), 0.0);
    Ok(Range {
        weights,
        gains: indices.iter().map(|&i| op.coefficients()[i].norm()).collect(),
        values,
        indices,
    })
}

impl Range {
    fn sup_profile(&self) -> Vec<f64> {
        self.values
            .outer_iter()
            .map(|row| row.iter().zip(&self.gains).map(|(v, c)| (c * v).powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    fn image(&self, a: &[f64]) -> Vec<f64> {
        let b: Vec<f64> = a.iter().zip(&self.gains).map(|(x, c)| x * c).collect();
        self.values.dot(&Array1::from(b)).to_vec()
    }

    fn lp(&self, g: &[f64], p: f64) -> f64 {
        let top = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return 0.0;
        }
        let s: f64 = g.iter().zip(&self.weights).map(|(v, w)| w * (v.abs() / top).powf(p)).sum();
        top * s.powf(1.0 / p)
    }

    /// Gradient direction of `‖T a‖_p^p` in `a`, normalized.
    fn ascent_direction(&self, g: &[f64], p: f64) -> Vec<f64> {
        let top = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h: Vec<f64> = g
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v.abs() / top).powf(p - 2.0) * v)
            .collect();
        let t = self.values.t().dot(&Array1::from(h));
        let mut d: Vec<f64> = t.iter().zip(&self.gains).map(|(x, c)| x * c).collect();
        normalize(&mut d);
        d
    }

    fn kernel_column(&self, x: usize) -> Vec<f64> {
        let mut a: Vec<f64> = (0..self.gains.len()).map(|c| self.gains[c] * self.values[[x, c]]).collect();
        normalize(&mut a);
        a
    }
}

fn normalize(a: &mut [f64]) -> f64 {
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `(value, converged)` of projected gradient ascent on the unit sphere.
fn ascend(r: &Range, p: f64, mut a: Vec<f64>, opts: &AscentOptions) -> (f64, bool) {
    if normalize(&mut a) == 0.0 {
        return (0.0, false);
    }
    let mut g = r.image(&a);
    let mut val = r.lp(&g, p);
    for _ in 0..opts.max_iterations {
        let d = r.ascent_direction(&g, p);
        let mut t = 1.0;
        let mut improved = None;
        while t > 1e-6 {
            let mut trial: Vec<f64> = a.iter().zip(&d).map(|(x, y)| (1.0 - t) * x + t * y).collect();
            if normalize(&mut trial) > 0.0 {
                let gt = r.image(&trial);
                let vt = r.lp(&gt, p);
                if vt > val {
                    improved = Some((trial, gt, vt));
                    break;
                }
            }
            t *= 0.5;
        }
        match improved {
            Some((trial, gt, vt)) => {
                let gain = (vt - val) / val;
                a = trial;
                g = gt;
                val = vt;
                if gain < opts.tolerance {
                    return (val, true);
                }
            }
            None => return (val, true),
        }
    }
    (val, false)
}

fn nearest_node(basis: &Basis, target: &Point) -> usize {
    let m = basis.manifold();
    (0..basis.grid().len())
        .min_by(|&i, &j| {
            m.distance(&basis.grid().point(i), target)
                .total_cmp(&m.distance(&basis.grid().point(j), target))
        })
        .unwrap_or(0)
}

/// `‖T‖_{L²→L^p}` of a finite-rank multiplier, norms on the basis grid.
///
/// `p = 2` and `p = ∞` are exact; in between, a lower bound from
/// projected gradient ascent started at point-concentrated, highest-weight
/// and seeded random coefficient vectors, with a certified upper bound.
pub fn projector_norm(op: &MultiplierOperator, basis: &Basis, p: f64, opts: &AscentOptions) -> Result<ProjectorNorm> {
    if !(p >= 2.0) {
        return Err(Error::domain(format!("L²→L^p norms need p >= 2, got {p}")));
    }
    let two = op.coefficients().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let exact = |v: f64| ProjectorNorm {
        p,
        lower: v,
        upper: v,
        stagnated: false,
        restarts: Vec::new(),
        best_start: "exact".into(),
        rank: op.coefficients().iter().filter(|c| c.norm() > 0.0).count(),
    };
    if two == 0.0 {
        return Ok(exact(0.0));
    }
    if p == 2.0 {
        return Ok(exact(two));
    }
    let r = range_on_grid(op, basis)?;
    let profile = r.sup_profile();
    let (argmax, sup) = profile
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if p.is_infinite() {
        return Ok(exact(sup));
    }
    let upper = two.powf(2.0 / p) * sup.powf(1.0 - 2.0 / p);

    let mut starts: Vec<(String, Vec<f64>)> = Vec::new();
    // on spheres the north pole is the first probe row
    let pole_row = match basis.manifold() {
        ModelManifold::Torus { n } => nearest_node(basis, &Point::Torus(vec![0.0; n])),
        _ => basis.grid().len(),
    };
    starts.push(("point-concentrated(pole)".into(), r.kernel_column(pole_row)));
    starts.push(("point-concentrated(sup)".into(), r.kernel_column(argmax)));
    if let Some(hw) = highest_weight(&r, op.spectral(), basis) {
        starts.push(("highest-weight".into(), hw));
    }
    let equator = match basis.manifold() {
        ModelManifold::Torus { n } => Point::Torus(vec![std::f64::consts::PI; n]),
        ModelManifold::SphereFull2d => Point::Sphere {
            theta: std::f64::consts::FRAC_PI_2,
            azimuth: 0.0,
        },
        _ => Point::Zonal(std::f64::consts::FRAC_PI_2),
    };
    starts.push(("point-concentrated(equator)".into(), r.kernel_column(nearest_node(basis, &equator))));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.restarts.max(1) {
        let a: Vec<f64> = (0..r.gains.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        starts.push((format!("random({})", starts.len()), a));
    }
    starts.truncate(opts.restarts.max(1));

    let results: Vec<(f64, bool)> = starts.iter().map(|(_, a)| ascend(&r, p, a.clone(), opts)).collect();
    let (best, _) = results
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |(bi, bv), (i, &(v, _))| if v > bv { (i, v) } else { (bi, bv) });
    Ok(ProjectorNorm {
        p,
        lower: results[best].0.min(upper),
        upper,
        stagnated: results.iter().all(|(_, c)| !c),
        restarts: results.iter().map(|(v, _)| *v).collect(),
        best_start: starts[best].0.clone(),
        rank: r.indices.len(),
    })
}

/// The range vector with the largest mean `|order|`: sectoral harmonics on
/// S², top lattice modes on the torus.
fn highest_weight(r: &Range, spec: &SpectralDecomposition, basis: &Basis) -> Option<Vec<f64>> {
    let modes = basis.modes();
    let score = |i: usize| -> f64 {
        spec.vector(i)
            .iter()
            .zip(modes)
            .map(|(v, m)| v * v * (m.order.unsigned_abs() as f64 + m.lattice.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64))
            .sum()
    };
    let (c, _) = r
        .indices
        .iter()
        .enumerate()
        .map(|(c, &i)| (c, score(i)))
        .max_by(|x, y| x.1.total_cmp(&y.1))?;
    let mut a = vec![0.0; r.indices.len()];
    a[c] = 1.0;
    Some(a)
}

/// `‖u‖_p / (λ^{σ(p)−1} ‖(H − (λ+i)²) u‖₂ + λ^{σ(p)} ‖u‖₂)` for `u` given by
/// basis coefficients; `H` has spectrum `λ_i(V)² = μ_i + N`.
pub fn quasimode_ratio(u: &[f64], spec: &SpectralDecomposition, basis: &Basis, lambda: f64, p: f64) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::domain(format!("quasimode ratio needs λ >= 1, got {lambda}")));
    }
    let a = spec.project(u)?;
    let l2 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(Error::domain("quasimode ratio of the zero function"));
    }
    let z = Complex64::new(lambda, 1.0).powi(2);
    let defect = a
        .iter()
        .enumerate()
        .map(|(i, x)| (Complex64::new(spec.frequency(i).powi(2), 0.0) - z).norm_sqr() * x * x)
        .sum::<f64>()
        .sqrt();
    let s = sigma(p, basis.manifold().dimension())?;
    let up = if p.is_infinite() {
        basis.sup_norm(u)?
    } else {
        lp_norm(basis.grid(), &basis.synthesize(u)?, p)?
    };
    Ok(up / (lambda.powf(s - 1.0) * defect + lambda.powf(s) * l2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_basis;
    use crate::operator::{assemble, band_projector, diagonalize};
    use crate::potentials::Potential;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn free(manifold: ModelManifold, k: usize) -> (Basis, Arc<SpectralDecomposition>) {
        let b = build_basis(manifold, k).unwrap();
        let s = diagonalize(&assemble(&Potential::zero(), &b).unwrap()).unwrap();
        (b, Arc::new(s))
    }

    #[test]
    fn sup_norm_of_degree_projector() {
        let (b, s) = free(ModelManifold::SphereFull2d, 12);
        for k in [3usize, 7, 12] {
            let lam = ((k * (k + 1)) as f64).sqrt();
            let p = band_projector(&s, lam).unwrap();
            let n = projector_norm(&p, &b, f64::INFINITY, &AscentOptions::default()).unwrap();
            let want = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt();
            assert!((n.lower - want).abs() < 1e-12 * want, "k={k}");
            assert_eq!(n.lower, n.upper);
            assert_eq!(projector_norm(&p, &b, 2.0, &AscentOptions::default()).unwrap().lower, 1.0);
        }
    }

    #[test]
    fn rank_one_norm_is_mode_norm() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 10);
        let p = band_projector(&s, (20f64).sqrt()).unwrap();
        assert_eq!(p.coefficients().iter().filter(|c| c.norm() > 0.0).count(), 1);
        let i = (0..s.len()).find(|&i| p.coefficients()[i].norm() > 0.0).unwrap();
        let e = b.synthesize(&s.vector(i)).unwrap();
        for q in [3.0, 6.0] {
            let n = projector_norm(&p, &b, q, &AscentOptions::default()).unwrap();
            let want = lp_norm(b.grid(), &e, q).unwrap();
            assert!((n.lower - want).abs() < 1e-10 * want);
            assert!(n.lower <= n.upper);
        }
    }

    #[test]
    fn intermediate_norm_between_bounds() {
        let (b, s) = free(ModelManifold::SphereFull2d, 16);
        let p = band_projector(&s, (110f64).sqrt()).unwrap();
        let n = projector_norm(&p, &b, 6.0, &AscentOptions::default()).unwrap();
        assert!(n.lower > 0.0 && n.lower <= n.upper);
        assert_eq!(n.restarts.len(), 8);
        // the zonal harmonic alone is a valid lower bound
        let zonal: Vec<f64> = b.modes().iter().map(|m| if m.degree == 10 && m.order == 0 { 1.0 } else { 0.0 }).collect();
        let z = lp_norm(b.grid(), &b.synthesize(&zonal).unwrap(), 6.0).unwrap();
        assert!(n.lower >= z * (1.0 - 1e-9));
    }

    #[test]
    fn quasimode_on_eigenfunction() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 12);
        let s = Arc::new((*s).clone().with_shift(0));
        let k = 6;
        let lam = ((k * (k + 1)) as f64).sqrt();
        let mut u = vec![0.0; b.len()];
        u[k] = 2.0;
        let r = quasimode_ratio(&u, &s, &b, lam, 4.0).unwrap();
        let sg = sigma(4.0, 2).unwrap();
        let up = lp_norm(b.grid(), &b.synthesize(&u).unwrap(), 4.0).unwrap();
        let d = (Complex64::new(lam * lam, 0.0) - Complex64::new(lam, 1.0).powi(2)).norm();
        let want = up / (lam.powf(sg - 1.0) * d * 2.0 + lam.powf(sg) * 2.0);
        assert!((r - want).abs() < 1e-13 * want);
        // scale invariance
        let u3: Vec<f64> = u.iter().map(|x| -3.0 * x).collect();
        assert!((quasimode_ratio(&u3, &s, &b, lam, 4.0).unwrap() - r).abs() < 1e-13 * r);
        assert!(quasimode_ratio(&vec![0.0; b.len()], &s, &b, lam, 4.0).is_err());
    }

    #[test]
    fn zonal_sup_quasimode_bounded() {
        let (b, s) = free(ModelManifold::sphere_zonal(2).unwrap(), 64);
        let s = Arc::new((*s).clone().with_shift(0));
        let ratios: Vec<f64> = [4usize, 8, 16, 32, 64]
            .iter()
            .map(|&k| {
                let mut u = vec![0.0; b.len()];
                u[k] = 1.0;
                quasimode_ratio(&u, &s, &b, ((k * (k + 1)) as f64).sqrt(), f64::INFINITY).unwrap()
            })
            .collect();
        // oracle: ‖Z_k‖_∞ = √((2k+1)/4π) at the pole, and |λ² − (λ+i)²| = √(1+4λ²)
        for (&k, r) in [4usize, 8, 16, 32, 64].iter().zip(&ratios) {
            let lam = ((k * (k + 1)) as f64).sqrt();
            let want = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt() / (lam.powf(-0.5) * (1.0 + 4.0 * lam * lam).sqrt() + lam.sqrt());
            assert!((r - want).abs() < 1e-10 * want);
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 1.2);
    }

    #[test]
    fn constant_quasimode() {
        let (b, s) = free(ModelManifold::SphereFull2d, 4);
        let mut u = vec![0.0; b.len()];
        u[0] = 1.0;
        let r = quasimode_ratio(&u, &s, &b, 1.0, 6.0).unwrap();
        // unshifted: |0 − (1+i)²| = 2
        let want = (4.0 * PI).powf(1.0 / 6.0 - 0.5) / 3.0;
        assert!((r - want).abs() < 1e-12);
    }
}
