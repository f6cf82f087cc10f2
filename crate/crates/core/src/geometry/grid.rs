use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{sphere_volume, GegenbauerFamily, Rule1d};

/// A point of a model manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Polar angle on a sphere (zonal sector).
    Zonal(f64),
    /// Polar angle and azimuth on S².
    Sphere { theta: f64, azimuth: f64 },
    /// Angles on the torus.
    Torus(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    /// Gauss nodes in `cos(phi)` on S^n (zonal sector).
    ZonalGauss { n: usize, nodes: usize },
    /// Composite rule with logarithmically graded segments at both poles.
    ZonalGraded { n: usize, nodes: usize },
    /// Gauss-Legendre in `cos(theta)` times a uniform azimuth grid on S².
    SphereProduct { n_theta: usize, n_azimuth: usize },
    /// Uniform grid with `per_axis` points on each circle of T^n.
    Torus { n: usize, per_axis: usize },
}

/// Per-node data of a zonal grid. Near the poles `phi` may underflow; the
/// log-distance column stays exact, so singular integrands can be evaluated
/// in log space.
#[derive(Debug, Clone)]
pub struct ZonalNodes {
    pub phi: Vec<f64>,
    pub cos_phi: Vec<f64>,
    pub sin_phi: Vec<f64>,
    /// `ln` of the geodesic distance to the nearer pole.
    pub ln_pole_distance: Vec<f64>,
}

impl ZonalNodes {
    fn push(&mut self, phi: f64, cos: f64, sin: f64, ln_dist: f64) {
        self.phi.push(phi);
        self.cos_phi.push(cos);
        self.sin_phi.push(sin);
        self.ln_pole_distance.push(ln_dist);
    }

    fn with_capacity(c: usize) -> Self {
        ZonalNodes {
            phi: Vec::with_capacity(c),
            cos_phi: Vec::with_capacity(c),
            sin_phi: Vec::with_capacity(c),
            ln_pole_distance: Vec::with_capacity(c),
        }
    }

    /// Whether node `i` lies in the northern hemisphere (`phi < π/2`).
    pub fn is_north(&self, i: usize) -> bool {
        self.cos_phi[i] >= 0.0
    }
}

#[derive(Debug, Clone)]
enum Nodes {
    Zonal(ZonalNodes),
    Sphere {
        cos_theta: Vec<f64>,
        sin_theta: Vec<f64>,
        theta: Vec<f64>,
        azimuth: Vec<f64>,
    },
    Torus,
}

/// Layout of a pole-graded zonal grid.
///
/// Near each pole the polar distance is written as `a·e^{-s}` and the
/// `s`-axis is covered by Gauss panels of geometrically growing width up to
/// `depth` (or to `s = ∞` through a reciprocal map when `depth` is
/// infinite). The bulk `[a, π − a]` uses uniform composite panels, split at
/// any declared breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedOptions {
    pub pole_scale: f64,
    pub depth: f64,
    pub bulk_width: f64,
    pub nodes_per_panel: usize,
    pub breakpoints: Vec<f64>,
}

impl GradedOptions {
    /// Layout resolving products of zonal modes up to degree `k`.
    pub fn for_degree(k: usize) -> Self {
        let kf = k.max(1) as f64;
        GradedOptions {
            pole_scale: (2.0 / kf).min(0.1),
            depth: f64::INFINITY,
            bulk_width: (4.0 / kf).min(0.2),
            nodes_per_panel: 16,
            breakpoints: Vec::new(),
        }
    }

    /// Finite log-depth `2^level` at both poles; used to probe how a
    /// function behaves as the grid reaches closer to the poles.
    pub fn pole_level(k: usize, level: u32) -> Self {
        GradedOptions {
            depth: 2f64.powi(level as i32),
            ..Self::for_degree(k)
        }
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_breakpoints(mut self, b: &[f64]) -> Self {
        self.breakpoints = b.to_vec();
        self
    }

    /// One 4× refinement step: four times the log-depth, a quarter of the
    /// bulk panel width.
    pub fn refined(&self) -> Self {
        GradedOptions {
            depth: self.depth * 4.0,
            bulk_width: self.bulk_width / 4.0,
            ..self.clone()
        }
    }
}

/// Nodes and positive weights carrying the volume element of the manifold.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    kind: GridKind,
    nodes: Nodes,
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
    resolved_degree: usize,
}

impl QuadratureGrid {
    /// Gauss-Gegenbauer rule in `cos(phi)` with `count` nodes on S^n; exact
    /// for polynomials in `cos(phi)` of degree `2 count - 1`.
    pub fn zonal_gauss(n: usize, count: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("sphere dimension must be >= 2"));
        }
        let fam = GegenbauerFamily::new(n, count);
        let (x, w) = fam.gauss_rule(count)?;
        let surf = sphere_volume(n - 1);
        let mut z = ZonalNodes::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        // ascending phi = descending x
        for (&xi, &wi) in x.iter().zip(&w).rev() {
            let phi = xi.clamp(-1.0, 1.0).acos();
            let sin = (1.0 - xi * xi).max(0.0).sqrt();
            let d = phi.min(PI - phi);
            z.push(phi, xi, sin, d.ln());
            weights.push(wi * surf);
        }
        let ln_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(QuadratureGrid {
            kind: GridKind::ZonalGauss { n, nodes: count },
            nodes: Nodes::Zonal(z),
            weights,
            ln_weights,
            resolved_degree: 2 * count - 1,
        })
    }

    /// Composite zonal rule graded toward both poles.
    pub fn zonal_graded(n: usize, opts: &GradedOptions) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("sphere dimension must be >= 2"));
        }
        if !(opts.depth > 0.0) || !(opts.bulk_width > 0.0) || opts.nodes_per_panel < 2 {
            return Err(Error::domain("graded grid needs positive depth, panel width and >= 2 nodes per panel"));
        }
        let mut bps: Vec<f64> = opts
            .breakpoints
            .iter()
            .copied()
            .filter(|b| *b > 0.0 && *b < PI)
            .collect();
        bps.sort_by(f64::total_cmp);
        let mut a = opts.pole_scale.clamp(1e-6, 0.5);
        for &b in &bps {
            a = a.min(0.5 * b.min(PI - b));
        }
        let m = opts.nodes_per_panel;
        let surf = sphere_volume(n - 1);
        let ln_surf = surf.ln();
        let nm1 = n as f64 - 1.0;

        // bulk breaks
        let mut breaks = vec![a];
        breaks.extend(bps.iter().copied().filter(|b| *b > a && *b < PI - a));
        breaks.push(PI - a);
        let mut bulk = vec![a];
        for w in breaks.windows(2) {
            let pieces = ((w[1] - w[0]) / opts.bulk_width).ceil().max(1.0) as usize;
            for j in 1..=pieces {
                bulk.push(w[0] + (w[1] - w[0]) * j as f64 / pieces as f64);
            }
        }
        let bulk_rule = Rule1d::composite(&bulk, m)?;

        // s-panels for the pole caps
        let (s_nodes, s_weights) = pole_rule(opts.depth, m)?;

        let total = bulk_rule.nodes.len() + 2 * s_nodes.len();
        let mut z = ZonalNodes::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut ln_weights = Vec::with_capacity(total);
        let ln_a = a.ln();

        let cap = |north: bool, z: &mut ZonalNodes, weights: &mut Vec<f64>, ln_weights: &mut Vec<f64>| {
            let order: Vec<usize> = if north {
                (0..s_nodes.len()).rev().collect()
            } else {
                (0..s_nodes.len()).collect()
            };
            for i in order {
                let s = s_nodes[i];
                let ln_d = ln_a - s;
                let d = ln_d.exp();
                let (sin, cos) = d.sin_cos();
                // ln sin d = ln d + ln(sin d / d), the correction vanishes as d -> 0
                let ln_sin = if d > 1e-4 { sin.ln() } else { ln_d - d * d / 6.0 };
                let lw = ln_surf + nm1 * ln_sin + ln_d + s_weights[i].ln();
                if north {
                    z.push(d, cos, sin, ln_d);
                } else {
                    z.push(PI - d, -cos, sin, ln_d);
                }
                weights.push(lw.exp());
                ln_weights.push(lw);
            }
        };

        cap(true, &mut z, &mut weights, &mut ln_weights);
        for (&phi, &w) in bulk_rule.nodes.iter().zip(&bulk_rule.weights) {
            let (sin, cos) = phi.sin_cos();
            let d = phi.min(PI - phi);
            let wt = w * surf * sin.powf(nm1);
            z.push(phi, cos, sin, d.ln());
            weights.push(wt);
            ln_weights.push(wt.ln());
        }
        cap(false, &mut z, &mut weights, &mut ln_weights);

        let resolved_degree = (m as f64 / opts.bulk_width).floor() as usize;
        Ok(QuadratureGrid {
            kind: GridKind::ZonalGraded { n, nodes: weights.len() },
            nodes: Nodes::Zonal(z),
            weights,
            ln_weights,
            resolved_degree,
        })
    }

    /// Gauss-Legendre in `cos(theta)` times `n_azimuth` uniform azimuths.
    /// Exact for spherical polynomials of degree `min(2 n_theta - 1, n_azimuth - 1)`.
    pub fn sphere_product(n_theta: usize, n_azimuth: usize) -> Result<Self> {
        if n_theta == 0 || n_azimuth == 0 {
            return Err(Error::domain("empty sphere grid"));
        }
        let fam = GegenbauerFamily::new(2, n_theta);
        let (x, w) = fam.gauss_rule(n_theta)?;
        let mut cos_theta = Vec::with_capacity(n_theta);
        let mut sin_theta = Vec::with_capacity(n_theta);
        let mut theta = Vec::with_capacity(n_theta);
        let mut wt = Vec::with_capacity(n_theta);
        for (&xi, &wi) in x.iter().zip(&w).rev() {
            cos_theta.push(xi);
            sin_theta.push((1.0 - xi * xi).max(0.0).sqrt());
            theta.push(xi.clamp(-1.0, 1.0).acos());
            wt.push(wi);
        }
        let h = 2.0 * PI / n_azimuth as f64;
        let azimuth: Vec<f64> = (0..n_azimuth).map(|a| a as f64 * h).collect();
        let mut weights = Vec::with_capacity(n_theta * n_azimuth);
        for &wi in &wt {
            for _ in 0..n_azimuth {
                weights.push(wi * h);
            }
        }
        let ln_weights = weights.iter().map(|w: &f64| w.ln()).collect();
        Ok(QuadratureGrid {
            kind: GridKind::SphereProduct { n_theta, n_azimuth },
            nodes: Nodes::Sphere {
                cos_theta,
                sin_theta,
                theta,
                azimuth,
            },
            weights,
            ln_weights,
            resolved_degree: (2 * n_theta - 1).min(n_azimuth - 1),
        })
    }

    /// Uniform grid on T^n; the trapezoid rule is exact for trigonometric
    /// polynomials of degree `< per_axis` in each variable.
    pub fn torus_uniform(n: usize, per_axis: usize) -> Result<Self> {
        if n < 1 || per_axis == 0 {
            return Err(Error::domain("empty torus grid"));
        }
        let count = per_axis
            .checked_pow(n as u32)
            .filter(|c| *c <= 1 << 26)
            .ok_or_else(|| Error::domain("torus grid too large"))?;
        let w = (2.0 * PI / per_axis as f64).powi(n as i32);
        Ok(QuadratureGrid {
            kind: GridKind::Torus { n, per_axis },
            nodes: Nodes::Torus,
            weights: vec![w; count],
            ln_weights: vec![w.ln(); count],
            resolved_degree: per_axis - 1,
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    /// Highest degree the rule resolves: exact for Gauss rules, nominal for
    /// composite ones.
    pub fn resolved_degree(&self) -> usize {
        self.resolved_degree
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn zonal(&self) -> Option<&ZonalNodes> {
        match &self.nodes {
            Nodes::Zonal(z) => Some(z),
            _ => None,
        }
    }

    /// `(cos θ, sin θ, θ)` columns and azimuths of a sphere product grid.
    pub fn sphere_axes(&self) -> Option<(&[f64], &[f64], &[f64], &[f64])> {
        match &self.nodes {
            Nodes::Sphere {
                cos_theta,
                sin_theta,
                theta,
                azimuth,
            } => Some((cos_theta, sin_theta, theta, azimuth)),
            _ => None,
        }
    }

    pub fn point(&self, i: usize) -> Point {
        match (&self.nodes, self.kind) {
            (Nodes::Zonal(z), _) => Point::Zonal(z.phi[i]),
            (Nodes::Sphere { theta, azimuth, .. }, _) => {
                let na = azimuth.len();
                Point::Sphere {
                    theta: theta[i / na],
                    azimuth: azimuth[i % na],
                }
            }
            (Nodes::Torus, GridKind::Torus { n, per_axis }) => {
                let h = 2.0 * PI / per_axis as f64;
                let mut rest = i;
                let mut x = vec![0.0; n];
                for xk in x.iter_mut().rev() {
                    *xk = (rest % per_axis) as f64 * h;
                    rest /= per_axis;
                }
                Point::Torus(x)
            }
            _ => unreachable!("node layout matches grid kind"),
        }
    }

    /// Column names for the coordinates in CSV output.
    pub fn coordinate_names(&self) -> Vec<String> {
        match self.kind {
            GridKind::ZonalGauss { .. } | GridKind::ZonalGraded { .. } => vec!["phi".into()],
            GridKind::SphereProduct { .. } => vec!["theta".into(), "azimuth".into()],
            GridKind::Torus { n, .. } => (1..=n).map(|k| format!("x{k}")).collect(),
        }
    }

    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        match self.point(i) {
            Point::Zonal(p) => vec![p],
            Point::Sphere { theta, azimuth } => vec![theta, azimuth],
            Point::Torus(x) => x,
        }
    }
}

/// Nodes and weights in `s` for one pole cap: panels of width `0.5·1.3^k`
/// up to `depth`, or a reciprocal tail map to `s = ∞`.
pub(crate) fn pole_rule(depth: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut breaks = vec![0.0];
    let mut width = 0.5;
    let finite_end = if depth.is_finite() { depth } else { 8.0 };
    while *breaks.last().unwrap() < finite_end {
        let next = (breaks.last().unwrap() + width).min(finite_end);
        if finite_end - next < 0.25 * width {
            breaks.push(finite_end);
            break;
        }
        breaks.push(next);
        width *= 1.3;
    }
    let rule = Rule1d::composite(&breaks, m)?;
    let (mut s, mut w) = (rule.nodes, rule.weights);
    if !depth.is_finite() {
        // s = S0 / t on t in (0, 1]: ds = S0 / t^2 dt
        let s0 = finite_end;
        let tail = Rule1d::composite(&[0.0, 0.25, 0.5, 1.0], m)?;
        for (&t, &wt) in tail.nodes.iter().zip(&tail.weights).rev() {
            s.push(s0 / t);
            w.push(wt * s0 / (t * t));
        }
    }
    Ok((s, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_zonal_volume_and_positivity() {
        for n in 2..=6 {
            let g = QuadratureGrid::zonal_gauss(n, 40).unwrap();
            assert!(g.weights().iter().all(|w| *w > 0.0));
            assert!((g.volume() - sphere_volume(n)).abs() < 1e-10 * sphere_volume(n));
        }
    }

    #[test]
    fn graded_zonal_volume() {
        for n in 2..=5 {
            for depth in [8.0, f64::INFINITY] {
                let g = QuadratureGrid::zonal_graded(n, &GradedOptions::for_degree(32).with_depth(depth)).unwrap();
                assert!(g.weights().iter().all(|w| *w >= 0.0));
                let rel = (g.volume() - sphere_volume(n)).abs() / sphere_volume(n);
                // a finite depth misses a cap of radius a·e^{-8}
                assert!(rel < 1e-6, "n={n} depth={depth} rel={rel}");
                let z = g.zonal().unwrap();
                assert!(z.phi.windows(2).all(|p| p[0] <= p[1]));
            }
        }
    }

    #[test]
    fn graded_grid_integrates_log_singularity() {
        let g = QuadratureGrid::zonal_graded(2, &GradedOptions::for_degree(16)).unwrap();
        let z = g.zonal().unwrap();
        let got: f64 = g
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let ln_d = z.ln_pole_distance[i];
                let ln_sin = if ln_d > -9.0 { z.sin_phi[i].ln() } else { ln_d };
                -w * ln_sin
            })
            .sum();
        // 2π ∫_{-1}^{1} -½ ln(1 - x²) dx = 2π (2 - 2 ln 2)
        let oracle = 2.0 * PI * (2.0 - 2.0 * 2f64.ln());
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn breakpoints_are_panel_edges() {
        let opts = GradedOptions::for_degree(8).with_breakpoints(&[0.3, PI - 0.3]);
        let g = QuadratureGrid::zonal_graded(3, &opts).unwrap();
        // a step function integrates exactly when the jump is a panel edge
        let z = g.zonal().unwrap();
        let got: f64 = g
            .weights()
            .iter()
            .zip(&z.phi)
            .map(|(w, &p)| if p > 0.3 && p < PI - 0.3 { *w } else { 0.0 })
            .sum();
        // 4π ∫_{0.3}^{π-0.3} sin²φ dφ
        let f = |t: f64| 0.5 * (t - t.sin() * t.cos());
        let oracle = 4.0 * PI * (f(PI - 0.3) - f(0.3));
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn sphere_product_volume() {
        let g = QuadratureGrid::sphere_product(20, 41).unwrap();
        assert!((g.volume() - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.len(), 820);
        match g.point(41) {
            Point::Sphere { azimuth, .. } => assert_eq!(azimuth, 0.0),
            _ => panic!(),
        }
    }

    #[test]
    fn torus_points_and_volume() {
        let g = QuadratureGrid::torus_uniform(2, 8).unwrap();
        assert!((g.volume() - 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(g.point(9), Point::Torus(vec![PI / 4.0, PI / 4.0]));
    }

    #[test]
    fn refinement_quadruples_depth() {
        let o = GradedOptions::pole_level(16, 3);
        assert_eq!(o.depth, 8.0);
        assert_eq!(o.refined().depth, 32.0);
    }
}
