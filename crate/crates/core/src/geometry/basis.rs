use std::f64::consts::PI;
use std::ops::{Mul, Sub};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{GridKind, Point, QuadratureGrid};
use super::ModelManifold;
use crate::error::{Error, Result};
use crate::jet::{zonal_laplacian, Jet};
use crate::orthopoly::{sphere_volume, GegenbauerFamily};

/// Torus bases beyond this many modes are refused: every consumer works
/// with dense matrices.
const MAX_TORUS_MODES: usize = 20_000;

/// One Laplace eigenfunction of the basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    /// Polynomial degree on spheres, `max |m_i|` on the torus.
    pub degree: usize,
    /// Signed azimuthal order on S² (positive: cosine, negative: sine); on
    /// the torus `+1` for cosine, `-1` for sine and `0` for the constant.
    pub order: i64,
    /// Lattice vector on the torus; empty on spheres.
    pub lattice: Vec<i64>,
    /// Modes in different sectors are orthogonal against every potential
    /// the basis supports in block form (zonal potentials on spheres).
    pub sector: usize,
    /// `sqrt` of the Laplace eigenvalue.
    pub frequency: f64,
}

impl Mode {
    /// Laplace eigenvalue; always an integer on the model manifolds.
    pub fn eigenvalue(&self) -> f64 {
        (self.frequency * self.frequency).round()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisMetadata {
    pub manifold: ModelManifold,
    pub n: usize,
    pub max_degree: usize,
    pub grid: GridKind,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone)]
enum Repr {
    Zonal {
        family: GegenbauerFamily,
        scale: f64,
        table: Array2<f64>,
    },
    Sphere {
        /// `n_theta × modes`: θ-factor times the azimuthal normalization.
        theta: Array2<f64>,
        /// `n_azimuth × (2K+1)`: `cos(mϕ)`, `sin(|m|ϕ)` or 1, column `m + K`.
        azimuth: Array2<f64>,
    },
    Torus {
        table: Array2<f64>,
    },
}

/// Truncated Laplace eigenbasis on a model manifold together with the
/// quadrature grid on which it is orthonormal.
#[derive(Debug, Clone)]
pub struct Basis {
    manifold: ModelManifold,
    max_degree: usize,
    modes: Vec<Mode>,
    grid: QuadratureGrid,
    repr: Repr,
}

/// Builds the eigenbasis of degree `<= k` with a grid fine enough for
/// products of two basis functions to integrate exactly.
pub fn build_basis(manifold: ModelManifold, k: usize) -> Result<Basis> {
    let grid = match manifold {
        ModelManifold::SphereZonal { n } => QuadratureGrid::zonal_gauss(n, 2 * k + 16)?,
        ModelManifold::SphereFull2d => QuadratureGrid::sphere_product(2 * k + 16, 2 * k + 2)?,
        ModelManifold::Torus { n } => QuadratureGrid::torus_uniform(n, 2 * k + 2)?,
    };
    Basis::with_grid(manifold, k, grid)
}

impl Basis {
    /// Builds the basis on a caller-supplied grid; fails with the required
    /// node count when the grid cannot integrate degree-`2k` products.
    pub fn with_grid(manifold: ModelManifold, k: usize, grid: QuadratureGrid) -> Result<Basis> {
        let (required, available) = match (manifold, grid.kind()) {
            (ModelManifold::SphereZonal { n }, GridKind::ZonalGauss { n: gn, nodes }) if n == gn => (k + 1, nodes),
            (ModelManifold::SphereFull2d, GridKind::SphereProduct { n_theta, n_azimuth }) => {
                if n_azimuth < 2 * k + 1 {
                    (2 * k + 1, n_azimuth)
                } else {
                    (k + 1, n_theta)
                }
            }
            (ModelManifold::Torus { n }, GridKind::Torus { n: gn, per_axis }) if n == gn => (2 * k + 1, per_axis),
            _ => return Err(Error::domain(format!("grid {:?} does not fit manifold {}", grid.kind(), manifold.label()))),
        };
        if available < required || grid.resolved_degree() < 2 * k {
            return Err(Error::Resolution {
                what: format!("basis of degree {k} on {}", manifold.label()),
                required,
                available,
            });
        }
        let (modes, repr) = match manifold {
            ModelManifold::SphereZonal { n } => zonal_repr(n, k, &grid),
            ModelManifold::SphereFull2d => sphere_repr(k, &grid),
            ModelManifold::Torus { n } => torus_repr(n, k, &grid)?,
        };
        Ok(Basis {
            manifold,
            max_degree: k,
            modes,
            grid,
            repr,
        })
    }

    pub fn manifold(&self) -> ModelManifold {
        self.manifold
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.frequency)
    }

    pub fn metadata(&self) -> BasisMetadata {
        BasisMetadata {
            manifold: self.manifold,
            n: self.manifold.dimension(),
            max_degree: self.max_degree,
            grid: self.grid.kind(),
            modes: self.modes.clone(),
        }
    }

    pub fn sector_count(&self) -> usize {
        self.modes.iter().map(|m| m.sector + 1).max().unwrap_or(0)
    }

    /// Value of basis function `j` at grid node `i`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Zonal { table, .. } | Repr::Torus { table } => table[[i, j]],
            Repr::Sphere { theta, azimuth } => {
                let na = azimuth.nrows();
                let col = (self.modes[j].order + self.max_degree as i64) as usize;
                theta[[i / na, j]] * azimuth[[i % na, col]]
            }
        }
    }

    /// All basis functions at an arbitrary point.
    pub fn eval_point(&self, p: &Point) -> Result<Vec<f64>> {
        let k = self.max_degree;
        match (&self.repr, p) {
            (Repr::Zonal { family, scale, .. }, Point::Zonal(phi)) => {
                let mut out = vec![0.0; k + 1];
                family.eval_into(phi.cos(), &mut out);
                out.iter_mut().for_each(|v| *v *= scale);
                Ok(out)
            }
            (Repr::Sphere { .. }, Point::Sphere { theta, azimuth }) => {
                let (s, c) = theta.sin_cos();
                let mut plm = vec![0.0; (k + 1) * (k + 2) / 2];
                assoc_legendre_all(k, c, s, &mut plm);
                Ok(self
                    .modes
                    .iter()
                    .map(|m| {
                        let am = m.order.unsigned_abs() as usize;
                        plm[plm_index(m.degree, am)] * azimuthal(m.order, *azimuth)
                    })
                    .collect())
            }
            (Repr::Torus { .. }, Point::Torus(x)) if x.len() == self.manifold.dimension() => {
                Ok(self.modes.iter().map(|m| torus_mode(m, x)).collect())
            }
            _ => Err(Error::domain("point does not belong to the basis manifold")),
        }
    }

    /// Points off the quadrature grid where sup norms are also sampled: the
    /// poles of a sphere, which Gauss nodes never hit and where zonal
    /// functions peak.
    pub fn probe_points(&self) -> Vec<Point> {
        use std::f64::consts::PI;
        match self.repr {
            Repr::Zonal { .. } => vec![Point::Zonal(0.0), Point::Zonal(PI)],
            Repr::Sphere { .. } => vec![
                Point::Sphere { theta: 0.0, azimuth: 0.0 },
                Point::Sphere { theta: PI, azimuth: 0.0 },
            ],
            Repr::Torus { .. } => Vec::new(),
        }
    }

    /// `sup |Σ c_j e_j|` over the grid and the probe points.
    pub fn sup_norm(&self, coeffs: &[f64]) -> Result<f64> {
        let mut top = self.synthesize(coeffs)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for p in self.probe_points() {
            let v: f64 = self.eval_point(&p)?.iter().zip(coeffs).map(|(e, c)| e * c).sum();
            top = top.max(v.abs());
        }
        Ok(top)
    }

    /// Grid values of `Σ c_j e_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs.len())?;
        Ok(match &self.repr {
            Repr::Zonal { table, .. } | Repr::Torus { table } => table_apply(table, coeffs),
            Repr::Sphere { theta, azimuth } => {
                let nt = theta.nrows();
                let na = azimuth.nrows();
                let ncol = azimuth.ncols();
                let mut g = Array2::<f64>::zeros((nt, ncol));
                for (j, m) in self.modes.iter().enumerate() {
                    let c = coeffs[j];
                    if c == 0.0 {
                        continue;
                    }
                    let col = (m.order + self.max_degree as i64) as usize;
                    for i in 0..nt {
                        g[[i, col]] += c * theta[[i, j]];
                    }
                }
                let mut out = vec![0.0; nt * na];
                for i in 0..nt {
                    for a in 0..na {
                        let mut acc = 0.0;
                        for col in 0..ncol {
                            acc += g[[i, col]] * azimuth[[a, col]];
                        }
                        out[i * na + a] = acc;
                    }
                }
                out
            }
        })
    }

    pub fn synthesize_complex(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
        let im: Vec<f64> = coeffs.iter().map(|c| c.im).collect();
        let (a, b) = (self.synthesize(&re)?, self.synthesize(&im)?);
        Ok(a.into_iter().zip(b).map(|(r, i)| Complex64::new(r, i)).collect())
    }

    /// Coefficients `⟨f, e_j⟩` of a grid function by quadrature.
    pub fn analyze(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.grid.len() {
            return Err(Error::domain(format!(
                "grid function has {} values, grid has {} nodes",
                values.len(),
                self.grid.len()
            )));
        }
        let w = self.grid.weights();
        Ok(match &self.repr {
            Repr::Zonal { table, .. } | Repr::Torus { table } => {
                let mut out = vec![0.0; table.ncols()];
                for (i, row) in table.outer_iter().enumerate() {
                    let f = w[i] * values[i];
                    if f == 0.0 {
                        continue;
                    }
                    for (o, e) in out.iter_mut().zip(row.iter()) {
                        *o += f * e;
                    }
                }
                out
            }
            Repr::Sphere { theta, azimuth } => {
                let nt = theta.nrows();
                let na = azimuth.nrows();
                let ncol = azimuth.ncols();
                let mut h = Array2::<f64>::zeros((nt, ncol));
                for i in 0..nt {
                    for a in 0..na {
                        let f = w[i * na + a] * values[i * na + a];
                        for col in 0..ncol {
                            h[[i, col]] += f * azimuth[[a, col]];
                        }
                    }
                }
                self.modes
                    .iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let col = (m.order + self.max_degree as i64) as usize;
                        (0..nt).map(|i| theta[[i, j]] * h[[i, col]]).sum()
                    })
                    .collect()
            }
        })
    }

    /// Gram matrix `⟨e_j, e_k⟩` on the basis grid.
    pub fn gram(&self) -> Array2<f64> {
        let m = self.len();
        let mut g = Array2::<f64>::zeros((m, m));
        let w = self.grid.weights();
        match &self.repr {
            Repr::Zonal { table, .. } | Repr::Torus { table } => {
                for (i, row) in table.outer_iter().enumerate() {
                    for j in 0..m {
                        let a = w[i] * row[j];
                        for k in 0..m {
                            g[[j, k]] += a * row[k];
                        }
                    }
                }
            }
            Repr::Sphere { .. } => {
                for j in 0..m {
                    let mut e = vec![0.0; m];
                    e[j] = 1.0;
                    let f = self.synthesize(&e).expect("coefficient length");
                    let c = self.analyze(&f).expect("grid length");
                    for k in 0..m {
                        g[[j, k]] = c[k];
                    }
                }
            }
        }
        g
    }

    /// θ-profiles of the basis functions on a zonal grid, normalized so that
    /// for modes `j, k` in the same sector and any zonal `V`,
    /// `⟨V e_j, e_k⟩ = Σ_i w_i V_i P_ij P_ik` with the zonal grid weights.
    /// Modes in different sectors are orthogonal against zonal `V`.
    pub fn zonal_profiles(&self, grid: &QuadratureGrid) -> Result<Array2<f64>> {
        let z = grid
            .zonal()
            .ok_or_else(|| Error::domain("zonal profiles need a zonal grid"))?;
        let gn = match grid.kind() {
            GridKind::ZonalGauss { n, .. } | GridKind::ZonalGraded { n, .. } => n,
            _ => unreachable!(),
        };
        let k = self.max_degree;
        match &self.repr {
            Repr::Zonal { family, scale, .. } => {
                if gn != self.manifold.dimension() {
                    return Err(Error::domain("zonal grid dimension differs from the basis"));
                }
                let mut t = Array2::<f64>::zeros((grid.len(), k + 1));
                let mut buf = vec![0.0; k + 1];
                for i in 0..grid.len() {
                    family.eval_into(z.cos_phi[i], &mut buf);
                    for j in 0..=k {
                        t[[i, j]] = buf[j] * scale;
                    }
                }
                Ok(t)
            }
            Repr::Sphere { .. } => {
                if gn != 2 {
                    return Err(Error::domain("S² profiles need a two-dimensional zonal grid"));
                }
                let mut t = Array2::<f64>::zeros((grid.len(), self.len()));
                let mut plm = vec![0.0; (k + 1) * (k + 2) / 2];
                let norm = 1.0 / (2.0 * PI).sqrt();
                for i in 0..grid.len() {
                    assoc_legendre_all(k, z.cos_phi[i], z.sin_phi[i], &mut plm);
                    for (j, m) in self.modes.iter().enumerate() {
                        t[[i, j]] = plm[plm_index(m.degree, m.order.unsigned_abs() as usize)] * norm;
                    }
                }
                Ok(t)
            }
            Repr::Torus { .. } => Err(Error::domain("the torus basis has no zonal profiles")),
        }
    }

    /// `‖(−Δ − λ_j²) e_j‖₂ / ‖e_j‖₂` for every mode, with the Laplacian
    /// applied exactly to the recurrence through second-order jets.
    pub fn laplacian_residuals(&self) -> Vec<f64> {
        let m = self.len();
        let w = self.grid.weights();
        let mut num = vec![0.0; m];
        let mut den = vec![0.0; m];
        let k = self.max_degree;
        match &self.repr {
            Repr::Zonal { family, scale, .. } => {
                let n = self.manifold.dimension();
                let z = self.grid.zonal().expect("zonal grid");
                let mut jets = vec![Jet::constant(0.0); k + 1];
                for i in 0..self.grid.len() {
                    let phi = z.phi[i];
                    family.eval_phi_jets(phi, &mut jets);
                    for j in 0..m {
                        let g = jets[j] * *scale;
                        let r = zonal_laplacian(n, phi, g) + self.modes[j].eigenvalue() * g.value;
                        num[j] += w[i] * r * r;
                        den[j] += w[i] * g.value * g.value;
                    }
                }
            }
            Repr::Sphere { azimuth, .. } => {
                let (_, _, theta, az) = self.grid.sphere_axes().expect("sphere grid");
                let na = az.len();
                let mut plm = vec![Jet::constant(0.0); (k + 1) * (k + 2) / 2];
                for (it, &th) in theta.iter().enumerate() {
                    let t = Jet::variable(th);
                    assoc_legendre_all(k, t.cos(), t.sin(), &mut plm);
                    let (s, c) = th.sin_cos();
                    for (j, md) in self.modes.iter().enumerate() {
                        let am = md.order.unsigned_abs() as usize;
                        let p = plm[plm_index(md.degree, am)];
                        // (1/sinθ)∂θ(sinθ ∂θ P) − m²/sin²θ P + λ² P
                        let r = p.d2 + c / s * p.d1 - (am * am) as f64 / (s * s) * p.value + md.eigenvalue() * p.value;
                        let col = (md.order + k as i64) as usize;
                        for a in 0..na {
                            let y = azimuth[[a, col]] * azimuthal_norm(md.order);
                            let wi = w[it * na + a];
                            num[j] += wi * (r * y) * (r * y);
                            den[j] += wi * (p.value * y) * (p.value * y);
                        }
                    }
                }
            }
            Repr::Torus { .. } => {
                for i in 0..self.grid.len() {
                    let x = match self.grid.point(i) {
                        Point::Torus(x) => x,
                        _ => unreachable!(),
                    };
                    for (j, md) in self.modes.iter().enumerate() {
                        let mut lap = 0.0;
                        let mut val = 0.0;
                        for axis in 0..x.len() {
                            let jet = torus_mode_jet(md, &x, axis);
                            lap += jet.d2;
                            val = jet.value;
                        }
                        let r = lap + md.eigenvalue() * val;
                        num[j] += w[i] * r * r;
                        den[j] += w[i] * val * val;
                    }
                }
            }
        }
        num.iter().zip(&den).map(|(a, b)| (a / b).sqrt()).collect()
    }

    fn check_coeffs(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::domain(format!(
                "coefficient vector has length {len}, basis has {} modes",
                self.len()
            )));
        }
        Ok(())
    }
}

fn table_apply(table: &Array2<f64>, coeffs: &[f64]) -> Vec<f64> {
    let nz: Vec<(usize, f64)> = coeffs.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
    table
        .outer_iter()
        .map(|row| nz.iter().map(|&(j, c)| c * row[j]).sum())
        .collect()
}

fn zonal_repr(n: usize, k: usize, grid: &QuadratureGrid) -> (Vec<Mode>, Repr) {
    let family = GegenbauerFamily::new(n, k);
    let scale = 1.0 / sphere_volume(n - 1).sqrt();
    let z = grid.zonal().expect("zonal grid");
    let mut table = Array2::<f64>::zeros((grid.len(), k + 1));
    let mut buf = vec![0.0; k + 1];
    for i in 0..grid.len() {
        family.eval_into(z.cos_phi[i], &mut buf);
        for j in 0..=k {
            table[[i, j]] = buf[j] * scale;
        }
    }
    let modes = (0..=k)
        .map(|d| Mode {
            index: d,
            degree: d,
            order: 0,
            lattice: Vec::new(),
            sector: 0,
            frequency: ((d * (d + n - 1)) as f64).sqrt(),
        })
        .collect();
    (modes, Repr::Zonal { family, scale, table })
}

fn sphere_repr(k: usize, grid: &QuadratureGrid) -> (Vec<Mode>, Repr) {
    let mut modes = Vec::with_capacity((k + 1) * (k + 1));
    for l in 0..=k {
        for m in -(l as i64)..=(l as i64) {
            modes.push(Mode {
                index: modes.len(),
                degree: l,
                order: m,
                lattice: Vec::new(),
                sector: (m + k as i64) as usize,
                frequency: ((l * (l + 1)) as f64).sqrt(),
            });
        }
    }
    let (ct, st, _, az) = grid.sphere_axes().expect("sphere grid");
    let mut theta = Array2::<f64>::zeros((ct.len(), modes.len()));
    let mut plm = vec![0.0; (k + 1) * (k + 2) / 2];
    for i in 0..ct.len() {
        assoc_legendre_all(k, ct[i], st[i], &mut plm);
        for (j, md) in modes.iter().enumerate() {
            theta[[i, j]] = plm[plm_index(md.degree, md.order.unsigned_abs() as usize)] * azimuthal_norm(md.order);
        }
    }
    let mut azimuth = Array2::<f64>::zeros((az.len(), 2 * k + 1));
    for (a, &p) in az.iter().enumerate() {
        for m in -(k as i64)..=(k as i64) {
            azimuth[[a, (m + k as i64) as usize]] = azimuthal(m, p) / azimuthal_norm(m);
        }
    }
    (modes, Repr::Sphere { theta, azimuth })
}

fn torus_repr(n: usize, k: usize, grid: &QuadratureGrid) -> Result<(Vec<Mode>, Repr)> {
    let side = 2 * k + 1;
    let total = side.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > MAX_TORUS_MODES {
        return Err(Error::domain(format!(
            "torus basis with {total} modes exceeds the dense limit of {MAX_TORUS_MODES}"
        )));
    }
    let mut modes = Vec::new();
    for code in 0..total {
        let mut rest = code;
        let mut lat = vec![0i64; n];
        for v in lat.iter_mut().rev() {
            *v = (rest % side) as i64 - k as i64;
            rest /= side;
        }
        // keep one representative of each ±m pair
        match lat.iter().find(|v| **v != 0) {
            None => modes.push((lat, 0)),
            Some(first) if *first > 0 => {
                modes.push((lat.clone(), 1));
                modes.push((lat, -1));
            }
            _ => {}
        }
    }
    let mut modes: Vec<Mode> = modes
        .into_iter()
        .map(|(lattice, order)| {
            let sq: i64 = lattice.iter().map(|v| v * v).sum();
            Mode {
                index: 0,
                degree: lattice.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0),
                order,
                lattice,
                sector: 0,
                frequency: (sq as f64).sqrt(),
            }
        })
        .collect();
    modes.sort_by(|a, b| {
        a.frequency
            .total_cmp(&b.frequency)
            .then_with(|| a.lattice.cmp(&b.lattice))
            .then_with(|| b.order.cmp(&a.order))
    });
    for (i, m) in modes.iter_mut().enumerate() {
        m.index = i;
    }
    let mut table = Array2::<f64>::zeros((grid.len(), modes.len()));
    for i in 0..grid.len() {
        let x = match grid.point(i) {
            Point::Torus(x) => x,
            _ => unreachable!(),
        };
        for (j, m) in modes.iter().enumerate() {
            table[[i, j]] = torus_mode(m, &x);
        }
    }
    Ok((modes, Repr::Torus { table }))
}

fn torus_norm(m: &Mode) -> f64 {
    let vol = (2.0 * PI).powi(m.lattice.len() as i32);
    if m.order == 0 {
        1.0 / vol.sqrt()
    } else {
        (2.0 / vol).sqrt()
    }
}

fn torus_mode(m: &Mode, x: &[f64]) -> f64 {
    let phase: f64 = m.lattice.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
    let t = match m.order {
        0 => 1.0,
        1 => phase.cos(),
        _ => phase.sin(),
    };
    t * torus_norm(m)
}

/// Jet of a torus mode along one coordinate axis.
fn torus_mode_jet(m: &Mode, x: &[f64], axis: usize) -> Jet {
    let mut phase = Jet::constant(0.0);
    for (i, (a, b)) in m.lattice.iter().zip(x).enumerate() {
        let v = if i == axis { Jet::variable(*b) } else { Jet::constant(*b) };
        phase = phase + v * (*a as f64);
    }
    let t = match m.order {
        0 => Jet::constant(1.0),
        1 => phase.cos(),
        _ => phase.sin(),
    };
    t * torus_norm(m)
}

fn azimuthal_norm(order: i64) -> f64 {
    if order == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else {
        1.0 / PI.sqrt()
    }
}

/// Normalized azimuthal factor of a real spherical harmonic.
fn azimuthal(order: i64, p: f64) -> f64 {
    let m = order.unsigned_abs() as f64;
    let t = match order.signum() {
        0 => 1.0,
        1 => (m * p).cos(),
        _ => (m * p).sin(),
    };
    t * azimuthal_norm(order)
}

#[inline]
fn plm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Associated Legendre functions normalized to unit `L²(-1, 1)` norm, for
/// `0 <= m <= l <= k`, from `x = cos θ` and `s = sin θ`.
pub(crate) fn assoc_legendre_all<T>(k: usize, x: T, s: T, out: &mut [T])
where
    T: Copy + From<f64> + Mul<T, Output = T> + Sub<T, Output = T> + Mul<f64, Output = T>,
{
    let mut pmm = T::from(std::f64::consts::FRAC_1_SQRT_2);
    for m in 0..=k {
        if m > 0 {
            let c = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            pmm = pmm * s * c;
        }
        out[plm_index(m, m)] = pmm;
        if m == k {
            break;
        }
        let mut prev2 = pmm;
        let mut prev1 = x * pmm * ((2 * m + 3) as f64).sqrt();
        out[plm_index(m + 1, m)] = prev1;
        for l in m + 2..=k {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = (x * prev1 - prev2 * b) * a;
            out[plm_index(l, m)] = next;
            prev2 = prev1;
            prev1 = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_offdiag(g: &Array2<f64>) -> f64 {
        let mut e: f64 = 0.0;
        for ((i, j), v) in g.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            e = e.max((v - want).abs());
        }
        e
    }

    #[test]
    fn constant_mode_on_s2() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.modes()[0].frequency, 0.0);
        assert!((b.value(3, 0) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zonal_frequencies_and_orthonormality() {
        for n in 2..=5 {
            let b = build_basis(ModelManifold::sphere_zonal(n).unwrap(), 24).unwrap();
            for m in b.modes() {
                let k = m.degree as f64;
                assert_eq!(m.frequency, (k * (k + n as f64 - 1.0)).sqrt());
            }
            assert!(max_offdiag(&b.gram()) < 1e-12, "n={n}");
            assert!(b.laplacian_residuals().iter().all(|r| *r < 1e-8));
        }
    }

    #[test]
    fn full_sphere_orthonormal_and_eigen() {
        let b = build_basis(ModelManifold::SphereFull2d, 8).unwrap();
        assert_eq!(b.len(), 81);
        assert!(max_offdiag(&b.gram()) < 1e-12);
        let r = b.laplacian_residuals();
        assert!(r.iter().all(|v| *v < 1e-8), "{:?}", r.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn addition_theorem_on_s2() {
        let k = 10;
        let b = build_basis(ModelManifold::SphereFull2d, k).unwrap();
        for i in (0..b.grid().len()).step_by(97) {
            for l in [0, 3, 10] {
                let s: f64 = b
                    .modes()
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.degree == l)
                    .map(|(j, _)| b.value(i, j).powi(2))
                    .sum();
                assert!((s - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn torus_basis() {
        let b = build_basis(ModelManifold::torus(2).unwrap(), 3).unwrap();
        assert_eq!(b.len(), 49);
        assert!(max_offdiag(&b.gram()) < 1e-12);
        assert!(b.laplacian_residuals().iter().all(|r| *r < 1e-10));
        assert!(b.modes().windows(2).all(|w| w[0].frequency <= w[1].frequency));
    }

    #[test]
    fn synthesize_analyze_roundtrip() {
        for m in [ModelManifold::sphere_zonal(3).unwrap(), ModelManifold::SphereFull2d, ModelManifold::torus(2).unwrap()] {
            let b = build_basis(m, 5).unwrap();
            let c: Vec<f64> = (0..b.len()).map(|j| ((j * 7 % 5) as f64 - 2.0) / 3.0).collect();
            let f = b.synthesize(&c).unwrap();
            let back = b.analyze(&f).unwrap();
            for (a, b) in c.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_point_matches_grid_values() {
        let b = build_basis(ModelManifold::SphereFull2d, 6).unwrap();
        let i = 123;
        let v = b.eval_point(&b.grid().point(i)).unwrap();
        for j in 0..b.len() {
            assert!((v[j] - b.value(i, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn resolution_error_names_required_nodes() {
        let g = QuadratureGrid::zonal_gauss(2, 5).unwrap();
        match Basis::with_grid(ModelManifold::sphere_zonal(2).unwrap(), 10, g) {
            Err(Error::Resolution { required, available, .. }) => {
                assert_eq!(required, 11);
                assert_eq!(available, 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profiles_reproduce_inner_products() {
        // ⟨cos θ · Y_00, Y_10⟩ = 1/√3 from the profile representation
        let b = build_basis(ModelManifold::SphereFull2d, 2).unwrap();
        let g = QuadratureGrid::zonal_gauss(2, 10).unwrap();
        let p = b.zonal_profiles(&g).unwrap();
        let z = g.zonal().unwrap();
        let j0 = 0;
        let j1 = b.modes().iter().position(|m| m.degree == 1 && m.order == 0).unwrap();
        let v: f64 = (0..g.len()).map(|i| g.weights()[i] * z.cos_phi[i] * p[[i, j0]] * p[[i, j1]]).sum();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-13);
    }
}
