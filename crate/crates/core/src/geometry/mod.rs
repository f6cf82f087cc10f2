//! Model manifolds, their Laplace eigenbases, quadrature grids and L^p norms.

mod basis;
pub(crate) mod grid;
mod norms;

pub use basis::{build_basis, Basis, BasisMetadata, Mode};
pub use grid::{GradedOptions, GridKind, Point, QuadratureGrid, ZonalNodes};
pub use norms::{inner_product, lp_norm, normalized_lp_norm, write_grid_function_csv, Modulus};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::sphere_volume;

/// The compact manifolds the crate computes on. All spheres have unit radius
/// and the torus is `[0, 2π)^n` with the flat metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelManifold {
    /// Rotation-invariant functions on S^n (functions of the polar angle).
    SphereZonal { n: usize },
    /// All of S^2, real spherical harmonics.
    SphereFull2d,
    /// Flat torus T^n.
    Torus { n: usize },
}

impl ModelManifold {
    pub fn sphere_zonal(n: usize) -> Result<Self> {
        Self::check_dim(n)?;
        Ok(ModelManifold::SphereZonal { n })
    }

    pub fn sphere_full_2d() -> Self {
        ModelManifold::SphereFull2d
    }

    pub fn torus(n: usize) -> Result<Self> {
        Self::check_dim(n)?;
        Ok(ModelManifold::Torus { n })
    }

    fn check_dim(n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::domain(format!("manifold dimension must be >= 2, got {n}")));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match *self {
            ModelManifold::SphereZonal { n } | ModelManifold::Torus { n } => n,
            ModelManifold::SphereFull2d => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            ModelManifold::SphereZonal { n } => sphere_volume(n),
            ModelManifold::SphereFull2d => sphere_volume(2),
            ModelManifold::Torus { n } => (2.0 * std::f64::consts::PI).powi(n as i32),
        }
    }

    pub fn is_sphere(&self) -> bool {
        !matches!(self, ModelManifold::Torus { .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match *self {
            ModelManifold::SphereZonal { n } => format!("sphere-zonal(n={n})"),
            ModelManifold::SphereFull2d => "sphere-full-2d".to_string(),
            ModelManifold::Torus { n } => format!("torus(n={n})"),
        }
    }

    /// Geodesic distance between two points of the manifold.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Zonal(p), Point::Zonal(q)) => (p - q).abs(),
            (Point::Sphere { theta: t1, azimuth: a1 }, Point::Sphere { theta: t2, azimuth: a2 }) => {
                let c = t1.cos() * t2.cos() + t1.sin() * t2.sin() * (a1 - a2).cos();
                c.clamp(-1.0, 1.0).acos()
            }
            (Point::Torus(x), Point::Torus(y)) => x
                .iter()
                .zip(y)
                .map(|(u, v)| {
                    let d = (u - v).rem_euclid(2.0 * std::f64::consts::PI);
                    let d = d.min(2.0 * std::f64::consts::PI - d);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            _ => f64::NAN,
        }
    }
}

impl std::str::FromStr for ModelManifold {
    type Err = Error;

    /// Parses `sphere-zonal`, `sphere-full-2d` or `torus`, optionally with a
    /// dimension suffix such as `sphere-zonal:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, dim) = match s.split_once(':') {
            Some((a, b)) => (
                a,
                Some(b.trim().parse::<usize>().map_err(|_| Error::config(format!("bad dimension in manifold '{s}'")))?),
            ),
            None => (s, None),
        };
        match name.trim() {
            "sphere-zonal" => ModelManifold::sphere_zonal(dim.unwrap_or(2)),
            "sphere-full-2d" => match dim {
                None | Some(2) => Ok(ModelManifold::SphereFull2d),
                Some(d) => Err(Error::config(format!("sphere-full-2d has dimension 2, not {d}"))),
            },
            "torus" => ModelManifold::torus(dim.unwrap_or(2)),
            other => Err(Error::config(format!(
                "unknown manifold '{other}' (expected sphere-zonal, sphere-full-2d or torus)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_guard() {
        assert!(ModelManifold::sphere_zonal(1).is_err());
        assert!(ModelManifold::torus(0).is_err());
        assert_eq!(ModelManifold::SphereFull2d.dimension(), 2);
    }

    #[test]
    fn volumes() {
        let pi = std::f64::consts::PI;
        assert!((ModelManifold::SphereFull2d.volume() - 4.0 * pi).abs() < 1e-14);
        assert!((ModelManifold::torus(3).unwrap().volume() - (2.0 * pi).powi(3)).abs() < 1e-10);
    }

    #[test]
    fn parse_names() {
        assert_eq!("sphere-zonal:3".parse::<ModelManifold>().unwrap(), ModelManifold::SphereZonal { n: 3 });
        assert_eq!("sphere-full-2d".parse::<ModelManifold>().unwrap(), ModelManifold::SphereFull2d);
        assert!("klein-bottle".parse::<ModelManifold>().is_err());
    }

    #[test]
    fn torus_distance_wraps() {
        let m = ModelManifold::torus(2).unwrap();
        let d = m.distance(&Point::Torus(vec![0.1, 0.0]), &Point::Torus(vec![6.2, 0.0]));
        assert!((d - (0.1 + 2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
    }
}
