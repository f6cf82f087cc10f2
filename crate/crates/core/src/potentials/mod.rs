//! Real potentials: constants, the singular counterexamples, user
//! expressions; Kato-class diagnostics and `L^q` norms.

mod counterexample;
mod expr;
mod kato;

pub use counterexample::{
    counterexample_eigenfunction, counterexample_potential, eigenfunction_from_ln_distance, eigenfunction_jet,
    potential_ln_abs, residual as counterexample_residual,
};
pub use expr::Expr;
pub use kato::{
    h_n, kato_modulus, kato_modulus_with, kato_report, ln_half_norm, lq_norm, KatoModulus, KatoOptions, KatoReport,
    KatoThresholds, KatoVerdict, NormEstimate, Status,
};

pub use crate::operator::positivity_shift;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, Point};

/// Where and how a potential blows up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    /// Polar angle of the singular point.
    pub phi: f64,
    /// Growth model, e.g. `"-(n-2)/(d^2 |ln d|)"`.
    pub model: String,
}

/// A real potential on one of the model manifolds.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant(f64),
    /// The zero-energy counterexample on S^n.
    Counterexample { n: usize },
    /// The counterexample set to zero within polar distance `cut` of both
    /// poles: bounded, hence in the Kato class.
    TruncatedCounterexample { n: usize, cut: f64 },
    /// A function of the polar angle `phi`. `pole_singular` routes assembly
    /// through pole-graded quadrature.
    Zonal { expr: Expr, pole_singular: bool },
    /// A function of the torus angles `x1, …, xn`.
    Torus { expr: Expr },
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant(0.0)
    }

    /// Parses a potential description for `manifold`:
    /// `0`, `constant(c)`, a number, `counterexample`, `counterexample(n)`,
    /// `truncated-counterexample(cut)`, or an expression in `phi` (spheres)
    /// or `x1..xn` (torus).
    pub fn parse(spec: &str, manifold: ModelManifold, pole_singular: bool) -> Result<Self> {
        let s = spec.trim();
        let n = manifold.dimension();
        let arg = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix)
                .and_then(|r| r.trim().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::trim)
        };
        if let Ok(c) = s.parse::<f64>() {
            return Ok(Potential::Constant(c));
        }
        if let Some(a) = arg("constant") {
            let c = a.parse::<f64>().map_err(|_| Error::config(format!("bad constant in potential '{s}'")))?;
            return Ok(Potential::Constant(c));
        }
        let sphere_only = |what: &str| -> Result<()> {
            if manifold.is_sphere() {
                Ok(())
            } else {
                Err(Error::config(format!("{what} is only defined on spheres")))
            }
        };
        if s == "counterexample" {
            sphere_only("counterexample")?;
            return Ok(Potential::Counterexample { n });
        }
        if let Some(a) = arg("counterexample") {
            sphere_only("counterexample")?;
            let m = a.parse::<usize>().map_err(|_| Error::config(format!("bad dimension in '{s}'")))?;
            if m != n {
                return Err(Error::config(format!("counterexample({m}) requested on a manifold of dimension {n}")));
            }
            return Ok(Potential::Counterexample { n });
        }
        if let Some(a) = arg("truncated-counterexample") {
            sphere_only("truncated-counterexample")?;
            let cut = a.parse::<f64>().map_err(|_| Error::config(format!("bad cut in '{s}'")))?;
            if !(cut > 0.0 && cut < PI / 2.0) {
                return Err(Error::config(format!("truncation radius must lie in (0, π/2), got {cut}")));
            }
            return Ok(Potential::TruncatedCounterexample { n, cut });
        }
        if manifold.is_sphere() {
            let expr = Expr::parse(s, &["phi"])?;
            Ok(Potential::Zonal { expr, pole_singular })
        } else {
            let names: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Ok(Potential::Torus {
                expr: Expr::parse(s, &refs)?,
            })
        }
    }

    /// Re-parsable description.
    pub fn spec(&self) -> String {
        match self {
            Potential::Constant(c) => format!("constant({c})"),
            Potential::Counterexample { n } => format!("counterexample({n})"),
            Potential::TruncatedCounterexample { cut, .. } => format!("truncated-counterexample({cut})"),
            Potential::Zonal { expr, .. } | Potential::Torus { expr } => expr.source().to_string(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Potential::Constant(c) => Some(*c),
            Potential::Zonal { expr, .. } | Potential::Torus { expr } if expr.is_constant() => Some(expr.eval(&[0.0; 8])),
            _ => None,
        }
    }

    /// Depends on the polar angle only.
    pub fn is_zonal(&self) -> bool {
        !matches!(self, Potential::Torus { expr } if !expr.is_constant())
    }

    /// Always true: the crate only handles real potentials.
    pub fn is_real(&self) -> bool {
        true
    }

    /// Whether the potential blows up at a pole and needs graded quadrature.
    pub fn is_pole_singular(&self) -> bool {
        match self {
            Potential::Counterexample { .. } => true,
            Potential::Zonal { pole_singular, .. } => *pole_singular,
            _ => false,
        }
    }

    /// Polar angles where the potential jumps; used as quadrature panel edges.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::TruncatedCounterexample { cut, .. } => vec![*cut, PI - *cut],
            _ => Vec::new(),
        }
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        match self {
            Potential::Counterexample { n } => {
                let model = if *n == 2 {
                    "2/(d^2 ln^2 d)".to_string()
                } else {
                    format!("-{}/(d^2 |ln d|)", n - 2)
                };
                vec![
                    Singularity { phi: 0.0, model: model.clone() },
                    Singularity { phi: PI, model },
                ]
            }
            Potential::Zonal { pole_singular: true, .. } => vec![
                Singularity { phi: 0.0, model: "declared".into() },
                Singularity { phi: PI, model: "declared".into() },
            ],
            _ => Vec::new(),
        }
    }

    /// Value at polar angle `phi`.
    pub fn eval_zonal(&self, phi: f64) -> Result<f64> {
        match self {
            Potential::Counterexample { n } => counterexample_potential(*n, phi),
            Potential::Torus { expr } if !expr.is_constant() => Err(Error::domain("torus potential evaluated at a polar angle")),
            _ => {
                let d = phi.min(PI - phi);
                if !(d >= 0.0) {
                    return Err(Error::domain(format!("polar angle {phi} outside [0, π]")));
                }
                Ok(self.zonal_value(phi < PI / 2.0, d.ln()))
            }
        }
    }

    /// `(ln |V|, sign V)` at polar distance `e^{ln_d}` from the north
    /// (`north = true`) or south pole. Exact in log space for the
    /// counterexamples, so pole-graded grids never overflow.
    pub fn zonal_ln_abs(&self, north: bool, ln_d: f64) -> (f64, f64) {
        let split = |v: f64| (v.abs().ln(), if v == 0.0 { 0.0 } else { v.signum() });
        match self {
            Potential::Constant(c) => split(*c),
            Potential::Counterexample { n } => potential_ln_abs(*n, ln_d),
            Potential::TruncatedCounterexample { n, cut } => {
                if ln_d < cut.ln() {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    potential_ln_abs(*n, ln_d)
                }
            }
            Potential::Zonal { expr, .. } | Potential::Torus { expr } => {
                let d = ln_d.exp();
                let phi = if north { d } else { PI - d };
                split(expr.eval(&[phi; 8]))
            }
        }
    }

    pub fn zonal_value(&self, north: bool, ln_d: f64) -> f64 {
        let (l, s) = self.zonal_ln_abs(north, ln_d);
        if s == 0.0 {
            0.0
        } else {
            s * l.exp()
        }
    }

    /// Value at a point of any model manifold.
    pub fn eval_point(&self, p: &Point) -> Result<f64> {
        match (self, p) {
            (Potential::Torus { expr }, Point::Torus(x)) => Ok(expr.eval(x)),
            (_, Point::Torus(_)) => self
                .constant_value()
                .ok_or_else(|| Error::domain("zonal potential evaluated on the torus")),
            (_, Point::Zonal(phi)) | (_, Point::Sphere { theta: phi, .. }) => self.eval_zonal(*phi),
        }
    }

    /// Checks that the potential can live on `manifold`.
    pub fn check_manifold(&self, manifold: ModelManifold) -> Result<()> {
        match (self, manifold) {
            (Potential::Counterexample { n } | Potential::TruncatedCounterexample { n, .. }, m) => {
                if !m.is_sphere() || m.dimension() != *n {
                    return Err(Error::config(format!(
                        "the S^{n} counterexample cannot be placed on {}",
                        m.label()
                    )));
                }
                Ok(())
            }
            (Potential::Torus { expr }, m) if !m.is_sphere() => {
                if expr.variables().len() != m.dimension() {
                    return Err(Error::config("torus potential has the wrong number of variables"));
                }
                Ok(())
            }
            (Potential::Torus { expr }, _) if !expr.is_constant() => {
                Err(Error::config("torus potential used on a sphere"))
            }
            (Potential::Zonal { expr, .. }, m) if !m.is_sphere() && !expr.is_constant() => {
                Err(Error::config("zonal potential used on the torus"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_builtins() {
        let s3 = ModelManifold::sphere_zonal(3).unwrap();
        assert_eq!(Potential::parse("0", s3, false).unwrap(), Potential::Constant(0.0));
        assert_eq!(Potential::parse("constant(-5)", s3, false).unwrap(), Potential::Constant(-5.0));
        assert_eq!(Potential::parse("counterexample", s3, false).unwrap(), Potential::Counterexample { n: 3 });
        assert!(Potential::parse("counterexample(2)", s3, false).is_err());
        assert_eq!(
            Potential::parse("truncated-counterexample(0.3)", s3, false).unwrap(),
            Potential::TruncatedCounterexample { n: 3, cut: 0.3 }
        );
        let v = Potential::parse("10*cos(phi)", s3, false).unwrap();
        assert!((v.eval_zonal(0.5).unwrap() - 10.0 * 0.5f64.cos()).abs() < 1e-14);
        let t = Potential::parse("cos(x1)", ModelManifold::torus(2).unwrap(), false).unwrap();
        assert_eq!(t.eval_point(&Point::Torus(vec![0.0, 1.0])).unwrap(), 1.0);
        assert!(Potential::parse("counterexample", ModelManifold::torus(3).unwrap(), false).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let s2 = ModelManifold::sphere_zonal(2).unwrap();
        for src in ["constant(2.5)", "counterexample(2)", "truncated-counterexample(0.3)", "cos(phi)^2"] {
            let v = Potential::parse(src, s2, false).unwrap();
            assert_eq!(Potential::parse(&v.spec(), s2, false).unwrap(), v);
        }
    }

    #[test]
    fn truncated_vanishes_near_both_poles() {
        let v = Potential::TruncatedCounterexample { n: 2, cut: 0.3 };
        assert_eq!(v.eval_zonal(0.1).unwrap(), 0.0);
        assert_eq!(v.eval_zonal(PI - 0.1).unwrap(), 0.0);
        let mid = v.eval_zonal(1.0).unwrap();
        assert!((mid - counterexample_potential(2, 1.0).unwrap()).abs() < 1e-14 * mid);
        assert_eq!(v.breakpoints(), vec![0.3, PI - 0.3]);
    }

    #[test]
    fn log_evaluation_of_expressions() {
        let v = Potential::parse("1 + cos(phi)", ModelManifold::sphere_zonal(2).unwrap(), false).unwrap();
        assert!((v.zonal_value(false, 0.2f64.ln()) - (1.0 + (PI - 0.2).cos())).abs() < 1e-14);
    }
}
