//! Explicit zero-energy eigenfunctions of `−Δ + V` on S^n with potentials
//! that are in `L^{n/2}` but not in the Kato class.
//!
//! With `s = sin φ`, `c = cos φ` and `L = ln(s/2) < 0`:
//!
//! * `n ≥ 3`: `f = −L`, `V = ((n−2)c² − s²) / (s² L)`;
//! * `n = 2`: `f = L²`, `V = 2(c² − s² L) / (s² L²)`.
//!
//! Both are functions of `s` only, hence symmetric under `φ ↦ π − φ`. The
//! log-space forms take `ln s` directly so that they stay finite at polar
//! distances far below the smallest positive double.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::jet::{zonal_laplacian, Jet};

fn check(n: usize, phi: f64, what: &'static str) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("counterexample needs n >= 2, got {n}")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::SingularPoint { what, phi });
    }
    Ok(())
}

/// `(ln s, c²)` for polar distance `d = e^{ln_d}` to the nearer pole.
fn trig_from_ln_distance(ln_d: f64) -> (f64, f64) {
    let d = ln_d.exp();
    if d > 1e-4 {
        let (s, c) = d.sin_cos();
        (s.ln(), c * c)
    } else {
        (ln_d - d * d / 6.0, 1.0 - d * d)
    }
}

/// The potential at polar angle `φ ∈ (0, π)`.
pub fn counterexample_potential(n: usize, phi: f64) -> Result<f64> {
    check(n, phi, "counterexample potential")?;
    let (s, c) = phi.sin_cos();
    let l = (0.5 * s).ln();
    let nf = n as f64;
    Ok(if n == 2 {
        2.0 * (c * c - s * s * l) / (s * s * l * l)
    } else {
        ((nf - 2.0) * c * c - s * s) / (s * s * l)
    })
}

/// The eigenfunction at polar angle `φ ∈ (0, π)`.
pub fn counterexample_eigenfunction(n: usize, phi: f64) -> Result<f64> {
    check(n, phi, "counterexample eigenfunction")?;
    Ok(eigenfunction_jet(n, Jet::constant(phi)).value)
}

/// The eigenfunction as a second-order jet in `φ`.
pub fn eigenfunction_jet(n: usize, phi: Jet) -> Jet {
    let l = (phi.sin() * 0.5).ln();
    if n == 2 {
        l * l
    } else {
        -l
    }
}

/// `(ln |V|, sign V)` at polar distance `e^{ln_d}` from either pole.
pub fn potential_ln_abs(n: usize, ln_d: f64) -> (f64, f64) {
    let (ln_s, c2) = trig_from_ln_distance(ln_d);
    let l = ln_s - LN_2;
    let s2 = (2.0 * ln_s).exp();
    if n == 2 {
        // c² − s² L > 0 because L < 0
        let num = c2 - s2 * l;
        (LN_2 + num.ln() - 2.0 * ln_s - 2.0 * (-l).ln(), 1.0)
    } else {
        let num = (n as f64 - 2.0) * c2 - s2;
        // V = num / (s² L) with L < 0
        (num.abs().ln() - 2.0 * ln_s - (-l).ln(), -num.signum())
    }
}

/// The eigenfunction at polar distance `e^{ln_d}` from either pole.
pub fn eigenfunction_from_ln_distance(n: usize, ln_d: f64) -> f64 {
    let (ln_s, _) = trig_from_ln_distance(ln_d);
    let l = ln_s - LN_2;
    if n == 2 {
        l * l
    } else {
        -l
    }
}

/// `((−Δ + V) f, Δ f)` at `φ`, with `Δ f` from the exact zonal formula.
pub fn residual(n: usize, phi: f64) -> Result<(f64, f64)> {
    let v = counterexample_potential(n, phi)?;
    let f = eigenfunction_jet(n, Jet::variable(phi));
    let lap = zonal_laplacian(n, phi, f);
    Ok((-lap + v * f.value, lap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_at_equator() {
        let ln2 = 2f64.ln();
        assert!((counterexample_potential(3, PI / 2.0).unwrap() - 1.0 / ln2).abs() < 1e-14);
        assert!((counterexample_potential(2, PI / 2.0).unwrap() - 2.0 / ln2).abs() < 1e-14);
        assert!((counterexample_eigenfunction(3, PI / 2.0).unwrap() - ln2).abs() < 1e-15);
        assert!((counterexample_eigenfunction(2, PI / 2.0).unwrap() - ln2 * ln2).abs() < 1e-15);
    }

    #[test]
    fn pole_asymptotics() {
        let phi = 1e-3;
        let v = counterexample_potential(5, phi).unwrap();
        let model = 3.0 / (phi * phi * phi.ln().abs());
        assert!(v < 0.0);
        assert!((v.abs() / model - 1.0).abs() < 0.1);
    }

    #[test]
    fn singular_points_rejected() {
        assert!(matches!(counterexample_potential(3, 0.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(counterexample_eigenfunction(2, PI), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn log_forms_agree_with_direct_forms() {
        for n in 2..=5 {
            for phi in [1e-3f64, 0.2, 1.0, 1.5] {
                let (lv, sg) = potential_ln_abs(n, phi.ln());
                let direct = counterexample_potential(n, phi).unwrap();
                assert!((sg * lv.exp() - direct).abs() < 1e-12 * direct.abs(), "n={n} phi={phi}");
                let f = eigenfunction_from_ln_distance(n, phi.ln());
                assert!((f - counterexample_eigenfunction(n, phi).unwrap()).abs() < 1e-13 * f);
            }
        }
        // far below the smallest double the log form is still finite
        let (lv, _) = potential_ln_abs(3, -5000.0);
        assert!(lv.is_finite() && lv > 9000.0);
    }

    proptest! {
        #[test]
        fn residual_identity(n in 2usize..=5, phi in 1e-6f64..(PI - 1e-6)) {
            let (r, lap) = residual(n, phi).unwrap();
            prop_assert!(r.abs() <= 1e-8 * (1.0 + lap.abs()));
        }

        #[test]
        fn eigenfunction_positive(n in 2usize..=5, phi in 1e-9f64..(PI - 1e-9)) {
            prop_assert!(counterexample_eigenfunction(n, phi).unwrap() > 0.0);
        }
    }
}
