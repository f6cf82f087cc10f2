use std::io::Write;

use num_complex::Complex64;

use super::grid::QuadratureGrid;
use crate::error::{Error, Result};

/// Scalars whose absolute value enters an L^p norm.
pub trait Modulus: Copy {
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Modulus for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Modulus for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

fn check(grid: &QuadratureGrid, len: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    if len != grid.len() {
        return Err(Error::domain(format!(
            "grid function has {len} values, grid has {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

/// `(Σ w_i |f_i|^p)^{1/p}`, or `max |f_i|` when `p` is infinite.
pub fn lp_norm<T: Modulus>(grid: &QuadratureGrid, f: &[T], p: f64) -> Result<f64> {
    check(grid, f.len())?;
    if !(p >= 1.0) {
        return Err(Error::domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.iter().map(|v| v.modulus()).fold(0.0, f64::max));
    }
    // scale by the max to keep |f|^p in range for large p
    let top = f.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| w * (v.modulus() / top).powf(p))
        .sum();
    Ok(top * s.powf(1.0 / p))
}

/// L^p norm with respect to the probability measure `dV / vol`; it is
/// nondecreasing in `p`.
pub fn normalized_lp_norm<T: Modulus>(grid: &QuadratureGrid, f: &[T], p: f64) -> Result<f64> {
    let raw = lp_norm(grid, f, p)?;
    if p.is_infinite() {
        return Ok(raw);
    }
    Ok(raw / grid.volume().powf(1.0 / p))
}

/// `Σ w_i f_i conj(g_i)`.
pub fn inner_product<T: Modulus, U: Modulus>(grid: &QuadratureGrid, f: &[T], g: &[U]) -> Result<Complex64> {
    check(grid, f.len())?;
    check(grid, g.len())?;
    Ok(f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| a.to_complex() * b.to_complex().conj() * *w)
        .sum())
}

/// Writes a grid function as CSV: coordinate columns, `weight`, then
/// `value` (and `value_im` for complex data).
pub fn write_grid_function_csv<T: Modulus, W: Write>(grid: &QuadratureGrid, f: &[T], complex: bool, out: W) -> Result<()> {
    check(grid, f.len())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = grid.coordinate_names();
    header.push("weight".into());
    header.push("value".into());
    if complex {
        header.push("value_im".into());
    }
    w.write_record(&header)?;
    for (i, v) in f.iter().enumerate() {
        let mut rec: Vec<String> = grid.coordinates(i).iter().map(|c| format!("{c:.17e}")).collect();
        rec.push(format!("{:.17e}", grid.weights()[i]));
        let z = v.to_complex();
        rec.push(format!("{:.17e}", z.re));
        if complex {
            rec.push(format!("{:.17e}", z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_norms_on_s2() {
        let g = QuadratureGrid::zonal_gauss(2, 12).unwrap();
        let one = vec![1.0; g.len()];
        assert!((lp_norm(&g, &one, 2.0).unwrap() - (4.0 * PI).sqrt()).abs() < 1e-13);
        assert_eq!(lp_norm(&g, &one, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn mode_has_unit_norm() {
        let b = build_basis(ModelManifold::sphere_zonal(3).unwrap(), 12).unwrap();
        let mut c = vec![0.0; b.len()];
        c[7] = 1.0;
        let f = b.synthesize(&c).unwrap();
        assert!((lp_norm(b.grid(), &f, 2.0).unwrap() - 1.0).abs() < 1e-13);
        let ip = inner_product(b.grid(), &f, &f).unwrap();
        assert!((ip.re - 1.0).abs() < 1e-13 && ip.im.abs() < 1e-15);
    }

    #[test]
    fn cos_times_y0_against_y1() {
        // oracle: (√3/4π)∫cos²φ dΩ = (√3/4π)(4π/3) = 1/√3
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 2).unwrap();
        let z = b.grid().zonal().unwrap();
        let f: Vec<f64> = (0..b.grid().len()).map(|i| z.cos_phi[i] * b.value(i, 0)).collect();
        let g: Vec<f64> = (0..b.grid().len()).map(|i| b.value(i, 1)).collect();
        let v = inner_product(b.grid(), &f, &g).unwrap();
        assert!((v.re - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let g = QuadratureGrid::zonal_gauss(2, 4).unwrap();
        assert!(lp_norm(&g, &[1.0; 3], 2.0).is_err());
        assert!(lp_norm(&g, &[1.0; 4], 0.5).is_err());
        assert!(inner_product(&g, &[1.0; 4], &[1.0; 5]).is_err());
    }

    #[test]
    fn csv_columns() {
        let g = QuadratureGrid::sphere_product(2, 3).unwrap();
        let mut buf = Vec::new();
        write_grid_function_csv(&g, &[Complex64::new(1.0, 2.0); 6], true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,azimuth,weight,value,value_im\n"));
        assert_eq!(text.lines().count(), 7);
    }

    proptest! {
        #[test]
        fn normalized_norm_monotone_in_p(vals in prop::collection::vec(-5.0f64..5.0, 16), p in 1.0f64..8.0, dp in 0.0f64..8.0) {
            let g = QuadratureGrid::zonal_gauss(3, 16).unwrap();
            let a = normalized_lp_norm(&g, &vals, p).unwrap();
            let b = normalized_lp_norm(&g, &vals, p + dp).unwrap();
            let c = normalized_lp_norm(&g, &vals, f64::INFINITY).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
            prop_assert!(b <= c * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn inner_product_hermitian(re in prop::collection::vec(-3.0f64..3.0, 8), im in prop::collection::vec(-3.0f64..3.0, 8)) {
            let g = QuadratureGrid::zonal_gauss(2, 8).unwrap();
            let f: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
            let h: Vec<Complex64> = im.iter().zip(&re).map(|(a, b)| Complex64::new(*a - 1.0, -*b)).collect();
            let fh = inner_product(&g, &f, &h).unwrap();
            let hf = inner_product(&g, &h, &f).unwrap();
            prop_assert!((fh - hf.conj()).norm() < 1e-12);
            let ff = inner_product(&g, &f, &f).unwrap();
            prop_assert!(ff.im.abs() < 1e-12);
            if re.iter().chain(&im).any(|v| *v != 0.0) {
                prop_assert!(ff.re > 0.0);
            }
        }
    }
}
